//! One-shot wall-clock probe for calibrating experiment budgets.

use std::time::Instant;

use sclm_bench::{desk_model, sample_tokens};
use sclm_core::model::TrainableModel;

fn time_train_step(n_layers: usize, reps: usize) -> f64 {
    let model = desk_model(n_layers);
    let trainable = TrainableModel::new(&model);
    let seqs: Vec<(Vec<u32>, Vec<bool>)> = (0..8)
        .map(|_| {
            let t = sample_tokens(257);
            let m = vec![true; t.len()];
            (t, m)
        })
        .collect();
    let refs: Vec<(&[u32], &[bool])> = seqs.iter().map(|(t, m)| (&t[..], &m[..])).collect();
    // warm up
    let loss = trainable.loss(&refs, 258).unwrap();
    loss.backward().unwrap();
    trainable.zero_grads();
    let start = Instant::now();
    for _ in 0..reps {
        let loss = trainable.loss(&refs, 258).unwrap();
        loss.backward().unwrap();
        trainable.zero_grads();
    }
    start.elapsed().as_secs_f64() / reps as f64
}

fn time_forward(n_layers: usize, len: usize, reps: usize) -> f64 {
    let model = desk_model(n_layers);
    let tokens = sample_tokens(len);
    model.forward(&tokens).unwrap();
    let start = Instant::now();
    for _ in 0..reps {
        model.forward(&tokens).unwrap();
    }
    start.elapsed().as_secs_f64() / reps as f64
}

fn main() {
    let s2 = time_train_step(2, 10);
    let s4 = time_train_step(4, 10);
    println!("train step 2-layer 8x256: {:.1} ms  ({:.0} us/token)", s2 * 1e3, s2 * 1e6 / 2048.0);
    println!("train step 4-layer 8x256: {:.1} ms  ({:.0} us/token)", s4 * 1e3, s4 * 1e6 / 2048.0);
    for len in [128usize, 256, 320] {
        let f = time_forward(4, len, 10);
        println!("forward 4-layer {len} tok: {:.1} ms", f * 1e3);
    }
    println!(
        "pretrain estimate: small 250k = {:.0}s, grown 750k = {:.0}s, scratch 750k = {:.0}s",
        250_000.0 * s2 / 2048.0,
        750_000.0 * s4 / 2048.0,
        750_000.0 * s4 / 2048.0
    );
}
