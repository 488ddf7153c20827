use criterion::{criterion_group, criterion_main, Criterion};
use sclm_bench::{desk_model, sample_tokens};
use sclm_core::growth::{stack_grow, GrowthSpec};
use sclm_core::metrics::{bleu, rouge_l, sari};
use sclm_core::model::TrainableModel;

fn bench_forward(c: &mut Criterion) {
    let model = desk_model(4);
    let tokens = sample_tokens(256);
    c.bench_function("forward_4layer_256tok", |b| {
        b.iter(|| model.forward(&tokens).unwrap())
    });
}

fn bench_train_step(c: &mut Criterion) {
    let model = desk_model(2);
    let trainable = TrainableModel::new(&model);
    let seqs: Vec<(Vec<u32>, Vec<bool>)> = (0..8)
        .map(|i| {
            let t = sample_tokens(257 + i % 3);
            let m = vec![true; t.len()];
            (t, m)
        })
        .collect();
    let refs: Vec<(&[u32], &[bool])> = seqs.iter().map(|(t, m)| (&t[..], &m[..])).collect();
    c.bench_function("train_step_2layer_batch8", |b| {
        b.iter(|| {
            let loss = trainable.loss(&refs, 258).unwrap();
            loss.backward().unwrap();
            trainable.zero_grads();
        })
    });
}

fn bench_growth(c: &mut Criterion) {
    let model = desk_model(2);
    let spec = GrowthSpec::full(4);
    c.bench_function("stack_grow_2to8", |b| b.iter(|| stack_grow(&model, &spec).unwrap()));
}

fn bench_text_metrics(c: &mut Criterion) {
    let hyp = "the farmer uses the cart to start the harvest in the field";
    let rf = "the farmer uses the old cart to start the harvest";
    let src = "the farmer utilizes the cart (made of oak) to commence the harvest";
    c.bench_function("bleu", |b| b.iter(|| bleu(hyp, &[rf], 4).unwrap()));
    c.bench_function("rouge_l", |b| b.iter(|| rouge_l(hyp, rf)));
    c.bench_function("sari", |b| b.iter(|| sari(src, hyp, &[rf]).unwrap()));
}

criterion_group!(benches, bench_forward, bench_train_step, bench_growth, bench_text_metrics);
criterion_main!(benches);
