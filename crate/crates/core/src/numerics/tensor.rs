//! Reverse-mode autodiff over dense f32 tensors.
//!
//! Define-by-run: each op records its parents and a backward closure on the
//! output node. `backward` on a scalar loss walks the graph in reverse
//! topological order and accumulates gradients into every `requires_grad`
//! leaf. Graphs are single-threaded (`Rc`-based); independent graphs may run
//! on different threads.

use std::cell::{Cell, Ref, RefCell, RefMut};
use std::collections::HashSet;
use std::rc::Rc;

use super::NumericsError;

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
    static NEXT_ID: Cell<u64> = const { Cell::new(0) };
}

/// Runs `f` with gradient recording disabled on this thread.
pub fn no_grad<T>(f: impl FnOnce() -> T) -> T {
    let prev = GRAD_ENABLED.with(|g| g.replace(false));
    let out = f();
    GRAD_ENABLED.with(|g| g.set(prev));
    out
}

pub(crate) fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

fn next_id() -> u64 {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

pub(crate) type BackwardFn = Box<dyn FnMut(&[f32])>;

pub struct TensorData {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
    pub grad: Option<Vec<f32>>,
    pub requires_grad: bool,
    pub(crate) parents: Vec<Tensor>,
    pub(crate) backward: Option<BackwardFn>,
    id: u64,
}

impl TensorData {
    fn check(shape: &[usize], len: usize) -> Result<(), NumericsError> {
        if shape.iter().any(|&d| d == 0) {
            return Err(NumericsError::InvalidTensor(format!(
                "zero-sized axis in shape {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != len {
            return Err(NumericsError::InvalidTensor(format!(
                "shape {shape:?} implies {numel} elements, data has {len}"
            )));
        }
        Ok(())
    }
}

/// Shared handle to a node in the computation graph.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<RefCell<TensorData>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>, requires_grad: bool) -> Result<Self, NumericsError> {
        TensorData::check(&shape, data.len())?;
        Ok(Self::from_data(TensorData {
            shape,
            data,
            grad: None,
            requires_grad,
            parents: Vec::new(),
            backward: None,
            id: next_id(),
        }))
    }

    pub fn leaf(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, NumericsError> {
        Self::new(shape, data, true)
    }

    pub fn constant(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, NumericsError> {
        Self::new(shape, data, false)
    }

    pub fn scalar(v: f32) -> Self {
        Self::new(vec![1], vec![v], false).expect("scalar construction")
    }

    pub(crate) fn from_data(data: TensorData) -> Self {
        Tensor {
            inner: Rc::new(RefCell::new(data)),
        }
    }

    /// Builds an op output node; records parents/backward only while grads
    /// are enabled and some parent requires them.
    pub(crate) fn from_op(
        shape: Vec<usize>,
        data: Vec<f32>,
        parents: Vec<Tensor>,
        backward: BackwardFn,
    ) -> Self {
        let record = grad_enabled() && parents.iter().any(|p| p.requires_grad());
        let node = TensorData {
            shape,
            data,
            grad: None,
            requires_grad: record,
            parents: if record { parents } else { Vec::new() },
            backward: if record { Some(backward) } else { None },
            id: next_id(),
        };
        Self::from_data(node)
    }

    pub(crate) fn borrow(&self) -> Ref<'_, TensorData> {
        self.inner.borrow()
    }

    pub(crate) fn borrow_mut(&self) -> RefMut<'_, TensorData> {
        self.inner.borrow_mut()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.borrow().shape.clone()
    }

    pub fn numel(&self) -> usize {
        self.borrow().data.len()
    }

    pub fn data(&self) -> Vec<f32> {
        self.borrow().data.clone()
    }

    /// Copies new values into a leaf without disturbing its graph identity.
    pub fn set_data(&self, values: &[f32]) {
        let mut b = self.borrow_mut();
        assert_eq!(b.data.len(), values.len(), "set_data length mismatch");
        b.data.copy_from_slice(values);
    }

    pub fn requires_grad(&self) -> bool {
        self.borrow().requires_grad
    }

    pub fn grad(&self) -> Option<Vec<f32>> {
        self.borrow().grad.clone()
    }

    /// Clears the gradient, keeping the buffer for reuse on long-lived leaves.
    pub fn zero_grad(&self) {
        if let Some(g) = self.borrow_mut().grad.as_mut() {
            g.fill(0.0);
        }
    }

    pub fn item(&self) -> f32 {
        let b = self.borrow();
        debug_assert_eq!(b.data.len(), 1);
        b.data[0]
    }

    fn id(&self) -> u64 {
        self.borrow().id
    }

    pub(crate) fn accumulate_grad(&self, delta: impl FnOnce(&mut [f32])) {
        let mut b = self.borrow_mut();
        let n = b.data.len();
        let grad = b.grad.get_or_insert_with(|| vec![0.0; n]);
        delta(grad);
    }

    /// Reverse-mode sweep from a scalar loss. Gradients accumulate (add) into
    /// every reachable `requires_grad` node, so repeated use of a tensor in
    /// the graph sums its contributions.
    pub fn backward(&self) -> Result<(), NumericsError> {
        {
            let b = self.borrow();
            if b.data.len() != 1 {
                return Err(NumericsError::NonScalarBackward {
                    shape: b.shape.clone(),
                });
            }
        }
        let order = self.topo_order();
        self.accumulate_grad(|g| g[0] += 1.0);
        for node in order.iter().rev() {
            let grad = match node.borrow().grad.clone() {
                Some(g) => g,
                None => continue,
            };
            // Take the closure out so it can mutably borrow parents freely.
            let f = node.borrow_mut().backward.take();
            if let Some(mut f) = f {
                f(&grad);
            }
        }
        Ok(())
    }

    /// Iterative post-order DFS; avoids recursion on deep graphs.
    fn topo_order(&self) -> Vec<Tensor> {
        let mut order = Vec::new();
        let mut visited = HashSet::new();
        let mut stack: Vec<(Tensor, bool)> = vec![(self.clone(), false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded {
                order.push(node);
                continue;
            }
            if !visited.insert(node.id()) {
                continue;
            }
            stack.push((node.clone(), true));
            for p in node.borrow().parents.iter() {
                if !visited.contains(&p.id()) {
                    stack.push((p.clone(), false));
                }
            }
        }
        order
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let b = self.borrow();
        f.debug_struct("Tensor")
            .field("shape", &b.shape)
            .field("requires_grad", &b.requires_grad)
            .finish()
    }
}
