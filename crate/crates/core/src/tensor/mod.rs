//! Dense 5-axis tensors with reverse-mode differentiation.
//!
//! A [`Tensor`] is an immutable, reference-counted buffer. Operations that
//! consume tensors requiring gradients record a graph node holding their
//! parents and a [`GradFn`]; [`Tensor::backward`] walks that graph in reverse
//! topological order and sums gradients into the grad slots of the leaves.

mod activation;
mod conv;
mod elementwise;
pub mod gradcheck;
mod layout;
mod linear;
mod norm;
mod pool;
mod real;
mod shape;

use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

pub use activation::{leaky_relu, prelu, sigmoid};
pub use conv::{conv2d, conv3d, conv_transpose3d, ConvSpec};
pub use elementwise::{add, mse, mul, sub};
pub use layout::{concat, gather, narrow, permute, reshape};
pub use linear::fully_connected;
pub use norm::{batch_norm, BnMode, RunningStats, BN_EPSILON, BN_MOMENTUM};
pub use pool::{channel_pool, global_pool3d, PoolMode};
pub use real::Real;
pub(crate) use real::gemm;
pub use shape::{Shape5, AXIS_NAMES};

use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static NO_GRAD_DEPTH: Cell<usize> = const { Cell::new(0) };
}

/// Guard returned by [`no_grad`]; graph recording resumes when it drops.
pub struct NoGradGuard(());

impl Drop for NoGradGuard {
    fn drop(&mut self) {
        NO_GRAD_DEPTH.with(|d| d.set(d.get() - 1));
    }
}

/// Disables graph recording on the current thread while the guard lives.
pub fn no_grad() -> NoGradGuard {
    NO_GRAD_DEPTH.with(|d| d.set(d.get() + 1));
    NoGradGuard(())
}

fn recording() -> bool {
    NO_GRAD_DEPTH.with(|d| d.get() == 0)
}

thread_local! {
    static BRANCH_TRACE: Cell<Option<u64>> = const { Cell::new(None) };
}

/// Runs `f` while piecewise ops (rectifiers, max pooling) fold the branch
/// each element took into a fingerprint, returned alongside `f`'s result.
/// Two evaluations with equal fingerprints lie on the same smooth piece.
pub fn branch_trace<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let outer = BRANCH_TRACE.with(|t| t.replace(Some(0xcbf2_9ce4_8422_2325)));
    let r = f();
    let fp = BRANCH_TRACE.with(|t| t.replace(outer)).expect("trace active");
    (r, fp)
}

/// Folds branch decisions into the active trace, if any.
pub(crate) fn record_branches(decisions: impl FnOnce() -> Vec<u64>) {
    BRANCH_TRACE.with(|t| {
        if let Some(mut h) = t.get() {
            for v in decisions() {
                h = (h ^ v).wrapping_mul(0x0000_0100_0000_01b3);
            }
            t.set(Some(h));
        }
    })
}

/// Backward rule of a recorded operation.
pub trait GradFn<T: Real>: Send + Sync {
    fn name(&self) -> &'static str;

    /// Gradients with respect to each parent given the gradient of the
    /// output. Entries may be `None` for parents that do not require grad.
    fn backward(&self, grad_out: &[T], out: &[T], parents: &[Tensor<T>]) -> Vec<Option<Vec<T>>>;
}

struct Node<T: Real> {
    parents: Vec<Tensor<T>>,
    op: Box<dyn GradFn<T>>,
}

struct Inner<T: Real> {
    id: u64,
    shape: Shape5,
    data: Vec<T>,
    requires_grad: bool,
    grad: Mutex<Option<Vec<T>>>,
    node: Option<Node<T>>,
}

/// Dense `N×C×D×H×W` array, row-major with `w` fastest.
pub struct Tensor<T: Real = f32> {
    inner: Arc<Inner<T>>,
}

impl<T: Real> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T: Real> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .field("op", &self.inner.node.as_ref().map(|n| n.op.name()))
            .finish()
    }
}

impl<T: Real> Tensor<T> {
    fn build(shape: Shape5, data: Vec<T>, requires_grad: bool, node: Option<Node<T>>) -> Self {
        debug_assert_eq!(shape.numel(), data.len());
        Tensor {
            inner: Arc::new(Inner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data,
                requires_grad,
                grad: Mutex::new(None),
                node,
            }),
        }
    }

    /// Constant tensor (no gradient).
    pub fn new(shape: Shape5, data: Vec<T>) -> Result<Self> {
        Self::leaf(shape, data, false)
    }

    /// Leaf tensor, optionally tracked for gradients.
    pub fn leaf(shape: Shape5, data: Vec<T>, requires_grad: bool) -> Result<Self> {
        shape.validate()?;
        if data.len() != shape.numel() {
            return Err(Error::DataLength {
                shape,
                expected: shape.numel(),
                got: data.len(),
            });
        }
        Ok(Self::build(shape, data, requires_grad, None))
    }

    pub fn full(shape: Shape5, value: T) -> Result<Self> {
        shape.validate()?;
        Ok(Self::build(shape, vec![value; shape.numel()], false, None))
    }

    pub fn zeros(shape: Shape5) -> Result<Self> {
        Self::full(shape, T::zero())
    }

    pub fn scalar(value: T) -> Self {
        Self::build(Shape5::scalar(), vec![value], false, None)
    }

    pub fn from_fn(shape: Shape5, mut f: impl FnMut([usize; 5]) -> T) -> Result<Self> {
        shape.validate()?;
        let mut data = Vec::with_capacity(shape.numel());
        for n in 0..shape.n {
            for c in 0..shape.c {
                for d in 0..shape.d {
                    for h in 0..shape.h {
                        for w in 0..shape.w {
                            data.push(f([n, c, d, h, w]));
                        }
                    }
                }
            }
        }
        Ok(Self::build(shape, data, false, None))
    }

    /// Result of an operation. A graph node is recorded only when some parent
    /// requires grad and recording is enabled.
    pub fn from_op(
        shape: Shape5,
        data: Vec<T>,
        parents: Vec<Tensor<T>>,
        op: impl GradFn<T> + 'static,
    ) -> Self {
        if recording() && parents.iter().any(Tensor::requires_grad) {
            let node = Node {
                parents,
                op: Box::new(op),
            };
            Self::build(shape, data, true, Some(node))
        } else {
            Self::build(shape, data, false, None)
        }
    }

    pub fn shape(&self) -> Shape5 {
        self.inner.shape
    }

    pub fn data(&self) -> &[T] {
        &self.inner.data
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.inner.data.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.data.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.inner.node.is_none()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> T {
        assert!(self.shape().is_scalar(), "item() on non-scalar {}", self.shape());
        self.inner.data[0]
    }

    pub fn at(&self, idx: [usize; 5]) -> T {
        let s = self.shape().strides();
        self.inner.data[idx.iter().zip(s).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// Accumulated gradient of a leaf, if any has been written.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.lock().expect("grad lock").clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.lock().expect("grad lock") = None;
    }

    /// Copy of this tensor cut off from the graph.
    pub fn detach(&self) -> Tensor<T> {
        Self::build(self.shape(), self.to_vec(), false, None)
    }

    /// Whether two handles refer to the same tensor.
    pub fn same(&self, other: &Tensor<T>) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    pub fn all_finite(&self) -> bool {
        self.inner.data.iter().all(|v| v.is_finite())
    }

    /// Reverse-mode accumulation from a scalar root.
    ///
    /// Gradients are summed into the grad slot of every reachable leaf that
    /// requires grad; calling this twice without [`Tensor::zero_grad`]
    /// doubles them.
    pub fn backward(&self) -> Result<()> {
        if !self.shape().is_scalar() {
            return Err(Error::NonScalarRoot(self.shape()));
        }
        if !self.requires_grad() {
            return Err(Error::NoGradPath);
        }
        let order = self.topo_order();
        let mut grads: HashMap<u64, Vec<T>> = HashMap::new();
        grads.insert(self.inner.id, vec![T::one()]);
        for t in order.iter().rev() {
            let Some(g) = grads.remove(&t.inner.id) else {
                continue;
            };
            match &t.inner.node {
                None => {
                    let mut slot = t.inner.grad.lock().expect("grad lock");
                    match slot.as_mut() {
                        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, &b)| *a = *a + b),
                        None => *slot = Some(g),
                    }
                }
                Some(node) => {
                    let pgrads = node.op.backward(&g, &t.inner.data, &node.parents);
                    debug_assert_eq!(pgrads.len(), node.parents.len(), "{}", node.op.name());
                    for (p, pg) in node.parents.iter().zip(pgrads) {
                        let Some(pg) = pg else { continue };
                        if !p.requires_grad() {
                            continue;
                        }
                        debug_assert_eq!(pg.len(), p.len(), "{} grad length", node.op.name());
                        match grads.get_mut(&p.inner.id) {
                            Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, &b)| *a = *a + b),
                            None => {
                                grads.insert(p.inner.id, pg);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Tensors reachable through grad-requiring edges, parents before children.
    fn topo_order(&self) -> Vec<Tensor<T>> {
        let mut order = Vec::new();
        let mut seen = HashSet::new();
        let mut stack: Vec<(Tensor<T>, bool)> = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if !seen.insert(t.inner.id) {
                continue;
            }
            stack.push((t.clone(), true));
            if let Some(node) = &t.inner.node {
                for p in &node.parents {
                    if p.requires_grad() && !seen.contains(&p.inner.id) {
                        stack.push((p.clone(), false));
                    }
                }
            }
        }
        order
    }

    // Convenience wrappers over the free functions.

    pub fn sum(&self) -> Tensor<T> {
        elementwise::sum(self)
    }

    pub fn mean(&self) -> Tensor<T> {
        elementwise::mean(self)
    }

    pub fn square(&self) -> Tensor<T> {
        elementwise::square(self)
    }

    pub fn scale(&self, s: T) -> Tensor<T> {
        elementwise::scale(self, s)
    }

    pub fn add_scalar(&self, s: T) -> Tensor<T> {
        elementwise::add_scalar(self, s)
    }

    /// Sum over the axes flagged in `axes`, keeping them with extent 1.
    pub fn sum_axes(&self, axes: [bool; 5]) -> Tensor<T> {
        elementwise::sum_axes(self, axes, false)
    }

    pub fn mean_axes(&self, axes: [bool; 5]) -> Tensor<T> {
        elementwise::sum_axes(self, axes, true)
    }

    pub fn reshape(&self, shape: Shape5) -> Result<Tensor<T>> {
        reshape(self, shape)
    }
}

impl<T: Real> Tensor<T> {
    /// Converts the precision of a constant copy of this tensor.
    pub fn cast<U: Real>(&self) -> Tensor<U> {
        let data = self.data().iter().map(|v| U::of(v.as_f64())).collect();
        Tensor::build(self.shape(), data, false, None)
    }
}

pub(crate) fn check_same_shape<T: Real>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    let (sa, sb) = (a.shape().dims(), b.shape().dims());
    for axis in 0..5 {
        if sa[axis] != sb[axis] {
            return Err(Error::Dimension {
                op,
                axis: AXIS_NAMES[axis],
                expected: sa[axis],
                got: sb[axis],
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(data: Vec<f64>) -> Tensor<f64> {
        let n = data.len();
        Tensor::leaf(Shape5::vector(n), data, true).unwrap()
    }

    #[test]
    fn sum_of_squares_has_gradient_two_x() {
        let x = leaf(vec![1.0, -2.0, 0.5, 3.0]);
        x.square().sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, -4.0, 1.0, 6.0]);
    }

    #[test]
    fn sigmoid_gradient_at_zero_is_quarter() {
        let x = leaf(vec![0.0; 5]);
        sigmoid(&x).sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![0.25; 5]);
    }

    #[test]
    fn backward_twice_doubles_gradients() {
        let x = leaf(vec![1.0, 2.0]);
        let y = x.square().sum();
        y.backward().unwrap();
        y.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![4.0, 8.0]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let x = leaf(vec![1.0, 2.0]);
        assert!(matches!(x.square().backward(), Err(Error::NonScalarRoot(_))));
    }

    #[test]
    fn shared_subexpression_accumulates() {
        let x = leaf(vec![3.0]);
        let y = mul(&x, &x).unwrap();
        add(&y, &x).unwrap().sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![7.0]);
    }

    #[test]
    fn no_grad_skips_recording() {
        let x = leaf(vec![1.0]);
        let y = {
            let _g = no_grad();
            x.square()
        };
        assert!(!y.requires_grad());
        assert!(x.square().requires_grad());
    }

    #[test]
    fn leaf_rejects_wrong_length() {
        let r = Tensor::<f32>::new(Shape5::vector(3), vec![0.0; 2]);
        assert!(matches!(r, Err(Error::DataLength { .. })));
    }
}
