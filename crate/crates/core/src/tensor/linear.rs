use super::{gemm, GradFn, Real, Shape5, Tensor};
use crate::error::{Error, Result};

struct FullyConnected {
    batch: usize,
    inputs: usize,
    outputs: usize,
}

impl<T: Real> GradFn<T> for FullyConnected {
    fn name(&self) -> &'static str {
        "fully_connected"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let (x, w, b) = (&p[0], &p[1], &p[2]);
        let (n, k, m) = (self.batch, self.inputs, self.outputs);
        // y[n×m] = x[n×k] · wᵀ
        let gx = x.requires_grad().then(|| {
            let mut gx = vec![T::zero(); n * k];
            gemm(n, m, k, g, false, w.data(), false, T::zero(), &mut gx);
            gx
        });
        let gw = w.requires_grad().then(|| {
            let mut gw = vec![T::zero(); m * k];
            gemm(m, n, k, g, true, x.data(), false, T::zero(), &mut gw);
            gw
        });
        let gb = b.requires_grad().then(|| {
            let mut gb = vec![T::zero(); m];
            for row in g.chunks(m) {
                gb.iter_mut().zip(row).for_each(|(a, &v)| *a = *a + v);
            }
            gb
        });
        vec![gx, gw, gb]
    }
}

/// `y = W·x + b` for every batch row.
///
/// `input` is `N×K` (as `N×K×1×1×1`), `weight` is `M×K`, `bias` has `M`
/// entries; the result is `N×M×1×1×1`.
pub fn fully_connected<T: Real>(input: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let xs = input.shape();
    let (n, k) = (xs.n, xs.c * xs.volume());
    let ws = weight.shape();
    let (m, wk) = (ws.n, ws.c * ws.volume());
    if wk != k {
        return Err(Error::Dimension {
            op: "fully_connected",
            axis: "c",
            expected: wk,
            got: k,
        });
    }
    if bias.len() != m {
        return Err(Error::Dimension {
            op: "fully_connected",
            axis: "bias",
            expected: m,
            got: bias.len(),
        });
    }
    let mut out = vec![T::zero(); n * m];
    for row in out.chunks_mut(m) {
        row.copy_from_slice(bias.data());
    }
    gemm(n, k, m, input.data(), false, weight.data(), true, T::one(), &mut out);
    Ok(Tensor::from_op(
        Shape5::matrix(n, m),
        out,
        vec![input.clone(), weight.clone(), bias.clone()],
        FullyConnected {
            batch: n,
            inputs: k,
            outputs: m,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_arithmetic() {
        let x = Tensor::<f64>::new(Shape5::matrix(1, 2), vec![1.0, 2.0]).unwrap();
        let w = Tensor::new(Shape5::matrix(1, 2), vec![3.0, 4.0]).unwrap();
        let b = Tensor::new(Shape5::vector(1), vec![5.0]).unwrap();
        assert_eq!(fully_connected(&x, &w, &b).unwrap().data(), &[16.0]);
    }

    #[test]
    fn identity_weight_passes_input() {
        let x = Tensor::<f64>::new(Shape5::matrix(2, 3), vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0]).unwrap();
        let w = Tensor::from_fn(Shape5::matrix(3, 3), |i| if i[0] == i[1] { 1.0 } else { 0.0 }).unwrap();
        let b = Tensor::zeros(Shape5::vector(3)).unwrap();
        assert_eq!(fully_connected(&x, &w, &b).unwrap().data(), x.data());
    }

    #[test]
    fn mismatched_width_is_error() {
        let x = Tensor::<f64>::zeros(Shape5::matrix(1, 3)).unwrap();
        let w = Tensor::zeros(Shape5::matrix(1, 2)).unwrap();
        let b = Tensor::zeros(Shape5::vector(1)).unwrap();
        assert!(matches!(fully_connected(&x, &w, &b), Err(Error::Dimension { .. })));
    }
}
