use super::{GradFn, Real, Shape5, Tensor, AXIS_NAMES};
use crate::error::{Error, Result};

struct Reshape;

impl<T: Real> GradFn<T> for Reshape {
    fn name(&self) -> &'static str {
        "reshape"
    }

    fn backward(&self, g: &[T], _out: &[T], _p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.to_vec())]
    }
}

/// Reinterprets the element order under a new shape with the same element count.
pub fn reshape<T: Real>(x: &Tensor<T>, shape: Shape5) -> Result<Tensor<T>> {
    shape.validate()?;
    if shape.numel() != x.len() {
        return Err(Error::DataLength {
            shape,
            expected: shape.numel(),
            got: x.len(),
        });
    }
    Ok(Tensor::from_op(shape, x.to_vec(), vec![x.clone()], Reshape))
}

struct Gather {
    index: Vec<usize>,
}

impl<T: Real> GradFn<T> for Gather {
    fn name(&self) -> &'static str {
        "gather"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let mut gi = vec![T::zero(); p[0].len()];
        for (&i, &gv) in self.index.iter().zip(g) {
            gi[i] = gi[i] + gv;
        }
        vec![Some(gi)]
    }
}

/// `out[i] = x[index[i]]`; the backward pass scatter-adds.
pub fn gather<T: Real>(x: &Tensor<T>, shape: Shape5, index: Vec<usize>) -> Result<Tensor<T>> {
    shape.validate()?;
    if index.len() != shape.numel() {
        return Err(Error::DataLength {
            shape,
            expected: shape.numel(),
            got: index.len(),
        });
    }
    if let Some(&bad) = index.iter().find(|&&i| i >= x.len()) {
        return Err(Error::Contract(format!("gather index {bad} out of range for {}", x.shape())));
    }
    let data = index.iter().map(|&i| x.data()[i]).collect();
    Ok(Tensor::from_op(shape, data, vec![x.clone()], Gather { index }))
}

/// Reorders axes: output axis `i` is input axis `perm[i]`.
pub fn permute<T: Real>(x: &Tensor<T>, perm: [usize; 5]) -> Result<Tensor<T>> {
    let mut seen = [false; 5];
    for &p in &perm {
        if p >= 5 || seen[p] {
            return Err(Error::Contract(format!("invalid permutation {perm:?}")));
        }
        seen[p] = true;
    }
    let (dims, strides) = (x.shape().dims(), x.shape().strides());
    let out = Shape5::from_dims(perm.map(|p| dims[p]))?;
    let od = out.dims();
    let st = perm.map(|p| strides[p]);
    let mut index = Vec::with_capacity(out.numel());
    for a in 0..od[0] {
        for b in 0..od[1] {
            for c in 0..od[2] {
                for d in 0..od[3] {
                    let base = a * st[0] + b * st[1] + c * st[2] + d * st[3];
                    index.extend((0..od[4]).map(|e| base + e * st[4]));
                }
            }
        }
    }
    gather(x, out, index)
}

/// Splits a shape around `axis` into (outer, axis length, inner) extents.
fn split(shape: Shape5, axis: usize) -> (usize, usize, usize) {
    let dims = shape.dims();
    let outer = dims[..axis].iter().product();
    let inner = dims[axis + 1..].iter().product();
    (outer, dims[axis], inner)
}

/// Slice `[start, start + len)` along `axis`.
pub fn narrow<T: Real>(x: &Tensor<T>, axis: usize, start: usize, len: usize) -> Result<Tensor<T>> {
    let (outer, n, inner) = split(x.shape(), axis);
    if len == 0 || start + len > n {
        return Err(Error::Contract(format!(
            "narrow [{start}, {}) out of range for axis {} of extent {n}",
            start + len,
            AXIS_NAMES[axis]
        )));
    }
    let mut index = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = (o * n + start) * inner;
        index.extend(base..base + len * inner);
    }
    gather(x, x.shape().with_axis(axis, len), index)
}

struct Concat {
    axis: usize,
}

impl<T: Real> GradFn<T> for Concat {
    fn name(&self) -> &'static str {
        "concat"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let total: usize = p.iter().map(|t| t.shape().dims()[self.axis]).sum();
        let (outer, _, inner) = split(p[0].shape(), self.axis);
        let mut offset = 0;
        p.iter()
            .map(|t| {
                let n = t.shape().dims()[self.axis];
                let grad = t.requires_grad().then(|| {
                    let mut gi = Vec::with_capacity(t.len());
                    for o in 0..outer {
                        let start = (o * total + offset) * inner;
                        gi.extend_from_slice(&g[start..start + n * inner]);
                    }
                    gi
                });
                offset += n;
                grad
            })
            .collect()
    }
}

/// Joins tensors along `axis`; every other axis must agree.
pub fn concat<T: Real>(parts: &[&Tensor<T>], axis: usize) -> Result<Tensor<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
    let base = first.shape().dims();
    for t in &parts[1..] {
        let d = t.shape().dims();
        for ax in (0..5).filter(|&a| a != axis) {
            if d[ax] != base[ax] {
                return Err(Error::Dimension {
                    op: "concat",
                    axis: AXIS_NAMES[ax],
                    expected: base[ax],
                    got: d[ax],
                });
            }
        }
    }
    let total: usize = parts.iter().map(|t| t.shape().dims()[axis]).sum();
    let shape = first.shape().with_axis(axis, total);
    let (outer, _, inner) = split(first.shape(), axis);
    let mut data = Vec::with_capacity(shape.numel());
    for o in 0..outer {
        for t in parts {
            let n = t.shape().dims()[axis];
            data.extend_from_slice(&t.data()[o * n * inner..(o + 1) * n * inner]);
        }
    }
    let parents = parts.iter().map(|&t| t.clone()).collect();
    Ok(Tensor::from_op(shape, data, parents, Concat { axis }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(shape: Shape5) -> Tensor<f64> {
        let n = shape.numel();
        Tensor::leaf(shape, (0..n).map(|v| v as f64).collect(), true).unwrap()
    }

    #[test]
    fn concat_then_narrow_recovers_parts() {
        let a = ramp(Shape5::of(2, 1, 2, 2, 2));
        let b = ramp(Shape5::of(2, 3, 2, 2, 2));
        let c = concat(&[&a, &b], 1).unwrap();
        assert_eq!(c.shape(), Shape5::of(2, 4, 2, 2, 2));
        assert_eq!(narrow(&c, 1, 0, 1).unwrap().data(), a.data());
        assert_eq!(narrow(&c, 1, 1, 3).unwrap().data(), b.data());
    }

    #[test]
    fn concat_gradient_splits() {
        let a = ramp(Shape5::of(1, 2, 1, 1, 2));
        let b = ramp(Shape5::of(1, 1, 1, 1, 2));
        let c = concat(&[&a, &b], 1).unwrap();
        let w = Tensor::new(c.shape(), (1..=6).map(f64::from).collect()).unwrap();
        super::super::mul(&c, &w).unwrap().sum().backward().unwrap();
        assert_eq!(a.grad().unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(b.grad().unwrap(), vec![5.0, 6.0]);
    }

    #[test]
    fn permute_swaps_axes() {
        let x = ramp(Shape5::of(1, 2, 3, 1, 1));
        let y = permute(&x, [0, 2, 1, 3, 4]).unwrap();
        assert_eq!(y.shape(), Shape5::of(1, 3, 2, 1, 1));
        assert_eq!(y.data(), &[0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
    }

    #[test]
    fn narrow_out_of_range_is_error() {
        let x = ramp(Shape5::of(1, 2, 3, 1, 1));
        assert!(narrow(&x, 2, 2, 2).is_err());
    }
}
