use super::{record_branches, GradFn, Real, Shape5, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolMode {
    Avg,
    Max,
}

/// Routes the gradient of each output to a single recorded input index.
struct ArgMax {
    index: Vec<usize>,
}

impl<T: Real> GradFn<T> for ArgMax {
    fn name(&self) -> &'static str {
        "max_pool"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let mut gi = vec![T::zero(); p[0].len()];
        for (&i, &gv) in self.index.iter().zip(g) {
            gi[i] = gi[i] + gv;
        }
        vec![Some(gi)]
    }
}

/// First maximum in iteration order.
fn argmax<T: Real>(data: &[T], idx: impl Iterator<Item = usize>) -> usize {
    let mut best: Option<usize> = None;
    for i in idx {
        match best {
            Some(b) if data[i] <= data[b] => {}
            _ => best = Some(i),
        }
    }
    best.expect("non-empty reduction")
}

/// Reduces each `(n, c)` volume over all `D·H·W` positions.
///
/// Max mode sends the gradient to the first maximum in row-major order.
pub fn global_pool3d<T: Real>(x: &Tensor<T>, mode: PoolMode) -> Tensor<T> {
    match mode {
        PoolMode::Avg => x.mean_axes([false, false, true, true, true]),
        PoolMode::Max => {
            let s = x.shape();
            let vol = s.volume();
            let data = x.data();
            let index: Vec<usize> = (0..s.n * s.c)
                .map(|nc| argmax(data, nc * vol..(nc + 1) * vol))
                .collect();
            record_branches(|| index.iter().map(|&i| i as u64).collect());
            let out = index.iter().map(|&i| data[i]).collect();
            Tensor::from_op(Shape5::of(s.n, s.c, 1, 1, 1), out, vec![x.clone()], ArgMax { index })
        }
    }
}

/// Reduces across channels at every `(n, d, h, w)` position.
pub fn channel_pool<T: Real>(x: &Tensor<T>, mode: PoolMode) -> Tensor<T> {
    match mode {
        PoolMode::Avg => x.mean_axes([false, true, false, false, false]),
        PoolMode::Max => {
            let s = x.shape();
            let vol = s.volume();
            let data = x.data();
            let mut index = Vec::with_capacity(s.n * vol);
            for n in 0..s.n {
                let base = n * s.c * vol;
                for pos in 0..vol {
                    index.push(argmax(data, (0..s.c).map(|c| base + c * vol + pos)));
                }
            }
            record_branches(|| index.iter().map(|&i| i as u64).collect());
            let out = index.iter().map(|&i| data[i]).collect();
            Tensor::from_op(s.with_axis(1, 1), out, vec![x.clone()], ArgMax { index })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_element_pools() {
        let x = Tensor::<f64>::new(Shape5::of(1, 1, 1, 1, 2), vec![1.0, 5.0]).unwrap();
        assert_eq!(global_pool3d(&x, PoolMode::Avg).item(), 3.0);
        assert_eq!(global_pool3d(&x, PoolMode::Max).item(), 5.0);
        let x = Tensor::<f64>::new(Shape5::of(1, 2, 1, 1, 1), vec![2.0, 4.0]).unwrap();
        assert_eq!(channel_pool(&x, PoolMode::Avg).item(), 3.0);
        assert_eq!(channel_pool(&x, PoolMode::Max).item(), 4.0);
    }

    #[test]
    fn constant_input_pools_to_constant() {
        let x = Tensor::<f64>::full(Shape5::of(2, 3, 2, 2, 2), 3.0).unwrap();
        for mode in [PoolMode::Avg, PoolMode::Max] {
            assert!(global_pool3d(&x, mode).data().iter().all(|&v| v == 3.0));
        }
    }

    #[test]
    fn single_channel_pool_is_identity() {
        let x = Tensor::<f64>::from_fn(Shape5::of(2, 1, 2, 3, 3), |i| (i[0] + i[3] * 3 + i[4]) as f64).unwrap();
        for mode in [PoolMode::Avg, PoolMode::Max] {
            assert_eq!(channel_pool(&x, mode).data(), x.data());
        }
    }

    #[test]
    fn max_gradient_ties_go_to_first_index() {
        let x = Tensor::<f64>::leaf(Shape5::of(1, 1, 1, 1, 3), vec![2.0, 2.0, 1.0], true).unwrap();
        global_pool3d(&x, PoolMode::Max).sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0, 0.0, 0.0]);
        let x = Tensor::<f64>::leaf(Shape5::of(1, 3, 1, 1, 1), vec![1.0, 4.0, 4.0], true).unwrap();
        channel_pool(&x, PoolMode::Max).sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![0.0, 1.0, 0.0]);
    }
}
