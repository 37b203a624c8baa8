use super::{GradFn, Real, Tensor};
use crate::error::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BnMode {
    /// Normalize with batch statistics and update the running estimates.
    Train,
    /// Normalize with the running estimates.
    Eval,
}

/// Per-channel running mean and variance.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats<T: Real> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Real> RunningStats<T> {
    pub fn new(channels: usize) -> Self {
        RunningStats {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        }
    }
}

struct BatchNorm<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    channels: usize,
    vol: usize,
    batch_stats: bool,
}

impl<T: Real> BatchNorm<T> {
    fn channel_of(&self, i: usize) -> usize {
        (i / self.vol) % self.channels
    }
}

impl<T: Real> GradFn<T> for BatchNorm<T> {
    fn name(&self) -> &'static str {
        "batch_norm"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let (x, gamma, beta) = (&p[0], &p[1], &p[2]);
        let c = self.channels;
        let mut sum_g = vec![T::zero(); c];
        let mut sum_gx = vec![T::zero(); c];
        for (i, (&gv, &xh)) in g.iter().zip(&self.xhat).enumerate() {
            let ch = self.channel_of(i);
            sum_g[ch] = sum_g[ch] + gv;
            sum_gx[ch] = sum_gx[ch] + gv * xh;
        }
        let gx = x.requires_grad().then(|| {
            let m = T::of((g.len() / c) as f64);
            let gm = gamma.data();
            g.iter()
                .zip(&self.xhat)
                .enumerate()
                .map(|(i, (&gv, &xh))| {
                    let ch = self.channel_of(i);
                    let k = gm[ch] * self.inv_std[ch];
                    if self.batch_stats {
                        k * (gv - sum_g[ch] / m - xh * sum_gx[ch] / m)
                    } else {
                        k * gv
                    }
                })
                .collect()
        });
        vec![
            gx,
            gamma.requires_grad().then_some(sum_gx),
            beta.requires_grad().then_some(sum_g),
        ]
    }
}

/// Per-channel normalization over `(N, D, H, W)` followed by `γ·x̂ + β`.
///
/// Train mode uses biased batch variance for normalization and folds the
/// unbiased estimate into `running` with momentum [`BN_MOMENTUM`]
/// (`running ← 0.9·running + 0.1·batch`).
pub fn batch_norm<T: Real>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running: &mut RunningStats<T>,
    mode: BnMode,
) -> Result<Tensor<T>> {
    let s = x.shape();
    let (c, vol) = (s.c, s.volume());
    for (t, axis) in [(gamma, "gamma"), (beta, "beta")] {
        if t.len() != c {
            return Err(Error::Dimension {
                op: "batch_norm",
                axis,
                expected: c,
                got: t.len(),
            });
        }
    }
    if running.mean.len() != c || running.var.len() != c {
        return Err(Error::Dimension {
            op: "batch_norm",
            axis: "running",
            expected: c,
            got: running.mean.len(),
        });
    }
    let m = s.n * vol;
    let eps = T::of(BN_EPSILON);
    let data = x.data();
    let channel_iter = |ch: usize| (0..s.n).flat_map(move |n| ((n * c + ch) * vol)..((n * c + ch) * vol + vol));
    let (mean, var) = match mode {
        BnMode::Train => {
            if m <= 1 {
                return Err(Error::DegenerateBatch(m));
            }
            let mf = T::of(m as f64);
            let mut mean = vec![T::zero(); c];
            let mut var = vec![T::zero(); c];
            for ch in 0..c {
                mean[ch] = channel_iter(ch).fold(T::zero(), |a, i| a + data[i]) / mf;
                var[ch] = channel_iter(ch).fold(T::zero(), |a, i| {
                    let d = data[i] - mean[ch];
                    a + d * d
                }) / mf;
            }
            let mom = T::of(BN_MOMENTUM);
            let unbias = mf / T::of((m - 1) as f64);
            for ch in 0..c {
                running.mean[ch] = mom * running.mean[ch] + (T::one() - mom) * mean[ch];
                running.var[ch] = mom * running.var[ch] + (T::one() - mom) * var[ch] * unbias;
            }
            (mean, var)
        }
        BnMode::Eval => (running.mean.clone(), running.var.clone()),
    };
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let (gm, bt) = (gamma.data(), beta.data());
    let mut xhat = vec![T::zero(); data.len()];
    let mut out = vec![T::zero(); data.len()];
    for (i, &v) in data.iter().enumerate() {
        let ch = (i / vol) % c;
        xhat[i] = (v - mean[ch]) * inv_std[ch];
        out[i] = gm[ch] * xhat[i] + bt[ch];
    }
    Ok(Tensor::from_op(
        s,
        out,
        vec![x.clone(), gamma.clone(), beta.clone()],
        BatchNorm {
            xhat,
            inv_std,
            channels: c,
            vol,
            batch_stats: mode == BnMode::Train,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape5;

    fn params(c: usize, g: f64, b: f64) -> (Tensor<f64>, Tensor<f64>) {
        (
            Tensor::full(Shape5::vector(c), g).unwrap(),
            Tensor::full(Shape5::vector(c), b).unwrap(),
        )
    }

    #[test]
    fn normalized_input_is_unchanged_up_to_epsilon() {
        // per channel: values ±1 → mean 0, biased variance 1
        let x = Tensor::<f64>::from_fn(Shape5::of(2, 2, 1, 1, 2), |i| if (i[0] + i[4]) % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let (g, b) = params(2, 1.0, 0.0);
        let mut rs = RunningStats::new(2);
        let y = batch_norm(&x, &g, &b, &mut rs, BnMode::Train).unwrap();
        for (a, e) in y.data().iter().zip(x.data()) {
            assert!((a - e).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_gamma_gives_beta() {
        let x = Tensor::<f64>::from_fn(Shape5::of(3, 2, 1, 2, 2), |i| (i[0] * 7 + i[3] * 3 + i[4]) as f64).unwrap();
        let (g, b) = params(2, 0.0, 0.7);
        let mut rs = RunningStats::new(2);
        let y = batch_norm(&x, &g, &b, &mut rs, BnMode::Train).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn single_element_batch_is_degenerate() {
        let x = Tensor::<f64>::zeros(Shape5::of(1, 2, 1, 1, 1)).unwrap();
        let (g, b) = params(2, 1.0, 0.0);
        let mut rs = RunningStats::new(2);
        assert!(matches!(
            batch_norm(&x, &g, &b, &mut rs, BnMode::Train),
            Err(Error::DegenerateBatch(1))
        ));
        assert!(batch_norm(&x, &g, &b, &mut rs, BnMode::Eval).is_ok());
    }

    #[test]
    fn running_stats_follow_momentum() {
        let x = Tensor::<f64>::new(Shape5::of(2, 1, 1, 1, 1), vec![1.0, 3.0]).unwrap();
        let (g, b) = params(1, 1.0, 0.0);
        let mut rs = RunningStats::new(1);
        batch_norm(&x, &g, &b, &mut rs, BnMode::Train).unwrap();
        assert!((rs.mean[0] - 0.2).abs() < 1e-12);
        // unbiased var 2.0 → 0.9·1 + 0.1·2
        assert!((rs.var[0] - 1.1).abs() < 1e-12);
    }
}
