//! Central finite-difference verification of reverse-mode gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{branch_trace, no_grad, Tensor};
use crate::error::{Error, Result};

/// Minimum number of coordinates checked per tensor when sampling.
pub const MIN_SAMPLED_COORDS: usize = 64;

#[derive(Clone, Copy, Debug)]
pub struct FdOptions {
    pub step: f64,
    pub tolerance: f64,
    /// `None` checks every coordinate; `Some(k)` samples `max(k, 64)` per
    /// tensor (all of them when the tensor is smaller).
    pub coords_per_tensor: Option<usize>,
    pub seed: u64,
    /// Skip coordinates whose `x ± h` probes land on a different piece of a
    /// piecewise function (a rectifier changes sign or a max pool changes
    /// its argmax) and draw replacements, so the sampled count still holds.
    pub skip_branch_changes: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            step: 1e-4,
            tolerance: 1e-4,
            coords_per_tensor: None,
            seed: 0,
            skip_branch_changes: false,
        }
    }
}

impl FdOptions {
    pub fn sampled(k: usize) -> Self {
        FdOptions {
            coords_per_tensor: Some(k),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub pass: bool,
    pub checked: usize,
    /// Coordinates passed over because a probe changed branch.
    pub skipped: usize,
    /// (input index, flat coordinate, finite difference, analytic) of the worst coordinate.
    pub worst: Option<(usize, usize, f64, f64)>,
}

/// `|fd − ad| / max(|fd|, |ad|, 1e-8)`.
pub fn relative_error(fd: f64, ad: f64) -> f64 {
    (fd - ad).abs() / fd.abs().max(ad.abs()).max(1e-8)
}

fn eval_scalar<F>(f: &F, inputs: &[Tensor<f64>], what: &str) -> Result<(f64, u64)>
where
    F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
{
    let (out, fingerprint) = branch_trace(|| f(inputs));
    let out = out?;
    if !out.shape().is_scalar() {
        return Err(Error::NonScalarRoot(out.shape()));
    }
    let v = out.item();
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("finite_diff_check: {what}")));
    }
    Ok((v, fingerprint))
}

/// Number of coordinates to check and the order to try them in.
fn coordinates(len: usize, opts: &FdOptions, rng: &mut ChaCha8Rng) -> (usize, Vec<usize>) {
    match opts.coords_per_tensor {
        Some(k) if len > k.max(MIN_SAMPLED_COORDS) => {
            let target = k.max(MIN_SAMPLED_COORDS);
            if opts.skip_branch_changes {
                return (target, rand::seq::index::sample(rng, len, len).into_vec());
            }
            let mut idx = rand::seq::index::sample(rng, len, target).into_vec();
            idx.sort_unstable();
            (target, idx)
        }
        _ => (len, (0..len).collect()),
    }
}

/// Compares the gradient of the scalar function `f` at `inputs` obtained by
/// [`Tensor::backward`] against central differences `(f(x+he) − f(x−he))/2h`.
///
/// `f` receives leaf copies of `inputs` that require grad. Evaluation is in
/// double precision.
pub fn finite_diff_check<F>(f: F, inputs: &[Tensor<f64>], opts: FdOptions) -> Result<FdReport>
where
    F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
{
    let leaves: Vec<Tensor<f64>> = inputs
        .iter()
        .map(|t| Tensor::leaf(t.shape(), t.to_vec(), true))
        .collect::<Result<_>>()?;
    let root = f(&leaves)?;
    if !root.shape().is_scalar() {
        return Err(Error::NonScalarRoot(root.shape()));
    }
    if !root.item().is_finite() {
        return Err(Error::NonFinite("finite_diff_check: f(x)".into()));
    }
    root.backward()?;
    let analytic: Vec<Vec<f64>> = leaves
        .iter()
        .map(|l| l.grad().unwrap_or_else(|| vec![0.0; l.len()]))
        .collect();
    drop(root);

    let _guard = no_grad();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = FdReport {
        max_rel_err: 0.0,
        pass: true,
        checked: 0,
        skipped: 0,
        worst: None,
    };
    let base: Vec<Tensor<f64>> = inputs.iter().map(Tensor::detach).collect();
    let (_, base_branches) = eval_scalar(&f, &base, "f(x)")?;
    for (ti, t) in inputs.iter().enumerate() {
        let (target, order) = coordinates(t.len(), &opts, &mut rng);
        let mut accepted = 0;
        for coord in order {
            if accepted == target {
                break;
            }
            let mut probe = base.clone();
            let mut eval = |delta: f64, what: &str| -> Result<(f64, u64)> {
                let mut data = t.to_vec();
                data[coord] += delta;
                probe[ti] = Tensor::new(t.shape(), data)?;
                eval_scalar(&f, &probe, what)
            };
            let (plus, bp) = eval(opts.step, "f(x+he)")?;
            let (minus, bm) = eval(-opts.step, "f(x-he)")?;
            if opts.skip_branch_changes && (bp != base_branches || bm != base_branches) {
                report.skipped += 1;
                continue;
            }
            accepted += 1;
            let fd = (plus - minus) / (2.0 * opts.step);
            let ad = analytic[ti][coord];
            let err = relative_error(fd, ad);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst = Some((ti, coord, fd, ad));
            }
        }
    }
    report.pass = report.max_rel_err <= opts.tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{GradFn, Shape5};

    fn input(n: usize, seed: u64) -> Tensor<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::new(Shape5::vector(n), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_sum_passes_tightly() {
        let r = finite_diff_check(|x| Ok(x[0].sum()), &[input(10, 1)], FdOptions::default()).unwrap();
        assert!(r.pass);
        assert!(r.max_rel_err <= 1e-10, "{}", r.max_rel_err);
        assert_eq!(r.checked, 10);
    }

    struct ScaledGrad;

    impl GradFn<f64> for ScaledGrad {
        fn name(&self) -> &'static str {
            "scaled_grad"
        }

        fn backward(&self, g: &[f64], _out: &[f64], _p: &[Tensor<f64>]) -> Vec<Option<Vec<f64>>> {
            vec![Some(g.iter().map(|v| v * 1.01).collect())]
        }
    }

    #[test]
    fn corrupted_backward_fails() {
        let f = |x: &[Tensor<f64>]| {
            let y = Tensor::from_op(x[0].shape(), x[0].to_vec(), vec![x[0].clone()], ScaledGrad);
            Ok(y.square().sum())
        };
        let r = finite_diff_check(f, &[input(8, 2)], FdOptions::default()).unwrap();
        assert!(!r.pass);
        assert!((r.max_rel_err - 0.01 / 1.01).abs() < 1e-6);
    }

    #[test]
    fn sampling_checks_at_least_64() {
        let r = finite_diff_check(|x| Ok(x[0].square().sum()), &[input(200, 3)], FdOptions::sampled(10)).unwrap();
        assert_eq!(r.checked, 64);
        assert!(r.pass);
    }

    #[test]
    fn non_finite_output_is_instrumentation_error() {
        let f = |x: &[Tensor<f64>]| Ok(x[0].scale(f64::INFINITY).sum());
        assert!(matches!(
            finite_diff_check(f, &[input(3, 4)], FdOptions::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn kink_inside_the_stencil_is_detected() {
        use crate::tensor::leaky_relu;
        let x = Tensor::new(Shape5::vector(3), vec![0.5, 3e-5, -0.7]).unwrap();
        let f = |t: &[Tensor<f64>]| Ok(leaky_relu(&t[0], 0.2).sum());
        let plain = finite_diff_check(f, &[x.clone()], FdOptions::default()).unwrap();
        assert!(!plain.pass);
        let guarded = FdOptions {
            skip_branch_changes: true,
            ..FdOptions::default()
        };
        let r = finite_diff_check(f, &[x], guarded).unwrap();
        assert!(r.pass);
        assert_eq!((r.checked, r.skipped), (2, 1));
    }
}
