//! Finite-difference checks of every differentiable operation, from single
//! kernels up to whole networks, in double precision.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attention::{channel_attention, csa_apply, spatial_attention, CsaParams};
use crate::discriminator::{discriminate, Branches, DiscriminatorParams};
use crate::error::Result;
use crate::generator::{generator_forward, rab_forward, GeneratorConfig, GeneratorParams, SrMode};
use crate::param::{Init, Params, RngSeed};
use crate::tensor::gradcheck::{finite_diff_check, FdOptions, FdReport};
use crate::tensor::{
    batch_norm, channel_pool, conv2d, conv3d, conv_transpose3d, fully_connected, global_pool3d, leaky_relu, mul,
    prelu, sigmoid, BnMode, ConvSpec, PoolMode, RunningStats, Shape5, Tensor,
};
use crate::training::{lsgan_d_loss, lsgan_g_loss, sr_loss};

/// Coordinates sampled per tensor for whole-network checks.
pub const NETWORK_COORDS: usize = 64;

#[derive(Clone, Debug)]
pub struct OpCheck {
    pub op: &'static str,
    pub report: FdReport,
    pub seconds: f64,
}

impl OpCheck {
    pub fn line(&self) -> String {
        format!(
            "{:<20} {}  max_rel_err={:.3e}  coords={}  skipped={}  {:.2}s",
            self.op,
            if self.report.pass { "pass" } else { "FAIL" },
            self.report.max_rel_err,
            self.report.checked,
            self.report.skipped,
            self.seconds
        )
    }
}

struct Suite {
    rng: ChaCha8Rng,
    opts: FdOptions,
    checks: Vec<OpCheck>,
}

impl Suite {
    fn random(&mut self, shape: Shape5) -> Tensor<f64> {
        let data = (0..shape.numel()).map(|_| self.rng.random_range(-1.0..1.0)).collect();
        Tensor::new(shape, data).expect("valid shape")
    }

    /// Shuffled evenly spaced values in `(-1, 1)`: no ties within the step
    /// and nothing on a rectifier kink.
    fn separated(&mut self, shape: Shape5) -> Tensor<f64> {
        let n = shape.numel();
        let mut data: Vec<f64> = (0..n).map(|k| -1.0 + (k as f64 + 0.5) * 2.0 / n as f64).collect();
        data.shuffle(&mut self.rng);
        Tensor::new(shape, data).expect("valid shape")
    }

    /// `Σ y ⊙ r` for a fixed random `r`, so every output coordinate matters.
    fn projector(&mut self, shape: Shape5) -> Tensor<f64> {
        self.random(shape)
    }

    fn run<F>(&mut self, op: &'static str, opts: FdOptions, f: F, inputs: &[Tensor<f64>]) -> Result<()>
    where
        F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
    {
        let start = Instant::now();
        let report = finite_diff_check(f, inputs, opts)?;
        self.checks.push(OpCheck {
            op,
            report,
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    fn check<F>(&mut self, op: &'static str, f: F, inputs: &[Tensor<f64>]) -> Result<()>
    where
        F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
    {
        self.run(op, self.opts, f, inputs)
    }
}

fn project(y: &Tensor<f64>, r: &Tensor<f64>) -> Result<Tensor<f64>> {
    Ok(mul(y, r)?.sum())
}

fn loaded<P: Params<f64> + Clone>(p: &P, values: &[Tensor<f64>]) -> Result<P> {
    let mut q = p.clone();
    q.load_values(values)?;
    Ok(q)
}

/// Runs all checks at step `h = 1e-4` and tolerance `1e-4`.
pub fn gradient_suite(seed: u64) -> Result<Vec<OpCheck>> {
    let mut s = Suite {
        rng: ChaCha8Rng::seed_from_u64(seed),
        opts: FdOptions {
            seed,
            ..FdOptions::default()
        },
        checks: Vec::new(),
    };

    let x = s.separated(Shape5::of(2, 2, 3, 4, 4));
    let w = s.random(Shape5::of(3, 2, 3, 3, 3));
    let b = s.random(Shape5::vector(3));
    let spec = ConvSpec::new([1, 2, 2], [1, 1, 1]);
    let r = s.projector(conv3d(&x, &w, Some(&b), spec)?.shape());
    s.check("conv3d", |t| project(&conv3d(&t[0], &t[1], Some(&t[2]), spec)?, &r), &[x.clone(), w, b])?;

    let wt = s.random(Shape5::of(2, 3, 3, 4, 4));
    let bt = s.random(Shape5::vector(3));
    let spec = ConvSpec::new([2, 2, 2], [1, 1, 1]);
    let r = s.projector(conv_transpose3d(&x, &wt, Some(&bt), spec)?.shape());
    s.check(
        "conv_transpose3d",
        |t| project(&conv_transpose3d(&t[0], &t[1], Some(&t[2]), spec)?, &r),
        &[x.clone(), wt, bt],
    )?;

    let x2 = s.random(Shape5::of(2, 2, 1, 6, 6));
    let w2 = s.random(Shape5::of(3, 2, 1, 3, 3));
    let b2 = s.random(Shape5::vector(3));
    let r = s.projector(conv2d(&x2, &w2, Some(&b2), [2, 2], [1, 1])?.shape());
    s.check("conv2d", |t| project(&conv2d(&t[0], &t[1], Some(&t[2]), [2, 2], [1, 1])?, &r), &[x2.clone(), w2, b2])?;

    for (op, mode) in [("global_pool3d(avg)", PoolMode::Avg), ("global_pool3d(max)", PoolMode::Max)] {
        let r = s.projector(global_pool3d(&x, mode).shape());
        s.check(op, |t| project(&global_pool3d(&t[0], mode), &r), &[x.clone()])?;
    }
    for (op, mode) in [("channel_pool(avg)", PoolMode::Avg), ("channel_pool(max)", PoolMode::Max)] {
        let r = s.projector(channel_pool(&x, mode).shape());
        s.check(op, |t| project(&channel_pool(&t[0], mode), &r), &[x.clone()])?;
    }

    let r = s.projector(x.shape());
    s.check("sigmoid", |t| project(&sigmoid(&t[0]), &r), &[x.clone()])?;
    s.check("leaky_relu", |t| project(&leaky_relu(&t[0], 0.2), &r), &[x.clone()])?;
    let alpha = Tensor::new(Shape5::scalar(), vec![0.25])?;
    s.check("prelu", |t| project(&prelu(&t[0], &t[1])?, &r), &[x.clone(), alpha])?;

    let gamma = s.random(Shape5::vector(2));
    let beta = s.random(Shape5::vector(2));
    let stats = RunningStats {
        mean: vec![0.1, -0.2],
        var: vec![0.8, 1.3],
    };
    let r2 = s.projector(x2.shape());
    s.check(
        "batch_norm(eval)",
        |t| project(&batch_norm(&t[0], &t[1], &t[2], &mut stats.clone(), BnMode::Eval)?, &r2),
        &[x2.clone(), gamma.clone(), beta.clone()],
    )?;
    s.check(
        "batch_norm(train)",
        |t| project(&batch_norm(&t[0], &t[1], &t[2], &mut RunningStats::new(2), BnMode::Train)?, &r2),
        &[x2, gamma, beta],
    )?;

    let v = s.random(Shape5::matrix(3, 6));
    let fw = s.random(Shape5::matrix(4, 6));
    let fb = s.random(Shape5::vector(4));
    let r = s.projector(Shape5::matrix(3, 4));
    s.check("fully_connected", |t| project(&fully_connected(&t[0], &t[1], &t[2])?, &r), &[v, fw, fb])?;

    // Attention on a 4-channel feature map, parameters included.
    let mut init = Init::new(RngSeed(seed), 101);
    let csa = CsaParams::<f64>::new(&mut init, "csa", 4)?;
    let f = s.random(Shape5::of(1, 4, 3, 5, 5));
    let mut inputs = vec![f.clone()];
    inputs.extend(csa.values());
    let r = s.projector(channel_attention(&f, &csa)?.shape());
    s.check("channel_attention", |t| project(&channel_attention(&t[0], &loaded(&csa, &t[1..])?)?, &r), &inputs)?;
    let r = s.projector(spatial_attention(&f, &csa)?.shape());
    s.check("spatial_attention", |t| project(&spatial_attention(&t[0], &loaded(&csa, &t[1..])?)?, &r), &inputs)?;
    let r = s.projector(f.shape());
    s.check("csa_apply", |t| project(&csa_apply(&t[0], &loaded(&csa, &t[1..])?)?, &r), &inputs)?;

    let small = GeneratorConfig {
        feat_channels: 4,
        num_rabs: 1,
        mode: SrMode::Stsr,
        ..GeneratorConfig::default()
    };
    let gen = GeneratorParams::<f64>::init(&small, RngSeed(seed))?;
    let rab = gen.rabs[0].clone();
    let mut inputs = vec![f.clone()];
    inputs.extend(rab.values());
    s.check("rab_forward", |t| project(&rab_forward(&t[0], &loaded(&rab, &t[1..])?)?, &r), &inputs)?;

    // Whole networks hold thousands of rectifier and max-pool branch points,
    // so some ±h probes straddle one; those coordinates are replaced.
    let sampled = FdOptions {
        coords_per_tensor: Some(NETWORK_COORDS),
        skip_branch_changes: true,
        ..s.opts
    };
    let lr = s.random(Shape5::of(1, 1, 2, 4, 4)).scale(0.5).add_scalar(0.5);
    let mut inputs = vec![lr.clone()];
    inputs.extend(gen.values());
    let r = s.projector(generator_forward(&lr, &gen)?.shape());
    s.run(
        "generator_forward",
        sampled,
        |t| project(&generator_forward(&t[0], &loaded(&gen, &t[1..])?)?, &r),
        &inputs,
    )?;

    let disc = DiscriminatorParams::<f64>::init(1, RngSeed(seed))?;
    let clip = s.random(Shape5::of(1, 1, 2, 16, 16)).scale(0.5).add_scalar(0.5);
    let mut inputs = vec![clip];
    inputs.extend(disc.values());
    s.run(
        "discriminate",
        sampled,
        |t| {
            let mut d = loaded(&disc, &t[1..])?;
            Ok(discriminate(&t[0], &mut d, BnMode::Eval, Branches::Both)?.score.sum())
        },
        &inputs,
    )?;

    let sr = s.random(Shape5::of(1, 1, 3, 4, 4));
    let hr = s.random(Shape5::of(1, 1, 3, 4, 4));
    s.check("sr_loss", |t| sr_loss(&t[0], &t[1]), &[sr, hr])?;
    let real = s.random(Shape5::matrix(3, 1)).scale(0.4).add_scalar(0.5);
    let fake = s.random(Shape5::matrix(3, 1)).scale(0.4).add_scalar(0.5);
    s.check("lsgan_d_loss", |t| lsgan_d_loss(&t[0], &t[1], 0.0, 1.0), &[real, fake.clone()])?;
    s.check("lsgan_g_loss", |t| Ok(lsgan_g_loss(&t[0], 1.0)), &[fake])?;

    Ok(s.checks)
}
