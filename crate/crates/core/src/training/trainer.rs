use crate::discriminator::{discriminate, Branches, DiscriminatorParams};
use crate::error::{Error, Result};
use crate::generator::{generator_forward, GeneratorConfig, GeneratorParams, SrMode};
use crate::param::{Params, RngSeed};
use crate::tensor::{add, BnMode, Real, Shape5, Tensor};

use super::checkpoint::{ArrayData, Checkpoint};
use super::{adam_update, lsgan_d_loss, lsgan_g_loss, sr_loss, AdamState, TrainConfig};

/// Supplies the `(lr, hr)` batch for a step. Batches must depend only on
/// the step index so that resumed runs see the same data.
pub trait BatchSource<T: Real> {
    fn batch(&self, step: u64) -> Result<(Tensor<T>, Tensor<T>)>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// 1-based index of the completed step.
    pub step: u64,
    pub l_sr: f64,
    pub l_g_adv: Option<f64>,
    pub l_d: Option<f64>,
    pub grad_norm_g: f64,
    pub grad_norm_d: Option<f64>,
    /// Every discriminator score produced this step (real, fake, fake for G).
    pub scores: Vec<f64>,
}

impl StepReport {
    pub fn losses_finite(&self) -> bool {
        [Some(self.l_sr), self.l_g_adv, self.l_d].into_iter().flatten().all(f64::is_finite)
    }
}

pub fn log_header() -> &'static str {
    "step\tl_sr\tl_g_adv\tl_d\tseconds"
}

/// `step  l_sr  l_g_adv  l_d  seconds`, tab-separated; absent values print `NA`.
pub fn log_line(r: &StepReport, seconds: Option<f64>) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    format!(
        "{}\t{}\t{}\t{}\t{}",
        r.step,
        r.l_sr,
        opt(r.l_g_adv),
        opt(r.l_d),
        seconds.map_or_else(|| "NA".to_string(), |s| format!("{s:.3}"))
    )
}

/// Generator, discriminator, both optimizer states and the step counter.
#[derive(Clone, Debug)]
pub struct Trainer<T: Real = f32> {
    pub config: TrainConfig,
    pub gen: GeneratorParams<T>,
    pub disc: DiscriminatorParams<T>,
    pub adam_g: AdamState<T>,
    pub adam_d: AdamState<T>,
    pub step: u64,
}

fn finite(step: u64, term: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("step {step}: loss term {term} = {v}")))
    }
}

fn push_scores<T: Real>(out: &mut Vec<f64>, s: &Tensor<T>) {
    out.extend(s.data().iter().map(|v| v.as_f64()));
}

impl<T: Real> Trainer<T> {
    /// Fresh networks seeded from `config.seed`; the generator's mode is
    /// taken from `config.mode`.
    pub fn new(config: TrainConfig, gen_config: GeneratorConfig) -> Result<Self> {
        config.validate()?;
        let gen_config = GeneratorConfig {
            mode: config.mode,
            ..gen_config
        };
        let gen = GeneratorParams::init(&gen_config, config.seed)?;
        let disc = DiscriminatorParams::init(gen_config.in_channels, config.seed)?;
        Ok(Trainer {
            adam_g: AdamState::new(&gen),
            adam_d: AdamState::new(&disc),
            config,
            gen,
            disc,
            step: 0,
        })
    }

    /// One iteration: a discriminator step on real and detached fake clips,
    /// then a generator step on `L_SR + λ·L_adv` (or `L_SR` alone when the
    /// GAN is disabled).
    pub fn train_step(&mut self, lr_clip: &Tensor<T>, hr_clip: &Tensor<T>) -> Result<StepReport> {
        let cfg = self.config.clone();
        let step = self.step + 1;
        let sr = generator_forward(lr_clip, &self.gen)?;
        let l_sr_t = sr_loss(&sr, hr_clip)?;
        let l_sr = finite(step, "l_sr", l_sr_t.item().as_f64())?;
        let mut report = StepReport {
            step,
            l_sr,
            l_g_adv: None,
            l_d: None,
            grad_norm_g: 0.0,
            grad_norm_d: None,
            scores: Vec::new(),
        };

        let total = if cfg.gan_enabled {
            let real = discriminate(hr_clip, &mut self.disc, BnMode::Train, cfg.disc_branches)?.score;
            let fake = discriminate(&sr.detach(), &mut self.disc, BnMode::Train, cfg.disc_branches)?.score;
            push_scores(&mut report.scores, &real);
            push_scores(&mut report.scores, &fake);
            let l_d = lsgan_d_loss(&real, &fake, cfg.label_fake, cfg.label_real)?;
            report.l_d = Some(finite(step, "l_d", l_d.item().as_f64())?);
            l_d.backward()?;
            report.grad_norm_d = Some(self.disc.grad_norm());
            adam_update(&mut self.disc, &mut self.adam_d, cfg.hyper_d())?;
            self.disc.zero_grads();

            let fake_g = discriminate(&sr, &mut self.disc, BnMode::Train, cfg.disc_branches)?.score;
            push_scores(&mut report.scores, &fake_g);
            let l_adv = lsgan_g_loss(&fake_g, cfg.label_real);
            report.l_g_adv = Some(finite(step, "l_g_adv", l_adv.item().as_f64())?);
            if cfg.lambda_adv == 0.0 {
                l_sr_t
            } else {
                add(&l_sr_t, &l_adv.scale(T::of(cfg.lambda_adv)))?
            }
        } else {
            l_sr_t
        };
        finite(step, "l_g", total.item().as_f64())?;
        total.backward()?;
        self.disc.zero_grads();
        report.grad_norm_g = self.gen.grad_norm();
        adam_update(&mut self.gen, &mut self.adam_g, cfg.hyper_g())?;
        self.gen.zero_grads();
        self.step = step;
        Ok(report)
    }

    /// Runs steps until `self.step == until`, calling `on_step` after each.
    pub fn fit(
        &mut self,
        data: &dyn BatchSource<T>,
        until: u64,
        mut on_step: impl FnMut(&Self, &StepReport) -> Result<()>,
    ) -> Result<Vec<StepReport>> {
        let mut reports = Vec::new();
        while self.step < until {
            let (lr, hr) = data.batch(self.step)?;
            let r = self.train_step(&lr, &hr)?;
            on_step(self, &r)?;
            reports.push(r);
        }
        Ok(reports)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.config;
        let g = &self.gen.config;
        let mut ck = Checkpoint {
            step: self.step,
            ..Default::default()
        };
        for (k, v) in [
            ("lr_g", c.lr_g),
            ("lr_d", c.lr_d),
            ("adam_beta1", c.adam_beta1),
            ("adam_beta2", c.adam_beta2),
            ("adam_eps", c.adam_eps),
            ("lambda_adv", c.lambda_adv),
            ("label_fake", c.label_fake),
            ("label_real", c.label_real),
            ("prelu_init_alpha", g.prelu_init_alpha),
        ] {
            ck.push_f64(format!("config.{k}"), v);
        }
        for (k, v) in [
            ("steps", c.steps),
            ("batch", c.batch as u64),
            ("seed", c.seed.0),
            ("mode", c.mode.code()),
            ("gan_enabled", c.gan_enabled as u64),
            ("disc_branches", c.disc_branches.code()),
            ("in_channels", g.in_channels as u64),
            ("feat_channels", g.feat_channels as u64),
            ("num_rabs", g.num_rabs as u64),
        ] {
            ck.push_u64(format!("config.{k}"), v);
        }
        push_params(&mut ck, &self.gen);
        push_params(&mut ck, &self.disc);
        push_adam(&mut ck, "adam.g", &self.gen, &self.adam_g);
        push_adam(&mut ck, "adam.d", &self.disc, &self.adam_d);
        ck
    }

    /// Rebuilds a trainer exactly as it was when `ck` was taken.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let (config, gen_config) = configs_from_checkpoint(ck)?;
        let mut t = Trainer::new(config, gen_config)?;
        load_params(ck, &mut t.gen)?;
        load_params(ck, &mut t.disc)?;
        t.adam_g = load_adam(ck, "adam.g", &t.gen)?;
        t.adam_d = load_adam(ck, "adam.d", &t.disc)?;
        t.step = ck.step;
        Ok(t)
    }
}

/// Training and generator configuration stored in a checkpoint.
pub fn configs_from_checkpoint(ck: &Checkpoint) -> Result<(TrainConfig, GeneratorConfig)> {
    let f = |k: &str| ck.f64(&format!("config.{k}"));
    let u = |k: &str| ck.u64(&format!("config.{k}"));
    let config = TrainConfig {
        lr_g: f("lr_g")?,
        lr_d: f("lr_d")?,
        adam_beta1: f("adam_beta1")?,
        adam_beta2: f("adam_beta2")?,
        adam_eps: f("adam_eps")?,
        lambda_adv: f("lambda_adv")?,
        label_fake: f("label_fake")?,
        label_real: f("label_real")?,
        steps: u("steps")?,
        batch: u("batch")? as usize,
        seed: RngSeed(u("seed")?),
        mode: SrMode::from_code(u("mode")?)?,
        gan_enabled: u("gan_enabled")? != 0,
        disc_branches: Branches::from_code(u("disc_branches")?)?,
    };
    let gen_config = GeneratorConfig {
        in_channels: u("in_channels")? as usize,
        feat_channels: u("feat_channels")? as usize,
        num_rabs: u("num_rabs")? as usize,
        mode: config.mode,
        prelu_init_alpha: f("prelu_init_alpha")?,
    };
    Ok((config, gen_config))
}

fn dims_of(shape: Shape5) -> Vec<u64> {
    shape.dims().iter().map(|&d| d as u64).collect()
}

fn push_params<T: Real>(ck: &mut Checkpoint, p: &dyn Params<T>) {
    p.visit(&mut |t| ck.push(t.name.clone(), dims_of(t.shape()), ArrayData::from_real(t.value.data())));
    p.visit_buffers(&mut |name, v| ck.push(name.to_string(), vec![v.len() as u64], ArrayData::from_real(v)));
}

fn push_adam<T: Real>(ck: &mut Checkpoint, prefix: &str, p: &dyn Params<T>, st: &AdamState<T>) {
    let mut i = 0;
    p.visit(&mut |t| {
        let dims = dims_of(t.shape());
        ck.push(format!("{prefix}.m.{}", t.name), dims.clone(), ArrayData::from_real(&st.m[i]));
        ck.push(format!("{prefix}.v.{}", t.name), dims, ArrayData::from_real(&st.v[i]));
        i += 1;
    });
    ck.push_u64(format!("{prefix}.t"), st.t);
}

fn array<T: Real>(ck: &Checkpoint, name: &str, len: usize) -> Result<Vec<T>> {
    let v = ck.get(name)?.data.to_real::<T>(name)?;
    if v.len() != len {
        return Err(Error::Malformed(format!("{name}: expected {len} values, found {}", v.len())));
    }
    Ok(v)
}

fn load_params<T: Real, P: Params<T>>(ck: &Checkpoint, p: &mut P) -> Result<()> {
    let mut result = Ok(());
    p.visit_mut(&mut |t| {
        if result.is_ok() {
            result = array(ck, &t.name, t.value.len()).and_then(|v| t.set(v));
        }
    });
    p.visit_buffers_mut(&mut |name, buf| {
        if result.is_ok() {
            match array(ck, name, buf.len()) {
                Ok(v) => *buf = v,
                Err(e) => result = Err(e),
            }
        }
    });
    result
}

fn load_adam<T: Real, P: Params<T>>(ck: &Checkpoint, prefix: &str, p: &P) -> Result<AdamState<T>> {
    let mut st = AdamState::new(p);
    let mut i = 0;
    let mut result = Ok(());
    p.visit(&mut |t| {
        if result.is_ok() {
            match (
                array(ck, &format!("{prefix}.m.{}", t.name), t.value.len()),
                array(ck, &format!("{prefix}.v.{}", t.name), t.value.len()),
            ) {
                (Ok(m), Ok(v)) => {
                    st.m[i] = m;
                    st.v[i] = v;
                }
                (Err(e), _) | (_, Err(e)) => result = Err(e),
            }
        }
        i += 1;
    });
    result?;
    st.t = ck.u64(&format!("{prefix}.t"))?;
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_line_format() {
        let r = StepReport {
            step: 3,
            l_sr: 0.5,
            l_g_adv: None,
            l_d: Some(0.25),
            grad_norm_g: 1.0,
            grad_norm_d: None,
            scores: vec![],
        };
        assert_eq!(log_line(&r, Some(1.23456)), "3\t0.5\tNA\t0.25\t1.235");
        assert_eq!(log_line(&r, None), "3\t0.5\tNA\t0.25\tNA");
        assert_eq!(log_header().split('\t').count(), 5);
    }
}
