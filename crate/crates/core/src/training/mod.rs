//! Losses, optimizer, the alternating adversarial loop, and checkpoints.

mod adam;
pub mod checkpoint;
mod loss;
mod trainer;

pub use adam::{adam_update, AdamHyper, AdamState};
pub use checkpoint::{ArrayData, Checkpoint, NamedArray};
pub use loss::{lsgan_d_loss, lsgan_g_loss, sr_loss};
pub use trainer::{configs_from_checkpoint, log_header, log_line, BatchSource, StepReport, Trainer};

use crate::discriminator::Branches;
use crate::error::{Error, Result};
use crate::generator::SrMode;
use crate::param::RngSeed;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr_g: f64,
    pub lr_d: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Weight of the adversarial term in the generator loss.
    pub lambda_adv: f64,
    /// LSGAN target for fake samples (`a`).
    pub label_fake: f64,
    /// LSGAN target for real samples (`b`).
    pub label_real: f64,
    pub steps: u64,
    pub batch: usize,
    pub seed: RngSeed,
    pub mode: SrMode,
    pub gan_enabled: bool,
    pub disc_branches: Branches,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_g: 1e-4,
            lr_d: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            lambda_adv: 1.0,
            label_fake: 0.0,
            label_real: 1.0,
            steps: 1000,
            batch: 1,
            seed: RngSeed(0),
            mode: SrMode::Stsr,
            gan_enabled: true,
            disc_branches: Branches::Both,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lr_g > 0.0 && self.lr_g.is_finite()) || !(self.lr_d > 0.0 && self.lr_d.is_finite()) {
            return bad(format!("learning rates must be > 0, got lr_g={} lr_d={}", self.lr_g, self.lr_d));
        }
        if !(0.0 <= self.label_fake && self.label_fake < self.label_real && self.label_real <= 1.0) {
            return bad(format!(
                "labels must satisfy 0 <= label_fake < label_real <= 1, got {} and {}",
                self.label_fake, self.label_real
            ));
        }
        if !(self.lambda_adv >= 0.0 && self.lambda_adv.is_finite()) {
            return bad(format!("lambda_adv must be >= 0, got {}", self.lambda_adv));
        }
        for (k, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{k} must lie in [0, 1), got {v}"));
            }
        }
        if !(self.adam_eps > 0.0 && self.adam_eps.is_finite()) {
            return bad(format!("adam_eps must be > 0, got {}", self.adam_eps));
        }
        if self.batch == 0 {
            return bad("batch must be >= 1".into());
        }
        Ok(())
    }

    pub fn hyper_g(&self) -> AdamHyper {
        AdamHyper {
            lr: self.lr_g,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn hyper_d(&self) -> AdamHyper {
        AdamHyper {
            lr: self.lr_d,
            ..self.hyper_g()
        }
    }
}
