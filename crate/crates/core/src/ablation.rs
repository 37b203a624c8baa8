//! Trains the four generator/discriminator configurations from one seed and
//! compares them.

use std::fmt::Write as _;

use crate::data::VideoClip;
use crate::discriminator::Branches;
use crate::error::{Error, Result};
use crate::generator::GeneratorConfig;
use crate::metrics::{ColorMode, QualityReport};
use crate::pipeline::evaluate_model;
use crate::training::{BatchSource, StepReport, TrainConfig, Trainer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Variant {
    pub name: &'static str,
    pub gan_enabled: bool,
    pub branches: Branches,
}

pub const VARIANTS: [Variant; 4] = [
    Variant {
        name: "only_generator",
        gan_enabled: false,
        branches: Branches::Both,
    },
    Variant {
        name: "texture_branch",
        gan_enabled: true,
        branches: Branches::TextureOnly,
    },
    Variant {
        name: "motion_branch",
        gan_enabled: true,
        branches: Branches::MotionOnly,
    },
    Variant {
        name: "full_gan",
        gan_enabled: true,
        branches: Branches::Both,
    },
];

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub variant: Variant,
    pub steps: u64,
    pub final_l_sr: f64,
    pub final_l_d: Option<f64>,
    /// Pooled over all held-out frames; `None` when training diverged.
    pub quality: Option<QualityReport>,
    pub diverged: Option<String>,
}

/// Trains every variant for `steps` steps from `base` and evaluates each on
/// `eval_clips` (HR clips, degraded for the generator's mode).
pub fn run_ablation(
    base: &TrainConfig,
    gen_config: &GeneratorConfig,
    data: &dyn BatchSource<f32>,
    eval_clips: &[VideoClip],
    steps: u64,
    mut on_step: impl FnMut(&Variant, &StepReport),
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::with_capacity(VARIANTS.len());
    for v in VARIANTS {
        let config = TrainConfig {
            gan_enabled: v.gan_enabled,
            disc_branches: v.branches,
            steps,
            ..base.clone()
        };
        let mut trainer = Trainer::<f32>::new(config, gen_config.clone())?;
        let mut last = None;
        let outcome = trainer.fit(data, steps, |_, r| {
            on_step(&v, r);
            last = Some(r.clone());
            Ok(())
        });
        let (diverged, quality) = match outcome {
            Err(Error::NonFinite(msg)) => (Some(msg), None),
            Err(e) => return Err(e),
            Ok(_) => {
                let reports = eval_clips
                    .iter()
                    .map(|hr| Ok(evaluate_model(&trainer.gen, hr, ColorMode::Luma, 0)?.model))
                    .collect::<Result<Vec<_>>>()?;
                (None, Some(QualityReport::pooled(&reports)?))
            }
        };
        rows.push(AblationRow {
            variant: v,
            steps: trainer.step,
            final_l_sr: last.as_ref().map_or(f64::NAN, |r| r.l_sr),
            final_l_d: last.and_then(|r| r.l_d),
            quality,
            diverged,
        });
    }
    Ok(rows)
}

/// Tab-separated comparison table, one row per variant.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut s = String::from("config\tgan\tbranches\tsteps\tfinal_l_sr\tfinal_l_d\tpsnr_db\tssim\tstatus\n");
    for r in rows {
        let (p, q) = r
            .quality
            .as_ref()
            .map_or(("NA".into(), "NA".into()), |q| (format!("{:.4}", q.mean_psnr), format!("{:.4}", q.mean_ssim)));
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{:.6e}\t{}\t{p}\t{q}\t{}",
            r.variant.name,
            if r.variant.gan_enabled { "on" } else { "off" },
            if r.variant.gan_enabled { r.variant.branches.to_string() } else { "none".into() },
            r.steps,
            r.final_l_sr,
            r.final_l_d.map_or("NA".into(), |v| format!("{v:.6e}")),
            r.diverged.as_ref().map_or("ok".to_string(), |m| format!("diverged: {m}"))
        )
        .unwrap();
    }
    s
}
