//! Fits the generator alone to a single synthetic clip and compares it with
//! bicubic + linear-blend upscaling.
//!
//! `cargo run --release --example train_overfit -- [steps] [lr] [kind]`

use std::time::Instant;

use attgan3d::data::{degrade, synth_video, FixedBatch, SynthKind, DEGRADE_FACTOR};
use attgan3d::generator::GeneratorConfig;
use attgan3d::param::RngSeed;
use attgan3d::pipeline::evaluate_model;
use attgan3d::metrics::ColorMode;
use attgan3d::training::{TrainConfig, Trainer};

fn main() -> attgan3d::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map_or(2000, |s| s.parse().expect("steps"));
    let lr: f64 = args.next().map_or(1e-3, |s| s.parse().expect("lr"));
    let kind: SynthKind = args.next().map_or(Ok(SynthKind::MovingBars), |s| s.parse())?;

    let hr = synth_video(kind, 7, 64, 64, 1.5, RngSeed(7))?;
    let lr_clip = degrade(&hr, DEGRADE_FACTOR)?;
    let data = FixedBatch::from_clips(&[(lr_clip, hr.clone())])?;
    let config = TrainConfig {
        lr_g: lr,
        gan_enabled: false,
        steps,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::<f32>::new(config, GeneratorConfig::default())?;
    let start = Instant::now();
    trainer.fit(&data, steps, |t, r| {
        if r.step == 1 || r.step % 250 == 0 {
            let e = evaluate_model(&t.gen, &hr, ColorMode::Luma, 0)?;
            println!(
                "step {:>5}  l_sr {:.3e}  model {:.2} dB  baseline {:.2} dB  {:.0}s",
                r.step,
                r.l_sr,
                e.model.mean_psnr,
                e.baseline.mean_psnr,
                start.elapsed().as_secs_f64()
            );
        }
        Ok(())
    })?;
    let e = evaluate_model(&trainer.gen, &hr, ColorMode::Luma, 0)?;
    println!(
        "final: model {:.3} dB / {:.4}, baseline {:.3} dB / {:.4}, gain {:+.3} dB",
        e.model.mean_psnr,
        e.model.mean_ssim,
        e.baseline.mean_psnr,
        e.baseline.mean_ssim,
        e.model.mean_psnr - e.baseline.mean_psnr
    );
    Ok(())
}
