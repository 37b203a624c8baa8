//! Scores the classical upscaler (bicubic in space, frame blending in time)
//! against the ground truth for every mode and synthetic clip kind.
//!
//! Under tsr the kept frames come back exactly, so their PSNR (and the
//! clip mean) is infinite.
//!
//! `cargo run --example evaluate_baseline`

use attgan3d::baseline::baseline_upscale;
use attgan3d::data::{degrade_for_mode, synth_video, SynthKind};
use attgan3d::generator::SrMode;
use attgan3d::metrics::{evaluate_clip, ColorMode};
use attgan3d::param::RngSeed;

fn main() -> attgan3d::Result<()> {
    println!("kind\tmode\tpsnr_db\tssim");
    for kind in [SynthKind::MovingBars, SynthKind::DriftingGaussian, SynthKind::SinusoidGrating { period: 12.0 }] {
        let hr = synth_video(kind, 9, 64, 96, 1.5, RngSeed(5))?;
        for mode in SrMode::ALL {
            let lr = degrade_for_mode(&hr, mode)?;
            let up = baseline_upscale(&lr, mode)?;
            let q = evaluate_clip(&up, &hr, ColorMode::Luma, 0)?;
            println!("{kind}\t{mode}\t{:.3}\t{:.4}", q.mean_psnr, q.mean_ssim);
        }
    }
    Ok(())
}
