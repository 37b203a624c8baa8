//! Scores real clips and frame-shuffled clips with each discriminator branch
//! selection, before any training.
//!
//! `cargo run --example discriminator_scores`

use attgan3d::data::{synth_video, SynthKind, VideoClip};
use attgan3d::discriminator::{discriminate, Branches, DiscriminatorParams};
use attgan3d::param::RngSeed;
use attgan3d::tensor::BnMode;

fn main() -> attgan3d::Result<()> {
    let clip = synth_video(SynthKind::MovingBars, 7, 64, 64, 2.0, RngSeed(6))?;
    let order = [3, 0, 6, 1, 5, 2, 4];
    let frames: Vec<_> = order.iter().map(|&t| clip.frame(t)).collect();
    let shuffled = VideoClip::from_frames(&frames)?;

    let mut d = DiscriminatorParams::<f32>::init(1, RngSeed(0))?;
    for branches in [Branches::TextureOnly, Branches::MotionOnly, Branches::Both] {
        let a = discriminate(&clip.to_tensor(), &mut d, BnMode::Eval, branches)?;
        let b = discriminate(&shuffled.to_tensor(), &mut d, BnMode::Eval, branches)?;
        println!(
            "{branches:<13} ordered {:.6}  shuffled {:.6}  ({} frame evals, {} pair evals)",
            a.score.item(),
            b.score.item(),
            a.texture_evals,
            a.motion_evals
        );
    }
    Ok(())
}
