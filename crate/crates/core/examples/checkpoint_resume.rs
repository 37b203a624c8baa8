//! Trains with the GAN on, checkpoints halfway, resumes from the file and
//! confirms the result matches an uninterrupted run bit for bit.
//!
//! `cargo run --release --example checkpoint_resume -- [steps]`

use attgan3d::data::{PatchSampler, PatchSpec};
use attgan3d::generator::{GeneratorConfig, SrMode};
use attgan3d::param::RngSeed;
use attgan3d::pipeline::{synthetic_pool, SynthSpec};
use attgan3d::training::{log_header, log_line, Checkpoint, TrainConfig, Trainer};

fn main() -> attgan3d::Result<()> {
    let steps: u64 = std::env::args().nth(1).map_or(20, |s| s.parse().expect("steps"));
    let spec = SynthSpec {
        clips: 2,
        frames: 7,
        height: 48,
        width: 48,
        ..SynthSpec::default()
    };
    let clips = synthetic_pool(&spec, RngSeed(2))?.into_iter().map(|(_, c)| c).collect();
    let patch = PatchSpec {
        frames: 5,
        height: 32,
        width: 32,
        mode: SrMode::Stsr,
    };
    let data = PatchSampler::new(clips, RngSeed(2), 1, patch)?;
    let config = TrainConfig {
        steps,
        seed: RngSeed(2),
        ..TrainConfig::default()
    };
    let gen = GeneratorConfig {
        feat_channels: 8,
        num_rabs: 2,
        ..GeneratorConfig::default()
    };

    let mut whole = Trainer::<f32>::new(config.clone(), gen.clone())?;
    println!("{}", log_header());
    whole.fit(&data, steps, |_, r| {
        println!("{}", log_line(r, None));
        Ok(())
    })?;

    let path = std::env::temp_dir().join(format!("attgan3d-resume-{}.ckpt", std::process::id()));
    let mut half = Trainer::<f32>::new(config, gen)?;
    half.fit(&data, steps / 2, |_, _| Ok(()))?;
    half.to_checkpoint().save(&path)?;
    let mut resumed = Trainer::<f32>::from_checkpoint(&Checkpoint::load(&path)?)?;
    resumed.fit(&data, steps, |_, _| Ok(()))?;
    let _ = std::fs::remove_file(&path);

    let same = resumed.to_checkpoint().to_bytes()? == whole.to_checkpoint().to_bytes()?;
    println!("resumed at step {} -> identical to uninterrupted run: {same}", steps / 2);
    if !same {
        std::process::exit(1);
    }
    Ok(())
}
