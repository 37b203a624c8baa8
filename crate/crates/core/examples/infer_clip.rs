//! Upscales an LR clip with a trained checkpoint, or with freshly initialized
//! weights when no checkpoint is given.
//!
//! `cargo run --release --example infer_clip -- [checkpoint] [out.vclp]`

use attgan3d::data::{degrade, synth_video, write_video, SampleFormat, SynthKind};
use attgan3d::generator::{GeneratorConfig, GeneratorParams};
use attgan3d::param::RngSeed;
use attgan3d::pipeline::infer_clip;
use attgan3d::training::{Checkpoint, Trainer};

fn main() -> attgan3d::Result<()> {
    let mut args = std::env::args().skip(1);
    let gen = match args.next() {
        Some(p) => Trainer::<f32>::from_checkpoint(&Checkpoint::load(p.as_ref())?)?.gen,
        None => GeneratorParams::init(&GeneratorConfig::default(), RngSeed(0))?,
    };
    let out = args.next().unwrap_or_else(|| "sr.vclp".into());

    let hr = synth_video(SynthKind::SinusoidGrating { period: 10.0 }, 7, 128, 128, 1.0, RngSeed(4))?;
    let lr = degrade(&hr, 4)?;
    let sr = infer_clip(&gen, &lr)?;
    write_video(out.as_ref(), &sr, SampleFormat::F32)?;
    println!(
        "{} mode: {}×{}×{} -> {}×{}×{} written to {out}",
        gen.config.mode, lr.frames, lr.width, lr.height, sr.frames, sr.width, sr.height
    );
    Ok(())
}
