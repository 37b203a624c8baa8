//! Writes a small on-disk dataset of synthetic clips, reloads it through the
//! index and draws a few training batches from it.
//!
//! `cargo run --example dataset -- [root]`

use std::path::PathBuf;

use attgan3d::data::{DatasetIndex, PatchSampler, PatchSpec, SampleFormat};
use attgan3d::param::RngSeed;
use attgan3d::pipeline::{synthetic_pool, SynthSpec};
use attgan3d::training::BatchSource;

fn main() -> attgan3d::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic-dataset".into()));
    let spec = SynthSpec::default();
    DatasetIndex::create(&root, "train", &synthetic_pool(&spec, RngSeed(0))?, SampleFormat::U8)?;
    DatasetIndex::create(&root, "test", &synthetic_pool(&SynthSpec { clips: 2, ..spec }, RngSeed(100))?, SampleFormat::U8)?;

    let index = DatasetIndex::load(&root, "train")?;
    for e in &index.entries {
        println!("{}\t{} frames {}×{}\t{}", e.id, e.frames, e.w, e.h, e.path.display());
    }
    let clips = index.load_all()?.into_iter().map(|(_, c)| c).collect();
    let sampler = PatchSampler::new(clips, RngSeed(0), 2, PatchSpec::default())?;
    for step in 0..3 {
        let (lr, hr) = BatchSource::<f32>::batch(&sampler, step)?;
        println!("step {step}: lr {}  hr {}", lr.shape(), hr.shape());
    }
    Ok(())
}
