//! Runs one residual attention block on a synthetic clip and dumps its
//! channel and spatial attention maps.
//!
//! `cargo run --example attention_maps -- [out_dir]`

use std::path::PathBuf;

use attgan3d::attention::{csa_trace, dump_attention_map};
use attgan3d::data::{degrade, synth_video, SynthKind};
use attgan3d::generator::{shallow_extract, GeneratorConfig, GeneratorParams};
use attgan3d::param::RngSeed;
use attgan3d::tensor::no_grad;

fn main() -> attgan3d::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "attention".into()));
    std::fs::create_dir_all(&out).map_err(|e| attgan3d::Error::io(&out, e))?;
    let _g = no_grad();

    let hr = synth_video(SynthKind::MovingBars, 7, 128, 128, 1.5, RngSeed(3))?;
    let lr = degrade(&hr, 4)?.to_tensor::<f32>();
    let gen = GeneratorParams::<f32>::init(&GeneratorConfig::default(), RngSeed(0))?;
    let f = shallow_extract(&lr, &gen)?;
    let block = &gen.rabs[0];
    let branch = block.act.forward(&block.conv.forward(&f)?)?;
    let tr = csa_trace(&branch, &block.csa)?;

    for (name, map) in [("channel", &tr.channel_map), ("spatial", &tr.spatial_map)] {
        let d = map.data();
        let (lo, hi) = d.iter().fold((f32::MAX, f32::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let mean = d.iter().sum::<f32>() / d.len() as f32;
        let sidecar = dump_attention_map(&out.join(format!("{name}.f32")), map)?;
        println!("{name:<8} shape {}  min {lo:.4}  mean {mean:.4}  max {hi:.4}  ({})", map.shape(), sidecar.display());
    }
    Ok(())
}
