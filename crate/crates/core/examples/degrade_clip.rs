//! Builds a synthetic HR clip, applies the degradation for each mode and
//! writes the results as `.vclp` files.
//!
//! `cargo run --example degrade_clip -- [out_dir] [kind]`

use std::path::PathBuf;

use attgan3d::data::{degrade_for_mode, synth_video, write_video, SampleFormat, SynthKind};
use attgan3d::generator::SrMode;
use attgan3d::param::RngSeed;

fn main() -> attgan3d::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "degraded".into()));
    let kind: SynthKind = args.next().map_or(Ok(SynthKind::DriftingGaussian), |s| s.parse())?;
    std::fs::create_dir_all(&out).map_err(|e| attgan3d::Error::io(&out, e))?;

    let hr = synth_video(kind, 7, 256, 448, 2.0, RngSeed(1))?;
    write_video(&out.join("hr.vclp"), &hr, SampleFormat::U8)?;
    println!("hr   {}×{}×{}", hr.frames, hr.width, hr.height);
    for mode in SrMode::ALL {
        let lr = degrade_for_mode(&hr, mode)?;
        let path = out.join(format!("lr_{mode}.vclp"));
        write_video(&path, &lr, SampleFormat::U8)?;
        let means: Vec<String> = (0..lr.frames)
            .map(|t| {
                let f = lr.frame(t);
                format!("{:.4}", f.data.iter().sum::<f32>() / f.data.len() as f32)
            })
            .collect();
        println!("{mode:<5}{}×{}×{}  frame means [{}]  -> {}", lr.frames, lr.width, lr.height, means.join(", "), path.display());
    }
    Ok(())
}
