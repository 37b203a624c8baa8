//! Trains the four generator/discriminator configurations briefly and prints
//! the comparison table.
//!
//! `cargo run --release --example ablation -- [steps]`

use attgan3d::ablation::{ablation_table, run_ablation};
use attgan3d::data::{PatchSampler, PatchSpec};
use attgan3d::generator::{GeneratorConfig, SrMode};
use attgan3d::param::RngSeed;
use attgan3d::pipeline::{synthetic_pool, SynthSpec};
use attgan3d::training::TrainConfig;

fn main() -> attgan3d::Result<()> {
    let steps: u64 = std::env::args().nth(1).map_or(30, |s| s.parse().expect("steps"));
    let spec = SynthSpec {
        clips: 3,
        frames: 9,
        height: 64,
        width: 64,
        ..SynthSpec::default()
    };
    let train = synthetic_pool(&spec, RngSeed(0))?.into_iter().map(|(_, c)| c).collect();
    let held_out: Vec<_> = synthetic_pool(&SynthSpec { clips: 1, ..spec }, RngSeed(99))?
        .into_iter()
        .map(|(_, c)| c)
        .collect();
    let patch = PatchSpec {
        frames: 7,
        height: 32,
        width: 32,
        mode: SrMode::Stsr,
    };
    let data = PatchSampler::new(train, RngSeed(0), 1, patch)?;
    let base = TrainConfig {
        lr_g: 1e-3,
        ..TrainConfig::default()
    };
    let rows = run_ablation(&base, &GeneratorConfig::default(), &data, &held_out, steps, |v, r| {
        if r.step == steps {
            eprintln!("{} done: l_sr {:.4e}", v.name, r.l_sr);
        }
    })?;
    print!("{}", ablation_table(&rows));
    Ok(())
}
