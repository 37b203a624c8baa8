//! The `attgan3d` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime
//! failure (non-finite loss, I/O, malformed files).

mod config;

pub use config::CliConfig;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::ablation::{ablation_table, run_ablation};
use crate::data::{read_video, write_video, DatasetIndex, PatchSampler, SampleFormat, VideoClip};
use crate::error::{Error, Result};
use crate::gradsuite::gradient_suite;
use crate::metrics::QualityReport;
use crate::param::RngSeed;
use crate::pipeline::{evaluate_model, infer_clip, synthetic_pool};
use crate::training::{log_header, log_line, Checkpoint, Trainer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Offset between the training and held-out synthetic seeds.
const EVAL_SEED_OFFSET: u64 = 1_000_003;

#[derive(Debug, Parser)]
#[command(name = "attgan3d", version, about = "Space-time video super-resolution with attention GANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model, writing a step log and checkpoints.
    Train(Common),
    /// Upscale one LR clip with a trained checkpoint.
    Infer {
        #[command(flatten)]
        common: Common,
        /// LR clip to read (overrides `input` in the config).
        input: Option<PathBuf>,
    },
    /// Score a checkpoint and the bicubic baseline on held-out clips.
    Eval(Common),
    /// Run the finite-difference gradient suite.
    Gradcheck(Common),
    /// Train and compare the four generator/discriminator configurations.
    Ablate(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<CliConfig> {
        let mut c = match &self.config {
            Some(p) => CliConfig::load(p)?,
            None => CliConfig::default(),
        };
        if let Some(s) = self.seed {
            c.train.seed = RngSeed(s);
        }
        if let Some(s) = self.steps {
            c.train.steps = s;
        }
        if let Some(m) = &self.mode {
            c.set("mode", m)?;
        }
        if let Some(p) = &self.checkpoint {
            c.checkpoint_in = Some(p.clone());
        }
        if let Some(p) = &self.out {
            c.out = Some(p.clone());
        }
        Ok(c)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (name, common, input) = match &cli.command {
        Command::Train(c) => ("train", c, None),
        Command::Infer { common, input } => ("infer", common, input.clone()),
        Command::Eval(c) => ("eval", c, None),
        Command::Gradcheck(c) => ("gradcheck", c, None),
        Command::Ablate(c) => ("ablate", c, None),
    };
    let mut cfg = common.resolve()?;
    if let Some(p) = input {
        cfg.input = Some(p);
    }
    if name == "ablate" {
        if let Some(s) = common.steps {
            cfg.ablate_steps = s;
        }
    }
    cfg.validate()?;
    eprintln!("# attgan3d {name}: resolved configuration");
    for line in cfg.to_text().lines() {
        eprintln!("#   {line}");
    }
    match name {
        "train" => train(&cfg),
        "infer" => infer(&cfg),
        "eval" => eval(&cfg),
        "gradcheck" => gradcheck(&cfg),
        _ => ablate(&cfg),
    }
}

/// HR clips from the dataset split, or a synthetic pool when no dataset is set.
fn load_clips(cfg: &CliConfig, split: &str, seed: RngSeed, count: usize) -> Result<Vec<(String, VideoClip)>> {
    match &cfg.dataset_root {
        Some(root) => DatasetIndex::load(root, split)?.load_all(),
        None => synthetic_pool(
            &crate::pipeline::SynthSpec {
                clips: count,
                ..cfg.synth_spec()
            },
            seed,
        ),
    }
}

fn eval_clips(cfg: &CliConfig) -> Result<Vec<(String, VideoClip)>> {
    load_clips(cfg, &cfg.eval_split, RngSeed(cfg.train.seed.0.wrapping_add(EVAL_SEED_OFFSET)), cfg.eval_clips)
}

fn sampler(cfg: &CliConfig) -> Result<PatchSampler> {
    let clips = load_clips(cfg, &cfg.train_split, cfg.train.seed, cfg.synth.clips)?;
    PatchSampler::new(clips.into_iter().map(|(_, c)| c).collect(), cfg.train.seed, cfg.train.batch, cfg.patch_spec())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn train(cfg: &CliConfig) -> Result<()> {
    let mut trainer = match &cfg.checkpoint_in {
        Some(p) => {
            let mut t = Trainer::<f32>::from_checkpoint(&Checkpoint::load(p)?)?;
            eprintln!("# resuming from {} at step {}", p.display(), t.step);
            t.config.steps = cfg.train.steps;
            t
        }
        None => Trainer::<f32>::new(cfg.train.clone(), cfg.gen.clone())?,
    };
    let data = sampler(cfg)?;
    let ck_out = cfg.out.clone().unwrap_or_else(|| cfg.checkpoint_out.clone());
    let mut log: Box<dyn std::io::Write> = match &cfg.log_path {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| Error::io(p, e))?),
        None => Box::new(std::io::stdout()),
    };
    let log_err = |e: std::io::Error| Error::io(cfg.log_path.as_deref().unwrap_or(Path::new("<stdout>")), e);
    writeln!(log, "{}", log_header()).map_err(log_err)?;
    let mut tick = Instant::now();
    let until = cfg.train.steps;
    let result = trainer.fit(&data, until, |t, r| {
        let secs = cfg.log_timing.then(|| tick.elapsed().as_secs_f64());
        tick = Instant::now();
        writeln!(log, "{}", log_line(r, secs)).map_err(log_err)?;
        if cfg.checkpoint_every > 0 && r.step % cfg.checkpoint_every == 0 && r.step < until {
            t.to_checkpoint().save(&ck_out)?;
        }
        Ok(())
    });
    log.flush().map_err(log_err)?;
    result?;
    trainer.to_checkpoint().save(&ck_out)?;
    eprintln!("# wrote {} at step {}", ck_out.display(), trainer.step);
    Ok(())
}

fn need<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    p.as_ref().ok_or_else(|| Error::Config(format!("{what} is required")))
}

fn load_model(cfg: &CliConfig) -> Result<Trainer<f32>> {
    let path = need(&cfg.checkpoint_in, "--checkpoint")?;
    let t = Trainer::<f32>::from_checkpoint(&Checkpoint::load(path)?)?;
    let g = &t.gen.config;
    eprintln!(
        "# model {}: step {}, mode {}, {} channels, {} features, {} blocks",
        path.display(),
        t.step,
        g.mode,
        g.in_channels,
        g.feat_channels,
        g.num_rabs
    );
    Ok(t)
}

fn infer(cfg: &CliConfig) -> Result<()> {
    let input = need(&cfg.input, "an input clip")?;
    let out = need(&cfg.out, "--out")?;
    if out == input || fs::canonicalize(out).ok().is_some_and(|o| fs::canonicalize(input).ok() == Some(o)) {
        return Err(Error::Config("--out must differ from the input clip".into()));
    }
    let model = load_model(cfg)?;
    let lr = read_video(input)?;
    let sr = infer_clip(&model.gen, &lr)?;
    write_video(out, &sr, SampleFormat::F32)?;
    println!(
        "{}: {}×{}×{} -> {}: {}×{}×{} ({})",
        input.display(),
        lr.frames,
        lr.height,
        lr.width,
        out.display(),
        sr.frames,
        sr.height,
        sr.width,
        model.gen.config.mode
    );
    Ok(())
}

fn eval(cfg: &CliConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("eval"));
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut summary = String::from("clip\tmodel_psnr_db\tmodel_ssim\tbaseline_psnr_db\tbaseline_ssim\n");
    let (mut models, mut bases) = (Vec::new(), Vec::new());
    for (id, hr) in eval_clips(cfg)? {
        let r = evaluate_model(&model.gen, &hr, cfg.color_mode, cfg.eval_border)?;
        r.model.write_tsv(&out.join(format!("{id}.model.tsv")))?;
        r.baseline.write_tsv(&out.join(format!("{id}.baseline.tsv")))?;
        writeln!(
            summary,
            "{id}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.model.mean_psnr, r.model.mean_ssim, r.baseline.mean_psnr, r.baseline.mean_ssim
        )
        .unwrap();
        models.push(r.model);
        bases.push(r.baseline);
    }
    let (m, b) = (QualityReport::pooled(&models)?, QualityReport::pooled(&bases)?);
    m.write_tsv(&out.join("model.tsv"))?;
    b.write_tsv(&out.join("baseline.tsv"))?;
    writeln!(summary, "MEAN\t{:.4}\t{:.4}\t{:.4}\t{:.4}", m.mean_psnr, m.mean_ssim, b.mean_psnr, b.mean_ssim).unwrap();
    write_text(&out.join("summary.tsv"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn gradcheck(cfg: &CliConfig) -> Result<()> {
    let checks = gradient_suite(cfg.train.seed.0)?;
    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.report.pass).map(|c| c.op).collect();
    if failed.is_empty() {
        println!("all {} checks pass", checks.len());
        Ok(())
    } else {
        Err(Error::Contract(format!("gradient check failed for {}", failed.join(", "))))
    }
}

fn ablate(cfg: &CliConfig) -> Result<()> {
    let data = sampler(cfg)?;
    let held_out: Vec<VideoClip> = eval_clips(cfg)?.into_iter().map(|(_, c)| c).collect();
    let steps = cfg.ablate_steps;
    let rows = run_ablation(&cfg.train, &cfg.gen, &data, &held_out, steps, |v, r| {
        if r.step == steps || r.step % 25 == 0 {
            eprintln!("# {} step {}/{steps}: l_sr={:.6e}", v.name, r.step, r.l_sr);
        }
    })?;
    let table = ablation_table(&rows);
    if let Some(p) = &cfg.out {
        write_text(p, &table)?;
    }
    print!("{table}");
    match rows.iter().find(|r| r.diverged.is_some()) {
        Some(r) => Err(Error::NonFinite(format!("{} diverged", r.variant.name))),
        None => Ok(()),
    }
}
