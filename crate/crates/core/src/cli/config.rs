//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! once; unknown keys are rejected by name. [`CliConfig::to_text`] writes the
//! fully resolved configuration in the same syntax.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{PatchSpec, SynthKind};
use crate::discriminator::Branches;
use crate::error::{Error, Result};
use crate::generator::{GeneratorConfig, SrMode};
use crate::metrics::ColorMode;
use crate::param::RngSeed;
use crate::pipeline::SynthSpec;
use crate::training::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub train: TrainConfig,
    pub gen: GeneratorConfig,
    pub dataset_root: Option<PathBuf>,
    pub train_split: String,
    pub eval_split: String,
    pub checkpoint_in: Option<PathBuf>,
    pub checkpoint_out: PathBuf,
    /// Save every this many steps; 0 saves only at the end.
    pub checkpoint_every: u64,
    pub log_path: Option<PathBuf>,
    /// Wall-clock seconds in the step log; off keeps logs reproducible.
    pub log_timing: bool,
    pub patch_frames: usize,
    pub patch_height: usize,
    pub patch_width: usize,
    pub synth: SynthSpec,
    pub eval_clips: usize,
    pub color_mode: ColorMode,
    pub eval_border: usize,
    pub ablate_steps: u64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for CliConfig {
    fn default() -> Self {
        let patch = PatchSpec::default();
        CliConfig {
            train: TrainConfig::default(),
            gen: GeneratorConfig::default(),
            dataset_root: None,
            train_split: "train".into(),
            eval_split: "test".into(),
            checkpoint_in: None,
            checkpoint_out: PathBuf::from("attgan3d.ckpt"),
            checkpoint_every: 0,
            log_path: None,
            log_timing: false,
            patch_frames: patch.frames,
            patch_height: patch.height,
            patch_width: patch.width,
            synth: SynthSpec::default(),
            eval_clips: 2,
            color_mode: ColorMode::Luma,
            eval_border: 0,
            ablate_steps: 100,
            input: None,
            out: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl CliConfig {
    pub const KEYS: [&'static str; 41] = [
        "lr_g",
        "lr_d",
        "adam_beta1",
        "adam_beta2",
        "adam_eps",
        "lambda_adv",
        "label_fake",
        "label_real",
        "steps",
        "batch",
        "seed",
        "mode",
        "gan_enabled",
        "disc_branches",
        "in_channels",
        "feat_channels",
        "num_rabs",
        "prelu_init_alpha",
        "dataset_root",
        "train_split",
        "eval_split",
        "checkpoint_in",
        "checkpoint_out",
        "checkpoint_every",
        "log_path",
        "log_timing",
        "patch_frames",
        "patch_height",
        "patch_width",
        "synth_kind",
        "synth_clips",
        "synth_frames",
        "synth_height",
        "synth_width",
        "synth_velocity",
        "eval_clips",
        "color_mode",
        "eval_border",
        "ablate_steps",
        "input",
        "out",
    ];

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "lr_g" => t.lr_g = parse(key, v)?,
            "lr_d" => t.lr_d = parse(key, v)?,
            "adam_beta1" => t.adam_beta1 = parse(key, v)?,
            "adam_beta2" => t.adam_beta2 = parse(key, v)?,
            "adam_eps" => t.adam_eps = parse(key, v)?,
            "lambda_adv" => t.lambda_adv = parse(key, v)?,
            "label_fake" => t.label_fake = parse(key, v)?,
            "label_real" => t.label_real = parse(key, v)?,
            "steps" => t.steps = parse(key, v)?,
            "batch" => t.batch = parse(key, v)?,
            "seed" => t.seed = RngSeed(parse(key, v)?),
            "mode" => t.mode = v.parse::<SrMode>()?,
            "gan_enabled" => t.gan_enabled = parse_bool(key, v)?,
            "disc_branches" => t.disc_branches = v.parse::<Branches>()?,
            "in_channels" => self.gen.in_channels = parse(key, v)?,
            "feat_channels" => self.gen.feat_channels = parse(key, v)?,
            "num_rabs" => self.gen.num_rabs = parse(key, v)?,
            "prelu_init_alpha" => self.gen.prelu_init_alpha = parse(key, v)?,
            "dataset_root" => self.dataset_root = opt_path(v),
            "train_split" => self.train_split = v.to_string(),
            "eval_split" => self.eval_split = v.to_string(),
            "checkpoint_in" => self.checkpoint_in = opt_path(v),
            "checkpoint_out" => self.checkpoint_out = PathBuf::from(v),
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "log_path" => self.log_path = opt_path(v),
            "log_timing" => self.log_timing = parse_bool(key, v)?,
            "patch_frames" => self.patch_frames = parse(key, v)?,
            "patch_height" => self.patch_height = parse(key, v)?,
            "patch_width" => self.patch_width = parse(key, v)?,
            "synth_kind" => self.synth.kind = v.parse::<SynthKind>()?,
            "synth_clips" => self.synth.clips = parse(key, v)?,
            "synth_frames" => self.synth.frames = parse(key, v)?,
            "synth_height" => self.synth.height = parse(key, v)?,
            "synth_width" => self.synth.width = parse(key, v)?,
            "synth_velocity" => self.synth.velocity = parse(key, v)?,
            "eval_clips" => self.eval_clips = parse(key, v)?,
            "color_mode" => self.color_mode = v.parse::<ColorMode>()?,
            "eval_border" => self.eval_border = parse(key, v)?,
            "ablate_steps" => self.ablate_steps = parse(key, v)?,
            "input" => self.input = opt_path(v),
            "out" => self.out = opt_path(v),
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let t = &self.train;
        match key {
            "lr_g" => t.lr_g.to_string(),
            "lr_d" => t.lr_d.to_string(),
            "adam_beta1" => t.adam_beta1.to_string(),
            "adam_beta2" => t.adam_beta2.to_string(),
            "adam_eps" => t.adam_eps.to_string(),
            "lambda_adv" => t.lambda_adv.to_string(),
            "label_fake" => t.label_fake.to_string(),
            "label_real" => t.label_real.to_string(),
            "steps" => t.steps.to_string(),
            "batch" => t.batch.to_string(),
            "seed" => t.seed.0.to_string(),
            "mode" => t.mode.to_string(),
            "gan_enabled" => t.gan_enabled.to_string(),
            "disc_branches" => t.disc_branches.to_string(),
            "in_channels" => self.gen.in_channels.to_string(),
            "feat_channels" => self.gen.feat_channels.to_string(),
            "num_rabs" => self.gen.num_rabs.to_string(),
            "prelu_init_alpha" => self.gen.prelu_init_alpha.to_string(),
            "dataset_root" => show_path(&self.dataset_root),
            "train_split" => self.train_split.clone(),
            "eval_split" => self.eval_split.clone(),
            "checkpoint_in" => show_path(&self.checkpoint_in),
            "checkpoint_out" => self.checkpoint_out.display().to_string(),
            "checkpoint_every" => self.checkpoint_every.to_string(),
            "log_path" => show_path(&self.log_path),
            "log_timing" => self.log_timing.to_string(),
            "patch_frames" => self.patch_frames.to_string(),
            "patch_height" => self.patch_height.to_string(),
            "patch_width" => self.patch_width.to_string(),
            "synth_kind" => self.synth.kind.to_string(),
            "synth_clips" => self.synth.clips.to_string(),
            "synth_frames" => self.synth.frames.to_string(),
            "synth_height" => self.synth.height.to_string(),
            "synth_width" => self.synth.width.to_string(),
            "synth_velocity" => self.synth.velocity.to_string(),
            "eval_clips" => self.eval_clips.to_string(),
            "color_mode" => self.color_mode.to_string(),
            "eval_border" => self.eval_border.to_string(),
            "ablate_steps" => self.ablate_steps.to_string(),
            "input" => show_path(&self.input),
            "out" => show_path(&self.out),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Applies `key = value` lines over `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {line:?}", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: key `{k}` given twice", n + 1)));
            }
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                other => Error::Config(format!("line {}: {other}", n + 1)),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = CliConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        CliConfig::from_text(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Every key with its resolved value, one `key = value` line each.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in Self::KEYS {
            writeln!(s, "{k} = {}", self.get(k)).unwrap();
        }
        s
    }

    /// The generator configuration with the run's mode.
    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            mode: self.train.mode,
            ..self.gen.clone()
        }
    }

    pub fn patch_spec(&self) -> PatchSpec {
        PatchSpec {
            frames: self.patch_frames,
            height: self.patch_height,
            width: self.patch_width,
            mode: self.train.mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.generator_config().validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.patch_frames == 0 || self.patch_height == 0 || self.patch_width == 0 {
            return bad("patch dimensions must be >= 1");
        }
        if self.train.mode.upsamples_time() && (self.patch_frames < 3 || self.patch_frames % 2 == 0) {
            return bad("patch_frames must be odd and >= 3 when the mode upsamples time");
        }
        let f = self.train.mode.spatial_factor();
        if self.patch_height % f != 0 || self.patch_width % f != 0 {
            return bad("patch_height and patch_width must be divisible by the spatial factor");
        }
        if !self.synth.velocity.is_finite() {
            return bad("synth_velocity must be finite");
        }
        if self.synth.clips == 0 || self.eval_clips == 0 {
            return bad("synth_clips and eval_clips must be >= 1");
        }
        self.synth_spec().validate_against(&self.patch_spec())
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            channels: self.gen.in_channels,
            ..self.synth
        }
    }
}

impl SynthSpec {
    fn validate_against(&self, patch: &PatchSpec) -> Result<()> {
        if self.frames < patch.frames || self.height < patch.height || self.width < patch.width {
            return Err(Error::Config(format!(
                "synthetic clips {}×{}×{} are smaller than the patch {}×{}×{}",
                self.frames, self.height, self.width, patch.frames, patch.height, patch.width
            )));
        }
        Ok(())
    }
}
