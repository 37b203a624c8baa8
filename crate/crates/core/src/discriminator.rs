//! Two-branch discriminator: a texture branch over single frames and a
//! motion branch over channel-stacked consecutive frame pairs, fused by a
//! fully connected layer and a sigmoid.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::layers::{BatchNorm, Conv2d, Linear};
use crate::param::{stream, Init, ParamTensor, Params, RngSeed};
use crate::tensor::{
    concat, global_pool3d, leaky_relu, narrow, permute, sigmoid, BnMode, PoolMode, Real, Shape5, Tensor,
};

/// Output channels of the four stride-2 blocks of each branch.
pub const LADDER: [usize; 4] = [32, 64, 128, 256];
pub const FEATURES: usize = 256;
pub const LEAKY_SLOPE: f64 = 0.2;
/// Smallest frame side that survives four stride-2 blocks.
pub const MIN_SIDE: usize = 16;

/// Which branch features reach the fusion layer; masked branches contribute zeros.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Branches {
    #[default]
    Both,
    TextureOnly,
    MotionOnly,
}

impl Branches {
    pub fn texture(self) -> bool {
        self != Branches::MotionOnly
    }

    pub fn motion(self) -> bool {
        self != Branches::TextureOnly
    }

    pub fn code(self) -> u64 {
        match self {
            Branches::Both => 0,
            Branches::TextureOnly => 1,
            Branches::MotionOnly => 2,
        }
    }

    pub fn from_code(code: u64) -> Result<Self> {
        [Branches::Both, Branches::TextureOnly, Branches::MotionOnly]
            .into_iter()
            .find(|b| b.code() == code)
            .ok_or_else(|| Error::Malformed(format!("unknown branch code {code}")))
    }
}

impl fmt::Display for Branches {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Branches::Both => "both",
            Branches::TextureOnly => "texture_only",
            Branches::MotionOnly => "motion_only",
        })
    }
}

impl FromStr for Branches {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Branches::Both),
            "texture_only" | "texture" => Ok(Branches::TextureOnly),
            "motion_only" | "motion" => Ok(Branches::MotionOnly),
            _ => Err(Error::Config(format!(
                "unknown disc_branches {s:?} (expected both, texture_only or motion_only)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TextureBlock<T: Real> {
    pub conv: Conv2d<T>,
    pub bn: BatchNorm<T>,
}

#[derive(Clone, Debug)]
pub struct DiscriminatorParams<T: Real> {
    pub in_channels: usize,
    pub texture: Vec<TextureBlock<T>>,
    pub motion: Vec<Conv2d<T>>,
    /// `2·256 → 1`.
    pub fuse: Linear<T>,
}

impl<T: Real> DiscriminatorParams<T> {
    pub fn init(in_channels: usize, seed: RngSeed) -> Result<Self> {
        if in_channels == 0 {
            return Err(Error::Config("discriminator in_channels must be >= 1".into()));
        }
        let mut init = Init::new(seed, stream::DISCRIMINATOR_INIT);
        let mut texture = Vec::with_capacity(LADDER.len());
        let mut motion = Vec::with_capacity(LADDER.len());
        let (mut ct, mut cm) = (in_channels, 2 * in_channels);
        for (i, &cout) in LADDER.iter().enumerate() {
            texture.push(TextureBlock {
                conv: Conv2d::new(&mut init, &format!("disc.texture{i}.conv"), ct, cout, 3, 2, 1)?,
                bn: BatchNorm::new(&mut init, &format!("disc.texture{i}.bn"), cout)?,
            });
            motion.push(Conv2d::new(&mut init, &format!("disc.motion{i}.conv"), cm, cout, 3, 2, 1)?);
            ct = cout;
            cm = cout;
        }
        let fuse = Linear::new(&mut init, "disc.fuse", 2 * FEATURES, 1)?;
        let params = DiscriminatorParams {
            in_channels,
            texture,
            motion,
            fuse,
        };
        params.validate()?;
        Ok(params)
    }
}

impl<T: Real> Params<T> for DiscriminatorParams<T> {
    fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>)) {
        for b in &self.texture {
            b.conv.visit(f);
            b.bn.visit(f);
        }
        for c in &self.motion {
            c.visit(f);
        }
        self.fuse.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>)) {
        for b in &mut self.texture {
            b.conv.visit_mut(f);
            b.bn.visit_mut(f);
        }
        for c in &mut self.motion {
            c.visit_mut(f);
        }
        self.fuse.visit_mut(f);
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&str, &[T])) {
        for b in &self.texture {
            b.bn.visit_buffers(f);
        }
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&str, &mut Vec<T>)) {
        for b in &mut self.texture {
            b.bn.visit_buffers_mut(f);
        }
    }
}

fn check_frames<T: Real>(op: &'static str, x: &Tensor<T>, channels: usize) -> Result<()> {
    let s = x.shape();
    if s.c != channels {
        return Err(Error::Dimension {
            op,
            axis: "c",
            expected: channels,
            got: s.c,
        });
    }
    if s.d != 1 {
        return Err(Error::geometry(op, format!("expected single frames (d = 1), got d = {}", s.d)));
    }
    if s.h < MIN_SIDE || s.w < MIN_SIDE {
        return Err(Error::geometry(
            op,
            format!("frames must be at least {MIN_SIDE}×{MIN_SIDE}, got {}×{}", s.h, s.w),
        ));
    }
    Ok(())
}

/// `N×Cin×1×H×W` frames → `N×256` features: four blocks of
/// conv(k3, s2, p1) → BN → LeakyReLU(0.2), then global average pooling.
pub fn texture_branch<T: Real>(frames: &Tensor<T>, params: &mut DiscriminatorParams<T>, mode: BnMode) -> Result<Tensor<T>> {
    check_frames("texture_branch", frames, params.in_channels)?;
    let mut x = frames.clone();
    for block in &mut params.texture {
        let y = block.bn.forward(&block.conv.forward(&x)?, mode)?;
        x = leaky_relu(&y, T::of(LEAKY_SLOPE));
    }
    let n = x.shape().n;
    global_pool3d(&x, PoolMode::Avg).reshape(Shape5::matrix(n, FEATURES))
}

/// `N×2Cin×1×H×W` stacked pairs → `N×256` features; same ladder, no BN.
pub fn motion_branch<T: Real>(pairs: &Tensor<T>, params: &DiscriminatorParams<T>) -> Result<Tensor<T>> {
    check_frames("motion_branch", pairs, 2 * params.in_channels)?;
    let mut x = pairs.clone();
    for conv in &params.motion {
        x = leaky_relu(&conv.forward(&x)?, T::of(LEAKY_SLOPE));
    }
    let n = x.shape().n;
    global_pool3d(&x, PoolMode::Avg).reshape(Shape5::matrix(n, FEATURES))
}

/// `N×C×d×H×W` → `(N·d)×C×1×H×W`, frame-major within each clip.
fn frames_as_batch<T: Real>(clip: &Tensor<T>) -> Result<Tensor<T>> {
    let s = clip.shape();
    permute(clip, [0, 2, 1, 3, 4])?.reshape(Shape5::of(s.n * s.d, s.c, 1, s.h, s.w))
}

/// Consecutive frames `(t, t+1)` stacked on channels: `(N·(d−1))×2C×1×H×W`.
fn pairs_as_batch<T: Real>(clip: &Tensor<T>) -> Result<Tensor<T>> {
    let d = clip.shape().d;
    let stacked = concat(&[&narrow(clip, 2, 0, d - 1)?, &narrow(clip, 2, 1, d - 1)?], 1)?;
    frames_as_batch(&stacked)
}

/// `(N·k)×256` → `N×256`, averaging the `k` rows of each clip.
fn average_per_clip<T: Real>(features: &Tensor<T>, n: usize) -> Result<Tensor<T>> {
    let k = features.shape().n / n;
    features
        .reshape(Shape5::of(n, k, FEATURES, 1, 1))?
        .mean_axes([false, true, false, false, false])
        .reshape(Shape5::matrix(n, FEATURES))
}

/// Result of [`discriminate`].
#[derive(Clone, Debug)]
pub struct Discrimination<T: Real> {
    /// `N×1` scores in (0, 1).
    pub score: Tensor<T>,
    /// Texture-branch frame evaluations per clip.
    pub texture_evals: usize,
    /// Motion-branch pair evaluations per clip.
    pub motion_evals: usize,
}

/// Scores a clip batch `N×Cin×d×H×W`. Texture features are averaged over
/// the `d` frames and motion features over the `d − 1` consecutive pairs.
pub fn discriminate<T: Real>(
    clip: &Tensor<T>,
    params: &mut DiscriminatorParams<T>,
    mode: BnMode,
    branches: Branches,
) -> Result<Discrimination<T>> {
    let s = clip.shape();
    if s.d < 2 {
        return Err(Error::NeedsTwoFrames(s.d));
    }
    let zeros = || Tensor::zeros(Shape5::matrix(s.n, FEATURES));
    let (texture, texture_evals) = if branches.texture() {
        let frames = frames_as_batch(clip)?;
        let evals = frames.shape().n / s.n;
        (average_per_clip(&texture_branch(&frames, params, mode)?, s.n)?, evals)
    } else {
        (zeros()?, 0)
    };
    let (motion, motion_evals) = if branches.motion() {
        let pairs = pairs_as_batch(clip)?;
        let evals = pairs.shape().n / s.n;
        (average_per_clip(&motion_branch(&pairs, params)?, s.n)?, evals)
    } else {
        (zeros()?, 0)
    };
    let fused = params.fuse.forward(&concat(&[&texture, &motion], 1)?)?;
    Ok(Discrimination {
        score: sigmoid(&fused),
        texture_evals,
        motion_evals,
    })
}
