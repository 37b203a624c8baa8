use rand::Rng;

use super::{bicubic_resize, VideoClip};
use crate::error::{Error, Result};
use crate::generator::SrMode;

/// Spatial downsampling factor of the degradation model.
pub const DEGRADE_FACTOR: usize = 4;

fn degrade_with(hr: &VideoClip, drop_frames: bool, factor: usize) -> Result<VideoClip> {
    if drop_frames && (hr.frames < 3 || hr.frames % 2 == 0) {
        return Err(Error::Contract(format!(
            "degrade needs an odd frame count >= 3, got {}",
            hr.frames
        )));
    }
    if factor == 0 || hr.height % factor != 0 || hr.width % factor != 0 {
        return Err(Error::Contract(format!(
            "degrade: {}×{} is not divisible by {factor}",
            hr.height, hr.width
        )));
    }
    let step = if drop_frames { 2 } else { 1 };
    let frames = (0..hr.frames)
        .step_by(step)
        .map(|t| {
            let f = hr.frame(t);
            if factor == 1 {
                Ok(f)
            } else {
                bicubic_resize(&f, hr.height / factor, hr.width / factor)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    VideoClip::from_frames(&frames)
}

/// Keeps the frames with 1-based odd indices (`2n − 1 → n`) and bicubic
/// downsamples each by `factor`.
pub fn degrade(hr: &VideoClip, factor: usize) -> Result<VideoClip> {
    degrade_with(hr, true, factor)
}

/// The degradation matching a generator mode: STSR drops frames and
/// downsamples ×4, SSR only downsamples, TSR only drops frames.
pub fn degrade_for_mode(hr: &VideoClip, mode: SrMode) -> Result<VideoClip> {
    degrade_with(hr, mode.upsamples_time(), mode.spatial_factor())
}

/// HR patch geometry of one training sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchSpec {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub mode: SrMode,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            frames: 7,
            height: 128,
            width: 128,
            mode: SrMode::Stsr,
        }
    }
}

/// Random HR crop with offsets on the LR grid, plus its degraded LR patch.
pub fn crop_patches<R: Rng + ?Sized>(hr: &VideoClip, spec: PatchSpec, rng: &mut R) -> Result<(VideoClip, VideoClip)> {
    if hr.frames < spec.frames || hr.height < spec.height || hr.width < spec.width {
        return Err(Error::Contract(format!(
            "clip {}×{}×{} is smaller than patch {}×{}×{}",
            hr.frames, hr.height, hr.width, spec.frames, spec.height, spec.width
        )));
    }
    let f = DEGRADE_FACTOR;
    let t0 = rng.random_range(0..=hr.frames - spec.frames);
    let y0 = rng.random_range(0..=(hr.height - spec.height) / f) * f;
    let x0 = rng.random_range(0..=(hr.width - spec.width) / f) * f;
    let patch = VideoClip::from_fn(spec.frames, hr.channels, spec.height, spec.width, |t, c, y, x| {
        hr.data[(((t0 + t) * hr.channels + c) * hr.height + y0 + y) * hr.width + x0 + x] as f64
    })?;
    Ok((degrade_for_mode(&patch, spec.mode)?, patch))
}
