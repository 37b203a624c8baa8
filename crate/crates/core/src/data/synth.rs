//! Analytic grayscale clips with exact subpixel motion along x.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{catmull_rom, VideoClip};
use crate::error::{Error, Result};
use crate::param::{stream, RngSeed};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthKind {
    /// Random vertical bars on a periodic profile one frame wide.
    MovingBars,
    /// A Gaussian blob over a soft vertical gradient.
    DriftingGaussian,
    /// `0.5 + 0.4·sin(2π(x − v·t)/period + φ + tilt·y)`.
    SinusoidGrating { period: f64 },
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthKind::MovingBars => f.write_str("moving_bars"),
            SynthKind::DriftingGaussian => f.write_str("drifting_gaussian"),
            SynthKind::SinusoidGrating { period } => write!(f, "sinusoid_grating:{period}"),
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "moving_bars" => Ok(SynthKind::MovingBars),
            None if s == "drifting_gaussian" => Ok(SynthKind::DriftingGaussian),
            None if s == "sinusoid_grating" => Ok(SynthKind::SinusoidGrating { period: 8.0 }),
            Some(("sinusoid_grating", p)) => p
                .parse::<f64>()
                .ok()
                .filter(|p| *p > 0.0 && p.is_finite())
                .map(|period| SynthKind::SinusoidGrating { period })
                .ok_or_else(|| Error::Config(format!("bad grating period {p:?}"))),
            _ => Err(Error::Config(format!(
                "unknown synthetic clip kind {s:?} (expected moving_bars, drifting_gaussian or sinusoid_grating[:period])"
            ))),
        }
    }
}

/// Periodic profile of `len` samples holding a few random bars.
fn bar_profile<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    let background = rng.random_range(0.1..0.3);
    let mut profile = vec![background; len];
    let bars = rng.random_range(3..=6);
    for _ in 0..bars {
        let start = rng.random_range(0..len);
        let width = rng.random_range(1..=(len / 6).max(2));
        let level = rng.random_range(0.5..0.95);
        for k in 0..width {
            profile[(start + k) % len] = level;
        }
    }
    profile
}

/// Catmull-Rom interpolation of a periodic profile at `x`.
fn sample_periodic(profile: &[f64], x: f64) -> f64 {
    let n = profile.len() as i64;
    let base = x.floor() as i64;
    (base - 1..=base + 2)
        .map(|j| profile[j.rem_euclid(n) as usize] * catmull_rom(x - j as f64))
        .sum()
}

/// A deterministic clip whose pattern moves `velocity` pixels per frame
/// along x. The pattern (bar layout, blob size, grating phase) is drawn
/// from `seed`.
pub fn synth_video(kind: SynthKind, frames: usize, height: usize, width: usize, velocity: f64, seed: RngSeed) -> Result<VideoClip> {
    if !velocity.is_finite() {
        return Err(Error::Contract(format!("velocity must be finite, got {velocity}")));
    }
    let mut rng = seed.rng(stream::SYNTH);
    match kind {
        SynthKind::MovingBars => {
            let profile = bar_profile(width, &mut rng);
            let shade = rng.random_range(0.0..0.2);
            VideoClip::from_fn(frames, 1, height, width, |t, _, y, x| {
                let v = sample_periodic(&profile, x as f64 - velocity * t as f64);
                v * (1.0 - shade * y as f64 / height as f64)
            })
        }
        SynthKind::DriftingGaussian => {
            let sigma = rng.random_range(0.08..0.2) * height.min(width) as f64;
            let cx = rng.random_range(0.2..0.5) * width as f64;
            let cy = rng.random_range(0.3..0.7) * height as f64;
            VideoClip::from_fn(frames, 1, height, width, |t, _, y, x| {
                let dx = x as f64 - cx - velocity * t as f64;
                let dy = y as f64 - cy;
                0.1 + 0.2 * y as f64 / height as f64 + 0.65 * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
        }
        SynthKind::SinusoidGrating { period } => {
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::Contract(format!("grating period must be > 0, got {period}")));
            }
            let phase = rng.random_range(0.0..2.0 * PI);
            let tilt = rng.random_range(-0.3..0.3);
            VideoClip::from_fn(frames, 1, height, width, |t, _, y, x| {
                0.5 + 0.4 * (2.0 * PI * (x as f64 - velocity * t as f64) / period + phase + tilt * y as f64).sin()
            })
        }
    }
}
