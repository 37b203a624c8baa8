//! PSNR and single-scale SSIM on frames in `[0, peak]`, plus per-clip reports.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::data::{Frame, VideoClip};
use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;

fn same_geometry(op: &'static str, x: &Frame, y: &Frame) -> Result<()> {
    if (x.channels, x.height, x.width) != (y.channels, y.height, y.width) {
        return Err(Error::geometry(
            op,
            format!(
                "{}×{}×{} vs {}×{}×{}",
                x.channels, x.height, x.width, y.channels, y.height, y.width
            ),
        ));
    }
    Ok(())
}

pub fn mse(x: &Frame, y: &Frame) -> Result<f64> {
    same_geometry("mse", x, y)?;
    let sum: f64 = x.data.iter().zip(&y.data).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum();
    Ok(sum / x.data.len() as f64)
}

/// `10·log10(peak²/MSE)` over all samples; identical frames give `+∞`.
pub fn psnr(x: &Frame, y: &Frame, peak: f64) -> Result<f64> {
    let m = mse(x, y)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// Normalized separable Gaussian taps.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Valid-mode separable filtering of one `h×w` plane.
fn filter_valid(p: &[f64], h: usize, w: usize, g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..k).map(|i| g[i] * p[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| g[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f32], b: &[f32], h: usize, w: usize, peak: f64, g: &[f64]) -> f64 {
    let a: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    let prod = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter_valid(&a, h, w, g);
    let mu_b = filter_valid(&b, h, w, g);
    let aa = filter_valid(&prod(&a, &a), h, w, g);
    let bb = filter_valid(&prod(&b, &b), h, w, g);
    let ab = filter_valid(&prod(&a, &b), h, w, g);
    let c1 = (K1 * peak).powi(2);
    let c2 = (K2 * peak).powi(2);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    total / n as f64
}

/// Single-scale SSIM (11×11 Gaussian window, σ = 1.5), averaged over valid
/// window positions and then over channels. Identical frames score exactly 1.
pub fn ssim(x: &Frame, y: &Frame, peak: f64) -> Result<f64> {
    same_geometry("ssim", x, y)?;
    if x.height < SSIM_WINDOW || x.width < SSIM_WINDOW {
        return Err(Error::geometry(
            "ssim",
            format!("frame {}×{} is smaller than the {SSIM_WINDOW}×{SSIM_WINDOW} window", x.height, x.width),
        ));
    }
    let g = gaussian_window(SSIM_WINDOW, SSIM_SIGMA);
    let s: f64 = (0..x.channels)
        .map(|c| ssim_plane(x.plane(c), y.plane(c), x.height, x.width, peak, &g))
        .sum();
    Ok(s / x.channels as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColorMode {
    /// BT.601 luma of RGB frames (grayscale passes through).
    #[default]
    Luma,
    /// PSNR from the MSE pooled over all channels; SSIM averaged over channels.
    RgbMean,
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            ColorMode::Luma => "luma",
            ColorMode::RgbMean => "rgb_mean",
        })
    }
}

impl FromStr for ColorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "luma" => Ok(ColorMode::Luma),
            "rgb_mean" => Ok(ColorMode::RgbMean),
            _ => Err(Error::Config(format!("unknown color mode {s:?} (expected luma or rgb_mean)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub psnr: Vec<f64>,
    pub ssim: Vec<f64>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

impl QualityReport {
    pub fn from_frames(psnr: Vec<f64>, ssim: Vec<f64>) -> Result<Self> {
        if psnr.is_empty() || psnr.len() != ssim.len() {
            return Err(Error::Contract(format!(
                "report needs matching non-empty lists, got {} and {}",
                psnr.len(),
                ssim.len()
            )));
        }
        Ok(QualityReport {
            mean_psnr: mean(&psnr),
            mean_ssim: mean(&ssim),
            psnr,
            ssim,
        })
    }

    pub fn frames(&self) -> usize {
        self.psnr.len()
    }

    /// Mean over several reports, weighting every frame equally.
    pub fn pooled(reports: &[QualityReport]) -> Result<Self> {
        let psnr = reports.iter().flat_map(|r| r.psnr.iter().copied()).collect();
        let ssim = reports.iter().flat_map(|r| r.ssim.iter().copied()).collect();
        QualityReport::from_frames(psnr, ssim)
    }

    /// `frame  psnr_db  ssim`, one row per frame and a closing `MEAN` row.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("frame\tpsnr_db\tssim\n");
        for (i, (p, q)) in self.psnr.iter().zip(&self.ssim).enumerate() {
            writeln!(s, "{i}\t{}\t{q:.6}", fmt_db(*p)).unwrap();
        }
        writeln!(s, "MEAN\t{}\t{:.6}", fmt_db(self.mean_psnr), self.mean_ssim).unwrap();
        s
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// Per-frame PSNR and SSIM of `sr` against `hr` after removing `border`
/// pixels from each side, then the mean across frames.
pub fn evaluate_clip(sr: &VideoClip, hr: &VideoClip, mode: ColorMode, border: usize) -> Result<QualityReport> {
    if (sr.frames, sr.channels, sr.height, sr.width) != (hr.frames, hr.channels, hr.height, hr.width) {
        return Err(Error::geometry(
            "evaluate_clip",
            format!(
                "{}×{}×{}×{} vs {}×{}×{}×{}",
                sr.frames, sr.channels, sr.height, sr.width, hr.frames, hr.channels, hr.height, hr.width
            ),
        ));
    }
    let mut p = Vec::with_capacity(sr.frames);
    let mut s = Vec::with_capacity(sr.frames);
    for t in 0..sr.frames {
        let (mut a, mut b) = (sr.frame(t).crop_border(border)?, hr.frame(t).crop_border(border)?);
        if mode == ColorMode::Luma {
            a = a.luma();
            b = b.luma();
        }
        p.push(psnr(&a, &b, 1.0)?);
        s.push(ssim(&a, &b, 1.0)?);
    }
    QualityReport::from_frames(p, s)
}
