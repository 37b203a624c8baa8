//! Separable bicubic resampling with the Catmull-Rom kernel (a = −0.5).
//!
//! Output pixel `i` samples source coordinate `(i + 0.5)·in/out − 0.5`.
//! When shrinking, the kernel is stretched by the scale factor so it acts as
//! a low-pass filter. Taps falling outside the image are clamped to the edge.

use super::Frame;
use crate::error::{Error, Result};

const A: f64 = -0.5;

/// Catmull-Rom cubic convolution kernel.
pub fn catmull_rom(t: f64) -> f64 {
    let t = t.abs();
    if t < 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source indices (already edge-clamped) and normalized weights of one output sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Taps {
    pub index: Vec<usize>,
    pub weight: Vec<f64>,
}

/// Filter taps for resampling a line of `input` samples to `output` samples.
pub fn filter_taps(input: usize, output: usize) -> Vec<Taps> {
    let scale = input as f64 / output as f64;
    let stretch = scale.max(1.0);
    let support = 2.0 * stretch;
    (0..output)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale - 0.5;
            let lo = (center - support).ceil() as i64;
            let hi = (center + support).floor() as i64;
            let mut index = Vec::new();
            let mut weight = Vec::new();
            for j in lo..=hi {
                let w = catmull_rom((center - j as f64) / stretch);
                if w != 0.0 {
                    index.push(j.clamp(0, input as i64 - 1) as usize);
                    weight.push(w);
                }
            }
            let total: f64 = weight.iter().sum();
            weight.iter_mut().for_each(|w| *w /= total);
            Taps { index, weight }
        })
        .collect()
}

fn resize_planes(frame: &Frame, out_h: usize, out_w: usize) -> Result<Vec<f64>> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::geometry("bicubic_resize", format!("output size {out_h}×{out_w}")));
    }
    let (h, w) = (frame.height, frame.width);
    let tx = filter_taps(w, out_w);
    let ty = filter_taps(h, out_h);
    let mut out = Vec::with_capacity(frame.channels * out_h * out_w);
    let mut rows = vec![0.0f64; h * out_w];
    for c in 0..frame.channels {
        let p = frame.plane(c);
        for y in 0..h {
            let src = &p[y * w..(y + 1) * w];
            for (x, t) in tx.iter().enumerate() {
                rows[y * out_w + x] = t.index.iter().zip(&t.weight).map(|(&j, &wt)| src[j] as f64 * wt).sum();
            }
        }
        for t in &ty {
            for x in 0..out_w {
                out.push(t.index.iter().zip(&t.weight).map(|(&j, &wt)| rows[j * out_w + x] * wt).sum());
            }
        }
    }
    Ok(out)
}

/// Bicubic resize of every channel to `out_h × out_w`, clamped to `[0, 1]`.
pub fn bicubic_resize(frame: &Frame, out_h: usize, out_w: usize) -> Result<Frame> {
    let data = resize_planes(frame, out_h, out_w)?
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0) as f32)
        .collect();
    Frame::new(frame.channels, out_h, out_w, data)
}

/// The same linear operator without the final clamp, in double precision.
pub fn bicubic_resize_unclamped(frame: &Frame, out_h: usize, out_w: usize) -> Result<Vec<f64>> {
    resize_planes(frame, out_h, out_w)
}
