//! Video clips, the raw clip format, bicubic resampling, the degradation
//! model, patch sampling and synthetic clips.

mod dataset;
mod degrade;
mod resize;
mod sampler;
mod synth;
mod vclp;

pub use dataset::{DatasetIndex, IndexEntry};
pub use degrade::{crop_patches, degrade, degrade_for_mode, PatchSpec, DEGRADE_FACTOR};
pub use resize::{bicubic_resize, bicubic_resize_unclamped, catmull_rom, filter_taps, Taps};
pub use sampler::{FixedBatch, PatchSampler};
pub use synth::{synth_video, SynthKind};
pub use vclp::{decode as decode_video, encode as encode_video, read_video, write_video, SampleFormat};

use crate::error::{Error, Result};
use crate::tensor::{Real, Shape5, Tensor};

/// One frame: `channels × height × width`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Frame {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let expected = channels * height * width;
        if channels == 0 || height == 0 || width == 0 || data.len() != expected {
            return Err(Error::Contract(format!(
                "frame {channels}×{height}×{width} needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Frame {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// BT.601 luma of an RGB frame; single-channel frames are returned as is.
    pub fn luma(&self) -> Frame {
        if self.channels != 3 {
            return Frame {
                channels: 1,
                ..self.clone()
            };
        }
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        let data = (0..r.len())
            .map(|i| (0.299 * r[i] as f64 + 0.587 * g[i] as f64 + 0.114 * b[i] as f64) as f32)
            .collect();
        Frame {
            channels: 1,
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Removes `border` pixels from every side.
    pub fn crop_border(&self, border: usize) -> Result<Frame> {
        if border == 0 {
            return Ok(self.clone());
        }
        if 2 * border >= self.height || 2 * border >= self.width {
            return Err(Error::Contract(format!(
                "border {border} leaves nothing of a {}×{} frame",
                self.height, self.width
            )));
        }
        let (h, w) = (self.height - 2 * border, self.width - 2 * border);
        let mut data = Vec::with_capacity(self.channels * h * w);
        for c in 0..self.channels {
            let p = self.plane(c);
            for y in border..border + h {
                data.extend_from_slice(&p[y * self.width + border..y * self.width + border + w]);
            }
        }
        Frame::new(self.channels, h, w, data)
    }
}

/// A decoded clip with samples in `[0, 1]`, stored frame-major
/// (`frames × channels × height × width`).
#[derive(Clone, Debug, PartialEq)]
pub struct VideoClip {
    pub frames: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl VideoClip {
    pub fn new(frames: usize, channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let expected = frames
            .checked_mul(channels)
            .and_then(|v| v.checked_mul(height))
            .and_then(|v| v.checked_mul(width))
            .ok_or_else(|| Error::DimensionOverflow(format!("{frames}×{channels}×{height}×{width}")))?;
        if frames == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::Contract(format!(
                "clip dimensions must be >= 1, got {frames}×{channels}×{height}×{width}"
            )));
        }
        if data.len() != expected {
            return Err(Error::Contract(format!("clip needs {expected} samples, got {}", data.len())));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Contract(format!("clip sample {v} outside [0, 1]")));
        }
        Ok(VideoClip {
            frames,
            channels,
            height,
            width,
            data,
        })
    }

    /// Builds a clip from `f(t, c, y, x)`, clamping into `[0, 1]`.
    pub fn from_fn(
        frames: usize,
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(frames * channels * height * width);
        for t in 0..frames {
            for c in 0..channels {
                for y in 0..height {
                    for x in 0..width {
                        data.push(f(t, c, y, x).clamp(0.0, 1.0) as f32);
                    }
                }
            }
        }
        VideoClip::new(frames, channels, height, width, data)
    }

    pub fn frame_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn frame(&self, t: usize) -> Frame {
        let n = self.frame_len();
        Frame {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data[t * n..(t + 1) * n].to_vec(),
        }
    }

    pub fn from_frames(frames: &[Frame]) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::Contract("clip needs at least one frame".into()))?;
        let mut data = Vec::with_capacity(frames.len() * first.data.len());
        for f in frames {
            if (f.channels, f.height, f.width) != (first.channels, first.height, first.width) {
                return Err(Error::Contract("frames of a clip must share one geometry".into()));
            }
            data.extend_from_slice(&f.data);
        }
        VideoClip::new(frames.len(), first.channels, first.height, first.width, data)
    }

    pub fn shape(&self) -> Shape5 {
        Shape5::of(1, self.channels, self.frames, self.height, self.width)
    }

    /// `1×C×F×H×W` tensor (channel-major, as the networks expect).
    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        let s = self.shape();
        Tensor::from_fn(s, |[_, c, t, y, x]| {
            T::of(self.data[((t * self.channels + c) * self.height + y) * self.width + x] as f64)
        })
        .expect("clip geometry is a valid shape")
    }

    /// Batch item `n` of an `N×C×F×H×W` tensor, clamped into `[0, 1]`.
    pub fn from_tensor<T: Real>(t: &Tensor<T>, n: usize) -> Result<Self> {
        let s = t.shape();
        if n >= s.n {
            return Err(Error::Contract(format!("batch item {n} out of range for {s}")));
        }
        if !t.all_finite() {
            return Err(Error::NonFinite("clip tensor".into()));
        }
        VideoClip::from_fn(s.d, s.c, s.h, s.w, |f, c, y, x| t.at([n, c, f, y, x]).as_f64())
    }

    /// Copies a grayscale clip into `channels` identical channels.
    pub fn replicate_channels(&self, channels: usize) -> Result<Self> {
        if self.channels != 1 {
            return Err(Error::Contract("only single-channel clips can be replicated".into()));
        }
        VideoClip::from_fn(self.frames, channels, self.height, self.width, |t, _, y, x| {
            self.data[(t * self.height + y) * self.width + x] as f64
        })
    }
}

/// Stacks equally shaped clips into one `N×C×F×H×W` tensor.
pub fn stack_clips<T: Real>(clips: &[VideoClip]) -> Result<Tensor<T>> {
    let first = clips.first().ok_or_else(|| Error::Contract("empty batch".into()))?;
    let s = first.shape();
    if clips.iter().any(|c| c.shape() != s) {
        return Err(Error::Contract("clips in one batch must share a geometry".into()));
    }
    let mut data = Vec::with_capacity(clips.len() * s.numel());
    for c in clips {
        data.extend_from_slice(c.to_tensor::<T>().data());
    }
    Tensor::new(Shape5::of(clips.len(), s.c, s.d, s.h, s.w), data)
}
