//! Classical reference upscaler: bicubic spatial upscale, and missing frames
//! filled with the average of their two neighbours.

use crate::data::{bicubic_resize, Frame, VideoClip};
use crate::error::{Error, Result};
use crate::generator::SrMode;

fn blend(a: &Frame, b: &Frame) -> Frame {
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| ((x as f64 + y as f64) / 2.0) as f32).collect();
    Frame { data, ..a.clone() }
}

/// Upscales `lr` to the geometry the generator produces in `mode`.
pub fn baseline_upscale(lr: &VideoClip, mode: SrMode) -> Result<VideoClip> {
    if mode.upsamples_time() && lr.frames < 2 {
        return Err(Error::NeedsTwoFrames(lr.frames));
    }
    let f = mode.spatial_factor();
    let up = (0..lr.frames)
        .map(|t| {
            let fr = lr.frame(t);
            if f == 1 {
                Ok(fr)
            } else {
                bicubic_resize(&fr, lr.height * f, lr.width * f)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if !mode.upsamples_time() {
        return VideoClip::from_frames(&up);
    }
    let mut out = Vec::with_capacity(2 * up.len() - 1);
    for (k, fr) in up.iter().enumerate() {
        if k > 0 {
            out.push(blend(&up[k - 1], fr));
        }
        out.push(fr.clone());
    }
    VideoClip::from_frames(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_per_mode() {
        let lr = VideoClip::from_fn(4, 1, 8, 8, |t, _, _, _| t as f64 / 4.0).unwrap();
        let s = baseline_upscale(&lr, SrMode::Stsr).unwrap();
        assert_eq!((s.frames, s.height, s.width), (7, 32, 32));
        assert!(s.frame(1).data.iter().all(|&v| (v - 0.125).abs() < 1e-7));
        let s = baseline_upscale(&lr, SrMode::Ssr).unwrap();
        assert_eq!((s.frames, s.height), (4, 32));
        let s = baseline_upscale(&lr, SrMode::Tsr).unwrap();
        assert_eq!((s.frames, s.height), (7, 8));
        assert_eq!(s.frame(2), lr.frame(1));
    }
}
