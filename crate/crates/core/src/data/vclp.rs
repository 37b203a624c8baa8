//! Raw clip files.
//!
//! Layout (little-endian): magic `VCLP`, u32 version, u32 frames,
//! u32 channels, u32 height, u32 width, u8 sample format (0 = f32, 1 = u8),
//! then samples frame-major, channel-major, row-major.

use std::fs;
use std::path::Path;

use super::VideoClip;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"VCLP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 5 + 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SampleFormat {
    #[default]
    F32,
    /// `round(v·255)` per sample.
    U8,
}

impl SampleFormat {
    fn tag(self) -> u8 {
        match self {
            SampleFormat::F32 => 0,
            SampleFormat::U8 => 1,
        }
    }

    fn width(self) -> usize {
        match self {
            SampleFormat::F32 => 4,
            SampleFormat::U8 => 1,
        }
    }
}

pub fn encode(clip: &VideoClip, format: SampleFormat) -> Result<Vec<u8>> {
    let dims = [clip.frames, clip.channels, clip.height, clip.width];
    let mut out = Vec::with_capacity(HEADER_LEN + clip.data.len() * format.width());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::DimensionOverflow(format!("clip axis {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.push(format.tag());
    match format {
        SampleFormat::F32 => clip.data.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        SampleFormat::U8 => out.extend(clip.data.iter().map(|&v| (v * 255.0).round() as u8)),
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<VideoClip> {
    if bytes.len() < 4 {
        return Err(Error::Truncated("clip magic"));
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic {
            expected: MAGIC,
            found: magic,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated("clip header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let version = word(0);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: VERSION,
        });
    }
    let [frames, channels, height, width] = [word(1), word(2), word(3), word(4)].map(|v| v as usize);
    let format = match bytes[HEADER_LEN - 1] {
        0 => SampleFormat::F32,
        1 => SampleFormat::U8,
        t => return Err(Error::Malformed(format!("unknown sample format {t}"))),
    };
    let count = [frames, channels, height, width]
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .and_then(|n| n.checked_mul(format.width()).map(|b| (n, b)))
        .filter(|&(_, b)| b <= isize::MAX as usize);
    let (count, nbytes) =
        count.ok_or_else(|| Error::DimensionOverflow(format!("{frames}×{channels}×{height}×{width}")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < nbytes {
        return Err(Error::Truncated("clip samples"));
    }
    if payload.len() > nbytes {
        return Err(Error::Malformed(format!("{} trailing bytes", payload.len() - nbytes)));
    }
    let data: Vec<f32> = match format {
        SampleFormat::F32 => payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
        SampleFormat::U8 => payload.iter().map(|&q| q as f32 / 255.0).collect(),
    };
    debug_assert_eq!(data.len(), count);
    VideoClip::new(frames, channels, height, width, data).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn write_video(path: &Path, clip: &VideoClip, format: SampleFormat) -> Result<()> {
    fs::write(path, encode(clip, format)?).map_err(|e| Error::io(path, e))
}

pub fn read_video(path: &Path) -> Result<VideoClip> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
