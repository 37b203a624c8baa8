//! Versioned little-endian container of named arrays.
//!
//! Layout: magic `A3DG`, u32 version, u32 array count, then per array
//! u16 name length, UTF-8 name, u8 dtype (0 = f32, 1 = f64, 2 = u64),
//! u8 rank, `rank` × u64 dims, raw data; finally a u64 global step.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Real;

pub const MAGIC: [u8; 4] = *b"A3DG";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum ArrayData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U64(Vec<u64>),
}

impl ArrayData {
    pub fn tag(&self) -> u8 {
        match self {
            ArrayData::F32(_) => 0,
            ArrayData::F64(_) => 1,
            ArrayData::U64(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ArrayData::F32(v) => v.len(),
            ArrayData::F64(v) => v.len(),
            ArrayData::U64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn from_real<T: Real>(values: &[T]) -> Self {
        match T::DTYPE_TAG {
            0 => ArrayData::F32(values.iter().map(|v| v.as_f64() as f32).collect()),
            _ => ArrayData::F64(values.iter().map(|v| v.as_f64()).collect()),
        }
    }

    /// Values as `T`; the stored dtype must be `T`'s.
    pub fn to_real<T: Real>(&self, name: &str) -> Result<Vec<T>> {
        match (self, T::DTYPE_TAG) {
            (ArrayData::F32(v), 0) => Ok(v.iter().map(|&x| T::of(x as f64)).collect()),
            (ArrayData::F64(v), 1) => Ok(v.iter().map(|&x| T::of(x)).collect()),
            _ => Err(Error::Malformed(format!(
                "{name}: dtype tag {} does not match the requested precision",
                self.tag()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub dims: Vec<u64>,
    pub data: ArrayData,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub arrays: Vec<NamedArray>,
    pub step: u64,
}

impl Checkpoint {
    pub fn push(&mut self, name: impl Into<String>, dims: Vec<u64>, data: ArrayData) {
        self.arrays.push(NamedArray {
            name: name.into(),
            dims,
            data,
        });
    }

    pub fn push_u64(&mut self, name: impl Into<String>, v: u64) {
        self.push(name, vec![1], ArrayData::U64(vec![v]));
    }

    pub fn push_f64(&mut self, name: impl Into<String>, v: f64) {
        self.push(name, vec![1], ArrayData::F64(vec![v]));
    }

    pub fn get(&self, name: &str) -> Result<&NamedArray> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::MissingArray(name.to_string()))
    }

    pub fn u64(&self, name: &str) -> Result<u64> {
        match &self.get(name)?.data {
            ArrayData::U64(v) if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::Malformed(format!("{name}: expected one u64"))),
        }
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        match &self.get(name)?.data {
            ArrayData::F64(v) if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::Malformed(format!("{name}: expected one f64"))),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let count = u32::try_from(self.arrays.len()).map_err(|_| Error::Contract("too many arrays".into()))?;
        out.extend_from_slice(&count.to_le_bytes());
        for a in &self.arrays {
            let name = a.name.as_bytes();
            let len = u16::try_from(name.len()).map_err(|_| Error::Contract(format!("array name too long: {}", a.name)))?;
            let rank = u8::try_from(a.dims.len()).map_err(|_| Error::Contract(format!("{}: rank too large", a.name)))?;
            let numel = a.dims.iter().product::<u64>();
            if numel != a.data.len() as u64 {
                return Err(Error::Contract(format!(
                    "{}: dims hold {numel} elements but data has {}",
                    a.name,
                    a.data.len()
                )));
            }
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name);
            out.push(a.data.tag());
            out.push(rank);
            for d in &a.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            match &a.data {
                ArrayData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                ArrayData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                ArrayData::U64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            }
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                found: magic,
            });
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: VERSION,
            });
        }
        let count = r.u32("array count")?;
        let mut arrays = Vec::new();
        for _ in 0..count {
            let len = u16::from_le_bytes(r.take(2, "name length")?.try_into().expect("2 bytes")) as usize;
            let name = std::str::from_utf8(r.take(len, "array name")?)
                .map_err(|_| Error::Malformed("array name is not UTF-8".into()))?
                .to_string();
            let tag = r.take(1, "dtype")?[0];
            let rank = r.take(1, "rank")?[0] as usize;
            let dims = (0..rank).map(|_| r.u64("dims")).collect::<Result<Vec<_>>>()?;
            let numel = dims
                .iter()
                .try_fold(1u64, |a, &d| a.checked_mul(d))
                .and_then(|n| usize::try_from(n).ok())
                .ok_or_else(|| Error::Malformed(format!("{name}: dims overflow")))?;
            let width = match tag {
                0 => 4,
                1 | 2 => 8,
                _ => return Err(Error::Malformed(format!("{name}: unknown dtype tag {tag}"))),
            };
            let nbytes = numel
                .checked_mul(width)
                .ok_or_else(|| Error::Malformed(format!("{name}: dims overflow")))?;
            let raw = r.take(nbytes, "array data")?;
            let data = match tag {
                0 => ArrayData::F32(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()),
                1 => ArrayData::F64(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()),
                _ => ArrayData::U64(raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect()),
            };
            arrays.push(NamedArray { name, dims, data });
        }
        let step = r.u64("global step")?;
        if r.pos != bytes.len() {
            return Err(Error::Malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Checkpoint { arrays, step })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(Error::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}
