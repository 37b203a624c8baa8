//! 3D channel-spatial attention (CSA).
//!
//! A channel gate computed from globally pooled statistics rescales each
//! feature channel; a spatial-temporal gate computed from channel-pooled maps
//! then rescales each `(d, h, w)` position.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::layers::Conv3d;
use crate::param::{Init, ParamTensor, Params};
use crate::tensor::{add, channel_pool, concat, global_pool3d, mul, sigmoid, ConvSpec, PoolMode, Real, Tensor};

pub const SPATIAL_KERNEL: [usize; 3] = [3, 7, 7];
pub const SPATIAL_PADDING: [usize; 3] = [1, 3, 3];

#[derive(Clone, Debug)]
pub struct CsaParams<T: Real> {
    /// `C→C`, kernel 1×1×1, shared by the average and max paths.
    pub channel_conv: Conv3d<T>,
    /// `2→1`, kernel 3×7×7.
    pub spatial_conv: Conv3d<T>,
}

impl<T: Real> CsaParams<T> {
    pub fn new(init: &mut Init, name: &str, channels: usize) -> Result<Self> {
        Ok(CsaParams {
            channel_conv: Conv3d::new(init, &format!("{name}.channel_conv"), channels, channels, [1, 1, 1], ConvSpec::valid())?,
            spatial_conv: Conv3d::new(
                init,
                &format!("{name}.spatial_conv"),
                2,
                1,
                SPATIAL_KERNEL,
                ConvSpec::new([1, 1, 1], SPATIAL_PADDING),
            )?,
        })
    }

    pub fn channels(&self) -> usize {
        self.channel_conv.weight.shape().n
    }
}

impl<T: Real> Params<T> for CsaParams<T> {
    fn visit(&self, f: &mut dyn FnMut(&ParamTensor<T>)) {
        self.channel_conv.visit(f);
        self.spatial_conv.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<T>)) {
        self.channel_conv.visit_mut(f);
        self.spatial_conv.visit_mut(f);
    }
}

/// `M_c = σ(f(avg(F)) + f(max(F)))`, shape `N×C×1×1×1`.
pub fn channel_attention<T: Real>(f3d: &Tensor<T>, params: &CsaParams<T>) -> Result<Tensor<T>> {
    let avg = params.channel_conv.forward(&global_pool3d(f3d, PoolMode::Avg))?;
    let max = params.channel_conv.forward(&global_pool3d(f3d, PoolMode::Max))?;
    Ok(sigmoid(&add(&avg, &max)?))
}

/// `M_s = σ(f([avg_c(F'); max_c(F')]))`, shape `N×1×D×H×W`.
pub fn spatial_attention<T: Real>(f_prime: &Tensor<T>, params: &CsaParams<T>) -> Result<Tensor<T>> {
    let avg = channel_pool(f_prime, PoolMode::Avg);
    let max = channel_pool(f_prime, PoolMode::Max);
    let stacked = concat(&[&avg, &max], 1)?;
    Ok(sigmoid(&params.spatial_conv.forward(&stacked)?))
}

/// Intermediate maps of one CSA application.
#[derive(Clone, Debug)]
pub struct CsaTrace<T: Real> {
    pub channel_map: Tensor<T>,
    pub spatial_map: Tensor<T>,
    pub output: Tensor<T>,
}

pub fn csa_trace<T: Real>(f3d: &Tensor<T>, params: &CsaParams<T>) -> Result<CsaTrace<T>> {
    let channel_map = channel_attention(f3d, params)?;
    let f_prime = mul(&channel_map, f3d)?;
    let spatial_map = spatial_attention(&f_prime, params)?;
    let output = mul(&spatial_map, &f_prime)?;
    Ok(CsaTrace {
        channel_map,
        spatial_map,
        output,
    })
}

/// `F'' = M_s(F') ⊗ F'` with `F' = M_c(F) ⊗ F`.
pub fn csa_apply<T: Real>(f3d: &Tensor<T>, params: &CsaParams<T>) -> Result<Tensor<T>> {
    Ok(csa_trace(f3d, params)?.output)
}

/// Writes `map` as raw little-endian f32 to `path` and its shape as
/// `n c d h w` to `path.shape`. Returns the sidecar path.
pub fn dump_attention_map<T: Real>(path: &Path, map: &Tensor<T>) -> Result<PathBuf> {
    let mut bytes = Vec::with_capacity(map.len() * 4);
    for &v in map.data() {
        bytes.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".shape");
    let sidecar = PathBuf::from(sidecar);
    let [n, c, d, h, w] = map.shape().dims();
    fs::write(&sidecar, format!("{n} {c} {d} {h} {w}\n")).map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::RngSeed;
    use crate::tensor::Shape5;

    fn params(c: usize) -> CsaParams<f64> {
        CsaParams::new(&mut Init::new(RngSeed(5), 0), "csa", c).unwrap()
    }

    #[test]
    fn shapes() {
        let p = params(8);
        let x = Tensor::<f64>::from_fn(Shape5::of(2, 8, 3, 4, 5), |i| (i.iter().sum::<usize>() % 7) as f64 / 7.0).unwrap();
        let t = csa_trace(&x, &p).unwrap();
        assert_eq!(t.channel_map.shape(), Shape5::of(2, 8, 1, 1, 1));
        assert_eq!(t.spatial_map.shape(), Shape5::of(2, 1, 3, 4, 5));
        assert_eq!(t.output.shape(), x.shape());
    }

    #[test]
    fn channel_mismatch_is_error() {
        let p = params(4);
        let x = Tensor::<f64>::zeros(Shape5::of(1, 3, 2, 2, 2)).unwrap();
        assert!(matches!(channel_attention(&x, &p), Err(Error::Dimension { axis: "c", .. })));
    }

    #[test]
    fn dump_writes_raw_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let m = Tensor::<f64>::new(Shape5::of(1, 2, 1, 1, 1), vec![0.25, 0.75]).unwrap();
        let path = dir.path().join("mc.f32");
        let side = dump_attention_map(&path, &m).unwrap();
        let raw = fs::read(&path).unwrap();
        assert_eq!(raw.len(), 8);
        assert_eq!(f32::from_le_bytes(raw[4..8].try_into().unwrap()), 0.75);
        assert_eq!(fs::read_to_string(side).unwrap(), "1 2 1 1 1\n");
    }
}
