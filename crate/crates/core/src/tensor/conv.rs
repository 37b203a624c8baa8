//! 3D convolution, its transpose, and the 2D special case.
//!
//! Both directions lower to GEMM over an unfolded ("im2col") patch matrix
//! with one row per `(channel, kd, kh, kw)` tap and one column per output
//! position. Cross-correlation convention: kernels are not flipped.

use super::{gemm, GradFn, Real, Shape5, Tensor};
use crate::error::{Error, Result};

/// Stride and zero padding along (d, h, w).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub stride: [usize; 3],
    pub padding: [usize; 3],
}

impl ConvSpec {
    pub const fn new(stride: [usize; 3], padding: [usize; 3]) -> Self {
        ConvSpec { stride, padding }
    }

    /// Stride 1, no padding.
    pub const fn valid() -> Self {
        ConvSpec::new([1, 1, 1], [0, 0, 0])
    }

    /// Stride 1, padding 1: shape-preserving for 3-wide kernels.
    pub const fn same3() -> Self {
        ConvSpec::new([1, 1, 1], [1, 1, 1])
    }
}

const VOL_AXES: [&str; 3] = ["d", "h", "w"];

/// Unfolding geometry for one batch item: `channels × big` volume read with
/// kernel `k`, stride `s`, padding `p`, producing an `small` output grid.
#[derive(Clone, Copy, Debug)]
struct Geom {
    channels: usize,
    big: [usize; 3],
    k: [usize; 3],
    s: [usize; 3],
    p: [usize; 3],
    small: [usize; 3],
}

impl Geom {
    fn rows(&self) -> usize {
        self.channels * self.k.iter().product::<usize>()
    }

    fn cols(&self) -> usize {
        self.small.iter().product()
    }

    fn big_volume(&self) -> usize {
        self.big.iter().product()
    }

    /// Output positions `o` along `axis` whose tap `kk` lands inside the input.
    fn valid_range(&self, axis: usize, kk: usize) -> (usize, usize) {
        let (s, p, n_in, n_out) = (self.s[axis], self.p[axis], self.big[axis], self.small[axis]);
        // need 0 <= o*s + kk - p < n_in
        let lo = if kk >= p { 0 } else { (p - kk).div_ceil(s) };
        let hi = if n_in + p > kk {
            ((n_in + p - kk - 1) / s + 1).min(n_out)
        } else {
            0
        };
        (lo.min(hi), hi)
    }
}

/// Calls `f(col, src, len, step)` for every run of in-bounds (tap, output)
/// pairs along w: `len` patch entries starting at `col` map to input offsets
/// `src, src + step, ...`. Out-of-bounds pairs are skipped (zero padding).
fn for_each_tap(g: &Geom, mut f: impl FnMut(usize, usize, usize, usize)) {
    let [_, oh, ow] = g.small;
    let [id, ih, iw] = g.big;
    let plane = ih * iw;
    let ncols = g.cols();
    let mut row = 0;
    for c in 0..g.channels {
        let cbase = c * id * plane;
        for kz in 0..g.k[0] {
            let (z0, z1) = g.valid_range(0, kz);
            for ky in 0..g.k[1] {
                let (y0, y1) = g.valid_range(1, ky);
                for kx in 0..g.k[2] {
                    let (x0, x1) = g.valid_range(2, kx);
                    let rbase = row * ncols;
                    if x0 < x1 {
                        for oz in z0..z1 {
                            let iz = oz * g.s[0] + kz - g.p[0];
                            for oy in y0..y1 {
                                let iy = oy * g.s[1] + ky - g.p[1];
                                let col = rbase + (oz * oh + oy) * ow + x0;
                                let src = cbase + iz * plane + iy * iw + x0 * g.s[2] + kx - g.p[2];
                                f(col, src, x1 - x0, g.s[2]);
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

fn im2col<T: Real>(x: &[T], g: &Geom) -> Vec<T> {
    let mut cols = vec![T::zero(); g.rows() * g.cols()];
    for_each_tap(g, |col, src, len, step| {
        let dst = &mut cols[col..col + len];
        if step == 1 {
            dst.copy_from_slice(&x[src..src + len]);
        } else {
            for (i, v) in dst.iter_mut().enumerate() {
                *v = x[src + i * step];
            }
        }
    });
    cols
}

fn col2im<T: Real>(cols: &[T], g: &Geom, x: &mut [T]) {
    for_each_tap(g, |col, src, len, step| {
        for i in 0..len {
            let xi = src + i * step;
            x[xi] = x[xi] + cols[col + i];
        }
    });
}

fn check_stride(op: &'static str, spec: &ConvSpec) -> Result<()> {
    if let Some(axis) = spec.stride.iter().position(|&s| s == 0) {
        return Err(Error::geometry(op, format!("stride along {} must be >= 1", VOL_AXES[axis])));
    }
    Ok(())
}

fn check_bias<T: Real>(op: &'static str, bias: Option<&Tensor<T>>, cout: usize) -> Result<()> {
    match bias {
        Some(b) if b.len() != cout => Err(Error::Dimension {
            op,
            axis: "bias",
            expected: cout,
            got: b.len(),
        }),
        _ => Ok(()),
    }
}

fn add_bias<T: Real>(out: &mut [T], bias: Option<&Tensor<T>>, n: usize, cout: usize, vol: usize) {
    if let Some(b) = bias {
        let b = b.data();
        for batch in 0..n {
            for (co, &bv) in b.iter().enumerate().take(cout) {
                let start = (batch * cout + co) * vol;
                out[start..start + vol].iter_mut().for_each(|v| *v = *v + bv);
            }
        }
    }
}

fn bias_grad<T: Real>(g: &[T], n: usize, cout: usize, vol: usize) -> Vec<T> {
    let mut gb = vec![T::zero(); cout];
    for batch in 0..n {
        for (co, acc) in gb.iter_mut().enumerate() {
            let start = (batch * cout + co) * vol;
            *acc = g[start..start + vol].iter().fold(*acc, |a, &v| a + v);
        }
    }
    gb
}

fn vol3(s: Shape5) -> [usize; 3] {
    [s.d, s.h, s.w]
}

struct Conv3d {
    geom: Geom,
    n: usize,
    cout: usize,
}

impl<T: Real> GradFn<T> for Conv3d {
    fn name(&self) -> &'static str {
        "conv3d"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let (x, w) = (&p[0], &p[1]);
        let geom = &self.geom;
        let (rows, cols) = (geom.rows(), geom.cols());
        let in_vol = geom.channels * geom.big_volume();
        let out_vol = self.cout * cols;
        let mut gx = x.requires_grad().then(|| vec![T::zero(); x.len()]);
        let mut gw = w.requires_grad().then(|| vec![T::zero(); w.len()]);
        for b in 0..self.n {
            let gout = &g[b * out_vol..(b + 1) * out_vol];
            if let Some(gw) = gw.as_mut() {
                let patches = im2col(&x.data()[b * in_vol..(b + 1) * in_vol], geom);
                gemm(self.cout, cols, rows, gout, false, &patches, true, T::one(), gw);
            }
            if let Some(gx) = gx.as_mut() {
                let mut gcols = vec![T::zero(); rows * cols];
                gemm(rows, self.cout, cols, w.data(), true, gout, false, T::zero(), &mut gcols);
                col2im(&gcols, geom, &mut gx[b * in_vol..(b + 1) * in_vol]);
            }
        }
        let mut grads = vec![gx, gw];
        if let Some(bias) = p.get(2) {
            grads.push(bias.requires_grad().then(|| bias_grad(g, self.n, self.cout, cols)));
        }
        grads
    }
}

/// 3D cross-correlation.
///
/// `input` is `N×Cin×D×H×W`, `weight` is `Cout×Cin×kd×kh×kw`, `bias` has
/// `Cout` entries. Output extent per axis is `(in + 2p − k)/s + 1`.
pub fn conv3d<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    spec: ConvSpec,
) -> Result<Tensor<T>> {
    const OP: &str = "conv3d";
    check_stride(OP, &spec)?;
    let (xs, ws) = (input.shape(), weight.shape());
    if xs.c != ws.c {
        return Err(Error::Dimension {
            op: OP,
            axis: "c",
            expected: ws.c,
            got: xs.c,
        });
    }
    let (cout, big, k) = (ws.n, vol3(xs), vol3(ws));
    check_bias(OP, bias, cout)?;
    let mut small = [0; 3];
    for axis in 0..3 {
        let padded = big[axis] + 2 * spec.padding[axis];
        if k[axis] > padded {
            return Err(Error::geometry(
                OP,
                format!(
                    "kernel {} exceeds padded input {} along {}",
                    k[axis], padded, VOL_AXES[axis]
                ),
            ));
        }
        small[axis] = (padded - k[axis]) / spec.stride[axis] + 1;
    }
    let geom = Geom {
        channels: xs.c,
        big,
        k,
        s: spec.stride,
        p: spec.padding,
        small,
    };
    let out_shape = Shape5::new(xs.n, cout, small[0], small[1], small[2])?;
    let (rows, cols) = (geom.rows(), geom.cols());
    let in_vol = xs.c * xs.volume();
    let mut out = vec![T::zero(); out_shape.numel()];
    for b in 0..xs.n {
        let patches = im2col(&input.data()[b * in_vol..(b + 1) * in_vol], &geom);
        let dst = &mut out[b * cout * cols..(b + 1) * cout * cols];
        gemm(cout, rows, cols, weight.data(), false, &patches, false, T::zero(), dst);
    }
    add_bias(&mut out, bias, xs.n, cout, cols);
    let mut parents = vec![input.clone(), weight.clone()];
    parents.extend(bias.cloned());
    Ok(Tensor::from_op(
        out_shape,
        out,
        parents,
        Conv3d {
            geom,
            n: xs.n,
            cout,
        },
    ))
}

struct ConvTranspose3d {
    // Geometry of the adjoint convolution: reads the (large) output volume.
    geom: Geom,
    n: usize,
    cin: usize,
    cout: usize,
}

impl<T: Real> GradFn<T> for ConvTranspose3d {
    fn name(&self) -> &'static str {
        "conv_transpose3d"
    }

    fn backward(&self, g: &[T], _out: &[T], p: &[Tensor<T>]) -> Vec<Option<Vec<T>>> {
        let (x, w) = (&p[0], &p[1]);
        let geom = &self.geom;
        let (rows, cols) = (geom.rows(), geom.cols());
        let out_vol = self.cout * geom.big_volume();
        let in_vol = self.cin * cols;
        let mut gx = x.requires_grad().then(|| vec![T::zero(); x.len()]);
        let mut gw = w.requires_grad().then(|| vec![T::zero(); w.len()]);
        for b in 0..self.n {
            let gcols = im2col(&g[b * out_vol..(b + 1) * out_vol], geom);
            if let Some(gx) = gx.as_mut() {
                let dst = &mut gx[b * in_vol..(b + 1) * in_vol];
                gemm(self.cin, rows, cols, w.data(), false, &gcols, false, T::zero(), dst);
            }
            if let Some(gw) = gw.as_mut() {
                let xb = &x.data()[b * in_vol..(b + 1) * in_vol];
                gemm(self.cin, cols, rows, xb, false, &gcols, true, T::one(), gw);
            }
        }
        let mut grads = vec![gx, gw];
        if let Some(bias) = p.get(2) {
            let vol = geom.big_volume();
            grads.push(bias.requires_grad().then(|| bias_grad(g, self.n, self.cout, vol)));
        }
        grads
    }
}

/// Transposed 3D convolution (the adjoint of [`conv3d`] in its input).
///
/// `input` is `N×Cin×D×H×W`, `weight` is `Cin×Cout×kd×kh×kw`. Output extent
/// per axis is `(in − 1)·s − 2p + k`.
pub fn conv_transpose3d<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    spec: ConvSpec,
) -> Result<Tensor<T>> {
    const OP: &str = "conv_transpose3d";
    check_stride(OP, &spec)?;
    let (xs, ws) = (input.shape(), weight.shape());
    if xs.c != ws.n {
        return Err(Error::Dimension {
            op: OP,
            axis: "c",
            expected: ws.n,
            got: xs.c,
        });
    }
    let (cin, cout, small, k) = (ws.n, ws.c, vol3(xs), vol3(ws));
    check_bias(OP, bias, cout)?;
    let mut big = [0; 3];
    for axis in 0..3 {
        let p = spec.padding[axis];
        if p >= k[axis] {
            return Err(Error::geometry(
                OP,
                format!("padding {} must be below kernel {} along {}", p, k[axis], VOL_AXES[axis]),
            ));
        }
        let span = (small[axis] - 1) * spec.stride[axis] + k[axis];
        if span <= 2 * p {
            return Err(Error::geometry(OP, format!("zero output extent along {}", VOL_AXES[axis])));
        }
        big[axis] = span - 2 * p;
    }
    let geom = Geom {
        channels: cout,
        big,
        k,
        s: spec.stride,
        p: spec.padding,
        small,
    };
    let out_shape = Shape5::new(xs.n, cout, big[0], big[1], big[2])?;
    let (rows, cols) = (geom.rows(), geom.cols());
    let out_vol = cout * geom.big_volume();
    let in_vol = cin * cols;
    let mut out = vec![T::zero(); out_shape.numel()];
    let mut patches = vec![T::zero(); rows * cols];
    for b in 0..xs.n {
        let xb = &input.data()[b * in_vol..(b + 1) * in_vol];
        gemm(rows, cin, cols, weight.data(), true, xb, false, T::zero(), &mut patches);
        col2im(&patches, &geom, &mut out[b * out_vol..(b + 1) * out_vol]);
    }
    add_bias(&mut out, bias, xs.n, cout, geom.big_volume());
    let mut parents = vec![input.clone(), weight.clone()];
    parents.extend(bias.cloned());
    Ok(Tensor::from_op(
        out_shape,
        out,
        parents,
        ConvTranspose3d {
            geom,
            n: xs.n,
            cin,
            cout,
        },
    ))
}

/// 2D cross-correlation on `N×C×1×H×W` tensors with `Cout×Cin×1×kh×kw` kernels.
pub fn conv2d<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    stride: [usize; 2],
    padding: [usize; 2],
) -> Result<Tensor<T>> {
    for (t, what) in [(input, "input"), (weight, "weight")] {
        if t.shape().d != 1 {
            return Err(Error::geometry("conv2d", format!("{what} must have d = 1, got {}", t.shape().d)));
        }
    }
    let spec = ConvSpec::new([1, stride[0], stride[1]], [0, padding[0], padding[1]]);
    conv3d(input, weight, bias, spec)
}
