//! Loop oracles shared by the integration tests.
#![allow(dead_code)]

use attgan3d::data::Frame;
use attgan3d::tensor::{Shape5, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random(shape: Shape5, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let data = (0..shape.numel()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(shape, data).unwrap()
}

pub fn idx(s: Shape5, i: [usize; 5]) -> usize {
    let st = s.strides();
    i.iter().zip(st).map(|(a, b)| a * b).sum()
}

/// Direct summation over every output and kernel tap.
pub fn conv3d_oracle(x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64], stride: [usize; 3], pad: [usize; 3]) -> (Shape5, Vec<f64>) {
    let (xs, ws) = (x.shape(), w.shape());
    let out_dim = |i: usize, k: usize, a: usize| (i + 2 * pad[a] - k) / stride[a] + 1;
    let os = Shape5::new(
        xs.n,
        ws.n,
        out_dim(xs.d, ws.d, 0),
        out_dim(xs.h, ws.h, 1),
        out_dim(xs.w, ws.w, 2),
    )
    .unwrap();
    let mut out = vec![0.0; os.numel()];
    for n in 0..os.n {
        for co in 0..os.c {
            for z in 0..os.d {
                for y in 0..os.h {
                    for xx in 0..os.w {
                        let mut acc = b[co];
                        for ci in 0..xs.c {
                            for kz in 0..ws.d {
                                for ky in 0..ws.h {
                                    for kx in 0..ws.w {
                                        let iz = (z * stride[0] + kz) as isize - pad[0] as isize;
                                        let iy = (y * stride[1] + ky) as isize - pad[1] as isize;
                                        let ix = (xx * stride[2] + kx) as isize - pad[2] as isize;
                                        if iz < 0 || iy < 0 || ix < 0 {
                                            continue;
                                        }
                                        let (iz, iy, ix) = (iz as usize, iy as usize, ix as usize);
                                        if iz >= xs.d || iy >= xs.h || ix >= xs.w {
                                            continue;
                                        }
                                        acc += x.data()[idx(xs, [n, ci, iz, iy, ix])]
                                            * w.data()[idx(ws, [co, ci, kz, ky, kx])];
                                    }
                                }
                            }
                        }
                        out[idx(os, [n, co, z, y, xx])] = acc;
                    }
                }
            }
        }
    }
    (os, out)
}

pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

pub fn random_geometry(rng: &mut ChaCha8Rng, depth: bool) -> (Shape5, Shape5, [usize; 3], [usize; 3]) {
    loop {
        let n = rng.random_range(1..=2);
        let cin = rng.random_range(1..=3);
        let cout = rng.random_range(1..=3);
        let dims: [usize; 3] = [
            if depth { rng.random_range(1..=6) } else { 1 },
            rng.random_range(1..=6),
            rng.random_range(1..=6),
        ];
        let k: [usize; 3] = [
            if depth { rng.random_range(1..=3) } else { 1 },
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        ];
        let s: [usize; 3] = [
            if depth { rng.random_range(1..=2) } else { 1 },
            rng.random_range(1..=2),
            rng.random_range(1..=2),
        ];
        let p: [usize; 3] = [
            if depth { rng.random_range(0..k[0]) } else { 0 },
            rng.random_range(0..k[1]),
            rng.random_range(0..k[2]),
        ];
        if (0..3).all(|a| dims[a] + 2 * p[a] >= k[a]) {
            return (
                Shape5::of(n, cin, dims[0], dims[1], dims[2]),
                Shape5::of(cout, cin, k[0], k[1], k[2]),
                s,
                p,
            );
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn psnr_oracle(x: &Frame, y: &Frame, peak: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.data.len() {
        let d = x.data[i] as f64 - y.data[i] as f64;
        sum += d * d;
    }
    10.0 * (peak * peak / (sum / x.data.len() as f64)).log10()
}

/// Direct 2D windows with two-pass statistics.
pub fn ssim_oracle(x: &Frame, y: &Frame, peak: f64) -> f64 {
    let (h, w) = (x.height, x.width);
    let mut kern = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (i, row) in kern.iter_mut().enumerate() {
        for (j, k) in row.iter_mut().enumerate() {
            let r2 = (i as f64 - 5.0).powi(2) + (j as f64 - 5.0).powi(2);
            *k = (-r2 / (2.0 * 1.5 * 1.5)).exp();
            total += *k;
        }
    }
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let at = |f: &Frame, r: usize, c: usize| f.data[r * w + c] as f64;
    let mut acc = 0.0;
    let mut count = 0;
    for r0 in 0..=h - 11 {
        for c0 in 0..=w - 11 {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let k = kern[i][j] / total;
                    mx += k * at(x, r0 + i, c0 + j);
                    my += k * at(y, r0 + i, c0 + j);
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let k = kern[i][j] / total;
                    let dx = at(x, r0 + i, c0 + j) - mx;
                    let dy = at(y, r0 + i, c0 + j) - my;
                    vx += k * dx * dx;
                    vy += k * dy * dy;
                    cxy += k * dx * dy;
                }
            }
            acc += (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    acc / count as f64
}
