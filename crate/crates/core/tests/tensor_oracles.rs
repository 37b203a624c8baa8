//! Tensor ops checked against brute-force loop oracles and finite differences.

mod common;

use attgan3d::Error;
use attgan3d::tensor::gradcheck::{finite_diff_check, FdOptions};
use attgan3d::tensor::{
    batch_norm, channel_pool, conv2d, conv3d, conv_transpose3d, fully_connected, global_pool3d, leaky_relu, mse,
    prelu, sigmoid, BnMode, ConvSpec, PoolMode, RunningStats, Shape5, Tensor,
};
use common::{conv3d_oracle, dot, idx, max_rel, random, random_geometry};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn conv3d_matches_loop_oracle_on_reference_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random(Shape5::of(2, 3, 4, 5, 6), &mut rng);
    let w = random(Shape5::of(4, 3, 3, 3, 3), &mut rng);
    let b = random(Shape5::vector(4), &mut rng);
    let spec = ConvSpec::new([1, 2, 2], [1, 1, 1]);
    let y = conv3d(&x, &w, Some(&b), spec).unwrap();
    let (os, expected) = conv3d_oracle(&x, &w, b.data(), spec.stride, spec.padding);
    assert_eq!(y.shape(), os);
    assert!(max_rel(y.data(), &expected) <= 1e-8);
}

#[test]
fn conv3d_and_conv2d_match_oracle_on_fifty_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for depth in [true, false] {
        for _ in 0..50 {
            let (xs, ws, s, p) = random_geometry(&mut rng, depth);
            let x = random(xs, &mut rng);
            let w = random(ws, &mut rng);
            let b = random(Shape5::vector(ws.n), &mut rng);
            let y = if depth {
                conv3d(&x, &w, Some(&b), ConvSpec::new(s, p)).unwrap()
            } else {
                conv2d(&x, &w, Some(&b), [s[1], s[2]], [p[1], p[2]]).unwrap()
            };
            let (os, expected) = conv3d_oracle(&x, &w, b.data(), s, p);
            assert_eq!(y.shape(), os);
            assert!(max_rel(y.data(), &expected) <= 1e-8, "{xs} {ws} {s:?} {p:?}");
        }
    }
}

#[test]
fn transposed_conv_is_adjoint_of_conv() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 50 {
        let (xs, ws, s, p) = random_geometry(&mut rng, true);
        let x = random(xs, &mut rng);
        let w = random(ws, &mut rng);
        let spec = ConvSpec::new(s, p);
        let cx = conv3d(&x, &w, None, spec).unwrap();
        let y = random(cx.shape(), &mut rng);
        // conv weight Cout×Cin×k doubles as a transposed-conv weight mapping Cout → Cin.
        // transposed output drops trailing rows the strided conv never read,
        // and rejects padding as large as the kernel
        let ty = match conv_transpose3d(&y, &w, None, spec) {
            Ok(t) if t.shape() == xs => t,
            Ok(_) | Err(Error::Geometry { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let lhs = dot(cx.data(), y.data());
        let rhs = dot(x.data(), ty.data());
        checked += 1;
        assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn transposed_depth_geometry_gives_two_n_minus_one() {
    let x = Tensor::<f64>::zeros(Shape5::of(1, 1, 4, 2, 2)).unwrap();
    let w = Tensor::<f64>::zeros(Shape5::of(1, 1, 3, 1, 1)).unwrap();
    let y = conv_transpose3d(&x, &w, None, ConvSpec::new([2, 1, 1], [1, 0, 0])).unwrap();
    assert_eq!(y.shape().d, 7);
}

#[test]
fn pooling_matches_loop_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let x = random(Shape5::of(2, 3, 4, 5, 6), &mut rng);
    let s = x.shape();
    let avg = global_pool3d(&x, PoolMode::Avg);
    for n in 0..s.n {
        for c in 0..s.c {
            let mut sum = 0.0;
            for d in 0..s.d {
                for h in 0..s.h {
                    for w in 0..s.w {
                        sum += x.data()[idx(s, [n, c, d, h, w])];
                    }
                }
            }
            let pooled = avg.data()[n * s.c + c] * (s.volume() as f64);
            assert!((pooled - sum).abs() <= 1e-10);
        }
    }
    let cavg = channel_pool(&x, PoolMode::Avg);
    assert_eq!(cavg.shape(), Shape5::of(2, 1, 4, 5, 6));
    for n in 0..s.n {
        for d in 0..s.d {
            for h in 0..s.h {
                for w in 0..s.w {
                    let m: f64 = (0..s.c).map(|c| x.data()[idx(s, [n, c, d, h, w])]).sum::<f64>() / s.c as f64;
                    assert!((cavg.data()[idx(cavg.shape(), [n, 0, d, h, w])] - m).abs() <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn fully_connected_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let x = random(Shape5::matrix(3, 7), &mut rng);
    let w = random(Shape5::matrix(5, 7), &mut rng);
    let b = random(Shape5::vector(5), &mut rng);
    let y = fully_connected(&x, &w, &b).unwrap();
    for n in 0..3 {
        for m in 0..5 {
            let e: f64 = b.data()[m] + (0..7).map(|k| w.data()[m * 7 + k] * x.data()[n * 7 + k]).sum::<f64>();
            assert!((y.data()[n * 5 + m] - e).abs() <= 1e-10);
        }
    }
}

#[test]
fn batch_norm_train_output_is_standardized() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let x = random(Shape5::of(4, 3, 1, 5, 5), &mut rng);
    let g = Tensor::full(Shape5::vector(3), 1.0).unwrap();
    let b = Tensor::zeros(Shape5::vector(3)).unwrap();
    let mut rs = RunningStats::new(3);
    let y = batch_norm(&x, &g, &b, &mut rs, BnMode::Train).unwrap();
    for c in 0..3 {
        let vals: Vec<f64> = (0..4)
            .flat_map(|n| (0..25).map(move |i| (n, i)))
            .map(|(n, i)| y.data()[(n * 3 + c) * 25 + i])
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-6);
        // epsilon shrinks the variance slightly below 1
        assert!((var - 1.0).abs() < 1e-3, "{var}");
    }
}

/// Random projection keeps the scalar well conditioned.
fn project(y: &Tensor<f64>, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random(y.shape(), &mut rng);
    attgan3d::tensor::mul(y, &w).unwrap().sum()
}

fn check(name: &str, f: impl Fn(&[Tensor<f64>]) -> attgan3d::Result<Tensor<f64>>, inputs: &[Tensor<f64>]) {
    let r = finite_diff_check(f, inputs, FdOptions::default()).unwrap();
    assert!(r.pass, "{name}: max rel err {} at {:?}", r.max_rel_err, r.worst);
}

#[test]
fn gradients_of_every_op_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let x = random(Shape5::of(2, 2, 3, 4, 4), &mut rng);
    let w = random(Shape5::of(3, 2, 3, 3, 3), &mut rng);
    let b = random(Shape5::vector(3), &mut rng);
    check(
        "conv3d",
        |t| Ok(project(&conv3d(&t[0], &t[1], Some(&t[2]), ConvSpec::new([1, 2, 2], [1, 1, 1]))?, 1)),
        &[x.clone(), w, b],
    );

    let wt = random(Shape5::of(2, 3, 3, 4, 4), &mut rng);
    let bt = random(Shape5::vector(3), &mut rng);
    check(
        "conv_transpose3d",
        |t| Ok(project(&conv_transpose3d(&t[0], &t[1], Some(&t[2]), ConvSpec::new([2, 2, 2], [1, 1, 1]))?, 2)),
        &[x.clone(), wt, bt],
    );

    let x2 = random(Shape5::of(2, 2, 1, 6, 6), &mut rng);
    let w2 = random(Shape5::of(3, 2, 1, 3, 3), &mut rng);
    let b2 = random(Shape5::vector(3), &mut rng);
    check(
        "conv2d",
        |t| Ok(project(&conv2d(&t[0], &t[1], Some(&t[2]), [2, 2], [1, 1])?, 3)),
        &[x2.clone(), w2, b2],
    );

    for mode in [PoolMode::Avg, PoolMode::Max] {
        check("global_pool3d", |t| Ok(project(&global_pool3d(&t[0], mode), 4)), &[x.clone()]);
        check("channel_pool", |t| Ok(project(&channel_pool(&t[0], mode), 5)), &[x.clone()]);
    }

    check("sigmoid", |t| Ok(project(&sigmoid(&t[0]), 6)), &[x.clone()]);
    check("leaky_relu", |t| Ok(project(&leaky_relu(&t[0], 0.2), 7)), &[x.clone()]);
    let alpha = Tensor::new(Shape5::scalar(), vec![0.25]).unwrap();
    check("prelu", |t| Ok(project(&prelu(&t[0], &t[1])?, 8)), &[x.clone(), alpha]);

    let g = random(Shape5::vector(2), &mut rng);
    let be = random(Shape5::vector(2), &mut rng);
    let mut stats = RunningStats::new(2);
    stats.mean = vec![0.1, -0.2];
    stats.var = vec![0.8, 1.3];
    check(
        "batch_norm(eval)",
        |t| {
            let mut rs = stats.clone();
            Ok(project(&batch_norm(&t[0], &t[1], &t[2], &mut rs, BnMode::Eval)?, 9))
        },
        &[x2.clone(), g.clone(), be.clone()],
    );
    check(
        "batch_norm(train)",
        |t| {
            let mut rs = RunningStats::new(2);
            Ok(project(&batch_norm(&t[0], &t[1], &t[2], &mut rs, BnMode::Train)?, 10))
        },
        &[x2, g, be],
    );

    let v = random(Shape5::matrix(3, 6), &mut rng);
    let fw = random(Shape5::matrix(4, 6), &mut rng);
    let fb = random(Shape5::vector(4), &mut rng);
    check("fully_connected", |t| Ok(project(&fully_connected(&t[0], &t[1], &t[2])?, 11)), &[v, fw, fb]);

    let y = random(x.shape(), &mut rng);
    check("mse", |t| mse(&t[0], &t[1]), &[x, y]);
}

#[test]
fn conv3d_gradcheck_reference_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let x = random(Shape5::of(1, 2, 3, 3, 3), &mut rng);
    let w = random(Shape5::of(2, 2, 3, 3, 3), &mut rng);
    let opts = FdOptions {
        step: 1e-4,
        tolerance: 1e-4,
        ..FdOptions::default()
    };
    let r = finite_diff_check(|t| Ok(conv3d(&t[0], &t[1], None, ConvSpec::same3())?.square().sum()), &[x, w], opts).unwrap();
    assert!(r.pass, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unit_kernel_conv_is_exact_identity(n in 1usize..3, c in 1usize..3, d in 1usize..5, h in 1usize..6, w in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(Shape5::of(n, c, d, h, w), &mut rng);
        let k = Tensor::from_fn(Shape5::of(c, c, 1, 1, 1), |i| if i[0] == i[1] { 1.0 } else { 0.0 }).unwrap();
        let y = conv3d(&x, &k, None, ConvSpec::valid()).unwrap();
        prop_assert_eq!(y.data(), x.data());
    }

    #[test]
    fn sigmoid_range_is_open_unit_interval(v in proptest::collection::vec(-1e6f64..1e6, 1..64)) {
        let x = Tensor::new(Shape5::vector(v.len()), v).unwrap();
        prop_assert!(sigmoid(&x).data().iter().all(|&s| s > 0.0 && s < 1.0));
        let x32: Tensor<f32> = x.cast();
        prop_assert!(sigmoid(&x32).data().iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn forward_is_bit_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Tensor<f32> = random(Shape5::of(1, 2, 3, 5, 5), &mut rng).cast();
        let w: Tensor<f32> = random(Shape5::of(2, 2, 3, 3, 3), &mut rng).cast();
        let a = conv3d(&x, &w, None, ConvSpec::same3()).unwrap();
        let b = conv3d(&x, &w, None, ConvSpec::same3()).unwrap();
        prop_assert_eq!(a.data(), b.data());
    }
}
