mod common;

use attgan3d::data::{Frame, VideoClip};
use attgan3d::metrics::{evaluate_clip, mse, psnr, ssim, ColorMode, QualityReport};
use common::{psnr_oracle, ssim_oracle};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(h: usize, w: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Frame::new(1, h, w, (0..h * w).map(|_| rng.random::<f32>()).collect()).unwrap()
}

#[test]
fn uniform_error_psnr_closed_form() {
    let want = 20.0 * (255.0f64 / 16.0).log10();
    assert!((want - 24.0484).abs() < 1e-4);
    // Zero against 16/255: the only rounding is the f32 storage of 16/255.
    let c = Frame::new(1, 16, 16, vec![0.0; 256]).unwrap();
    let d = Frame::new(1, 16, 16, vec![16.0 / 255.0; 256]).unwrap();
    let got = psnr(&c, &d, 1.0).unwrap();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    // Same error on 8-bit codes with peak 255 is exact in f32.
    let c = Frame::new(1, 16, 16, (0..256).map(|i| (i % 200) as f32).collect()).unwrap();
    let d = Frame::new(1, 16, 16, c.data.iter().map(|v| v + 16.0).collect()).unwrap();
    assert!((psnr(&c, &d, 255.0).unwrap() - want).abs() < 1e-9);
}

#[test]
fn identical_frames() {
    let x = noise(20, 24, 2);
    assert_eq!(psnr(&x, &x, 1.0).unwrap(), f64::INFINITY);
    assert_eq!(ssim(&x, &x, 1.0).unwrap(), 1.0);
    assert_eq!(mse(&x, &x).unwrap(), 0.0);
}

#[test]
fn loop_oracles_on_random_frames() {
    for seed in 0..20 {
        let x = noise(16, 16, seed);
        let y = noise(16, 16, seed + 100);
        let (p, q) = (psnr(&x, &y, 1.0).unwrap(), psnr_oracle(&x, &y, 1.0));
        assert!((p - q).abs() <= 1e-8, "psnr {p} vs {q}");
        let (s, t) = (ssim(&x, &y, 1.0).unwrap(), ssim_oracle(&x, &y, 1.0));
        assert!((s - t).abs() <= 1e-8, "ssim {s} vs {t}");
    }
}

#[test]
fn constant_frames_ssim_closed_form() {
    let (v1, v2) = (0.3f32, 0.7f32);
    let a = Frame::new(1, 12, 12, vec![v1; 144]).unwrap();
    let b = Frame::new(1, 12, 12, vec![v2; 144]).unwrap();
    let (v1, v2) = (v1 as f64, v2 as f64);
    let c1 = 0.01f64.powi(2);
    let want = (2.0 * v1 * v2 + c1) / (v1 * v1 + v2 * v2 + c1);
    assert!((ssim(&a, &b, 1.0).unwrap() - want).abs() < 1e-10);
}

#[test]
fn inverted_checkerboard_has_low_ssim() {
    let x = Frame::new(1, 16, 16, (0..256).map(|i| ((i / 16 + i % 16) % 2) as f32).collect()).unwrap();
    let y = Frame::new(1, 16, 16, x.data.iter().map(|v| 1.0 - v).collect()).unwrap();
    let s = ssim(&x, &y, 1.0).unwrap();
    assert!(s < 0.5, "{s}");
    assert!(s >= -1.0);
}

#[test]
fn small_frames_rejected_by_ssim() {
    let x = noise(10, 16, 0);
    assert!(ssim(&x, &x, 1.0).is_err());
    assert!(psnr(&x, &noise(16, 10, 0), 1.0).is_err());
}

#[test]
fn single_frame_clip_mean_equals_frame_score() {
    let x = VideoClip::from_fn(1, 1, 16, 16, |_, _, y, x| ((x * 7 + y * 3) % 11) as f64 / 11.0).unwrap();
    let y = VideoClip::from_fn(1, 1, 16, 16, |_, _, y, x| ((x * 5 + y * 2) % 9) as f64 / 9.0).unwrap();
    let r = evaluate_clip(&x, &y, ColorMode::Luma, 0).unwrap();
    assert_eq!(r.mean_psnr, r.psnr[0]);
    assert_eq!(r.mean_ssim, r.ssim[0]);
}

#[test]
fn clip_report_averages_per_frame_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = VideoClip::from_fn(3, 3, 16, 16, |_, _, _, _| rng.random::<f64>()).unwrap();
    let y = VideoClip::from_fn(3, 3, 16, 16, |_, _, _, _| rng.random::<f64>()).unwrap();
    let r = evaluate_clip(&x, &y, ColorMode::RgbMean, 2).unwrap();
    for t in 0..3 {
        let (a, b) = (x.frame(t).crop_border(2).unwrap(), y.frame(t).crop_border(2).unwrap());
        assert_eq!(r.psnr[t], psnr(&a, &b, 1.0).unwrap());
        assert_eq!(r.ssim[t], ssim(&a, &b, 1.0).unwrap());
    }
    assert!((r.mean_psnr - r.psnr.iter().sum::<f64>() / 3.0).abs() < 1e-12);
    let luma = evaluate_clip(&x, &y, ColorMode::Luma, 0).unwrap();
    assert_eq!(luma.frames(), 3);
    let pooled = QualityReport::pooled(&[r.clone(), luma.clone()]).unwrap();
    assert_eq!(pooled.frames(), 6);
    assert!(r.to_tsv().lines().last().unwrap().starts_with("MEAN\t"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ssim_is_symmetric_and_bounded(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (noise(14, 13, a), noise(14, 13, b));
        let s = ssim(&x, &y, 1.0).unwrap();
        prop_assert!((s - ssim(&y, &x, 1.0).unwrap()).abs() < 1e-14);
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert_eq!(psnr(&x, &y, 1.0).unwrap(), psnr(&y, &x, 1.0).unwrap());
    }

    #[test]
    fn larger_error_lowers_scores(seed in any::<u64>(), k in 1.5f64..4.0) {
        let x = Frame::new(1, 16, 16, noise(16, 16, seed).data.iter().map(|v| 0.3 + 0.4 * v).collect()).unwrap();
        let e = noise(16, 16, seed ^ 7);
        let off = |s: f64| Frame::new(1, 16, 16, x.data.iter().zip(&e.data).map(|(v, n)| (*v as f64 + s * (*n as f64 - 0.5)) as f32).collect()).unwrap();
        let (near, far) = (off(0.02), off(0.02 * k));
        prop_assert!(psnr(&x, &near, 1.0).unwrap() > psnr(&x, &far, 1.0).unwrap());
        prop_assert!(ssim(&x, &near, 1.0).unwrap() > ssim(&x, &far, 1.0).unwrap());
    }

    #[test]
    fn psnr_ignores_joint_pixel_order(seed in any::<u64>()) {
        let (x, y) = (noise(8, 8, seed), noise(8, 8, seed ^ 3));
        let mut idx: Vec<usize> = (0..64).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let px = Frame::new(1, 8, 8, idx.iter().map(|&i| x.data[i]).collect()).unwrap();
        let py = Frame::new(1, 8, 8, idx.iter().map(|&i| y.data[i]).collect()).unwrap();
        prop_assert!((psnr(&x, &y, 1.0).unwrap() - psnr(&px, &py, 1.0).unwrap()).abs() < 1e-10);
    }
}
