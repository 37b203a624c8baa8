use std::path::Path;
use std::process::{Command, Output};

use attgan3d::data::{read_video, write_video, SampleFormat, VideoClip};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attgan3d"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(
        &p,
        format!(
            "# tiny model on tiny synthetic clips\n\
             feat_channels = 4\n\
             num_rabs = 1\n\
             patch_frames = 5\n\
             patch_height = 16\n\
             patch_width = 16\n\
             synth_clips = 2\n\
             synth_frames = 7\n\
             synth_height = 32\n\
             synth_width = 32\n\
             eval_clips = 1\n\
             steps = 3\n\
             checkpoint_out = {}\n",
            dir.join("model.ckpt").display()
        ),
    )
    .unwrap();
    p
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["train", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o.stderr));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.cfg");
    std::fs::write(&p, "steps = 2\nwarp_factor = 9\n").unwrap();
    let o = run(&["train", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("warp_factor"), "{}", text(&o.stderr));
    let o = run(&["train", "--mode", "hyper"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_is_reproducible_then_infer_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();

    let a = run(&["train", "--config", cfg, "--seed", "4"]);
    assert!(a.status.success(), "{}", text(&a.stderr));
    let ck_a = std::fs::read(dir.path().join("model.ckpt")).unwrap();
    let b = run(&["train", "--config", cfg, "--seed", "4"]);
    assert!(b.status.success());
    assert_eq!(a.stdout, b.stdout, "training logs differ");
    assert_eq!(ck_a, std::fs::read(dir.path().join("model.ckpt")).unwrap());
    let log = text(&a.stdout);
    assert_eq!(log.lines().count(), 4);
    assert!(log.starts_with("step\tl_sr\tl_g_adv\tl_d\tseconds\n"));

    let lr = VideoClip::from_fn(4, 1, 32, 32, |t, _, y, x| ((t * 5 + y * 3 + x) % 17) as f64 / 17.0).unwrap();
    let input = dir.path().join("lr.vclp");
    write_video(&input, &lr, SampleFormat::F32).unwrap();
    let before = std::fs::read(&input).unwrap();
    let out = dir.path().join("sr.vclp");
    let ck = dir.path().join("model.ckpt");
    let o = run(&[
        "infer",
        "--config",
        cfg,
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        input.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let sr = read_video(&out).unwrap();
    assert_eq!((sr.frames, sr.channels, sr.height, sr.width), (7, 1, 128, 128));
    assert_eq!(std::fs::read(&input).unwrap(), before, "input clip was modified");

    let o = run(&[
        "infer",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        input.to_str().unwrap(),
        input.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read(&input).unwrap(), before);

    let eval_dir = dir.path().join("eval");
    let o = run(&[
        "eval",
        "--config",
        cfg,
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let summary = std::fs::read_to_string(eval_dir.join("summary.tsv")).unwrap();
    assert!(summary.starts_with("clip\tmodel_psnr_db"));
    for f in ["model.tsv", "baseline.tsv", "synth000.model.tsv", "synth000.baseline.tsv"] {
        assert!(eval_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn infer_without_checkpoint_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["infer", "--out", dir.path().join("x.vclp").to_str().unwrap(), "missing.vclp"]);
    assert!(matches!(o.status.code(), Some(2) | Some(3)), "{:?}", o.status);
    assert!(!dir.path().join("x.vclp").exists());
}

#[test]
fn gradcheck_reports_every_op_passing() {
    let o = run(&["gradcheck", "--seed", "1"]);
    assert!(o.status.success(), "{}{}", text(&o.stdout), text(&o.stderr));
    let out = text(&o.stdout);
    let mut lines: Vec<_> = out.lines().filter(|l| !l.starts_with('#')).collect();
    let summary = lines.pop().unwrap();
    assert_eq!(summary, format!("all {} checks pass", lines.len()));
    assert!(lines.len() >= 20, "{out}");
    for l in lines {
        assert!(l.split_whitespace().nth(1) == Some("pass"), "{l}");
    }
}
