use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phasecon::imageio::{decode_grayscale, encode_pgm};
use phasecon::synthetic;
use sha2::{Digest, Sha256};

fn phasecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasecon"))
        .args(args)
        .output()
        .expect("spawn phasecon")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_image(
    dir: &Path,
    name: &str,
    w: usize,
    h: usize,
    f: impl Fn(usize, usize) -> u16,
) -> PathBuf {
    let samples: Vec<u16> = (0..w * h).map(|i| f(i % w, i / w)).collect();
    let path = dir.join(name);
    fs::write(&path, encode_pgm(w, h, &samples, 8)).unwrap();
    path
}

fn step(dir: &Path) -> PathBuf {
    write_image(dir, "step.pgm", 64, 64, |x, _| if x < 32 { 0 } else { 255 })
}

fn texture(dir: &Path, w: usize, h: usize) -> PathBuf {
    let img = synthetic::natural_texture(w, h, 3).unwrap();
    let px = img.pixels().to_vec();
    write_image(dir, "texture.pgm", w, h, move |x, y| {
        (px[y * w + x] * 255.0).round() as u16
    })
}

fn read_pgm(path: &Path) -> Vec<u8> {
    let img = decode_grayscale(&fs::read(path).unwrap()).unwrap();
    img.pixels()
        .iter()
        .map(|v| (v * 255.0).round() as u8)
        .collect()
}

fn kv(text: &str, key: &str) -> Option<String> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v.to_string())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_maps_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let image = step(dir.path());
    let out = dir.path().join("out");
    let o = phasecon(&[
        "run",
        "--image",
        s(&image),
        "--out",
        s(&out),
        "--debug-fields",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    for name in [
        "pc_joint.pgm",
        "pc_o1.pgm",
        "pc_o6.pgm",
        "moment_max.pgm",
        "moment_min.pgm",
        "cost.pgm",
        "config.txt",
    ] {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert!(out.join("debug_spread_o1.pgm").is_file());
    assert!(out.join("debug_filter_o6_n4.pgm").is_file());
    assert!(out.join("debug_noise.csv").is_file());

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    let digest = Sha256::digest(fs::read(&image).unwrap());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(kv(&manifest, "image_sha256"), Some(hex));
    assert_eq!(kv(&manifest, "command").as_deref(), Some("run"));
    assert_eq!(kv(&manifest, "width").as_deref(), Some("64"));
    assert_eq!(kv(&manifest, "source_depth").as_deref(), Some("8"));
    let files = kv(&manifest, "files").unwrap();
    assert!(files.split(',').all(|f| out.join(f).is_file()));

    // The written config reproduces the run.
    let again = dir.path().join("again");
    let o = phasecon(&[
        "run",
        "--config",
        s(&out.join("config.txt")),
        "--out",
        s(&again),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(out.join("pc_joint.pgm")).unwrap(),
        fs::read(again.join("pc_joint.pgm")).unwrap()
    );
}

#[test]
fn constant_image_gives_zero_map() {
    let dir = tempfile::tempdir().unwrap();
    let image = write_image(dir.path(), "flat.pgm", 32, 32, |_, _| 90);
    let out = dir.path().join("out");
    let o = phasecon(&["run", "--image", s(&image), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read_pgm(&out.join("pc_joint.pgm")).iter().all(|&v| v == 0));
}

#[test]
fn lower_cutoff_marks_more_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let image = texture(dir.path(), 64, 64);
    let count = |c: &str| {
        let cfg = dir.path().join(format!("c{c}.txt"));
        fs::write(&cfg, format!("c = {c}\n")).unwrap();
        let out = dir.path().join(format!("out{c}"));
        let o = phasecon(&[
            "run",
            "--image",
            s(&image),
            "--config",
            s(&cfg),
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        read_pgm(&out.join("pc_joint.pgm"))
            .iter()
            .filter(|&&v| v > 25)
            .count()
    };
    let (low, high) = (count("0.1"), count("0.55"));
    assert!(low >= high, "{low} < {high}");
}

#[test]
fn weighting_search_ends_on_the_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let image = texture(dir.path(), 32, 32);
    let cfg = dir.path().join("opt.txt");
    fs::write(&cfg, "c.min = 0.01\nc.max = 0.9\ng.min = 1\ng.max = 50\n").unwrap();
    let out = dir.path().join("opt");
    let o = phasecon(&[
        "optimize",
        "--image",
        s(&image),
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--method",
        "norm-opt",
        "--norm",
        "fro",
        "--seed",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(
        kv(&summary, "joint.bound.c").as_deref(),
        Some("lower"),
        "{summary}"
    );
    assert_eq!(kv(&summary, "joint.bound.g").as_deref(), Some("upper"));
    assert!(kv(&summary, "comparison.joint_score").is_some());
    for name in [
        "joint_trace.csv",
        "per_orientation_trace_o1.csv",
        "cost_opt.pgm",
        "cost_difference.pgm",
        "manifest.txt",
    ] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let trace = fs::read_to_string(out.join("joint_trace.csv")).unwrap();
    assert!(
        trace.starts_with("iter,c,g,lambda_min,sigma,eta,k,epsilon,n_scales,n_orient,score,ms\n")
    );

    // Same seed, same bytes.
    let again = dir.path().join("again");
    let o = phasecon(&[
        "optimize",
        "--image",
        s(&image),
        "--config",
        s(&cfg),
        "--out",
        s(&again),
        "--method",
        "norm-opt",
        "--norm",
        "fro",
        "--seed",
        "2",
    ]);
    assert!(o.status.success());
    assert_eq!(
        trace,
        fs::read_to_string(again.join("joint_trace.csv")).unwrap()
    );
}

#[test]
fn determinant_method_on_non_square_image_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let image = texture(dir.path(), 40, 32);
    let out = dir.path().join("out");
    let o = phasecon(&[
        "optimize",
        "--image",
        s(&image),
        "--out",
        s(&out),
        "--method",
        "d-opt",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("crop"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn failures_leave_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let image = texture(dir.path(), 32, 32);
    let out = dir.path().join("out");
    // Per-orientation weights must be unit; rejected before any file is written.
    let o = phasecon(&[
        "optimize",
        "--image",
        s(&image),
        "--out",
        s(&out),
        "--method",
        "norm-opt-per-o",
        "--mu1",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp-"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn configuration_and_io_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let image = texture(dir.path(), 32, 32);
    let o = phasecon(&["run", "--image", s(&image), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error:"));

    let o = phasecon(&["run", "--image", s(&dir.path().join("missing.pgm"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = phasecon(&["run", "--image", s(&image), "--norm", "schatten:0.5"]);
    assert_eq!(o.status.code(), Some(1));

    let o = phasecon(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn selfcheck_passes_and_detects_a_broken_norm() {
    let dir = tempfile::tempdir().unwrap();
    let a = phasecon(&["selfcheck", "--seed", "4", "--out", s(dir.path())]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert!(stdout(&a).contains("result: pass"));
    let b = phasecon(&["selfcheck", "--seed", "4"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(
        fs::read_to_string(dir.path().join("selfcheck.txt")).unwrap(),
        stdout(&a)
    );

    let c = phasecon(&["selfcheck", "--seed", "4", "--corrupt-norm"]);
    assert_eq!(c.status.code(), Some(1));
    let report = stdout(&c);
    let failing: Vec<&str> = report.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].contains("submultiplicativity"));
}
