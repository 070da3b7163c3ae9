use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pnr_core::tensor::io::{load_matrix, save_matrix};
use pnr_core::Matrix;

fn pnr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnr"))
        .args(args)
        .env_remove("PNR_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value of the first `key = value` line.
fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim_start().strip_prefix('=').map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gradcheck_default_passes() {
    let o = pnr(&["gradcheck"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("0 failed"));
    assert!(out.lines().filter(|l| l.ends_with("PASS")).count() >= 4);
}

#[test]
fn gradcheck_p1_runs_frozen_map_checks() {
    let o = pnr(&["gradcheck", "--p", "1", "--trials", "5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("frozen"));
}

#[test]
fn gradcheck_negative_control_fails() {
    let o = pnr(&["gradcheck", "--trials", "3", "--corrupt-backward"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn solve_identity_design_copies_h() {
    let dir = tempfile::tempdir().unwrap();
    let h = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.37 - 1.1);
    save_matrix(dir.path().join("H.pnrm"), &h).unwrap();
    save_matrix(dir.path().join("P.pnrm"), &Matrix::identity(4)).unwrap();
    let out = dir.path().join("F.pnrm");
    let o = pnr(&[
        "solve",
        "--p",
        "2",
        "--H",
        s(&dir.path().join("H.pnrm")),
        "--P",
        s(&dir.path().join("P.pnrm")),
        "--out",
        s(&out),
        "--ridge",
        "0",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&out).unwrap(), fs::read(dir.path().join("H.pnrm")).unwrap());
}

#[test]
fn solve_lad_median_instance() {
    let dir = tempfile::tempdir().unwrap();
    save_matrix(dir.path().join("H.pnrm"), &Matrix::from_rows(&[[0.0], [0.0], [3.0]])).unwrap();
    save_matrix(dir.path().join("P.pnrm"), &Matrix::ones(3, 1)).unwrap();
    let out = dir.path().join("F.pnrm");
    let o = pnr(&[
        "solve",
        "--p",
        "1",
        "--H",
        s(&dir.path().join("H.pnrm")),
        "--P",
        s(&dir.path().join("P.pnrm")),
        "--out",
        s(&out),
        "--iters",
        "11",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!((value(&text, "objective") - 3.0).abs() < 1e-3, "{text}");
    assert_eq!(value(&text, "iterations_used"), 11.0);
    assert!(load_matrix(&out).unwrap().get(0, 0).abs() < 1e-3);
}

#[test]
fn solve_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("H.pnrm");
    let p3 = dir.path().join("P3.pnrm");
    let zero = dir.path().join("Z.pnrm");
    let out = dir.path().join("F.pnrm");
    save_matrix(&h, &Matrix::ones(4, 2)).unwrap();
    save_matrix(&p3, &Matrix::ones(3, 2)).unwrap();
    save_matrix(&zero, &Matrix::zeros(4, 2)).unwrap();
    fs::write(dir.path().join("bad.pnrm"), b"nonsense").unwrap();

    let missing = pnr(&["solve", "--H", s(&dir.path().join("nope")), "--P", s(&p3), "--out", s(&out)]);
    assert_eq!(code(&missing), 2);
    let malformed = pnr(&["solve", "--H", s(&dir.path().join("bad.pnrm")), "--P", s(&p3), "--out", s(&out)]);
    assert_eq!(code(&malformed), 2);
    let mismatch = pnr(&["solve", "--H", s(&h), "--P", s(&p3), "--out", s(&out)]);
    assert_eq!(code(&mismatch), 3);
    let singular = pnr(&["solve", "--H", s(&h), "--P", s(&zero), "--out", s(&out), "--ridge", "0"]);
    assert_eq!(code(&singular), 4);
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_5() {
    assert_eq!(code(&pnr(&["bogus"])), 5);
    assert_eq!(code(&pnr(&["solve", "--p", "3", "--H", "a", "--P", "b", "--out", "c"])), 5);
    assert_eq!(code(&pnr(&["bench-robust", "--trials", "0"])), 5);
    assert_eq!(code(&pnr(&["--help"])), 0);
}

#[test]
fn bench_robust_default_favours_lad() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trials.csv");
    let o = pnr(&["bench-robust", "--out", s(&csv)]);
    assert_eq!(code(&o), 0);
    let rate = value(&stdout(&o), "lad_win_rate");
    assert!(rate >= 0.9, "{rate}");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn bench_robust_without_outliers_favours_lse() {
    // With Gaussian noise only, least squares is the efficient estimator.
    let o = pnr(&["bench-robust", "--frac", "0"]);
    assert_eq!(code(&o), 0);
    let rate = value(&stdout(&o), "lad_win_rate");
    assert!(rate < 0.5, "{rate}");
}

#[test]
fn bench_robust_single_trial_is_deterministic() {
    let a = pnr(&["bench-robust", "--trials", "1", "--seed", "42"]);
    let b = pnr(&["bench-robust", "--trials", "1", "--seed", "42"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = pnr(&["bench-robust", "--trials", "1", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn synth_writes_both_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let toy = dir.path().join("toy");
    assert_eq!(code(&pnr(&["synth", "--out", s(&toy), "--identities", "5"])), 0);
    let ds = pnr_core::synth::read_dataset(&toy).unwrap();
    assert_eq!(ds.train.len() + ds.test.len(), 5);

    let reg = dir.path().join("reg");
    let o = pnr(&["synth", "--kind", "regression", "--out", s(&reg), "--n", "20", "--frac", "0.25"]);
    assert_eq!(code(&o), 0);
    let h = load_matrix(reg.join("H.pnrm")).unwrap();
    let p = load_matrix(reg.join("P.pnrm")).unwrap();
    let f = load_matrix(reg.join("F_star.pnrm")).unwrap();
    assert_eq!((h.shape(), p.shape(), f.shape()), ((20, 3), (20, 4), (4, 3)));
    assert_eq!(fs::read_to_string(reg.join("outliers.txt")).unwrap().lines().count(), 5);
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.txt", "mode = supervised\nsteps = 300\n");
    let run = dir.path().join("run");
    let o = pnr(&["train", "--config", &cfg, "--out", s(&run)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let manifest = fs::read_to_string(run.join("manifest.txt")).unwrap();
    let artifacts = manifest.lines().find_map(|l| l.strip_prefix("artifacts = ")).unwrap();
    for a in artifacts.split_whitespace() {
        assert!(run.join(a).exists(), "{a}");
    }
    assert_eq!(value(&manifest, "steps"), 300.0);
    assert!(!manifest.contains("unix"));

    let log = fs::read_to_string(run.join("loss_log.csv")).unwrap();
    let rows: Vec<Vec<f64>> = log
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().enumerate().all(|(k, r)| r[0] == (k + 1) as f64 && r.len() == 9));
    let (first, last) = (rows[0][1], rows[299][1]);
    assert!(last <= 0.5 * first, "step-1 L1 {first}, final {last}");

    let o = pnr(&["eval", "--checkpoint", s(&run.join("checkpoint.pnrc")), "--M", "1,3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(value(&text, "m1.pairs"), 120.0);
    assert!(value(&text, "m3.median_ssim").is_finite());
}

#[test]
fn train_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let u = write_config(dir.path(), "u.txt", "mode = unsupervised\nlambda3 = 1\n");
    assert_eq!(code(&pnr(&["train", "--config", &u, "--out", s(&out)])), 5);
    let unknown = write_config(dir.path(), "k.txt", "mode = supervised\nlearning_rate = 1\n");
    assert_eq!(code(&pnr(&["train", "--config", &unknown, "--out", s(&out)])), 5);
    assert_eq!(code(&pnr(&["train", "--config", s(&dir.path().join("none.txt")), "--out", s(&out)])), 2);
    let data = write_config(dir.path(), "d.txt", "mode = supervised\ndata = missing_dir\n");
    assert_eq!(code(&pnr(&["train", "--config", &data, "--out", s(&out)])), 2);
    assert!(!out.exists());
}

#[test]
fn train_divergence_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.txt", "mode = supervised\nsteps = 20\nlr = 1e300\nidentities = 10\n");
    let run = dir.path().join("run");
    let o = pnr(&["train", "--config", &cfg, "--out", s(&run)]);
    assert_eq!(code(&o), 6);
    assert!(fs::read_to_string(run.join("loss_log.csv")).unwrap().starts_with("step,"));
    assert!(!run.join("checkpoint.pnrc").exists());
}

#[test]
fn train_uses_synth_output_and_pnr_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&pnr(&["synth", "--out", s(&dir.path().join("data")), "--identities", "10"])), 0);
    let cfg = write_config(dir.path(), "c.txt", "mode = multishot\nshots = 2\nsteps = 5\ndata = data\n");
    let run = |seed: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_pnr"))
            .args(["train", "--config", &cfg, "--out", s(&dir.path().join(out))])
            .env("PNR_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(dir.path().join(out).join("manifest.txt")).unwrap()
    };
    let a = run("11", "a");
    assert_eq!(value(&a, "seed"), 11.0);
    assert_eq!(value(&a, "train_identities") + value(&a, "test_identities"), 10.0);
    run("12", "b");
    assert_ne!(
        fs::read(dir.path().join("a/loss_log.csv")).unwrap(),
        fs::read(dir.path().join("b/loss_log.csv")).unwrap()
    );
}

#[test]
fn eval_rejects_mismatched_checkpoint_and_bad_m() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.pnrc"), b"PNRC").unwrap();
    assert_eq!(code(&pnr(&["eval", "--checkpoint", s(&dir.path().join("x.pnrc"))])), 2);
    let cfg = write_config(dir.path(), "c.txt", "mode = supervised\nsteps = 1\nidentities = 5\n");
    let run = dir.path().join("run");
    assert_eq!(code(&pnr(&["train", "--config", &cfg, "--out", s(&run)])), 0);
    let ck = run.join("checkpoint.pnrc");
    assert_eq!(code(&pnr(&["eval", "--checkpoint", s(&ck), "--M", "0"])), 5);
    assert_eq!(code(&pnr(&["eval", "--checkpoint", s(&ck), "--noise", "-1"])), 5);
}
