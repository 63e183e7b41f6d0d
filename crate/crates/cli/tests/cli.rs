//! End-to-end checks of the binary: exit codes, help text, output files.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasiproj"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn help_lists_config_keys() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for key in [
        "matrix",
        "f_kappa",
        "generator",
        "analyzer",
        "slope_tol",
        "conditions",
    ] {
        assert!(text.contains(key), "--help missing key {key}");
    }
}

#[test]
fn check_bspline_strang_fix_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("check.cfg");
    write(
        &cfg,
        "matrix = 2\ngenerator = bspline\ngen_s = 2\nanalyzer = smoothed\n\
         conditions = strang_fix, weak_compat, growth\ns = 2\nwindow_radius = 16\n",
    );
    let out = bin().arg("check").arg(&cfg).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {text}");
    assert!(text.contains("verdict: pass"));
}

#[test]
fn check_known_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("check.cfg");
    // truncated Fejér is not strictly compatible with ideal sampling
    write(
        &cfg,
        "matrix = 2\ngenerator = fejer_trunc\ngen_delta = 0.25\nanalyzer = ideal\n\
         conditions = strict_compat\ndelta = 0.25\n",
    );
    let out = bin().arg("check").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_lq_class_norm_of_cell_average() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lq.cfg");
    write(
        &cfg,
        "matrix = 2\ngenerator = inverse_dual\ngen_delta = 0.25\nanalyzer = kantorovich\n\
         conditions = lq_class\nnorm_q = 2\n",
    );
    let out = bin().arg("check").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("empirical_constant: 1.0000000000000000e0"));
}

#[test]
fn malformed_matrix_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(
        &cfg,
        "matrix = 1,x;0,2\ngenerator = dirichlet\nanalyzer = ideal\nconditions = bounded\n",
    );
    let out = bin().arg("check").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // missing config file is also a config error
    let out = bin()
        .arg("check")
        .arg(dir.path().join("nope.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn approx_constant_function_error_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let poly = dir.path().join("one.txt");
    write(&poly, "trigpoly 1\n0 1.0e0 0.0e0\n");
    let cfg = dir.path().join("approx.cfg");
    write(
        &cfg,
        &format!(
            "matrix = 2\nj = 1\nf = file\nf_path = {}\ngenerator = dirichlet\n\
             gen_delta = 0.5\nanalyzer = ideal\n",
            poly.display()
        ),
    );
    let outpath = dir.path().join("result");
    let out = bin()
        .arg("approx")
        .arg(&cfg)
        .arg("-o")
        .arg(&outpath)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let err_file = std::fs::read_to_string(dir.path().join("result.err.txt")).unwrap();
    assert_eq!(err_file.trim(), "trigpoly 1", "error dump should be empty");
}

#[test]
fn approx_worked_alias_example() {
    // fhat(3) = 1, M = 2, j = 1, Dirichlet(1/2) + ideal sampling:
    // error coefficients -1 at n = ±1 and +1 at n = 3
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("approx.cfg");
    write(
        &cfg,
        "matrix = 2\nj = 1\nf = single\nf_freq = 3\ngenerator = dirichlet\n\
         gen_delta = 0.5\nanalyzer = ideal\n",
    );
    let outpath = dir.path().join("alias");
    let out = bin()
        .arg("approx")
        .arg(&cfg)
        .arg("-o")
        .arg(&outpath)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let err_file = std::fs::read_to_string(dir.path().join("alias.err.txt")).unwrap();
    let lines: Vec<&str> = err_file.lines().collect();
    assert_eq!(lines[0], "trigpoly 1");
    assert!(lines[1].starts_with("-1 -1."));
    assert!(lines[2].starts_with("1 -1."));
    assert!(lines[3].starts_with("3 1."));
}

#[test]
fn approx_band_limited_strict_pair_error_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("approx.cfg");
    // band frequency 1 sits inside the level-3 strict-compatibility region
    write(
        &cfg,
        "matrix = 2\nj = 3\nf = single\nf_freq = 1\ngenerator = inverse_dual\n\
         gen_delta = 0.25\nanalyzer = kantorovich\n",
    );
    let out = bin().arg("approx").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let errline = text
        .lines()
        .find(|l| l.starts_with("error A_2^0"))
        .expect("error line");
    let value: f64 = errline.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!(value <= 1e-10, "error {value:.3e}");
}

#[test]
fn rates_first_regime_passes_and_wrong_slope_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rates.cfg");
    write(
        &cfg,
        "matrix = 2\nf = decay\nf_kappa = 3\nf_radius = 1024\ngenerator = fejer_trunc\n\
         gen_delta = 0.25\nanalyzer = ideal\npredicted = coeff_decay\ns = 1\n\
         j_min = 2\nj_max = 8\n",
    );
    let csv = dir.path().join("out.csv");
    let out = bin()
        .arg("rates")
        .arg(&cfg)
        .arg("-o")
        .arg(&csv)
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {text}");
    assert!(csv.exists());

    // overriding the prediction with a wrong explicit slope flips the verdict
    let out = bin()
        .arg("rates")
        .arg(&cfg)
        .arg("predicted=slope")
        .arg("predicted_slope=9.9")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // missing output directory is a config error
    let out = bin()
        .arg("rates")
        .arg(&cfg)
        .arg("-o")
        .arg(dir.path().join("missing/dir/out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rates_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rates.cfg");
    write(
        &cfg,
        "matrix = 2\nf = decay\nf_kappa = 3\nf_radius = 512\ngenerator = dirichlet\n\
         gen_delta = 0.5\nanalyzer = ideal\npredicted = coeff_decay\ns = 40\n\
         j_min = 2\nj_max = 6\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "4")] {
        let out = bin()
            .arg("rates")
            .arg(&cfg)
            .arg("-o")
            .arg(path)
            .env("QUASIPROJ_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn report_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("report.cfg");
    write(
        &cfg,
        "matrix = 2\ngenerator = dirichlet\ngen_delta = 0.5\nanalyzer = ideal\n\
         conditions = bounded, strict_compat\ndelta = 0.5\nwindow_radius = 32\n",
    );
    let csv = dir.path().join("report.csv");
    let out = bin()
        .arg("report")
        .arg(&cfg)
        .arg("-o")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("label,condition,order,constant,witness,verdict"));
    assert!(text.contains("bounded"));
}
