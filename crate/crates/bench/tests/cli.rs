//! End-to-end checks of the `afn-bench` binary: subcommands, file formats,
//! reproducibility, and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_afn-bench"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("afn-bench-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_then_estimate_and_solve() {
    let dir = tmp_dir("flow");
    let points = dir.join("points.csv");

    let out = bin()
        .args(["gen", "--n", "300", "--d", "3", "--seed", "1", "--out"])
        .arg(&points)
        .output()
        .unwrap();
    assert_code(&out, 0);
    let text = fs::read_to_string(&points).unwrap();
    assert_eq!(text.lines().count(), 300);

    let out = bin()
        .args(["estimate-rank", "--points"])
        .arg(&points)
        .args([
            "--kernel", "gaussian", "--l2", "4", "--mu", "1e-4", "--m", "60", "--json",
        ])
        .output()
        .unwrap();
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"k_hat\":"), "got: {stdout}");

    let rows = dir.join("rows.csv");
    let out = bin()
        .args(["solve", "--points"])
        .arg(&points)
        .args([
            "--kernel", "gaussian", "--l2", "4", "--mu", "1e-2", "--method", "auto", "--rows",
        ])
        .arg(&rows)
        .output()
        .unwrap();
    assert_code(&out, 0);
    let rows_text = fs::read_to_string(&rows).unwrap();
    assert!(rows_text.starts_with("kernel,family,param,mu,method,"));
    assert!(rows_text.contains(",auto,") || rows_text.contains(",nystrom,"));

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_runs_config_and_is_reproducible() {
    let dir = tmp_dir("sweep");
    let cfg_path = dir.join("sweep.cfg");
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    let summary = dir.join("summary.csv");
    fs::write(
        &cfg_path,
        format!(
            "tol = 1e-4\nmaxit = 200\nseeds = 0,1\nrecord_timings = false\n\n\
             [sweep tiny]\nsynthetic = 120,2\nkernel = gaussian\nparam_kind = l2\n\
             params = 2,8\nmu = 1e-3\nmethods = cg,nystrom\nm = 40\n\
             summary_out = {}\n",
            summary.display()
        ),
    )
    .unwrap();

    for out_path in [&out_a, &out_b] {
        let out = bin()
            .args(["sweep", "--config"])
            .arg(&cfg_path)
            .args(["--out"])
            .arg(out_path)
            .output()
            .unwrap();
        assert_code(&out, 0);
    }
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert_eq!(a, b, "sweep output must be byte-identical across runs");

    let text = String::from_utf8(a).unwrap();
    // header + 2 params x 1 mu x 2 methods x 2 seeds
    assert_eq!(text.lines().count(), 1 + 8);
    let summary_text = fs::read_to_string(&summary).unwrap();
    assert!(summary_text.starts_with("kernel,family,param,mu,method,runs,"));
    assert_eq!(summary_text.lines().count(), 1 + 4);

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn figure_kinds_emit_csv() {
    let dir = tmp_dir("figure");
    let fig = dir.join("fig.csv");

    let out = bin()
        .args([
            "figure",
            "--kind",
            "spectrum",
            "--synthetic",
            "80,3",
            "--params",
            "0.5,5",
            "--param-kind",
            "l2",
            "--mu",
            "1e-4",
            "--out",
        ])
        .arg(&fig)
        .output()
        .unwrap();
    assert_code(&out, 0);
    let text = fs::read_to_string(&fig).unwrap();
    assert!(text.starts_with("index,l2=0.5,l2=5"));
    assert_eq!(text.lines().count(), 1 + 80);

    let out = bin()
        .args([
            "figure",
            "--kind",
            "subsample-match",
            "--synthetic",
            "150,3",
            "--l",
            "3",
            "--m",
            "30",
            "--out",
        ])
        .arg(&fig)
        .output()
        .unwrap();
    assert_code(&out, 0);
    let text = fs::read_to_string(&fig).unwrap();
    assert!(text.starts_with("series,rank,relerr"));

    let out = bin()
        .args([
            "figure",
            "--kind",
            "histogram",
            "--synthetic",
            "100,3",
            "--l",
            "2",
            "--k",
            "10",
            "--out",
        ])
        .arg(&fig)
        .output()
        .unwrap();
    assert_code(&out, 0);

    let out = bin()
        .args([
            "figure",
            "--kind",
            "fill-vs-error",
            "--synthetic",
            "100,3",
            "--l",
            "2",
            "--ks",
            "5,20,50",
            "--out",
        ])
        .arg(&fig)
        .output()
        .unwrap();
    assert_code(&out, 0);
    let text = fs::read_to_string(&fig).unwrap();
    assert!(text.starts_with("k,fill_fps,fill_random,relerr_fps,relerr_random"));

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_exit_one() {
    // unknown method
    let out = bin()
        .args(["solve", "--synthetic", "50,2", "--method", "bogus"])
        .output()
        .unwrap();
    assert_code(&out, 1);

    // missing data source
    let out = bin().args(["solve", "--method", "cg"]).output().unwrap();
    assert_code(&out, 1);

    // nonexistent config file
    let out = bin()
        .args(["sweep", "--config", "/nonexistent/path.cfg"])
        .output()
        .unwrap();
    assert_code(&out, 1);

    // bad figure kind
    let out = bin()
        .args([
            "figure",
            "--kind",
            "nope",
            "--synthetic",
            "40,2",
            "--out",
            "/tmp/x.csv",
        ])
        .output()
        .unwrap();
    assert_code(&out, 1);
}

#[test]
fn numeric_failure_exits_two() {
    // a hard middle-length-scale instance that cannot converge in 3
    // iterations: unpreconditioned CG reports non-convergence
    let out = bin()
        .args([
            "solve",
            "--synthetic",
            "400,3",
            "--kernel",
            "gaussian",
            "--l2",
            "6",
            "--mu",
            "1e-6",
            "--method",
            "cg",
            "--maxit",
            "3",
        ])
        .output()
        .unwrap();
    assert_code(&out, 2);
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_code(&out, 0);
    let out = bin().args(["solve", "--help"]).output().unwrap();
    assert_code(&out, 0);
}
