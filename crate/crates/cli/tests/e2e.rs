//! Runs the `oneshot` binary on the committed fixtures and compares its
//! output byte for byte with `tests/golden/`. Set `UPDATE_GOLDENS=1` to
//! rewrite the goldens instead of comparing.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn oneshot(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oneshot"));
    cmd.current_dir(fixtures())
        .args(args)
        .env_remove("ONESHOT_MAX_DIM");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn check_golden(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        expected == actual,
        "{name} differs from its golden:\n{}",
        String::from_utf8_lossy(actual)
    );
}

/// Runs a successful command writing to `--out` and checks the file.
fn golden_file(name: &str, args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join(name);
    let mut full: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap().to_owned();
    full.extend(["--out", &out_str]);
    let o = oneshot(&full, &[]);
    assert!(
        o.status.success(),
        "{name}: exit {:?}\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(o.stdout.is_empty());
    check_golden(name, &fs::read(&out).unwrap());
    // Only the artifact is left behind; the temp file was renamed.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

fn failure(args: &[&str], envs: &[(&str, &str)]) -> (i32, serde_json::Value) {
    let o = oneshot(args, envs);
    assert!(o.stdout.is_empty());
    let report: serde_json::Value =
        serde_json::from_slice(&o.stderr).expect("stderr is a JSON error report");
    let code = o.status.code().unwrap();
    assert_eq!(report["exit_code"], code);
    (code, report)
}

fn golden_failure(name: &str, args: &[&str], code: i32) {
    let o = oneshot(args, &[]);
    assert_eq!(o.status.code(), Some(code), "{name}");
    assert!(o.stdout.is_empty());
    check_golden(name, &o.stderr);
}

#[test]
fn solve_qubit_pair() {
    golden_file(
        "solve_qubit_pair.json",
        &[
            "solve",
            "--null",
            "ket0.json",
            "--alt",
            "plus.json",
            "--epsilon",
            "0.1",
        ],
    );
    let o = oneshot(
        &[
            "solve",
            "--null",
            "ket0.json",
            "--alt",
            "plus.json",
            "--epsilon",
            "0.1",
        ],
        &[],
    );
    let cert: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((cert["beta"].as_f64().unwrap() - 0.2).abs() < 1e-8);
}

#[test]
fn solve_classical_pair() {
    golden_file(
        "solve_coins.json",
        &[
            "solve",
            "--null",
            "fair_coin.json",
            "--alt",
            "biased_coin.json",
            "--epsilon",
            "0.05",
        ],
    );
}

#[test]
fn composite_qubits() {
    golden_file(
        "composite_qubits.json",
        &[
            "composite",
            "--nulls",
            "qubit_nulls.json",
            "--alts",
            "qubit_alts.json",
            "--epsilon",
            "0.1",
        ],
    );
}

#[test]
fn stein_curve() {
    golden_file(
        "stein_coins.csv",
        &[
            "stein",
            "--null",
            "fair_coin.json",
            "--alt",
            "biased_coin.json",
            "--epsilon",
            "0.05",
            "--nmax",
            "10",
        ],
    );
    golden_file(
        "stein_coins.json",
        &[
            "stein",
            "--null",
            "fair_coin.json",
            "--alt",
            "biased_coin.json",
            "--epsilon",
            "0.05",
            "--nmax",
            "4",
        ],
    );
    golden_file(
        "stein_coins.svg",
        &[
            "stein",
            "--null",
            "fair_coin.json",
            "--alt",
            "biased_coin.json",
            "--epsilon",
            "0.05",
            "--nmax",
            "6",
        ],
    );
}

#[test]
fn stein_last_row_tracks_the_reference() {
    use oneshot_core::distributions::ClassicalDistribution;
    use oneshot_core::divergences::stein_rate_curve;
    use oneshot_core::numfmt::{parse, sig12};

    let o = oneshot(
        &[
            "stein",
            "--null",
            "fair_coin.json",
            "--alt",
            "biased_coin.json",
            "--epsilon",
            "0.05",
            "--nmax",
            "10",
        ],
        &[],
    );
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| parse(c).unwrap()).collect())
        .collect();
    let p0 = ClassicalDistribution::from_vec(vec![0.5, 0.5]).unwrap();
    let p1 = ClassicalDistribution::from_vec(vec![0.9, 0.1]).unwrap();
    let curve = stein_rate_curve(&p0.into(), &p1.into(), 0.05, 10).unwrap();
    let last = rows.last().unwrap();
    assert_eq!(sig12(last[1]), sig12(curve.last().unwrap().rate));
    let dist = |r: &Vec<f64>| (r[1] - r[2]).abs();
    assert!(dist(last) < dist(&rows[1]));
    assert!((dist(last) - curve.distance_at(10).unwrap()).abs() < 1e-11);
}

#[test]
fn design_exact_and_gradient() {
    golden_file(
        "design_exact.json",
        &[
            "design",
            "--channel",
            "noise_stack.json",
            "--star",
            "star.json",
            "--polytope",
            "power_polytope.json",
        ],
    );
    golden_file(
        "design_exact.csv",
        &[
            "design",
            "--channel",
            "noise_stack.json",
            "--star",
            "star.json",
            "--polytope",
            "power_polytope.json",
        ],
    );
    golden_file(
        "design_gradient.json",
        &[
            "design",
            "--channel",
            "noise_stack.json",
            "--star",
            "star.json",
            "--polytope",
            "power_polytope.json",
            "--method",
            "gradient",
            "--restarts",
            "4",
            "--seed",
            "7",
        ],
    );
}

#[test]
fn inscribed_budget() {
    golden_file(
        "inscribed.json",
        &[
            "inscribed",
            "--noise",
            "noise_stack.json",
            "--null",
            "background.json",
            "--energy",
            "energy.json",
            "--budget",
            "1.5",
            "--epsilon",
            "0.1",
        ],
    );
}

#[test]
fn meteor_defaults() {
    golden_file("meteor.csv", &["meteor"]);
    golden_file(
        "meteor_small.json",
        &[
            "meteor",
            "--lambdas",
            "3",
            "--epsilons",
            "0.05",
            "--kmax",
            "3",
        ],
    );
    golden_file("meteor.svg", &["meteor"]);
    let o = oneshot(&["meteor"], &[]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("lambda,epsilon,k,beta"));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 16);
}

#[test]
fn laser_table() {
    golden_file(
        "laser.csv",
        &[
            "laser", "--g", "6", "--s", "1", "--c", "1", "--q", "0.2", "--delta", "0.1", "--n", "5",
        ],
    );
    golden_file(
        "laser.json",
        &[
            "laser", "--g", "6", "--s", "1", "--c", "1", "--q", "0.2", "--delta", "0.1", "--n",
            "5", "--powers", "2", "4",
        ],
    );
    golden_file(
        "laser.svg",
        &[
            "laser", "--g", "6", "--s", "1", "--c", "1", "--q", "0.2", "--delta", "0.1", "--n", "5",
        ],
    );
}

#[test]
fn analyze_verdicts() {
    golden_file(
        "analyze.json",
        &[
            "analyze",
            "--data",
            "observation.json",
            "--null",
            "background.json",
            "--models",
            "signal_models.json",
            "--epsilon",
            "0.1",
        ],
    );
    golden_file(
        "analyze_tail.json",
        &[
            "analyze",
            "--data",
            "tail_observation.json",
            "--null",
            "background.json",
            "--models",
            "signal_models.json",
            "--epsilon",
            "0.1",
        ],
    );
}

#[test]
fn plot_single_row() {
    golden_file(
        "single_point.svg",
        &["plot", "--table", "small_table.csv", "--x", "x", "--y", "y"],
    );
}

#[test]
fn validation_failures() {
    golden_failure(
        "err_bad_mass.json",
        &[
            "solve",
            "--null",
            "bad_mass.json",
            "--alt",
            "fair_coin.json",
            "--epsilon",
            "0.1",
        ],
        2,
    );
    golden_failure(
        "err_missing_column.json",
        &["plot", "--table", "small_table.csv", "--x", "x", "--y", "z"],
        2,
    );
    golden_failure(
        "err_bad_epsilon.json",
        &[
            "solve",
            "--null",
            "fair_coin.json",
            "--alt",
            "biased_coin.json",
            "--epsilon",
            "1.5",
        ],
        2,
    );
    golden_failure(
        "err_unsupported_format.json",
        &[
            "solve",
            "--null",
            "fair_coin.json",
            "--alt",
            "biased_coin.json",
            "--epsilon",
            "0.1",
            "--format",
            "csv",
        ],
        2,
    );
    let (code, report) = failure(&["meteor", "--bogus"], &[]);
    assert_eq!((code, report["error"].as_str()), (2, Some("validation")));
}

#[test]
fn io_failures() {
    let (code, report) = failure(
        &[
            "solve",
            "--null",
            "missing.json",
            "--alt",
            "fair_coin.json",
            "--epsilon",
            "0.1",
        ],
        &[],
    );
    assert_eq!((code, report["error"].as_str()), (3, Some("io")));
    let (code, _) = failure(&["meteor", "--out", "no/such/dir/meteor.csv"], &[]);
    assert_eq!(code, 3);
}

#[test]
fn non_convergence_exits_4() {
    golden_failure(
        "err_non_convergence.json",
        &[
            "composite",
            "--nulls",
            "qubit_nulls.json",
            "--alts",
            "qubit_alts.json",
            "--epsilon",
            "0.1",
            "--max-iter",
            "1",
            "--gap-tol",
            "1e-14",
        ],
        4,
    );
}

#[test]
fn max_dim_override() {
    let args = [
        "stein",
        "--null",
        "fair_coin.json",
        "--alt",
        "biased_coin.json",
        "--epsilon",
        "0.05",
        "--nmax",
        "3",
    ];
    assert!(oneshot(&args, &[]).status.success());
    let (code, report) = failure(&args, &[("ONESHOT_MAX_DIM", "4")]);
    assert_eq!((code, report["error"].as_str()), (2, Some("capacity")));
    let (code, _) = failure(&args, &[("ONESHOT_MAX_DIM", "lots")]);
    assert_eq!(code, 2);
}

#[test]
fn outputs_are_reproducible() {
    for args in [
        &["meteor", "--kmax", "5"][..],
        &[
            "design",
            "--channel",
            "noise_stack.json",
            "--star",
            "star.json",
            "--polytope",
            "power_polytope.json",
            "--method",
            "gradient",
        ][..],
        &[
            "composite",
            "--nulls",
            "qubit_nulls.json",
            "--alts",
            "qubit_alts.json",
            "--epsilon",
            "0.1",
        ][..],
    ] {
        assert_eq!(oneshot(args, &[]).stdout, oneshot(args, &[]).stdout);
    }
}
