//! End-to-end CLI tests: file plumbing, determinism, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn pqst(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqst"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn pqst")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = pqst(args, dir);
    assert!(
        out.status.success(),
        "pqst {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["simulate", "--qubits", "2", "--shots", "10", "--seed", "1", "--out", "a.json"],
        dir,
    );
    ok(
        &["simulate", "--qubits", "2", "--shots", "10", "--seed", "1", "--out", "b.json"],
        dir,
    );
    assert_eq!(
        std::fs::read(dir.join("a.json")).unwrap(),
        std::fs::read(dir.join("b.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(dir.join("a.state.json")).unwrap(),
        std::fs::read(dir.join("b.state.json")).unwrap()
    );

    // 9 settings, counts sum 10 each.
    let text = std::fs::read_to_string(dir.join("a.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let settings = parsed["settings"].as_array().unwrap();
    assert_eq!(settings.len(), 9);
    for s in settings {
        let sum: u64 = s["counts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_u64().unwrap())
            .sum();
        assert_eq!(sum, 10);
    }
}

#[test]
fn w_ground_truth_counts_sum() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["simulate", "--qubits", "1", "--seed", "7", "--ground-truth", "w", "--out", "counts.json"],
        dir,
    );
    let text = std::fs::read_to_string(dir.join("counts.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["shots_per_setting"], 50);
    let total: u64 = parsed["settings"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["counts"].as_array().unwrap())
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(total, 150);
}

#[test]
fn sample_estimate_diagnose_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["simulate", "--qubits", "1", "--seed", "3", "--out", "counts.json"],
        dir,
    );
    ok(
        &[
            "sample", "--counts", "counts.json", "--chains", "2", "--samples", "32",
            "--thin", "2", "--seed", "5", "--out-dir", "run",
        ],
        dir,
    );
    // One PQST file per chain plus sidecar and manifest.
    for r in 0..2 {
        assert!(dir.join(format!("run/chain_000{r}.pqst")).is_file());
        assert!(dir.join(format!("run/chain_000{r}.json")).is_file());
    }
    assert!(dir.join("run/manifest.json").is_file());

    ok(
        &[
            "estimate", "--samples-dir", "run", "--out", "est.json",
            "--reference", "counts.state.json", "--target-w", "--burn-in", "4",
        ],
        dir,
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("est.report.json")).unwrap())
            .unwrap();
    assert_eq!(report["chains"], 2);
    assert_eq!(report["samples_per_chain"], 32);
    assert_eq!(report["burn_in"], 4);
    assert_eq!(report["samples_used"], 2 * 28);
    assert!(report["fidelity_vs_reference"].as_f64().unwrap() > 0.0);
    assert!(report["w_overlap"].as_f64().is_some());

    // The pooled mean file round-trips through the reader.
    let est = pqst_core::qmatrix::DensityMatrix::read_json_file(&dir.join("est.json")).unwrap();
    est.validate().unwrap();

    ok(
        &["diagnose", "--samples-dir", "run", "--max-lag", "8", "--out-dir", "diag"],
        dir,
    );
    let acf_text = std::fs::read_to_string(dir.join("diag/acf.csv")).unwrap();
    let mut lines = acf_text.lines();
    assert_eq!(lines.next().unwrap(), "chain,lag,acf");
    // c[0] = 1 for chain 0.
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[1], "0");
    assert_eq!(first[2].parse::<f64>().unwrap(), 1.0);
    let iact_text = std::fs::read_to_string(dir.join("diag/iact.csv")).unwrap();
    assert!(iact_text.starts_with("chain,tau,n_eff"));
}

#[test]
fn estimate_against_its_own_mean_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["simulate", "--qubits", "1", "--seed", "21", "--out", "counts.json"],
        dir,
    );
    ok(
        &[
            "sample", "--counts", "counts.json", "--chains", "2", "--samples", "16",
            "--seed", "22", "--out-dir", "run",
        ],
        dir,
    );
    ok(&["estimate", "--samples-dir", "run", "--out", "est.json"], dir);
    // Re-estimate with the pooled mean itself as reference.
    ok(
        &[
            "estimate", "--samples-dir", "run", "--out", "est2.json",
            "--reference", "est.json",
        ],
        dir,
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("est2.report.json")).unwrap())
            .unwrap();
    let f = report["fidelity_vs_reference"].as_f64().unwrap();
    let e = report["frob_err_sq"].as_f64().unwrap();
    assert!((f - 1.0).abs() <= 1e-8, "fidelity {f}");
    assert!(e <= 1e-12, "frob err {e}");
}

#[test]
fn workers_flag_does_not_change_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["simulate", "--qubits", "1", "--seed", "9", "--out", "counts.json"],
        dir,
    );
    for (run, workers) in [("run1", "1"), ("run4", "4")] {
        ok(
            &[
                "sample", "--counts", "counts.json", "--chains", "4", "--samples", "16",
                "--seed", "11", "--workers", workers, "--out-dir", run,
            ],
            dir,
        );
    }
    for r in 0..4 {
        let a = std::fs::read(dir.join(format!("run1/chain_000{r}.pqst"))).unwrap();
        let b = std::fs::read(dir.join(format!("run4/chain_000{r}.pqst"))).unwrap();
        assert_eq!(a, b, "chain {r}");
    }
}

#[test]
fn three_qubit_pipeline_smoke() {
    // D = 8 exercises the tensor-product POVMs and larger kernels end to
    // end at a size the statistical tests never touch.
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &[
            "simulate", "--qubits", "3", "--shots", "20", "--seed", "17",
            "--ground-truth", "w", "--out", "counts.json",
        ],
        dir,
    );
    ok(
        &[
            "sample", "--counts", "counts.json", "--chains", "2", "--samples", "128",
            "--thin", "8", "--seed", "18", "--out-dir", "run",
        ],
        dir,
    );
    ok(
        &[
            "estimate", "--samples-dir", "run", "--out", "est.json",
            "--reference", "counts.state.json", "--target-w",
        ],
        dir,
    );
    ok(
        &["diagnose", "--samples-dir", "run", "--max-lag", "8", "--out-dir", "diag"],
        dir,
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("est.report.json")).unwrap())
            .unwrap();
    // Even this short run moves well clear of the flat-state overlap 1/8.
    assert!(report["w_overlap"].as_f64().unwrap() > 0.3);
    let est = pqst_core::qmatrix::DensityMatrix::read_json_file(&dir.join("est.json")).unwrap();
    assert_eq!(est.dim(), 8);
    est.validate().unwrap();
}

#[test]
fn exit_codes_distinguish_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // Missing required flag: clap's usage error.
    let out = pqst(&["simulate", "--qubits", "1", "--out", "x.json"], dir);
    assert_eq!(out.status.code(), Some(2));

    // Unwritable output path.
    let out = pqst(
        &["simulate", "--qubits", "1", "--seed", "1", "--out", "no_such_dir/x.json"],
        dir,
    );
    assert_eq!(out.status.code(), Some(3));

    // Invalid state file (not a density matrix).
    std::fs::write(
        dir.join("bad_state.json"),
        "{\"dim\": 2, \"re\": [[1.0, 0.0], [0.0, 1.0]], \"im\": [[0.0, 0.0], [0.0, 0.0]]}",
    )
    .unwrap();
    let out = pqst(
        &[
            "simulate", "--qubits", "1", "--seed", "1",
            "--ground-truth", "bad_state.json", "--out", "x.json",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    // Subsets without a reference: usage error from the parser.
    let out = pqst(
        &["diagnose", "--samples-dir", "run", "--out-dir", "d", "--subsets", "1,2"],
        dir,
    );
    assert_eq!(out.status.code(), Some(2));

    // Oversized max lag on a real run.
    ok(
        &["simulate", "--qubits", "1", "--seed", "2", "--out", "c.json"],
        dir,
    );
    ok(
        &[
            "sample", "--counts", "c.json", "--chains", "1", "--samples", "16",
            "--seed", "3", "--out-dir", "run",
        ],
        dir,
    );
    let out = pqst(
        &["diagnose", "--samples-dir", "run", "--max-lag", "2000", "--out-dir", "d"],
        dir,
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn qst_workers_env_overrides_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["simulate", "--qubits", "1", "--seed", "13", "--out", "counts.json"],
        dir,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_pqst"))
        .args([
            "sample", "--counts", "counts.json", "--chains", "2", "--samples", "8",
            "--seed", "1", "--workers", "4", "--out-dir", "run",
        ])
        .env("QST_WORKERS", "not a number")
        .current_dir(dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "bad env value rejected");

    let out = Command::new(env!("CARGO_BIN_EXE_pqst"))
        .args([
            "sample", "--counts", "counts.json", "--chains", "2", "--samples", "8",
            "--seed", "1", "--workers", "4", "--out-dir", "run",
        ])
        .env("QST_WORKERS", "1")
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(out.status.success());
}
