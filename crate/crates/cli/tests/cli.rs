use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use entdist_core::records::{read_reports, read_sweep_csv, read_sweep_jsonl};
use entdist_core::{Outcome, PairOutcome};
use tempfile::TempDir;

fn entdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn reports(p: &str) -> Vec<entdist_core::records::ReportRecord> {
    read_reports(BufReader::new(File::open(p).unwrap())).unwrap()
}

#[test]
fn identity_noise_single_trial() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "id.toml",
        "seed = 1\ntrials = 1\n[noise]\nkind = \"identity\"\n",
    );
    let out = path(&dir, "r.jsonl");
    let o = entdist(&["run-two-qubit", "--config", &cfg, "--output", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("outcomes: Phi1 1"));
    let recs = reports(&out);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].record.outcome, Outcome::Pair(PairOutcome::Phi1));
    assert!((recs[0].fidelity - 1.0).abs() < 1e-12);
    assert!((recs[0].state().unwrap().norm() - 1.0).abs() < 1e-12);
}

#[test]
fn random_noise_always_succeeds() {
    let o = entdist(&["run-two-qubit", "--trials", "1000", "--seed", "9"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("success rate: 1\n"), "{}", stdout(&o));
}

#[test]
fn negative_fiber_length_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.toml", "[fiber]\nlength_b = -3.0\n");
    let o = entdist(&["run-two-qubit", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 2") && e.contains("length_b"), "{e}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        entdist(&["run-two-qubit", "--p-err", "0.9"]).status.code(),
        Some(2)
    );
    assert_eq!(
        entdist(&["run-two-qubit", "--trials", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(entdist(&["teleport"]).status.code(), Some(2));
    assert_eq!(
        entdist(&["run-two-qubit", "--config", "/nonexistent/run.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "seed = 4\ntrials = 5\n");
    let o = entdist(&[
        "run-two-qubit",
        "--config",
        &cfg,
        "--trials",
        "2",
        "--seed",
        "8",
    ]);
    assert!(
        stdout(&o).starts_with("run-two-qubit: 2 trials, seed 8\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn ghz_identity_noise() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "g.toml",
        "trials = 3\n[ghz]\nn = 4\n[noise]\nkind = \"identity\"\n",
    );
    let out = path(&dir, "g.jsonl");
    let o = entdist(&["run-ghz", "--config", &cfg, "--output", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in reports(&out) {
        assert!((r.fidelity - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ghz_two_parties_match_two_qubit_runs() {
    let dir = TempDir::new().unwrap();
    let (g, t) = (path(&dir, "g.jsonl"), path(&dir, "t.jsonl"));
    let common = ["--seed", "31", "--trials", "200", "--p-err", "0.3"];
    let o1 = entdist(&[&["run-ghz", "--n", "2", "--output", &g][..], &common].concat());
    let o2 = entdist(&[&["run-two-qubit", "--output", &t][..], &common].concat());
    assert!(o1.status.success() && o2.status.success());
    let (g, t) = (reports(&g), reports(&t));
    assert_eq!(g.len(), t.len());
    for (a, b) in g.iter().zip(&t) {
        assert_eq!(a.success, b.success);
        assert!((a.fidelity - b.fidelity).abs() < 1e-12);
        assert_eq!(a.record.reported, b.record.reported);
        assert_eq!(a.record.true_phases, b.record.true_phases);
    }
    assert!(g.iter().any(|r| !r.success));
}

#[test]
fn odd_ghz_needs_flag() {
    let o = entdist(&["run-ghz", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--experimental-odd-n"));
    let o = entdist(&[
        "run-ghz",
        "--n",
        "3",
        "--experimental-odd-n",
        "--trials",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn homodyne_sweep_endpoints() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.toml",
        "seed = 3\n[sweep]\nvariable = \"homodyne-err\"\ngrid = [0.0, 0.5]\ntrials_per_point = 4000\n",
    );
    let out = path(&dir, "s.csv");
    let o = entdist(&["sweep", "--config", &cfg, "--output", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_sweep_csv(File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].success_rate, 1.0);
    assert!(
        (rows[1].success_rate - 0.25).abs() < 0.03,
        "{}",
        rows[1].success_rate
    );
}

#[test]
fn compensated_fiber_sweep_keeps_fidelity() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/sweep_fiber.toml");
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "f.jsonl");
    let o = entdist(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        &out,
        "--trials",
        "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_sweep_jsonl(BufReader::new(File::open(&out).unwrap())).unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r.point.mean_fidelity >= 1.0 - 1e-9, "{r:?}");
        assert_eq!(r.point.trials, 50);
    }
}

#[test]
fn sweep_to_stdout_is_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.toml",
        "[sweep]\nvariable = \"noise-angle\"\ngrid = [0.0, 0.7]\ntrials_per_point = 10\n",
    );
    let o = entdist(&["sweep", "--config", &cfg]);
    assert!(o.status.success());
    let rows = read_sweep_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.toml",
        "[sweep]\nvariable = \"homodyne-err\"\ngrid = []\n",
    );
    let o = entdist(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"));
    assert_eq!(entdist(&["sweep"]).status.code(), Some(2));
}

#[test]
fn verify_flags_injected_fault() {
    let o = entdist(&[
        "verify",
        "--criterion",
        "4",
        "--inject-fault",
        "corrupt-corrections",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL] 4 correction-soundness"));
    assert!(stderr(&o).contains("correction-soundness"));
}

#[test]
fn verify_is_repeatable() {
    let a = entdist(&["verify", "--criterion", "3"]);
    let b = entdist(&["verify", "--criterion", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_full_suite_passes() {
    let o = entdist(&["verify"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}{}", stderr(&o));
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 8);
    assert!(text.ends_with("8/8 criteria passed\n"));
}
