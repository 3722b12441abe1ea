//! End-to-end runs of the `diracflow` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use diracflow::oneform::{domain::Dec, domain::PairingSpec, DomainSpec, Isometry};
use diracflow::spectrum::{sidecar_path, write_spectrum};
use diracflow::{ManifoldData, SyntheticSpectrum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diracflow")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn planted(dir: &Path, crossings: usize, seed: u64) {
    let (s, _) = SyntheticSpectrum::planted(&mut ChaCha8Rng::seed_from_u64(seed), crossings).unwrap();
    fs::write(dir.join("planted.json"), s.to_json().unwrap()).unwrap();
    fs::write(
        dir.join("run.toml"),
        "synthetic = \"planted.json\"\nspinc = \"all\"\nlambda_max = 2.0\n\n[certify]\ntau_grid = 801\n",
    )
    .unwrap();
}

#[test]
fn certify_then_verify_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    planted(dir, 2, 8);
    let a = run(dir, &["certify", "--config", "run.toml", "--output", "a"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert!(String::from_utf8_lossy(&a.stdout).contains("piercing"));
    let b = run(dir, &["certify", "--config", "run.toml", "--output", "b"]);
    assert_eq!(code(&b), 0);
    for f in ["report.json", "certificates.json", "summary.txt", "floer_k0.json"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
    let v = run(dir, &["verify", "a/certificates.json", "a/report.json"]);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stderr));
}

#[test]
fn tampered_certificates_fail_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    planted(dir, 2, 8);
    assert_eq!(code(&run(dir, &["certify", "--config", "run.toml", "--output", "out"])), 0);
    let mut certs: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.join("out/certificates.json")).unwrap()).unwrap();
    let c = certs.iter_mut().find(|c| c["rule"] == "count_upper").unwrap();
    c["constants"]["gamma"] = serde_json::json!(100.0);
    fs::write(dir.join("bad.json"), serde_json::to_string(&certs).unwrap()).unwrap();
    let v = run(dir, &["verify", "bad.json"]);
    assert_eq!(code(&v), 2);
    assert!(String::from_utf8_lossy(&v.stderr).contains("replay"));
}

#[test]
fn inconclusive_runs_exit_with_one_and_name_the_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    planted(dir, 2, 8);
    // planted coexact eigenvalues start at 6.25
    let o = run(dir, &["certify", "--config", "run.toml", "--lambda-max", "10"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("inconclusive: spectral_largeness"), "{err}");
    assert!(dir.join("out/report.json").exists());
}

#[test]
fn ingest_checks_the_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = ManifoldData::random(&mut ChaCha8Rng::seed_from_u64(1), 300, 3, 7.0, 3).unwrap();
    write_spectrum(&data, &dir.join("m.json")).unwrap();
    let o = run(dir, &["ingest", "m.json", "--output", "canon"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["records"], 300);
    assert!(dir.join("canon/m.canonical.json").exists());

    fs::write(sidecar_path(&dir.join("m.json")), "0000  m.json\n").unwrap();
    let bad = run(dir, &["ingest", "m.json"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("checksum"));
    assert_eq!(code(&run(dir, &["ingest", "m.json", "--no-sidecar", "--output", "c2"])), 0);
}

#[test]
fn plots_are_deterministic_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    planted(dir, 2, 8);
    let o = run(dir, &["plot", "--config", "run.toml", "--which", "j0", "--spinc", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.join("out/j0_k0.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("tau,j0"));
    assert_eq!(text.lines().count(), 2001);
    for which in ["js-at-tau", "gamma-odd", "coexact"] {
        let o = run(dir, &["plot", "--config", "run.toml", "--which", which, "--tau-points", "50"]);
        assert_eq!(code(&o), 0, "{which}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let again = run(dir, &["plot", "--config", "run.toml", "--which", "j0", "--spinc", "0", "--output", "again"]);
    assert_eq!(code(&again), 0);
    assert_eq!(text, fs::read_to_string(dir.join("again/j0_k0.csv")).unwrap());
}

#[test]
fn spectrum_sides_are_checkpointed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = ManifoldData::random(&mut ChaCha8Rng::seed_from_u64(2), 500, 1, 7.0, 3).unwrap();
    write_spectrum(&data, &dir.join("m.json")).unwrap();
    let args = ["plot", "--spectrum", "m.json", "--which", "gamma-odd", "--cache", "cache", "--tau-points", "20"];
    assert_eq!(code(&run(dir, &args)), 0);
    let cached: Vec<_> = fs::read_dir(dir.join("cache")).unwrap().collect();
    assert_eq!(cached.len(), 1);
    let first = fs::read(dir.join("out/gamma_odd_k0.csv")).unwrap();
    assert_eq!(code(&run(dir, &args)), 0);
    assert_eq!(first, fs::read(dir.join("out/gamma_odd_k0.csv")).unwrap());
}

#[test]
fn oneform_runs_and_rejects_infeasible_domains() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let spec = DomainSpec::cube(0.3, [1, 0, 0]).unwrap();
    fs::write(dir.join("cube.json"), spec.to_json().unwrap()).unwrap();
    let o = run(dir, &["oneform", "--domain", "cube.json", "--iterations", "0", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("out/lipschitz.json")).unwrap()).unwrap();
    assert_eq!(report["bound"], report["initial_bound"]);

    let o = run(dir, &["oneform", "--domain", "cube.json", "--iterations", "300", "--seed", "4"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.join("out/iterations.csv")).unwrap();
    assert_eq!(csv.lines().count(), 302);

    let mut bad = spec.clone();
    let inv = Isometry::boost(1, -0.6);
    bad.pairings.push(PairingSpec {
        face: 1,
        partner: 0,
        matrix: std::array::from_fn(|r| std::array::from_fn(|c| Dec(inv.0[(r, c)]))),
        phi: 1,
    });
    fs::write(dir.join("bad.json"), bad.to_json().unwrap()).unwrap();
    let o = run(dir, &["oneform", "--domain", "bad.json", "--iterations", "10"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(tmp.path(), &["certify", "--synthetic", "missing.json"])), 2);
    assert_eq!(code(&run(tmp.path(), &["frobnicate"])), 2);
}
