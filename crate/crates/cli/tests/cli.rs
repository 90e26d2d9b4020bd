use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esd-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("esd-lab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn writes_csv_and_summary() {
    let dir = scratch("outputs");
    let cfg = write_config(&dir, "experiment = \"resource-plan\"\nseed = 4\n");
    let out = dir.join("out");
    let status = bin().args(["resource-plan", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("resource-plan.csv")).unwrap();
    assert!(csv.starts_with("precision,lambda,p_max,status,n,"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("resource-plan.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "resource-plan");
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(summary["results"]["attenuation_qubit_limit"], 2301);
}

#[test]
fn same_seed_same_csv_and_seed_flag_overrides() {
    let dir = scratch("repeat");
    let cfg = write_config(&dir, "experiment = \"suppression-sweep\"\nseed = 9\n[suppression_sweep]\nqubits = 4\nobservables = 10\n");
    let run = |sub: &str, extra: &[&str]| {
        let out = dir.join(sub);
        let status = bin().args(["suppression-sweep", "--config"]).arg(&cfg).arg("--out").arg(&out).args(extra).status().unwrap();
        assert!(status.success());
        std::fs::read_to_string(out.join("suppression-sweep.csv")).unwrap()
    };
    let a = run("a", &["--workers", "1"]);
    let b = run("b", &[]);
    assert_eq!(a, b);
    let c = run("c", &["--seed", "10"]);
    assert_ne!(a, c);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = scratch("bad");
    let unknown = write_config(&dir, "experiment = \"resource-plan\"\nsurprise = 1\n");
    let o = bin().args(["resource-plan", "--config"]).arg(&unknown).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    // config names a different experiment than the subcommand
    let other = write_config(&dir, "experiment = \"ground-state\"\n");
    assert!(!bin().args(["resource-plan", "--config"]).arg(&other).output().unwrap().status.success());

    assert!(!bin().args(["resource-plan", "--config"]).arg(dir.join("missing.toml")).output().unwrap().status.success());
    assert!(!bin().args(["recompile", "--gateset", "nope", "--type", "A"]).output().unwrap().status.success());
}

#[test]
fn recompile_prints_report() {
    let o = bin().args(["recompile", "--gateset", "CRx", "--type", "B", "--restarts", "5"]).output().unwrap();
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["gateset"], "CRx+Ryz");
    assert_eq!(report["entangling_count"], 5);
    assert!(report["fidelity"].as_f64().unwrap() > 1.0 - 1e-6);
}

#[test]
fn shipped_configs_spell_out_the_defaults() {
    use esd_lab::{ExperimentConfig, ExperimentKind};
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for kind in ExperimentKind::ALL {
        let cfg = ExperimentConfig::load(&dir.join(format!("{}.toml", kind.label()))).unwrap();
        let mut expected = ExperimentConfig::new(kind);
        expected.seed = 1;
        assert_eq!(cfg, expected, "{}", kind.label());
    }
}
