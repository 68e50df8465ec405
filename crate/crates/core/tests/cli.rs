use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nnclass"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(format!("{name}.toml"))
}

fn run(sub: &str, cfg: &Path, seed: u64, out: &Path) -> i32 {
    bin()
        .args([sub, "--config"])
        .arg(cfg)
        .args(["--seed", &seed.to_string(), "--out"])
        .arg(out)
        .status()
        .expect("binary runs")
        .code()
        .expect("exit code")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn sample_writes_the_three_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run("sample", &config("sample"), 3, &out), 0);
    for f in ["records.csv", "fit.csv", "manifest.toml"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let manifest: toml::Value = toml::from_str(&std::fs::read_to_string(out.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    assert!(manifest.get("seeds").is_some());
    assert!(manifest.get("config").is_some());
}

#[test]
fn seed_changes_the_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("sample", &config("sample"), 1, &a), 0);
    assert_eq!(run("sample", &config("sample"), 2, &b), 0);
    let ra = std::fs::read(a.join("records.csv")).unwrap();
    let rb = std::fs::read(b.join("records.csv")).unwrap();
    assert_ne!(ra, rb);
}

#[test]
fn missing_config_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let code = run("sample", &tmp.path().join("nope.toml"), 0, &tmp.path().join("out"));
    assert_eq!(code, 2);
}

#[test]
fn invalid_configs_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let zero_n = "n = 0\n[spec]\nfamily = \"ramp\"\ndim = 1\nalpha = 1.0\nc0 = 2.0\n";
    assert_eq!(run("sample", &write_config(tmp.path(), zero_n), 0, &out), 2);

    let bad_alpha = "n = 10\n[spec]\nfamily = \"margin-alpha\"\ndim = 1\nalpha = -1.0\nc0 = 1.0\n";
    assert_eq!(run("sample", &write_config(tmp.path(), bad_alpha), 0, &out), 2);

    let rates = std::fs::read_to_string(config("rates")).unwrap();
    let descending = rates.replacen("n_grid = [32, 64, 128, 256]", "n_grid = [64, 32]", 1);
    assert_ne!(descending, rates);
    let code = run("rates", &write_config(tmp.path(), &descending), 0, &out);
    assert_eq!(code, 2);
}

#[test]
fn divergent_training_is_an_experiment_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "n = 16\nsieve = \"wide\"\n[spec]\nfamily = \"ramp\"\ndim = 1\nalpha = 1.0\nc0 = 2.0\n\
                [train]\nepochs = 50\nrestarts = 1\nstep_size = 1e300\n";
    let code = run("train", &write_config(tmp.path(), body), 0, &tmp.path().join("out"));
    assert_eq!(code, 3);
}
