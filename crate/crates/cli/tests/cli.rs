use std::path::Path;
use std::process::{Command, Output};

use cli::{Preset, RunConfig};
use proptest::prelude::*;
use trainer::RunManifest;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scaled-ac"))
        .args(args)
        .arg("--out")
        .arg(out)
        .args(["--jobs", "1"])
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 10] = ["--preset", "desk", "--width-n", "40", "--t-end", "0.5", "--trials", "2", "--seed", "11"];

#[test]
fn missing_beta_exits_2_naming_beta() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["train", "--width-n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta"), "{}", stderr(&o));
}

#[test]
fn beta_out_of_range_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["limit", "--beta", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta"));
}

#[test]
fn train_writes_series_and_matching_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--beta", "0.75"];
    args.extend(SMALL);
    let o = run(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let run_dir = dir.path().join("train/beta0.75_n40");
    assert!(run_dir.join("trial000.csv").exists() && run_dir.join("trial001.csv").exists());
    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config_hash, RunManifest::new(manifest.config.clone(), 11, 0.0).config_hash);
    let cfg: RunConfig = serde_json::from_value(manifest.config).unwrap();
    assert_eq!((cfg.beta, cfg.width_n, cfg.preset, cfg.seed), (Some(0.75), Some(40), Some(Preset::Desk), Some(11)));
    assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));

    let first = std::fs::read(run_dir.join("trial000.csv")).unwrap();
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(std::fs::read(run_dir.join("trial000.csv")).unwrap(), first);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, r#"{"beta": 0.6, "width_n": 30, "t_end": 0.2, "trials": 1, "seed": 3}"#).unwrap();
    let o = run(dir.path(), &["train", "--config", file.to_str().unwrap(), "--beta", "0.8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("train/beta0.8_n30/trial000.csv").exists());
    assert!(!dir.path().join("train/beta0.6_n30").exists());
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, r#"{"beta": 0.6, "bogus": 1}"#).unwrap();
    let o = run(dir.path(), &["train", "--config", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config"));
}

#[test]
fn rates_without_train_names_snapshot_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["rates", "--beta", "0.75", "--widths", "10,40,100", "--t-end", "0.2", "--trials", "1"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("LimitSolution"), "{}", stderr(&o));

    let o = run(dir.path(), &["limit", "--beta", "0.75", "--t-end", "0.2", "--mc-samples", "2000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(dir.path(), &["rates", "--beta", "0.75", "--widths", "10,40,100", "--t-end", "0.2", "--trials", "1"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("SnapshotSeries"), "{}", stderr(&o));
}

#[test]
fn report_on_empty_dir_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_scaled-ac")).args(["report", "--out"]).arg(dir.path()).output().unwrap();
    assert!(o.status.success());
    let s: experiments::Summary = serde_json::from_slice(&o.stdout).unwrap();
    assert!(s.experiments.is_empty());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn small_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--beta", "0.75", "--t-end", "0.5", "--trials", "2", "--seed", "5"];
    let with = |extra: &[&'static str]| -> Vec<&str> { common.iter().chain(extra).copied().collect() };
    for (cmd, extra) in [
        ("limit", with(&["--mc-samples", "5000"])),
        ("train", with(&["--widths", "20,60,200"])),
        ("rates", with(&["--widths", "20,60,200"])),
        ("residual", with(&["--width-n", "60"])),
    ] {
        let mut args = vec![cmd];
        args.extend(extra);
        let o = run(dir.path(), &args);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    for f in ["limit/beta0.75.csv", "limit/beta0.75.manifest.json", "rates/beta0.75.json", "residual/beta0.75_n60.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let o = Command::new(env!("CARGO_BIN_EXE_scaled-ac")).args(["report", "--out"]).arg(dir.path()).output().unwrap();
    let s: experiments::Summary = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<_> = s.experiments.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["rates_beta0.75", "residual_beta0.75_n60"]);
    assert!(s.experiments[0].slopes.contains_key("Q"));
}

#[test]
fn variance_needs_twenty_trials() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["variance", "--betas", "0.6,0.9", "--width-n", "20", "--t-end", "0.1", "--trials", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trials"));
}

proptest! {
    #[test]
    fn run_config_json_round_trip(
        beta in prop::option::of(0.51f64..1.0),
        widths in prop::option::of(prop::collection::vec(1usize..5000, 0..4)),
        t_end in prop::option::of(0.01f64..100.0),
        seed in prop::option::of(any::<u64>()),
        full in any::<bool>(),
    ) {
        let cfg = RunConfig {
            beta, widths, t_end, seed,
            preset: Some(if full { Preset::Full } else { Preset::Desk }),
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
