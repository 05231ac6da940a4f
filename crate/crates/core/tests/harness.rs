use std::path::Path;
use std::process::{Command, Output};

use echo_isac::harness::{
    config_hash, dump_config, load_config, normalize_config, parse_config, run_experiment, ExperimentKind,
    ExperimentSpec, RunConfig, Table,
};
use echo_isac::signal::CpmParams;

const EXAMPLE: &str = "\
# short frames, two SNR points
[system]
beta = 0.2
snr_db = 10
clutter = 0.5:1e6:0; 0.1:2e6:3e3

[cpm]
h = 0.1
L = 4
preamble = ramp
data_len = 16
samples_per_symbol = auto

[experiment]
kind = full_chain
snr_db = 0, 10
beta = 0.2
preamble_len = 8
n_trials = 16
seed = 5
estimator = known_frame
";

#[test]
fn config_text_round_trips() {
    let cfg = parse_config(EXAMPLE, "example.ini").unwrap();
    assert_eq!(cfg.system.comm_fraction, 0.2);
    assert_eq!(cfg.system.clutter.len(), 2);
    assert_eq!(cfg.cpm.data_len, Some(16));
    assert_eq!(cfg.experiment.kind, ExperimentKind::FullChain);
    assert_eq!(cfg.experiment.snr_db, vec![0.0, 10.0]);
    let text = dump_config(&cfg);
    let again = parse_config(&text, "dump.ini").unwrap();
    assert_eq!(again, cfg);
    assert_eq!(normalize_config(&text).unwrap(), text);
    assert_eq!(config_hash(&again), config_hash(&cfg));
    let mut other = cfg.clone();
    other.experiment.seed += 1;
    assert_ne!(config_hash(&other), config_hash(&cfg));
}

#[test]
fn config_errors_name_the_line() {
    let err = parse_config("[cpm]\nh = 0.1\nL = four\n", "bad.ini").unwrap_err();
    assert_eq!(err.kind(), "config");
    assert!(err.to_string().starts_with("bad.ini:3:"), "{err}");
    let err = parse_config("[radar]\n", "bad.ini").unwrap_err();
    assert!(err.to_string().starts_with("bad.ini:1:"), "{err}");
    let err = parse_config("[cpm]\nh = 0.2\nL = 8\n", "wrap.ini").unwrap().validate().unwrap_err();
    assert!(err.to_string().contains("h(L-1)"), "{err}");
    assert_eq!(load_config(Path::new("/nonexistent/cfg.ini")).unwrap_err().kind(), "io");
}

fn small_run(dir: &Path, kind: ExperimentKind) -> RunConfig {
    RunConfig {
        cpm: CpmParams { preamble_len: 8, data_len: Some(16), ..CpmParams::default() },
        experiment: ExperimentSpec {
            kind,
            snr_db: vec![0.0, 8.0],
            beta: vec![0.2],
            preamble_len: vec![8],
            n_trials: 1,
            seed: 3,
            out_dir: dir.to_path_buf(),
            plots: true,
            ..ExperimentSpec::default()
        },
        ..RunConfig::default()
    }
}

#[test]
fn every_kind_writes_tables_plots_and_manifest() {
    let root = tempfile::tempdir().unwrap();
    for kind in ExperimentKind::ALL {
        let dir = root.path().join(kind.name());
        let rec = run_experiment(&small_run(&dir, kind)).unwrap();
        assert!(rec.failures.is_empty(), "{kind:?}: {:?}", rec.failures);
        assert!(!rec.figures.is_empty());
        for files in rec.figures.values() {
            for f in files {
                assert!(dir.join(f).exists(), "{f} missing");
                if f.ends_with(".csv") {
                    let t = Table::read(&dir.join(f)).unwrap();
                    assert!(!t.rows.is_empty(), "{f} is empty");
                }
            }
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["kind"], kind.name());
        assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
        let saved = load_config(&dir.join("config.ini")).unwrap();
        assert_eq!(config_hash(&saved), rec.config_sha256);
    }
}

#[test]
fn single_trial_reruns_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    for kind in [ExperimentKind::McrbVsSnr, ExperimentKind::PdVsSnr, ExperimentKind::FullChain] {
        let a = root.path().join(format!("{}_a", kind.name()));
        let b = root.path().join(format!("{}_b", kind.name()));
        run_experiment(&small_run(&a, kind)).unwrap();
        rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| run_experiment(&small_run(&b, kind)))
            .unwrap();
        for entry in std::fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            if name.to_string_lossy().ends_with(".csv") {
                assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
            }
        }
    }
}

#[test]
fn failing_points_are_recorded_and_skipped() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = small_run(root.path(), ExperimentKind::RateVsSnr);
    cfg.experiment.alphabet = vec![4, 16];
    let rec = run_experiment(&cfg).unwrap();
    assert_eq!(rec.failures.len(), 2);
    assert!(rec.failures[0].point.contains("L=16"));
    let t = Table::read(&root.path().join("ser_vs_snr.csv")).unwrap();
    assert_eq!(t.rows.len(), 2);
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_echo-isac")).args(args).output().unwrap()
}

fn stdout_value(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

#[test]
fn cli_reports_results_and_exit_codes() {
    let out = cli(&["mcrb", "--snr-db", "10", "--beta", "0.2"]);
    assert!(out.status.success());
    let bound: f64 = stdout_value(&out, "mcrb_tau_s2").parse().unwrap();
    assert!(bound > 0.0);
    let std: f64 = stdout_value(&out, "range_std_m").parse().unwrap();
    assert!((std - 299_792_458.0 * bound.sqrt()).abs() < 1e-6 * std);

    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["pareto", "--h", "0.1", "--L", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let ab: f64 = stdout_value(&out, "a_over_b").parse().unwrap();
    assert!((ab - 1.0 / (0.01 * 15.0 / 16.0)).abs() < 1e-3);
    assert!(dir.path().join("pareto.csv").exists());

    let out = cli(&["chain", "--seed", "7", "--Ld", "16", "--Lp", "8"]);
    assert!(out.status.success());
    for key in ["beat_freq_true_hz", "beat_freq_fine_hz", "lambda_max", "m_hat", "ser_viterbi"] {
        stdout_value(&out, key);
    }

    let out = cli(&["mcrb", "--h", "0.2", "--L", "8"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");

    let out = cli(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "usage");

    assert_eq!(cli(&["mcrb", "--beta", "lots"]).status.code(), Some(2));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    assert_eq!(cli(&["mcrb", "--config", "/nonexistent.ini"]).status.code(), Some(1));
}

#[test]
fn cli_run_uses_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, EXAMPLE.replace("n_trials = 16", "n_trials = 2")).unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read(&out_dir.join("chain.csv")).unwrap();
    assert_eq!(t.column("snr_db").unwrap(), vec![0.0, 10.0]);
    let saved = load_config(&out_dir.join("config.ini")).unwrap();
    assert_eq!(saved.experiment.seed, 9);
    assert_eq!(saved.experiment.n_trials, 2);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut kinds = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        kinds.push(cfg.experiment.kind);
    }
    for kind in ExperimentKind::ALL {
        assert!(kinds.contains(&kind), "no config for {}", kind.name());
    }
}
