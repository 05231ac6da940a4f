use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use echo_isac::bounds::{
    crb_sensing_only, effective_rate, mcrb_tau, optimal_beta, pareto_frontier, ratio_ba, validate_phase_constraint,
};
use echo_isac::chain::{run_chain, ChainOptions};
use echo_isac::demod::{demodulate, CpmTrellis, Detector};
use echo_isac::estimation::{estimate_beat_frequency, EstimationWindow, SearchOptions};
use echo_isac::harness::{load_config, run_experiment, sim::draw_signal, ExperimentKind, RunConfig, Table};
use echo_isac::signal::{
    lin_to_db, write_binary, write_csv, write_sidecar, CpmConfig, ModIndex, SystemConfig, SPEED_OF_LIGHT,
};
use echo_isac::sync::{build_model, pd_pfa, solve_threshold, synchronize};
use echo_isac::{Error, Result};

#[derive(Parser)]
#[command(name = "echo-isac", version, about = "Echo-side ISAC simulation, bounds, detection and demodulation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// INI configuration file with [system], [cpm] and [experiment] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (defaults to the configured experiment seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// Overrides applied on top of the configuration.
#[derive(Args, Default)]
struct Overrides {
    /// Per-sample SNR in dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Communication bandwidth fraction.
    #[arg(long)]
    beta: Option<f64>,
    /// Modulation index.
    #[arg(long)]
    h: Option<f64>,
    /// Alphabet size.
    #[arg(long = "L")]
    alphabet: Option<usize>,
    /// Preamble length in symbols.
    #[arg(long = "Lp")]
    preamble_len: Option<usize>,
    /// Data symbols per frame (default: fill the window).
    #[arg(long = "Ld")]
    data_len: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Window {
    Preamble,
    KnownFrame,
    Blind,
}

#[derive(Subcommand)]
enum Cmd {
    /// Range bound, sensing-only bound and coupling at one operating point.
    Mcrb(Overrides),
    /// Fisher ratio, Pareto frontier and the optimal bandwidth split.
    Pareto {
        #[command(flatten)]
        o: Overrides,
        /// Sensing floor for the optimal split.
        #[arg(long = "s-min")]
        s_min: Option<f64>,
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Synthesize one observation and estimate the beat frequency.
    Estimate {
        #[command(flatten)]
        o: Overrides,
        #[arg(long, value_enum, default_value = "preamble")]
        window: Window,
        /// Also write the samples (binary, sidecar and CSV) to the output directory.
        #[arg(long)]
        export: bool,
    },
    /// Synthesize one observation and run the GLRT offset search.
    Sync {
        #[command(flatten)]
        o: Overrides,
        /// Per-offset false-alarm probability that sets the threshold.
        #[arg(long, default_value_t = 1e-3)]
        pfa: f64,
    },
    /// Demodulate one frame with perfect timing and frequency.
    Demod {
        #[command(flatten)]
        o: Overrides,
        /// Look-ahead of the correlator bank in symbols.
        #[arg(long, default_value_t = 1)]
        span: usize,
    },
    /// Run the configured experiment and write its tables and manifest.
    Run {
        /// Experiment kind (overrides the configuration).
        #[arg(long)]
        kind: Option<String>,
        /// Monte Carlo trials per grid point.
        #[arg(long = "n-trials")]
        n_trials: Option<usize>,
        /// Also render SVG plots.
        #[arg(long)]
        plots: bool,
    },
    /// One end-to-end trial with a verbose trace.
    Chain {
        #[command(flatten)]
        o: Overrides,
        #[arg(long, default_value_t = 1e-3)]
        pfa: f64,
    },
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.experiment.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.experiment.out_dir = o.clone();
    }
    Ok(cfg)
}

fn resolve(cfg: &mut RunConfig, o: &Overrides) -> Result<(SystemConfig, CpmConfig)> {
    if let Some(db) = o.snr_db {
        cfg.system.set_snr_sample_db(db);
    }
    if let Some(b) = o.beta {
        cfg.system.comm_fraction = b;
    }
    if let Some(h) = o.h {
        cfg.cpm.mod_index = h;
    }
    if let Some(l) = o.alphabet {
        cfg.cpm.alphabet_size = l;
    }
    if let Some(lp) = o.preamble_len {
        cfg.cpm.preamble_len = lp;
    }
    if o.data_len.is_some() {
        cfg.cpm.data_len = o.data_len;
    }
    cfg.system.validate()?;
    let cpm = CpmConfig::from_params(&cfg.system, &cfg.cpm)?;
    Ok((cfg.system.clone(), cpm))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn show(key: &str, value: impl std::fmt::Display) {
    println!("{key} = {value}");
}

fn cmd_mcrb(mut cfg: RunConfig, o: &Overrides, out: Option<&Path>) -> Result<()> {
    let (sys, cpm) = resolve(&mut cfg, o)?;
    let bound = mcrb_tau(&sys, &cpm)?;
    let c = effective_rate(&sys, &cpm)?;
    let range_std = SPEED_OF_LIGHT * bound.sqrt();
    show("snr_sample_db", format!("{:.4}", lin_to_db(sys.snr_sample())));
    show("beta", sys.comm_fraction);
    show("mcrb_tau_s2", format!("{bound:.6e}"));
    show("range_std_m", format!("{range_std:.6e}"));
    show("crb_sensing_only_s2", format!("{:.6e}", crb_sensing_only(&sys)?));
    show("xi", format!("{:.6e}", c.xi));
    show("sinr_eff_db", format!("{:.4}", lin_to_db(c.sinr_eff)));
    show("rate_bps", format!("{:.6e}", c.rate_bps));
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut t = Table::new(&["snr_db", "beta", "mcrb", "crb_sensing_only"]);
        t.push(vec![lin_to_db(sys.snr_sample()), sys.comm_fraction, bound, crb_sensing_only(&sys)?]);
        let path = dir.join("mcrb_sweep.csv");
        t.write(&path)?;
        show("csv", path.display());
    }
    Ok(())
}

fn cmd_pareto(mut cfg: RunConfig, o: &Overrides, s_min: Option<f64>, points: usize, out: &Path) -> Result<()> {
    let h = o.h.unwrap_or(cfg.cpm.mod_index);
    let l = o.alphabet.unwrap_or(cfg.cpm.alphabet_size);
    cfg.cpm.mod_index = h;
    cfg.cpm.alphabet_size = l;
    let check = validate_phase_constraint(ModIndex::from_f64(h)?, l);
    if !check.pass {
        return Err(Error::PhaseConstraint { value: h * (l as f64 - 1.0), l_max: check.l_max });
    }
    if points < 2 {
        return Err(Error::Config("--points must be >= 2".into()));
    }
    let ba = ratio_ba(h, l);
    let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let front = pareto_frontier(ba, &grid)?;
    ensure_dir(out)?;
    let mut t = Table::new(&["beta", "s_norm", "c_norm"]);
    for p in &front {
        t.push(vec![p.beta, p.s_norm, p.c_norm]);
    }
    let path = out.join("pareto.csv");
    t.write(&path)?;
    show("a_over_b", format!("{:.6}", 1.0 / ba));
    show("b_over_a", format!("{ba:.6e}"));
    if let Some(s) = s_min {
        show("optimal_beta", format!("{:.6}", optimal_beta(ba, s)?));
    }
    show("csv", path.display());
    Ok(())
}

fn cmd_estimate(mut cfg: RunConfig, o: &Overrides, window: Window, export: bool, out: &Path) -> Result<()> {
    let (sys, cpm) = resolve(&mut cfg, o)?;
    let sig = draw_signal(&sys, &cpm, cfg.experiment.seed)?;
    let w = match window {
        Window::Preamble => EstimationWindow::Preamble,
        Window::KnownFrame => EstimationWindow::KnownFrame,
        Window::Blind => EstimationWindow::Blind,
    };
    let est = estimate_beat_frequency(&sig, &cpm, &SearchOptions::default().with_window(w))?;
    show("beat_freq_true_hz", format!("{:.3}", sig.truth.beat_freq_hz));
    show("beat_freq_hat_hz", format!("{:.3}", est.f_hat_hz));
    show("range_true_m", sys.range_m);
    show("range_hat_m", format!("{:.6}", est.range_hat_m));
    show("theta_hat_rad", format!("{:.6}", est.theta_hat_rad));
    show("grid_resolution_hz", format!("{:.3}", est.grid_resolution_hz));
    if export {
        ensure_dir(out)?;
        write_binary(&out.join("beat.bin"), &sig)?;
        write_sidecar(&out.join("beat.meta"), &sig)?;
        write_csv(&out.join("beat.csv"), &sig)?;
        show("exported", out.join("beat.bin").display());
    }
    Ok(())
}

fn cmd_sync(mut cfg: RunConfig, o: &Overrides, pfa: f64) -> Result<()> {
    let (sys, cpm) = resolve(&mut cfg, o)?;
    let sig = draw_signal(&sys, &cpm, cfg.experiment.seed)?;
    let model = build_model(&sys, &cpm, 0.0)?;
    let eta = solve_threshold(&model, pfa)?;
    let d = pd_pfa(&model, &model, eta)?;
    let coarse = estimate_beat_frequency(&sig, &cpm, &SearchOptions::default().with_window(EstimationWindow::Blind))?;
    let r = synchronize(&sig, coarse.f_hat_hz, &cpm, eta)?;
    show("threshold", format!("{eta:.6e}"));
    show("pd_analytic", format!("{:.6}", d.pd));
    show("pfa_analytic", format!("{:.6e}", d.pfa));
    show("coarse_freq_hz", format!("{:.3}", coarse.f_hat_hz));
    show("m_true", sig.truth.start_index);
    show("m_hat", r.m_hat);
    show("lambda_max", format!("{:.6e}", r.lambda_max));
    show("detected", r.detected);
    Ok(())
}

fn cmd_demod(mut cfg: RunConfig, o: &Overrides, span: usize) -> Result<()> {
    let (sys, cpm) = resolve(&mut cfg, o)?;
    let trellis = CpmTrellis::new(&cpm)?;
    let sig = draw_signal(&sys, &cpm, cfg.experiment.seed)?;
    let comp = sig.compensated(sig.truth.beat_freq_hz, 0.0);
    let v = demodulate(&comp, &cpm, &trellis, cpm.start_index, Detector::Viterbi)?;
    let c = demodulate(&comp, &cpm, &trellis, cpm.start_index, Detector::Correlator { span })?;
    show("trellis_states", trellis.num_states);
    show("data_symbols", cpm.data_len);
    show("ser_viterbi", format!("{:.6}", v.ser.unwrap_or(f64::NAN)));
    show("ser_correlator", format!("{:.6}", c.ser.unwrap_or(f64::NAN)));
    show("phase_offset_rad", format!("{:.6}", v.phase_offset_rad));
    Ok(())
}

fn cmd_run(mut cfg: RunConfig, kind: Option<&str>, n_trials: Option<usize>, plots: bool) -> Result<()> {
    if let Some(k) = kind {
        cfg.experiment.kind = k.parse::<ExperimentKind>()?;
    }
    if let Some(n) = n_trials {
        cfg.experiment.n_trials = n;
    }
    cfg.experiment.plots |= plots;
    let rec = run_experiment(&cfg)?;
    show("kind", &rec.kind);
    show("config_sha256", &rec.config_sha256);
    show("points", rec.points);
    show("failures", rec.failures.len());
    for f in &rec.failures {
        eprintln!("{}", json!({ "warning": "point-failed", "point": f.point, "message": f.error }));
    }
    for (fig, files) in &rec.figures {
        show(&format!("figure.{fig}"), files.join(", "));
    }
    show("manifest", cfg.experiment.out_dir.join("manifest.json").display());
    show("wall_time_s", format!("{:.3}", rec.wall_time_s));
    Ok(())
}

fn cmd_chain(mut cfg: RunConfig, o: &Overrides, pfa: f64) -> Result<()> {
    let (sys, cpm) = resolve(&mut cfg, o)?;
    let trellis = CpmTrellis::new(&cpm)?;
    let eta = solve_threshold(&build_model(&sys, &cpm, 0.0)?, pfa)?;
    let t = run_chain(&sys, &cpm, &trellis, eta, cfg.experiment.seed, &ChainOptions::default())?;
    show("beat_freq_true_hz", format!("{:.3}", t.beat_freq_true_hz));
    show("beat_freq_coarse_hz", format!("{:.3}", t.coarse.f_hat_hz));
    show("beat_freq_fine_hz", format!("{:.3}", t.fine.f_hat_hz));
    show("residual_freq_hz", format!("{:.3}", t.residual_freq_hz));
    show("range_hat_m", format!("{:.6}", t.fine.range_hat_m));
    show("threshold", format!("{eta:.6e}"));
    show("lambda_max", format!("{:.6e}", t.sync.lambda_max));
    show("detected", t.sync.detected);
    show("m_true", t.start_true);
    show("m_glrt", t.sync.m_hat);
    show("m_hat", t.start_hat);
    show("ser_viterbi", format!("{:.6}", t.viterbi.ser.unwrap_or(f64::NAN)));
    show("ser_correlator", format!("{:.6}", t.correlator.ser.unwrap_or(f64::NAN)));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = base_config(&cli.common)?;
    let out = cfg.experiment.out_dir.clone();
    match &cli.cmd {
        Cmd::Mcrb(o) => cmd_mcrb(cfg, o, cli.common.out.as_deref()),
        Cmd::Pareto { o, s_min, points } => cmd_pareto(cfg, o, *s_min, *points, &out),
        Cmd::Estimate { o, window, export } => cmd_estimate(cfg, o, *window, *export, &out),
        Cmd::Sync { o, pfa } => cmd_sync(cfg, o, *pfa),
        Cmd::Demod { o, span } => cmd_demod(cfg, o, *span),
        Cmd::Run { kind, n_trials, plots } => cmd_run(cfg, kind.as_deref(), *n_trials, *plots),
        Cmd::Chain { o, pfa } => cmd_chain(cfg, o, *pfa),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", json!({ "error": "usage", "message": msg.trim() }));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
