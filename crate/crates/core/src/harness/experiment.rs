use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config_file::{dump_config, EstimatorChoice, ExperimentKind, RunConfig};
use super::plot::{line_chart, series_from_table};
use super::sim::{coupling_check, delay_mse, exceedance, glrt_samples, ser_point};
use super::Table;
use crate::bounds::{
    coupling_report, crb_sensing_only, effective_rate, freq_error_variance, mcrb_tau, pareto_frontier, ratio_ba,
};
use crate::demod::{ser_theory, CpmTrellis, Detector};
use crate::error::Result;
use crate::estimation::EstimationWindow;
use crate::rng::sub_seed;
use crate::signal::{lin_to_db, CpmConfig, CpmParams, SystemConfig};
use crate::sync::{build_model, pd_cfo_average, pd_pfa, solve_threshold};

/// Thresholds of the ROC sweep, as per-offset false-alarm targets.
const ROC_PFA: [f64; 9] = [1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.2, 0.5, 0.9];
const PARETO_GRID: usize = 1001;
const HERMITE_NODES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub point: String,
    pub error: String,
}

/// What a run produced. Everything except `wall_time_s` is a function of the
/// configuration alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub software: String,
    pub version: String,
    pub kind: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Figure name to the tables (and plots) that reproduce it.
    pub figures: BTreeMap<String, Vec<String>>,
    pub points: usize,
    pub failures: Vec<PointFailure>,
    pub wall_time_s: f64,
}

/// SHA-256 of the canonical configuration text.
pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(dump_config(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Point {
    snr_db: Option<f64>,
    beta: Option<f64>,
    alphabet: Option<usize>,
    preamble_len: Option<usize>,
}

impl Point {
    fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(v) = self.snr_db {
            parts.push(format!("snr_db={v}"));
        }
        if let Some(v) = self.beta {
            parts.push(format!("beta={v}"));
        }
        if let Some(v) = self.alphabet {
            parts.push(format!("L={v}"));
        }
        if let Some(v) = self.preamble_len {
            parts.push(format!("L_p={v}"));
        }
        parts.join(" ")
    }

    fn configs(&self, base: &RunConfig) -> Result<(SystemConfig, CpmConfig)> {
        let e = &base.experiment;
        let mut sys = base.system.clone();
        sys.comm_fraction = self.beta.unwrap_or(e.beta[0]);
        if let Some(db) = self.snr_db {
            sys.set_snr_sample_db(db);
        }
        sys.validate()?;
        let p = CpmParams {
            alphabet_size: self.alphabet.unwrap_or(e.alphabet[0]),
            preamble_len: self.preamble_len.unwrap_or(e.preamble_len[0]),
            ..base.cpm.clone()
        };
        let cfg = CpmConfig::from_params(&sys, &p)?;
        Ok((sys, cfg))
    }
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    next_point: u64,
    failures: Vec<PointFailure>,
}

impl Runner<'_> {
    /// Evaluate one grid point. Each point draws from its own seed stream,
    /// so a failure does not shift the randomness of later points.
    fn point<T>(&mut self, p: Point, f: impl FnOnce(SystemConfig, CpmConfig, u64) -> Result<T>) -> Option<T> {
        let seed = sub_seed(self.cfg.experiment.seed, self.next_point);
        self.next_point += 1;
        match p.configs(self.cfg).and_then(|(sys, cfg)| f(sys, cfg, seed)) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("point {} failed: {e}", p.label());
                self.failures.push(PointFailure { point: p.label(), error: e.to_string() });
                None
            }
        }
    }
}

struct Output {
    file: &'static str,
    figure: &'static str,
    table: Table,
    plot: Option<PlotSpec>,
}

struct PlotSpec {
    x: &'static str,
    ys: &'static [&'static str],
    group_by: &'static [&'static str],
    log_y: bool,
}

fn out(file: &'static str, figure: &'static str, header: &[&str], plot: Option<PlotSpec>) -> Output {
    Output { file, figure, table: Table::new(header), plot }
}

fn window(choice: EstimatorChoice) -> EstimationWindow {
    match choice {
        EstimatorChoice::Preamble => EstimationWindow::Preamble,
        EstimatorChoice::KnownFrame => EstimationWindow::KnownFrame,
    }
}

fn run_mcrb_vs_snr(r: &mut Runner) -> Vec<Output> {
    let e = r.cfg.experiment.clone();
    let mut mse = out(
        "mse_vs_snr.csv",
        "sensing_snr",
        &["snr_db", "beta", "mse_simulated_s2", "mcrb_s2", "n_trials", "mse_simulated_ci95_s2"],
        Some(PlotSpec { x: "snr_db", ys: &["mse_simulated_s2", "mcrb_s2"], group_by: &["beta"], log_y: true }),
    );
    let mut sweep = out(
        "mcrb_sweep.csv",
        "sensing_snr",
        &["snr_db", "beta", "mcrb", "crb_sensing_only"],
        Some(PlotSpec { x: "snr_db", ys: &["mcrb", "crb_sensing_only"], group_by: &["beta"], log_y: true }),
    );
    let mut coupling = out(
        "coupling.csv",
        "rate",
        &["snr_db", "xi", "sinr_eff", "eta_eff", "rate_bps", "beta"],
        Some(PlotSpec { x: "snr_db", ys: &["eta_eff"], group_by: &["beta"], log_y: false }),
    );
    for &beta in &e.beta {
        for &snr in &e.snr_db {
            let p = Point { snr_db: Some(snr), beta: Some(beta), ..Default::default() };
            let res = r.point(p, |sys, cfg, seed| {
                let bound = mcrb_tau(&sys, &cfg)?;
                let crb = crb_sensing_only(&sys)?;
                let c = effective_rate(&sys, &cfg)?;
                let m = delay_mse(&sys, &cfg, window(e.estimator), e.n_trials, seed)?;
                Ok((bound, crb, c, m))
            });
            if let Some((bound, crb, c, m)) = res {
                mse.table.push(vec![snr, beta, m.mean, bound, e.n_trials as f64, m.ci95]);
                sweep.table.push(vec![snr, beta, bound, crb]);
                coupling.table.push(vec![snr, c.xi, c.sinr_eff, c.eta_eff, c.rate_bps, beta]);
            }
        }
    }
    vec![mse, sweep, coupling]
}

fn run_mcrb_vs_beta(r: &mut Runner) -> Vec<Output> {
    let e = r.cfg.experiment.clone();
    let mut mse = out(
        "mse_vs_beta.csv",
        "sensing_beta",
        &["beta", "snr_db", "mse", "mcrb", "mse_ci95", "n_trials"],
        Some(PlotSpec { x: "beta", ys: &["mse", "mcrb"], group_by: &["snr_db"], log_y: true }),
    );
    for &snr in &e.snr_db {
        for &beta in &e.beta {
            let p = Point { snr_db: Some(snr), beta: Some(beta), ..Default::default() };
            let res = r.point(p, |sys, cfg, seed| {
                let bound = mcrb_tau(&sys, &cfg)?;
                Ok((bound, delay_mse(&sys, &cfg, window(e.estimator), e.n_trials, seed)?))
            });
            if let Some((bound, m)) = res {
                mse.table.push(vec![beta, snr, m.mean, bound, m.ci95, e.n_trials as f64]);
            }
        }
    }
    vec![mse]
}

fn run_roc(r: &mut Runner) -> Vec<Output> {
    let e = r.cfg.experiment.clone();
    let mut roc = out(
        "roc.csv",
        "roc",
        &[
            "pfa", "pd", "snr_db", "beta", "L_p", "eta", "pfa_simulated", "pfa_simulated_ci95", "pd_simulated",
            "pd_simulated_ci95",
        ],
        Some(PlotSpec { x: "pfa", ys: &["pd", "pd_simulated"], group_by: &["snr_db", "beta", "L_p"], log_y: false }),
    );
    for &snr in &e.snr_db {
        for &beta in &e.beta {
            for &lp in &e.preamble_len {
                let p = Point { snr_db: Some(snr), beta: Some(beta), preamble_len: Some(lp), ..Default::default() };
                let rows = r.point(p, |sys, cfg, seed| {
                    let model = build_model(&sys, &cfg, 0.0)?;
                    let sim = glrt_samples(&sys, &cfg, 0.0, e.n_trials, seed)?;
                    let mut rows = Vec::new();
                    for target in ROC_PFA {
                        let eta = solve_threshold(&model, target)?;
                        let d = pd_pfa(&model, &model, eta)?;
                        let pf = exceedance(&sim.h0, eta);
                        let pd = exceedance(&sim.h1, eta);
                        rows.push(vec![d.pfa, d.pd, snr, beta, lp as f64, eta, pf.mean, pf.ci95, pd.mean, pd.ci95]);
                    }
                    Ok(rows)
                });
                rows.into_iter().flatten().for_each(|row| roc.table.push(row));
            }
        }
    }
    vec![roc]
}

fn run_pd_vs_snr(r: &mut Runner) -> Vec<Output> {
    let e = r.cfg.experiment.clone();
    let mut pd = out(
        "pd_vs_snr.csv",
        "pd_snr",
        &[
            "snr_db", "pd_ideal", "pd_cfo_analytic", "pd_simulated", "L_p", "pd_simulated_ci95", "beta", "eta",
            "freq_var_hz2",
        ],
        Some(PlotSpec { x: "snr_db", ys: &["pd_ideal", "pd_cfo_analytic", "pd_simulated"], group_by: &["L_p"], log_y: false }),
    );
    for &lp in &e.preamble_len {
        for &snr in &e.snr_db {
            let p = Point { snr_db: Some(snr), preamble_len: Some(lp), ..Default::default() };
            let row = r.point(p, |sys, cfg, seed| {
                let model = build_model(&sys, &cfg, 0.0)?;
                let eta = solve_threshold(&model, e.pfa)?;
                let ideal = pd_pfa(&model, &model, eta)?.pd;
                let var = freq_error_variance(&sys, &cfg)?;
                let cfo = pd_cfo_average(&sys, &cfg, var, eta, HERMITE_NODES)?;
                let sim = exceedance(&glrt_samples(&sys, &cfg, var, e.n_trials, seed)?.h1, eta);
                Ok(vec![snr, ideal, cfo, sim.mean, lp as f64, sim.ci95, sys.comm_fraction, eta, var])
            });
            row.into_iter().for_each(|row| pd.table.push(row));
        }
    }
    vec![pd]
}

fn run_rate_vs_snr(r: &mut Runner) -> Vec<Output> {
    let e = r.cfg.experiment.clone();
    let mut ser = out(
        "ser_vs_snr.csv",
        "rate",
        &[
            "snr_db", "L", "beta", "ser_viterbi", "ser_correlator", "ser_theory", "ser_viterbi_ci95",
            "ser_correlator_ci95",
        ],
        Some(PlotSpec { x: "snr_db", ys: &["ser_viterbi", "ser_correlator", "ser_theory"], group_by: &["L", "beta"], log_y: true }),
    );
    let mut rate = out(
        "rate_vs_snr.csv",
        "rate",
        &[
            "snr_db", "L", "beta", "eta_shannon", "eta_unconstrained", "eta_measured_viterbi",
            "eta_measured_correlator", "r_max", "eta_measured_viterbi_ci95", "eta_measured_correlator_ci95",
        ],
        Some(PlotSpec {
            x: "snr_db",
            ys: &["eta_shannon", "eta_unconstrained", "eta_measured_viterbi", "eta_measured_correlator", "r_max"],
            group_by: &["L", "beta"],
            log_y: false,
        }),
    );
    for &l in &e.alphabet {
        for &beta in &e.beta {
            for &snr in &e.snr_db {
                let p = Point { snr_db: Some(snr), beta: Some(beta), alphabet: Some(l), ..Default::default() };
                let res = r.point(p, |sys, cfg, seed| {
                    let trellis = CpmTrellis::new(&cfg)?;
                    let mcrb = mcrb_tau(&sys, &cfg)?;
                    let var = freq_error_variance(&sys, &cfg)?;
                    let c = coupling_report(&sys, &cfg, mcrb, var);
                    let s = ser_point(&sys, &cfg, &trellis, Detector::DEFAULT_CORRELATOR, var, e.n_trials, seed)?;
                    Ok((c, s, cfg.bits_per_symbol()))
                });
                if let Some((c, s, bits)) = res {
                    let th = ser_theory(c.sinr_eff, l);
                    ser.table.push(vec![
                        snr, l as f64, beta, s.viterbi.mean, s.correlator.mean, th, s.viterbi.ci95, s.correlator.ci95,
                    ]);
                    rate.table.push(vec![
                        snr,
                        l as f64,
                        beta,
                        (1.0 + c.symbol_snr).log2(),
                        c.eta,
                        bits * (1.0 - s.viterbi.mean),
                        bits * (1.0 - s.correlator.mean),
                        bits,
                        bits * s.viterbi.ci95,
                        bits * s.correlator.ci95,
                    ]);
                }
            }
        }
    }
    vec![ser, rate]
}

fn run_pareto(r: &mut Runner) -> Vec<Output> {
    let e = r.cfg.experiment.clone();
    let h = r.cfg.cpm.mod_index;
    let mut pareto = out(
        "pareto.csv",
        "pareto",
        &["beta", "s_norm", "c_norm", "L", "ratio_ba"],
        Some(PlotSpec { x: "c_norm", ys: &["s_norm"], group_by: &["L"], log_y: false }),
    );
    let grid: Vec<f64> = (0..PARETO_GRID).map(|i| i as f64 / (PARETO_GRID - 1) as f64).collect();
    for &l in &e.alphabet {
        let p = Point { alphabet: Some(l), ..Default::default() };
        let res = r.point(p, |_, _, _| {
            let ba = ratio_ba(h, l);
            Ok((ba, pareto_frontier(ba, &grid)?))
        });
        if let Some((ba, front)) = res {
            for t in front {
                pareto.table.push(vec![t.beta, t.s_norm, t.c_norm, l as f64, ba]);
            }
        }
    }
    vec![pareto]
}

fn run_full_chain(r: &mut Runner) -> Vec<Output> {
    let e = r.cfg.experiment.clone();
    let mut chain = out(
        "chain.csv",
        "rate",
        &[
            "snr_db", "beta", "L", "L_p", "ser_viterbi", "ser_viterbi_ci95", "ser_correlator", "ser_correlator_ci95",
            "freq_var_hz2", "xi", "rho_sym_db", "rho_eff_db", "eta_measured", "eta_measured_ci95", "eta_predicted",
            "eta_predicted_ci95", "eta_capacity", "timing_rmse", "detect_rate", "detect_rate_ci95", "n_trials",
        ],
        Some(PlotSpec { x: "snr_db", ys: &["eta_measured", "eta_predicted", "eta_capacity"], group_by: &["beta", "L", "L_p"], log_y: false }),
    );
    for &beta in &e.beta {
        for &l in &e.alphabet {
            for &lp in &e.preamble_len {
                for &snr in &e.snr_db {
                    let p = Point { snr_db: Some(snr), beta: Some(beta), alphabet: Some(l), preamble_len: Some(lp) };
                    let res = r.point(p, |sys, cfg, seed| {
                        let trellis = CpmTrellis::new(&cfg)?;
                        let eta = solve_threshold(&build_model(&sys, &cfg, 0.0)?, e.pfa)?;
                        coupling_check(&sys, &cfg, &trellis, eta, e.n_trials, seed)
                    });
                    if let Some(c) = res {
                        let ch = c.chain;
                        chain.table.push(vec![
                            snr,
                            beta,
                            l as f64,
                            lp as f64,
                            ch.ser_viterbi.mean,
                            ch.ser_viterbi.ci95,
                            ch.ser_correlator.mean,
                            ch.ser_correlator.ci95,
                            ch.freq_var,
                            c.xi,
                            lin_to_db(c.rho_sym),
                            lin_to_db(c.rho_eff),
                            c.eta_measured.mean,
                            c.eta_measured.ci95,
                            c.eta_predicted.mean,
                            c.eta_predicted.ci95,
                            c.eta_capacity,
                            ch.timing_rmse,
                            ch.detect_rate.mean,
                            ch.detect_rate.ci95,
                            e.n_trials as f64,
                        ]);
                    }
                }
            }
        }
    }
    vec![chain]
}

fn write_outputs(outputs: &[Output], dir: &Path, plots: bool, figures: &mut BTreeMap<String, Vec<String>>) -> Result<()> {
    for o in outputs {
        o.table.write(&dir.join(o.file))?;
        figures.entry(o.figure.to_string()).or_default().push(o.file.to_string());
        if let (true, Some(ps)) = (plots, &o.plot) {
            let series = series_from_table(&o.table, ps.x, ps.ys, ps.group_by)?;
            let svg = line_chart(o.file, ps.x, &ps.ys.join(", "), &series, ps.log_y);
            let name = PathBuf::from(o.file).with_extension("svg");
            std::fs::write(dir.join(&name), svg)?;
            figures.entry(o.figure.to_string()).or_default().push(name.display().to_string());
        }
    }
    Ok(())
}

/// Run the configured experiment: write its tables, optional plots, the
/// canonical configuration and `manifest.json` into the output directory.
/// Grid points that fail are listed in the record and skipped.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.experiment.validate()?;
    let started = Instant::now();
    let dir = &cfg.experiment.out_dir;
    std::fs::create_dir_all(dir)?;
    let mut r = Runner { cfg, next_point: 0, failures: Vec::new() };
    let outputs = match cfg.experiment.kind {
        ExperimentKind::McrbVsSnr => run_mcrb_vs_snr(&mut r),
        ExperimentKind::McrbVsBeta => run_mcrb_vs_beta(&mut r),
        ExperimentKind::Roc => run_roc(&mut r),
        ExperimentKind::PdVsSnr => run_pd_vs_snr(&mut r),
        ExperimentKind::RateVsSnr => run_rate_vs_snr(&mut r),
        ExperimentKind::Pareto => run_pareto(&mut r),
        ExperimentKind::FullChain => run_full_chain(&mut r),
    };
    let mut figures = BTreeMap::new();
    write_outputs(&outputs, dir, cfg.experiment.plots, &mut figures)?;
    std::fs::write(dir.join("config.ini"), dump_config(cfg))?;
    let record = RunRecord {
        software: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.experiment.kind.name().to_string(),
        config_sha256: config_hash(cfg),
        seed: cfg.experiment.seed,
        figures,
        points: r.next_point as usize,
        failures: r.failures,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| crate::Error::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(record)
}
