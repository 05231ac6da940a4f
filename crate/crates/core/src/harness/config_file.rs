//! INI-style run configuration with `[system]`, `[cpm]` and `[experiment]`
//! sections. Every key is optional; omitted keys keep the defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::{db_to_lin, Clutter, CpmConfig, CpmParams, PreamblePattern, PulseShape, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    McrbVsSnr,
    McrbVsBeta,
    Roc,
    PdVsSnr,
    RateVsSnr,
    Pareto,
    FullChain,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::McrbVsSnr,
        ExperimentKind::McrbVsBeta,
        ExperimentKind::Roc,
        ExperimentKind::PdVsSnr,
        ExperimentKind::RateVsSnr,
        ExperimentKind::Pareto,
        ExperimentKind::FullChain,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::McrbVsSnr => "mcrb_vs_snr",
            ExperimentKind::McrbVsBeta => "mcrb_vs_beta",
            ExperimentKind::Roc => "roc",
            ExperimentKind::PdVsSnr => "pd_vs_snr",
            ExperimentKind::RateVsSnr => "rate_vs_snr",
            ExperimentKind::Pareto => "pareto",
            ExperimentKind::FullChain => "full_chain",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|e| e.name() == k)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|e| e.name()).collect();
                Error::Config(format!("unknown experiment kind '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Which estimator feeds the range-error experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Preamble,
    KnownFrame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub snr_db: Vec<f64>,
    pub beta: Vec<f64>,
    pub alphabet: Vec<usize>,
    pub preamble_len: Vec<usize>,
    pub n_trials: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub pfa: f64,
    pub estimator: EstimatorChoice,
    pub plots: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::McrbVsSnr,
            snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            beta: vec![0.1, 0.2, 0.5],
            alphabet: vec![4],
            preamble_len: vec![4],
            n_trials: 1000,
            seed: 1,
            out_dir: PathBuf::from("out"),
            pfa: 1e-3,
            estimator: EstimatorChoice::KnownFrame,
            plots: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("snr_db", self.snr_db.is_empty()),
            ("beta", self.beta.is_empty()),
            ("alphabet", self.alphabet.is_empty()),
            ("preamble_len", self.preamble_len.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("experiment grid '{name}' is empty")));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if let Some(b) = self.beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::Config(format!("beta {b} outside [0, 1]")));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::Config(format!("pfa must lie in (0, 1) (got {})", self.pfa)));
        }
        Ok(())
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub cpm: CpmParams,
    pub experiment: ExperimentSpec,
}

impl RunConfig {
    /// Check every constraint, including the resolved modulation format.
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        CpmConfig::from_params(&self.system, &self.cpm)?;
        self.experiment.validate()
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text, &path.display().to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.trim().parse::<T>().map_err(|_| format!("cannot parse '{}'", v.trim()))
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(parse).collect()
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected a boolean, got '{other}'")),
    }
}

fn parse_opt_usize(v: &str) -> std::result::Result<Option<usize>, String> {
    if v.trim().eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(v).map(Some)
    }
}

fn parse_clutter(v: &str) -> std::result::Result<Vec<Clutter>, String> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let f: Vec<f64> = item.split(':').map(parse).collect::<std::result::Result<_, _>>()?;
            match f.as_slice() {
                [a, fb, fd] => Ok(Clutter { amplitude: *a, beat_freq_hz: *fb, doppler_hz: *fd }),
                _ => Err(format!("clutter entry '{item}' must be amplitude:beat_freq_hz:doppler_hz")),
            }
        })
        .collect()
}

fn parse_preamble(v: &str) -> std::result::Result<PreamblePattern, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "ramp" => Ok(PreamblePattern::Ramp),
        "alternating" => Ok(PreamblePattern::Alternating),
        _ => parse_list(v).map(PreamblePattern::Explicit),
    }
}

fn parse_estimator(v: &str) -> std::result::Result<EstimatorChoice, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "preamble" => Ok(EstimatorChoice::Preamble),
        "known_frame" => Ok(EstimatorChoice::KnownFrame),
        other => Err(format!("estimator must be preamble or known_frame, got '{other}'")),
    }
}

fn apply(cfg: &mut RunConfig, section: &str, key: &str, v: &str) -> std::result::Result<(), String> {
    let s = &mut cfg.system;
    let c = &mut cfg.cpm;
    let e = &mut cfg.experiment;
    match (section, key) {
        ("system", "carrier_freq_hz") => s.carrier_freq_hz = parse(v)?,
        ("system", "total_bandwidth_hz") => s.total_bandwidth_hz = parse(v)?,
        ("system", "obs_window_s") => s.obs_window_s = parse(v)?,
        ("system", "pri_s") => s.pri_s = parse(v)?,
        ("system", "sample_rate_hz") => s.sample_rate_hz = parse(v)?,
        ("system", "beta") | ("system", "comm_fraction") => s.comm_fraction = parse(v)?,
        ("system", "range_m") => s.range_m = parse(v)?,
        ("system", "amplitude") => s.amplitude = parse(v)?,
        ("system", "noise_var") => s.noise_var = parse(v)?,
        ("system", "snr_db") => s.noise_var = s.amplitude * s.amplitude / db_to_lin(parse(v)?),
        ("system", "tx_power_w") => s.tx_power_w = parse(v)?,
        ("system", "tx_gain") => s.tx_gain = parse(v)?,
        ("system", "rx_gain") => s.rx_gain = parse(v)?,
        ("system", "ris_rows") => s.ris_rows = parse(v)?,
        ("system", "ris_cols") => s.ris_cols = parse(v)?,
        ("system", "pin_theta") => s.pin_theta = parse_bool(v)?,
        ("system", "clutter") => s.clutter = parse_clutter(v)?,
        ("cpm", "h") | ("cpm", "mod_index") => c.mod_index = parse(v)?,
        ("cpm", "alphabet_size") | ("cpm", "L") => c.alphabet_size = parse(v)?,
        ("cpm", "preamble_len") => c.preamble_len = parse(v)?,
        ("cpm", "samples_per_symbol") => c.samples_per_symbol = parse_opt_usize(v)?,
        ("cpm", "data_len") => c.data_len = parse_opt_usize(v)?,
        ("cpm", "start_offset_s") => c.start_offset_s = parse(v)?,
        ("cpm", "preamble") => c.preamble = parse_preamble(v)?,
        ("cpm", "pulse") => c.pulse = PulseShape::parse(v).map_err(|e| e.to_string())?,
        ("experiment", "kind") => e.kind = v.parse().map_err(|e: Error| e.to_string())?,
        ("experiment", "snr_db") => e.snr_db = parse_list(v)?,
        ("experiment", "beta") => e.beta = parse_list(v)?,
        ("experiment", "alphabet") => e.alphabet = parse_list(v)?,
        ("experiment", "preamble_len") => e.preamble_len = parse_list(v)?,
        ("experiment", "n_trials") => e.n_trials = parse(v)?,
        ("experiment", "seed") => e.seed = parse(v)?,
        ("experiment", "out_dir") => e.out_dir = PathBuf::from(v.trim()),
        ("experiment", "pfa") => e.pfa = parse(v)?,
        ("experiment", "estimator") => e.estimator = parse_estimator(v)?,
        ("experiment", "plots") => e.plots = parse_bool(v)?,
        _ => return Err(format!("unknown key '{key}' in section [{section}]")),
    }
    Ok(())
}

/// Parse configuration text. `origin` labels error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        // '#' starts a comment; ';' separates clutter entries
        let line = raw.split('#').next().unwrap_or("").trim();
        let err = |msg: String| Error::Parse { path: origin.to_string(), line: i + 1, msg };
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_ascii_lowercase();
            if !matches!(name.as_str(), "system" | "cpm" | "experiment") {
                return Err(err(format!("unknown section [{name}]")));
            }
            section = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let sec = section.as_deref().ok_or_else(|| err("key outside of any section".into()))?;
        apply(&mut cfg, sec, key.trim(), value).map_err(err)?;
    }
    Ok(cfg)
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Canonical text form listing every key.
pub fn dump_config(cfg: &RunConfig) -> String {
    let s = &cfg.system;
    let c = &cfg.cpm;
    let e = &cfg.experiment;
    let mut out = String::new();
    let auto = |v: Option<usize>| v.map_or("auto".to_string(), |x| x.to_string());
    let clutter: Vec<String> = s
        .clutter
        .iter()
        .map(|q| format!("{}:{}:{}", q.amplitude, q.beat_freq_hz, q.doppler_hz))
        .collect();
    let preamble = match &c.preamble {
        PreamblePattern::Ramp => "ramp".to_string(),
        PreamblePattern::Alternating => "alternating".to_string(),
        PreamblePattern::Explicit(v) => list(v),
    };
    let _ = writeln!(out, "[system]");
    let _ = writeln!(out, "carrier_freq_hz = {:e}", s.carrier_freq_hz);
    let _ = writeln!(out, "total_bandwidth_hz = {:e}", s.total_bandwidth_hz);
    let _ = writeln!(out, "obs_window_s = {:e}", s.obs_window_s);
    let _ = writeln!(out, "pri_s = {:e}", s.pri_s);
    let _ = writeln!(out, "sample_rate_hz = {:e}", s.sample_rate_hz);
    let _ = writeln!(out, "beta = {}", s.comm_fraction);
    let _ = writeln!(out, "range_m = {}", s.range_m);
    let _ = writeln!(out, "amplitude = {:e}", s.amplitude);
    let _ = writeln!(out, "noise_var = {:e}", s.noise_var);
    let _ = writeln!(out, "tx_power_w = {}", s.tx_power_w);
    let _ = writeln!(out, "tx_gain = {}", s.tx_gain);
    let _ = writeln!(out, "rx_gain = {}", s.rx_gain);
    let _ = writeln!(out, "ris_rows = {}", s.ris_rows);
    let _ = writeln!(out, "ris_cols = {}", s.ris_cols);
    let _ = writeln!(out, "pin_theta = {}", s.pin_theta);
    let _ = writeln!(out, "clutter = {}", clutter.join("; "));
    let _ = writeln!(out, "\n[cpm]");
    let _ = writeln!(out, "h = {}", c.mod_index);
    let _ = writeln!(out, "alphabet_size = {}", c.alphabet_size);
    let _ = writeln!(out, "preamble_len = {}", c.preamble_len);
    let _ = writeln!(out, "samples_per_symbol = {}", auto(c.samples_per_symbol));
    let _ = writeln!(out, "data_len = {}", auto(c.data_len));
    let _ = writeln!(out, "start_offset_s = {:e}", c.start_offset_s);
    let _ = writeln!(out, "preamble = {preamble}");
    let _ = writeln!(out, "pulse = {}", c.pulse.name());
    let _ = writeln!(out, "\n[experiment]");
    let _ = writeln!(out, "kind = {}", e.kind.name());
    let _ = writeln!(out, "snr_db = {}", list(&e.snr_db));
    let _ = writeln!(out, "beta = {}", list(&e.beta));
    let _ = writeln!(out, "alphabet = {}", list(&e.alphabet));
    let _ = writeln!(out, "preamble_len = {}", list(&e.preamble_len));
    let _ = writeln!(out, "n_trials = {}", e.n_trials);
    let _ = writeln!(out, "seed = {}", e.seed);
    let _ = writeln!(out, "out_dir = {}", e.out_dir.display());
    let _ = writeln!(out, "pfa = {:e}", e.pfa);
    let estimator = match e.estimator {
        EstimatorChoice::Preamble => "preamble",
        EstimatorChoice::KnownFrame => "known_frame",
    };
    let _ = writeln!(out, "estimator = {estimator}");
    let _ = writeln!(out, "plots = {}", e.plots);
    out
}

/// Canonical form of configuration text: parse, then dump.
pub fn normalize_config(text: &str) -> Result<String> {
    Ok(dump_config(&parse_config(text, "<text>")?))
}
