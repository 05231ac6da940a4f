//! Configuration-driven experiments: seeded parallel Monte Carlo, CSV
//! tables, a run manifest and optional SVG plots.

mod config_file;
mod experiment;
pub mod montecarlo;
pub mod plot;
pub mod sim;

use std::path::Path;

pub use config_file::{
    dump_config, load_config, normalize_config, parse_config, EstimatorChoice, ExperimentKind, ExperimentSpec,
    RunConfig,
};
pub use experiment::{config_hash, run_experiment, PointFailure, RunRecord};
pub use montecarlo::{mean_ci, proportion_ci, run_seeded, run_trials, Estimate};

use crate::error::{Error, Result};

/// A numeric table with named columns, stored as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Floats use the shortest representation that round-trips, so equal
    /// results give identical bytes.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { path: path.display().to_string(), line: i + 2, msg: e.to_string() })?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, 0.1 + 0.2]);
        t.push(vec![-3e-17, f64::NAN]);
        t.write(&path).unwrap();
        let back = Table::read(&path).unwrap();
        assert_eq!(back.header, t.header);
        assert_eq!(back.rows[0], t.rows[0]);
        assert_eq!(back.rows[1][0], -3e-17);
        assert!(back.rows[1][1].is_nan());
    }
}
