use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::BeatSignal;
use crate::error::{Error, Result};

/// Samples as interleaved little-endian f64 pairs (re, im).
pub fn write_binary(path: &Path, signal: &BeatSignal) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in &signal.samples {
        w.write_all(&s.re.to_le_bytes())?;
        w.write_all(&s.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<Vec<Complex64>> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() % 16 != 0 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: format!("{} bytes is not a whole number of complex samples", buf.len()),
        });
    }
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

fn join(v: impl Iterator<Item = i32>) -> String {
    v.map(|b| b.to_string()).collect::<Vec<_>>().join(",")
}

/// Ground truth as `key = value` lines.
pub fn write_sidecar(path: &Path, signal: &BeatSignal) -> Result<()> {
    let t = &signal.truth;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "num_samples = {}", signal.len())?;
    writeln!(w, "sample_period_s = {:e}", signal.sample_period_s)?;
    writeln!(w, "chirp_rate_hz_per_s = {:e}", signal.chirp_rate)?;
    writeln!(w, "noise_var = {:e}", signal.noise_var)?;
    writeln!(w, "amplitude = {:e}", t.amplitude)?;
    writeln!(w, "tau_s = {:e}", t.tau_s)?;
    writeln!(w, "beat_freq_hz = {:e}", t.beat_freq_hz)?;
    writeln!(w, "theta_rad = {}", t.theta_rad)?;
    writeln!(w, "psi_rad = {}", t.psi_rad)?;
    writeln!(w, "start_offset_s = {:e}", t.start_offset_s)?;
    writeln!(w, "start_index = {}", t.start_index)?;
    writeln!(w, "preamble = {}", join(t.frame.preamble.iter().copied()))?;
    writeln!(w, "data = {}", join(t.frame.data.iter().copied()))?;
    if let Some(c) = signal.compensation {
        writeln!(w, "compensation_freq_hz = {:e}", c.freq_hz)?;
        writeln!(w, "compensation_phase_rad = {}", c.phase_rad)?;
        writeln!(w, "residual_freq_hz = {:e}", c.residual_freq_hz)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, signal: &BeatSignal) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n,re,im")?;
    for (n, s) in signal.samples.iter().enumerate() {
        writeln!(w, "{n},{},{}", s.re, s.im)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_beat, CpmConfig, CpmParams, Frame, SystemConfig};
    use rand::SeedableRng;

    #[test]
    fn binary_round_trip_and_sidecar() {
        let sys = SystemConfig::default();
        let cfg = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        let frame = Frame::random(&cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        let s = synthesize_beat(&sys, &cfg, &frame, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("x.bin");
        write_binary(&bin, &s).unwrap();
        assert_eq!(read_binary(&bin).unwrap(), s.samples);
        let meta = dir.path().join("x.meta");
        write_sidecar(&meta, &s).unwrap();
        let text = std::fs::read_to_string(meta).unwrap();
        assert!(text.contains("start_index = 200"));
        let csv = dir.path().join("x.csv");
        write_csv(&csv, &s).unwrap();
        assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), s.len() + 1);
    }
}
