//! Learning-curve smoothing, end-of-training summaries and the curve file
//! format (`iteration,mse` header followed by CSV rows).

use std::io::{BufRead, Write};

use crate::error::{Error, FormatError, Result};

/// Trailing moving average with a growing window over the first
/// `window − 1` entries.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Validation("cannot smooth an empty series".into()));
    }
    if window == 0 {
        return Err(Error::Validation("window must be at least 1".into()));
    }
    if window == 1 {
        return Ok(series.to_vec());
    }
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, &v) in series.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= series[i - window];
        }
        let n = (i + 1).min(window);
        // rounding in the running sum must not leave the data range
        out.push((sum / n as f64).clamp(lo, hi));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailStats {
    pub mean: f64,
    /// Population (divide-by-n) standard deviation.
    pub std_dev: f64,
}

/// Mean and population standard deviation of the last `n` entries.
pub fn tail_stats(series: &[f64], n: usize) -> Result<TailStats> {
    if n == 0 {
        return Err(Error::Validation("tail length must be positive".into()));
    }
    if series.len() < n {
        return Err(Error::Size(format!(
            "series has {} entries, fewer than the requested tail of {n}",
            series.len()
        )));
    }
    let tail = &series[series.len() - n..];
    let mean = tail.iter().sum::<f64>() / n as f64;
    let var = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Ok(TailStats {
        mean,
        std_dev: var.sqrt(),
    })
}

pub const CURVE_HEADER: &str = "iteration,mse";

pub fn write_curve<W: Write>(mut out: W, series: &[f64]) -> std::io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for (i, v) in series.iter().enumerate() {
        writeln!(out, "{i},{v}")?;
    }
    out.flush()
}

/// Parses a curve file, returning the values in iteration order.
pub fn read_curve<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io("<curve>", e))?
        .ok_or_else(|| FormatError::Header("empty curve file".into()))?;
    if header.trim() != CURVE_HEADER {
        return Err(FormatError::Header(format!("expected header {CURVE_HEADER:?}, got {header:?}")).into());
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("<curve>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || FormatError::Inconsistent(format!("bad curve row {}: {line:?}", lineno + 2));
        let (i, v) = line.split_once(',').ok_or_else(bad)?;
        let i: usize = i.trim().parse().map_err(|_| bad())?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        if i != out.len() || !v.is_finite() {
            return Err(bad().into());
        }
        out.push(v);
    }
    Ok(out)
}

/// Writes `model,mean,std_dev` rows.
pub fn write_summary<W: Write>(mut out: W, rows: &[(String, TailStats)]) -> std::io::Result<()> {
    writeln!(out, "model,mean,std_dev")?;
    for (name, s) in rows {
        writeln!(out, "{name},{:.6},{:.6}", s.mean, s.std_dev)?;
    }
    out.flush()
}
