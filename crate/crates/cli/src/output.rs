//! Parallel sweep execution, CSV output and the run summary.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::engine::{quantities, Plan, PointError, Sample};
use crate::scenario::Kernel;

/// Results of a sweep: one row per sweep value, columns in [`Plan::columns`] order.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub sweep: Vec<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Largest relative error estimate per curve.
    pub max_error: Vec<(String, f64)>,
}

impl RunOutput {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Evaluates every curve at every sweep point on the current rayon pool.
pub fn run(plan: &Plan) -> Result<RunOutput, PointError> {
    let n_points = plan.sweep.len();
    let per_case: Vec<Vec<Sample>> = if plan.kernel == Kernel::Spectrum {
        plan.cases
            .par_iter()
            .map(|case| {
                let s = case.spectrum(plan.normalization, &plan.sweep).map_err(|error| PointError {
                    curve: case.label.clone(),
                    index: 0,
                    value: plan.sweep[0],
                    error,
                })?;
                Ok(s.values.iter().map(|v| Sample { values: vec![*v], error: s.error }).collect())
            })
            .collect::<Result<_, _>>()?
    } else {
        let tasks: Vec<(usize, usize)> = (0..plan.cases.len()).flat_map(|c| (0..n_points).map(move |i| (c, i))).collect();
        let flat: Vec<Sample> = tasks
            .par_iter()
            .map(|&(c, i)| {
                let case = &plan.cases[c];
                let value = plan.sweep[i];
                case.evaluate(plan.kernel, plan.normalization, value).map_err(|error| PointError {
                    curve: case.label.clone(),
                    index: i,
                    value,
                    error,
                })
            })
            .collect::<Result<_, _>>()?;
        let mut it = flat.into_iter();
        (0..plan.cases.len()).map(|_| it.by_ref().take(n_points).collect()).collect()
    };
    let rows = (0..n_points)
        .map(|i| per_case.iter().flat_map(|samples| samples[i].values.iter().copied()).collect())
        .collect();
    let max_error = plan
        .cases
        .iter()
        .zip(&per_case)
        .map(|(case, samples)| (case.label.clone(), samples.iter().map(|s| s.error).fold(0.0, f64::max)))
        .collect();
    Ok(RunOutput {
        sweep: plan.sweep.clone(),
        columns: plan.columns(),
        rows,
        max_error,
    })
}

fn value_unit(plan: &Plan) -> &'static str {
    use crate::scenario::Normalization::*;
    match (plan.kernel, plan.normalization) {
        (_, FreeSpaceRatio) => "dimensionless (ratio to vacuum)",
        (Kernel::Transfer, PaperFig3Units) => "(|d_A d_B| omega^3/(hbar eps0 c^3))^2/(8 pi)",
        (_, PaperFig3Units) => "transfer in (|d_A d_B| omega^3/(hbar eps0 c^3))^2/(8 pi); decay as ratio to vacuum",
        (Kernel::Spectrum, Si) => "J s / rad (spectral density per rad/s)",
        (Kernel::TotalRate, Si) => "1/s",
        (_, Si) => "transfer in 1/(s rad/s); decay in 1/s",
    }
}

/// Writes the CSV: `#` header lines, a column header, then `{:.12e}` rows.
pub fn write_csv(plan: &Plan, out: &RunOutput, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "# medfret {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# scenario: {}", plan.name)?;
    writeln!(w, "# scenario_sha256: {}", plan.hash)?;
    writeln!(w, "# sweep: {} [{}]", plan.variable.name(), plan.sweep_unit())?;
    writeln!(w, "# kernel: {}", quantities(plan.kernel).join(","))?;
    writeln!(w, "# normalization: {}", plan.normalization.name())?;
    writeln!(w, "# units: {}", value_unit(plan))?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["sweep_value".to_string()];
    header.extend(out.columns.iter().cloned());
    csv.write_record(&header)?;
    for (x, row) in out.sweep.iter().zip(&out.rows) {
        let mut record = vec![format!("{x:.12e}")];
        record.extend(row.iter().map(|v| format!("{v:.12e}")));
        csv.write_record(&record)?;
    }
    csv.flush()
}

/// Least-squares slope of `ln|y|` against `ln x` over points with `x` in `[lo, hi]`.
pub fn loglog_slope(x: &[f64], y: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(x, y)| **x >= lo && **x <= hi && **x > 0.0 && y.abs() > 0.0)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Local maxima of a sampled curve (interior points above both neighbours).
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1)).filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1]).collect()
}

/// Human-readable summary: peaks, requested slopes and error maxima.
pub fn summary(plan: &Plan, out: &RunOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} ({} points, {} curves)", plan.name, out.sweep.len(), plan.cases.len());
    for (j, name) in out.columns.iter().enumerate() {
        let y: Vec<f64> = out.rows.iter().map(|r| r[j]).collect();
        let (imax, vmax) = y.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        let (imin, vmin) = y.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        let _ = writeln!(
            s,
            "{name}: max {vmax:.6e} at {} = {:.6e}; min {vmin:.6e} at {:.6e}; {} local maxima",
            plan.variable.name(),
            out.sweep[imax],
            out.sweep[imin],
            local_maxima(&y).len()
        );
        for [lo, hi] in &plan.slopes {
            match loglog_slope(&out.sweep, &y, *lo, *hi) {
                Some(k) => {
                    let _ = writeln!(s, "  log-log slope over [{lo:e}, {hi:e}]: {k:.4}");
                }
                None => {
                    let _ = writeln!(s, "  log-log slope over [{lo:e}, {hi:e}]: too few points");
                }
            }
        }
    }
    for (label, e) in &out.max_error {
        let _ = writeln!(s, "max relative error estimate ({label}): {e:.3e}");
    }
    s
}
