//! Sweeps, trial parallelism and aggregation.

use rayon::prelude::*;

use crate::config::{ExperimentSpec, Method};
use crate::error::Result;
use crate::metrics::{mean_and_stderr, to_db};
use crate::trial::{run_trial, Dictionaries, MethodOutcome};

/// Aggregate of one method at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_name: &'static str,
    pub sweep_value: f64,
    pub nmse_linear: f64,
    pub nmse_db: f64,
    pub stderr: f64,
    pub trials: usize,
    /// Summed over trials; zero unless timing is enabled.
    pub wall_time_s: f64,
    /// Per-trial NMSE in trial order.
    pub samples: Vec<f64>,
}

/// Rows ordered method-major, then by sweep value in config order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let dicts = Dictionaries::new(spec)?;
    let mut per_point: Vec<Vec<Vec<MethodOutcome>>> = Vec::with_capacity(spec.sweep_values.len());
    for &value in &spec.sweep_values {
        let outcomes = (0..spec.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(spec, &dicts, value, t))
            .collect::<Result<Vec<_>>>()?;
        per_point.push(outcomes);
    }
    let mut rows = Vec::with_capacity(spec.methods.len() * spec.sweep_values.len());
    for (mi, &method) in spec.methods.iter().enumerate() {
        for (pi, &value) in spec.sweep_values.iter().enumerate() {
            let samples: Vec<f64> = per_point[pi].iter().map(|o| o[mi].nmse).collect();
            let (mean, stderr) = mean_and_stderr(&samples);
            let wall = if spec.timing {
                per_point[pi].iter().map(|o| o[mi].seconds).sum()
            } else {
                0.0
            };
            rows.push(ResultRow {
                method,
                sweep_name: spec.sweep_variable.name(),
                sweep_value: value,
                nmse_linear: mean,
                nmse_db: to_db(mean),
                stderr,
                trials: spec.trials,
                wall_time_s: wall,
                samples,
            });
        }
    }
    Ok(rows)
}

/// The row for `method` at `value`, if present.
pub fn find_row(rows: &[ResultRow], method: Method, value: f64) -> Option<&ResultRow> {
    rows.iter().find(|r| r.method == method && r.sweep_value == value)
}
