//! Normalised squared-error metrics.

use nalgebra::DMatrix;
use riscf::C64;

use crate::error::{BenchError, Result};

/// `‖est − truth‖_F² / ‖truth‖_F²` for one link.
pub fn link_nmse(estimate: &DMatrix<C64>, truth: &DMatrix<C64>, link: &str) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(BenchError::Numerical(format!(
            "estimate of {link} is {:?}, truth is {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    let energy = truth.norm_squared();
    if energy == 0.0 {
        return Err(BenchError::Numerical(format!("true channel of {link} has zero energy")));
    }
    let err = (estimate - truth).norm_squared() / energy;
    if !err.is_finite() {
        return Err(BenchError::Numerical(format!("non-finite estimate for {link}")));
    }
    Ok(err)
}

/// `(link index, estimate, truth)`.
pub type LinkPair<'a, I> = (I, &'a DMatrix<C64>, &'a DMatrix<C64>);

/// Average link NMSE over cascaded channels, each indexed by `(bs, ris, user)`.
pub fn nmse_cascaded(pairs: &[LinkPair<'_, (usize, usize, usize)>]) -> Result<f64> {
    mean(
        pairs
            .iter()
            .map(|&((m, n, k), est, truth)| link_nmse(est, truth, &format!("cascaded link BS {m}, RIS {n}, user {k}"))),
    )
}

/// Average link NMSE over RIS–user channels, each indexed by `(ris, user)`.
pub fn nmse_h(pairs: &[LinkPair<'_, (usize, usize)>]) -> Result<f64> {
    mean(
        pairs
            .iter()
            .map(|&((n, k), est, truth)| link_nmse(est, truth, &format!("RIS {n} to user {k}"))),
    )
}

fn mean(values: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v?;
        count += 1;
    }
    if count == 0 {
        return Err(BenchError::Numerical("no links to average".into()));
    }
    Ok(sum / count as f64)
}

/// Sample mean and standard error of the mean, summed in order.
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
