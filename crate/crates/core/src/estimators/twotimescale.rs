//! Second-timescale estimation of RIS–user channels with known BS–RIS
//! channels.
//!
//! Each BS sees `ỹ_m = Φ_m A_R x + w̃_m`; stacking the BSs gives
//! `ỹ = Φ̃ x + w̃`. Both are single-vector sparse problems over the RIS
//! grid, solved with look-ahead pursuit, and `ĥ = A_R x̂`.

use nalgebra::{DMatrix, DVector};

use super::greedy::{pursue, DenseModel, SparseSolution};
use super::{EstimateResult, GreedyConfig};
use crate::dictionary::{Dictionary, SupportSet};
use crate::error::{invalid, Result};
use crate::geometry::{ChannelMatrix, LinkRole};

fn solve(
    y: &DVector<crate::C64>,
    sensing: &DMatrix<crate::C64>,
    dict_r: &Dictionary,
    cfg: &GreedyConfig,
) -> Result<EstimateResult> {
    if sensing.nrows() != y.len() {
        return Err(invalid(format!(
            "{} measurements but the sensing matrix has {} rows",
            y.len(),
            sensing.nrows()
        )));
    }
    if sensing.ncols() != dict_r.grid_size() {
        return Err(invalid("sensing matrix columns must match the RIS grid"));
    }
    let model = DenseModel::new(sensing, DMatrix::from_column_slice(y.len(), 1, y.as_slice()), cfg.score)?;
    let sol = SparseSolution::from_pursuit(&model, pursue(&model, cfg, cfg.look_ahead)?);
    let h = dict_r.select(&sol.support)? * &sol.coefficients;
    let h = if sol.support.is_empty() {
        DMatrix::zeros(dict_r.n_elements(), 1)
    } else {
        h
    };
    Ok(EstimateResult {
        channel: ChannelMatrix::new(h, LinkRole::RisUser),
        aod_support: SupportSet::empty(),
        aoa_support: SupportSet::new(sol.support, sol.coefficients)?,
        atoms: Vec::new(),
        residual_history: sol.residual_history,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// One BS on its own: `y` is `ỹ_m,k` (`Q̄'·J_m`), `composite` is `Φ_m A_R`.
pub fn twotimescale_individual(
    y: &DVector<crate::C64>,
    composite: &DMatrix<crate::C64>,
    dict_r: &Dictionary,
    cfg: &GreedyConfig,
) -> Result<EstimateResult> {
    solve(y, composite, dict_r, cfg)
}

/// All BSs jointly: `y` stacks every `ỹ_m,k` in BS order and `stacked` is
/// `Φ̃`.
pub fn twotimescale_cooperative(
    y: &DVector<crate::C64>,
    stacked: &DMatrix<crate::C64>,
    dict_r: &Dictionary,
    cfg: &GreedyConfig,
) -> Result<EstimateResult> {
    solve(y, stacked, dict_r, cfg)
}
