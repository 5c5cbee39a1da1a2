//! Channel estimators.
//!
//! Every compressive estimator here is an instance of one greedy engine
//! (see [`greedy`]): pick the best-matching atoms, refit by least squares,
//! update the residual. What differs is how atoms are scored and whether
//! each step looks ahead by provisionally completing the solve for several
//! candidates.

use serde::{Deserialize, Serialize};

use crate::dictionary::{PathAtom, SupportSet};
use crate::error::{invalid, Result};
use crate::geometry::ChannelMatrix;

pub mod cascaded;
pub mod greedy;
pub mod twotimescale;

pub use cascaded::{
    aoa_stage, estimate_cascaded_3d, kronecker_dictionary, ls_cascaded, mlaomp_3d, one_dim_cascaded, oracle_ls,
    somp_cascaded, AoaStage, AodStage, OracleBasis, RisSensing,
};
pub use greedy::{laomp, omp, somp_mmv, SparseSolution};
pub use twotimescale::{twotimescale_cooperative, twotimescale_individual};

/// When a pursuit stops. `max_atoms` caps the support under every rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop once the residual energy drops below `residual_tol`.
    ResidualThreshold,
    /// Run until the support holds `max_atoms` atoms.
    KnownSparsity,
    /// Whichever of the two happens first.
    #[default]
    FirstOfBoth,
}

/// How a row of correlations is reduced to one atom score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreRule {
    /// `(Σ_c |⟨d, r_c⟩|)² / ‖d‖²`.
    #[default]
    L1Squared,
    /// `Σ_c |⟨d, r_c⟩|² / ‖d‖²`.
    L2Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreedyConfig {
    /// U, candidates rolled forward per step. 1 disables look-ahead.
    pub look_ahead: usize,
    /// ε, compared against the squared residual norm.
    pub residual_tol: f64,
    pub max_atoms: usize,
    #[serde(default)]
    pub stop_rule: StopRule,
    #[serde(default)]
    pub score: ScoreRule,
}

impl GreedyConfig {
    /// `max_atoms` atoms, no residual tolerance, no look-ahead.
    pub fn new(max_atoms: usize) -> Self {
        Self {
            look_ahead: 1,
            residual_tol: 0.0,
            max_atoms,
            stop_rule: StopRule::FirstOfBoth,
            score: ScoreRule::L1Squared,
        }
    }

    pub fn with_look_ahead(self, look_ahead: usize) -> Self {
        Self { look_ahead, ..self }
    }

    pub fn with_tol(self, residual_tol: f64) -> Self {
        Self { residual_tol, ..self }
    }

    pub fn with_stop_rule(self, stop_rule: StopRule) -> Self {
        Self { stop_rule, ..self }
    }

    pub fn with_score(self, score: ScoreRule) -> Self {
        Self { score, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.look_ahead == 0 {
            return Err(invalid("look_ahead must be at least 1"));
        }
        if self.max_atoms == 0 {
            return Err(invalid("max_atoms must be at least 1"));
        }
        if self.residual_tol.is_nan() || self.residual_tol < 0.0 {
            return Err(invalid("residual_tol must be non-negative"));
        }
        Ok(())
    }
}

/// Channel estimate together with the sparse description behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub channel: ChannelMatrix,
    /// Ω^AoD. Coefficient rows are the per-AoD signals when the estimator
    /// produces them, otherwise the coefficient matrix has no columns.
    pub aod_support: SupportSet,
    /// Support and coefficients of the final vectorized sparse problem
    /// (Ω^AoA with the gains Ω^Ga).
    pub aoa_support: SupportSet,
    /// Recovered nonzeros of the virtual channel, when it has two grids.
    pub atoms: Vec<PathAtom>,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// False when the pursuit hit its atom cap with the tolerance unmet.
    pub converged: bool,
}
