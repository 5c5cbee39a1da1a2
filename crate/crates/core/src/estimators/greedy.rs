//! The greedy pursuit engine shared by every compressive estimator.
//!
//! A [`SparseModel`] supplies the observation, explicit dictionary columns
//! for refits and a scoring pass over all atoms. The engine owns support
//! bookkeeping, stopping and look-ahead.
//!
//! Look-ahead follows the usual LAOMP recipe: the `U` best-scored atoms
//! are each appended to the current support and the solve is completed
//! greedily from there; the candidate whose completion leaves the least
//! residual energy is committed. A completion depends only on the set it
//! starts from, so completions are memoised by (sorted) support set.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{GreedyConfig, ScoreRule, StopRule};
use crate::error::{invalid, Result};
use crate::linalg::lstsq;
use crate::C64;

/// Residual energies at or below this fraction of the observation energy
/// count as an exact fit.
pub const EXACT_FIT: f64 = 1e-20;

/// Least-squares fit on a support. `support` is sorted and `coefficients`
/// rows follow it.
#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub support: Vec<usize>,
    pub coefficients: DMatrix<C64>,
    pub residual: DMatrix<C64>,
    pub residual_energy: f64,
}

pub(crate) trait SparseModel {
    fn atom_count(&self) -> usize;
    /// Observation, `M × C` (C measurement vectors sharing a support).
    fn observation(&self) -> &DMatrix<C64>;
    /// Explicit dictionary columns, `M × |support|`.
    fn columns(&self, support: &[usize]) -> DMatrix<C64>;
    /// One score per atom for the residual of `fit`.
    fn scores(&self, fit: &Fit) -> Vec<f64>;
}

pub(crate) fn fit_support<M: SparseModel + ?Sized>(model: &M, support: &[usize]) -> Result<Fit> {
    let y = model.observation();
    if support.is_empty() {
        return Ok(Fit {
            support: Vec::new(),
            coefficients: DMatrix::zeros(0, y.ncols()),
            residual: y.clone(),
            residual_energy: y.norm_squared(),
        });
    }
    let a = model.columns(support);
    let coefficients = lstsq(&a, y)?;
    let residual = y - &a * &coefficients;
    let residual_energy = residual.norm_squared();
    Ok(Fit {
        support: support.to_vec(),
        coefficients,
        residual,
        residual_energy,
    })
}

/// Reduces an `N × C` correlation matrix to per-atom scores.
pub(crate) fn score_rows(corr: &DMatrix<C64>, inv_norm_sq: &[f64], rule: ScoreRule) -> Vec<f64> {
    let n = corr.nrows();
    let mut acc = vec![0.0; n];
    for col in corr.column_iter() {
        for (a, x) in acc.iter_mut().zip(col.iter()) {
            *a += match rule {
                ScoreRule::L1Squared => x.norm(),
                ScoreRule::L2Squared => x.norm_sqr(),
            };
        }
    }
    acc.iter()
        .zip(inv_norm_sq)
        .map(|(a, w)| match rule {
            ScoreRule::L1Squared => a * a * w,
            ScoreRule::L2Squared => a * w,
        })
        .collect()
}

pub(crate) fn inverse_norm_sq(norms: impl IntoIterator<Item = f64>) -> Vec<f64> {
    norms
        .into_iter()
        .map(|n| if n > 0.0 { 1.0 / (n * n) } else { 0.0 })
        .collect()
}

/// Explicit dictionary; correlations computed as `D^H R` every step.
pub(crate) struct DenseModel<'a> {
    dict: &'a DMatrix<C64>,
    y: DMatrix<C64>,
    inv_norm_sq: Vec<f64>,
    rule: ScoreRule,
}

impl<'a> DenseModel<'a> {
    pub fn new(dict: &'a DMatrix<C64>, y: DMatrix<C64>, rule: ScoreRule) -> Result<Self> {
        if dict.nrows() != y.nrows() {
            return Err(invalid(format!(
                "dictionary has {} rows, observation has {}",
                dict.nrows(),
                y.nrows()
            )));
        }
        let inv_norm_sq = inverse_norm_sq(dict.column_iter().map(|c| c.norm()));
        Ok(Self {
            dict,
            y,
            inv_norm_sq,
            rule,
        })
    }
}

impl SparseModel for DenseModel<'_> {
    fn atom_count(&self) -> usize {
        self.dict.ncols()
    }

    fn observation(&self) -> &DMatrix<C64> {
        &self.y
    }

    fn columns(&self, support: &[usize]) -> DMatrix<C64> {
        self.dict.select_columns(support)
    }

    fn scores(&self, fit: &Fit) -> Vec<f64> {
        score_rows(&self.dict.ad_mul(&fit.residual), &self.inv_norm_sq, self.rule)
    }
}

/// Structured dictionary whose Gram columns `D^H d_s` are cheap.
pub(crate) trait GramSource {
    fn atom_count(&self) -> usize;
    fn column(&self, atom: usize) -> DVector<C64>;
    /// `D^H d_atom`.
    fn gram_column(&self, atom: usize) -> DVector<C64>;
    /// `D^H Y`, `N × C`.
    fn correlate(&self, y: &DMatrix<C64>) -> DMatrix<C64>;
    fn norms(&self) -> Vec<f64>;
}

/// Scores via `D^H R = D^H Y − Σ_s (D^H d_s) c_s`, never touching the full
/// dictionary after the first correlation.
///
/// Correlations and cached Gram columns are kept as split real and
/// imaginary parts so the update loops vectorise.
pub(crate) struct GramModel<S: GramSource> {
    source: S,
    y: DMatrix<C64>,
    /// `D^H Y`, one split column per measurement vector.
    initial: Vec<Split>,
    inv_norm_sq: Vec<f64>,
    rule: ScoreRule,
    cache: RefCell<HashMap<usize, Split>>,
}

struct Split {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Split {
    fn new<'a>(values: impl IntoIterator<Item = &'a C64>) -> Self {
        let (re, im) = values.into_iter().map(|z| (z.re, z.im)).unzip();
        Self { re, im }
    }
}

impl<S: GramSource> GramModel<S> {
    pub fn new(source: S, y: DMatrix<C64>, rule: ScoreRule) -> Self {
        let corr = source.correlate(&y);
        let initial = corr.column_iter().map(|c| Split::new(c.iter())).collect();
        let inv_norm_sq = inverse_norm_sq(source.norms());
        Self {
            source,
            y,
            initial,
            inv_norm_sq,
            rule,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl<S: GramSource> SparseModel for GramModel<S> {
    fn atom_count(&self) -> usize {
        self.source.atom_count()
    }

    fn observation(&self) -> &DMatrix<C64> {
        &self.y
    }

    fn columns(&self, support: &[usize]) -> DMatrix<C64> {
        let cols: Vec<_> = support.iter().map(|&s| self.source.column(s)).collect();
        DMatrix::from_columns(&cols)
    }

    fn scores(&self, fit: &Fit) -> Vec<f64> {
        let mut cache = self.cache.borrow_mut();
        for &s in &fit.support {
            cache
                .entry(s)
                .or_insert_with(|| Split::new(self.source.gram_column(s).iter()));
        }
        let n = self.inv_norm_sq.len();
        let mut acc = vec![0.0; n];
        for (col, init) in self.initial.iter().enumerate() {
            let mut re = init.re.clone();
            let mut im = init.im.clone();
            for (row, s) in fit.support.iter().enumerate() {
                let c = -fit.coefficients[(row, col)];
                let g = &cache[s];
                for (((xr, xi), gr), gi) in re.iter_mut().zip(im.iter_mut()).zip(&g.re).zip(&g.im) {
                    *xr += c.re * gr - c.im * gi;
                    *xi += c.re * gi + c.im * gr;
                }
            }
            let single = self.initial.len() == 1;
            for ((a, xr), xi) in acc.iter_mut().zip(&re).zip(&im) {
                let e = xr * xr + xi * xi;
                *a += match self.rule {
                    ScoreRule::L1Squared if !single => e.sqrt(),
                    _ => e,
                };
            }
        }
        let squared = self.rule == ScoreRule::L1Squared && self.initial.len() > 1;
        acc.iter()
            .zip(&self.inv_norm_sq)
            .map(|(a, w)| if squared { a * a * w } else { a * w })
            .collect()
    }
}

/// Raw pursuit output; `order` is the commit order of `fit.support`.
pub(crate) struct Pursuit {
    pub fit: Fit,
    pub order: Vec<usize>,
    pub history: Vec<f64>,
    pub converged: bool,
}

struct Engine<'m, M: SparseModel + ?Sized> {
    model: &'m M,
    cfg: GreedyConfig,
    cap: usize,
    exact_floor: f64,
    memo: HashMap<Vec<usize>, f64>,
}

impl<M: SparseModel + ?Sized> Engine<'_, M> {
    fn uses_tol(&self) -> bool {
        self.cfg.stop_rule != StopRule::KnownSparsity
    }

    fn reached_tol(&self, fit: &Fit) -> bool {
        fit.residual_energy <= self.exact_floor || (self.uses_tol() && fit.residual_energy < self.cfg.residual_tol)
    }

    fn done(&self, fit: &Fit) -> bool {
        self.reached_tol(fit) || fit.support.len() >= self.cap
    }

    /// Up to `n` best atoms outside the support, best first, ties to the
    /// lowest index. Atoms with no correlation are never candidates.
    fn candidates(&self, fit: &Fit, n: usize) -> Vec<usize> {
        let mut scores = self.model.scores(fit);
        for &s in &fit.support {
            scores[s] = f64::NEG_INFINITY;
        }
        // Best-first buffer of at most n atoms; a strictly larger score is
        // needed to displace an earlier (lower) index.
        let mut top: Vec<(f64, usize)> = Vec::with_capacity(n + 1);
        for (i, &v) in scores.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                continue;
            }
            if top.len() == n && v <= top[n - 1].0 {
                continue;
            }
            let pos = top.partition_point(|&(b, _)| b >= v);
            top.insert(pos, (v, i));
            top.truncate(n);
        }
        top.into_iter().map(|(_, i)| i).collect()
    }

    /// Final residual energy of the greedy completion starting at `support`.
    fn completion(&mut self, mut support: Vec<usize>) -> f64 {
        let mut path = Vec::new();
        let result = loop {
            if let Some(&r) = self.memo.get(&support) {
                break r;
            }
            let Ok(fit) = fit_support(self.model, &support) else {
                path.push(support.clone());
                break f64::INFINITY;
            };
            path.push(support.clone());
            if self.done(&fit) {
                break fit.residual_energy;
            }
            match self.candidates(&fit, 1).first() {
                Some(&u) => insert_sorted(&mut support, u),
                None => break fit.residual_energy,
            }
        };
        for p in path {
            self.memo.insert(p, result);
        }
        result
    }

    fn run(&mut self) -> Result<Pursuit> {
        let mut fit = fit_support(self.model, &[])?;
        let mut order = Vec::new();
        let mut history = vec![fit.residual_energy];
        if fit.residual_energy == 0.0 {
            return Ok(Pursuit {
                fit,
                order,
                history,
                converged: true,
            });
        }
        while !self.done(&fit) {
            let cands = self.candidates(&fit, self.cfg.look_ahead);
            let Some(&first) = cands.first() else { break };
            let mut chosen = first;
            if cands.len() > 1 {
                let mut best = f64::INFINITY;
                for &u in &cands {
                    let mut s = fit.support.clone();
                    insert_sorted(&mut s, u);
                    let mut r = self.completion(s);
                    if r <= self.exact_floor {
                        r = 0.0;
                    }
                    if r < best {
                        best = r;
                        chosen = u;
                    }
                }
            }
            let mut s = fit.support.clone();
            insert_sorted(&mut s, chosen);
            match fit_support(self.model, &s) {
                Ok(next) => fit = next,
                Err(_) => break,
            }
            order.push(chosen);
            history.push(fit.residual_energy);
        }
        let converged = self.reached_tol(&fit) || (!self.uses_tol() && fit.support.len() >= self.cap);
        Ok(Pursuit {
            fit,
            order,
            history,
            converged,
        })
    }
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) {
    if let Err(pos) = v.binary_search(&x) {
        v.insert(pos, x);
    }
}

pub(crate) fn pursue<M: SparseModel + ?Sized>(model: &M, cfg: &GreedyConfig, look_ahead: usize) -> Result<Pursuit> {
    cfg.validate()?;
    let y = model.observation();
    let limit = if cfg.stop_rule == StopRule::ResidualThreshold {
        usize::MAX
    } else {
        cfg.max_atoms
    };
    let cap = limit.min(y.nrows()).min(model.atom_count());
    let mut engine = Engine {
        model,
        cfg: GreedyConfig { look_ahead, ..*cfg },
        cap,
        exact_floor: EXACT_FIT * y.norm_squared(),
        memo: HashMap::new(),
    };
    engine.run()
}

/// Output of a generic sparse solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    /// Atom indices in the order they were committed.
    pub support: Vec<usize>,
    /// Coefficient rows aligned with `support`, `|support| × C`.
    pub coefficients: DMatrix<C64>,
    /// `D_S X_S`, the fitted observation.
    pub fitted: DMatrix<C64>,
    pub residual_energy: f64,
    /// Residual energy before the first and after every commit.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SparseSolution {
    pub(crate) fn from_pursuit<M: SparseModel + ?Sized>(model: &M, p: Pursuit) -> Self {
        let rows: Vec<usize> = p
            .order
            .iter()
            .map(|a| {
                p.fit
                    .support
                    .binary_search(a)
                    .expect("committed atoms are in the support")
            })
            .collect();
        let c = p.fit.coefficients.ncols();
        let coefficients = DMatrix::from_fn(rows.len(), c, |i, j| p.fit.coefficients[(rows[i], j)]);
        let fitted = model.observation() - &p.fit.residual;
        Self {
            iterations: p.order.len(),
            support: p.order,
            coefficients,
            fitted,
            residual_energy: p.fit.residual_energy,
            residual_history: p.history,
            converged: p.converged,
        }
    }

    /// Coefficients as a dense length-`n` vector (first measurement only).
    pub fn dense_coefficients(&self, n: usize) -> DVector<C64> {
        let mut x = DVector::zeros(n);
        for (row, &a) in self.support.iter().enumerate() {
            x[a] = self.coefficients[(row, 0)];
        }
        x
    }
}

fn solve_dense(y: DMatrix<C64>, dict: &DMatrix<C64>, cfg: &GreedyConfig, look_ahead: usize) -> Result<SparseSolution> {
    let model = DenseModel::new(dict, y, cfg.score)?;
    let p = pursue(&model, cfg, look_ahead)?;
    Ok(SparseSolution::from_pursuit(&model, p))
}

/// Orthogonal matching pursuit. `cfg.look_ahead` is ignored.
pub fn omp(y: &DVector<C64>, dict: &DMatrix<C64>, cfg: &GreedyConfig) -> Result<SparseSolution> {
    solve_dense(DMatrix::from_column_slice(y.len(), 1, y.as_slice()), dict, cfg, 1)
}

/// Look-ahead OMP with `cfg.look_ahead` candidates per step.
pub fn laomp(y: &DVector<C64>, dict: &DMatrix<C64>, cfg: &GreedyConfig) -> Result<SparseSolution> {
    solve_dense(
        DMatrix::from_column_slice(y.len(), 1, y.as_slice()),
        dict,
        cfg,
        cfg.look_ahead,
    )
}

/// Simultaneous OMP over the columns of `y`, which share one row support.
/// Honours `cfg.look_ahead` (1 gives plain SOMP).
pub fn somp_mmv(y: &DMatrix<C64>, dict: &DMatrix<C64>, cfg: &GreedyConfig) -> Result<SparseSolution> {
    solve_dense(y.clone(), dict, cfg, cfg.look_ahead)
}
