//! Cascaded-channel estimators for one BS–RIS pair.
//!
//! With RIS `n` active for `Q̄` sub-frames under reflection block `V̄`, the
//! despread training matrix of user `k` at BS `m` is
//! `Ȳ = G^H V̄ + W̄`, `G = A_R X A_T^H`. Writing `B̃ = V̄^H A_R` gives the
//! equivalent `Ȳ^H = B̃ X A_T^H + W̄^H`, which is the form every sparse
//! estimator below works with.

use nalgebra::{DMatrix, DVector};

use super::greedy::{pursue, DenseModel, Fit, GramModel, GramSource, SparseModel};
use super::{EstimateResult, GreedyConfig, ScoreRule};
use crate::dictionary::{reconstruct_cascaded, Dictionary, PathAtom, SupportSet};
use crate::error::{invalid, Error, Result};
use crate::geometry::{steering_unchecked, wrap_phase, CascadedPath, ChannelMatrix, LinkRole};
use crate::linalg::lstsq;
use crate::measurement::ReflectionSchedule;
use crate::tensor::{contract_mode1, slice_l1_energies, ComplexTensor3};
use crate::C64;

/// Per-RIS quantities shared by all users and BSs: `B̃ = V̄^H A_R`, its
/// Gram matrix and column norms.
#[derive(Debug, Clone)]
pub struct RisSensing {
    reflections: DMatrix<C64>,
    projected: DMatrix<C64>,
    gram: DMatrix<C64>,
    norms: Vec<f64>,
}

impl RisSensing {
    pub fn new(reflections: &DMatrix<C64>, dict_r: &Dictionary) -> Result<Self> {
        if reflections.nrows() != dict_r.n_elements() {
            return Err(invalid("reflection block and RIS dictionary disagree on L"));
        }
        let projected = reflections.ad_mul(dict_r.atoms());
        let gram = projected.ad_mul(&projected);
        let norms = projected.column_iter().map(|c| c.norm()).collect();
        Ok(Self {
            reflections: reflections.clone(),
            projected,
            gram,
            norms,
        })
    }

    pub fn reflections(&self) -> &DMatrix<C64> {
        &self.reflections
    }

    /// `B̃ = V̄^H A_R`, `Q̄ × G_r`.
    pub fn projected(&self) -> &DMatrix<C64> {
        &self.projected
    }

    pub fn subframes(&self) -> usize {
        self.projected.nrows()
    }

    pub fn grid_size(&self) -> usize {
        self.projected.ncols()
    }
}

/// Plain LS for every RIS of a time-switched schedule.
///
/// `ybar` is `Ȳ_m,k` over all sub-frames (`J × N_R·Q̄`). Each RIS is solved
/// on its own sub-frames, `V̄_n^H Ĝ_n = Ȳ_n^H`.
pub fn ls_cascaded(ybar: &DMatrix<C64>, schedule: &ReflectionSchedule) -> Result<Vec<ChannelMatrix>> {
    let q = schedule.subframes_per_ris();
    if ybar.ncols() != schedule.total_subframes() {
        return Err(invalid(format!(
            "observation has {} sub-frames, schedule has {}",
            ybar.ncols(),
            schedule.total_subframes()
        )));
    }
    (0..schedule.num_ris())
        .map(|n| {
            let yn = ybar.columns(n * q, q).adjoint();
            let g = lstsq(&schedule.block(n).adjoint(), &yn).map_err(|e| match e {
                Error::Singular(msg) => Error::Singular(format!("reflection block of RIS {n}: {msg}")),
                other => other,
            })?;
            Ok(ChannelMatrix::new(g, LinkRole::Cascaded))
        })
        .collect()
}

/// Which angles the oracle fits gains on.
#[derive(Debug, Clone, Copy)]
pub enum OracleBasis<'a> {
    /// The true (possibly off-grid) arguments.
    Exact,
    /// The true arguments moved to the nearest points of these grids
    /// (RIS side, BS side).
    Grid(&'a Dictionary, &'a Dictionary),
}

/// Least squares on the true path angles.
///
/// `ybar` is `J × Q̄` for one RIS and `paths` its cascaded path expansion.
/// Paths sharing both arguments are merged into one unknown.
pub fn oracle_ls(
    ybar: &DMatrix<C64>,
    reflections: &DMatrix<C64>,
    paths: &[CascadedPath],
    basis: OracleBasis<'_>,
) -> Result<EstimateResult> {
    let (j, q) = ybar.shape();
    let l = reflections.nrows();
    if reflections.ncols() != q {
        return Err(invalid("observation and reflections disagree on Q̄"));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for p in paths {
        match basis {
            OracleBasis::Exact => {
                let same = |a: f64, b: f64| wrap_phase(a - b).abs() < 1e-9;
                if !pairs.iter().any(|&(a, d)| same(a, p.aoa_arg) && same(d, p.aod_arg)) {
                    pairs.push((p.aoa_arg, p.aod_arg));
                }
            }
            OracleBasis::Grid(dr, dt) => {
                let cell = (dr.nearest_index(p.aoa_arg), dt.nearest_index(p.aod_arg));
                if !cells.contains(&cell) {
                    cells.push(cell);
                    pairs.push((dr.grid_args()[cell.0], dt.grid_args()[cell.1]));
                }
            }
        }
    }
    if pairs.len() > j * q {
        return Err(Error::Singular(format!(
            "{} oracle paths but only {} measurements",
            pairs.len(),
            j * q
        )));
    }
    let ris_atoms: Vec<_> = pairs.iter().map(|&(a, _)| steering_unchecked(a, l)).collect();
    let bs_atoms: Vec<_> = pairs.iter().map(|&(_, d)| steering_unchecked(d, j)).collect();
    // vec(Ȳ^H) = Σ x · conj(a_J) ⊗ (V̄^H a_L).
    let cols: Vec<DVector<C64>> = ris_atoms
        .iter()
        .zip(&bs_atoms)
        .map(|(ar, at)| kron(&at.map(|x| x.conj()), &reflections.ad_mul(ar)))
        .collect();
    let y = ybar.adjoint();
    let y = DMatrix::from_column_slice(q * j, 1, y.as_slice());
    let (gains, residual) = if cols.is_empty() {
        (DVector::zeros(0), y.norm_squared())
    } else {
        let d = DMatrix::from_columns(&cols);
        let x = lstsq(&d, &y)?;
        let r = (&y - &d * &x).norm_squared();
        (x.column(0).into_owned(), r)
    };
    let mut g = DMatrix::zeros(l, j);
    for ((ar, at), x) in ris_atoms.iter().zip(&bs_atoms).zip(gains.iter()) {
        g.gerc(*x, ar, at, C64::new(1.0, 0.0));
    }
    let (aod_support, aoa_support, atoms) = match basis {
        OracleBasis::Exact => (SupportSet::empty(), SupportSet::empty(), Vec::new()),
        OracleBasis::Grid(dr, _) => {
            let atoms: Vec<_> = cells
                .iter()
                .zip(gains.iter())
                .map(|(&(aoa, aod), &gain)| PathAtom { aoa, aod, gain })
                .collect();
            let mut aods: Vec<usize> = cells.iter().map(|c| c.1).collect();
            aods.sort_unstable();
            aods.dedup();
            let idx: Vec<usize> = cells.iter().map(|&(a, d)| a + dr.grid_size() * d).collect();
            (
                SupportSet::new(aods.clone(), DMatrix::zeros(aods.len(), 0))?,
                SupportSet::new(idx, DMatrix::from_column_slice(gains.len(), 1, gains.as_slice()))?,
                atoms,
            )
        }
    };
    Ok(EstimateResult {
        channel: ChannelMatrix::new(g, LinkRole::Cascaded),
        aod_support,
        aoa_support,
        atoms,
        residual_history: vec![y.norm_squared(), residual],
        iterations: 1,
        converged: true,
    })
}

fn kron(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    DVector::from_fn(a.len() * b.len(), |i, _| a[i / b.len()] * b[i % b.len()])
}

/// AoD support shared by all users and the coefficient signals on it.
#[derive(Debug, Clone, PartialEq)]
pub struct AodStage {
    /// Ω^AoD in commit order.
    pub support: Vec<usize>,
    /// `Z`, `P_AoD × Q̄ × K`, rows aligned with `support`.
    pub coefficients: ComplexTensor3,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Tensor observation with the BS dictionary as atoms; slices scored by
/// squared ℓ1 norm.
struct TensorModel<'a> {
    dims: [usize; 3],
    y: DMatrix<C64>,
    dict: &'a Dictionary,
    dict_h: DMatrix<C64>,
    inv_norm_sq: Vec<f64>,
}

impl SparseModel for TensorModel<'_> {
    fn atom_count(&self) -> usize {
        self.dict.grid_size()
    }

    fn observation(&self) -> &DMatrix<C64> {
        &self.y
    }

    fn columns(&self, support: &[usize]) -> DMatrix<C64> {
        self.dict.atoms().select_columns(support)
    }

    fn scores(&self, fit: &Fit) -> Vec<f64> {
        let r = ComplexTensor3::from_unfolding(self.dims, &fit.residual).expect("residual keeps its shape");
        let i = contract_mode1(&self.dict_h, &r).expect("dictionary matches the tensor");
        slice_l1_energies(&i)
            .into_iter()
            .zip(&self.inv_norm_sq)
            .map(|(e, w)| e * w)
            .collect()
    }
}

/// Joint AoD recovery over all users of one BS (look-ahead from
/// `cfg.look_ahead`, `cfg.score` ignored: slices are always ℓ1-scored).
pub fn mlaomp_3d(y: &ComplexTensor3, dict_t: &Dictionary, cfg: &GreedyConfig) -> Result<AodStage> {
    let dims = y.dims();
    if dict_t.n_elements() != dims[0] {
        return Err(invalid(format!(
            "BS dictionary has {} elements, observation has {} antennas",
            dict_t.n_elements(),
            dims[0]
        )));
    }
    let model = TensorModel {
        dims,
        y: y.unfold_mode1().into_owned(),
        dict: dict_t,
        dict_h: dict_t.atoms().adjoint(),
        inv_norm_sq: super::greedy::inverse_norm_sq(dict_t.atoms().column_iter().map(|c| c.norm())),
    };
    let p = pursue(&model, cfg, cfg.look_ahead)?;
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
    let ordered = p.fit.coefficients.select_rows(&rows);
    let coefficients = ComplexTensor3::from_unfolding([rows.len(), dims[1], dims[2]], &ordered)?;
    Ok(AodStage {
        iterations: p.order.len(),
        support: p.order,
        coefficients,
        residual_history: p.history,
        converged: p.converged,
    })
}

/// Dictionary `B ⊗ I_P` of the AoA stage, `B = V̄^T A_R^*`: atom
/// `i·P + r` pairs RIS grid point `i` with AoD row `r`.
struct StripedSource<'a> {
    sensing: &'a RisSensing,
    rows: usize,
}

impl GramSource for StripedSource<'_> {
    fn atom_count(&self) -> usize {
        self.rows * self.sensing.grid_size()
    }

    fn column(&self, atom: usize) -> DVector<C64> {
        let (i, r) = (atom / self.rows, atom % self.rows);
        let q = self.sensing.subframes();
        let mut c = DVector::zeros(self.rows * q);
        for (qq, b) in self.sensing.projected.column(i).iter().enumerate() {
            c[r + self.rows * qq] = b.conj();
        }
        c
    }

    fn gram_column(&self, atom: usize) -> DVector<C64> {
        let (is, rs) = (atom / self.rows, atom % self.rows);
        let mut g = DVector::zeros(self.atom_count());
        for i in 0..self.sensing.grid_size() {
            g[i * self.rows + rs] = self.sensing.gram[(is, i)];
        }
        g
    }

    fn correlate(&self, y: &DMatrix<C64>) -> DMatrix<C64> {
        let q = self.sensing.subframes();
        let z = DMatrix::from_column_slice(self.rows, q, y.column(0).as_slice());
        let c = z * &self.sensing.projected;
        DMatrix::from_column_slice(self.atom_count(), 1, c.as_slice())
    }

    fn norms(&self) -> Vec<f64> {
        let mut n = Vec::with_capacity(self.atom_count());
        for &b in &self.sensing.norms {
            n.extend(std::iter::repeat_n(b, self.rows));
        }
        n
    }
}

/// The AoA-stage dictionary built explicitly (for checks on small sizes).
pub fn kronecker_dictionary(sensing: &RisSensing, rows: usize) -> DMatrix<C64> {
    let b = sensing.projected.map(|x| x.conj());
    b.kronecker(&DMatrix::<C64>::identity(rows, rows))
}

/// Per-user AoA and gain recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct AoaStage {
    pub atoms: Vec<PathAtom>,
    /// Support on the vectorized problem (atom `i·P_AoD + r`) with gains.
    pub support: SupportSet,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Recovers AoAs and gains from `Ẑ_k` (`P_AoD × Q̄`, rows aligned with
/// `aod_support`).
pub fn aoa_stage(
    z_hat: &DMatrix<C64>,
    aod_support: &[usize],
    sensing: &RisSensing,
    cfg: &GreedyConfig,
) -> Result<AoaStage> {
    let p = z_hat.nrows();
    if p != aod_support.len() {
        return Err(invalid("Ẑ rows must match the AoD support"));
    }
    if z_hat.ncols() != sensing.subframes() {
        return Err(invalid("Ẑ columns must match the sub-frame count"));
    }
    if p == 0 || z_hat.iter().all(|x| *x == C64::new(0.0, 0.0)) {
        return Ok(AoaStage {
            atoms: Vec::new(),
            support: SupportSet::new(Vec::new(), DMatrix::zeros(0, 1))?,
            residual_history: vec![z_hat.norm_squared()],
            iterations: 0,
            converged: true,
        });
    }
    let y = DMatrix::from_column_slice(z_hat.len(), 1, z_hat.as_slice());
    let model = GramModel::new(StripedSource { sensing, rows: p }, y, ScoreRule::L2Squared);
    let sol = super::greedy::SparseSolution::from_pursuit(&model, pursue(&model, cfg, cfg.look_ahead)?);
    let atoms = sol
        .support
        .iter()
        .zip(sol.coefficients.column(0).iter())
        .map(|(&a, x)| PathAtom {
            aoa: a / p,
            aod: aod_support[a % p],
            // Atom coefficients are entries of vec(W^H), W = X[:, Ω^AoD].
            gain: x.conj(),
        })
        .collect();
    Ok(AoaStage {
        atoms,
        support: SupportSet::new(sol.support, sol.coefficients)?,
        residual_history: sol.residual_history,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Both stages for every user of one BS–RIS pair. `y` is `J × Q̄ × K`.
pub fn estimate_cascaded_3d(
    y: &ComplexTensor3,
    sensing: &RisSensing,
    dict_r: &Dictionary,
    dict_t: &Dictionary,
    aod_cfg: &GreedyConfig,
    aoa_cfg: &GreedyConfig,
) -> Result<Vec<EstimateResult>> {
    let aod = mlaomp_3d(y, dict_t, aod_cfg)?;
    (0..y.dims()[2])
        .map(|k| {
            let z = aod.coefficients.frontal_slice(k).into_owned();
            let aoa = aoa_stage(&z, &aod.support, sensing, aoa_cfg)?;
            let channel = reconstruct_cascaded(&aoa.atoms, dict_r, dict_t)?;
            let mut history = aod.residual_history.clone();
            history.extend(aoa.residual_history.iter().copied());
            Ok(EstimateResult {
                channel,
                aod_support: SupportSet::new(aod.support.clone(), z)?,
                aoa_support: aoa.support,
                atoms: aoa.atoms,
                residual_history: history,
                iterations: aod.iterations + aoa.iterations,
                converged: aod.converged && aoa.converged,
            })
        })
        .collect()
}

/// `conj(A_T) ⊗ B̃`: atom `i + G_r·t` pairs RIS grid point `i` with BS grid
/// point `t` in `vec(Ȳ^H)`.
struct KroneckerSource<'a> {
    sensing: &'a RisSensing,
    dict_t: &'a Dictionary,
}

impl GramSource for KroneckerSource<'_> {
    fn atom_count(&self) -> usize {
        self.sensing.grid_size() * self.dict_t.grid_size()
    }

    fn column(&self, atom: usize) -> DVector<C64> {
        let gr = self.sensing.grid_size();
        let (i, t) = (atom % gr, atom / gr);
        kron(
            &self.dict_t.atoms().column(t).map(|x| x.conj()),
            &self.sensing.projected.column(i).into_owned(),
        )
    }

    fn gram_column(&self, atom: usize) -> DVector<C64> {
        let gr = self.sensing.grid_size();
        let (is, ts) = (atom % gr, atom / gr);
        let gb = self.sensing.gram.column(is);
        let ga = self.dict_t.gram().row(ts);
        let mut g = DVector::zeros(self.atom_count());
        for (t, a) in ga.iter().enumerate() {
            g.rows_mut(t * gr, gr).axpy(*a, &gb, C64::new(0.0, 0.0));
        }
        g
    }

    fn correlate(&self, y: &DMatrix<C64>) -> DMatrix<C64> {
        let q = self.sensing.subframes();
        let j = self.dict_t.n_elements();
        let r = DMatrix::from_column_slice(q, j, y.column(0).as_slice());
        let c = self.sensing.projected.ad_mul(&r) * self.dict_t.atoms();
        DMatrix::from_column_slice(self.atom_count(), 1, c.as_slice())
    }

    fn norms(&self) -> Vec<f64> {
        let mut n = Vec::with_capacity(self.atom_count());
        for a in self.dict_t.atoms().column_iter() {
            let an = a.norm();
            n.extend(self.sensing.norms.iter().map(|b| b * an));
        }
        n
    }
}

/// 1-D OMP (`look_ahead = 1`) or LAOMP on `vec(Ȳ^H)` with the full
/// two-grid Kronecker dictionary, one user at a time.
pub fn one_dim_cascaded(
    ybar: &DMatrix<C64>,
    sensing: &RisSensing,
    dict_r: &Dictionary,
    dict_t: &Dictionary,
    cfg: &GreedyConfig,
    look_ahead: usize,
) -> Result<EstimateResult> {
    let (j, q) = ybar.shape();
    if j != dict_t.n_elements() || q != sensing.subframes() || dict_r.grid_size() != sensing.grid_size() {
        return Err(invalid("observation, sensing and dictionaries disagree on shape"));
    }
    let yh = ybar.adjoint();
    let y = DMatrix::from_column_slice(q * j, 1, yh.as_slice());
    let model = GramModel::new(KroneckerSource { sensing, dict_t }, y, ScoreRule::L2Squared);
    let sol = super::greedy::SparseSolution::from_pursuit(&model, pursue(&model, cfg, look_ahead)?);
    let gr = dict_r.grid_size();
    let atoms: Vec<PathAtom> = sol
        .support
        .iter()
        .zip(sol.coefficients.column(0).iter())
        .map(|(&a, &gain)| PathAtom {
            aoa: a % gr,
            aod: a / gr,
            gain,
        })
        .collect();
    let aods: Vec<usize> = atoms
        .iter()
        .map(|a| a.aod)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(EstimateResult {
        channel: reconstruct_cascaded(&atoms, dict_r, dict_t)?,
        aod_support: SupportSet::new(aods.clone(), DMatrix::zeros(aods.len(), 0))?,
        aoa_support: SupportSet::new(sol.support, sol.coefficients)?,
        atoms,
        residual_history: sol.residual_history,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Row-sparse MMV on `Ȳ^H = B̃ X̃`, `X̃ = X A_T^H`, then `Ĝ = A_R X̃`.
pub fn somp_cascaded(
    ybar: &DMatrix<C64>,
    sensing: &RisSensing,
    dict_r: &Dictionary,
    cfg: &GreedyConfig,
) -> Result<EstimateResult> {
    if ybar.ncols() != sensing.subframes() || dict_r.grid_size() != sensing.grid_size() {
        return Err(invalid("observation, sensing and dictionary disagree on shape"));
    }
    let model = DenseModel::new(&sensing.projected, ybar.adjoint(), cfg.score)?;
    let sol = super::greedy::SparseSolution::from_pursuit(&model, pursue(&model, cfg, cfg.look_ahead)?);
    let g = dict_r.select(&sol.support)? * &sol.coefficients;
    Ok(EstimateResult {
        channel: ChannelMatrix::new(g, LinkRole::Cascaded),
        aod_support: SupportSet::empty(),
        aoa_support: SupportSet::new(sol.support, sol.coefficients)?,
        atoms: Vec::new(),
        residual_history: sol.residual_history,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

#[cfg(test)]
// Index loops mirror the sums they check.
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::dictionary::build_dictionary;
    use crate::measurement::EntryModel;
    use crate::rng::{complex_gaussian, trial_rng};

    fn sensing(l: usize, q: usize, g: usize, seed: u64) -> (RisSensing, Dictionary) {
        let dict = build_dictionary(l, g).unwrap();
        let mut rng = trial_rng(seed, 0, 1);
        let sched = ReflectionSchedule::random(1, l, q, EntryModel::ComplexGaussian, &mut rng).unwrap();
        (RisSensing::new(sched.block(0), &dict).unwrap(), dict)
    }

    fn assert_source_matches(src: &dyn GramSource, explicit: &DMatrix<C64>, y: &DMatrix<C64>) {
        assert_eq!(src.atom_count(), explicit.ncols());
        for a in 0..explicit.ncols() {
            assert!((src.column(a) - explicit.column(a)).norm() < 1e-12, "column {a}");
            assert!((src.norms()[a] - explicit.column(a).norm()).abs() < 1e-12);
        }
        let gram = explicit.ad_mul(explicit);
        for a in [0, 3, explicit.ncols() - 1] {
            assert!((src.gram_column(a) - gram.column(a)).norm() < 1e-11, "gram column {a}");
        }
        assert!((src.correlate(y) - explicit.ad_mul(y)).norm() < 1e-11);
    }

    #[test]
    fn striped_source_is_kronecker_with_identity() {
        let (s, _) = sensing(4, 5, 8, 1);
        let rows = 3;
        let explicit = kronecker_dictionary(&s, rows);
        assert_eq!(explicit.shape(), (15, 24));
        // Column i·P + r is vec(e_r b_i^T) with b_i = (V̄^T A_R^*)[:, i].
        let b = s.reflections().transpose() * build_dictionary(4, 8).unwrap().atoms().map(|x| x.conj());
        for i in 0..8 {
            for r in 0..rows {
                let mut e = DMatrix::zeros(rows, 5);
                e.set_row(r, &b.column(i).transpose());
                let v = DVector::from_column_slice(e.as_slice());
                assert!((explicit.column(i * rows + r) - v).norm() < 1e-12);
            }
        }
        let mut rng = trial_rng(1, 2, 0);
        let y = DMatrix::from_fn(15, 1, |_, _| complex_gaussian(&mut rng, 1.0));
        assert_source_matches(&StripedSource { sensing: &s, rows }, &explicit, &y);
    }

    #[test]
    fn kronecker_source_matches_explicit_dictionary() {
        let (s, _) = sensing(4, 5, 6, 2);
        let dict_t = build_dictionary(3, 7).unwrap();
        let explicit = dict_t.atoms().map(|x| x.conj()).kronecker(s.projected());
        let mut rng = trial_rng(2, 2, 0);
        let y = DMatrix::from_fn(15, 1, |_, _| complex_gaussian(&mut rng, 1.0));
        assert_source_matches(
            &KroneckerSource {
                sensing: &s,
                dict_t: &dict_t,
            },
            &explicit,
            &y,
        );
    }

    #[test]
    fn gram_scores_match_dense_scores() {
        let (s, _) = sensing(4, 6, 8, 3);
        let dict_t = build_dictionary(3, 6).unwrap();
        let explicit = dict_t.atoms().map(|x| x.conj()).kronecker(s.projected());
        let mut rng = trial_rng(3, 2, 0);
        let y = DMatrix::from_fn(18, 1, |_, _| complex_gaussian(&mut rng, 1.0));
        let gram = GramModel::new(
            KroneckerSource {
                sensing: &s,
                dict_t: &dict_t,
            },
            y.clone(),
            ScoreRule::L2Squared,
        );
        let dense = DenseModel::new(&explicit, y, ScoreRule::L2Squared).unwrap();
        let fit = super::super::greedy::fit_support(&dense, &[2, 17, 30]).unwrap();
        for (a, b) in gram.scores(&fit).iter().zip(dense.scores(&fit)) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn ls_recovers_square_noiseless_system() {
        let l = 6;
        let mut rng = trial_rng(4, 0, 0);
        let sched = ReflectionSchedule::random(2, l, l, EntryModel::UnitModulus, &mut rng).unwrap();
        let g: Vec<DMatrix<C64>> = (0..2)
            .map(|_| DMatrix::from_fn(l, 3, |_, _| complex_gaussian(&mut rng, 1.0)))
            .collect();
        let mut ybar = DMatrix::zeros(3, 2 * l);
        for n in 0..2 {
            ybar.columns_mut(n * l, l).copy_from(&(g[n].adjoint() * sched.block(n)));
        }
        let est = ls_cascaded(&ybar, &sched).unwrap();
        for n in 0..2 {
            assert!((&est[n].entries - &g[n]).norm() < 1e-9 * g[n].norm());
        }
        let short = ReflectionSchedule::random(2, l, l - 1, EntryModel::UnitModulus, &mut rng).unwrap();
        let err = ls_cascaded(&DMatrix::zeros(3, 2 * (l - 1)), &short).unwrap_err();
        assert!(matches!(err, Error::Singular(ref m) if m.contains("RIS 0")));
    }

    #[test]
    fn aoa_stage_single_path() {
        let (s, dict_r) = sensing(8, 12, 32, 5);
        let gain = C64::new(0.7, -1.1);
        // Ẑ = W^H B̃^H with one nonzero W[11, 0] = gain.
        let z = s.projected().column(11).map(|x| x.conj()) * gain.conj();
        let z = DMatrix::from_row_slice(1, 12, z.as_slice());
        let out = aoa_stage(&z, &[4], &s, &GreedyConfig::new(1)).unwrap();
        assert_eq!(out.atoms.len(), 1);
        assert_eq!((out.atoms[0].aoa, out.atoms[0].aod), (11, 4));
        assert!((out.atoms[0].gain - gain).norm() < 1e-8 * gain.norm());
        let empty = aoa_stage(&DMatrix::zeros(1, 12), &[4], &s, &GreedyConfig::new(1)).unwrap();
        assert!(empty.atoms.is_empty() && empty.support.is_empty());
        let _ = dict_r;
    }

    #[test]
    fn mlaomp_shared_single_aod() {
        let dict_t = build_dictionary(8, 32).unwrap();
        let mut rng = trial_rng(6, 0, 0);
        let a = dict_t.atom(19);
        let c = DMatrix::from_fn(5, 4, |_, _| complex_gaussian(&mut rng, 1.0));
        let y = ComplexTensor3::from_fn([8, 5, 4], |j, q, k| a[j] * c[(q, k)]);
        for u in [1, 3] {
            let out = mlaomp_3d(&y, &dict_t, &GreedyConfig::new(3).with_look_ahead(u)).unwrap();
            assert_eq!(out.support, vec![19]);
            assert_eq!(out.coefficients.dims(), [1, 5, 4]);
            assert!(*out.residual_history.last().unwrap() < 1e-24 * out.residual_history[0]);
        }
    }

    #[test]
    fn mlaomp_without_look_ahead_is_somp_on_the_unfolding() {
        let dict_t = build_dictionary(6, 24).unwrap();
        let mut rng = trial_rng(7, 0, 0);
        let y = ComplexTensor3::from_fn([6, 4, 3], |_, _, _| complex_gaussian(&mut rng, 1.0));
        let cfg = GreedyConfig::new(4);
        let t = mlaomp_3d(&y, &dict_t, &cfg).unwrap();
        let m = super::super::somp_mmv(&y.unfold_mode1().into_owned(), dict_t.atoms(), &cfg).unwrap();
        assert_eq!(t.support, m.support);
        for (a, b) in t.residual_history.iter().zip(&m.residual_history) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }
}
