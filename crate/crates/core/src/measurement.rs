//! Uplink training: pilots, time-switched RIS reflections, received
//! signals and despreading.
//!
//! Sub-frames are numbered globally. Under time switching RIS `n` is the
//! only active surface during sub-frames `n·Q̄ .. (n+1)·Q̄`, so its
//! reflection block `V̄_n` is `L × Q̄` and the stacked reflection matrix is
//! block diagonal.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{invalid, Result};
use crate::geometry::{cascaded_channel, ChannelMatrix, LinkRole};
use crate::rng::complex_gaussian;
use crate::tensor::ComplexTensor3;
use crate::C64;

/// Orthogonal pilot rows. Row `k` is `s_k^H`, the sequence user `k` sends.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    pub sequences: DMatrix<C64>,
    pub power: f64,
}

impl PilotBook {
    pub fn num_users(&self) -> usize {
        self.sequences.nrows()
    }

    pub fn symbol_count(&self) -> usize {
        self.sequences.ncols()
    }

    /// `s_k` as a column (the conjugate transpose of row `k`).
    pub fn pilot(&self, k: usize) -> DVector<C64> {
        self.sequences.row(k).adjoint()
    }

    /// `σ_p² T`, the energy of every pilot.
    pub fn energy(&self) -> f64 {
        self.power * self.symbol_count() as f64
    }
}

/// `K` rows of the `T`-point DFT scaled to power `σ_p²` per symbol.
pub fn make_pilots(num_users: usize, symbols: usize, power: f64) -> Result<PilotBook> {
    if num_users == 0 {
        return Err(invalid("pilot book needs at least one user"));
    }
    if symbols < num_users {
        return Err(invalid(format!(
            "{symbols} pilot symbols cannot keep {num_users} users orthogonal"
        )));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(invalid("pilot power must be positive"));
    }
    let amp = power.sqrt();
    let sequences = DMatrix::from_fn(num_users, symbols, |k, t| {
        C64::from_polar(amp, 2.0 * PI * ((k * t) % symbols) as f64 / symbols as f64)
    });
    Ok(PilotBook { sequences, power })
}

/// Distribution of reflection coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryModel {
    /// `e^{jθ}`, θ uniform on `[0, 2π)`.
    #[default]
    UnitModulus,
    /// Unit-power circularly-symmetric complex Gaussian.
    ComplexGaussian,
}

/// Time-switched reflection schedule: one `L × Q̄` block per RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSchedule {
    blocks: Vec<DMatrix<C64>>,
    entry_model: EntryModel,
}

impl ReflectionSchedule {
    pub fn from_blocks(blocks: Vec<DMatrix<C64>>, entry_model: EntryModel) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(invalid("schedule needs at least one RIS"));
        };
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(invalid("reflection blocks must be non-empty"));
        }
        if blocks.iter().any(|b| b.shape() != shape) {
            return Err(invalid("all reflection blocks must share one shape"));
        }
        if entry_model == EntryModel::UnitModulus
            && blocks
                .iter()
                .flat_map(|b| b.iter())
                .any(|v| (v.norm() - 1.0).abs() > 1e-12)
        {
            return Err(invalid("unit-modulus schedule has an entry off the unit circle"));
        }
        Ok(Self { blocks, entry_model })
    }

    pub fn random<R: Rng + ?Sized>(
        num_ris: usize,
        ris_elements: usize,
        subframes_per_ris: usize,
        entry_model: EntryModel,
        rng: &mut R,
    ) -> Result<Self> {
        if num_ris == 0 || ris_elements == 0 || subframes_per_ris == 0 {
            return Err(invalid("schedule dimensions must be positive"));
        }
        let blocks = (0..num_ris)
            .map(|_| {
                DMatrix::from_fn(ris_elements, subframes_per_ris, |_, _| match entry_model {
                    EntryModel::UnitModulus => C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)),
                    EntryModel::ComplexGaussian => complex_gaussian(rng, 1.0),
                })
            })
            .collect();
        Ok(Self { blocks, entry_model })
    }

    pub fn entry_model(&self) -> EntryModel {
        self.entry_model
    }

    pub fn num_ris(&self) -> usize {
        self.blocks.len()
    }

    pub fn ris_elements(&self) -> usize {
        self.blocks[0].nrows()
    }

    /// Q̄, the sub-frames each RIS is active for.
    pub fn subframes_per_ris(&self) -> usize {
        self.blocks[0].ncols()
    }

    pub fn total_subframes(&self) -> usize {
        self.num_ris() * self.subframes_per_ris()
    }

    /// `V̄_n`.
    pub fn block(&self, ris: usize) -> &DMatrix<C64> {
        &self.blocks[ris]
    }

    /// RIS active in global sub-frame `q` and the local sub-frame index.
    pub fn active_ris(&self, q: usize) -> (usize, usize) {
        (q / self.subframes_per_ris(), q % self.subframes_per_ris())
    }

    /// Reflection vector `v_n^q`; zero while RIS `n` is switched off.
    pub fn reflection(&self, ris: usize, q: usize) -> DVector<C64> {
        let (active, local) = self.active_ris(q);
        if active == ris {
            self.blocks[ris].column(local).into_owned()
        } else {
            DVector::zeros(self.ris_elements())
        }
    }

    /// Block-diagonal `N_R·L × N_R·Q̄` stack of all blocks.
    pub fn stacked(&self) -> DMatrix<C64> {
        let (l, q) = (self.ris_elements(), self.subframes_per_ris());
        let mut out = DMatrix::zeros(self.num_ris() * l, self.num_ris() * q);
        for (n, b) in self.blocks.iter().enumerate() {
            out.view_mut((n * l, n * q), (l, q)).copy_from(b);
        }
        out
    }
}

/// Physical channels of one coherence block: `f[m][n]` (BS `m`, RIS `n`)
/// and `h[n][k]` (RIS `n`, user `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Channels {
    pub f: Vec<Vec<ChannelMatrix>>,
    pub h: Vec<Vec<ChannelMatrix>>,
}

impl Channels {
    pub fn new(f: Vec<Vec<ChannelMatrix>>, h: Vec<Vec<ChannelMatrix>>) -> Result<Self> {
        let num_ris = h.len();
        if f.is_empty() || num_ris == 0 || h[0].is_empty() {
            return Err(invalid("need at least one BS, RIS and user"));
        }
        let num_users = h[0].len();
        let l = h[0][0].rows();
        for row in &h {
            if row.len() != num_users {
                return Err(invalid("every RIS needs one channel per user"));
            }
            for c in row {
                if c.role != LinkRole::RisUser || c.shape() != (l, 1) {
                    return Err(invalid("RIS-user channels must be L x 1"));
                }
            }
        }
        for row in &f {
            if row.len() != num_ris {
                return Err(invalid("every BS needs one channel per RIS"));
            }
            let j = row[0].cols();
            for c in row {
                if c.role != LinkRole::BsRis || c.shape() != (l, j) {
                    return Err(invalid("BS-RIS channels of one BS must be L x J"));
                }
            }
        }
        Ok(Self { f, h })
    }

    pub fn num_bs(&self) -> usize {
        self.f.len()
    }

    pub fn num_ris(&self) -> usize {
        self.h.len()
    }

    pub fn num_users(&self) -> usize {
        self.h[0].len()
    }

    pub fn ris_elements(&self) -> usize {
        self.h[0][0].rows()
    }

    pub fn bs_antennas(&self, bs: usize) -> usize {
        self.f[bs][0].cols()
    }

    /// `G_mkn = diag(h_nk^H) F_mn`.
    pub fn cascaded(&self, bs: usize, user: usize, ris: usize) -> ChannelMatrix {
        cascaded_channel(&self.h[ris][user], &self.f[bs][ris]).expect("shapes checked on construction")
    }
}

impl ChannelMatrix {
    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }
}

/// Received block `Y_m,q = Σ_k Σ_n F_mn^H diag(v_n^q) h_nk s_k^H + W_m,q`.
///
/// `reflections[n]` is `v_n^q`. Noise entries are `σ_n · CN(0, 1)` so that
/// runs at different noise powers share their random draws.
pub fn synthesize_subframe<R: Rng + ?Sized>(
    channels: &Channels,
    bs: usize,
    reflections: &[DVector<C64>],
    pilots: &PilotBook,
    noise_power: f64,
    rng: &mut R,
) -> Result<DMatrix<C64>> {
    if reflections.len() != channels.num_ris() {
        return Err(invalid("one reflection vector per RIS is required"));
    }
    if pilots.num_users() != channels.num_users() {
        return Err(invalid("pilot book and channels disagree on the user count"));
    }
    if reflections.iter().any(|v| v.len() != channels.ris_elements()) {
        return Err(invalid("reflection vectors must have L entries"));
    }
    let j = channels.bs_antennas(bs);
    let mut y = DMatrix::zeros(j, pilots.symbol_count());
    for k in 0..channels.num_users() {
        let c = noiseless_response(channels, bs, k, reflections);
        y.gerc(C64::new(1.0, 0.0), &c, &pilots.pilot(k), C64::new(1.0, 0.0));
    }
    let sigma = noise_power.sqrt();
    for w in y.iter_mut() {
        *w += complex_gaussian(rng, 1.0) * sigma;
    }
    Ok(y)
}

/// `Σ_n F_mn^H diag(v_n) h_nk`.
fn noiseless_response(channels: &Channels, bs: usize, user: usize, reflections: &[DVector<C64>]) -> DVector<C64> {
    let mut c = DVector::zeros(channels.bs_antennas(bs));
    for (n, v) in reflections.iter().enumerate() {
        if v.iter().all(|x| *x == C64::new(0.0, 0.0)) {
            continue;
        }
        let u = v.component_mul(&channels.h[n][user].entries.column(0));
        c.gemv_ad(C64::new(1.0, 0.0), &channels.f[bs][n].entries, &u, C64::new(1.0, 0.0));
    }
    c
}

/// `ỹ = Y s_k / (σ_p² T)`.
pub fn despread(y: &DMatrix<C64>, pilots: &PilotBook, user: usize) -> Result<DVector<C64>> {
    if y.ncols() != pilots.symbol_count() {
        return Err(invalid("received block and pilots disagree on T"));
    }
    if user >= pilots.num_users() {
        return Err(invalid(format!("user {user} has no pilot")));
    }
    Ok(y * pilots.pilot(user) / C64::new(pilots.energy(), 0.0))
}

/// Despread training signals of every BS, RIS and user.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `tensors[m][n]` is `J_m × Q̄ × K`; slice `[:, :, k]` is `Ȳ_m,k`
    /// restricted to the sub-frames of RIS `n`.
    pub tensors: Vec<Vec<ComplexTensor3>>,
    /// Per-entry noise variance after despreading, `σ_n² / (σ_p² T)`.
    pub effective_noise: f64,
}

impl Observation {
    /// `Ȳ_m,k` for the sub-frames of RIS `n` (`J_m × Q̄`).
    pub fn user_block(&self, bs: usize, ris: usize, user: usize) -> DMatrix<C64> {
        self.tensors[bs][ris].frontal_slice(user).into_owned()
    }

    /// `Ȳ_m,k` over all sub-frames (`J_m × N_R·Q̄`).
    pub fn stacked_user(&self, bs: usize, user: usize) -> DMatrix<C64> {
        let blocks: Vec<_> = (0..self.tensors[bs].len())
            .map(|n| self.user_block(bs, n, user))
            .collect();
        let j = blocks[0].nrows();
        let q = blocks[0].ncols();
        let mut out = DMatrix::zeros(j, q * blocks.len());
        for (n, b) in blocks.iter().enumerate() {
            out.columns_mut(n * q, q).copy_from(b);
        }
        out
    }
}

/// Runs the whole training phase: every BS receives every sub-frame, and
/// each received block is despread for every user.
pub fn build_observation_tensor<R: Rng + ?Sized>(
    channels: &Channels,
    schedule: &ReflectionSchedule,
    pilots: &PilotBook,
    noise_power: f64,
    rng: &mut R,
) -> Result<Observation> {
    if schedule.num_ris() != channels.num_ris() || schedule.ris_elements() != channels.ris_elements() {
        return Err(invalid("schedule does not match the RIS configuration"));
    }
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(invalid("noise power must be non-negative"));
    }
    let qbar = schedule.subframes_per_ris();
    let k_users = channels.num_users();
    let mut tensors = Vec::with_capacity(channels.num_bs());
    for m in 0..channels.num_bs() {
        let j = channels.bs_antennas(m);
        let mut per_ris: Vec<_> = (0..schedule.num_ris())
            .map(|_| ComplexTensor3::zeros(j, qbar, k_users))
            .collect();
        for q in 0..schedule.total_subframes() {
            let reflections: Vec<_> = (0..schedule.num_ris()).map(|n| schedule.reflection(n, q)).collect();
            let y = synthesize_subframe(channels, m, &reflections, pilots, noise_power, rng)?;
            let (n, local) = schedule.active_ris(q);
            for k in 0..k_users {
                let yk = despread(&y, pilots, k)?;
                for (jj, x) in yk.iter().enumerate() {
                    per_ris[n].set(jj, local, k, *x);
                }
            }
        }
        tensors.push(per_ris);
    }
    Ok(Observation {
        tensors,
        effective_noise: noise_power / pilots.energy(),
    })
}

/// Sensing operators of the second timescale for one RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimescaleSensing {
    /// `Φ_m`, `Q̄'·J_m × L`; row block `q` is `F_m^H diag(v^q)`.
    pub phi: Vec<DMatrix<C64>>,
    /// `Φ_m A_R`, `Q̄'·J_m × G_r`.
    pub composite: Vec<DMatrix<C64>>,
    /// `Φ̃`, the composites of all BSs stacked, `Q̄'·Σ J_m × G_r`.
    pub stacked: DMatrix<C64>,
}

/// Builds `Φ_m`, `Φ_m A_R` and `Φ̃` from known BS–RIS channels `F_m` (one
/// per BS, all for the same RIS) and that RIS's `L × Q̄'` reflection block.
pub fn build_twotimescale_sensing(
    bs_ris: &[&ChannelMatrix],
    reflections: &DMatrix<C64>,
    dict_r: &Dictionary,
) -> Result<TwoTimescaleSensing> {
    if bs_ris.is_empty() {
        return Err(invalid("need at least one BS"));
    }
    let l = reflections.nrows();
    if dict_r.n_elements() != l {
        return Err(invalid("dictionary size does not match the RIS"));
    }
    let qbar = reflections.ncols();
    let mut phi = Vec::with_capacity(bs_ris.len());
    for f in bs_ris {
        if f.rows() != l {
            return Err(invalid("BS-RIS channel rows must equal the RIS size"));
        }
        let j = f.cols();
        let mut p = DMatrix::zeros(qbar * j, l);
        let fh = f.entries.adjoint();
        for q in 0..qbar {
            let mut block = fh.clone();
            for (ll, mut col) in block.column_iter_mut().enumerate() {
                col *= reflections[(ll, q)];
            }
            p.rows_mut(q * j, j).copy_from(&block);
        }
        phi.push(p);
    }
    let composite: Vec<_> = phi.iter().map(|p| p * dict_r.atoms()).collect();
    let rows: usize = composite.iter().map(|c| c.nrows()).sum();
    let mut stacked = DMatrix::zeros(rows, dict_r.grid_size());
    let mut r0 = 0;
    for c in &composite {
        stacked.rows_mut(r0, c.nrows()).copy_from(c);
        r0 += c.nrows();
    }
    Ok(TwoTimescaleSensing {
        phi,
        composite,
        stacked,
    })
}
