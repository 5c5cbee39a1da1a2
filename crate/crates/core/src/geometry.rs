//! Array geometry and multipath channel generation.
//!
//! All arrays are uniform linear arrays. A path is described by the phase
//! argument its steering vector takes, `2π (d/λ) sin(angle)`, wrapped to
//! `[-π, π)`. Storing arguments rather than raw angles keeps the cascaded
//! RIS-side argument (BS–RIS arrival minus RIS–user departure) in the same
//! representation as the physical ones.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{invalid, Result};
use crate::rng::complex_gaussian;
use crate::C64;

/// Wraps a phase to `[-π, π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = x - two_pi * ((x + PI) / two_pi).floor();
    if r >= PI {
        r - two_pi
    } else if r < -PI {
        -PI
    } else {
        r
    }
}

/// Scenario counts, array sizes and powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub num_bs: usize,
    pub num_ris: usize,
    pub num_users: usize,
    /// Antennas of each BS; one entry per BS.
    pub bs_antennas: Vec<usize>,
    /// Reflecting elements per RIS (identical for all RISs).
    pub ris_elements: usize,
    pub paths_bs_ris: usize,
    pub paths_ris_user: usize,
    /// Per-user transmit power σ_p² (linear).
    pub pilot_power: f64,
    /// Receiver noise power σ_n² (linear). Zero means noiseless training.
    pub noise_power: f64,
    #[serde(default = "default_spacing")]
    pub element_spacing_ratio: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_spacing() -> f64 {
    0.5
}

impl SystemConfig {
    /// Three BSs with 16 antennas, three 128-element RISs, eight users and
    /// three paths per link at 10 dB SNR.
    pub fn reference() -> Self {
        Self {
            num_bs: 3,
            num_ris: 3,
            num_users: 8,
            bs_antennas: vec![16; 3],
            ris_elements: 128,
            paths_bs_ris: 3,
            paths_ris_user: 3,
            pilot_power: 1.0,
            noise_power: 0.1,
            element_spacing_ratio: 0.5,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_bs", self.num_bs),
            ("num_ris", self.num_ris),
            ("num_users", self.num_users),
            ("ris_elements", self.ris_elements),
            ("paths_bs_ris", self.paths_bs_ris),
            ("paths_ris_user", self.paths_ris_user),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(invalid(format!("{name} must be at least 1")));
            }
        }
        if self.bs_antennas.len() != self.num_bs {
            return Err(invalid(format!(
                "bs_antennas lists {} entries for {} BSs",
                self.bs_antennas.len(),
                self.num_bs
            )));
        }
        if self.bs_antennas.contains(&0) {
            return Err(invalid("every BS needs at least one antenna"));
        }
        if !(self.pilot_power > 0.0 && self.pilot_power.is_finite()) {
            return Err(invalid("pilot_power must be positive"));
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(invalid("noise_power must be non-negative"));
        }
        if !(self.element_spacing_ratio > 0.0 && self.element_spacing_ratio <= 1.0) {
            return Err(invalid("element_spacing_ratio must lie in (0, 1]"));
        }
        Ok(())
    }

    /// SNR σ_p²/σ_n² in dB (infinite when noiseless).
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.pilot_power / self.noise_power).log10()
    }

    /// Sets the noise power from an SNR in dB; `+inf` gives noiseless training.
    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.noise_power = if snr_db == f64::INFINITY {
            0.0
        } else {
            self.pilot_power / 10f64.powf(snr_db / 10.0)
        };
    }
}

/// Angles and complex gains of the paths of one physical link.
///
/// For a BS–RIS link the arrival arguments live on the RIS and the departure
/// arguments on the BS. For a RIS–user link only the departure arguments
/// (on the RIS) enter the channel; the user has a single antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    aoa_args: Vec<f64>,
    aod_args: Vec<f64>,
    gains: Vec<C64>,
}

impl PathSet {
    pub fn new(aoa_args: Vec<f64>, aod_args: Vec<f64>, gains: Vec<C64>) -> Result<Self> {
        if aoa_args.len() != gains.len() || aod_args.len() != gains.len() {
            return Err(invalid(format!(
                "path lists disagree: {} arrivals, {} departures, {} gains",
                aoa_args.len(),
                aod_args.len(),
                gains.len()
            )));
        }
        Ok(Self {
            aoa_args: aoa_args.into_iter().map(wrap_phase).collect(),
            aod_args: aod_args.into_iter().map(wrap_phase).collect(),
            gains,
        })
    }

    pub fn num_paths(&self) -> usize {
        self.gains.len()
    }

    pub fn aoa_args(&self) -> &[f64] {
        &self.aoa_args
    }

    pub fn aod_args(&self) -> &[f64] {
        &self.aod_args
    }

    pub fn gains(&self) -> &[C64] {
        &self.gains
    }

    /// Same angles, gains multiplied by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            aoa_args: self.aoa_args.clone(),
            aod_args: self.aod_args.clone(),
            gains: self.gains.iter().map(|g| g * c).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkRole {
    /// `L × J` BS–RIS channel F.
    BsRis,
    /// `L × 1` RIS–user channel h (used conjugate-transposed).
    RisUser,
    /// `L × J` cascaded channel G = diag(h^H) F.
    Cascaded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<C64>,
    pub role: LinkRole,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<C64>, role: LinkRole) -> Self {
        Self { entries, role }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        self.entries.norm_squared()
    }
}

/// ULA steering vector `(1/√N) [1, e^{jθ}, …, e^{j(N-1)θ}]ᵀ`.
pub fn steering_vector(phase_arg: f64, n_elements: usize) -> Result<DVector<C64>> {
    if n_elements == 0 {
        return Err(invalid("steering vector needs at least one element"));
    }
    Ok(steering_unchecked(phase_arg, n_elements))
}

pub(crate) fn steering_unchecked(phase_arg: f64, n: usize) -> DVector<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DVector::from_iterator(n, (0..n).map(|i| C64::from_polar(scale, i as f64 * phase_arg)))
}

/// BS–RIS channel `√(LJ/P) Σ_p β_p a_L(ϑ_p) a_J(ϕ_p)^H`.
pub fn gen_bs_ris_channel(paths: &PathSet, l: usize, j: usize) -> Result<ChannelMatrix> {
    if l == 0 || j == 0 {
        return Err(invalid("channel dimensions must be positive"));
    }
    let mut f = DMatrix::zeros(l, j);
    if paths.num_paths() > 0 {
        let scale = ((l * j) as f64 / paths.num_paths() as f64).sqrt();
        for p in 0..paths.num_paths() {
            let a_ris = steering_unchecked(paths.aoa_args[p], l);
            let a_bs = steering_unchecked(paths.aod_args[p], j);
            f.gerc(paths.gains[p] * scale, &a_ris, &a_bs, C64::new(1.0, 0.0));
        }
    }
    Ok(ChannelMatrix::new(f, LinkRole::BsRis))
}

/// RIS–user channel `√(L/P) Σ_b γ_b a_L(φ_b)`, stored as an `L × 1` column.
pub fn gen_ris_user_channel(paths: &PathSet, l: usize) -> Result<ChannelMatrix> {
    if l == 0 {
        return Err(invalid("channel dimensions must be positive"));
    }
    let mut h = DMatrix::zeros(l, 1);
    if paths.num_paths() > 0 {
        let scale = (l as f64 / paths.num_paths() as f64).sqrt();
        for b in 0..paths.num_paths() {
            let a = steering_unchecked(paths.aod_args[b], l);
            h.column_mut(0).axpy(paths.gains[b] * scale, &a, C64::new(1.0, 0.0));
        }
    }
    Ok(ChannelMatrix::new(h, LinkRole::RisUser))
}

/// Cascaded channel `G = diag(h^H) F`: row ℓ of F weighted by `conj(h_ℓ)`.
pub fn cascaded_channel(h: &ChannelMatrix, f: &ChannelMatrix) -> Result<ChannelMatrix> {
    if h.role != LinkRole::RisUser || f.role != LinkRole::BsRis {
        return Err(invalid("cascaded_channel expects a RIS-user and a BS-RIS channel"));
    }
    if h.cols() != 1 || h.rows() != f.rows() {
        return Err(invalid(format!(
            "RIS-user channel is {}x{} but BS-RIS channel has {} rows",
            h.rows(),
            h.cols(),
            f.rows()
        )));
    }
    let mut g = f.entries.clone();
    for (l, mut row) in g.row_iter_mut().enumerate() {
        row *= h.entries[(l, 0)].conj();
    }
    Ok(ChannelMatrix::new(g, LinkRole::Cascaded))
}

/// One term of the cascaded-channel path expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadedPath {
    /// RIS-side argument `ϑ_p − φ_b`, wrapped.
    pub aoa_arg: f64,
    /// BS-side argument `ϕ_p`.
    pub aod_arg: f64,
    pub gain: C64,
}

/// Expands `diag(h^H) F` into `P_f · P_h` rank-one terms
/// `√(LJ/(P_f P_h)) β_p conj(γ_b) a_L(ϑ_p − φ_b) a_J(ϕ_p)^H`.
pub fn cascaded_paths(bs_ris: &PathSet, ris_user: &PathSet, l: usize, j: usize) -> Vec<CascadedPath> {
    let pf = bs_ris.num_paths();
    let ph = ris_user.num_paths();
    if pf == 0 || ph == 0 {
        return Vec::new();
    }
    let scale = ((l * j) as f64 / (pf * ph) as f64).sqrt();
    let mut out = Vec::with_capacity(pf * ph);
    for p in 0..pf {
        for b in 0..ph {
            out.push(CascadedPath {
                aoa_arg: wrap_phase(bs_ris.aoa_args[p] - ris_user.aod_args[b]),
                aod_arg: bs_ris.aod_args[p],
                gain: scale * bs_ris.gains[p] * ris_user.gains[b].conj(),
            });
        }
    }
    out
}

/// Sums rank-one cascaded terms into an `L × J` channel.
pub fn channel_from_paths(paths: &[CascadedPath], l: usize, j: usize) -> ChannelMatrix {
    let mut g = DMatrix::zeros(l, j);
    for p in paths {
        let a_ris = steering_unchecked(p.aoa_arg, l);
        let a_bs = steering_unchecked(p.aod_arg, j);
        g.gerc(p.gain, &a_ris, &a_bs, C64::new(1.0, 0.0));
    }
    ChannelMatrix::new(g, LinkRole::Cascaded)
}

/// Draws `num_paths` paths: physical angles uniform on `[0, 2π)` mapped
/// through `2π (d/λ) sin(·)`, unit-power complex Gaussian gains.
///
/// With `snap = Some((arrival_grid, departure_grid))` each argument is moved
/// to the nearest grid point of the matching dictionary.
pub fn sample_paths<R: Rng + ?Sized>(
    num_paths: usize,
    spacing_ratio: f64,
    snap: Option<(&Dictionary, &Dictionary)>,
    rng: &mut R,
) -> PathSet {
    let k = 2.0 * PI * spacing_ratio;
    let mut aoa = Vec::with_capacity(num_paths);
    let mut aod = Vec::with_capacity(num_paths);
    let mut gains = Vec::with_capacity(num_paths);
    for _ in 0..num_paths {
        let arrival: f64 = rng.random_range(0.0..2.0 * PI);
        let departure: f64 = rng.random_range(0.0..2.0 * PI);
        let mut a = wrap_phase(k * arrival.sin());
        let mut d = wrap_phase(k * departure.sin());
        if let Some((grid_a, grid_d)) = snap {
            a = grid_a.grid_args()[grid_a.nearest_index(a)];
            d = grid_d.grid_args()[grid_d.nearest_index(d)];
        }
        aoa.push(a);
        aod.push(d);
        gains.push(complex_gaussian(rng, 1.0));
    }
    PathSet {
        aoa_args: aoa,
        aod_args: aod,
        gains,
    }
}
