//! One Monte-Carlo trial: draw a scenario, train, run every method.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use riscf::dictionary::{build_dictionary, Dictionary};
use riscf::estimators::{
    aoa_stage, ls_cascaded, mlaomp_3d, one_dim_cascaded, oracle_ls, somp_cascaded, twotimescale_cooperative,
    twotimescale_individual, GreedyConfig, OracleBasis, RisSensing,
};
use riscf::geometry::{cascaded_paths, gen_bs_ris_channel, gen_ris_user_channel, sample_paths, PathSet, SystemConfig};
use riscf::measurement::{
    build_observation_tensor, build_twotimescale_sensing, make_pilots, Channels, Observation, ReflectionSchedule,
};
use riscf::rng::{trial_rng, SimRng, CHANNEL_STREAM, NOISE_STREAM, REFLECTION_STREAM};
use riscf::C64;

use crate::config::{ExperimentSpec, Method};
use crate::error::Result;
use crate::metrics::{nmse_cascaded, nmse_h};

/// Grids shared by all trials.
#[derive(Debug, Clone)]
pub struct Dictionaries {
    pub ris: Dictionary,
    /// One per BS, sized to its antenna count.
    pub bs: Vec<Dictionary>,
}

impl Dictionaries {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        let sc = &spec.scenario;
        let ris = build_dictionary(sc.ris_elements, spec.estimator.grid_ris)?;
        let bs = sc
            .bs_antennas
            .iter()
            .map(|&j| build_dictionary(j, spec.estimator.grid_bs))
            .collect::<riscf::Result<_>>()?;
        Ok(Self { ris, bs })
    }
}

/// Paths and channels of one trial.
#[derive(Debug, Clone)]
pub struct Realization {
    /// `bs_ris[m][n]`.
    pub bs_ris: Vec<Vec<PathSet>>,
    /// `ris_user[n][k]`.
    pub ris_user: Vec<Vec<PathSet>>,
    pub channels: Channels,
}

/// Draws every BS–RIS link (BS-major), then every RIS–user link (RIS-major).
pub fn draw_realization(
    sc: &SystemConfig,
    dicts: &Dictionaries,
    on_grid: bool,
    rng: &mut SimRng,
) -> Result<Realization> {
    let l = sc.ris_elements;
    let mut bs_ris = Vec::with_capacity(sc.num_bs);
    for m in 0..sc.num_bs {
        let snap = on_grid.then_some((&dicts.ris, &dicts.bs[m]));
        bs_ris.push(
            (0..sc.num_ris)
                .map(|_| sample_paths(sc.paths_bs_ris, sc.element_spacing_ratio, snap, rng))
                .collect::<Vec<_>>(),
        );
    }
    let snap = on_grid.then_some((&dicts.ris, &dicts.ris));
    let ris_user: Vec<Vec<PathSet>> = (0..sc.num_ris)
        .map(|_| {
            (0..sc.num_users)
                .map(|_| sample_paths(sc.paths_ris_user, sc.element_spacing_ratio, snap, rng))
                .collect()
        })
        .collect();
    let f = bs_ris
        .iter()
        .enumerate()
        .map(|(m, row)| {
            row.iter()
                .map(|p| gen_bs_ris_channel(p, l, sc.bs_antennas[m]))
                .collect()
        })
        .collect::<riscf::Result<_>>()?;
    let h = ris_user
        .iter()
        .map(|row| row.iter().map(|p| gen_ris_user_channel(p, l)).collect())
        .collect::<riscf::Result<_>>()?;
    Ok(Realization {
        bs_ris,
        ris_user,
        channels: Channels::new(f, h)?,
    })
}

/// Outcome of one method in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub nmse: f64,
    pub seconds: f64,
}

/// Runs trial `trial` of `spec` at one sweep value. Outcomes follow
/// `spec.methods`.
pub fn run_trial(spec: &ExperimentSpec, dicts: &Dictionaries, value: f64, trial: u64) -> Result<Vec<MethodOutcome>> {
    let (sc, subframes) = spec.point(value);
    let real = draw_realization(
        &sc,
        dicts,
        spec.on_grid,
        &mut trial_rng(spec.seed, trial, CHANNEL_STREAM),
    )?;
    let schedule = ReflectionSchedule::random(
        sc.num_ris,
        sc.ris_elements,
        subframes,
        spec.training.reflections,
        &mut trial_rng(spec.seed, trial, REFLECTION_STREAM),
    )?;
    let pilots = make_pilots(sc.num_users, spec.pilot_symbols(), sc.pilot_power)?;
    let obs = build_observation_tensor(
        &real.channels,
        &schedule,
        &pilots,
        sc.noise_power,
        &mut trial_rng(spec.seed, trial, NOISE_STREAM),
    )?;
    let ctx = TrialContext {
        spec,
        sc: &sc,
        dicts,
        real: &real,
        schedule: &schedule,
        obs: &obs,
    };
    spec.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let nmse = ctx.evaluate(method)?;
            Ok(MethodOutcome {
                nmse,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

struct TrialContext<'a> {
    spec: &'a ExperimentSpec,
    sc: &'a SystemConfig,
    dicts: &'a Dictionaries,
    real: &'a Realization,
    schedule: &'a ReflectionSchedule,
    obs: &'a Observation,
}

impl TrialContext<'_> {
    fn noise(&self) -> f64 {
        self.spec.estimator.tolerance_factor * self.obs.effective_noise
    }

    fn evaluate(&self, method: Method) -> Result<f64> {
        if method.is_two_timescale() {
            self.two_timescale(method)
        } else {
            self.cascaded(method)
        }
    }

    fn cascaded(&self, method: Method) -> Result<f64> {
        let sc = self.sc;
        let est = &self.spec.estimator;
        let q = self.schedule.subframes_per_ris();
        let sparsity = sc.paths_bs_ris * sc.paths_ris_user;
        let sensing: Vec<RisSensing> = (0..sc.num_ris)
            .map(|n| RisSensing::new(self.schedule.block(n), &self.dicts.ris))
            .collect::<riscf::Result<_>>()?;
        let mut estimates: Vec<((usize, usize, usize), DMatrix<C64>)> = Vec::new();
        for m in 0..sc.num_bs {
            let j = sc.bs_antennas[m];
            let dict_t = &self.dicts.bs[m];
            let one_dim = GreedyConfig::new(sparsity).with_tol(self.noise() * (q * j) as f64);
            match method {
                Method::Ls => {
                    for k in 0..sc.num_users {
                        let g = ls_cascaded(&self.obs.stacked_user(m, k), self.schedule)?;
                        for (n, gn) in g.into_iter().enumerate() {
                            estimates.push(((m, n, k), gn.entries));
                        }
                    }
                }
                Method::OracleLs => {
                    for n in 0..sc.num_ris {
                        for k in 0..sc.num_users {
                            let paths =
                                cascaded_paths(&self.real.bs_ris[m][n], &self.real.ris_user[n][k], sc.ris_elements, j);
                            let r = oracle_ls(
                                &self.obs.user_block(m, n, k),
                                self.schedule.block(n),
                                &paths,
                                OracleBasis::Exact,
                            )?;
                            estimates.push(((m, n, k), r.channel.entries));
                        }
                    }
                }
                Method::Omp | Method::Laomp => {
                    let u = if method == Method::Omp { 1 } else { est.look_ahead_1d };
                    for (n, sensing) in sensing.iter().enumerate() {
                        for k in 0..sc.num_users {
                            let r = one_dim_cascaded(
                                &self.obs.user_block(m, n, k),
                                sensing,
                                &self.dicts.ris,
                                dict_t,
                                &one_dim,
                                u,
                            )?;
                            estimates.push(((m, n, k), r.channel.entries));
                        }
                    }
                }
                Method::Somp => {
                    for (n, sensing) in sensing.iter().enumerate() {
                        for k in 0..sc.num_users {
                            let r = somp_cascaded(&self.obs.user_block(m, n, k), sensing, &self.dicts.ris, &one_dim)?;
                            estimates.push(((m, n, k), r.channel.entries));
                        }
                    }
                }
                Method::Mlaomp3d => {
                    let aod_cfg = GreedyConfig::new(sc.paths_bs_ris)
                        .with_look_ahead(est.look_ahead_aod)
                        .with_tol(self.noise() * (j * q * sc.num_users) as f64);
                    for (n, sensing) in sensing.iter().enumerate() {
                        let aod = mlaomp_3d(&self.obs.tensors[m][n], dict_t, &aod_cfg)?;
                        let p_aod = aod.support.len();
                        let aoa_cfg = GreedyConfig::new((p_aod * sc.paths_ris_user).max(1))
                            .with_look_ahead(est.look_ahead_aoa)
                            .with_tol(self.noise() * (p_aod * q) as f64);
                        for k in 0..sc.num_users {
                            let z = aod.coefficients.frontal_slice(k).into_owned();
                            let aoa = aoa_stage(&z, &aod.support, sensing, &aoa_cfg)?;
                            let g = riscf::dictionary::reconstruct_cascaded(&aoa.atoms, &self.dicts.ris, dict_t)?;
                            estimates.push(((m, n, k), g.entries));
                        }
                    }
                }
                Method::TtIndividual | Method::TtCooperative => unreachable!("handled by two_timescale"),
            }
        }
        let truths: Vec<DMatrix<C64>> = estimates
            .iter()
            .map(|&((m, n, k), _)| self.real.channels.cascaded(m, k, n).entries)
            .collect();
        let pairs: Vec<_> = estimates
            .iter()
            .zip(&truths)
            .map(|((idx, e), t)| (*idx, e, t))
            .collect();
        nmse_cascaded(&pairs)
    }

    fn two_timescale(&self, method: Method) -> Result<f64> {
        let sc = self.sc;
        let q = self.schedule.subframes_per_ris();
        let cfg = GreedyConfig::new(sc.paths_ris_user).with_look_ahead(self.spec.estimator.look_ahead_tt);
        let mut estimates: Vec<((usize, usize), DMatrix<C64>)> = Vec::new();
        for n in 0..sc.num_ris {
            let f: Vec<_> = (0..sc.num_bs).map(|m| &self.real.channels.f[m][n]).collect();
            let sensing = build_twotimescale_sensing(&f, self.schedule.block(n), &self.dicts.ris)?;
            for k in 0..sc.num_users {
                let ys: Vec<DVector<C64>> = (0..sc.num_bs)
                    .map(|m| {
                        let b = self.obs.user_block(m, n, k);
                        DVector::from_column_slice(b.as_slice())
                    })
                    .collect();
                match method {
                    Method::TtIndividual => {
                        for (m, y) in ys.iter().enumerate() {
                            let c = cfg.with_tol(self.noise() * (q * sc.bs_antennas[m]) as f64);
                            let r = twotimescale_individual(y, &sensing.composite[m], &self.dicts.ris, &c)?;
                            estimates.push(((n, k), r.channel.entries));
                        }
                    }
                    Method::TtCooperative => {
                        let y = DVector::from_iterator(
                            ys.iter().map(|v| v.len()).sum(),
                            ys.iter().flat_map(|v| v.iter().copied()),
                        );
                        let c = cfg.with_tol(self.noise() * y.len() as f64);
                        let r = twotimescale_cooperative(&y, &sensing.stacked, &self.dicts.ris, &c)?;
                        estimates.push(((n, k), r.channel.entries));
                    }
                    _ => unreachable!("cascaded methods are handled elsewhere"),
                }
            }
        }
        let pairs: Vec<_> = estimates
            .iter()
            .map(|((n, k), e)| ((*n, *k), e, &self.real.channels.h[*n][*k].entries))
            .collect();
        nmse_h(&pairs)
    }
}
