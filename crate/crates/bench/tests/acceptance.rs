//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `cargo test -p riscf-bench --test acceptance -- c4 c5` runs a subset.
//! The full-scale (fig4 preset) oracle-bound sweep takes days on one core and only runs
//! with `RISCF_ACCEPTANCE_FULL=1`; otherwise the same check runs on the ci
//! preset.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use riscf::dictionary::{build_dictionary, reconstruct_cascaded};
use riscf::estimators::{
    aoa_stage, laomp, ls_cascaded, mlaomp_3d, omp, twotimescale_cooperative, twotimescale_individual, GreedyConfig,
    RisSensing,
};
use riscf::geometry::{cascaded_channel, gen_bs_ris_channel, gen_ris_user_channel, sample_paths};
use riscf::measurement::{
    build_observation_tensor, build_twotimescale_sensing, despread, make_pilots, synthesize_subframe, Channels,
    EntryModel, ReflectionSchedule,
};
use riscf::rng::{complex_gaussian, trial_rng, SimRng};
use riscf::tensor::{contract_mode1, slice_l1_energies, ComplexTensor3};
use riscf::C64;
use riscf_bench::metrics::mean_and_stderr;
use riscf_bench::trial::{draw_realization, Dictionaries};
use riscf_bench::{find_row, run_experiment, ExperimentSpec, Method, Preset, ResultRow};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("c1", "oracle LS lower-bounds every CS method", c1_oracle_lower_bound),
        (
            "c2",
            "3D-MLAOMP < LAOMP < OMP at 10 dB (ci, 200 trials)",
            c2_method_ordering,
        ),
        (
            "c3",
            "cooperative beats individual two-timescale estimation",
            c3_cooperation_gain,
        ),
        ("c4", "noiseless on-grid AoD support recovery", c4_exact_recovery),
        ("c5", "noiseless TS-mode LS exactness", c5_ls_exactness),
        ("c6", "brute-force numerical oracles", c6_numerical_oracles),
        ("c7", "degenerate look-ahead and cooperation identities", c7_degeneracy),
        ("c8", "3D-MLAOMP NMSE non-increasing in SNR (fig4)", c8_monotonicity),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {id} {name}: {} [{:.1} s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn run(spec: &ExperimentSpec) -> Vec<ResultRow> {
    run_experiment(spec).expect("experiment runs")
}

fn row(rows: &[ResultRow], m: Method, v: f64) -> &ResultRow {
    find_row(rows, m, v).expect("row present")
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn c1_oracle_lower_bound() -> Outcome {
    let full = std::env::var("RISCF_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let mut spec = if full { Preset::Fig4.spec() } else { Preset::Ci.spec() };
    spec.methods = vec![
        Method::OracleLs,
        Method::Omp,
        Method::Laomp,
        Method::Somp,
        Method::Mlaomp3d,
    ];
    spec.timing = false;
    let rows = run(&spec);
    let mut violations = Vec::new();
    let mut margin = f64::INFINITY;
    for &v in &spec.sweep_values {
        let oracle = row(&rows, Method::OracleLs, v).nmse_linear;
        for m in [Method::Omp, Method::Laomp, Method::Somp, Method::Mlaomp3d] {
            let r = row(&rows, m, v).nmse_linear;
            margin = margin.min(db(r) - db(oracle));
            if r < oracle {
                violations.push(format!("{m}@{v}dB"));
            }
        }
    }
    let scale = if full {
        "fig4 preset, 200 trials"
    } else {
        "ci preset, 50 trials (fig4 scale needs RISCF_ACCEPTANCE_FULL=1)"
    };
    outcome(
        violations.is_empty(),
        format!("{scale}; smallest CS-minus-oracle gap {margin:.2} dB; violations {violations:?}"),
    )
}

/// Mean and standard error of the per-trial difference `a − b`.
fn paired_gap(a: &ResultRow, b: &ResultRow) -> (f64, f64) {
    let d: Vec<f64> = a.samples.iter().zip(&b.samples).map(|(x, y)| x - y).collect();
    mean_and_stderr(&d)
}

fn c2_method_ordering() -> Outcome {
    let mut spec = Preset::Ci.spec();
    spec.trials = 200;
    spec.sweep_values = vec![10.0];
    spec.methods = vec![Method::Omp, Method::Laomp, Method::Mlaomp3d];
    spec.timing = false;
    let rows = run(&spec);
    let omp = row(&rows, Method::Omp, 10.0);
    let la = row(&rows, Method::Laomp, 10.0);
    let ml = row(&rows, Method::Mlaomp3d, 10.0);
    // Positive gaps mean the second method is better.
    let (g1, s1) = paired_gap(la, ml);
    let (g2, s2) = paired_gap(omp, la);
    let pass = g1 > 3.0 * s1 && g2 > 3.0 * s2;
    outcome(
        pass,
        format!(
            "NMSE dB: mlaomp3d {:.2}, laomp {:.2}, omp {:.2}; laomp-mlaomp3d gap {g1:.3e} (SE {s1:.1e}), omp-laomp gap {g2:.3e} (SE {s2:.1e})",
            ml.nmse_db, la.nmse_db, omp.nmse_db
        ),
    )
}

fn c3_cooperation_gain() -> Outcome {
    let mut spec = Preset::Fig5.spec();
    spec.timing = false;
    assert_eq!(spec.estimator.look_ahead_tt, 9);
    assert_eq!(spec.training.snr_db, Some(10.0));
    let rows = run(&spec);
    let mut ok = true;
    let mut parts = Vec::new();
    for &v in &spec.sweep_values {
        let ind = row(&rows, Method::TtIndividual, v).nmse_db;
        let coop = row(&rows, Method::TtCooperative, v).nmse_db;
        ok &= coop <= ind;
        parts.push(format!("Q'={v}: {coop:.2} vs {ind:.2}"));
    }
    let first = spec.sweep_values.iter().copied().fold(f64::INFINITY, f64::min);
    let gain = row(&rows, Method::TtIndividual, first).nmse_db - row(&rows, Method::TtCooperative, first).nmse_db;
    ok &= gain >= 3.0;
    outcome(
        ok,
        format!(
            "cooperative vs individual dB {}; gain at Q'={first}: {gain:.2} dB",
            parts.join(", ")
        ),
    )
}

fn ci_scenario() -> ExperimentSpec {
    let mut spec = Preset::Ci.spec();
    spec.on_grid = true;
    spec.scenario.noise_power = 0.0;
    spec
}

fn c4_exact_recovery() -> Outcome {
    let spec = ci_scenario();
    let sc = &spec.scenario;
    assert_eq!(
        (sc.paths_bs_ris, sc.paths_ris_user, spec.training.subframes_per_ris),
        (3, 3, 32)
    );
    let dicts = Dictionaries::new(&spec).unwrap();
    let (m, n) = (0, 0);
    let trials = 100u64;
    let mut recovered = 0;
    let mut exact_but_inaccurate = 0;
    let mut worst_exact = 0.0f64;
    for t in 0..trials {
        let real = draw_realization(sc, &dicts, true, &mut trial_rng(7, t, 0)).unwrap();
        let schedule = ReflectionSchedule::random(
            sc.num_ris,
            sc.ris_elements,
            32,
            spec.training.reflections,
            &mut trial_rng(7, t, 1),
        )
        .unwrap();
        let pilots = make_pilots(sc.num_users, sc.num_users, sc.pilot_power).unwrap();
        let obs = build_observation_tensor(&real.channels, &schedule, &pilots, 0.0, &mut trial_rng(7, t, 2)).unwrap();
        let dict_t = &dicts.bs[m];
        let aod_cfg = GreedyConfig::new(sc.paths_bs_ris).with_look_ahead(spec.estimator.look_ahead_aod);
        let aod = mlaomp_3d(&obs.tensors[m][n], dict_t, &aod_cfg).unwrap();
        let truth: BTreeSet<usize> = real.bs_ris[m][n]
            .aod_args()
            .iter()
            .map(|&a| dict_t.nearest_index(a))
            .collect();
        let got: BTreeSet<usize> = aod.support.iter().copied().collect();
        if got != truth {
            continue;
        }
        recovered += 1;
        let sensing = RisSensing::new(schedule.block(n), &dicts.ris).unwrap();
        let aoa_cfg =
            GreedyConfig::new(aod.support.len() * sc.paths_ris_user).with_look_ahead(spec.estimator.look_ahead_aoa);
        let mut nmse = 0.0;
        for k in 0..sc.num_users {
            let z = aod.coefficients.frontal_slice(k).into_owned();
            let aoa = aoa_stage(&z, &aod.support, &sensing, &aoa_cfg).unwrap();
            let g = reconstruct_cascaded(&aoa.atoms, &dicts.ris, dict_t).unwrap().entries;
            let truth = real.channels.cascaded(m, k, n).entries;
            nmse += (g - &truth).norm_squared() / truth.norm_squared();
        }
        nmse /= sc.num_users as f64;
        worst_exact = worst_exact.max(nmse);
        if nmse >= 1e-10 {
            exact_but_inaccurate += 1;
        }
    }
    outcome(
        recovered >= 99 && exact_but_inaccurate == 0,
        format!(
            "AoD support exact in {recovered}/{trials}; of those, {exact_but_inaccurate} with NMSE_G >= 1e-10 (worst {worst_exact:.2e})"
        ),
    )
}

fn c5_ls_exactness() -> Outcome {
    let spec = ci_scenario();
    let sc = &spec.scenario;
    let dicts = Dictionaries::new(&spec).unwrap();
    let l = sc.ris_elements;
    let mut passed = 0;
    let mut worst = 0.0f64;
    for t in 0..10u64 {
        let real = draw_realization(sc, &dicts, false, &mut trial_rng(11, t, 0)).unwrap();
        let schedule =
            ReflectionSchedule::random(sc.num_ris, l, l, EntryModel::UnitModulus, &mut trial_rng(11, t, 1)).unwrap();
        let pilots = make_pilots(sc.num_users, sc.num_users, sc.pilot_power).unwrap();
        let obs = build_observation_tensor(&real.channels, &schedule, &pilots, 0.0, &mut trial_rng(11, t, 2)).unwrap();
        let mut trial_worst = 0.0f64;
        for m in 0..sc.num_bs {
            for k in 0..sc.num_users {
                let est = ls_cascaded(&obs.stacked_user(m, k), &schedule).unwrap();
                for (n, g) in est.iter().enumerate() {
                    let truth = real.channels.cascaded(m, k, n).entries;
                    trial_worst = trial_worst.max((&g.entries - &truth).norm() / truth.norm());
                }
            }
        }
        worst = worst.max(trial_worst);
        if trial_worst < 1e-9 {
            passed += 1;
        }
    }
    outcome(
        passed == 10,
        format!("{passed}/10 trials below 1e-9; worst relative error {worst:.2e}"),
    )
}

fn gaussian_matrix(rng: &mut SimRng, r: usize, c: usize) -> DMatrix<C64> {
    DMatrix::from_fn(r, c, |_, _| complex_gaussian(rng, 1.0))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn rel_mat(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn steering_loop(arg: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| C64::from_polar(1.0 / (n as f64).sqrt(), arg * i as f64))
        .collect()
}

// Explicit index loops are the point of a brute-force oracle.
#[allow(clippy::needless_range_loop)]
fn c6_numerical_oracles() -> Outcome {
    let mut worst = [0.0f64; 4];
    for t in 0..100u64 {
        let mut rng = trial_rng(13, t, 0);
        let dims = [
            rng.random_range(1..6usize),
            rng.random_range(1..6usize),
            rng.random_range(1..5usize),
        ];
        let tensor = ComplexTensor3::from_fn(dims, |_, _, _| complex_gaussian(&mut rng, 1.0));
        let rows = rng.random_range(1..7usize);
        let a = gaussian_matrix(&mut rng, rows, dims[0]);

        // Mode-1 contraction.
        let fast = contract_mode1(&a, &tensor).unwrap();
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..rows {
            for q in 0..dims[1] {
                for k in 0..dims[2] {
                    let mut s = C64::new(0.0, 0.0);
                    for g in 0..dims[0] {
                        s += a[(i, g)] * tensor.get(g, q, k);
                    }
                    err += (fast.get(i, q, k) - s).norm_sqr();
                    norm += s.norm_sqr();
                }
            }
        }
        worst[0] = worst[0].max((err / norm).sqrt());

        // Slice-ℓ1 scores.
        let scores = slice_l1_energies(&tensor);
        for (g, s) in scores.iter().enumerate() {
            let mut l1 = 0.0;
            for q in 0..dims[1] {
                for k in 0..dims[2] {
                    let z = tensor.get(g, q, k);
                    l1 += (z.re * z.re + z.im * z.im).sqrt();
                }
            }
            worst[1] = worst[1].max(rel(*s, l1 * l1));
        }

        // Channel synthesis: F, h and G = diag(h^H) F against explicit sums.
        let l = rng.random_range(1..9usize);
        let j = rng.random_range(1..6usize);
        let pf = rng.random_range(1..4usize);
        let ph = rng.random_range(1..4usize);
        let fp = sample_paths(pf, 0.5, None, &mut rng);
        let hp = sample_paths(ph, 0.5, None, &mut rng);
        let f = gen_bs_ris_channel(&fp, l, j).unwrap();
        let h = gen_ris_user_channel(&hp, l).unwrap();
        let g = cascaded_channel(&h, &f).unwrap();
        let mut f_loop = DMatrix::<C64>::zeros(l, j);
        for p in 0..pf {
            let ar = steering_loop(fp.aoa_args()[p], l);
            let at = steering_loop(fp.aod_args()[p], j);
            for r in 0..l {
                for c in 0..j {
                    f_loop[(r, c)] += ((l * j) as f64 / pf as f64).sqrt() * fp.gains()[p] * ar[r] * at[c].conj();
                }
            }
        }
        let mut h_loop = DMatrix::<C64>::zeros(l, 1);
        for b in 0..ph {
            let a = steering_loop(hp.aod_args()[b], l);
            for r in 0..l {
                h_loop[(r, 0)] += (l as f64 / ph as f64).sqrt() * hp.gains()[b] * a[r];
            }
        }
        let g_loop = DMatrix::from_fn(l, j, |r, c| h_loop[(r, 0)].conj() * f_loop[(r, c)]);
        worst[2] = worst[2]
            .max(rel_mat(&f.entries, &f_loop))
            .max(rel_mat(&h.entries, &h_loop))
            .max(rel_mat(&g.entries, &g_loop));

        // Received sub-frame and despreading.
        let users = rng.random_range(1..4usize);
        let symbols = users + rng.random_range(0..3usize);
        let num_ris = rng.random_range(1..3usize);
        let fs: Vec<_> = (0..num_ris)
            .map(|_| gen_bs_ris_channel(&sample_paths(pf, 0.5, None, &mut rng), l, j).unwrap())
            .collect();
        let hs: Vec<Vec<_>> = (0..num_ris)
            .map(|_| {
                (0..users)
                    .map(|_| gen_ris_user_channel(&sample_paths(ph, 0.5, None, &mut rng), l).unwrap())
                    .collect()
            })
            .collect();
        let channels = Channels::new(vec![fs], hs).unwrap();
        let refl: Vec<DVector<C64>> = (0..num_ris)
            .map(|_| DVector::from_fn(l, |_, _| complex_gaussian(&mut rng, 1.0)))
            .collect();
        let pilots = make_pilots(users, symbols, 2.0).unwrap();
        let y = synthesize_subframe(&channels, 0, &refl, &pilots, 0.0, &mut rng).unwrap();
        let mut y_loop = DMatrix::<C64>::zeros(j, symbols);
        for k in 0..users {
            for n in 0..num_ris {
                for jj in 0..j {
                    let mut s = C64::new(0.0, 0.0);
                    for ll in 0..l {
                        s +=
                            channels.f[0][n].entries[(ll, jj)].conj() * refl[n][ll] * channels.h[n][k].entries[(ll, 0)];
                    }
                    for tt in 0..symbols {
                        y_loop[(jj, tt)] += s * pilots.sequences[(k, tt)];
                    }
                }
            }
        }
        worst[3] = worst[3].max(rel_mat(&y, &y_loop));
        for k in 0..users {
            let d = despread(&y, &pilots, k).unwrap();
            let d_loop = DMatrix::from_fn(j, 1, |jj, _| {
                let mut s = C64::new(0.0, 0.0);
                for tt in 0..symbols {
                    s += y_loop[(jj, tt)] * pilots.sequences[(k, tt)].conj();
                }
                s / (pilots.power * symbols as f64)
            });
            worst[3] = worst[3].max(rel_mat(&DMatrix::from_column_slice(j, 1, d.as_slice()), &d_loop));
        }
    }
    outcome(
        worst.iter().all(|&w| w < 1e-12),
        format!(
            "worst relative errors over 100 instances: contraction {:.1e}, slice-l1 {:.1e}, synthesis {:.1e}, despreading {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c7_degeneracy() -> Outcome {
    let mut omp_ok = 0;
    let mut coop_ok = 0;
    for t in 0..50u64 {
        let mut rng = trial_rng(17, t, 0);
        let m = rng.random_range(6..20usize);
        let n = rng.random_range(m..3 * m);
        let dict = gaussian_matrix(&mut rng, m, n);
        let x: Vec<usize> = (0..3).map(|_| rng.random_range(0..n)).collect();
        let mut y = DVector::from_fn(m, |_, _| complex_gaussian(&mut rng, 0.01));
        for &i in &x {
            y += dict.column(i) * complex_gaussian(&mut rng, 1.0);
        }
        let cfg = GreedyConfig::new(4).with_tol(0.05);
        let a = omp(&y, &dict, &cfg).unwrap();
        let b = laomp(&y, &dict, &cfg.with_look_ahead(1)).unwrap();
        if a == b {
            omp_ok += 1;
        }

        let j = rng.random_range(2..8usize);
        let l = rng.random_range(4..16usize);
        let dict_r = build_dictionary(l, 2 * l).unwrap();
        let f = gen_bs_ris_channel(&sample_paths(2, 0.5, None, &mut rng), l, j).unwrap();
        let q = rng.random_range(1..4usize);
        let refl = gaussian_matrix(&mut rng, l, q);
        let sensing = build_twotimescale_sensing(&[&f], &refl, &dict_r).unwrap();
        let y = DVector::from_fn(sensing.stacked.nrows(), |_, _| complex_gaussian(&mut rng, 1.0));
        let cfg = GreedyConfig::new(2).with_look_ahead(3).with_tol(0.1);
        let ind = twotimescale_individual(&y, &sensing.composite[0], &dict_r, &cfg).unwrap();
        let coop = twotimescale_cooperative(&y, &sensing.stacked, &dict_r, &cfg).unwrap();
        if ind == coop && sensing.stacked == sensing.composite[0] {
            coop_ok += 1;
        }
    }
    outcome(
        omp_ok == 50 && coop_ok == 50,
        format!("laomp(U=1) == omp on {omp_ok}/50; cooperative(N_B=1) == individual on {coop_ok}/50"),
    )
}

fn c8_monotonicity() -> Outcome {
    let mut spec = Preset::Fig4.spec();
    spec.methods = vec![Method::Mlaomp3d];
    spec.timing = false;
    let rows = run(&spec);
    let mut ok = true;
    let mut parts = Vec::new();
    for w in spec.sweep_values.windows(2) {
        let a = row(&rows, Method::Mlaomp3d, w[0]);
        let b = row(&rows, Method::Mlaomp3d, w[1]);
        ok &= b.nmse_linear <= a.nmse_linear + a.stderr.max(b.stderr);
        parts.push(format!("{:.2}", a.nmse_db));
    }
    let last = row(&rows, Method::Mlaomp3d, *spec.sweep_values.last().unwrap());
    parts.push(format!("{:.2}", last.nmse_db));
    outcome(
        ok,
        format!("NMSE dB along {:?}: {}", spec.sweep_values, parts.join(", ")),
    )
}
