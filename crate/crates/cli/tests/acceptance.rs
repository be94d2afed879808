//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Figure-based criteria go through `cmd_fig`, so they exercise the same presets as `omx fig`.

use std::f64::consts::PI;
use std::time::Instant;

use omx::figures::{cmd_fig, FigCurve, FigOptions};
use omx::job::compare;
use omx::Scenario;
use omx_core::correlators::{d1, gamma_corr, SymMatrix};
use omx_core::engine::{cavity_amplitude, mechanical_quadratures, noise_ratio_rm, photon_number, NoiseMode, SeriesValues};
use omx_core::gaussian::{commutator, second_moment, GaussianState, LinearForm, Noise};
use omx_core::oracle::{build_initial_state, evolve_and_measure, lindblad_step, verify_decompositions, CMatrix, FockDims, MatrixSchedule};
use omx_core::params::{SystemParams, TemperatureMode, TimeGrid, DEFAULT_RESOLUTION};
use omx_core::C64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ratios(g: f64, w: f64, q: f64, d: f64, e: f64) -> SystemParams {
    SystemParams::from_ratios(g, w, q, d, e, TemperatureMode::Occupation(0.0)).unwrap()
}

fn curve<'a>(curves: &'a [FigCurve], name: &str) -> &'a FigCurve {
    curves.iter().find(|c| c.preset.name == name).unwrap_or_else(|| panic!("no curve {name}"))
}

fn col(c: &FigCurve, name: &str) -> Vec<f64> {
    c.table.column(name).unwrap_or_else(|| panic!("{} lacks column {name}", c.preset.name))
}

fn fig(id: u8, dir: &std::path::Path) -> Vec<FigCurve> {
    cmd_fig(id, dir, FigOptions { svg: true, resolution: None }).expect("figure run")
}

fn pure_drive_exactness() -> Outcome {
    let p = ratios(0.0, 1.0, 100.0, 0.0, 0.01);
    let grid = TimeGrid::with_steps(10.0, 500).unwrap();
    let run = evolve_and_measure(&p, FockDims { cav: 6, mech: 2 }, &grid).unwrap();
    let SeriesValues::Complex(amp) = &run.amplitude.values else { unreachable!() };
    let (mut eng, mut orc) = (0.0f64, 0.0f64);
    for k in (25..grid.len()).step_by(25) {
        let t = grid.nodes[k];
        let want = d1(t, t, &p);
        let e = cavity_amplitude(&p, t, NoiseMode::full_default(), DEFAULT_RESOLUTION).unwrap();
        eng = eng.max((e - want).norm() / want.norm());
        orc = orc.max((amp[k] - want).norm() / want.norm()).max((amp[k] - e).norm() / e.norm());
    }
    outcome(eng <= 1e-4 && orc < 1e-4, format!("engine vs D1 {eng:.1e}, oracle vs both {orc:.1e}"))
}

fn weak_coupling() -> Outcome {
    let s = Scenario::new(0.1, 1.0, 100.0, 0.0, 0.01, 10.0);
    let (t, _) = compare(&s, FockDims { cav: 4, mech: 24 }, NoiseMode::full_default(), 21, 5.0).unwrap();
    let times = t.column("kappa_t").unwrap();
    let dev = t.column("Xc_rel_dev").unwrap();
    let worst = times.iter().zip(&dev).filter(|(t, _)| **t >= 5.0).map(|(_, d)| *d).fold(0.0, f64::max);
    outcome(worst < 0.05, format!("max X_c deviation {:.3}% on 5 ≤ κt ≤ 10", 100.0 * worst))
}

fn at_zero(c: &FigCurve, column: &str) -> f64 {
    let x = col(c, "sweep_value");
    let k = x.iter().position(|&v| v == 0.0).expect("Δ₀ = 0 in sweep");
    col(c, column)[k]
}

fn magnification(f5: &[FigCurve]) -> Outcome {
    let right = curve(f5, "fig5_right");
    let full = at_zero(right, "nP_full");
    let pure = at_zero(right, "nP_pure_drive");
    let p = ratios(2.0, 2.0, 100.0, 0.0, 0.01);
    let d1sq = d1(40.0, 40.0, &p).norm_sqr();
    let pass = full > 3.0 * d1sq && (pure - d1sq).abs() < 1e-9 * d1sq;
    outcome(pass, format!("n_P full / |D1|² = {:.3}", full / d1sq))
}

fn noise_smoothing(f5: &[FigCurve]) -> Outcome {
    let right = curve(f5, "fig5_right");
    let x = col(right, "sweep_value");
    let gcz = col(right, "nP_gamma_c_zero");
    let full = col(right, "nP_full");
    let peaks: Vec<usize> =
        (1..x.len() - 1).filter(|&k| gcz[k] > gcz[k - 1] && gcz[k] > gcz[k + 1] && (x[k] - 1.0).abs() <= 0.25).collect();
    match peaks.first() {
        Some(&k) => {
            let reduced = full[k] < gcz[k] && !(full[k] > full[k - 1] && full[k] > full[k + 1]);
            outcome(reduced, format!("gamma_c_zero peak at Δ₀/ω_m = {}, full {:.3e} vs {:.3e}", x[k], full[k], gcz[k]))
        }
        None => {
            let gmax = (1..x.len() - 1).filter(|&k| gcz[k] > gcz[k - 1] && gcz[k] > gcz[k + 1]).map(|k| x[k]).collect::<Vec<_>>();
            outcome(false, format!("no gamma_c_zero local maximum near Δ₀ = ω_m (local maxima at Δ₀/ω_m = {gmax:?})"))
        }
    }
}

fn argmax(c: &FigCurve) -> f64 {
    let x = col(c, "sweep_value");
    let y = col(c, "nP_full");
    let k = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    x[k]
}

fn resonance_shift(dir: &std::path::Path) -> Outcome {
    let start = Instant::now();
    let f7 = fig(7, dir);
    let secs = start.elapsed().as_secs_f64();
    let (bad, good) = (argmax(curve(&f7, "fig7_omega_0.5")), argmax(curve(&f7, "fig7_omega_3")));
    let step = 0.1;
    let pass = bad > 0.0 && good.abs() <= step + 1e-12 && secs < 1800.0;
    outcome(pass, format!("argmax Δ₀/ω_m = {bad} (ω_m/κ = 0.5), {good} (ω_m/κ = 3), {secs:.0} s"))
}

/// Index of the largest DFT magnitude among bins 1..n/2 of the mean-removed samples.
fn dominant_bin(xs: &[f64]) -> usize {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    (1..=n / 2)
        .max_by(|&a, &b| {
            let mag = |k: usize| {
                xs.iter()
                    .enumerate()
                    .map(|(j, x)| C64::from_polar(x - mean, -2.0 * PI * (k * j) as f64 / n as f64))
                    .sum::<C64>()
                    .norm()
            };
            mag(a).total_cmp(&mag(b))
        })
        .unwrap()
}

fn periodicity(dir: &std::path::Path) -> Outcome {
    let f3 = fig(3, dir);
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, d) in [("fig3_delta_0", 0.0), ("fig3_delta_1", 1.0), ("fig3_delta_-1", -1.0)] {
        let c = curve(&f3, name);
        let t = col(c, "kappa_t");
        let v = col(c, "value");
        // [10, 20): a whole number of samples, window length 10
        let w: Vec<f64> = t.iter().zip(&v).filter(|(t, _)| **t >= 10.0 - 1e-9 && **t < 20.0 - 1e-9).map(|(_, v)| *v).collect();
        let span = 10.0;
        let target = 1.0 * span / (2.0 * PI);
        let k = dominant_bin(&w);
        let ok = (k as f64 - target).abs() <= 1.0;
        pass &= ok;
        parts.push(format!("Δ₀/ω_m = {d}: bin {k} vs ω_m at {target:.2}"));
    }
    outcome(pass, parts.join("; "))
}

fn rm_monotone(dir: &std::path::Path) -> Outcome {
    let f1 = fig(1, dir);
    let mut pass = true;
    let mut parts = Vec::new();
    for w in [1.0, 2.0] {
        let rm: Vec<f64> = [10.0, 20.0, 50.0, 100.0, 200.0]
            .iter()
            .map(|&q| noise_ratio_rm(&ratios(0.5, w, q, 0.0, 0.01), 10.0, DEFAULT_RESOLUTION).unwrap())
            .collect();
        let dec = rm.windows(2).all(|p| p[1] < p[0]);
        let bounded = rm.iter().all(|&r| r > 0.0 && r < 1.0);
        let preset = col(curve(&f1, &format!("fig1_omega_{w}")), "Rm");
        let preset_dec = preset.windows(2).all(|p| p[1] < p[0]);
        pass &= dec && bounded && preset_dec;
        parts.push(format!("ω_m/κ = {w}: R_m {:.2e} → {:.2e}", rm[0], rm[4]));
    }
    outcome(pass, parts.join("; "))
}

/// First time after which every one-period window has amplitude and centre within 5% of the final period's amplitude.
fn settle_time(t: &[f64], x: &[f64], period: f64) -> f64 {
    let dt = t[1] - t[0];
    let m = (period / dt).round() as usize;
    let n = x.len();
    let window = |i: usize| {
        let s = &x[i..i + m];
        let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        ((hi - lo) / 2.0, (hi + lo) / 2.0)
    };
    let (amp_f, mid_f) = window(n - m);
    let mut settled = t[n - m];
    for i in (0..=n - m).rev() {
        let (a, c) = window(i);
        if (a - amp_f).abs() > 0.05 * amp_f || (c - mid_f).abs() > 0.05 * amp_f {
            break;
        }
        settled = t[i];
    }
    settled
}

fn mechanical_transient(dir: &std::path::Path) -> Outcome {
    let f4 = fig(4, dir);
    let settle = |name: &str| {
        let c = curve(&f4, name);
        settle_time(&col(c, "kappa_t"), &col(c, "value"), 2.0 * PI)
    };
    let (fast, slow) = (settle("fig4_Q_10"), settle("fig4_Q_100"));
    outcome(fast < slow, format!("settled at κt ≈ {fast:.0} (Q = 10) vs {slow:.0} (Q = 100)"))
}

fn unit_hermitian(rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = (&a + &a.dagger()).scale(C64::new(0.5, 0.0));
    let n = h.norm();
    h.scale(C64::new(1.0 / n, 0.0))
}

fn decomposition_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let dts = [0.04, 0.02, 0.01];
    let (mut lo, mut hi, mut worst) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..20 {
        let (a, b) = (unit_hermitian(&mut rng), unit_hermitian(&mut rng));
        let w = rng.gen_range(0.5..2.0);
        // ‖H_i(t)‖ ≤ 1, so dt = 0.01 is ‖H‖dt = 0.01
        let s1 = MatrixSchedule::new(4, |t| a.scale(C64::new(0.5 + 0.5 * (w * t).sin(), 0.0)));
        let s2 = MatrixSchedule::new(4, |t| b.scale(C64::new((2.0 * t).cos(), 0.0)));
        let rs: Vec<(f64, f64)> = dts.iter().map(|&dt| verify_decompositions(&s1, &s2, 1.0, dt).unwrap()).collect();
        for pick in [0usize, 1] {
            let r: Vec<f64> = rs.iter().map(|p| if pick == 0 { p.0 } else { p.1 }).collect();
            // least-squares slope of ln r against ln dt
            let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
            let ys: Vec<f64> = r.iter().map(|v| v.ln()).collect();
            let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
            let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
                / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
            lo = lo.min(slope);
            hi = hi.max(slope);
            worst = worst.max(r[2]);
        }
    }
    let pass = lo >= 1.7 && hi <= 2.3 && worst < 1e-6;
    outcome(pass, format!("order in [{lo:.2}, {hi:.2}], max residual {worst:.1e} at ‖H‖dt = 0.01"))
}

fn property(name: &str, cases: u32, f: impl Fn(&mut TestRunner) -> Result<(), String>) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    f(&mut runner).map_err(|e| format!("{name}: {e}"))
}

fn invariant_suites() -> Outcome {
    let mut failures = Vec::new();
    let mut run = |r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(e);
        }
    };

    run(property("Γ diagonal and symmetry", 256, |r| {
        r.run(&(0.1f64..50.0, 0.0f64..1.0, 0.0f64..1.0, 0.001f64..5.0), |(t, fa, fb, rate)| {
            let (a, b) = (fa * t, fb * t);
            prop_assert!((gamma_corr(a, a, t, rate) + (-rate * (t - a)).exp() - 1.0).abs() < 1e-15);
            prop_assert_eq!(gamma_corr(a, b, t, rate), gamma_corr(b, a, t, rate));
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    run(property("Wick commutator consistency", 64, |r| {
        let grid = TimeGrid::with_steps(3.0, 5).unwrap();
        let n = grid.len();
        let gm = SymMatrix::from_fn(n, |i, j| gamma_corr(grid.nodes[i], grid.nodes[j], 3.0, 0.3));
        let gc = SymMatrix::from_fn(n, |i, j| gamma_corr(grid.nodes[i], grid.nodes[j], 3.0, 1.0));
        let coef = prop::collection::vec(-1.0f64..1.0, 4 + 8 * n);
        r.run(&(coef.clone(), coef, 0.0f64..3.0), |(ca, cb, n_th)| {
            let form = |c: &[f64]| {
                let part = |k: usize| (0..n).map(|i| C64::new(c[4 + 2 * (k * n + i)], c[5 + 2 * (k * n + i)]) * 0.1).collect::<Vec<_>>();
                LinearForm::zero(n)
                    .with_x(C64::new(c[0], c[1]))
                    .with_p(C64::new(c[2], c[3]))
                    .with_noise(Noise::Mech, part(0))
                    .and_then(|f| f.with_noise(Noise::MechDag, part(1)))
                    .and_then(|f| f.with_noise(Noise::Cav, part(2)))
                    .and_then(|f| f.with_noise(Noise::CavDag, part(3)))
                    .unwrap()
            };
            let st = GaussianState::new(n_th, &gm, &gc).unwrap();
            let (a, b) = (form(&ca), form(&cb));
            let lhs = second_moment(&a, &b, &st).unwrap() - second_moment(&b, &a, &st).unwrap();
            prop_assert!((lhs - commutator(&a, &b, &st).unwrap()).norm() < 1e-10);
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    run(property("E-scaling", 12, |r| {
        r.run(&(0.0f64..1.0, 0.5f64..2.0, -1.5f64..1.5, 0.001f64..0.05), |(g, w, d, e)| {
            let p = ratios(g, w, 100.0, d, e);
            let q = p.with_drive(2.0 * e);
            let m = NoiseMode::full_default();
            let (a1, a2) = (cavity_amplitude(&p, 3.0, m, 0.05).unwrap(), cavity_amplitude(&q, 3.0, m, 0.05).unwrap());
            prop_assert!((a2 - a1 * 2.0).norm() < 1e-9 * a2.norm());
            let (n1, n2) = (photon_number(&p, 3.0, m, 0.05).unwrap(), photon_number(&q, 3.0, m, 0.05).unwrap());
            prop_assert!((n2 - 4.0 * n1).abs() < 1e-9 * n2);
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    run(property("oracle trace and positivity", 8, |r| {
        r.run(&(0.0f64..1.0, 0.5f64..2.0, -1.0f64..1.0, 0.0f64..0.3, 0.0f64..0.3), |(g, w, d, e, n_th)| {
            let p = SystemParams::from_ratios(g, w, 20.0, d, e, TemperatureMode::Occupation(n_th)).unwrap();
            let mut s = build_initial_state(3, 12, n_th).unwrap();
            for k in 0..20 {
                s = lindblad_step(&s, &p, k as f64 * 0.05, 0.05).unwrap();
                prop_assert!((s.trace() - C64::new(1.0, 0.0)).norm() < 1e-8);
            }
            prop_assert!(s.rho.hermiticity_defect() < 1e-10);
            prop_assert!(s.rho.hermitian_eigenvalues()[0] > -1e-8);
            Ok(())
        })
        .map_err(|e| e.to_string())
    }));

    // grid refinement: halving κ·dt moves each observable by less than 0.5%
    let full = NoiseMode::full_default();
    let checks: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("X_c, g/κ = 1", Box::new(|res| cavity_amplitude(&ratios(1.0, 1.0, 100.0, 0.0, 0.01), 10.0, full, res).unwrap().re)),
        ("n_P, g/κ = 2, Δ₀ = ω_m", Box::new(|res| photon_number(&ratios(2.0, 2.0, 100.0, 1.0, 0.01), 20.0, full, res).unwrap())),
        ("X_m, g/κ = 2", Box::new(|res| mechanical_quadratures(&ratios(2.0, 1.0, 10.0, 1.0, 0.01), 100.0, res).unwrap().0)),
    ];
    for (name, f) in checks {
        let (a, b) = (f(DEFAULT_RESOLUTION), f(DEFAULT_RESOLUTION / 2.0));
        if (a - b).abs() > 0.005 * b.abs() {
            failures.push(format!("grid refinement {name}: {a} vs {b}"));
        }
    }

    let pass = failures.is_empty();
    let detail = if pass {
        "Γ identities, Wick commutators, E-scaling, oracle trace/positivity, grid refinement".into()
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut all = true;
    let mut report = |id: u32, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "criterion {id:>2}: {} {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report(1, &mut pure_drive_exactness);
    report(2, &mut weak_coupling);
    let f5 = fig(5, dir.path());
    report(3, &mut || magnification(&f5));
    report(4, &mut || noise_smoothing(&f5));
    report(5, &mut || resonance_shift(dir.path()));
    report(6, &mut || periodicity(dir.path()));
    report(7, &mut || rm_monotone(dir.path()));
    report(8, &mut || mechanical_transient(dir.path()));
    report(9, &mut decomposition_identities);
    report(10, &mut invariant_suites);
    if !all {
        std::process::exit(1);
    }
}
