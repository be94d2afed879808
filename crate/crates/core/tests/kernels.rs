use std::f64::consts::LN_2;

use omx_core::correlators::{d1, d2, gamma_corr, m_corr, theta, theta_prime, KernelCache};
use omx_core::params::{build_grid, derive_nth, SystemParams, TemperatureMode, TimeGrid};
use omx_core::C64;
use proptest::prelude::*;

fn fig2() -> SystemParams {
    SystemParams::from_ratios(0.1, 1.0, 100.0, 0.0, 0.01, TemperatureMode::Occupation(0.0)).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn nth_at_log_two_temperature() {
    assert!((derive_nth(1.0, 1.0 / LN_2).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(derive_nth(1.0, 0.0).unwrap(), 0.0);
    assert!(derive_nth(1.0, 1e9).is_err());
    assert!(derive_nth(0.0, 1.0).is_err());
}

#[test]
fn grid_examples() {
    assert_eq!(build_grid(1.0, 10.0, 0.02).unwrap().n_steps, 500);
    assert_eq!(build_grid(1.0, 40.0, 0.02).unwrap().n_steps, 2000);
    assert!(build_grid(1.0, 10.0, 1e-9).is_err());
    let g = build_grid(1.0, 7.3, 0.02).unwrap();
    assert_eq!(g.nodes[0], 0.0);
    assert_eq!(*g.nodes.last().unwrap(), 7.3);
    assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
    assert!(g.dt <= 0.02);
}

#[test]
fn gamma_matches_its_defining_integral() {
    // Γ(τ,τ′) = γ∫_{max(τ,τ′)}^t e^{−γ(s−τ)/2}e^{−γ(s−τ′)/2} ds
    for &(a, b, t, rate) in &[(0.0, 1.0, 2.0, 1.0), (0.3, 2.9, 4.0, 0.7), (1.5, 1.5, 3.0, 2.0)] {
        let lo = f64::max(a, b);
        let v = rate * simpson(|s| (-0.5 * rate * (s - a)).exp() * (-0.5 * rate * (s - b)).exp(), lo, t, 2000);
        assert!((v - gamma_corr(a, b, t, rate)).abs() < 1e-8);
    }
}

#[test]
fn d1_end_value() {
    let p = fig2();
    let v = d1(10.0, 10.0, &p);
    assert!((v.re - 0.019865).abs() < 1e-6);
    assert!((d1(300.0, 300.0, &p) - C64::new(0.02, 0.0)).norm() < 1e-12);
}

/// α(τ) = E∫₀^τ e^{iΔ₀s}e^{−κ(τ−s)/2}ds, i.e. D₁ evaluated with final time τ.
#[test]
fn drive_identity_on_grid() {
    let p = fig2().with_delta0(0.6);
    let grid = build_grid(1.0, 10.0, 0.02).unwrap();
    let c = KernelCache::build(&p, &grid).unwrap();
    for i in (0..grid.len()).step_by(37) {
        let tau = grid.nodes[i];
        let lhs = c.d1[i] * (-0.5 * (10.0 - tau)).exp() + c.d2[i];
        let rhs = d1(tau, tau, &p);
        assert!((lhs - rhs).norm() < 5e-5 * p.drive_e, "node {i}: {lhs} vs {rhs}");
    }
}

/// Richardson value from grids of `n` and `2n` intervals.
fn richardson(q: impl Fn(usize) -> f64, n: usize) -> f64 {
    (4.0 * q(2 * n) - q(n)) / 3.0
}

fn assert_extrapolation_stable(q: impl Fn(usize) -> f64, what: &str) {
    let (r1, r2) = (richardson(&q, 500), richardson(&q, 1000));
    assert!((r1 - r2).abs() <= 1e-6 * r2.abs().max(1e-12), "{what}: {r1} vs {r2}");
    // plain trapezoid is second order
    let e1 = (q(500) - r2).abs();
    let e2 = (q(1000) - r2).abs();
    assert!(e2 < 0.3 * e1 || e1 < 1e-14, "{what}: {e1} {e2}");
}

fn d2_at(p: &SystemParams, tau: f64, steps: usize) -> C64 {
    let g = TimeGrid::with_steps(10.0, steps).unwrap();
    let r: Vec<f64> = g.nodes.iter().map(|&u| gamma_corr(u, tau, 10.0, p.kappa)).collect();
    d2(&g, (tau / 10.0 * steps as f64).round() as usize, p, &r)
}

#[test]
fn d2_grid_refinement() {
    let p = fig2();
    // Γ_c(s, t) vanishes identically
    assert_eq!(d2_at(&p, 10.0, 500), C64::new(0.0, 0.0));
    assert_extrapolation_stable(|s| d2_at(&p, 5.0, s).re, "D2 mid");
    let q = fig2().with_delta0(0.7);
    assert_extrapolation_stable(|s| d2_at(&q, 5.0, s).im, "D2 detuned");
    assert_eq!(d2(&TimeGrid::with_steps(1.0, 10).unwrap(), 0, &p, &[0.0; 11]), C64::new(0.0, 0.0));
}

#[test]
fn phases_refine() {
    let p = fig2();
    assert_extrapolation_stable(|s| theta(10.0, 10.0, &p, s), "theta");
    assert_extrapolation_stable(|s| theta_prime(0.0, 10.0, &p, s), "theta prime");
    assert_eq!(theta(0.0, 10.0, &p, 100), 0.0);
    assert_eq!(theta_prime(10.0, 10.0, &p, 100), 0.0);
    // Θ carries no g or E
    assert_eq!(theta(4.0, 10.0, &p.with_g(1.7).with_drive(0.3), 200), theta(4.0, 10.0, &p, 200));
}

proptest! {
    #[test]
    fn nth_monotone_in_temperature(w in 0.1f64..5.0, t1 in 0.01f64..50.0, dt in 0.01f64..50.0) {
        let a = derive_nth(w, t1).unwrap();
        let b = derive_nth(w, t1 + dt).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn gamma_diagonal_symmetry_bounds(t in 0.1f64..50.0, fa in 0.0f64..1.0, fb in 0.0f64..1.0, rate in 0.001f64..5.0) {
        let (a, b) = (fa * t, fb * t);
        let diag = gamma_corr(a, a, t, rate) + (-rate * (t - a)).exp();
        prop_assert!((diag - 1.0).abs() < 1e-15);
        prop_assert_eq!(gamma_corr(a, b, t, rate), gamma_corr(b, a, t, rate));
        let v = gamma_corr(a, b, t, rate);
        prop_assert!(v >= -1e-15 && v <= 1.0);
    }

    #[test]
    fn combined_quadrature_commutator(t in 0.1f64..50.0, fa in 0.0f64..1.0, fb in 0.0f64..1.0, rate in 0.001f64..5.0) {
        let (u, v) = (fa * t, fb * t);
        let lhs = 2.0 * ((-0.5 * rate * (t - u) - 0.5 * rate * (t - v)).exp() + gamma_corr(u, v, t, rate));
        prop_assert!((lhs - 2.0 * (-0.5 * rate * (u - v).abs()).exp()).abs() < 1e-14);
    }

    #[test]
    fn m_corr_antisymmetric(a in 0.0f64..20.0, b in 0.0f64..20.0, w in 0.1f64..3.0, q in 5.0f64..500.0) {
        let p = SystemParams::from_ratios(0.5, w, q, 0.0, 0.01, TemperatureMode::Occupation(0.0)).unwrap();
        prop_assert!((m_corr(a, b, &p) + m_corr(b, a, &p)).abs() < 1e-14);
    }
}
