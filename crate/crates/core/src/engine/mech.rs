//! Mechanical quadrature averages.
//!
//! The integrand carries |e^{−κ(t−τ)/2}D₁(τ) + D₂(τ)|². That combination equals the
//! pure-drive amplitude α(τ) = E∫₀^τ e^{iΔ₀s}e^{−κ(τ−s)/2}ds, independent of the final
//! time, so the whole X_m(t), P_m(t) history is a single O(N) running integral.

use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
#[allow(unused_imports)]
use num_traits::Float;

use crate::correlators::{d1, KernelCache};
use crate::params::{SystemParams, TimeGrid};
use crate::quad::trap_weight;
use crate::Result;

/// α(τ) = D₁(τ) evaluated with final time τ.
fn alpha_sq(tau: f64, p: &SystemParams) -> f64 {
    d1(tau, tau, p).norm_sqr()
}

/// (X_m, P_m) at every grid node.
pub fn mechanical_series(p: &SystemParams, grid: &TimeGrid) -> Vec<(f64, f64)> {
    let dt = grid.dt;
    let rho = (-0.5 * p.gamma_m * dt).exp();
    let f = |tau: f64| {
        let a = alpha_sq(tau, p);
        ((p.omega_m * tau).sin() * a, (p.omega_m * tau).cos() * a)
    };
    let mut out = Vec::with_capacity(grid.len());
    let (mut ix, mut ip) = (0.0, 0.0);
    let mut prev = f(grid.nodes[0]);
    out.push((0.0, 0.0));
    for &tau in &grid.nodes[1..] {
        let cur = f(tau);
        ix = rho * ix + 0.5 * dt * (rho * prev.0 + cur.0);
        ip = rho * ip + 0.5 * dt * (rho * prev.1 + cur.1);
        out.push((-SQRT_2 * p.g * ix, SQRT_2 * p.g * ip));
        prev = cur;
    }
    out
}

/// (X_m, P_m) at time t, trapezoid with κ·dt ≤ `resolution`.
pub fn mechanical_quadratures(p: &SystemParams, t: f64, resolution: f64) -> Result<(f64, f64)> {
    let grid = crate::params::build_grid(p.kappa, t, resolution)?;
    Ok(*mechanical_series(p, &grid).last().unwrap())
}

/// The same average built literally from the cached D₁, D₂ (quadrature D₂).
pub fn mechanical_quadratures_cached(c: &KernelCache) -> (f64, f64) {
    let p = &c.params;
    let t = c.t();
    let n = c.grid.len();
    let (mut x, mut y) = (0.0, 0.0);
    for i in 0..n {
        let tau = c.grid.nodes[i];
        let gdet = c.d1[i] * (-0.5 * p.kappa * (t - tau)).exp() + c.d2[i];
        let w = trap_weight(i, 0, n - 1, c.grid.dt) * (-0.5 * p.gamma_m * (t - tau)).exp() * gdet.norm_sqr();
        x += w * (p.omega_m * tau).sin();
        y += w * (p.omega_m * tau).cos();
    }
    (-SQRT_2 * p.g * x, SQRT_2 * p.g * y)
}
