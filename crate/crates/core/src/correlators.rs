//! Scalar kernels of the decomposed evolution and their grid caches.
//!
//! Every kernel depends on the final time `t` through factors like e^{−κ(t−τ)};
//! a [`KernelCache`] is built for one `t` and never reused for another.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::params::{SystemParams, TimeGrid};
use crate::quad::cis;
use crate::{Error, Result, C64};

/// Largest node count for which the dense Γ matrices are materialised.
pub const MAX_DENSE_NODES: usize = 8193;

/// Pure-drive displacement D₁(τ) for final time t.
pub fn d1(tau: f64, t: f64, p: &SystemParams) -> C64 {
    let z = C64::new(0.5 * p.kappa, p.delta0);
    let head = cis(p.delta0 * tau) * (-0.5 * p.kappa * (t - tau)).exp();
    (head - (-0.5 * p.kappa * t).exp()) * p.drive_e / z
}

/// Colored-noise correlation Γ(τ, τ′) = e^{−γ|τ−τ′|/2} − e^{−γ(t−τ)/2}e^{−γ(t−τ′)/2}.
pub fn gamma_corr(tau: f64, tau2: f64, t: f64, rate: f64) -> f64 {
    (-0.5 * rate * (tau - tau2).abs()).exp()
        - (-0.5 * rate * (t - tau)).exp() * (-0.5 * rate * (t - tau2)).exp()
}

/// Cavity-noise displacement D₂(τ_i) = E∫₀^{τ_i} e^{iΔ₀s} Γ_c(s, τ_i) ds by trapezoid.
///
/// `gamma_c_row[k]` must hold Γ_c(τ_k, τ_i) for k = 0..=i.
pub fn d2(grid: &TimeGrid, i: usize, p: &SystemParams, gamma_c_row: &[f64]) -> C64 {
    if i == 0 || p.drive_e == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let dt = grid.dt;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..=i {
        let w = if k == 0 || k == i { 0.5 * dt } else { dt };
        acc += cis(p.delta0 * grid.nodes[k]) * (w * gamma_c_row[k]);
    }
    acc * p.drive_e
}

/// Commutator kernel m(τᵢ, τⱼ) = 2e^{−γ_m|τᵢ−τⱼ|/2} sin ω_m(τⱼ − τᵢ).
pub fn m_corr(tau_i: f64, tau_j: f64, p: &SystemParams) -> f64 {
    2.0 * (-0.5 * p.gamma_m * (tau_i - tau_j).abs()).exp() * (p.omega_m * (tau_j - tau_i)).sin()
}

/// Nested trapezoid of `2∫ du w(u) sin(ω_m u) ∫^u dv w(v) e^{−γ_m(u−v)/2} cos(ω_m v)`
/// over nodes `u_0..u_n`; returns the running value at every node.
fn nested_phase(nodes: &[f64], dt: f64, weight: impl Fn(f64) -> f64, p: &SystemParams) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let rho = (-0.5 * p.gamma_m * dt).exp();
    let f = |v: f64| weight(v) * (p.omega_m * v).cos();
    let mut f_prev = f(nodes[0]);
    let mut inner = 0.0;
    let mut h_prev = 0.0;
    for k in 1..n {
        let f_k = f(nodes[k]);
        inner = rho * inner + 0.5 * dt * (rho * f_prev + f_k);
        let h_k = 2.0 * weight(nodes[k]) * (p.omega_m * nodes[k]).sin() * inner;
        out[k] = out[k - 1] + 0.5 * dt * (h_prev + h_k);
        f_prev = f_k;
        h_prev = h_k;
    }
    out
}

/// Θ(τ) at final time t, nested trapezoid with `steps` intervals on [0, τ].
pub fn theta(tau: f64, t: f64, p: &SystemParams, steps: usize) -> f64 {
    if tau <= 0.0 || steps == 0 {
        return 0.0;
    }
    let nodes = crate::quad::uniform_nodes(tau, steps);
    let w = |u: f64| (-p.kappa * (t - u)).exp();
    *nested_phase(&nodes, tau / steps as f64, w, p).last().unwrap()
}

/// Θ′(τ) at final time t, nested trapezoid with `steps` intervals on [τ, t].
pub fn theta_prime(tau: f64, t: f64, p: &SystemParams, steps: usize) -> f64 {
    if tau >= t || steps == 0 {
        return 0.0;
    }
    let dt = (t - tau) / steps as f64;
    let nodes: Vec<f64> =
        (0..=steps).map(|k| if k == steps { t } else { tau + k as f64 * dt }).collect();
    let w = |u: f64| gamma_corr(u, tau, t, p.kappa);
    *nested_phase(&nodes, dt, w, p).last().unwrap()
}

/// Θ(τ_k) at every node, for final time `grid.t_end`, in O(N).
pub fn theta_series(grid: &TimeGrid, p: &SystemParams) -> Vec<f64> {
    let t = grid.t_end;
    nested_phase(&grid.nodes, grid.dt, |u| (-p.kappa * (t - u)).exp(), p)
}

/// Θ′(τ_k) at every node, for final time `grid.t_end`, in O(N²).
pub fn theta_prime_series(grid: &TimeGrid, p: &SystemParams) -> Vec<f64> {
    let t = grid.t_end;
    let n = grid.len();
    (0..n)
        .map(|i| {
            let tau = grid.nodes[i];
            let w = |u: f64| gamma_corr(u, tau, t, p.kappa);
            *nested_phase(&grid.nodes[i..], grid.dt, w, p).last().unwrap()
        })
        .collect()
}

/// Dense symmetric real matrix, full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub const fn empty() -> Self {
        SymMatrix { n: 0, data: Vec::new() }
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// All grid kernels for one scenario and one final time `grid.t_end`.
#[derive(Debug, Clone)]
pub struct KernelCache {
    pub grid: TimeGrid,
    pub params: SystemParams,
    pub d1: Vec<C64>,
    pub d2: Vec<C64>,
    pub gamma_c: SymMatrix,
    pub gamma_m: SymMatrix,
    pub theta: Vec<f64>,
    pub theta_prime: Vec<f64>,
}

impl KernelCache {
    pub fn build(params: &SystemParams, grid: &TimeGrid) -> Result<Self> {
        let n = grid.len();
        if n > MAX_DENSE_NODES {
            return Err(Error::MemoryCap { requested: n, cap: MAX_DENSE_NODES });
        }
        Self::with_phases(params, grid, theta_series(grid, params), theta_prime_series(grid, params))
    }

    /// Like [`KernelCache::build`] with Θ, Θ′ supplied, e.g. from a disk cache.
    ///
    /// The phases depend on κ, γ_m, ω_m and the grid only.
    pub fn with_phases(params: &SystemParams, grid: &TimeGrid, theta: Vec<f64>, theta_prime: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n > MAX_DENSE_NODES {
            return Err(Error::MemoryCap { requested: n, cap: MAX_DENSE_NODES });
        }
        if theta.len() != n || theta_prime.len() != n {
            return Err(Error::GridMismatch { left: n, right: theta.len().min(theta_prime.len()) });
        }
        let t = grid.t_end;
        let nodes = &grid.nodes;
        let gamma_c = SymMatrix::from_fn(n, |i, j| gamma_corr(nodes[i], nodes[j], t, params.kappa));
        let gamma_m =
            SymMatrix::from_fn(n, |i, j| gamma_corr(nodes[i], nodes[j], t, params.gamma_m));
        let mut cache = KernelCache {
            grid: grid.clone(),
            params: *params,
            d1: Vec::new(),
            d2: Vec::new(),
            gamma_c,
            gamma_m,
            theta,
            theta_prime,
        };
        cache.set_drive(params.delta0, params.drive_e);
        Ok(cache)
    }

    /// Recompute only the Δ₀- and E-dependent series, keeping Γ, Θ, Θ′.
    pub fn set_drive(&mut self, delta0: f64, drive_e: f64) {
        self.params.delta0 = delta0;
        self.params.drive_e = drive_e;
        let t = self.grid.t_end;
        let p = self.params;
        self.d1 = self.grid.nodes.iter().map(|&tau| d1(tau, t, &p)).collect();
        self.d2 = (0..self.grid.len())
            .map(|i| d2(&self.grid, i, &p, self.gamma_c.row(i)))
            .collect();
    }

    /// D₁ at the final time.
    pub fn d1_end(&self) -> C64 {
        *self.d1.last().unwrap()
    }

    pub fn t(&self) -> f64 {
        self.grid.t_end
    }
}
