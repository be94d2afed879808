//! Quadrature helpers shared by the kernel and engine code.
//!
//! All integrals use the trapezoid rule on a uniform grid. Double integrals whose
//! kernel is a sum of one-sided exponentials are contracted in O(N) with forward and
//! backward recursions instead of O(N²) direct sums.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

/// Trapezoid weight of node `k` on the sub-range `lo..=hi` with step `dt`.
#[inline]
pub fn trap_weight(k: usize, lo: usize, hi: usize, dt: f64) -> f64 {
    if k < lo || k > hi || lo == hi {
        0.0
    } else if k == lo || k == hi {
        0.5 * dt
    } else {
        dt
    }
}

/// Trapezoid integral of uniformly spaced samples.
pub fn trapezoid<T>(f: &[T], dt: f64) -> T
where
    T: Copy + core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T> + Default,
{
    if f.len() < 2 {
        return T::default();
    }
    let mut acc = T::default();
    for w in f.windows(2) {
        acc = acc + (w[0] + w[1]) * (0.5 * dt);
    }
    acc
}

/// Running trapezoid integral: `out[k] = ∫₀^{τ_k} f`.
pub fn cumulative_trapezoid(f: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for k in 1..f.len() {
        out[k] = out[k - 1] + 0.5 * dt * (f[k - 1] + f[k]);
    }
    out
}

/// Kernel `k(u_a, u_b)` that is a sum of exponentials in the index distance.
///
/// For `b ≥ a` the kernel is `Σ c·ρ^{b−a}` over `upper`; for `b < a` it is
/// `Σ c·ρ^{a−b}` over `lower`. Ratios must satisfy |ρ| ≤ 1.
#[derive(Debug, Clone)]
pub struct ExpKernel {
    pub upper: Vec<(C64, C64)>,
    pub lower: Vec<(C64, C64)>,
}

impl ExpKernel {
    /// Value at index distance `d = b − a`.
    pub fn at(&self, d: i64) -> C64 {
        let terms = if d >= 0 { &self.upper } else { &self.lower };
        let n = d.unsigned_abs() as i32;
        terms.iter().map(|&(c, r)| c * r.powi(n)).sum()
    }

    /// `Σ_a Σ_b x_a y_b k(a, b)` in O(len · terms).
    pub fn bilinear(&self, x: &[C64], y: &[C64]) -> C64 {
        let n = x.len().min(y.len());
        if n == 0 {
            return C64::new(0.0, 0.0);
        }
        let mut total = C64::new(0.0, 0.0);
        // b ≥ a: backward accumulation R(a) = y_a + ρ R(a+1)
        for &(c, r) in &self.upper {
            let mut acc = C64::new(0.0, 0.0);
            let mut part = C64::new(0.0, 0.0);
            for a in (0..n).rev() {
                acc = y[a] + r * acc;
                part += x[a] * acc;
            }
            total += c * part;
        }
        // b < a: forward accumulation L(a) = ρ (L(a−1) + y_{a−1})
        for &(c, r) in &self.lower {
            let mut acc = C64::new(0.0, 0.0);
            let mut part = C64::new(0.0, 0.0);
            for a in 1..n {
                acc = r * (acc + y[a - 1]);
                part += x[a] * acc;
            }
            total += c * part;
        }
        total
    }
}

/// Coefficients of `exp(q₀ + q₁λ + q₂λ²)` up to `λ^k`.
pub fn exp_series(q0: C64, q1: C64, q2: C64, k: usize) -> Vec<C64> {
    let mut h = vec![C64::new(0.0, 0.0); k + 1];
    h[0] = q0.exp();
    for n in 1..=k {
        let mut acc = q1 * h[n - 1];
        if n >= 2 {
            acc += 2.0 * q2 * h[n - 2];
        }
        h[n] = acc / n as f64;
    }
    h
}

/// Bivariate exponential `exp(P(λ, μ))` truncated to degree `k` in each variable.
///
/// `p = [p00, p10, p01, p11, p20, p02]` are the coefficients of
/// `1, λ, μ, λμ, λ², μ²`. Output is row-major `h[n·(k+1) + m]` for `λⁿμᵐ`.
pub fn exp_series2(p: &[C64; 6], k: usize, h: &mut [C64]) {
    let w = k + 1;
    debug_assert!(h.len() >= w * w);
    let [p00, p10, p01, p11, p20, p02] = *p;
    h[0] = p00.exp();
    for m in 1..w {
        let mut acc = p01 * h[m - 1];
        if m >= 2 {
            acc += 2.0 * p02 * h[m - 2];
        }
        h[m] = acc / m as f64;
    }
    for n in 1..w {
        let inv = 1.0 / n as f64;
        for m in 0..w {
            // ∂_λ h = (p10 + p11 μ + 2 p20 λ) h
            let mut acc = p10 * h[(n - 1) * w + m];
            if m >= 1 {
                acc += p11 * h[(n - 1) * w + m - 1];
            }
            if n >= 2 {
                acc += 2.0 * p20 * h[(n - 2) * w + m];
            }
            h[n * w + m] = acc * inv;
        }
    }
}

/// Uniform nodes `k·dt` with the last node pinned to `t_end`.
pub fn uniform_nodes(t_end: f64, n_steps: usize) -> Vec<f64> {
    let dt = t_end / n_steps as f64;
    (0..=n_steps)
        .map(|k| if k == n_steps { t_end } else { k as f64 * dt })
        .collect()
}

#[inline]
pub(crate) fn cis(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}
