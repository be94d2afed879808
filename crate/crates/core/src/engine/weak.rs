//! Lowest-order coupling: sideband operator l̂(t), mechanical-noise correction Δn_P
//! and its share R_m of the photon number.

use core::f64::consts::FRAC_1_SQRT_2;
#[allow(unused_imports)]
use num_traits::Float;

use crate::correlators::{d1, gamma_corr};
use crate::gaussian::{second_moment, GaussianState, LinearForm};
use crate::params::{build_grid, SystemParams};
use crate::quad::{cis, trap_weight};
use crate::{Error, Result, C64};

/// l̂(t) = c(t)·(i x̂_m + p̂_m)/√2 with c(t) the drive prefactor times the sideband sum.
#[derive(Debug, Clone)]
pub struct WeakCoupling {
    pub coefficient: C64,
    pub form: LinearForm,
    n_th: f64,
}

impl WeakCoupling {
    /// ⟨l̂⟩ over the thermal state: zero for a zero-mean Gaussian.
    pub fn mean(&self) -> C64 {
        C64::new(0.0, 0.0)
    }

    /// ⟨l̂†l̂⟩.
    pub fn number(&self) -> f64 {
        let st = GaussianState::mechanical_only(self.n_th);
        second_moment(&self.form.hermitian_conjugate(), &self.form, &st).expect("noise-free forms").re
    }

    /// ⟨l̂l̂⟩.
    pub fn pair(&self) -> C64 {
        let st = GaussianState::mechanical_only(self.n_th);
        second_moment(&self.form, &self.form, &st).expect("noise-free forms")
    }
}

/// The sideband sum e^{i(Δ₀+ω_m)t}/(i(Δ₀+ω_m)+Γ) + e^{i(Δ₀−ω_m)t}/(i(Δ₀−ω_m)+Γ), Γ = (κ+γ_m)/2.
pub fn sideband_sum(p: &SystemParams, t: f64) -> C64 {
    let gam = 0.5 * (p.kappa + p.gamma_m);
    let plus = p.delta0 + p.omega_m;
    let minus = p.delta0 - p.omega_m;
    cis(plus * t) / C64::new(gam, plus) + cis(minus * t) / C64::new(gam, minus)
}

/// Weak-coupling operator l̂(t) with its thermal moments.
pub fn weak_coupling_amplitude(p: &SystemParams, t: f64) -> WeakCoupling {
    let pre = C64::new(p.g * p.drive_e, 0.0) / C64::new(0.5 * p.kappa, p.delta0);
    let c = pre * sideband_sum(p, t);
    let form = LinearForm::zero(0)
        .with_x(c * C64::new(0.0, FRAC_1_SQRT_2))
        .with_p(c * FRAC_1_SQRT_2);
    WeakCoupling { coefficient: c, form, n_th: p.n_th }
}

/// Δn_P: lowest-order photon-number change from the colored mechanical noise.
///
/// The T = 0 kernel is weighted by (2n_th + 1) at finite temperature.
pub fn delta_np(p: &SystemParams, t: f64, resolution: f64) -> Result<f64> {
    if p.g == 0.0 || p.drive_e == 0.0 {
        return Ok(0.0);
    }
    let grid = build_grid(p.kappa, t, resolution)?;
    let n = grid.len();
    let dt = grid.dt;
    // f(τ) = w e^{−κ(t−τ)/2} e^{iω τ} e^{iΔ₀τ}; cos ω(τ₁−τ₂) splits into two rank-one parts
    let mut fp = alloc::vec::Vec::with_capacity(n);
    let mut fm = alloc::vec::Vec::with_capacity(n);
    for k in 0..n {
        let tau = grid.nodes[k];
        let w = trap_weight(k, 0, n - 1, dt) * (-0.5 * p.kappa * (t - tau)).exp();
        fp.push(cis((p.delta0 + p.omega_m) * tau) * w);
        fm.push(cis((p.delta0 - p.omega_m) * tau) * w);
    }
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..n {
        let mut row = C64::new(0.0, 0.0);
        for b in 0..n {
            let gm = gamma_corr(grid.nodes[a], grid.nodes[b], t, p.gamma_m);
            row += (fp[b].conj() * fp[a] + fm[b].conj() * fm[a]) * gm;
        }
        acc += row;
    }
    let pre = (p.g * p.drive_e).powi(2) / (0.25 * p.kappa * p.kappa + p.delta0 * p.delta0);
    let v = 0.5 * pre * acc.re * (2.0 * p.n_th + 1.0);
    if !v.is_finite() {
        return Err(Error::NonFinite("delta n_P"));
    }
    Ok(v)
}

/// R_m = Δn_P / (|D₁|² + ⟨l̂†l̂⟩ + Δn_P).
pub fn noise_ratio_rm(p: &SystemParams, t: f64, resolution: f64) -> Result<f64> {
    let dn = delta_np(p, t, resolution)?;
    let base = d1(t, t, p).norm_sqr();
    let l = weak_coupling_amplitude(p, t).number();
    let den = base + l + dn;
    if den < 1e-30 {
        return Err(Error::Domain("R_m denominator vanishes".into()));
    }
    Ok(dn / den)
}
