//! Time-ordered exponentials T exp{−i∫H(s)ds} as ordered midpoint products, and the
//! two factorisations of a two-term generator into interaction-picture pieces.

use alloc::boxed::Box;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::matrix::CMatrix;
use crate::{Error, Result, C64};

/// Largest ‖H‖·dt accepted per midpoint factor; longer steps are subdivided.
pub const MAX_PHASE_STEP: f64 = 0.05;

/// A time-dependent generator of fixed dimension.
pub struct MatrixSchedule<'a> {
    dim: usize,
    generator: Box<dyn Fn(f64) -> CMatrix + 'a>,
}

impl<'a> MatrixSchedule<'a> {
    pub fn new(dim: usize, generator: impl Fn(f64) -> CMatrix + 'a) -> Self {
        MatrixSchedule { dim, generator: Box::new(generator) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// H(t); panics if the generator changes dimension.
    pub fn at(&self, t: f64) -> CMatrix {
        let h = (self.generator)(t);
        assert_eq!(h.dim(), self.dim, "schedule changed dimension");
        h
    }
}

fn step_propagator(h: &CMatrix, dt: f64) -> CMatrix {
    h.scale(C64::new(0.0, -dt)).expm()
}

/// Ordered product U(t1, t0) = Π exp(−iH(s_k)h), later factors on the left.
///
/// Steps are subdivided so each factor satisfies ‖H‖h ≤ [`MAX_PHASE_STEP`].
pub fn time_ordered_exp(schedule: &MatrixSchedule, t0: f64, t1: f64, dt: f64) -> CMatrix {
    let n = steps(t0, t1, dt);
    let h = (t1 - t0) / n as f64;
    let mut u = CMatrix::identity(schedule.dim());
    for k in 0..n {
        let a = t0 + k as f64 * h;
        let mid = schedule.at(a + 0.5 * h);
        let sub = ((mid.norm_inf() * h / MAX_PHASE_STEP).ceil() as usize).max(1);
        let hs = h / sub as f64;
        for j in 0..sub {
            let hj = if sub == 1 { mid.clone() } else { schedule.at(a + (j as f64 + 0.5) * hs) };
            u = &step_propagator(&hj, hs) * &u;
        }
    }
    u
}

fn steps(t0: f64, t1: f64, dt: f64) -> usize {
    (((t1 - t0) / dt).ceil() as usize).max(1)
}

/// Propagators U(s, t0) at s = t0 + k h/2, k = 0..=2n, from half-step midpoint factors.
fn half_step_path(schedule: &MatrixSchedule, t0: f64, h: f64, n: usize) -> Vec<CMatrix> {
    let q = 0.5 * h;
    let mut out = Vec::with_capacity(2 * n + 1);
    let mut u = CMatrix::identity(schedule.dim());
    out.push(u.clone());
    for k in 0..2 * n {
        let s = t0 + (k as f64 + 0.5) * q;
        u = &step_propagator(&schedule.at(s), q) * &u;
        out.push(u.clone());
    }
    out
}

fn ordered_product(mids: impl Iterator<Item = CMatrix>, dim: usize, h: f64) -> CMatrix {
    let mut u = CMatrix::identity(dim);
    for m in mids {
        u = &step_propagator(&m, h) * &u;
    }
    u
}

/// Residuals of the two factorisations of U = Texp(H₁ + H₂) over [0, t]:
///
/// * r₁ = ‖U − Texp(V₂(t,τ)H₁(τ)V₂†(t,τ))·Texp(H₂)‖,
/// * r₂ = ‖U − Texp(H₁)·Texp(V₁†(τ,0)H₂(τ)V₁(τ,0))‖,
///
/// with V_i the propagator of H_i alone. Frobenius norms; all products use step
/// `dt` so the residuals measure the O(dt²) midpoint error.
pub fn verify_decompositions(h1: &MatrixSchedule, h2: &MatrixSchedule, t: f64, dt: f64) -> Result<(f64, f64)> {
    let dim = h1.dim();
    if h2.dim() != dim {
        return Err(Error::GridMismatch { left: dim, right: h2.dim() });
    }
    if !(t > 0.0 && dt > 0.0) {
        return Err(Error::Domain("t and dt must be positive".into()));
    }
    let n = steps(0.0, t, dt);
    let h = t / n as f64;
    let mid = |k: usize| (k as f64 + 0.5) * h;

    let total = ordered_product((0..n).map(|k| &h1.at(mid(k)) + &h2.at(mid(k))), dim, h);

    let v2 = half_step_path(h2, 0.0, h, n);
    let v2_end = &v2[2 * n];
    let g1 = (0..n).map(|k| {
        // V₂(t, s) = V₂(t, 0)V₂(s, 0)†
        let v = v2_end * &v2[2 * k + 1].dagger();
        &(&v * &h1.at(mid(k))) * &v.dagger()
    });
    let r1 = (&total - &(&ordered_product(g1, dim, h) * v2_end)).norm();

    let v1 = half_step_path(h1, 0.0, h, n);
    let g2 = (0..n).map(|k| {
        let v = &v1[2 * k + 1];
        &(&v.dagger() * &h2.at(mid(k))) * v
    });
    let r2 = (&total - &(&v1[2 * n] * &ordered_product(g2, dim, h))).norm();
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(seed: f64) -> CMatrix {
        CMatrix::from_fn(3, |i, j| {
            let a = ((i * 3 + j) as f64 * 1.7 + seed).sin();
            let b = ((j * 3 + i) as f64 * 1.7 + seed).sin();
            if i == j {
                C64::new(a, 0.0)
            } else if i < j {
                C64::new(a, b)
            } else {
                C64::new(b, -a)
            }
        })
    }

    #[test]
    fn constant_generator_matches_expm() {
        let h = herm(0.3);
        assert!(h.hermiticity_defect() < 1e-15);
        let s = MatrixSchedule::new(3, |_| h.clone());
        let u = time_ordered_exp(&s, 0.0, 2.0, 0.01);
        let want = h.scale(C64::new(0.0, -2.0)).expm();
        assert!((&u - &want).norm() < 1e-8);
    }

    #[test]
    fn vanishing_second_generator() {
        let h = herm(1.1);
        let s1 = MatrixSchedule::new(3, |t| h.scale(C64::new(t.cos(), 0.0)));
        let s2 = MatrixSchedule::new(3, |_| CMatrix::zeros(3));
        let (r1, r2) = verify_decompositions(&s1, &s2, 1.0, 0.01).unwrap();
        assert!(r1 < 1e-12);
        // half-step versus whole-step midpoint products of H₁
        let (_, r2_half) = verify_decompositions(&s1, &s2, 1.0, 0.005).unwrap();
        assert!(r2 < 1e-4 && r2_half < 0.3 * r2);
    }
}
