//! Wick averages over the Gaussian initial state.
//!
//! A [`LinearForm`] is `c_x x̂_m + c_p p̂_m + Σ_k (f_m[k] n̂_m(t,τ_k) + f_m†[k] n̂_m†(t,τ_k)
//! + f_c[k] n̂_c(t,τ_k) + f_c†[k] n̂_c†(t,τ_k))`. Kernel samples already carry their
//! quadrature weights, so an integral ∫ f(u) n̂(t,u) du is stored as `w_k f(τ_k)`;
//! [`LinearForm::integrate`] builds such samples with trapezoid weights.
//!
//! Moment table (x̂_m = (b̂+b̂†)/√2):
//! ⟨x̂²⟩ = ⟨p̂²⟩ = n_th + ½, ⟨x̂p̂⟩ = i/2 = −⟨p̂x̂⟩,
//! ⟨n̂_m n̂_m†⟩ = (n_th+1)Γ_m, ⟨n̂_m† n̂_m⟩ = n_th Γ_m, ⟨n̂_c n̂_c†⟩ = Γ_c, ⟨n̂_c† n̂_c⟩ = 0.

use alloc::vec;
use alloc::vec::Vec;

use crate::correlators::SymMatrix;
use crate::params::TimeGrid;
use crate::quad::trap_weight;
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Which Gaussian variables a form touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Empty,
    Mechanical,
    Cavity,
    Mixed,
}

/// Which colored-noise operator a kernel multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Mech,
    MechDag,
    Cav,
    CavDag,
}

/// Linear functional of the Gaussian operators, sampled on `n` grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    n: usize,
    c_x: C64,
    c_p: C64,
    f_m: Vec<C64>,
    f_m_dag: Vec<C64>,
    f_c: Vec<C64>,
    f_c_dag: Vec<C64>,
    sector: Sector,
}

fn is_zero(v: &[C64]) -> bool {
    v.iter().all(|z| *z == ZERO)
}

impl LinearForm {
    /// The zero form on `n` nodes.
    pub fn zero(n: usize) -> Self {
        LinearForm {
            n,
            c_x: ZERO,
            c_p: ZERO,
            f_m: vec![ZERO; n],
            f_m_dag: vec![ZERO; n],
            f_c: vec![ZERO; n],
            f_c_dag: vec![ZERO; n],
            sector: Sector::Empty,
        }
    }

    fn retag(mut self) -> Self {
        let mech = self.c_x != ZERO || self.c_p != ZERO || !is_zero(&self.f_m) || !is_zero(&self.f_m_dag);
        let cav = !is_zero(&self.f_c) || !is_zero(&self.f_c_dag);
        self.sector = match (mech, cav) {
            (false, false) => Sector::Empty,
            (true, false) => Sector::Mechanical,
            (false, true) => Sector::Cavity,
            (true, true) => Sector::Mixed,
        };
        self
    }

    pub fn with_x(mut self, c: C64) -> Self {
        self.c_x = c;
        self.retag()
    }

    pub fn with_p(mut self, c: C64) -> Self {
        self.c_p = c;
        self.retag()
    }

    /// Set a noise kernel from already weighted samples.
    pub fn with_noise(mut self, which: Noise, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != self.n {
            return Err(Error::GridMismatch { left: self.n, right: samples.len() });
        }
        *self.kernel_mut(which) = samples;
        Ok(self.retag())
    }

    /// Set a noise kernel to the trapezoid samples of `f` over nodes `lo..=hi`.
    pub fn integrate(self, which: Noise, grid: &TimeGrid, lo: usize, hi: usize, f: impl Fn(usize) -> C64) -> Result<Self> {
        let n = grid.len();
        let samples = (0..n).map(|k| f(k) * trap_weight(k, lo, hi, grid.dt)).collect();
        self.with_noise(which, samples)
    }

    fn kernel_mut(&mut self, which: Noise) -> &mut Vec<C64> {
        match which {
            Noise::Mech => &mut self.f_m,
            Noise::MechDag => &mut self.f_m_dag,
            Noise::Cav => &mut self.f_c,
            Noise::CavDag => &mut self.f_c_dag,
        }
    }

    pub fn kernel(&self, which: Noise) -> &[C64] {
        match which {
            Noise::Mech => &self.f_m,
            Noise::MechDag => &self.f_m_dag,
            Noise::Cav => &self.f_c,
            Noise::CavDag => &self.f_c_dag,
        }
    }

    pub fn c_x(&self) -> C64 {
        self.c_x
    }

    pub fn c_p(&self) -> C64 {
        self.c_p
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn scale(mut self, s: C64) -> Self {
        self.c_x *= s;
        self.c_p *= s;
        for v in [&mut self.f_m, &mut self.f_m_dag, &mut self.f_c, &mut self.f_c_dag] {
            v.iter_mut().for_each(|z| *z *= s);
        }
        self.retag()
    }

    pub fn add(&self, other: &LinearForm) -> Result<LinearForm> {
        if self.n != other.n {
            return Err(Error::GridMismatch { left: self.n, right: other.n });
        }
        let sum = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(LinearForm {
            n: self.n,
            c_x: self.c_x + other.c_x,
            c_p: self.c_p + other.c_p,
            f_m: sum(&self.f_m, &other.f_m),
            f_m_dag: sum(&self.f_m_dag, &other.f_m_dag),
            f_c: sum(&self.f_c, &other.f_c),
            f_c_dag: sum(&self.f_c_dag, &other.f_c_dag),
            sector: Sector::Empty,
        }
        .retag())
    }

    /// L† : conjugate coefficients, swap each noise operator with its adjoint.
    pub fn hermitian_conjugate(&self) -> LinearForm {
        let conj = |v: &[C64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
        LinearForm {
            n: self.n,
            c_x: self.c_x.conj(),
            c_p: self.c_p.conj(),
            f_m: conj(&self.f_m_dag),
            f_m_dag: conj(&self.f_m),
            f_c: conj(&self.f_c_dag),
            f_c_dag: conj(&self.f_c),
            sector: self.sector,
        }
    }
}

/// Mechanical thermal state ⊗ cavity vacuum reservoir, with the Γ kernels needed
/// to contract noise samples.
#[derive(Debug, Clone, Copy)]
pub struct GaussianState<'a> {
    pub n_th: f64,
    pub gamma_m: &'a SymMatrix,
    pub gamma_c: &'a SymMatrix,
}

impl<'a> GaussianState<'a> {
    pub fn new(n_th: f64, gamma_m: &'a SymMatrix, gamma_c: &'a SymMatrix) -> Result<Self> {
        if gamma_m.dim() != gamma_c.dim() {
            return Err(Error::GridMismatch { left: gamma_m.dim(), right: gamma_c.dim() });
        }
        Ok(GaussianState { n_th, gamma_m, gamma_c })
    }

    /// State for forms without noise kernels (zero grid nodes).
    pub fn mechanical_only(n_th: f64) -> GaussianState<'static> {
        static EMPTY: SymMatrix = SymMatrix::empty();
        GaussianState { n_th, gamma_m: &EMPTY, gamma_c: &EMPTY }
    }

    fn check(&self, f: &LinearForm) -> Result<()> {
        if f.n != self.gamma_m.dim() {
            return Err(Error::GridMismatch { left: f.n, right: self.gamma_m.dim() });
        }
        Ok(())
    }
}

/// Σ_kl a_k b_l G_kl, skipping zero rows.
fn contract(a: &[C64], b: &[C64], g: &SymMatrix) -> C64 {
    if is_zero(a) || is_zero(b) {
        return ZERO;
    }
    let mut acc = ZERO;
    for (k, ak) in a.iter().enumerate() {
        if *ak == ZERO {
            continue;
        }
        let row = g.row(k);
        let mut s = ZERO;
        for (bl, gl) in b.iter().zip(row) {
            s += bl * gl;
        }
        acc += ak * s;
    }
    acc
}

/// ⟨A·B⟩ in the stated operator order.
pub fn second_moment(a: &LinearForm, b: &LinearForm, state: &GaussianState) -> Result<C64> {
    state.check(a)?;
    state.check(b)?;
    let n = state.n_th;
    let var = n + 0.5;
    let mut m = a.c_x * b.c_x * var + a.c_p * b.c_p * var;
    m += a.c_x * b.c_p * I * 0.5 - a.c_p * b.c_x * I * 0.5;
    m += contract(&a.f_m, &b.f_m_dag, state.gamma_m) * (n + 1.0);
    m += contract(&a.f_m_dag, &b.f_m, state.gamma_m) * n;
    m += contract(&a.f_c, &b.f_c_dag, state.gamma_c);
    Ok(m)
}

/// Scalar commutator [A, B] from [x̂, p̂] = i and [n̂_i(τ), n̂_i†(τ′)] = Γ_i(τ, τ′).
pub fn commutator(a: &LinearForm, b: &LinearForm, state: &GaussianState) -> Result<C64> {
    state.check(a)?;
    state.check(b)?;
    let mut c = (a.c_x * b.c_p - a.c_p * b.c_x) * I;
    c += contract(&a.f_m, &b.f_m_dag, state.gamma_m) - contract(&a.f_m_dag, &b.f_m, state.gamma_m);
    c += contract(&a.f_c, &b.f_c_dag, state.gamma_c) - contract(&a.f_c_dag, &b.f_c, state.gamma_c);
    Ok(c)
}

/// A linear insertion placed before exponent number `position`.
#[derive(Debug, Clone)]
pub struct Insertion {
    pub position: usize,
    pub form: LinearForm,
}

/// ⟨e^{L₁} … K … e^{L_m}⟩ for zero-mean Gaussian forms with at most two insertions.
///
/// Exponents contribute exp(½Σ⟨Lᵢ²⟩ + Σ_{i<j}⟨LᵢLⱼ⟩). An insertion K sitting between
/// exponents contributes the source factor s = Σ_{i before}⟨LᵢK⟩ + Σ_{i after}⟨KLᵢ⟩;
/// two insertions K₁ before K₂ contribute s₁s₂ + ⟨K₁K₂⟩.
pub fn ordered_exp_expectation(
    exponents: &[LinearForm],
    insertions: &[Insertion],
    state: &GaussianState,
) -> Result<C64> {
    if insertions.len() > 2 {
        return Err(Error::TooManyInsertions(insertions.len()));
    }
    let mut log = ZERO;
    for (i, li) in exponents.iter().enumerate() {
        log += 0.5 * second_moment(li, li, state)?;
        for lj in &exponents[i + 1..] {
            log += second_moment(li, lj, state)?;
        }
    }
    let source = |ins: &Insertion| -> Result<C64> {
        let mut s = ZERO;
        for (i, l) in exponents.iter().enumerate() {
            s += if i < ins.position {
                second_moment(l, &ins.form, state)?
            } else {
                second_moment(&ins.form, l, state)?
            };
        }
        Ok(s)
    };
    let factor = match insertions {
        [] => C64::new(1.0, 0.0),
        [k] => source(k)?,
        [k1, k2] => {
            let (first, second) = if k2.position < k1.position { (k2, k1) } else { (k1, k2) };
            source(first)? * source(second)? + second_moment(&first.form, &second.form, state)?
        }
        _ => unreachable!(),
    };
    Ok(log.exp() * factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_mats(n: usize) -> (SymMatrix, SymMatrix) {
        let grid = TimeGrid::with_steps(2.0, n - 1).unwrap();
        let t = grid.t_end;
        let gm = SymMatrix::from_fn(n, |i, j| crate::correlators::gamma_corr(grid.nodes[i], grid.nodes[j], t, 0.1));
        let gc = SymMatrix::from_fn(n, |i, j| crate::correlators::gamma_corr(grid.nodes[i], grid.nodes[j], t, 1.0));
        (gm, gc)
    }

    #[test]
    fn vacuum_variance() {
        let (gm, gc) = state_mats(5);
        let st = GaussianState::new(0.0, &gm, &gc).unwrap();
        let a = LinearForm::zero(5).with_x(C64::new(2.0, 0.0));
        let b = LinearForm::zero(5).with_x(C64::new(3.0, 0.0));
        assert!((second_moment(&a, &b, &st).unwrap() - C64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn too_many_insertions() {
        let (gm, gc) = state_mats(3);
        let st = GaussianState::new(0.0, &gm, &gc).unwrap();
        let k = Insertion { position: 0, form: LinearForm::zero(3).with_x(C64::new(1.0, 0.0)) };
        let r = ordered_exp_expectation(&[], &[k.clone(), k.clone(), k], &st);
        assert_eq!(r, Err(Error::TooManyInsertions(3)));
    }

    #[test]
    fn displacement_pair_closed_form() {
        let (gm, gc) = state_mats(3);
        let st = GaussianState::new(0.0, &gm, &gc).unwrap();
        let (l, m) = (0.7, -0.4);
        let a = LinearForm::zero(3).with_x(C64::new(0.0, l));
        let b = LinearForm::zero(3).with_x(C64::new(0.0, m));
        let v = ordered_exp_expectation(&[a, b], &[], &st).unwrap();
        assert!((v - C64::new((-(l + m) * (l + m) / 4.0).exp(), 0.0)).norm() < 1e-15);
    }
}
