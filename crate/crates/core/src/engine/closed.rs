use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{NoiseMode, CONVERGENCE_TOL, NEGATIVITY_TOL};
use crate::correlators::KernelCache;
use crate::params::{SystemParams, TimeGrid};
use crate::quad::{cis, exp_series, exp_series2, trap_weight, ExpKernel};
use crate::{Error, Result, C64};

/// Node cap for the O(N²) pair tables (six complex N×N arrays in full mode).
pub const MAX_PAIR_NODES: usize = 4097;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Per-node coefficients of exp(q₀ + q₁λ + q₂λ²)·(σ₀ + σ₁λ).
#[derive(Debug, Clone)]
struct NodeTerms {
    q0: Vec<C64>,
    q1: Vec<C64>,
    q2: Vec<C64>,
    s0: Vec<C64>,
    s1: Vec<C64>,
}

/// Which pair covariances to materialise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSet {
    /// ⟨A_iA_j⟩ and ⟨K_iA_j⟩ only (λ = 0).
    AOnly,
    /// ⟨S_iS_j⟩ and ⟨K_iS_j⟩ with S = A + B (λ = 1).
    Summed,
    /// All of AA, AB, BA, BB, KA, KB for truncated series.
    Split,
}

/// Pair covariances of the exponent forms, row-major `[i·n + j]`.
///
/// `ka[u·n+j] = ⟨K̂(τ_u) A_j⟩`, `aa[i·n+j] = ⟨A_i A_j⟩`, and so on. For
/// [`TableSet::Summed`] the `ka`/`aa` slots hold the S = A + B versions.
#[derive(Debug, Clone)]
pub struct PairTables {
    pub set: TableSet,
    pub n: usize,
    pub ka: Vec<C64>,
    pub kb: Vec<C64>,
    pub aa: Vec<C64>,
    pub ab: Vec<C64>,
    pub ba: Vec<C64>,
    pub bb: Vec<C64>,
}

/// Closed-form evaluator for one scenario and one final time.
///
/// Δ₀ and E enter only through D₁, D₂; every heavy piece (Γ matrices, phases,
/// per-node Gaussian terms, pair tables) is reused by [`Evaluator::set_drive`].
#[derive(Debug, Clone)]
pub struct Evaluator {
    cache: KernelCache,
    /// ⟨K̂(τ_a)K̂(τ_b)⟩ at index distance d = b − a, stored at d + N.
    mvec: Vec<C64>,
    terms: NodeTerms,
    tables: Option<PairTables>,
}

impl Evaluator {
    pub fn new(params: &SystemParams, grid: &TimeGrid) -> Result<Self> {
        Ok(Self::from_cache(KernelCache::build(params, grid)?))
    }

    pub fn from_cache(cache: KernelCache) -> Self {
        let mvec = m_vector(&cache);
        let terms = node_terms(&cache, &mvec);
        Evaluator { cache, mvec, terms, tables: None }
    }

    pub fn cache(&self) -> &KernelCache {
        &self.cache
    }

    pub fn params(&self) -> &SystemParams {
        &self.cache.params
    }

    /// Change Δ₀ and E, keeping all drive-independent work.
    pub fn set_drive(&mut self, delta0: f64, drive_e: f64) {
        self.cache.set_drive(delta0, drive_e);
    }

    /// Two-point function ⟨K̂(τ_a)K̂(τ_b)⟩.
    pub fn m_at(&self, a: usize, b: usize) -> C64 {
        let n = self.cache.grid.n_steps;
        self.mvec[b + n - a]
    }

    /// e^{−κ(t−τ)/2} Ĝ-average times the trapezoid weight, per node.
    fn prefactors(&self, with_d2: bool) -> Vec<C64> {
        let c = &self.cache;
        let t = c.t();
        let n = c.grid.len();
        let k = c.params.kappa;
        (0..n)
            .map(|i| {
                let decay = (-0.5 * k * (t - c.grid.nodes[i])).exp();
                let mut gdet = c.d1[i] * decay;
                if with_d2 {
                    gdet += c.d2[i];
                }
                gdet * decay * trap_weight(i, 0, n - 1, c.grid.dt)
            })
            .collect()
    }

    /// ⟨â⟩(t) under `mode`.
    pub fn amplitude(&self, mode: NoiseMode) -> Result<C64> {
        let d1 = self.cache.d1_end();
        let g = self.cache.params.g;
        if mode == NoiseMode::PureDrive || g == 0.0 {
            return Ok(d1);
        }
        let (y, y_prev) = self.correction(mode);
        let amp = d1 + y;
        if let (NoiseMode::Full { order: 4 }, Some(prev)) = (mode, y_prev) {
            let term = (y - prev).norm();
            if term > CONVERGENCE_TOL * amp.norm() {
                return Err(Error::NonConvergence { order: 4, term, partial: amp.norm() });
            }
        }
        finite(amp, "cavity amplitude")
    }

    /// The g-correction integral Y and, for truncated modes, Y one order lower.
    fn correction(&self, mode: NoiseMode) -> (C64, Option<C64>) {
        let g = self.cache.params.g;
        let t = &self.terms;
        let pref = self.prefactors(mode != NoiseMode::GammaCZero);
        let n = pref.len();
        let mut y = ZERO;
        let mut y_prev = ZERO;
        for i in 0..n {
            if pref[i] == ZERO {
                continue;
            }
            let v = match mode {
                NoiseMode::GammaCZero => t.q0[i].exp() * t.s0[i],
                NoiseMode::Resummed => (t.q0[i] + t.q1[i] + t.q2[i]).exp() * (t.s0[i] + t.s1[i]),
                NoiseMode::Full { order } => {
                    let k = order as usize;
                    let h = exp_series(t.q0[i], t.q1[i], t.q2[i], k);
                    let mut tot = ZERO;
                    for m in 0..=k {
                        let mut c = h[m] * t.s0[i];
                        if m >= 1 {
                            c += h[m - 1] * t.s1[i];
                        }
                        tot += c;
                        if m == k {
                            y_prev += pref[i] * (tot - c);
                        }
                    }
                    tot
                }
                NoiseMode::PureDrive => ZERO,
            };
            y += pref[i] * v;
        }
        let scale = I * g;
        match mode {
            NoiseMode::Full { .. } => (scale * y, Some(scale * y_prev)),
            _ => (scale * y, None),
        }
    }

    /// Build (or reuse) pair tables covering `set`.
    pub fn tables(&mut self, set: TableSet) -> Result<&PairTables> {
        let fits = matches!(&self.tables, Some(t) if t.set == set);
        if !fits {
            self.tables = Some(PairTables::build(&self.cache, &self.mvec, set)?);
        }
        Ok(self.tables.as_ref().unwrap())
    }

    /// n_P(t) under `mode`.
    pub fn photon_number(&mut self, mode: NoiseMode) -> Result<f64> {
        let d1 = self.cache.d1_end();
        let base = d1.norm_sqr();
        let g = self.cache.params.g;
        if mode == NoiseMode::PureDrive || g == 0.0 {
            return Ok(base);
        }
        let (y, y_prev) = self.correction(mode);
        let cross = 2.0 * (d1.conj() * y).re;
        let pref = self.prefactors(mode != NoiseMode::GammaCZero);
        let np = match mode {
            NoiseMode::GammaCZero => {
                self.tables(TableSet::AOnly)?;
                let big_q = self.terms.q0.clone();
                let sig = self.terms.s0.clone();
                base + cross + self.pair_sum_closed(&pref, &big_q, &sig)
            }
            NoiseMode::Resummed => {
                self.tables(TableSet::Summed)?;
                let t = &self.terms;
                let n = t.q0.len();
                let big_q: Vec<C64> = (0..n).map(|i| t.q0[i] + t.q1[i] + t.q2[i]).collect();
                let sig: Vec<C64> = (0..n).map(|i| t.s0[i] + t.s1[i]).collect();
                base + cross + self.pair_sum_closed(&pref, &big_q, &sig)
            }
            NoiseMode::Full { order } => {
                self.tables(TableSet::Split)?;
                let y_prev_amp = y_prev.unwrap_or(ZERO);
                let (yy, yy_prev) = self.pair_sum_truncated(&pref, order as usize);
                let np = base + cross + yy;
                if order == 4 {
                    let prev = base + 2.0 * (d1.conj() * y_prev_amp).re + yy_prev;
                    let term = (np - prev).abs();
                    if term > CONVERGENCE_TOL * np.abs() {
                        return Err(Error::NonConvergence { order: 4, term, partial: np.abs() });
                    }
                }
                np
            }
            NoiseMode::PureDrive => base,
        };
        if !np.is_finite() {
            return Err(Error::NonFinite("photon number"));
        }
        if np < NEGATIVITY_TOL {
            return Err(Error::Negative { quantity: "photon number", value: np });
        }
        Ok(np)
    }

    /// g²ΣΣ conj(p_i)p_j exp(conj Q_i + Q_j + g²⟨S_iS_j⟩)(s₁s₂ + ⟨K_iK_j⟩).
    fn pair_sum_closed(&self, pref: &[C64], big_q: &[C64], sig: &[C64]) -> f64 {
        let tb = self.tables.as_ref().expect("tables built");
        let g = self.cache.params.g;
        let g2 = g * g;
        let ig = I * g;
        let n = pref.len();
        let mut total = ZERO;
        for i in 0..n {
            if pref[i] == ZERO {
                continue;
            }
            let ci = pref[i].conj();
            let qi = big_q[i].conj();
            let si = sig[i].conj();
            let row = i * n;
            let mut acc = ZERO;
            for j in 0..n {
                if pref[j] == ZERO {
                    continue;
                }
                let e = (qi + big_q[j] + tb.aa[row + j] * g2).exp();
                let s1 = si + ig * tb.ka[row + j];
                let s2 = sig[j] - ig * tb.ka[j * n + i].conj();
                acc += pref[j] * e * (s1 * s2 + self.m_at(i, j));
            }
            total += ci * acc;
        }
        g2 * total.re
    }

    /// Bivariate truncation of the pair sum; returns orders `k` and `k − 1`.
    fn pair_sum_truncated(&self, pref: &[C64], k: usize) -> (f64, f64) {
        let tb = self.tables.as_ref().expect("tables built");
        let t = &self.terms;
        let g = self.cache.params.g;
        let g2 = g * g;
        let ig = I * g;
        let n = pref.len();
        let w = k + 1;
        let mut h = vec![ZERO; w * w];
        let mut cum = vec![ZERO; w * w];
        let mut total = ZERO;
        let mut total_prev = ZERO;
        for i in 0..n {
            if pref[i] == ZERO {
                continue;
            }
            let row = i * n;
            let (q0i, q1i, q2i) = (t.q0[i].conj(), t.q1[i].conj(), t.q2[i].conj());
            let (s0i, s1i) = (t.s0[i].conj(), t.s1[i].conj());
            let mut acc = ZERO;
            let mut acc_prev = ZERO;
            for j in 0..n {
                if pref[j] == ZERO {
                    continue;
                }
                let p = [
                    q0i + t.q0[j] + g2 * tb.aa[row + j],
                    q1i + g2 * tb.ba[row + j],
                    t.q1[j] + g2 * tb.ab[row + j],
                    g2 * tb.bb[row + j],
                    q2i,
                    t.q2[j],
                ];
                exp_series2(&p, k, &mut h);
                // cum[a][b] = Σ_{n≤a, m≤b} h[n][m]
                for a in 0..w {
                    let mut run = ZERO;
                    for b in 0..w {
                        run += h[a * w + b];
                        cum[a * w + b] = run + if a > 0 { cum[(a - 1) * w + b] } else { ZERO };
                    }
                }
                let a0 = s0i + ig * tb.ka[row + j];
                let a1 = s1i;
                let a2 = ig * tb.kb[row + j];
                let b0 = t.s0[j] - ig * tb.ka[j * n + i].conj();
                let b1 = -ig * tb.kb[j * n + i].conj();
                let b2 = t.s1[j];
                let ins = [
                    (0usize, 0usize, a0 * b0 + self.m_at(i, j)),
                    (1, 0, a0 * b1 + a1 * b0),
                    (0, 1, a0 * b2 + a2 * b0),
                    (2, 0, a1 * b1),
                    (0, 2, a2 * b2),
                    (1, 1, a1 * b2 + a2 * b1),
                ];
                let pair = |kk: usize| -> C64 {
                    let mut s = ZERO;
                    for &(x, y, c) in &ins {
                        if x <= kk && y <= kk {
                            s += c * cum[(kk - x) * w + (kk - y)];
                        }
                    }
                    s
                };
                acc += pref[j] * pair(k);
                acc_prev += pref[j] * pair(k - 1);
            }
            total += pref[i].conj() * acc;
            total_prev += pref[i].conj() * acc_prev;
        }
        (g2 * total.re, g2 * total_prev.re)
    }

    /// Per-node terms, exposed for cross-checks: (q₀, q₁, q₂, σ₀, σ₁) at node `i`.
    pub fn node_terms(&self, i: usize) -> [C64; 5] {
        let t = &self.terms;
        [t.q0[i], t.q1[i], t.q2[i], t.s0[i], t.s1[i]]
    }
}

fn finite(z: C64, what: &'static str) -> Result<C64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// ⟨K̂(τ_a)K̂(τ_b)⟩ = e^{−γ_m|d|/2}[(n+1)e^{iω_m d} + n e^{−iω_m d}], d = τ_b − τ_a.
fn m_vector(c: &KernelCache) -> Vec<C64> {
    let p = &c.params;
    let n = c.grid.n_steps as i64;
    let dt = c.grid.dt;
    (-n..=n)
        .map(|k| {
            let d = k as f64 * dt;
            let env = (-0.5 * p.gamma_m * d.abs()).exp();
            (cis(p.omega_m * d) * (p.n_th + 1.0) + cis(-p.omega_m * d) * p.n_th) * env
        })
        .collect()
}

fn m_kernel(p: &SystemParams, dt: f64) -> ExpKernel {
    let up = C64::new(-0.5 * p.gamma_m * dt, p.omega_m * dt).exp();
    let dn = C64::new(-0.5 * p.gamma_m * dt, -p.omega_m * dt).exp();
    let n1 = C64::new(p.n_th + 1.0, 0.0);
    let n0 = C64::new(p.n_th, 0.0);
    let mut upper = vec![(n1, up)];
    let mut lower = vec![(n1, dn)];
    if p.n_th > 0.0 {
        upper.push((n0, dn));
        lower.push((n0, up));
    }
    ExpKernel { upper, lower }
}

/// [P̂(τ_a), X̂(τ_b)] = −2i e^{−γ_m|τ_a−τ_b|/2}.
fn comm_kernel(p: &SystemParams, dt: f64) -> ExpKernel {
    let r = C64::new((-0.5 * p.gamma_m * dt).exp(), 0.0);
    let c = C64::new(0.0, -2.0);
    ExpKernel { upper: vec![(c, r)], lower: vec![(c, r)] }
}

/// Weights of A(τ_i) = ∫₀^{τ_i} e^{−κ(t−u)} K̂(u) du and B(τ_i) = ∫_{τ_i}^t Γ_c(u,τ_i) K̂(u) du.
fn weights(c: &KernelCache, i: usize, wa: &mut [C64], wb: &mut [C64]) {
    let n = c.grid.len();
    let t = c.t();
    let k = c.params.kappa;
    let dt = c.grid.dt;
    for u in 0..n {
        wa[u] = if u <= i {
            C64::new(trap_weight(u, 0, i, dt) * (-k * (t - c.grid.nodes[u])).exp(), 0.0)
        } else {
            ZERO
        };
        wb[u] = if u >= i {
            C64::new(trap_weight(u, i, n - 1, dt) * c.gamma_c.get(u, i), 0.0)
        } else {
            ZERO
        };
    }
}

fn node_terms(c: &KernelCache, mvec: &[C64]) -> NodeTerms {
    let p = &c.params;
    let n = c.grid.len();
    let big_n = c.grid.n_steps;
    let g2 = p.g * p.g;
    let mk = m_kernel(p, c.grid.dt);
    let ck = comm_kernel(p, c.grid.dt);
    let sin: Vec<f64> = c.grid.nodes.iter().map(|&u| (p.omega_m * u).sin()).collect();
    let cos: Vec<f64> = c.grid.nodes.iter().map(|&u| (p.omega_m * u).cos()).collect();
    let mut out = NodeTerms {
        q0: vec![ZERO; n],
        q1: vec![ZERO; n],
        q2: vec![ZERO; n],
        s0: vec![ZERO; n],
        s1: vec![ZERO; n],
    };
    let mut wa = vec![ZERO; n];
    let mut wb = vec![ZERO; n];
    let mut xs = vec![ZERO; n];
    let mut xc = vec![ZERO; n];
    for i in 0..n {
        weights(c, i, &mut wa, &mut wb);
        let aa = mk.bilinear(&wa[..=i], &wa[..=i]);
        let ab = mk.bilinear(&wa, &wb);
        let bb = mk.bilinear(&wb[i..], &wb[i..]);
        for u in 0..n {
            xs[u] = wa[u] * sin[u];
            xc[u] = wa[u] * cos[u];
        }
        let comm_a = ck.bilinear(&xs[..=i], &xc[..=i]);
        for u in 0..n {
            xs[u] = wb[u] * sin[u];
            xc[u] = wb[u] * cos[u];
        }
        let comm_b = ck.bilinear(&xs[i..], &xc[i..]);
        let mut ka = ZERO;
        let mut kb = ZERO;
        for u in 0..n {
            let m = mvec[u + big_n - i];
            ka += m * wa[u];
            kb += m * wb[u];
        }
        out.q0[i] = -0.5 * g2 * (aa + comm_a) - I * g2 * c.theta[i];
        out.q1[i] = -g2 * ab;
        out.q2[i] = -0.5 * g2 * (bb + comm_b) - I * g2 * c.theta_prime[i];
        out.s0[i] = I * p.g * ka.conj();
        out.s1[i] = I * p.g * kb;
    }
    out
}

impl PairTables {
    /// O(N²) construction by cumulative trapezoid sums.
    pub fn build(c: &KernelCache, mvec: &[C64], set: TableSet) -> Result<Self> {
        let n = c.grid.len();
        if n > MAX_PAIR_NODES {
            return Err(Error::MemoryCap { requested: n, cap: MAX_PAIR_NODES });
        }
        let big_n = c.grid.n_steps;
        let dt = c.grid.dt;
        let t = c.t();
        let k = c.params.kappa;
        let e: Vec<f64> = c.grid.nodes.iter().map(|&u| (-k * (t - u)).exp()).collect();
        let eps: Vec<f64> = c.grid.nodes.iter().map(|&u| (-0.5 * k * (t - u)).exp()).collect();
        let q = (-0.5 * k * dt).exp();

        let need_b = set != TableSet::AOnly;
        let mut ka = vec![ZERO; n * n];
        let mut kb = if need_b { vec![ZERO; n * n] } else { Vec::new() };
        for u in 0..n {
            let m = |v: usize| mvec[v + big_n - u];
            let row = &mut ka[u * n..(u + 1) * n];
            for j in 1..n {
                row[j] = row[j - 1] + (m(j - 1) * e[j - 1] + m(j) * e[j]) * (0.5 * dt);
            }
            if need_b {
                let row = &mut kb[u * n..(u + 1) * n];
                let mut p1 = ZERO;
                let mut r = ZERO;
                for j in (0..n - 1).rev() {
                    p1 = (m(j) + m(j + 1) * q) * (0.5 * dt) + p1 * q;
                    r += (m(j) * eps[j] + m(j + 1) * eps[j + 1]) * (0.5 * dt);
                    row[j] = p1 - r * eps[j];
                }
            }
        }
        if set == TableSet::Summed {
            for (a, b) in ka.iter_mut().zip(&kb) {
                *a += b;
            }
            kb = Vec::new();
        }
        let prefix = |src: &[C64]| -> Vec<C64> {
            let mut out = vec![ZERO; n * n];
            for i in 1..n {
                let (done, rest) = out.split_at_mut(i * n);
                let prev = &done[(i - 1) * n..];
                let cur = &mut rest[..n];
                let s_prev = &src[(i - 1) * n..i * n];
                let s_cur = &src[i * n..(i + 1) * n];
                let (w0, w1) = (0.5 * dt * e[i - 1], 0.5 * dt * e[i]);
                for j in 0..n {
                    cur[j] = prev[j] + s_prev[j] * w0 + s_cur[j] * w1;
                }
            }
            out
        };
        let suffix = |src: &[C64]| -> Vec<C64> {
            let mut out = vec![ZERO; n * n];
            let mut p1 = vec![ZERO; n];
            let mut r = vec![ZERO; n];
            for i in (0..n - 1).rev() {
                let s_i = &src[i * n..(i + 1) * n];
                let s_n = &src[(i + 1) * n..(i + 2) * n];
                let row = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    p1[j] = (s_i[j] + s_n[j] * q) * (0.5 * dt) + p1[j] * q;
                    r[j] += (s_i[j] * eps[i] + s_n[j] * eps[i + 1]) * (0.5 * dt);
                    row[j] = p1[j] - r[j] * eps[i];
                }
            }
            out
        };
        let tables = match set {
            TableSet::AOnly => {
                let aa = prefix(&ka);
                PairTables { set, n, ka, kb, aa, ab: Vec::new(), ba: Vec::new(), bb: Vec::new() }
            }
            TableSet::Summed => {
                let mut ss = prefix(&ka);
                for (a, b) in ss.iter_mut().zip(suffix(&ka)) {
                    *a += b;
                }
                PairTables { set, n, ka, kb, aa: ss, ab: Vec::new(), ba: Vec::new(), bb: Vec::new() }
            }
            TableSet::Split => {
                let aa = prefix(&ka);
                let ba = suffix(&ka);
                let ab = prefix(&kb);
                let bb = suffix(&kb);
                PairTables { set, n, ka, kb, aa, ab, ba, bb }
            }
        };
        Ok(tables)
    }
}
