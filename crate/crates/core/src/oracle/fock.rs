//! Truncated-Fock density matrix on cavity ⊗ mechanics and its Lindblad evolution.
//!
//! Basis index is `n·dim_mech + k` for cavity number n, phonon number k. The
//! generator is applied directly through ladder-operator shifts, never materialised.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::matrix::CMatrix;
use crate::engine::{ObservableKind, ObservableSeries, SeriesValues};
use crate::params::{SystemParams, TimeGrid};
use crate::quad::cis;
use crate::{Error, Result, C64};

/// Largest total Hilbert dimension dim_cav·dim_mech.
pub const MAX_HILBERT_DIM: usize = 4096;
/// Thermal weight allowed beyond the mechanical cutoff.
pub const THERMAL_TAIL: f64 = 1e-8;
/// Allowed |Tr ρ − 1| per unit of κt.
pub const TRACE_DRIFT_RATE: f64 = 1e-6;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockDims {
    pub cav: usize,
    pub mech: usize,
}

impl FockDims {
    pub fn total(&self) -> usize {
        self.cav * self.mech
    }

    /// Heuristic: 4 cavity levels, and enough phonons to hold the coherent shift
    /// g√2/ω_m plus three standard deviations of the thermal spread.
    pub fn heuristic(p: &SystemParams) -> Self {
        let shift = p.g * core::f64::consts::SQRT_2 / p.omega_m;
        let spread = 3.0 * (p.n_th + 1.0).sqrt();
        let mech = ((shift + spread) * (shift + spread)).ceil() as usize;
        FockDims { cav: 4, mech: mech.max(20) }
    }
}

#[derive(Debug, Clone)]
pub struct FockState {
    pub rho: CMatrix,
    pub dims: FockDims,
}

impl FockState {
    /// Wraps a density matrix; checks only the dimension.
    pub fn new(rho: CMatrix, dims: FockDims) -> Result<Self> {
        if rho.dim() != dims.total() {
            return Err(Error::GridMismatch { left: rho.dim(), right: dims.total() });
        }
        Ok(FockState { rho, dims })
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// ⟨â⟩.
    pub fn amplitude(&self) -> C64 {
        let (dc, dm) = (self.dims.cav, self.dims.mech);
        let mut acc = ZERO;
        for n in 0..dc - 1 {
            let s = ((n + 1) as f64).sqrt();
            for k in 0..dm {
                acc += self.rho[((n + 1) * dm + k, n * dm + k)] * s;
            }
        }
        acc
    }

    /// ⟨â†â⟩.
    pub fn photon_number(&self) -> f64 {
        let (dc, dm) = (self.dims.cav, self.dims.mech);
        let mut acc = 0.0;
        for n in 1..dc {
            for k in 0..dm {
                acc += n as f64 * self.rho[(n * dm + k, n * dm + k)].re;
            }
        }
        acc
    }

    /// ⟨b̂⟩.
    pub fn phonon_amplitude(&self) -> C64 {
        let (dc, dm) = (self.dims.cav, self.dims.mech);
        let mut acc = ZERO;
        for n in 0..dc {
            for k in 0..dm - 1 {
                acc += self.rho[(n * dm + k + 1, n * dm + k)] * ((k + 1) as f64).sqrt();
            }
        }
        acc
    }

    /// ⟨b̂†b̂⟩.
    pub fn phonon_number(&self) -> f64 {
        let (dc, dm) = (self.dims.cav, self.dims.mech);
        let mut acc = 0.0;
        for n in 0..dc {
            for k in 1..dm {
                acc += k as f64 * self.rho[(n * dm + k, n * dm + k)].re;
            }
        }
        acc
    }

    /// Population in the top mechanical level, a truncation diagnostic.
    pub fn top_phonon_weight(&self) -> f64 {
        let (dc, dm) = (self.dims.cav, self.dims.mech);
        (0..dc).map(|n| self.rho[(n * dm + dm - 1, n * dm + dm - 1)].re).sum()
    }
}

/// ρ(0) = |0⟩⟨0| ⊗ ρ_th with the thermal law truncated and renormalised.
pub fn build_initial_state(dim_cav: usize, dim_mech: usize, n_th: f64) -> Result<FockState> {
    if dim_cav < 2 || dim_mech < 2 {
        return Err(Error::Domain("Fock dimensions must be at least 2".into()));
    }
    let dims = FockDims { cav: dim_cav, mech: dim_mech };
    if dims.total() > MAX_HILBERT_DIM {
        return Err(Error::MemoryCap { requested: dims.total(), cap: MAX_HILBERT_DIM });
    }
    if !(n_th >= 0.0) || !n_th.is_finite() {
        return Err(Error::Domain("n_th must be finite and non-negative".into()));
    }
    let ratio = n_th / (n_th + 1.0);
    let tail = ratio.powi(dim_mech as i32) / (n_th + 1.0);
    if tail >= THERMAL_TAIL {
        return Err(Error::Truncation(alloc::format!(
            "thermal tail {tail:.3e} beyond {dim_mech} phonon levels"
        )));
    }
    let weights: Vec<f64> = (0..dim_mech).map(|k| ratio.powi(k as i32)).collect();
    let norm: f64 = weights.iter().sum();
    let mut rho = CMatrix::zeros(dims.total());
    for (k, w) in weights.iter().enumerate() {
        rho[(k, k)] = C64::new(w / norm, 0.0);
    }
    Ok(FockState { rho, dims })
}

/// Action of the generator L(t) on a flat density matrix.
struct Generator<'a> {
    p: &'a SystemParams,
    dims: FockDims,
    sq: Vec<f64>,
}

impl<'a> Generator<'a> {
    fn new(p: &'a SystemParams, dims: FockDims) -> Self {
        let top = dims.cav.max(dims.mech) + 1;
        Generator { p, dims, sq: (0..top).map(|k| (k as f64).sqrt()).collect() }
    }

    /// Fastest rate in L(t): decay, thermal pumping, photon-weighted coupling,
    /// drive and the explicit time dependence.
    fn max_rate(&self) -> f64 {
        let p = self.p;
        let (dc, dm) = ((self.dims.cav - 1) as f64, (self.dims.mech - 1) as f64);
        p.kappa * dc
            + p.gamma_m * (2.0 * p.n_th + 1.0) * dm
            + p.g * dc
            + 2.0 * p.drive_e * dc.sqrt()
            + p.omega_m
            + p.delta0.abs()
    }

    fn apply(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let p = self.p;
        let (dc, dm) = (self.dims.cav, self.dims.mech);
        let d = dc * dm;
        let sq = &self.sq;
        let at = |n: usize, k: usize, m: usize, l: usize| rho[(n * dm + k) * d + m * dm + l];
        let em = cis(-p.omega_m * t);
        let ep = em.conj();
        let drive_p = cis(p.delta0 * t) * p.drive_e;
        let drive_m = drive_p.conj();
        let g = p.g;
        let kap = p.kappa;
        let gd = p.gamma_m * (p.n_th + 1.0);
        let gu = p.gamma_m * p.n_th;
        for n in 0..dc {
            for m in 0..dc {
                for k in 0..dm {
                    for l in 0..dm {
                        let x = at(n, k, m, l);
                        let mut v = ZERO;
                        // i g (n K X − m X K), K = b e^{−iωt} + b† e^{iωt}
                        if g != 0.0 && (n != 0 || m != 0) {
                            let mut kx = ZERO;
                            let mut xk = ZERO;
                            if k + 1 < dm {
                                kx += em * at(n, k + 1, m, l) * sq[k + 1];
                            }
                            if k > 0 {
                                kx += ep * at(n, k - 1, m, l) * sq[k];
                            }
                            if l > 0 {
                                xk += em * at(n, k, m, l - 1) * sq[l];
                            }
                            if l + 1 < dm {
                                xk += ep * at(n, k, m, l + 1) * sq[l + 1];
                            }
                            v += C64::new(0.0, g) * (kx * n as f64 - xk * m as f64);
                        }
                        // −i[H_d, ρ], H_d = iE(e^{iΔt}â† − e^{−iΔt}â)
                        if p.drive_e != 0.0 {
                            if n > 0 {
                                v += drive_p * at(n - 1, k, m, l) * sq[n];
                            }
                            if n + 1 < dc {
                                v -= drive_m * at(n + 1, k, m, l) * sq[n + 1];
                            }
                            if m + 1 < dc {
                                v -= drive_p * at(n, k, m + 1, l) * sq[m + 1];
                            }
                            if m > 0 {
                                v += drive_m * at(n, k, m - 1, l) * sq[m];
                            }
                        }
                        // κ D[â]
                        if n + 1 < dc && m + 1 < dc {
                            v += at(n + 1, k, m + 1, l) * (kap * sq[n + 1] * sq[m + 1]);
                        }
                        v -= x * (0.5 * kap * (n + m) as f64);
                        // γ(n_th+1) D[b̂] + γ n_th D[b̂†]
                        if gd != 0.0 {
                            if k + 1 < dm && l + 1 < dm {
                                v += at(n, k + 1, m, l + 1) * (gd * sq[k + 1] * sq[l + 1]);
                            }
                            v -= x * (0.5 * gd * (k + l) as f64);
                        }
                        if gu != 0.0 {
                            if k > 0 && l > 0 {
                                v += at(n, k - 1, m, l - 1) * (gu * sq[k] * sq[l]);
                            }
                            // truncated b̂b̂† has no weight on the top level, which keeps L trace-free
                            let bbd = |j: usize| if j + 1 < dm { (j + 1) as f64 } else { 0.0 };
                            v -= x * (0.5 * gu * (bbd(k) + bbd(l)));
                        }
                        out[(n * dm + k) * d + m * dm + l] = v;
                    }
                }
            }
        }
    }
}

/// RK4 integrator with reusable stage buffers.
struct Rk4<'a> {
    gen: Generator<'a>,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl<'a> Rk4<'a> {
    fn new(p: &'a SystemParams, dims: FockDims) -> Self {
        let len = dims.total() * dims.total();
        Rk4 {
            gen: Generator::new(p, dims),
            k: [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]],
            tmp: vec![ZERO; len],
        }
    }

    fn substeps(&self, dt: f64) -> usize {
        let guard = 1e-2 / self.gen.max_rate().max(1e-300);
        ((dt / guard).ceil() as usize).max(1)
    }

    fn step(&mut self, rho: &mut [C64], t: f64, h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        self.gen.apply(t, rho, k1);
        for ((d, r), k) in tmp.iter_mut().zip(rho.iter()).zip(k1.iter()) {
            *d = r + k * (0.5 * h);
        }
        self.gen.apply(t + 0.5 * h, tmp, k2);
        for ((d, r), k) in tmp.iter_mut().zip(rho.iter()).zip(k2.iter()) {
            *d = r + k * (0.5 * h);
        }
        self.gen.apply(t + 0.5 * h, tmp, k3);
        for ((d, r), k) in tmp.iter_mut().zip(rho.iter()).zip(k3.iter()) {
            *d = r + k * h;
        }
        self.gen.apply(t + h, tmp, k4);
        let w = h / 6.0;
        for i in 0..rho.len() {
            rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
    }

    /// Advance from t to t + dt with substeps; checks the trace afterwards.
    fn advance(&mut self, state: &mut FockState, t: f64, dt: f64) -> Result<()> {
        let ns = self.substeps(dt);
        let h = dt / ns as f64;
        for s in 0..ns {
            self.step(state.rho.as_mut_slice(), t + s as f64 * h, h);
        }
        let drift = (state.trace() - 1.0).norm();
        let allowed = TRACE_DRIFT_RATE * (self.gen.p.kappa * (t + dt)).max(1.0);
        if !(drift <= allowed) {
            return Err(Error::TraceDrift { time: t + dt, drift });
        }
        Ok(())
    }
}

/// One RK4 step of ρ̇ = L(t)ρ from t to t + dt, substepped when dt exceeds
/// 10⁻² over the fastest rate.
pub fn lindblad_step(state: &FockState, params: &SystemParams, t: f64, dt: f64) -> Result<FockState> {
    let mut out = state.clone();
    Rk4::new(params, state.dims).advance(&mut out, t, dt)?;
    Ok(out)
}

/// Oracle observables on a time grid: ⟨â⟩, X_c, n_P, X_m, P_m.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub amplitude: ObservableSeries,
    pub x_c: ObservableSeries,
    pub n_p: ObservableSeries,
    pub x_m: ObservableSeries,
    pub p_m: ObservableSeries,
    /// Largest top-level phonon population seen along the run.
    pub max_top_phonon: f64,
}

/// Evolve ρ(0) = |0⟩⟨0| ⊗ ρ_th along `grid` and record Tr{ρÔ} at every node.
pub fn evolve_and_measure(params: &SystemParams, dims: FockDims, grid: &TimeGrid) -> Result<OracleRun> {
    let mut state = build_initial_state(dims.cav, dims.mech, params.n_th)?;
    let mut rk = Rk4::new(params, dims);
    let n = grid.len();
    let mut amp = Vec::with_capacity(n);
    let mut xm = Vec::with_capacity(n);
    let mut pm = Vec::with_capacity(n);
    let mut np = Vec::with_capacity(n);
    let mut top: f64 = 0.0;
    let mut record = |s: &FockState| {
        amp.push(s.amplitude());
        np.push(s.photon_number());
        let b = s.phonon_amplitude();
        xm.push(core::f64::consts::SQRT_2 * b.re);
        pm.push(core::f64::consts::SQRT_2 * b.im);
        top = top.max(s.top_phonon_weight());
    };
    record(&state);
    for i in 1..n {
        let t0 = grid.nodes[i - 1];
        rk.advance(&mut state, t0, grid.nodes[i] - t0)?;
        record(&state);
    }
    let times = grid.nodes.clone();
    let xc: Vec<f64> = amp.iter().map(|z| core::f64::consts::SQRT_2 * z.re).collect();
    let mk = |v: SeriesValues, kind| ObservableSeries::new(times.clone(), v, kind, None, *params);
    Ok(OracleRun {
        x_c: mk(SeriesValues::Real(xc), ObservableKind::CavityQuadrature)?,
        n_p: mk(SeriesValues::Real(np), ObservableKind::PhotonNumber)?,
        x_m: mk(SeriesValues::Real(xm), ObservableKind::MechanicalX)?,
        p_m: mk(SeriesValues::Real(pm), ObservableKind::MechanicalP)?,
        amplitude: mk(SeriesValues::Complex(amp), ObservableKind::Amplitude)?,
        max_top_phonon: top,
    })
}
