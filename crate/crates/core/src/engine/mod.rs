//! Observables of the driven optomechanical cavity from the decomposed closed forms.
//!
//! The transformed cavity operator is averaged over the cavity vacuum first, which
//! removes â and the cavity reservoir noise. What remains is, per integration node
//! τ, an ordered product
//!
//! ```text
//! e^{−ig²Θ(τ)} e^{igA_P} e^{igA_X} K̂_m(t,τ) e^{igλB_P} e^{igλB_X} e^{−ig²λ²Θ′(τ)}
//! ```
//!
//! with A(τ) = ∫₀^τ e^{−κ(t−u)} K̂_m(t,u) du split into its P̂ and X̂ parts, and
//! B(τ) = ∫_τ^t Γ_c(u,τ) K̂_m(t,u) du. The Gaussian average is closed:
//! exp(q₀ + q₁λ + q₂λ²)·(σ₀ + σ₁λ). λ counts powers of Γ_c; [`NoiseMode`] decides
//! how it is treated. The cavity photon number pairs two such products, bra and
//! ket, with one K̂_m insertion each.

mod closed;
mod mech;
mod weak;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use closed::{Evaluator, PairTables, TableSet, MAX_PAIR_NODES};
pub use mech::{mechanical_quadratures, mechanical_quadratures_cached, mechanical_series};
pub use weak::{delta_np, noise_ratio_rm, sideband_sum, weak_coupling_amplitude, WeakCoupling};

use crate::params::{build_grid, SystemParams};
use crate::{Error, Result, C64};

/// Relative size of the highest-order term above which a truncation at order 4
/// is reported as not converged.
pub const CONVERGENCE_TOL: f64 = 1.0e-3;

/// n_P below this is a numerical-consistency failure.
pub const NEGATIVITY_TOL: f64 = -1.0e-8;

/// Treatment of the cavity colored noise Γ_c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    /// g-correction dropped: ⟨â⟩ = D₁(t).
    PureDrive,
    /// Γ_c ≡ 0 off the diagonal: no B-family exponentials, Θ′ = 0, D₂ = 0.
    GammaCZero,
    /// Γ_c series truncated at λ^order, order ∈ [1, 4].
    Full { order: u8 },
    /// λ = 1 exactly: the closed form with all orders resummed.
    Resummed,
}

impl NoiseMode {
    pub const DEFAULT_ORDER: u8 = 2;
    pub const MAX_ORDER: u8 = 4;

    pub fn full(order: u8) -> Result<Self> {
        if !(1..=Self::MAX_ORDER).contains(&order) {
            return Err(Error::InvalidMode(format!("full order must be in [1, 4], got {order}")));
        }
        Ok(NoiseMode::Full { order })
    }

    /// Full mode at the default order 2.
    pub fn full_default() -> Self {
        NoiseMode::Full { order: Self::DEFAULT_ORDER }
    }

    pub fn name(&self) -> String {
        match self {
            NoiseMode::PureDrive => "pure_drive".into(),
            NoiseMode::GammaCZero => "gamma_c_zero".into(),
            NoiseMode::Full { order } if *order == Self::DEFAULT_ORDER => "full".into(),
            NoiseMode::Full { order } => format!("full:{order}"),
            NoiseMode::Resummed => "resummed".into(),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pure_drive" | "pure" => Ok(NoiseMode::PureDrive),
            "gamma_c_zero" | "gcz" => Ok(NoiseMode::GammaCZero),
            "full" => Ok(NoiseMode::full_default()),
            "resummed" => Ok(NoiseMode::Resummed),
            other => {
                if let Some(k) = other.strip_prefix("full:") {
                    let order = k
                        .parse::<u8>()
                        .map_err(|_| Error::InvalidMode(format!("bad full order `{k}`")))?;
                    NoiseMode::full(order)
                } else {
                    Err(Error::InvalidMode(format!("unknown noise mode `{other}`")))
                }
            }
        }
    }
}

/// Which observable a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    Amplitude,
    CavityQuadrature,
    PhotonNumber,
    MechanicalX,
    MechanicalP,
}

impl ObservableKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObservableKind::Amplitude => "amp",
            ObservableKind::CavityQuadrature => "Xc",
            ObservableKind::PhotonNumber => "nP",
            ObservableKind::MechanicalX => "Xm",
            ObservableKind::MechanicalP => "Pm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesValues {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl SeriesValues {
    pub fn len(&self) -> usize {
        match self {
            SeriesValues::Real(v) => v.len(),
            SeriesValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Time-stamped observable values with the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub values: SeriesValues,
    pub kind: ObservableKind,
    pub mode: Option<NoiseMode>,
    pub params: SystemParams,
}

impl ObservableSeries {
    pub fn new(
        times: Vec<f64>,
        values: SeriesValues,
        kind: ObservableKind,
        mode: Option<NoiseMode>,
        params: SystemParams,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::GridMismatch { left: times.len(), right: values.len() });
        }
        let finite = match &values {
            SeriesValues::Real(v) => v.iter().all(|x| x.is_finite()),
            SeriesValues::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        };
        if !finite {
            return Err(Error::NonFinite("observable series"));
        }
        Ok(ObservableSeries { times, values, kind, mode, params })
    }

    /// Real samples; complex series yield their real part.
    pub fn real(&self) -> Vec<f64> {
        match &self.values {
            SeriesValues::Real(v) => v.clone(),
            SeriesValues::Complex(v) => v.iter().map(|z| z.re).collect(),
        }
    }
}

/// Regime warnings the caller may want to surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// E/κ above 0.1: the weak-drive approximation K̂_m^C ≈ K̂_m degrades.
    StrongDrive(f64),
    /// g/κ above 0.3 passed to the weak-coupling formulas.
    StrongCouplingForWeakLimit(f64),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::StrongDrive(r) => write!(f, "E/κ = {r} > 0.1: weak-drive closed form is unreliable"),
            Warning::StrongCouplingForWeakLimit(r) => {
                write!(f, "g/κ = {r} > 0.3: weak-coupling sideband formula is unreliable")
            }
        }
    }
}

/// Warnings for the closed-form observables at `p`.
pub fn regime_warnings(p: &SystemParams) -> Vec<Warning> {
    let mut w = Vec::new();
    if p.drive_e / p.kappa > 0.1 {
        w.push(Warning::StrongDrive(p.drive_e / p.kappa));
    }
    w
}

/// ⟨â⟩(t) in the interaction picture.
pub fn cavity_amplitude(p: &SystemParams, t: f64, mode: NoiseMode, resolution: f64) -> Result<C64> {
    let grid = build_grid(p.kappa, t, resolution)?;
    Evaluator::new(p, &grid)?.amplitude(mode)
}

/// X_c = ⟨â + â†⟩/√2 = √2 Re⟨â⟩.
pub fn cavity_quadrature(p: &SystemParams, t: f64, mode: NoiseMode, resolution: f64) -> Result<f64> {
    Ok(core::f64::consts::SQRT_2 * cavity_amplitude(p, t, mode, resolution)?.re)
}

/// n_P = ⟨â†â⟩(t).
pub fn photon_number(p: &SystemParams, t: f64, mode: NoiseMode, resolution: f64) -> Result<f64> {
    let grid = build_grid(p.kappa, t, resolution)?;
    Evaluator::new(p, &grid)?.photon_number(mode)
}

/// ⟨â⟩ at each requested time (each with its own kernel cache).
pub fn amplitude_series(p: &SystemParams, times: &[f64], mode: NoiseMode, resolution: f64) -> Result<ObservableSeries> {
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        values.push(if t == 0.0 { C64::new(0.0, 0.0) } else { cavity_amplitude(p, t, mode, resolution)? });
    }
    ObservableSeries::new(times.to_vec(), SeriesValues::Complex(values), ObservableKind::Amplitude, Some(mode), *p)
}

/// n_P at each requested time.
pub fn photon_series(p: &SystemParams, times: &[f64], mode: NoiseMode, resolution: f64) -> Result<ObservableSeries> {
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        values.push(if t == 0.0 { 0.0 } else { photon_number(p, t, mode, resolution)? });
    }
    ObservableSeries::new(times.to_vec(), SeriesValues::Real(values), ObservableKind::PhotonNumber, Some(mode), *p)
}
