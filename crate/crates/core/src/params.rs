//! Scenario constants, thermal occupation and the uniform time grid.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Largest accepted T/ω_m in [`derive_nth`]; beyond it n_th ≈ T/ω_m is meaningless
/// for any truncated oracle.
pub const MAX_TEMPERATURE_RATIO: f64 = 1.0e4;

/// Default node cap for [`TimeGrid`].
pub const DEFAULT_MAX_NODES: usize = 200_000;

/// Default κ·dt.
pub const DEFAULT_RESOLUTION: f64 = 0.02;

/// How the mechanical bath occupation was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureMode {
    /// n_th given directly.
    Occupation(f64),
    /// Bath temperature in energy units (k_B = 1); n_th derived from ω_m.
    Temperature(f64),
}

/// Thermal phonon number 1/(e^{ω_m/T} − 1), zero at T = 0.
pub fn derive_nth(omega_m: f64, temperature: f64) -> Result<f64> {
    if !(omega_m > 0.0) {
        return Err(Error::Domain(format!("omega_m must be > 0, got {omega_m}")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::Domain(format!("temperature must be ≥ 0, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    if temperature > MAX_TEMPERATURE_RATIO * omega_m {
        return Err(Error::Range(format!(
            "T/ω_m = {} exceeds the cap {MAX_TEMPERATURE_RATIO}",
            temperature / omega_m
        )));
    }
    Ok(1.0 / (omega_m / temperature).exp_m1())
}

/// Physical constants of one scenario, in absolute angular-frequency units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub g: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub omega_m: f64,
    pub delta0: f64,
    pub drive_e: f64,
    pub n_th: f64,
    pub temperature_mode: TemperatureMode,
}

impl SystemParams {
    /// Validated constructor. `n_th` follows from `temperature_mode`.
    pub fn new(
        g: f64,
        kappa: f64,
        gamma_m: f64,
        omega_m: f64,
        delta0: f64,
        drive_e: f64,
        temperature_mode: TemperatureMode,
    ) -> Result<Self> {
        let finite = [g, kappa, gamma_m, omega_m, delta0, drive_e];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter in {finite:?}")));
        }
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("kappa must be > 0, got {kappa}")));
        }
        if !(omega_m > 0.0) {
            return Err(Error::Domain(format!("omega_m must be > 0, got {omega_m}")));
        }
        if gamma_m < 0.0 {
            return Err(Error::Domain(format!("gamma_m must be ≥ 0, got {gamma_m}")));
        }
        if drive_e < 0.0 {
            return Err(Error::Domain(format!("drive E must be ≥ 0, got {drive_e}")));
        }
        let n_th = match temperature_mode {
            TemperatureMode::Occupation(n) => {
                if !(n >= 0.0) || !n.is_finite() {
                    return Err(Error::Domain(format!("n_th must be ≥ 0, got {n}")));
                }
                n
            }
            TemperatureMode::Temperature(t) => derive_nth(omega_m, t)?,
        };
        Ok(SystemParams { g, kappa, gamma_m, omega_m, delta0, drive_e, n_th, temperature_mode })
    }

    /// Build from the dimensionless ratios used in the figure captions, with κ = 1.
    ///
    /// `q` is the quality factor ω_m/γ_m; `q = ∞` gives γ_m = 0.
    pub fn from_ratios(
        g_over_kappa: f64,
        omega_m_over_kappa: f64,
        q: f64,
        delta0_over_omega_m: f64,
        e_over_kappa: f64,
        temperature_mode: TemperatureMode,
    ) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::Domain(format!("quality factor Q must be > 0, got {q}")));
        }
        let temperature_mode = match temperature_mode {
            // scenario files give T in units of ω_m
            TemperatureMode::Temperature(t) => TemperatureMode::Temperature(t * omega_m_over_kappa),
            other => other,
        };
        Self::new(
            g_over_kappa,
            1.0,
            omega_m_over_kappa / q,
            omega_m_over_kappa,
            delta0_over_omega_m * omega_m_over_kappa,
            e_over_kappa,
            temperature_mode,
        )
    }

    /// ω_m/γ_m, infinite without mechanical damping.
    pub fn quality_factor(&self) -> f64 {
        if self.gamma_m == 0.0 {
            f64::INFINITY
        } else {
            self.omega_m / self.gamma_m
        }
    }

    pub fn with_delta0(mut self, delta0: f64) -> Self {
        self.delta0 = delta0;
        self
    }

    pub fn with_drive(mut self, drive_e: f64) -> Self {
        self.drive_e = drive_e;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_gamma_m(mut self, gamma_m: f64) -> Self {
        self.gamma_m = gamma_m;
        self
    }

    /// True when two parameter sets share every Δ₀- and E-independent constant.
    pub fn same_kernels(&self, other: &SystemParams) -> bool {
        self.kappa == other.kappa
            && self.gamma_m == other.gamma_m
            && self.omega_m == other.omega_m
            && self.n_th == other.n_th
    }
}

/// Resolution and memory limits of [`build_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLimits {
    pub max_nodes: usize,
}

impl Default for GridLimits {
    fn default() -> Self {
        GridLimits { max_nodes: DEFAULT_MAX_NODES }
    }
}

/// Uniform discretisation of [0, t_end].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub nodes: Vec<f64>,
}

impl TimeGrid {
    /// Grid with exactly `n_steps` intervals.
    pub fn with_steps(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Domain(format!("t_end must be > 0, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::Domain("grid needs at least one interval".into()));
        }
        let nodes = crate::quad::uniform_nodes(t_end, n_steps);
        Ok(TimeGrid { t_end, n_steps, dt: t_end / n_steps as f64, nodes })
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same end time, half the step.
    pub fn refined(&self) -> Self {
        Self::with_steps(self.t_end, 2 * self.n_steps).expect("refining a valid grid")
    }
}

/// Grid on [0, t_end] with n_steps = ⌈κ·t_end/resolution⌉.
pub fn build_grid(kappa: f64, t_end: f64, resolution: f64) -> Result<TimeGrid> {
    build_grid_with(kappa, t_end, resolution, GridLimits::default())
}

pub fn build_grid_with(
    kappa: f64,
    t_end: f64,
    resolution: f64,
    limits: GridLimits,
) -> Result<TimeGrid> {
    if !(resolution > 0.0) {
        return Err(Error::Domain(format!("resolution must be > 0, got {resolution}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be > 0, got {t_end}")));
    }
    let ratio = kappa * t_end / resolution;
    // shave rounding noise so that 10/0.02 gives 500, not 501
    let steps = (ratio * (1.0 - 4.0 * f64::EPSILON)).ceil().max(1.0);
    if steps + 1.0 > limits.max_nodes as f64 {
        return Err(Error::MemoryCap {
            requested: if steps < 1e18 { steps as usize + 1 } else { usize::MAX },
            cap: limits.max_nodes,
        });
    }
    TimeGrid::with_steps(t_end, steps as usize)
}
