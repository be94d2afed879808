//! Quantum dynamics of a driven optomechanical cavity beyond linearization.
//!
//! The crate evaluates closed forms obtained by decomposing the system-reservoir
//! evolution into a pure-drive factor and an optomechanical factor, then averaging
//! the transformed cavity operator over a Gaussian (vacuum cavity, thermal mechanics)
//! initial state. Everything is cross-checked against [`oracle`], a dense
//! truncated-Fock Lindblad integrator.
//!
//! Units: ħ = k_B = 1. Rates are absolute angular frequencies; the scenario layer
//! normalises to κ = 1.
//!
//! Module map:
//!
//! * [`params`]: scenario constants, thermal occupation, the uniform time grid.
//! * [`correlators`]: drive displacements D₁, D₂, colored-noise kernels Γ_i, phases Θ, Θ′.
//! * [`gaussian`]: linear forms over the Gaussian variables and Wick averages of ordered
//!   exponentials with up to two linear insertions.
//! * [`engine`]: ⟨â⟩, X_c, n_P under the noise modes, weak-coupling sidebands, Δn_P, R_m,
//!   mechanical quadratures.
//! * [`oracle`]: Lindblad RK4 on H_cav ⊗ H_mech, time-ordered exponentials, decomposition checks.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

// Float methods come from num-traits in no_std builds; when std is linked the inherent
// methods win and the trait imports read as unused.
#[cfg(test)]
extern crate std;

pub mod correlators;
pub mod engine;
mod error;
pub mod gaussian;
pub mod oracle;
pub mod params;
pub mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
