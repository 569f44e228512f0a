//! Dynamical (Sacker–Sell) spectra of linear cocycles over bicharacteristic
//! flows of steady ideal fluids.
//!
//! The crate is `no_std` and only needs `alloc`. It provides
//!
//! * [`flows`]: steady Euler equilibria on the torus with analytic Jacobians;
//! * [`bichar`]: the particle/frequency transport `x' = u₀(x)`, `ξ' = −∂u₀ᵀξ`;
//! * [`cocycle`]: amplitude, stretch, product, rescaled, restricted and
//!   adjoint cocycles with finite-time propagators;
//! * [`spectrum`]: Lyapunov exponents, windowed-QR spectrum estimates, Mañé
//!   certificates and the interval arithmetic relating product spectra;
//! * [`oracle`]: closed-form and brute-force reference cocycles;
//! * [`ensemble`]: reproducible low-discrepancy seeds on `Tⁿ × Sⁿ⁻¹`.
#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bichar;
pub mod cocycle;
pub mod ensemble;
pub mod error;
pub mod flows;
pub mod oracle;
pub mod spectrum;

pub use bichar::{advance, flow_jacobian, BaseFlow, PhasePoint, TrajectorySample};
pub use cocycle::{AmplitudeForm, Cocycle};
pub use error::{Error, Result};
pub use flows::FlowField;
pub use spectrum::SpectrumEstimate;
