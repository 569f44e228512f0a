//! Interval bounds relating the spectra of a product cocycle, its factors,
//! and the predicted essential spectrum of the Euler semigroup.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use super::SpectrumEstimate;
use crate::error::{input, Result};

/// A gap of the product spectrum that escapes the admissible range.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GapViolation {
    pub gap: (f64, f64),
    /// `μmax^C + μmin^Φ`.
    pub lower: f64,
    /// `μmin^C + μmax^Φ`.
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GapReport {
    pub lower: f64,
    pub upper: f64,
    pub gaps: Vec<(f64, f64)>,
    pub violations: Vec<GapViolation>,
}

impl GapReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every gap point `ρ` of the product spectrum must satisfy
/// `μmax^C + μmin^Φ < ρ < μmin^C + μmax^Φ` (up to `tol`).
pub fn gap_bounds_check(sigma_c: &SpectrumEstimate, sigma_phi: &SpectrumEstimate, sigma_product: &SpectrumEstimate, tol: f64) -> Result<GapReport> {
    let (Some(c_lo), Some(c_hi), Some(p_lo), Some(p_hi)) = (sigma_c.min(), sigma_c.max(), sigma_phi.min(), sigma_phi.max()) else {
        return input("gap_bounds_check needs non-empty spectra");
    };
    if sigma_product.is_empty() {
        return input("gap_bounds_check needs non-empty spectra");
    }
    let lower = c_hi + p_lo;
    let upper = c_lo + p_hi;
    let gaps = sigma_product.gaps();
    let violations = gaps
        .iter()
        .filter(|&&(a, b)| upper <= lower || a < lower - tol || b > upper + tol)
        .map(|&gap| GapViolation { gap, lower, upper })
        .collect();
    Ok(GapReport { lower, upper, gaps, violations })
}

/// `m* = diam Σ_B / (λ_max − λ_min)`: for `|m| ≥ m*` the spectrum of `BX^m`
/// is predicted to have no gaps.
pub fn connectedness_threshold(sigma_b: &SpectrumEstimate, lambda_max: f64, lambda_min: f64) -> Result<f64> {
    if !(lambda_max > lambda_min) {
        return input("lambda_max must exceed lambda_min");
    }
    let Some(diam) = sigma_b.diameter() else {
        return input("sigma_b must be non-empty");
    };
    Ok(diam / (lambda_max - lambda_min))
}

/// Radii of the annuli `exp{tΣ}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AnnulusReport {
    pub t: f64,
    pub radii: Vec<(f64, f64)>,
    /// `[e^{t·min Σ}, e^{t·max Σ}]`.
    pub hull: (f64, f64),
    /// The radii are the predicted moduli of the essential spectrum, not
    /// only an inner bound: `Σ` is one interval and the connectedness
    /// condition holds.
    pub identity: bool,
}

pub fn essential_spectrum_annulus(sigma: &SpectrumEstimate, t: f64, condition_holds: bool) -> Result<AnnulusReport> {
    if !(t > 0.0) {
        return input("t must be positive");
    }
    let (Some(lo), Some(hi)) = (sigma.min(), sigma.max()) else {
        return input("sigma must be non-empty");
    };
    let radii = sigma.intervals().iter().map(|i| ((t * i.lo).exp(), (t * i.hi).exp())).collect();
    Ok(AnnulusReport { t, radii, hull: ((t * lo).exp(), (t * hi).exp()), identity: condition_holds && sigma.is_connected() })
}
