//! Finite-time spectral certificates from growth of a single orbit.
//!
//! Given `g1_k = n_k⁻¹ log‖T^{n_k} z‖` and `g2_k = n_k⁻¹ log‖T^{2n_k} z‖`, set
//! `λ₁ = lim inf g1` and `λ₁ + λ₂ = lim sup g2`. If `λ₁ ≤ λ₂` the interval
//! `[λ₁, λ₂]` meets the spectrum; otherwise `[λ₂, λ₁]` lies inside it. The
//! limits are estimated over the trailing half of the evidence, so this is an
//! estimate, not a proof.

use alloc::vec::Vec;

use nalgebra::DVector;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::bichar::PhasePoint;
use crate::cocycle::Cocycle;
use crate::error::{input, Result};

/// One evidence entry: `n`, growth rate at `n`, growth rate at `2n` (both
/// divided by `n`).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypoEvidence {
    pub n: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HypoConclusion {
    /// `λ₁ ≤ λ₂`: `[λ₁, λ₂]` intersects the spectrum.
    IntervalIntersectsSpectrum,
    /// `λ₂ < λ₁`: `[λ₂, λ₁]` is contained in the spectrum.
    IntervalContainedInSpectrum,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HypoCertificate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub conclusion: HypoConclusion,
    pub evidence: Vec<HypoEvidence>,
}

impl HypoCertificate {
    /// The certified interval, ordered.
    pub fn interval(&self) -> (f64, f64) {
        (self.lambda1.min(self.lambda2), self.lambda1.max(self.lambda2))
    }
}

/// Build a certificate from `(n_k, g1_k, g2_k)` triples.
pub fn hypo_certificate(evidence: &[(f64, f64, f64)]) -> Result<HypoCertificate> {
    if evidence.len() < 3 {
        return input("hypo_certificate needs at least 3 evidence entries");
    }
    if evidence.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return input("evidence n_k must be strictly increasing");
    }
    if evidence.iter().any(|e| !(e.0 > 0.0 && e.1.is_finite() && e.2.is_finite())) {
        return input("evidence must have positive n_k and finite growth rates");
    }
    let tail = &evidence[evidence.len() / 2..];
    let lambda1 = tail.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let sum = tail.iter().map(|e| e.2).fold(f64::NEG_INFINITY, f64::max);
    let lambda2 = sum - lambda1;
    let conclusion = if lambda1 <= lambda2 {
        HypoConclusion::IntervalIntersectsSpectrum
    } else {
        HypoConclusion::IntervalContainedInSpectrum
    };
    Ok(HypoCertificate {
        lambda1,
        lambda2,
        conclusion,
        evidence: evidence.iter().map(|&(n, g1, g2)| HypoEvidence { n, g1, g2 }).collect(),
    })
}

/// Measure the evidence for the orbit of `x` under `cocycle` from `theta` at
/// the times in `ns`.
pub fn hypo_evidence(cocycle: &Cocycle, theta: &PhasePoint, x: &[f64], ns: &[f64], step: f64) -> Result<Vec<(f64, f64, f64)>> {
    if x.len() != cocycle.fiber_dim() {
        return input("vector dimension does not match the cocycle");
    }
    let x = DVector::from_column_slice(x);
    if !(x.norm() > 0.0) {
        return input("vector must be non-zero");
    }
    let x = x.normalize();
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        if !(n > 0.0) {
            return input("evidence times must be positive");
        }
        let (phi, mid) = cocycle.propagate_with_end(theta, n, step)?;
        let y = phi * &x;
        let phi2 = cocycle.propagate(&mid, n, step)?;
        let z = phi2 * &y;
        out.push((n, y.norm().ln() / n, z.norm().ln() / n));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn constant(g1: f64, g2: f64) -> Vec<(f64, f64, f64)> {
        (1..=6).map(|k| (k as f64, g1, g2)).collect()
    }

    #[test]
    fn worked_cases() {
        let c = hypo_certificate(&constant(0.0, 0.0)).unwrap();
        assert_eq!(c.conclusion, HypoConclusion::IntervalIntersectsSpectrum);
        assert_eq!(c.interval(), (0.0, 0.0));
        let c = hypo_certificate(&constant(1.0, 1.0)).unwrap();
        assert_eq!((c.lambda1, c.lambda2), (1.0, 0.0));
        assert_eq!(c.conclusion, HypoConclusion::IntervalContainedInSpectrum);
        let c = hypo_certificate(&constant(-1.0, 1.0)).unwrap();
        assert_eq!((c.lambda1, c.lambda2), (-1.0, 2.0));
        assert_eq!(c.conclusion, HypoConclusion::IntervalIntersectsSpectrum);
    }

    #[test]
    fn uses_trailing_half() {
        let ev = [(1.0, -5.0, 9.0), (2.0, -5.0, 9.0), (3.0, 0.5, 1.0), (4.0, 0.4, 1.2)];
        let c = hypo_certificate(&ev).unwrap();
        assert_eq!(c.lambda1, 0.4);
        assert!((c.lambda2 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_evidence() {
        assert!(hypo_certificate(&[(1.0, 0.0, 0.0), (2.0, 0.0, 0.0)]).is_err());
        assert!(hypo_certificate(&[(1.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn evidence_from_constant_cocycle() {
        let c = Cocycle::constant(&DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -1.0])).unwrap();
        let ev = hypo_evidence(&c, &PhasePoint::clock(0.0), &[1.0, 0.0], &[1.0, 2.0, 4.0], 1e-2).unwrap();
        for (_, g1, g2) in &ev {
            assert!((g1 - 0.5).abs() < 1e-8 && (g2 - 1.0).abs() < 1e-8);
        }
        let cert = hypo_certificate(&ev).unwrap();
        assert!((cert.lambda1 - 0.5).abs() < 1e-8 && (cert.lambda2 - 0.5).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn conclusion_matches_ordering(g in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..12)) {
            let ev: Vec<_> = g.iter().enumerate().map(|(i, &(a, b))| ((i + 1) as f64, a, b)).collect();
            let c = hypo_certificate(&ev).unwrap();
            match c.conclusion {
                HypoConclusion::IntervalIntersectsSpectrum => prop_assert!(c.lambda1 <= c.lambda2),
                HypoConclusion::IntervalContainedInSpectrum => prop_assert!(c.lambda2 < c.lambda1),
            }
            let (lo, hi) = c.interval();
            prop_assert!(lo <= hi);
        }
    }
}
