//! Dynamical spectrum estimation and the interval arithmetic built on it.

mod bounds;
mod hypo;
mod mane;
mod qr;

use alloc::vec::Vec;

use crate::error::{input, Result};

pub use bounds::{
    connectedness_threshold, essential_spectrum_annulus, gap_bounds_check, AnnulusReport, GapReport, GapViolation,
};
pub use hypo::{hypo_certificate, hypo_evidence, HypoCertificate, HypoConclusion, HypoEvidence};
pub use mane::{mane_search, mane_search_bilateral, BilateralReport, ManeCertificate, ManeSide};
pub use qr::{
    assemble_estimate, lyapunov_exponents, sacker_sell_estimate, windowed_exponents, EstimatorConfig, WindowSample,
};

/// A closed interval of exponential rates (per unit time).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Number of windowed exponents supporting this interval.
    pub samples: usize,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo: lo.min(hi), hi: lo.max(hi), samples: 0 }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// Settings an estimate was produced with; echoed into serialized output.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateParams {
    pub horizon: f64,
    pub window: f64,
    pub ensemble_size: usize,
    pub merge_tol: f64,
}

/// Sorted, pairwise disjoint closed intervals approximating a dynamical
/// spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumEstimate {
    intervals: Vec<Interval>,
    pub params: EstimateParams,
}

/// Sort and merge intervals whose gap is below `merge_tol`.
pub fn merge_intervals(mut raw: Vec<Interval>, merge_tol: f64) -> Vec<Interval> {
    raw.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Interval> = Vec::with_capacity(raw.len());
    for iv in raw {
        match out.last_mut() {
            Some(last) if iv.lo - last.hi < merge_tol || iv.lo <= last.hi => {
                last.hi = last.hi.max(iv.hi);
                last.samples += iv.samples;
            }
            _ => out.push(iv),
        }
    }
    out
}

impl SpectrumEstimate {
    /// Merge raw intervals into an estimate.
    pub fn from_raw(raw: Vec<Interval>, params: EstimateParams) -> Self {
        SpectrumEstimate { intervals: merge_intervals(raw, params.merge_tol), params }
    }

    /// Convenience constructor from `(lo, hi)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)], merge_tol: f64) -> Self {
        let raw = pairs.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect();
        Self::from_raw(raw, EstimateParams { merge_tol, ..Default::default() })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|i| (i.lo, i.hi)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn min(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.lo)
    }

    pub fn max(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.hi)
    }

    /// `max − min`, or `None` when empty.
    pub fn diameter(&self) -> Option<f64> {
        Some(self.max()? - self.min()?)
    }

    pub fn is_connected(&self) -> bool {
        self.intervals.len() == 1
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(x, tol))
    }

    /// Open gaps between consecutive intervals.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals.windows(2).map(|w| (w[0].hi, w[1].lo)).collect()
    }

    /// Every interval of `self` lies inside some interval of `other` widened
    /// by `tol` on both sides.
    pub fn is_subset_of(&self, other: &SpectrumEstimate, tol: f64) -> bool {
        self.intervals
            .iter()
            .all(|a| other.intervals.iter().any(|b| a.lo >= b.lo - tol && a.hi <= b.hi + tol))
    }

    /// Shift every interval by `delta`.
    pub fn translated(&self, delta: f64) -> Self {
        let intervals = self.intervals.iter().map(|i| Interval { lo: i.lo + delta, hi: i.hi + delta, samples: i.samples }).collect();
        SpectrumEstimate { intervals, params: self.params }
    }

    /// Multiply every rate by `m` (the spectrum of a power of a scalar cocycle).
    pub fn scaled(&self, m: f64) -> Self {
        let raw = self
            .intervals
            .iter()
            .map(|i| Interval { lo: (m * i.lo).min(m * i.hi), hi: (m * i.lo).max(m * i.hi), samples: i.samples })
            .collect();
        Self::from_raw(raw, self.params)
    }

    /// Widen every interval by `delta` on both sides and re-merge.
    pub fn inflated(&self, delta: f64) -> Self {
        let raw = self.intervals.iter().map(|i| Interval { lo: i.lo - delta, hi: i.hi + delta, samples: i.samples }).collect();
        Self::from_raw(raw, self.params)
    }
}

/// Arithmetic sum `{a + b}` of two spectra, merged with the larger of the two
/// merge tolerances.
pub fn minkowski_sum(a: &SpectrumEstimate, b: &SpectrumEstimate) -> Result<SpectrumEstimate> {
    if a.is_empty() || b.is_empty() {
        return input("minkowski_sum needs two non-empty spectra");
    }
    let mut raw = Vec::with_capacity(a.len() * b.len());
    for x in a.intervals() {
        for y in b.intervals() {
            raw.push(Interval { lo: x.lo + y.lo, hi: x.hi + y.hi, samples: 0 });
        }
    }
    let params = EstimateParams { merge_tol: a.params.merge_tol.max(b.params.merge_tol), ..a.params };
    Ok(SpectrumEstimate::from_raw(raw, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn minkowski_examples() {
        let s = minkowski_sum(&SpectrumEstimate::from_pairs(&[(-1.0, 1.0)], 0.0), &SpectrumEstimate::from_pairs(&[(2.0, 2.0)], 0.0)).unwrap();
        assert_eq!(s.pairs(), vec![(1.0, 3.0)]);
        let s = minkowski_sum(
            &SpectrumEstimate::from_pairs(&[(0.0, 1.0), (3.0, 4.0)], 0.0),
            &SpectrumEstimate::from_pairs(&[(-0.25, 0.25)], 0.0),
        )
        .unwrap();
        assert_eq!(s.pairs(), vec![(-0.25, 1.25), (2.75, 4.25)]);
        let s = minkowski_sum(
            &SpectrumEstimate::from_pairs(&[(0.0, 1.0)], 0.0),
            &SpectrumEstimate::from_pairs(&[(0.5, 1.0), (1.5, 2.0)], 0.0),
        )
        .unwrap();
        assert_eq!(s.pairs(), vec![(0.5, 3.0)]);
        assert!(minkowski_sum(&SpectrumEstimate::from_pairs(&[], 0.0), &s).is_err());
    }

    #[test]
    fn merge_respects_tolerance() {
        let s = SpectrumEstimate::from_pairs(&[(0.0, 1.0), (1.04, 2.0), (2.2, 3.0)], 0.05);
        assert_eq!(s.pairs(), vec![(0.0, 2.0), (2.2, 3.0)]);
        assert_eq!(s.gaps(), vec![(2.0, 2.2)]);
        let s = SpectrumEstimate::from_pairs(&[(0.0, 1.0), (1.05, 2.0)], 0.05);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn scaling_flips_negative_multipliers() {
        let s = SpectrumEstimate::from_pairs(&[(-1.0, 0.5)], 0.0).scaled(-2.0);
        assert_eq!(s.pairs(), vec![(-1.0, 2.0)]);
    }

    proptest! {
        #[test]
        fn merged_intervals_are_sorted_and_disjoint(
            raw in proptest::collection::vec((-10.0f64..10.0, 0.0f64..3.0), 1..40),
            tol in 0.0f64..0.5,
        ) {
            let pairs: Vec<(f64, f64)> = raw.iter().map(|&(lo, w)| (lo, lo + w)).collect();
            let s = SpectrumEstimate::from_pairs(&pairs, tol);
            for w in s.intervals().windows(2) {
                prop_assert!(w[0].lo <= w[0].hi);
                prop_assert!(w[1].lo - w[0].hi >= tol);
            }
            for &(lo, hi) in &pairs {
                prop_assert!(s.contains(lo, 0.0) && s.contains(hi, 0.0));
            }
        }

        #[test]
        fn minkowski_contains_pointwise_sums(
            a in proptest::collection::vec((-5.0f64..5.0, 0.0f64..1.0), 1..6),
            b in proptest::collection::vec((-5.0f64..5.0, 0.0f64..1.0), 1..6),
            u in 0.0f64..1.0, v in 0.0f64..1.0,
        ) {
            let pa: Vec<(f64, f64)> = a.iter().map(|&(l, w)| (l, l + w)).collect();
            let pb: Vec<(f64, f64)> = b.iter().map(|&(l, w)| (l, l + w)).collect();
            let sum = minkowski_sum(&SpectrumEstimate::from_pairs(&pa, 0.0), &SpectrumEstimate::from_pairs(&pb, 0.0)).unwrap();
            let x = pa[0].0 + u * (pa[0].1 - pa[0].0);
            let y = pb[pb.len() - 1].0 + v * (pb[pb.len() - 1].1 - pb[pb.len() - 1].0);
            prop_assert!(sum.contains(x + y, 1e-12));
        }
    }
}
