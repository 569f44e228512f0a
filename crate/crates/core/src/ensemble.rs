//! Deterministic ensembles of base points.
//!
//! Points of `Tⁿ × Sⁿ⁻¹` come from a Halton sequence with a random
//! Cranley–Patterson shift drawn from a seeded ChaCha stream, so a given
//! `(dim, size, seed)` always yields the same ensemble on every platform.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bichar::PhasePoint;
use crate::error::{input, Result};

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// `size` shifted Halton points in `[0, 1)^d`.
pub fn halton(d: usize, size: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d == 0 || d > PRIMES.len() {
        return input("halton dimension must be between 1 and 8");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    Ok((1..=size as u64)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let u = radical_inverse(i, PRIMES[j]) + shift[j];
                    u - u.floor()
                })
                .collect()
        })
        .collect())
}

/// Map `u ∈ [0,1)^{n−1}` to a unit vector of `Sⁿ⁻¹` (`n ∈ {2, 3}`), uniformly.
fn sphere_point(n: usize, u: &[f64]) -> Vec<f64> {
    match n {
        1 => alloc::vec![1.0],
        2 => {
            let a = 2.0 * PI * u[0];
            alloc::vec![a.cos(), a.sin()]
        }
        _ => {
            let z = 1.0 - 2.0 * u[0];
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = 2.0 * PI * u[1];
            alloc::vec![r * a.cos(), r * a.sin(), z]
        }
    }
}

/// `size` low-discrepancy points of `Tⁿ × Sⁿ⁻¹`, preceded by `anchors`.
pub fn phase_ensemble(n: usize, size: usize, seed: u64, anchors: &[PhasePoint]) -> Result<Vec<PhasePoint>> {
    if !(1..=3).contains(&n) {
        return input("ensemble dimension must be 1, 2 or 3");
    }
    if anchors.iter().any(|a| a.dim() != n) {
        return input("anchor dimension does not match the flow");
    }
    if size == 0 && anchors.is_empty() {
        return input("ensemble must not be empty");
    }
    let mut out = anchors.to_vec();
    for u in halton(2 * n - 1, size, seed)? {
        let x: Vec<f64> = u[..n].iter().map(|v| 2.0 * PI * v).collect();
        out.push(PhasePoint::new(&x, &sphere_point(n, &u[n..]))?);
    }
    Ok(out)
}

/// Seeds at and around a point `x`: `x` itself and its `2n` axis neighbours at
/// distance `radius`, each paired with every coordinate direction for `η`.
pub fn anchors_near(x: &[f64], radius: f64) -> Result<Vec<PhasePoint>> {
    let n = x.len();
    let mut centers = alloc::vec![x.to_vec()];
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = x.to_vec();
            c[i] += sign * radius;
            centers.push(c);
        }
    }
    let mut out = Vec::with_capacity(centers.len() * n);
    for c in &centers {
        for j in 0..n {
            let mut eta = alloc::vec![0.0; n];
            eta[j] = 1.0;
            out.push(PhasePoint::new(c, &eta)?);
        }
    }
    Ok(out)
}

/// Evenly spaced clock times `τ_i = i·span/size`.
pub fn clock_ensemble(size: usize, span: f64) -> Vec<PhasePoint> {
    (0..size).map(|i| PhasePoint::clock(i as f64 * span / size as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_prefix() {
        let v: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, [0.5, 0.25, 0.75, 0.125]);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn ensemble_is_deterministic_and_on_the_sphere() {
        let a = phase_ensemble(3, 32, 7, &[]).unwrap();
        let b = phase_ensemble(3, 32, 7, &[]).unwrap();
        let c = phase_ensemble(3, 32, 8, &[]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for p in &a {
            assert!((p.eta.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.x.iter().all(|v| (0.0..2.0 * PI).contains(v)));
        }
    }

    #[test]
    fn anchors_come_first() {
        let anchors = anchors_near(&[0.0, 0.0], 1e-3).unwrap();
        assert_eq!(anchors.len(), 10);
        let e = phase_ensemble(2, 4, 0, &anchors).unwrap();
        assert_eq!(e.len(), 14);
        assert_eq!(e[0], anchors[0]);
        assert!(phase_ensemble(2, 0, 0, &[]).is_err());
        assert!(phase_ensemble(3, 4, 0, &anchors).is_err());
    }

    #[test]
    fn halton_is_well_spread() {
        let pts = halton(2, 256, 3).unwrap();
        for q in 0..4 {
            let lo = q as f64 / 4.0;
            let count = pts.iter().filter(|p| p[0] >= lo && p[0] < lo + 0.25).count();
            assert!((60..=68).contains(&count), "{count}");
        }
    }
}
