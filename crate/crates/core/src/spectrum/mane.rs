//! Finite-horizon search for Mañé witnesses.
//!
//! For a rate `λ` and horizon `N` we look for a base point `θ` and a unit
//! vector `x₀` whose rescaled orbit `M_k x₀ = e^{−λk}Φ_k(θ)x₀` is still
//! large at `k = N` compared with its maximum over `0 ≤ k ≤ 2N`. A ratio near
//! one witnesses the absence of an exponential dichotomy at `λ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::bichar::{check_step, PhasePoint};
use crate::cocycle::Cocycle;
use crate::error::{input, Result};

/// Witness of the Mañé conditions at a finite horizon:
/// `profile[N] > c` and `profile[k] < C` for `0 ≤ k ≤ 2N`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ManeCertificate {
    pub theta: PhasePoint,
    pub x0: Vec<f64>,
    pub lambda: f64,
    pub horizon_n: usize,
    pub c: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C"))]
    pub upper: f64,
    /// `‖e^{−λk}Φ_k(θ)x₀‖` for `k = 0..=2N`.
    pub profile: Vec<f64>,
    /// `profile[N] / max_k profile[k]`.
    pub ratio: f64,
}

impl ManeCertificate {
    /// Re-check the defining inequalities on the stored profile.
    pub fn holds(&self) -> bool {
        let n = self.horizon_n;
        self.c > 0.0
            && self.upper >= self.c
            && self.profile.len() == 2 * n + 1
            && self.profile[n] > self.c
            && self.profile.iter().all(|&p| p < self.upper)
    }
}

/// Rescaled propagators `M_k = e^{−λk}Φ_k(θ)`, `k = 0..=2N`, at integer times.
fn rescaled_orbit(cocycle: &Cocycle, theta: &PhasePoint, lambda: f64, n: usize, step: f64) -> Result<Vec<DMatrix<f64>>> {
    let k = cocycle.fiber_dim();
    let mut out = Vec::with_capacity(2 * n + 1);
    let mut acc = DMatrix::<f64>::identity(k, k);
    out.push(acc.clone());
    let mut point = theta.clone();
    let decay = (-lambda).exp();
    for _ in 0..2 * n {
        let (phi, next) = cocycle.propagate_with_end(&point, 1.0, step)?;
        acc = phi * acc * decay;
        out.push(acc.clone());
        point = next;
    }
    Ok(out)
}

struct Ratio<'a> {
    orbit: &'a [DMatrix<f64>],
    mid: usize,
}

impl Ratio<'_> {
    fn norms(&self, x: &DVector<f64>) -> Vec<f64> {
        self.orbit.iter().map(|m| (m * x).norm()).collect()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let norms = self.norms(x);
        let top = norms.iter().copied().fold(0.0, f64::max);
        if top > 0.0 {
            norms[self.mid] / top
        } else {
            0.0
        }
    }

    /// Projected (sub)gradient ascent on the unit sphere with backtracking.
    fn refine(&self, mut x: DVector<f64>) -> (DVector<f64>, f64) {
        let mut best = self.value(&x);
        let mut alpha = 0.5;
        for _ in 0..60 {
            let norms = self.norms(&x);
            let (kmax, top) = norms.iter().copied().enumerate().fold((0, 0.0), |a, (i, v)| if v > a.1 { (i, v) } else { a });
            let mid = norms[self.mid];
            if top <= 0.0 || mid <= 0.0 {
                break;
            }
            let grad_of = |m: &DMatrix<f64>, nrm: f64| m.transpose() * (m * &x) / nrm;
            let g = grad_of(&self.orbit[self.mid], mid) / top - grad_of(&self.orbit[kmax], top) * (mid / (top * top));
            let tangent = &g - &x * x.dot(&g);
            if tangent.norm() < 1e-14 {
                break;
            }
            let dir = tangent.normalize();
            let mut improved = false;
            while alpha > 1e-10 {
                let cand = (&x + &dir * alpha).normalize();
                let v = self.value(&cand);
                if v > best {
                    x = cand;
                    best = v;
                    improved = true;
                    alpha *= 1.5;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (x, best)
    }
}

/// Deterministic starting directions on the unit sphere of `ℝᵏ`.
fn sphere_mesh(k: usize) -> Vec<DVector<f64>> {
    match k {
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..64)
            .map(|i| {
                let a = PI * i as f64 / 64.0;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let count = 200;
            let golden = PI * (3.0 - 5.0f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => (0..k)
            .flat_map(|i| {
                let mut e = DVector::zeros(k);
                e[i] = 1.0;
                let mut f = DVector::from_element(k, 1.0);
                f[i] = -1.0;
                [e, f.normalize()]
            })
            .collect(),
    }
}

/// Search `theta_grid` for a Mañé witness of `e^{−λt}Φ_t` at horizon `n`.
///
/// Candidates are the right singular vectors of `M_N` plus a sphere mesh,
/// each refined by projected gradient ascent of the defect ratio
/// `‖M_N x‖ / max_k ‖M_k x‖`. Returns the best witness whose ratio is at least
/// `ratio_threshold`, or `None`.
pub fn mane_search(
    cocycle: &Cocycle,
    lambda: f64,
    theta_grid: &[PhasePoint],
    n: usize,
    step: f64,
    ratio_threshold: f64,
) -> Result<Option<ManeCertificate>> {
    if n < 4 {
        return input("Mañé horizon N must be at least 4");
    }
    if !(ratio_threshold > 0.0 && ratio_threshold <= 1.0) {
        return input("ratio_threshold must lie in (0, 1]");
    }
    check_step(step)?;
    // (ratio, grid index, direction, orbit)
    type Best = (f64, usize, DVector<f64>, Vec<DMatrix<f64>>);
    let mut best: Option<Best> = None;
    for (gi, theta) in theta_grid.iter().enumerate() {
        let orbit = rescaled_orbit(cocycle, theta, lambda, n, step)?;
        let ratio = Ratio { orbit: &orbit, mid: n };
        let mut starts = sphere_mesh(cocycle.fiber_dim());
        let svd = orbit[n].clone().svd(false, true);
        if let Some(v_t) = svd.v_t {
            starts.extend(v_t.row_iter().map(|r| r.transpose().normalize()));
        }
        let mut scored: Vec<(f64, DVector<f64>)> = starts.into_iter().map(|x| (ratio.value(&x), x)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (_, x) in scored.into_iter().take(4) {
            let (x, v) = ratio.refine(x);
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, gi, x, orbit.clone()));
            }
        }
    }
    let Some((r, gi, x, orbit)) = best else { return Ok(None) };
    if r < ratio_threshold {
        return Ok(None);
    }
    let profile: Vec<f64> = orbit.iter().map(|m| (m * &x).norm()).collect();
    let top = profile.iter().copied().fold(0.0, f64::max);
    Ok(Some(ManeCertificate {
        theta: theta_grid[gi].clone(),
        x0: x.iter().copied().collect(),
        lambda,
        horizon_n: n,
        c: 0.99 * profile[n],
        upper: 1.01 * top,
        profile,
        ratio: r,
    }))
}

/// Which side of the pair (cocycle, adjoint) produced a witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ManeSide {
    None,
    Primal,
    Adjoint,
    Both,
}

/// Outcome of searching both a cocycle and its adjoint.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BilateralReport {
    pub lambda: f64,
    pub side: ManeSide,
    pub primal: Option<ManeCertificate>,
    pub adjoint: Option<ManeCertificate>,
}

impl BilateralReport {
    /// A witness on either side: evidence that `λ` is in the spectrum.
    pub fn found(&self) -> bool {
        self.side != ManeSide::None
    }
}

/// [`mane_search`] on the cocycle and on its adjoint.
pub fn mane_search_bilateral(
    cocycle: &Cocycle,
    lambda: f64,
    theta_grid: &[PhasePoint],
    n: usize,
    step: f64,
    ratio_threshold: f64,
) -> Result<BilateralReport> {
    let primal = mane_search(cocycle, lambda, theta_grid, n, step, ratio_threshold)?;
    let adjoint = mane_search(&cocycle.adjoint(), lambda, theta_grid, n, step, ratio_threshold)?;
    let side = match (&primal, &adjoint) {
        (Some(_), Some(_)) => ManeSide::Both,
        (Some(_), None) => ManeSide::Primal,
        (None, Some(_)) => ManeSide::Adjoint,
        (None, None) => ManeSide::None,
    };
    Ok(BilateralReport { lambda, side, primal, adjoint })
}
