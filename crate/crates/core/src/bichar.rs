//! Bicharacteristic transport `x' = u₀(x)`, `ξ' = −∂u₀ᵀξ` in projective form.
//!
//! The frequency is carried as a unit direction `η = ξ/|ξ|` plus the
//! accumulated log-stretch `s = log(|ξ(t)|/|ξ(0)|)`, so long horizons never
//! overflow. Integration is classical fixed-step RK4; negative times integrate
//! the negated vector field.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{input, Error, Result};
use crate::flows::{wrap_angle, FlowField};

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// A point `θ = (x, η)` of the base space plus the log-stretch accumulator.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    pub s: f64,
}

impl PhasePoint {
    /// Fresh point with `s = 0`; `eta` is normalized.
    pub fn new(x: &[f64], eta: &[f64]) -> Result<Self> {
        if x.len() != eta.len() {
            return input(format!("x has {} components but eta has {}", x.len(), eta.len()));
        }
        let norm = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return input("eta must be a finite non-zero vector");
        }
        Ok(PhasePoint { x: x.to_vec(), eta: eta.iter().map(|v| v / norm).collect(), s: 0.0 })
    }

    /// Base point of the time-shift flow used by explicitly time-dependent
    /// test cocycles: `x = [τ]`, `η = [1]`.
    pub fn clock(tau: f64) -> Self {
        PhasePoint { x: vec![tau], eta: vec![1.0], s: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub(crate) fn to_state(&self, out: &mut [f64]) {
        let n = self.dim();
        out[..n].copy_from_slice(&self.x);
        out[n..2 * n].copy_from_slice(&self.eta);
        out[2 * n] = self.s;
    }

    pub(crate) fn from_state(n: usize, y: &[f64]) -> Self {
        PhasePoint { x: y[..n].to_vec(), eta: y[n..2 * n].to_vec(), s: y[2 * n] }
    }
}

/// One sample of a discretized trajectory.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrajectorySample {
    pub t: f64,
    pub point: PhasePoint,
}

/// The flow on the base space over which a cocycle lives.
#[derive(Clone, Debug)]
pub enum BaseFlow {
    /// Bicharacteristic flow of a steady velocity field.
    Bichar(FlowField),
    /// Pure time shift `τ ↦ τ + t` on `x = [τ]`; `η` and `s` stay fixed.
    Clock,
}

impl BaseFlow {
    pub fn dim(&self) -> usize {
        match self {
            BaseFlow::Bichar(f) => f.dim(),
            BaseFlow::Clock => 1,
        }
    }

    pub fn flow(&self) -> Option<&FlowField> {
        match self {
            BaseFlow::Bichar(f) => Some(f),
            BaseFlow::Clock => None,
        }
    }

    pub(crate) fn check_point(&self, p: &PhasePoint) -> Result<()> {
        let n = self.dim();
        if p.x.len() != n || p.eta.len() != n {
            return input(format!("phase point dimension {} does not match base dimension {n}", p.x.len()));
        }
        Ok(())
    }

    /// Right-hand side of the base system on the packed state `[x, η, s]`.
    #[inline]
    pub(crate) fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        match self {
            BaseFlow::Clock => {
                dy[0] = 1.0;
                dy[1] = 0.0;
                dy[2] = 0.0;
            }
            BaseFlow::Bichar(flow) => {
                let n = flow.dim();
                let mut jac = [0.0; 9];
                flow.velocity_into(&y[..n], &mut dy[..n]);
                flow.jacobian_into(&y[..n], &mut jac[..n * n]);
                let eta = &y[n..2 * n];
                // g = ∂u₀ᵀ η
                let mut g = [0.0; 3];
                for (j, gj) in g.iter_mut().enumerate().take(n) {
                    *gj = (0..n).map(|i| jac[i * n + j] * eta[i]).sum();
                }
                let norm2: f64 = eta.iter().map(|e| e * e).sum();
                let rate = (0..n).map(|i| g[i] * eta[i]).sum::<f64>() / norm2;
                for i in 0..n {
                    dy[n + i] = -g[i] + rate * eta[i];
                }
                dy[2 * n] = -rate;
            }
        }
    }

    /// Projection back onto the state manifold after each step.
    #[inline]
    pub(crate) fn normalize(&self, y: &mut [f64]) {
        if let BaseFlow::Bichar(flow) = self {
            let n = flow.dim();
            for xi in y[..n].iter_mut() {
                *xi = wrap_angle(*xi);
            }
            let norm = y[n..2 * n].iter().map(|e| e * e).sum::<f64>().sqrt();
            for e in y[n..2 * n].iter_mut() {
                *e /= norm;
            }
        }
    }

    /// `φ_t(θ)` for any sign of `t`.
    pub fn flow_to(&self, start: &PhasePoint, t: f64, step: f64) -> Result<PhasePoint> {
        self.check_point(start)?;
        check_step(step)?;
        let n = self.dim();
        let mut y = vec![0.0; 2 * n + 1];
        start.to_state(&mut y);
        rk4(&mut y, t, step, |y, dy| self.rhs(y, dy), |y| self.normalize(y), |_, _| ())?;
        Ok(PhasePoint::from_state(n, &y))
    }
}

pub(crate) fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return input(format!("step must be positive and finite, got {step}"));
    }
    Ok(())
}

/// Step schedule for integrating over `|t|` with nominal step `h`: the number
/// of full steps and the length of a trailing partial step (possibly 0).
pub(crate) fn schedule(t: f64, h: f64) -> (usize, f64) {
    let span = t.abs();
    let q = span / h;
    let nearest = q.round();
    if (q - nearest).abs() < 1e-9 * q.max(1.0) {
        (nearest as usize, 0.0)
    } else {
        let full = q.floor();
        (full as usize, span - full * h)
    }
}

/// Fixed-step RK4 over time `t` (either sign) on a flat state vector.
///
/// `post` runs after every step (wrapping, renormalization); `observe`
/// receives the elapsed signed time and the state after each step.
pub(crate) fn rk4(
    y: &mut [f64],
    t: f64,
    h: f64,
    mut rhs: impl FnMut(&[f64], &mut [f64]),
    mut post: impl FnMut(&mut [f64]),
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<()> {
    let d = y.len();
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let (full, partial) = schedule(t, h);
    let mut buf = vec![0.0; 5 * d];
    let (k1, rest) = buf.split_at_mut(d);
    let (k2, rest) = rest.split_at_mut(d);
    let (k3, rest) = rest.split_at_mut(d);
    let (k4, tmp) = rest.split_at_mut(d);

    let mut elapsed = 0.0;
    let steps = full + usize::from(partial > 0.0);
    for step_idx in 0..steps {
        let dt = if step_idx < full { h } else { partial };
        let sdt = sign * dt;
        rhs(y, k1);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * sdt * k1[i];
        }
        rhs(tmp, k2);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * sdt * k2[i];
        }
        rhs(tmp, k3);
        for i in 0..d {
            tmp[i] = y[i] + sdt * k3[i];
        }
        rhs(tmp, k4);
        for i in 0..d {
            tmp[i] = y[i] + sdt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if tmp.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { last_good_time: sign * elapsed });
        }
        y.copy_from_slice(tmp);
        post(y);
        elapsed = if step_idx + 1 == steps { t.abs() } else { elapsed + dt };
        observe(sign * elapsed, y);
    }
    Ok(())
}

/// Integrate the bicharacteristic system from `start` for time `t_final`.
///
/// Returns one sample per RK4 step (plus the start), ordered by increasing
/// `t`; for negative `t_final` the list therefore ends at the start point.
pub fn advance(flow: &FlowField, start: &PhasePoint, t_final: f64, step: f64) -> Result<Vec<TrajectorySample>> {
    let base = BaseFlow::Bichar(flow.clone());
    base.check_point(start)?;
    check_step(step)?;
    if (start.eta.iter().map(|e| e * e).sum::<f64>().sqrt() - 1.0).abs() > 1e-6 {
        return input("start eta must be a unit vector");
    }
    let n = flow.dim();
    let mut y = vec![0.0; 2 * n + 1];
    start.to_state(&mut y);
    let mut samples = vec![TrajectorySample { t: 0.0, point: start.clone() }];
    rk4(&mut y, t_final, step, |y, dy| base.rhs(y, dy), |y| base.normalize(y), |t, y| {
        samples.push(TrajectorySample { t, point: PhasePoint::from_state(n, y) })
    })?;
    if t_final < 0.0 {
        samples.reverse();
    }
    Ok(samples)
}

/// `∂χ_t(x)`, the Jacobian of the particle flow, from the variational
/// equation `M' = ∂u₀(χ_t x) M`, `M(0) = I`.
pub fn flow_jacobian(flow: &FlowField, x: &[f64], t: f64, step: f64) -> Result<DMatrix<f64>> {
    let n = flow.dim();
    if x.len() != n {
        return input(format!("point has {} components, flow is {n}-dimensional", x.len()));
    }
    check_step(step)?;
    let mut y = vec![0.0; n + n * n];
    y[..n].copy_from_slice(x);
    for i in 0..n {
        y[n + i * n + i] = 1.0;
    }
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let mut jac = [0.0; 9];
        flow.velocity_into(&y[..n], &mut dy[..n]);
        flow.jacobian_into(&y[..n], &mut jac[..n * n]);
        let m = &y[n..];
        for i in 0..n {
            for j in 0..n {
                dy[n + i * n + j] = (0..n).map(|k| jac[i * n + k] * m[k * n + j]).sum();
            }
        }
    };
    rk4(&mut y, t, step, rhs, |y| y[..n].iter_mut().for_each(|v| *v = wrap_angle(*v)), |_, _| ())?;
    Ok(DMatrix::from_row_slice(n, n, &y[n..]))
}
