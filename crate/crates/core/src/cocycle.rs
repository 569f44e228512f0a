//! Linear cocycles over a [`BaseFlow`] and their finite-time propagators.
//!
//! A cocycle `Φ_t(θ)` is either generated by a matrix ODE `M' = A(φ_τθ) M`
//! integrated jointly with the base trajectory (amplitude, custom), or built
//! structurally from other cocycles (stretch, product, rescaling, adjoint,
//! restriction to `η^⊥`).

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::bichar::{check_step, rk4, BaseFlow, PhasePoint};
use crate::error::{input, Result};
use crate::flows::FlowField;

/// Which amplitude equation generates the amplitude cocycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AmplitudeForm {
    /// `b' = −∂u₀ b + 2⟨∂u₀ b, η⟩η`; conserves `⟨b, ξ⟩`.
    #[default]
    Projected,
    /// `b' = ∂u₀ b + ⟨∂u₀ b, η⟩η`.
    Verbatim,
}

/// Matrix generator `A(x, η)` written row-major into the output slice.
pub type GeneratorFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
enum Kind {
    Amplitude(AmplitudeForm),
    Restricted(AmplitudeForm),
    Stretch(f64),
    Product(Box<Cocycle>, Box<Cocycle>),
    Rescaled(Box<Cocycle>, f64),
    Adjoint(Box<Cocycle>),
    Custom(Arc<GeneratorFn>),
}

/// A linear cocycle handle. Immutable; evaluation is pure.
#[derive(Clone)]
pub struct Cocycle {
    base: BaseFlow,
    kind: Kind,
    fiber_dim: usize,
}

impl fmt::Debug for Cocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cocycle").field("kind", &self.describe()).field("fiber_dim", &self.fiber_dim).finish()
    }
}

/// `A_B(x, η)` for the chosen amplitude form, row-major into `out`.
#[inline]
fn amplitude_matrix(form: AmplitudeForm, jac: &[f64], eta: &[f64], out: &mut [f64]) {
    let n = eta.len();
    let norm2: f64 = eta.iter().map(|e| e * e).sum();
    // w = ∂u₀ᵀ η, so (η ηᵀ ∂u₀)_{ij} = η_i w_j
    let mut w = [0.0; 3];
    for (j, wj) in w.iter_mut().enumerate().take(n) {
        *wj = (0..n).map(|k| eta[k] * jac[k * n + j]).sum::<f64>() / norm2;
    }
    let (sign, coef) = match form {
        AmplitudeForm::Projected => (-1.0, 2.0),
        AmplitudeForm::Verbatim => (1.0, 1.0),
    };
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = sign * jac[i * n + j] + coef * eta[i] * w[j];
        }
    }
}

/// The amplitude generator at a phase point.
pub fn amplitude_generator(flow: &FlowField, point: &PhasePoint, form: AmplitudeForm) -> Result<DMatrix<f64>> {
    let n = flow.dim();
    if point.x.len() != n || point.eta.len() != n {
        return input("phase point dimension does not match the flow");
    }
    let norm = point.eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return input(format!("|eta| = {norm} is not 1"));
    }
    let mut jac = [0.0; 9];
    flow.jacobian_into(&point.x, &mut jac[..n * n]);
    let mut out = vec![0.0; n * n];
    amplitude_matrix(form, &jac[..n * n], &point.eta, &mut out);
    Ok(DMatrix::from_row_slice(n, n, &out))
}

/// Deterministic orthonormal basis of `η^⊥`, as the columns of an
/// `n × (n−1)` matrix.
///
/// In 2D this is `(−η₂, η₁)`. In 3D the two coordinate axes least aligned
/// with `η` (ties to the lower index) are Gram–Schmidt orthonormalized
/// against `η`, and the last column is flipped if needed so that
/// `det[η | frame] > 0`.
pub fn orthogonal_frame(eta: &[f64]) -> Result<DMatrix<f64>> {
    let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    let e: Vec<f64> = eta.iter().map(|v| v / norm).collect();
    match e.len() {
        2 => Ok(DMatrix::from_column_slice(2, 1, &[-e[1], e[0]])),
        3 => {
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| e[a].abs().partial_cmp(&e[b].abs()).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
            let mut cols: Vec<[f64; 3]> = Vec::with_capacity(2);
            for &axis in &order[..2] {
                let mut v = [0.0; 3];
                v[axis] = 1.0;
                let mut against: Vec<[f64; 3]> = vec![[e[0], e[1], e[2]]];
                against.extend(cols.iter().copied());
                for u in &against {
                    let d: f64 = (0..3).map(|i| v[i] * u[i]).sum();
                    for i in 0..3 {
                        v[i] -= d * u[i];
                    }
                }
                let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                cols.push([v[0] / vn, v[1] / vn, v[2] / vn]);
            }
            let (a, b) = (cols[0], cols[1]);
            let det = e[0] * (a[1] * b[2] - a[2] * b[1]) - e[1] * (a[0] * b[2] - a[2] * b[0]) + e[2] * (a[0] * b[1] - a[1] * b[0]);
            let b = if det < 0.0 { [-b[0], -b[1], -b[2]] } else { b };
            Ok(DMatrix::from_column_slice(3, 2, &[a[0], a[1], a[2], b[0], b[1], b[2]]))
        }
        n => input(format!("no orthogonal frame for dimension {n}")),
    }
}

fn same_base(a: &BaseFlow, b: &BaseFlow) -> bool {
    match (a, b) {
        (BaseFlow::Clock, BaseFlow::Clock) => true,
        (BaseFlow::Bichar(f), BaseFlow::Bichar(g)) => f.name() == g.name() && f.params() == g.params() && f.dim() == g.dim(),
        _ => false,
    }
}

impl Cocycle {
    /// Amplitude cocycle `B` on the full fiber `ℝⁿ`.
    pub fn amplitude(flow: &FlowField, form: AmplitudeForm) -> Self {
        Cocycle { base: BaseFlow::Bichar(flow.clone()), kind: Kind::Amplitude(form), fiber_dim: flow.dim() }
    }

    /// Amplitude cocycle restricted to the invariant bundle `b ⊥ ξ`, expressed
    /// in the frames of [`orthogonal_frame`].
    pub fn restricted_amplitude(flow: &FlowField, form: AmplitudeForm) -> Result<Self> {
        if flow.dim() < 2 {
            return input("restriction to eta-orthogonal needs dimension >= 2");
        }
        Ok(Cocycle { base: BaseFlow::Bichar(flow.clone()), kind: Kind::Restricted(form), fiber_dim: flow.dim() - 1 })
    }

    /// Scalar stretch cocycle `X^m_t(θ) = (|ξ(t)|/|ξ(0)|)^m`.
    pub fn stretch(flow: &FlowField, m: f64) -> Self {
        Cocycle { base: BaseFlow::Bichar(flow.clone()), kind: Kind::Stretch(m), fiber_dim: 1 }
    }

    /// Cocycle generated by an arbitrary `A(x, η)` over `base`.
    pub fn custom(base: BaseFlow, fiber_dim: usize, generator: Arc<GeneratorFn>) -> Result<Self> {
        if fiber_dim == 0 {
            return input("fiber dimension must be positive");
        }
        Ok(Cocycle { base, kind: Kind::Custom(generator), fiber_dim })
    }

    /// Constant generator over the clock: `Φ_t = e^{tA}`.
    pub fn constant(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return input("generator must be square");
        }
        let n = a.nrows();
        let rows: Vec<f64> = a.transpose().iter().copied().collect();
        Self::custom(BaseFlow::Clock, n, Arc::new(move |_x: &[f64], _e: &[f64], out: &mut [f64]| out.copy_from_slice(&rows)))
    }

    /// Explicitly time-dependent generator over the clock base, `x = [τ]`.
    pub fn time_dependent(fiber_dim: usize, generator: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Result<Self> {
        Self::custom(BaseFlow::Clock, fiber_dim, Arc::new(move |x: &[f64], _e: &[f64], out: &mut [f64]| generator(x[0], out)))
    }

    /// Pointwise product with another cocycle over the same base; one of the
    /// two factors must be scalar.
    pub fn product(&self, other: &Cocycle) -> Result<Self> {
        if !same_base(&self.base, &other.base) {
            return input("product factors must live over the same base flow");
        }
        if self.direction() != other.direction() {
            return input("product factors must run over the same time direction");
        }
        let (scalar, matrix) = match (self.fiber_dim, other.fiber_dim) {
            (1, _) => (self, other),
            (_, 1) => (other, self),
            _ => return input("one product factor must be scalar"),
        };
        Ok(Cocycle {
            base: self.base.clone(),
            kind: Kind::Product(Box::new(scalar.clone()), Box::new(matrix.clone())),
            fiber_dim: matrix.fiber_dim,
        })
    }

    /// `e^{−λt} Φ_t`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        Cocycle { base: self.base.clone(), kind: Kind::Rescaled(Box::new(self.clone()), lambda), fiber_dim: self.fiber_dim }
    }

    /// `Ψ_t(θ) = Φ_t(φ_{−t}θ)ᵀ`, a cocycle over the inverse flow.
    pub fn adjoint(&self) -> Self {
        Cocycle { base: self.base.clone(), kind: Kind::Adjoint(Box::new(self.clone())), fiber_dim: self.fiber_dim }
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn base(&self) -> &BaseFlow {
        &self.base
    }

    /// `+1` if the cocycle lives over `φ_t`, `−1` over `φ_{−t}`.
    pub fn direction(&self) -> f64 {
        match &self.kind {
            Kind::Adjoint(inner) => -inner.direction(),
            Kind::Rescaled(inner, _) => inner.direction(),
            Kind::Product(_, m) => m.direction(),
            _ => 1.0,
        }
    }

    pub fn is_amplitude(&self) -> bool {
        matches!(self.kind, Kind::Amplitude(_))
    }

    /// Short human-readable description of the construction.
    pub fn describe(&self) -> alloc::string::String {
        match &self.kind {
            Kind::Amplitude(f) => format!("amplitude({f:?})"),
            Kind::Restricted(f) => format!("restricted_amplitude({f:?})"),
            Kind::Stretch(m) => format!("stretch(m={m})"),
            Kind::Product(a, b) => format!("product({}, {})", a.describe(), b.describe()),
            Kind::Rescaled(c, l) => format!("rescaled({}, lambda={l})", c.describe()),
            Kind::Adjoint(c) => format!("adjoint({})", c.describe()),
            Kind::Custom(_) => format!("custom(dim={})", self.fiber_dim),
        }
    }

    /// Move `θ` along this cocycle's own base flow for time `t`.
    pub fn base_step(&self, theta: &PhasePoint, t: f64, step: f64) -> Result<PhasePoint> {
        self.base.flow_to(theta, self.direction() * t, step)
    }

    /// `Φ_t(θ)` for `t ≥ 0`.
    pub fn propagate(&self, theta: &PhasePoint, t: f64, step: f64) -> Result<DMatrix<f64>> {
        Ok(self.propagate_with_end(theta, t, step)?.0)
    }

    /// `Φ_t(θ)` together with the base point reached, `θ·t` along this
    /// cocycle's base flow.
    pub fn propagate_with_end(&self, theta: &PhasePoint, t: f64, step: f64) -> Result<(DMatrix<f64>, PhasePoint)> {
        if !(t >= 0.0 && t.is_finite()) {
            return input(format!("propagation time must be finite and non-negative, got {t}"));
        }
        check_step(step)?;
        self.base.check_point(theta)?;
        self.eval(theta, t, step)
    }

    fn eval(&self, theta: &PhasePoint, t: f64, step: f64) -> Result<(DMatrix<f64>, PhasePoint)> {
        match &self.kind {
            Kind::Amplitude(form) => {
                let form = *form;
                self.integrate(theta, t, step, move |jac, eta, out| amplitude_matrix(form, jac, eta, out))
            }
            Kind::Restricted(form) => {
                let form = *form;
                let (full, end) = self.integrate(theta, t, step, move |jac, eta, out| amplitude_matrix(form, jac, eta, out))?;
                let restricted = orthogonal_frame(&end.eta)?.transpose() * full * orthogonal_frame(&theta.eta)?;
                Ok((restricted, end))
            }
            Kind::Custom(generator) => {
                let generator = generator.clone();
                self.integrate_custom(theta, t, step, &*generator)
            }
            Kind::Stretch(m) => {
                let end = self.base.flow_to(theta, t, step)?;
                let value = (m * (end.s - theta.s)).exp();
                Ok((DMatrix::from_element(1, 1, value), end))
            }
            Kind::Product(scalar, matrix) => {
                let (mm, end) = matrix.eval(theta, t, step)?;
                let sv = match (&scalar.kind, matrix.direction() > 0.0) {
                    // same forward trajectory: reuse its accumulated stretch
                    (Kind::Stretch(m), true) => (m * (end.s - theta.s)).exp(),
                    _ => scalar.eval(theta, t, step)?.0[(0, 0)],
                };
                Ok((mm * sv, end))
            }
            Kind::Rescaled(inner, lambda) => {
                let (m, end) = inner.eval(theta, t, step)?;
                Ok((m * (-lambda * t).exp(), end))
            }
            Kind::Adjoint(inner) => {
                let start = inner.base_step(theta, -t, step)?;
                let (m, _) = inner.eval(&start, t, step)?;
                Ok((m.transpose(), start))
            }
        }
    }

    /// Joint RK4 of the base state and `M' = A M` where `A` depends on the
    /// flow Jacobian and `η` (bicharacteristic base only).
    fn integrate(
        &self,
        theta: &PhasePoint,
        t: f64,
        step: f64,
        generator: impl Fn(&[f64], &[f64], &mut [f64]),
    ) -> Result<(DMatrix<f64>, PhasePoint)> {
        let flow = match &self.base {
            BaseFlow::Bichar(f) => f,
            BaseFlow::Clock => return input("amplitude cocycles need a bicharacteristic base"),
        };
        let n = flow.dim();
        self.joint(theta, t, step, n, |y, a| {
            let mut jac = [0.0; 9];
            flow.jacobian_into(&y[..n], &mut jac[..n * n]);
            generator(&jac[..n * n], &y[n..2 * n], a);
        })
    }

    fn integrate_custom(&self, theta: &PhasePoint, t: f64, step: f64, generator: &GeneratorFn) -> Result<(DMatrix<f64>, PhasePoint)> {
        let n = self.base.dim();
        self.joint(theta, t, step, self.fiber_dim, |y, a| generator(&y[..n], &y[n..2 * n], a))
    }

    fn joint(
        &self,
        theta: &PhasePoint,
        t: f64,
        step: f64,
        k: usize,
        generator: impl Fn(&[f64], &mut [f64]),
    ) -> Result<(DMatrix<f64>, PhasePoint)> {
        let n = self.base.dim();
        let off = 2 * n + 1;
        let mut y = vec![0.0; off + k * k];
        theta.to_state(&mut y);
        for i in 0..k {
            y[off + i * k + i] = 1.0;
        }
        let mut a = vec![0.0; k * k];
        let base = &self.base;
        let rhs = |y: &[f64], dy: &mut [f64]| {
            base.rhs(&y[..off], &mut dy[..off]);
            generator(y, &mut a);
            let m = &y[off..];
            let dm = &mut dy[off..];
            for i in 0..k {
                for j in 0..k {
                    let mut acc = 0.0;
                    for l in 0..k {
                        acc += a[i * k + l] * m[l * k + j];
                    }
                    dm[i * k + j] = acc;
                }
            }
        };
        rk4(&mut y, t, step, rhs, |y| base.normalize(&mut y[..off]), |_, _| ())?;
        Ok((DMatrix::from_row_slice(k, k, &y[off..]), PhasePoint::from_state(n, &y[..off])))
    }

    /// `F(η(t))ᵀ B_t(θ) F(η(0))` for an amplitude cocycle.
    pub fn restrict_to_orthogonal(&self, theta: &PhasePoint, t: f64, step: f64) -> Result<DMatrix<f64>> {
        let form = match self.kind {
            Kind::Amplitude(form) => form,
            _ => return input("restriction is defined for amplitude cocycles only"),
        };
        let flow = self.base.flow().expect("amplitude cocycles live over a bicharacteristic base");
        Cocycle::restricted_amplitude(flow, form)?.propagate(theta, t, step)
    }

    /// Frobenius norm of `Φ_{t+s}(θ) − Φ_t(θ·s) Φ_s(θ)`.
    pub fn identity_residual(&self, theta: &PhasePoint, t: f64, s: f64, step: f64) -> Result<f64> {
        let whole = self.propagate(theta, t + s, step)?;
        let (first, mid) = self.propagate_with_end(theta, s, step)?;
        let second = self.propagate(&mid, t, step)?;
        Ok((whole - second * first).norm())
    }
}
