//! Steady Euler equilibria on the flat torus with closed-form Jacobians.
//!
//! Every velocity field here is divergence-free and (for the catalog flows)
//! a steady solution of the incompressible Euler equations. Coordinates are
//! radians on `[0, 2π)ⁿ`; all evaluations wrap their input first.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{input, Result};

/// Names accepted by [`FlowField::from_catalog`].
pub const CATALOG: &[&str] = &["shear", "cellular", "abc"];

/// Wrap an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(v: f64) -> f64 {
    let r = v - TAU * (v / TAU).floor();
    // rounding can land exactly on 2π; NaN passes through for the caller to catch
    if (0.0..TAU).contains(&r) || r.is_nan() {
        r
    } else {
        0.0
    }
}

/// Signature of a user-supplied field evaluator writing into `out`.
pub type FieldFn = fn(&[f64], &mut [f64]);

#[derive(Clone, Debug)]
enum FlowKind {
    /// `u = (U(y), 0)` with `U(y) = Σ aₖ sin(ky) + bₖ cos(ky)`, k = 1, 2, ...
    Shear { sin: Vec<f64>, cos: Vec<f64> },
    /// Stream function `ψ = amp · sin x₁ sin x₂`, `u = (−∂₂ψ, ∂₁ψ)`.
    Cellular { amp: f64 },
    Abc { a: f64, b: f64, c: f64 },
    Custom { dim: usize, velocity: FieldFn, jacobian: FieldFn },
}

/// An analytic steady velocity field `u₀` on `Tⁿ` together with `∂u₀`.
///
/// Immutable after construction and cheap to clone.
#[derive(Clone, Debug)]
pub struct FlowField {
    name: String,
    params: BTreeMap<String, f64>,
    kind: FlowKind,
}

impl FlowField {
    /// Parallel shear `U(y) = sin y`.
    pub fn shear() -> Self {
        Self::shear_fourier(&[1.0], &[])
    }

    /// Parallel shear with profile `U(y) = Σₖ sin_coeffs[k-1] sin(ky) + cos_coeffs[k-1] cos(ky)`.
    pub fn shear_fourier(sin_coeffs: &[f64], cos_coeffs: &[f64]) -> Self {
        let mut params = BTreeMap::new();
        for (k, a) in sin_coeffs.iter().enumerate() {
            params.insert(format!("a{}", k + 1), *a);
        }
        for (k, b) in cos_coeffs.iter().enumerate() {
            params.insert(format!("b{}", k + 1), *b);
        }
        FlowField {
            name: "shear".into(),
            params,
            kind: FlowKind::Shear { sin: sin_coeffs.to_vec(), cos: cos_coeffs.to_vec() },
        }
    }

    /// Cellular flow with stream function `sin x₁ sin x₂`.
    pub fn cellular() -> Self {
        Self::cellular_with(1.0)
    }

    pub fn cellular_with(amp: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("amp".to_string(), amp);
        FlowField { name: "cellular".into(), params, kind: FlowKind::Cellular { amp } }
    }

    /// Arnold–Beltrami–Childress flow
    /// `u = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`.
    pub fn abc(a: f64, b: f64, c: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("A".to_string(), a);
        params.insert("B".to_string(), b);
        params.insert("C".to_string(), c);
        FlowField { name: "abc".into(), params, kind: FlowKind::Abc { a, b, c } }
    }

    /// A field given by plain function pointers. Not part of the catalog; the
    /// caller is responsible for `jacobian` matching `velocity`.
    pub fn custom(name: &str, dim: usize, velocity: FieldFn, jacobian: FieldFn) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return input(format!("custom flow dimension must be 1..=3, got {dim}"));
        }
        Ok(FlowField {
            name: name.into(),
            params: BTreeMap::new(),
            kind: FlowKind::Custom { dim, velocity, jacobian },
        })
    }

    /// Build a catalog flow by name. Missing parameters take their defaults;
    /// unknown parameter names are rejected.
    pub fn from_catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        let check_keys = |allowed: &dyn Fn(&str) -> bool| -> Result<()> {
            for k in params.keys() {
                if !allowed(k) {
                    return input(format!("unknown parameter `{k}` for flow `{name}`"));
                }
            }
            Ok(())
        };
        match name {
            "shear" => {
                let is_coeff = |k: &str| {
                    (k.starts_with('a') || k.starts_with('b'))
                        && k.len() > 1
                        && k[1..].parse::<usize>().map(|n| n >= 1).unwrap_or(false)
                };
                check_keys(&is_coeff)?;
                if params.is_empty() {
                    return Ok(Self::shear());
                }
                let order = params.keys().map(|k| k[1..].parse::<usize>().unwrap_or(0)).max().unwrap_or(0);
                let mut sin = vec![0.0; order];
                let mut cos = vec![0.0; order];
                for (k, v) in params {
                    let idx = k[1..].parse::<usize>().unwrap_or(1) - 1;
                    if k.starts_with('a') {
                        sin[idx] = *v;
                    } else {
                        cos[idx] = *v;
                    }
                }
                Ok(Self::shear_fourier(&sin, &cos))
            }
            "cellular" => {
                check_keys(&|k| k == "amp")?;
                Ok(Self::cellular_with(get("amp", 1.0)))
            }
            "abc" => {
                check_keys(&|k| matches!(k, "A" | "B" | "C"))?;
                Ok(Self::abc(get("A", 1.0), get("B", 1.0), get("C", 1.0)))
            }
            other => input(format!("unknown flow `{other}`; available flows: {}", CATALOG.join(", "))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FlowKind::Shear { .. } | FlowKind::Cellular { .. } => 2,
            FlowKind::Abc { .. } => 3,
            FlowKind::Custom { dim, .. } => *dim,
        }
    }

    /// `u₀(x)`; `x` is wrapped onto the torus.
    pub fn eval_velocity(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.dim()];
        self.velocity_into(x, &mut out);
        Ok(out)
    }

    /// `∂u₀(x)` with entry `(i, j) = ∂u₀ᵢ/∂xⱼ`.
    pub fn eval_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        self.jacobian_into(x, &mut out);
        Ok(DMatrix::from_row_slice(n, n, &out))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return input(format!("point has {} components, flow `{}` is {}-dimensional", x.len(), self.name, self.dim()));
        }
        Ok(())
    }

    /// Unchecked velocity evaluation into a preallocated buffer.
    pub(crate) fn velocity_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            FlowKind::Shear { sin, cos } => {
                let (u, _) = shear_profile(sin, cos, x[1]);
                out[0] = u;
                out[1] = 0.0;
            }
            FlowKind::Cellular { amp } => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                out[0] = -amp * s1 * c2;
                out[1] = amp * c1 * s2;
            }
            FlowKind::Abc { a, b, c } => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                let (sz, cz) = x[2].sin_cos();
                out[0] = a * sz + c * cy;
                out[1] = b * sx + a * cz;
                out[2] = c * sy + b * cx;
            }
            FlowKind::Custom { dim, velocity, .. } => {
                let mut w = [0.0; 3];
                for (wi, xi) in w.iter_mut().zip(x).take(*dim) {
                    *wi = wrap_angle(*xi);
                }
                velocity(&w[..*dim], out)
            }
        }
    }

    /// Unchecked row-major Jacobian evaluation into a preallocated buffer.
    pub(crate) fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            FlowKind::Shear { sin, cos } => {
                let (_, du) = shear_profile(sin, cos, x[1]);
                out.copy_from_slice(&[0.0, du, 0.0, 0.0]);
            }
            FlowKind::Cellular { amp } => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                out[0] = -amp * c1 * c2;
                out[1] = amp * s1 * s2;
                out[2] = -amp * s1 * s2;
                out[3] = amp * c1 * c2;
            }
            FlowKind::Abc { a, b, c } => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                let (sz, cz) = x[2].sin_cos();
                out.copy_from_slice(&[
                    0.0,
                    -c * sy,
                    a * cz,
                    b * cx,
                    0.0,
                    -a * sz,
                    -b * sx,
                    c * cy,
                    0.0,
                ]);
            }
            FlowKind::Custom { dim, jacobian, .. } => {
                let mut w = [0.0; 3];
                for (wi, xi) in w.iter_mut().zip(x).take(*dim) {
                    *wi = wrap_angle(*xi);
                }
                jacobian(&w[..*dim], out)
            }
        }
    }

    /// Advection term `(u₀·∇)u₀ = ∂u₀ u₀` at `x`.
    fn advection(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let mut u = [0.0; 3];
        let mut jac = [0.0; 9];
        self.velocity_into(x, &mut u[..n]);
        self.jacobian_into(x, &mut jac[..n * n]);
        for i in 0..n {
            out[i] = (0..n).map(|j| jac[i * n + j] * u[j]).sum();
        }
    }

    /// Residual of the steady Euler equations: the curl of `(u₀·∇)u₀` sampled
    /// on a uniform `grid_nⁿ` grid. A steady solution has `(u₀·∇)u₀ = −∇p`, so
    /// the curl vanishes.
    pub fn check_steady_euler(&self, grid_n: usize, tol: f64) -> Result<SteadyReport> {
        if grid_n < 8 {
            return input(format!("grid_n must be at least 8, got {grid_n}"));
        }
        let n = self.dim();
        let mut max_residual: f64 = 0.0;
        for_each_grid_point(n, grid_n, |x| {
            let r = curl_norm(n, x, |p, out| self.advection(p, out));
            max_residual = max_residual.max(r);
        });
        Ok(SteadyReport { grid_n, tol, max_residual, pass: max_residual <= tol })
    }

    /// Largest `|tr ∂u₀|` over a uniform grid.
    pub fn max_divergence(&self, grid_n: usize) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        let mut jac = [0.0; 9];
        for_each_grid_point(n, grid_n, |x| {
            self.jacobian_into(x, &mut jac[..n * n]);
            let tr: f64 = (0..n).map(|i| jac[i * n + i]).sum();
            worst = worst.max(tr.abs());
        });
        worst
    }

    /// Max-entry deviation between the closed-form Jacobian and second-order
    /// central differences of the velocity with step `h`.
    pub fn jacobian_fd_error(&self, x: &[f64], h: f64) -> Result<f64> {
        self.check_dim(x)?;
        let n = self.dim();
        let exact = self.eval_jacobian(x)?;
        let mut worst: f64 = 0.0;
        let mut up = [0.0; 3];
        let mut um = [0.0; 3];
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            self.velocity_into(&xp, &mut up[..n]);
            self.velocity_into(&xm, &mut um[..n]);
            for i in 0..n {
                let fd = (up[i] - um[i]) / (2.0 * h);
                worst = worst.max((fd - exact[(i, j)]).abs());
            }
        }
        Ok(worst)
    }
}

/// Outcome of [`FlowField::check_steady_euler`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SteadyReport {
    pub grid_n: usize,
    pub tol: f64,
    pub max_residual: f64,
    pub pass: bool,
}

fn shear_profile(sin: &[f64], cos: &[f64], y: f64) -> (f64, f64) {
    let mut u = 0.0;
    let mut du = 0.0;
    for (k, a) in sin.iter().enumerate() {
        let kf = (k + 1) as f64;
        let (s, c) = (kf * y).sin_cos();
        u += a * s;
        du += a * kf * c;
    }
    for (k, b) in cos.iter().enumerate() {
        let kf = (k + 1) as f64;
        let (s, c) = (kf * y).sin_cos();
        u += b * c;
        du -= b * kf * s;
    }
    (u, du)
}

fn for_each_grid_point(n: usize, grid_n: usize, mut f: impl FnMut(&[f64])) {
    let total = grid_n.pow(n as u32);
    let mut x = [0.0; 3];
    for idx in 0..total {
        let mut rem = idx;
        for xi in x.iter_mut().take(n) {
            *xi = TAU * (rem % grid_n) as f64 / grid_n as f64;
            rem /= grid_n;
        }
        f(&x[..n]);
    }
}

/// Norm of the curl of a vector field at `x` using fourth-order central
/// differences (scalar vorticity in 2D, Euclidean norm in 3D).
fn curl_norm(n: usize, x: &[f64], field: impl Fn(&[f64], &mut [f64])) -> f64 {
    const H: f64 = 1e-3;
    // d[i][j] = ∂ field_i / ∂x_j
    let mut d = [[0.0; 3]; 3];
    let mut buf = [0.0; 3];
    let mut shifted = [0.0; 3];
    for j in 0..n {
        let mut acc = [0.0; 3];
        for (offset, weight) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            shifted[..n].copy_from_slice(x);
            shifted[j] += offset * H;
            field(&shifted[..n], &mut buf[..n]);
            for i in 0..n {
                acc[i] += weight * buf[i];
            }
        }
        for i in 0..n {
            d[i][j] = acc[i] / (12.0 * H);
        }
    }
    match n {
        2 => (d[1][0] - d[0][1]).abs(),
        3 => {
            let c = [d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]];
            (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
        }
        _ => 0.0,
    }
}
