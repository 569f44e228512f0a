//! Reference cocycles with closed-form propagators or spectra.
//!
//! Nothing here calls the RK4 integrator: propagators are matrix
//! exponentials, products of midpoint exponentials, or hand-derived formulas.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::{DMatrix, Vector2};
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::bichar::PhasePoint;
use crate::cocycle::{AmplitudeForm, Cocycle};
use crate::error::{input, Error, Result};
use crate::flows::FlowField;
use crate::spectrum::{EstimateParams, Interval, SpectrumEstimate};

/// Matrix-valued function of time.
pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
/// Scalar rate function of time.
pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

// Published Padé thresholds, kept to the printed digits.
#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539398330063230e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068)];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn pade_solve(u: DMatrix<f64>, v: DMatrix<f64>) -> DMatrix<f64> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is nonsingular for scaled arguments")
}

/// Matrix exponential by scaling and squaring with a Padé approximant whose
/// degree is chosen from the 1-norm.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let norm = one_norm(a);
    let a2 = a * a;
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let mut pow = id.clone();
            let mut u = &id * b[1];
            let mut v = &id * b[0];
            for k in 1..=m / 2 {
                pow = &pow * &a2;
                u += &pow * b[2 * k + 1];
                v += &pow * b[2 * k];
            }
            return pade_solve(a * u, v);
        }
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a / 2f64.powi(s);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let u_in = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_in;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let mut r = pade_solve(u, v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn check_fine_step(fine_step: f64) -> Result<()> {
    if !(fine_step > 0.0 && fine_step <= 1e-4) {
        return input("fine_step must lie in (0, 1e-4]");
    }
    Ok(())
}

/// `Φ(t0 → t0 + t)` as the ordered product of `exp(A(τ + h/2)·h)`.
pub fn brute_force_propagator_from(generator: &dyn Fn(f64) -> DMatrix<f64>, t0: f64, t: f64, fine_step: f64) -> Result<DMatrix<f64>> {
    check_fine_step(fine_step)?;
    if !(t >= 0.0) {
        return input("t must be non-negative");
    }
    let n = generator(t0).nrows();
    let mut phi = DMatrix::<f64>::identity(n, n);
    let steps = (t / fine_step).ceil() as usize;
    if steps == 0 {
        return Ok(phi);
    }
    let h = t / steps as f64;
    for k in 0..steps {
        let mid = t0 + (k as f64 + 0.5) * h;
        phi = expm(&(generator(mid) * h)) * phi;
    }
    Ok(phi)
}

/// [`brute_force_propagator_from`] starting at time 0.
pub fn brute_force_propagator(generator: &dyn Fn(f64) -> DMatrix<f64>, t: f64, fine_step: f64) -> Result<DMatrix<f64>> {
    brute_force_propagator_from(generator, 0.0, t, fine_step)
}

/// Composite Simpson rule on `[a, b]` with `2·⌈(b−a)/(2h)⌉` panels.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, h: f64) -> f64 {
    let panels = 2 * (((b - a).abs() / (2.0 * h)).ceil() as usize).max(1);
    let dx = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * dx);
    }
    acc * dx / 3.0
}

/// Reference cocycles.
#[derive(Clone)]
pub enum OracleCocycle {
    /// `Φ_t = e^{tA}`.
    Constant(DMatrix<f64>),
    /// Periodic generator `A(t + period) = A(t)`.
    Floquet { generator: MatrixFn, period: f64 },
    /// Projected amplitude cocycle of the shear flow `U(y) = sin y` along the
    /// trajectory through height `y0` with initial direction `eta0`.
    ShearClosedForm { y0: f64, eta0: [f64; 2] },
    /// `diag(a_i(t))`; the spectrum seen by windows of length `window` whose
    /// start ranges over `starts` is the range of the window averages.
    DiagonalTimeVarying { rates: Vec<RateFn>, window: f64, starts: (f64, f64) },
    /// Arbitrary `A(t)`; propagated by brute force only.
    TimeDependent(MatrixFn),
}

impl fmt::Debug for OracleCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleCocycle::Constant(a) => write!(f, "Constant({a:?})"),
            OracleCocycle::Floquet { period, .. } => write!(f, "Floquet {{ period: {period} }}"),
            OracleCocycle::ShearClosedForm { y0, eta0 } => write!(f, "ShearClosedForm {{ y0: {y0}, eta0: {eta0:?} }}"),
            OracleCocycle::DiagonalTimeVarying { rates, window, starts } => {
                write!(f, "DiagonalTimeVarying {{ dim: {}, window: {window}, starts: {starts:?} }}", rates.len())
            }
            OracleCocycle::TimeDependent(_) => write!(f, "TimeDependent"),
        }
    }
}

const FINE: f64 = 1e-4;

impl OracleCocycle {
    /// `A = [[0, 1 + cos t], [0, 0]]`, period `2π`, monodromy `[[1, 2π], [0, 1]]`.
    pub fn floquet_fixture() -> Self {
        OracleCocycle::Floquet {
            generator: Arc::new(|t: f64| DMatrix::from_row_slice(2, 2, &[0.0, 1.0 + t.cos(), 0.0, 0.0])),
            period: 2.0 * PI,
        }
    }

    /// Infinitesimal rotation.
    pub fn rotation() -> Self {
        OracleCocycle::Constant(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]))
    }

    pub fn dim(&self) -> usize {
        match self {
            OracleCocycle::Constant(a) => a.nrows(),
            OracleCocycle::Floquet { generator, .. } | OracleCocycle::TimeDependent(generator) => generator(0.0).nrows(),
            OracleCocycle::ShearClosedForm { .. } => 2,
            OracleCocycle::DiagonalTimeVarying { rates, .. } => rates.len(),
        }
    }

    /// Generator `A(t)` for the explicitly time-dependent kinds.
    fn generator_at(&self, t: f64) -> Option<DMatrix<f64>> {
        match self {
            OracleCocycle::Constant(a) => Some(a.clone()),
            OracleCocycle::Floquet { generator, .. } | OracleCocycle::TimeDependent(generator) => Some(generator(t)),
            OracleCocycle::DiagonalTimeVarying { rates, .. } => {
                Some(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(rates.len(), rates.iter().map(|r| r(t)))))
            }
            OracleCocycle::ShearClosedForm { .. } => None,
        }
    }

    /// Monodromy `Φ(0 → period)` of a Floquet oracle.
    pub fn monodromy(&self) -> Result<DMatrix<f64>> {
        match self {
            OracleCocycle::Floquet { generator, period } => brute_force_propagator(&|t| generator(t), *period, FINE),
            _ => Err(Error::Unsupported("monodromy is defined for Floquet oracles only".into())),
        }
    }

    /// `Φ(0 → τ)` for a Floquet oracle: `Φ(0 → r)·M^k` with `τ = k·period + r`.
    fn floquet_from_zero(generator: &MatrixFn, period: f64, tau: f64, monodromy: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let k = (tau / period).floor();
        let r = tau - k * period;
        let partial = brute_force_propagator(&|t| generator(t), r, FINE)?;
        Ok(partial * monodromy.pow(k as u32))
    }

    /// Exact propagator from time (or base point) `t0` over duration `t ≥ 0`.
    pub fn exact_propagator_from(&self, t0: f64, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0) {
            return input("t must be non-negative");
        }
        match self {
            OracleCocycle::Constant(a) => Ok(expm(&(a * t))),
            OracleCocycle::Floquet { generator, period } => {
                if !(t0 >= 0.0) {
                    return input("Floquet start time must be non-negative");
                }
                let m = self.monodromy()?;
                let end = Self::floquet_from_zero(generator, *period, t0 + t, &m)?;
                let start = Self::floquet_from_zero(generator, *period, t0, &m)?;
                start
                    .try_inverse()
                    .map(|inv| end * inv)
                    .ok_or(Error::Conditioning { time: t0, value: 0.0 })
            }
            OracleCocycle::ShearClosedForm { y0, eta0 } => {
                let c = y0.cos();
                let xi0 = Vector2::new(eta0[0], eta0[1]);
                let at = |tau: f64| Vector2::new(xi0[0], xi0[1] - c * xi0[0] * tau);
                let (xa, xb) = (at(t0), at(t0 + t));
                let perp = |v: Vector2<f64>| Vector2::new(-v[1], v[0]);
                // ⟨ξ, b⟩ is conserved and d(ξ × b)/dt = cos(y0)·⟨ξ, b⟩.
                let b = (xb * xa.transpose() + perp(xb) * (perp(xa) + xa * (c * t)).transpose()) / xb.norm_squared();
                Ok(DMatrix::from_column_slice(2, 2, b.as_slice()))
            }
            OracleCocycle::DiagonalTimeVarying { rates, .. } => {
                let diag: Vec<f64> = rates.iter().map(|r| simpson(&|s| r(s), t0, t0 + t, 1e-3).exp()).collect();
                Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
            }
            OracleCocycle::TimeDependent(g) => brute_force_propagator_from(&|s| g(s), t0, t, FINE),
        }
    }

    /// Exact propagator from the reference start.
    pub fn exact_propagator(&self, t: f64) -> Result<DMatrix<f64>> {
        self.exact_propagator_from(0.0, t)
    }

    /// Closed-form dynamical spectrum.
    pub fn exact_sacker_sell(&self) -> Result<SpectrumEstimate> {
        let points: Vec<f64> = match self {
            OracleCocycle::Constant(a) => a.complex_eigenvalues().iter().map(|z| z.re).collect(),
            OracleCocycle::Floquet { period, .. } => {
                self.monodromy()?.complex_eigenvalues().iter().map(|z| z.re.hypot(z.im).ln() / period).collect()
            }
            // The propagator grows at most polynomially: no exponential rate.
            OracleCocycle::ShearClosedForm { .. } => vec![0.0],
            OracleCocycle::DiagonalTimeVarying { rates, window, starts } => {
                let raw = rates.iter().map(|r| {
                    let (lo, hi) = window_average_range(&|s| r(s), *window, *starts);
                    Interval { lo, hi, samples: 0 }
                });
                return Ok(SpectrumEstimate::from_raw(raw.collect(), EstimateParams { window: *window, ..Default::default() }));
            }
            OracleCocycle::TimeDependent(_) => {
                return Err(Error::Unsupported("time-dependent oracle has no closed-form spectrum".into()));
            }
        };
        let raw = points.into_iter().map(|p| Interval { lo: p, hi: p, samples: 0 }).collect();
        Ok(SpectrumEstimate::from_raw(raw, EstimateParams::default()))
    }

    /// The same cocycle built from production generators.
    pub fn to_cocycle(&self) -> Result<Cocycle> {
        if let OracleCocycle::ShearClosedForm { .. } = self {
            return Ok(Cocycle::amplitude(&FlowField::shear(), AmplitudeForm::Projected));
        }
        let this = self.clone();
        let n = self.dim();
        Cocycle::time_dependent(n, move |t, out| {
            let a = this.generator_at(t).expect("clock-based oracle");
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = a[(i, j)];
                }
            }
        })
    }

    /// Base point matching [`exact_propagator_from`]`(t0, ·)` for [`to_cocycle`].
    pub fn base_point(&self, t0: f64) -> Result<PhasePoint> {
        match self {
            OracleCocycle::ShearClosedForm { y0, eta0 } => {
                let c = y0.cos();
                PhasePoint::new(&[t0 * y0.sin(), *y0], &[eta0[0], eta0[1] - c * eta0[0] * t0])
            }
            _ => Ok(PhasePoint::clock(t0)),
        }
    }
}

/// `[min, max]` of `(1/W)∫_s^{s+W} a` for `s ∈ starts`, by prefix Simpson
/// sums on a grid of spacing `1e−3` (window starts on the same grid).
pub fn window_average_range(a: &dyn Fn(f64) -> f64, window: f64, starts: (f64, f64)) -> (f64, f64) {
    let h = 1e-3;
    let (s0, s1) = starts;
    let cells = ((s1 + window - s0) / h).round() as usize;
    let wcells = (window / h).round() as usize;
    let mut prefix = Vec::with_capacity(cells + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for i in 0..cells {
        let lo = s0 + i as f64 * h;
        acc += (a(lo) + 4.0 * a(lo + 0.5 * h) + a(lo + h)) * h / 6.0;
        prefix.push(acc);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in 0..=cells.saturating_sub(wcells) {
        let avg = (prefix[s + wcells] - prefix[s]) / (wcells as f64 * h);
        lo = lo.min(avg);
        hi = hi.max(avg);
    }
    (lo, hi)
}
