//! Discrete-QR growth rates: Lyapunov exponents and windowed spectrum
//! estimates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use super::{EstimateParams, Interval, SpectrumEstimate};
use crate::bichar::{check_step, PhasePoint};
use crate::cocycle::Cocycle;
use crate::error::{input, Error, Result};

/// Knobs of the windowed-QR estimator. All times are in flow time units.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimatorConfig {
    /// Total horizon `T`.
    pub horizon: f64,
    /// Window length `W`.
    pub window: f64,
    /// RK4 step.
    pub step: f64,
    /// Steps between QR re-factorizations.
    pub qr_every: usize,
    /// Intervals closer than this are merged.
    pub merge_tol: f64,
    /// Offset between consecutive window starts.
    pub window_stride: f64,
    /// Windows starting before this time are discarded.
    pub burn_in: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { horizon: 200.0, window: 20.0, step: 1e-3, qr_every: 10, merge_tol: 0.05, window_stride: 1.0, burn_in: 0.0 }
    }
}

impl EstimatorConfig {
    /// Length of one QR block.
    pub fn block(&self) -> f64 {
        self.qr_every as f64 * self.step
    }

    fn blocks_in(&self, t: f64) -> usize {
        (t / self.block()).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        check_step(self.step)?;
        if self.qr_every == 0 {
            return input("qr_every must be at least 1");
        }
        if !(self.merge_tol >= 0.0) {
            return input("merge_tol must be non-negative");
        }
        if !(self.window > 0.0 && self.window <= self.horizon / 4.0) {
            return input(format!("window {} must be positive and at most horizon/4 = {}", self.window, self.horizon / 4.0));
        }
        if !(self.window_stride > 0.0) || !(self.burn_in >= 0.0) {
            return input("window_stride must be positive and burn_in non-negative");
        }
        if self.burn_in + self.window > self.horizon {
            return input("burn_in + window exceeds the horizon");
        }
        Ok(())
    }

    fn params(&self, ensemble_size: usize) -> EstimateParams {
        EstimateParams { horizon: self.horizon, window: self.window, ensemble_size, merge_tol: self.merge_tol }
    }
}

/// One windowed growth rate of one QR column along one trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WindowSample {
    pub index: usize,
    pub window_start: f64,
    pub rate: f64,
}

/// Per-block `log r_ii` of the QR stepping, `[block][index]`.
fn qr_log_growth(cocycle: &Cocycle, start: &PhasePoint, blocks: usize, block: f64, step: f64) -> Result<Vec<Vec<f64>>> {
    let k = cocycle.fiber_dim();
    let mut q = DMatrix::<f64>::identity(k, k);
    let mut theta = start.clone();
    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let (phi, next) = cocycle.propagate_with_end(&theta, block, step)?;
        let z = phi * &q;
        let (mut q_new, r) = z.qr().unpack();
        let mut logs = vec![0.0; k];
        for i in 0..k {
            let rii = r[(i, i)];
            if !(rii.abs() > 1e-300) {
                return Err(Error::Conditioning { time: (b + 1) as f64 * block, value: rii.abs() });
            }
            if rii < 0.0 {
                q_new.column_mut(i).neg_mut();
            }
            logs[i] = rii.abs().ln();
        }
        out.push(logs);
        q = q_new;
        theta = next;
    }
    Ok(out)
}

/// Lyapunov exponents by discrete QR: time averages of `log r_ii` over the
/// horizon, sorted descending.
pub fn lyapunov_exponents(cocycle: &Cocycle, start: &PhasePoint, horizon: f64, step: f64, qr_every: usize) -> Result<Vec<f64>> {
    check_step(step)?;
    if qr_every == 0 {
        return input("qr_every must be at least 1");
    }
    let block = qr_every as f64 * step;
    if !(horizon >= 10.0 * block) {
        return input(format!("horizon {horizon} must be at least 10 QR blocks ({})", 10.0 * block));
    }
    let blocks = (horizon / block).round() as usize;
    let logs = qr_log_growth(cocycle, start, blocks, block, step)?;
    let total = blocks as f64 * block;
    let mut exps: Vec<f64> = (0..cocycle.fiber_dim()).map(|i| logs.iter().map(|l| l[i]).sum::<f64>() / total).collect();
    exps.sort_by(|a, b| b.total_cmp(a));
    Ok(exps)
}

/// Sliding-window growth rates of every QR column along one trajectory.
pub fn windowed_exponents(cocycle: &Cocycle, start: &PhasePoint, cfg: &EstimatorConfig) -> Result<Vec<WindowSample>> {
    cfg.validate()?;
    let block = cfg.block();
    let blocks = cfg.blocks_in(cfg.horizon);
    let w = cfg.blocks_in(cfg.window).max(1);
    let stride = cfg.blocks_in(cfg.window_stride).max(1);
    let first = cfg.blocks_in(cfg.burn_in);
    let logs = qr_log_growth(cocycle, start, blocks, block, cfg.step)?;
    let k = cocycle.fiber_dim();
    let mut samples = Vec::new();
    for i in 0..k {
        let mut prefix = Vec::with_capacity(blocks + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for l in &logs {
            acc += l[i];
            prefix.push(acc);
        }
        let mut s = first;
        while s + w <= blocks {
            let rate = (prefix[s + w] - prefix[s]) / (w as f64 * block);
            samples.push(WindowSample { index: i, window_start: s as f64 * block, rate });
            s += stride;
        }
    }
    Ok(samples)
}

/// Reduce per-trajectory window samples (in ensemble order) into an estimate:
/// `[min, max]` per trajectory and QR index, then union and merge.
pub fn assemble_estimate(per_trajectory: &[Vec<WindowSample>], cfg: &EstimatorConfig) -> SpectrumEstimate {
    let mut raw = Vec::new();
    for samples in per_trajectory {
        let k = samples.iter().map(|s| s.index + 1).max().unwrap_or(0);
        for i in 0..k {
            let mut iv: Option<Interval> = None;
            for s in samples.iter().filter(|s| s.index == i) {
                iv = Some(match iv {
                    None => Interval { lo: s.rate, hi: s.rate, samples: 1 },
                    Some(cur) => Interval { lo: cur.lo.min(s.rate), hi: cur.hi.max(s.rate), samples: cur.samples + 1 },
                });
            }
            raw.extend(iv);
        }
    }
    SpectrumEstimate::from_raw(raw, cfg.params(per_trajectory.len()))
}

/// Windowed-QR estimate of the dynamical spectrum over an ensemble of base
/// points.
pub fn sacker_sell_estimate(cocycle: &Cocycle, ensemble: &[PhasePoint], cfg: &EstimatorConfig) -> Result<SpectrumEstimate> {
    if ensemble.is_empty() {
        return input("ensemble must not be empty");
    }
    let per = ensemble.iter().map(|p| windowed_exponents(cocycle, p, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(assemble_estimate(&per, cfg))
}
