//! Run configuration: JSON schema, defaults and validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dyspec_core::spectrum::EstimatorConfig;
use dyspec_core::{AmplitudeForm, FlowField, PhasePoint};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub flow: FlowSpec,
    #[serde(default)]
    pub integration: Integration,
    #[serde(default)]
    pub amplitude_form: FormSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("dyspec-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    #[serde(default = "d_step")]
    pub step: f64,
    #[serde(rename = "T", default = "d_horizon")]
    pub horizon: f64,
    #[serde(rename = "W", default = "d_window")]
    pub window: f64,
    #[serde(default = "d_qr_every")]
    pub qr_every: usize,
    #[serde(default = "d_merge_tol")]
    pub merge_tol: f64,
    #[serde(default = "d_stride")]
    pub window_stride: f64,
    #[serde(default)]
    pub burn_in: f64,
}

fn d_step() -> f64 {
    EstimatorConfig::default().step
}
fn d_horizon() -> f64 {
    EstimatorConfig::default().horizon
}
fn d_window() -> f64 {
    EstimatorConfig::default().window
}
fn d_qr_every() -> usize {
    EstimatorConfig::default().qr_every
}
fn d_merge_tol() -> f64 {
    EstimatorConfig::default().merge_tol
}
fn d_stride() -> f64 {
    EstimatorConfig::default().window_stride
}

impl Default for Integration {
    fn default() -> Self {
        let e = EstimatorConfig::default();
        Integration {
            step: e.step,
            horizon: e.horizon,
            window: e.window,
            qr_every: e.qr_every,
            merge_tol: e.merge_tol,
            window_stride: e.window_stride,
            burn_in: e.burn_in,
        }
    }
}

impl Integration {
    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            horizon: self.horizon,
            window: self.window,
            step: self.step,
            qr_every: self.qr_every,
            merge_tol: self.merge_tol,
            window_stride: self.window_stride,
            burn_in: self.burn_in,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSpec {
    #[default]
    Projected,
    Verbatim,
}

impl From<FormSpec> for AmplitudeForm {
    fn from(f: FormSpec) -> Self {
        match f {
            FormSpec::Projected => AmplitudeForm::Projected,
            FormSpec::Verbatim => AmplitudeForm::Verbatim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(default = "d_size")]
    pub size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Explicit seeds placed before the low-discrepancy points.
    #[serde(default)]
    pub anchors: Vec<AnchorSpec>,
    /// Clusters of seeds around a point, one per axis direction of `η`.
    #[serde(default)]
    pub anchors_near: Vec<NearSpec>,
}

fn d_size() -> usize {
    64
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec { size: d_size(), seed: 0, anchors: Vec::new(), anchors_near: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearSpec {
    pub x: Vec<f64>,
    pub radius: f64,
}

/// Which cocycle a Mañé query runs on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManeTarget {
    #[default]
    #[serde(rename = "B")]
    B,
    #[serde(rename = "X")]
    X,
    #[serde(rename = "BXm")]
    BXm { m: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", deny_unknown_fields)]
pub enum Task {
    #[serde(rename = "spectrum_B")]
    SpectrumB,
    #[serde(rename = "spectrum_X")]
    SpectrumX,
    #[serde(rename = "spectrum_BXm")]
    SpectrumBXm { m: Vec<f64> },
    #[serde(rename = "mane")]
    Mane {
        lambdas: Vec<f64>,
        #[serde(rename = "N", default = "d_mane_n")]
        n: usize,
        #[serde(default = "d_ratio")]
        ratio_threshold: f64,
        /// Number of leading ensemble points used as the base grid.
        #[serde(default = "d_grid")]
        grid_size: usize,
        #[serde(default)]
        cocycle: ManeTarget,
    },
    #[serde(rename = "euler_ess")]
    EulerEss { m: f64, t: f64 },
    #[serde(rename = "trajectory")]
    Trajectory {
        #[serde(default)]
        index: usize,
        duration: f64,
        #[serde(default = "d_every")]
        every: usize,
    },
}

fn d_mane_n() -> usize {
    10
}
fn d_ratio() -> f64 {
    0.1
}
fn d_grid() -> usize {
    8
}
fn d_every() -> usize {
    1
}

fn field(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { field: Some(path.to_string()), message: msg.into() }
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Parse JSON text; type errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config {
                field: (path != ".").then_some(path),
                message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn flow(&self) -> Result<FlowField, CliError> {
        FlowField::from_catalog(&self.flow.name, &self.flow.params).map_err(|e| field("flow", e.to_string()))
    }

    /// Invariant checks beyond the schema.
    pub fn validate(&self) -> Result<(), CliError> {
        let flow = self.flow()?;
        let i = &self.integration;
        positive("integration.step", i.step)?;
        positive("integration.T", i.horizon)?;
        positive("integration.W", i.window)?;
        positive("integration.merge_tol", i.merge_tol)?;
        positive("integration.window_stride", i.window_stride)?;
        if i.qr_every == 0 {
            return Err(field("integration.qr_every", "must be at least 1"));
        }
        if !(i.burn_in >= 0.0) {
            return Err(field("integration.burn_in", "must be non-negative"));
        }
        if i.window > i.horizon / 4.0 {
            return Err(field("integration.W", format!("must be at most T/4 = {}", i.horizon / 4.0)));
        }
        if i.burn_in + i.window > i.horizon {
            return Err(field("integration.burn_in", "burn_in + W exceeds T"));
        }
        i.estimator().validate().map_err(|e| field("integration", e.to_string()))?;
        let n = flow.dim();
        if self.ensemble.size == 0 && self.ensemble.anchors.is_empty() && self.ensemble.anchors_near.is_empty() {
            return Err(field("ensemble.size", "ensemble must not be empty"));
        }
        for (k, a) in self.ensemble.anchors.iter().enumerate() {
            if a.x.len() != n || a.eta.len() != n {
                return Err(field(&format!("ensemble.anchors[{k}]"), format!("x and eta need {n} components")));
            }
            PhasePoint::new(&a.x, &a.eta).map_err(|e| field(&format!("ensemble.anchors[{k}].eta"), e.to_string()))?;
        }
        for (k, a) in self.ensemble.anchors_near.iter().enumerate() {
            if a.x.len() != n {
                return Err(field(&format!("ensemble.anchors_near[{k}].x"), format!("needs {n} components")));
            }
            positive(&format!("ensemble.anchors_near[{k}].radius"), a.radius)?;
        }
        let total = self.ensemble_len();
        for (k, task) in self.tasks.iter().enumerate() {
            let at = |f: &str| format!("tasks[{k}].{f}");
            match task {
                Task::SpectrumB | Task::SpectrumX => {}
                Task::SpectrumBXm { m } => {
                    if m.is_empty() || m.iter().any(|v| !v.is_finite()) {
                        return Err(field(&at("m"), "needs a non-empty list of finite exponents"));
                    }
                }
                Task::Mane { lambdas, n: horizon, ratio_threshold, grid_size, cocycle } => {
                    if lambdas.is_empty() || lambdas.iter().any(|v| !v.is_finite()) {
                        return Err(field(&at("lambdas"), "needs a non-empty list of finite rates"));
                    }
                    if *horizon < 4 {
                        return Err(field(&at("N"), "must be at least 4"));
                    }
                    if !(*ratio_threshold > 0.0 && *ratio_threshold <= 1.0) {
                        return Err(field(&at("ratio_threshold"), "must lie in (0, 1]"));
                    }
                    if *grid_size == 0 {
                        return Err(field(&at("grid_size"), "must be at least 1"));
                    }
                    if let ManeTarget::BXm { m } = cocycle {
                        if !m.is_finite() {
                            return Err(field(&at("cocycle.m"), "must be finite"));
                        }
                    }
                }
                Task::EulerEss { m, t } => {
                    if *m == 0.0 || !m.is_finite() {
                        return Err(field(&at("m"), "must be finite and non-zero"));
                    }
                    positive(&at("t"), *t)?;
                }
                Task::Trajectory { index, duration, every } => {
                    if *index >= total {
                        return Err(field(&at("index"), format!("ensemble has {total} points")));
                    }
                    if !duration.is_finite() || *duration == 0.0 {
                        return Err(field(&at("duration"), "must be finite and non-zero"));
                    }
                    if *every == 0 {
                        return Err(field(&at("every"), "must be at least 1"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of base points the ensemble resolves to.
    pub fn ensemble_len(&self) -> usize {
        let n = FlowField::from_catalog(&self.flow.name, &self.flow.params).map(|f| f.dim()).unwrap_or(0);
        self.ensemble.size + self.ensemble.anchors.len() + self.ensemble.anchors_near.len() * (2 * n + 1) * n
    }

    /// Canonical JSON with all defaults resolved.
    pub fn normalized(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
