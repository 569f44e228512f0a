use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dyspec_core::ensemble::{anchors_near, phase_ensemble};
use dyspec_core::spectrum::{
    assemble_estimate, connectedness_threshold, essential_spectrum_annulus, gap_bounds_check, mane_search_bilateral,
    minkowski_sum, windowed_exponents, EstimatorConfig, WindowSample,
};
use dyspec_core::{advance, AmplitudeForm, Cocycle, FlowField, PhasePoint, SpectrumEstimate};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ManeTarget, RunConfig, Task};
use crate::error::CliError;

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; `None` lets rayon decide. Results do not depend on it.
    pub threads: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Shortest round-trip decimal, used in file names.
fn label(v: f64) -> String {
    format!("{v}")
}

fn intervals_json(s: &SpectrumEstimate) -> Value {
    json!(s.pairs().iter().map(|&(lo, hi)| [lo, hi]).collect::<Vec<_>>())
}

struct Estimated {
    cocycle: Cocycle,
    spectrum: SpectrumEstimate,
    samples: Vec<Vec<WindowSample>>,
}

struct Session {
    cfg: RunConfig,
    flow: FlowField,
    form: AmplitudeForm,
    est: EstimatorConfig,
    ensemble: Vec<PhasePoint>,
    cache: BTreeMap<String, Estimated>,
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Session {
    fn echo(&self) -> Value {
        let mut v = self.cfg.normalized();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
        }
        v
    }

    fn build(&self, key: &str) -> Result<Cocycle, CliError> {
        Ok(match key {
            "B" => Cocycle::restricted_amplitude(&self.flow, self.form)?,
            "B_full" => Cocycle::amplitude(&self.flow, self.form),
            "X" => Cocycle::stretch(&self.flow, 1.0),
            _ => {
                let m: f64 = key.strip_prefix("BXm_").and_then(|m| m.parse().ok()).expect("internal cocycle key");
                Cocycle::stretch(&self.flow, m).product(&Cocycle::restricted_amplitude(&self.flow, self.form)?)?
            }
        })
    }

    fn estimate(&mut self, key: &str) -> Result<&Estimated, CliError> {
        if !self.cache.contains_key(key) {
            let cocycle = self.build(key)?;
            let samples = self
                .ensemble
                .par_iter()
                .map(|p| windowed_exponents(&cocycle, p, &self.est))
                .collect::<Result<Vec<_>, _>>()?;
            let spectrum = assemble_estimate(&samples, &self.est);
            self.cache.insert(key.to_string(), Estimated { cocycle, spectrum, samples });
        }
        Ok(&self.cache[key])
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
        text.push('\n');
        fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }

    fn write_spectrum(&mut self, key: &str) -> Result<(), CliError> {
        self.estimate(key)?;
        let e = &self.cache[key];
        let p = e.spectrum.params;
        let value = json!({
            "name": key,
            "cocycle": e.cocycle.describe(),
            "intervals": intervals_json(&e.spectrum),
            "samples": e.spectrum.intervals().iter().map(|i| i.samples).collect::<Vec<_>>(),
            "params": {
                "T": p.horizon, "W": p.window, "ensemble_size": p.ensemble_size, "merge_tol": p.merge_tol,
                "step": self.est.step, "qr_every": self.est.qr_every,
                "window_stride": self.est.window_stride, "burn_in": self.est.burn_in,
            },
            "config": self.echo(),
        });
        let path = self.dir.join(format!("samples_{key}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["trajectory", "index", "window_start", "rate"])?;
        for (traj, samples) in e.samples.iter().enumerate() {
            for s in samples {
                w.write_record([traj.to_string(), s.index.to_string(), label(s.window_start), label(s.rate)])?;
            }
        }
        w.flush()?;
        self.files.push(path);
        self.write_json(&format!("spectrum_{key}.json"), &value)
    }

    fn mane(&mut self, lambdas: &[f64], n: usize, ratio_threshold: f64, grid_size: usize, target: ManeTarget) -> Result<(), CliError> {
        let key = match target {
            ManeTarget::B => "B".to_string(),
            ManeTarget::X => "X".to_string(),
            ManeTarget::BXm { m } => format!("BXm_{}", label(m)),
        };
        let cocycle = self.build(&key)?;
        let grid: Vec<PhasePoint> = self.ensemble.iter().take(grid_size).cloned().collect();
        let step = self.est.step;
        let reports = lambdas
            .par_iter()
            .map(|&l| mane_search_bilateral(&cocycle, l, &grid, n, step, ratio_threshold))
            .collect::<Result<Vec<_>, _>>()?;
        for r in reports {
            let value = json!({
                "lambda": r.lambda,
                "cocycle": cocycle.describe(),
                "N": n,
                "ratio_threshold": ratio_threshold,
                "grid_size": grid.len(),
                "found": r.found(),
                "side": r.side,
                "primal": r.primal,
                "adjoint": r.adjoint,
                "config": self.echo(),
            });
            self.write_json(&format!("mane_{}.json", label(r.lambda)), &value)?;
        }
        Ok(())
    }

    fn euler_ess(&mut self, m: f64, t: f64) -> Result<(), CliError> {
        let bxm = format!("BXm_{}", label(m));
        for key in ["B", "B_full", "X", bxm.as_str()] {
            self.estimate(key)?;
        }
        let sb = &self.cache["B"].spectrum;
        let sx = &self.cache["X"].spectrum;
        let sbxm = &self.cache[&bxm].spectrum;
        let (lmax, lmin) = (sx.max().unwrap_or(0.0), sx.min().unwrap_or(0.0));
        let m_star = connectedness_threshold(sb, lmax, lmin)?;
        // In two dimensions Σ_B = −Σ_X, so m* = 1 up to rounding; compare with slack.
        let claimed = m.abs() >= m_star * (1.0 - 1e-9);
        let annulus = essential_spectrum_annulus(sbxm, t, claimed)?;
        let sxm = sx.scaled(m);
        let gaps = gap_bounds_check(&sxm, sb, sbxm, sb.params.merge_tol)?;
        let bound = minkowski_sum(sb, &sxm)?.inflated(0.1);
        let value = json!({
            "m": m,
            "t": t,
            "sigma_B": intervals_json(sb),
            "sigma_B_full": intervals_json(&self.cache["B_full"].spectrum),
            "sigma_X": intervals_json(sx),
            "sigma_BXm": intervals_json(sbxm),
            "lambda_max": lmax,
            "lambda_min": lmin,
            "m_star": m_star,
            "identity_claimed": claimed,
            "sigma_BXm_connected": sbxm.is_connected(),
            "annulus": {
                "radii": annulus.radii.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
                "hull": [annulus.hull.0, annulus.hull.1],
                "identity": annulus.identity,
            },
            "gap_bounds": {
                "lower": gaps.lower, "upper": gaps.upper,
                "gaps": gaps.gaps.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
                "violations": gaps.violations.len(),
            },
            "inclusion": { "bound": intervals_json(&bound), "holds": sbxm.is_subset_of(&bound, 0.0) },
            "config": self.echo(),
        });
        self.write_json("euler_ess.json", &value)
    }

    fn trajectory(&mut self, index: usize, duration: f64, every: usize) -> Result<(), CliError> {
        let samples = advance(&self.flow, &self.ensemble[index], duration, self.est.step)?;
        let n = self.flow.dim();
        let path = self.dir.join(format!("trajectory_{index}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("eta{i}")));
        header.push("s".into());
        w.write_record(&header)?;
        for s in samples.iter().step_by(every) {
            let mut row = vec![label(s.t)];
            row.extend(s.point.x.iter().map(|&v| label(v)));
            row.extend(s.point.eta.iter().map(|&v| label(v)));
            row.push(label(s.point.s));
            w.write_record(&row)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }
}

fn resolve_ensemble(cfg: &RunConfig, n: usize) -> Result<Vec<PhasePoint>, CliError> {
    let mut anchors = Vec::new();
    for a in &cfg.ensemble.anchors {
        anchors.push(PhasePoint::new(&a.x, &a.eta)?);
    }
    for near in &cfg.ensemble.anchors_near {
        anchors.extend(anchors_near(&near.x, near.radius)?);
    }
    Ok(phase_ensemble(n, cfg.ensemble.size, cfg.ensemble.seed, &anchors)?)
}

/// Validate `cfg` with `opts` applied, then execute every task in order.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.ensemble.seed = seed;
    }
    if let Some(dir) = &opts.output_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    if opts.threads == Some(0) {
        return Err(CliError::Config { field: Some("threads".into()), message: "must be at least 1".into() });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    pool.install(|| execute(cfg))
}

fn execute(cfg: RunConfig) -> Result<RunSummary, CliError> {
    let flow = cfg.flow()?;
    let ensemble = resolve_ensemble(&cfg, flow.dim())?;
    let dir = cfg.output_dir.clone();
    create_dir(&dir)?;
    let mut session = Session {
        form: cfg.amplitude_form.into(),
        est: cfg.integration.estimator(),
        flow,
        ensemble,
        cache: BTreeMap::new(),
        dir: dir.clone(),
        files: Vec::new(),
        cfg,
    };
    for task in session.cfg.tasks.clone() {
        match task {
            Task::SpectrumB => {
                session.write_spectrum("B")?;
                session.write_spectrum("B_full")?;
            }
            Task::SpectrumX => session.write_spectrum("X")?,
            Task::SpectrumBXm { m } => {
                for m in m {
                    session.write_spectrum(&format!("BXm_{}", label(m)))?;
                }
            }
            Task::Mane { lambdas, n, ratio_threshold, grid_size, cocycle } => {
                session.mane(&lambdas, n, ratio_threshold, grid_size, cocycle)?
            }
            Task::EulerEss { m, t } => session.euler_ess(m, t)?,
            Task::Trajectory { index, duration, every } => session.trajectory(index, duration, every)?,
        }
    }
    Ok(RunSummary { output_dir: dir, files: session.files })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}
