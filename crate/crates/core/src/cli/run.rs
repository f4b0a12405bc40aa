//! Executes a [`RunConfig`] and writes its outputs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SystemKind};
use crate::diagnostics::{
    after_burn_in, compare_with_gibbs, invariant_report, GibbsComparison, GibbsSpec, InvariantReport, Orbit,
};
use crate::error::{Error, Result};
use crate::integrate::{integrate_trajectory, IntegrateOptions, Trajectory};
use crate::noise::brownian_path_for;
use crate::sphere::octahedron_defect;

pub const ECHO_FILE: &str = "config.echo.json";

/// Per-member failure record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberFailure {
    pub index: usize,
    pub step: usize,
    pub error: String,
}

/// Terminal-state check for six equal vortices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OctahedronCheck {
    pub index: usize,
    /// Largest deviation of `x_i . x_j / R^2` from `{0, -1}`.
    pub octahedron_defect: f64,
    pub octahedron_reached: bool,
    pub h0_non_increasing: bool,
    pub h0_strictly_decreasing: bool,
    pub h0_max_rel_increase: f64,
}

/// Sample moments of a magnetic particle against `Var q = 1/(beta k)`,
/// `Var p = m / beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCheck {
    pub burn_in_fraction: f64,
    pub n_samples: usize,
    pub target_var_q: f64,
    pub target_var_p: f64,
    pub var_q: [f64; 3],
    pub var_p: [f64; 3],
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub system: SystemKind,
    pub scheme: String,
    pub scheme_note: String,
    pub n_steps: usize,
    pub dt: f64,
    pub base_seed: u64,
    /// Trajectory keys: member `k` uses the path keyed by `(base_seed, k)`.
    pub trajectory_keys: Vec<u64>,
    pub status: String,
    pub failures: Vec<MemberFailure>,
    pub files: Vec<String>,
    pub reports: Vec<InvariantReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub octahedron: Option<Vec<OctahedronCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gibbs: Option<GibbsComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumCheck>,
}

impl RunSummary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn member_csv_name(base: &str, k: usize, n: usize) -> String {
    if n == 1 {
        return base.to_string();
    }
    match base.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}_{k:04}.{ext}"),
        None => format!("{base}_{k:04}"),
    }
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// Runs `config` and writes all outputs into `out_dir`:
/// trajectory CSV(s) with `.meta.json` sidecars, the summary JSON, the
/// resolved config echo and, for vortices, initial and final vortex JSON.
pub fn run_config(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let cfg = config.resolved()?;
    let built = cfg.build()?;
    std::fs::create_dir_all(out_dir)?;
    let sys = built.system.as_ref();
    let n_steps = cfg.n_steps();
    let n_traj = cfg.outputs.ensemble_size;
    let opts = IntegrateOptions { record_stride: 1, diagnostics: true };
    type Member = std::result::Result<Trajectory, (Error, usize, Trajectory)>;
    let results: Vec<Member> = (0..n_traj)
        .into_par_iter()
        .map(|k| -> Result<Member> {
            let path = brownian_path_for(sys.n_noise(), 0.0, cfg.noise.t_final, n_steps, cfg.noise.seed, k as u64)?;
            Ok(integrate_trajectory(sys, cfg.scheme, &path, &built.x0, &opts).map_err(|f| (f.error, f.step, f.partial)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut files = Vec::new();
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    let mut trajs: Vec<&Trajectory> = Vec::new();
    for (k, r) in results.iter().enumerate() {
        let (traj, partial) = match r {
            Ok(t) => (t, false),
            Err((e, step, t)) => {
                failures.push(MemberFailure { index: k, step: *step, error: e.to_string() });
                (t, true)
            }
        };
        let name = member_csv_name(&cfg.outputs.trajectory_csv, k, n_traj);
        let sub = traj.subsample(cfg.outputs.record_stride);
        let mut buf = Vec::new();
        sub.write_csv(&mut buf)?;
        std::fs::write(out_dir.join(&name), buf)?;
        let mut meta = sub.metadata_json();
        meta["partial"] = serde_json::Value::Bool(partial);
        let meta_name = format!("{name}.meta.json");
        write(&out_dir.join(&meta_name), &serde_json::to_string_pretty(&meta).expect("json"))?;
        files.push(name);
        files.push(meta_name);
        if !partial {
            reports.push(invariant_report(traj)?);
            trajs.push(traj);
        }
    }

    let octahedron = match (&built.vortices, cfg.noise.sigma == 0.0) {
        (Some(v), true) if v.len() == 6 => Some(
            results
                .iter()
                .enumerate()
                .filter_map(|(k, r)| r.as_ref().ok().map(|t| (k, t)))
                .map(|(k, t)| {
                    let fin: Vec<[f64; 3]> = t.final_state().chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
                    let defect = octahedron_defect(&fin, v.radius)?;
                    let rep = invariant_report(t)?;
                    Ok(OctahedronCheck {
                        index: k,
                        octahedron_defect: defect,
                        octahedron_reached: defect < 0.02,
                        h0_non_increasing: rep.energy.non_increasing.unwrap_or(false),
                        h0_strictly_decreasing: rep.energy.strictly_decreasing.unwrap_or(false),
                        h0_max_rel_increase: rep.energy.max_rel_increase,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };

    let burn = 0.2;
    let gibbs = match (cfg.system, built.beta) {
        (SystemKind::RigidBody, Some(beta)) if cfg.noise.sigma > 0.0 && !trajs.is_empty() => {
            let radius = built.x0.iter().map(|v| v * v).sum::<f64>().sqrt();
            let spec = GibbsSpec::for_system(beta, built.system.clone(), Orbit::Sphere { radius })?;
            // thin to one sample per 100 steps
            let series: Vec<Vec<f64>> = trajs
                .iter()
                .map(|t| {
                    let s = t.subsample(100);
                    after_burn_in(&s.times, &s.energy, burn)
                })
                .collect();
            Some(compare_with_gibbs(&series, &spec, 4000, cfg.noise.seed, 0.01)?)
        }
        _ => None,
    };

    let equilibrium = match (cfg.system, built.beta) {
        (SystemKind::MagneticParticle, Some(beta)) if !trajs.is_empty() => {
            let p: super::config::MagneticParams = serde_json::from_value(cfg.parameters.clone())
                .map_err(|e| Error::Config { field: "parameters".into(), message: e.to_string() })?;
            let mut var_q = [0.0; 3];
            let mut var_p = [0.0; 3];
            let mut n = 0;
            for d in 0..6 {
                let pooled: Vec<f64> = trajs
                    .iter()
                    .flat_map(|t| {
                        let col: Vec<f64> = t.states.iter().map(|s| s[d]).collect();
                        after_burn_in(&t.times, &col, burn)
                    })
                    .collect();
                n = pooled.len();
                if d < 3 {
                    var_q[d] = sample_var(&pooled);
                } else {
                    var_p[d - 3] = sample_var(&pooled);
                }
            }
            let tq = 1.0 / (beta * p.stiffness);
            let tp = p.mass / beta;
            let err = var_q
                .iter()
                .map(|v| (v - tq).abs() / tq)
                .chain(var_p.iter().map(|v| (v - tp).abs() / tp))
                .fold(0.0, f64::max);
            Some(EquilibriumCheck {
                burn_in_fraction: burn,
                n_samples: n,
                target_var_q: tq,
                target_var_p: tp,
                var_q,
                var_p,
                max_rel_error: err,
            })
        }
        _ => None,
    };

    if let Some(v) = &built.vortices {
        v.save(&out_dir.join("vortices_initial.json"))?;
        files.push("vortices_initial.json".into());
        if let Some(Ok(t)) = results.first() {
            v.with_state(t.final_state())?.save(&out_dir.join("vortices_final.json"))?;
            files.push("vortices_final.json".into());
        }
    }

    write(&out_dir.join(ECHO_FILE), &cfg.to_json())?;
    files.push(ECHO_FILE.into());
    files.push(cfg.outputs.summary_json.clone());

    let first_meta = results.first().map(|r| match r {
        Ok(t) => &t.metadata,
        Err((_, _, t)) => &t.metadata,
    });
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        system: cfg.system,
        scheme: cfg.scheme.as_str().to_string(),
        scheme_note: first_meta.map(|m| m.scheme_note.clone()).unwrap_or_default(),
        n_steps,
        dt: cfg.noise.dt,
        base_seed: cfg.noise.seed,
        trajectory_keys: (0..n_traj as u64).collect(),
        status: if failures.is_empty() { "ok".into() } else { "failed".into() },
        failures,
        files,
        reports,
        octahedron,
        gibbs,
        equilibrium,
    };
    write(&out_dir.join(&cfg.outputs.summary_json), &serde_json::to_string_pretty(&summary).expect("json"))?;
    Ok(summary)
}

/// Runs the config file at `path`, writing next to it unless `out_dir` is given.
pub fn run_config_file(path: &Path, out_dir: Option<&Path>) -> Result<(RunSummary, PathBuf)> {
    let cfg = RunConfig::load(path)?;
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
    Ok((run_config(&cfg, &dir)?, dir))
}
