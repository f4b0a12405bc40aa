//! JSON run configuration.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::LieStructure;
use crate::dynamics::{
    magnetic_particle_system, rigid_body, Coupling, HarmonicPotential, HeavyTop, LiePoissonSystem, StochasticSystem,
    UniformField,
};
use crate::error::{Error, Result};
use crate::integrate::Scheme;
use crate::sphere::{PointVortexSystem, VortexConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    RigidBody,
    HeavyTop,
    MagneticParticle,
    PointVortex,
    CustomLiePoisson,
}

/// One run: system, parameters, noise, scheme and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemKind,
    /// System-specific table, see [`RigidBodyParams`] and friends.
    pub parameters: serde_json::Value,
    pub noise: NoiseConfig,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_scheme() -> Scheme {
    Scheme::Heun
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_csv")]
    pub trajectory_csv: String,
    #[serde(default = "default_summary")]
    pub summary_json: String,
    #[serde(default = "one")]
    pub ensemble_size: usize,
    /// Write every `record_stride`-th step to the CSV.
    #[serde(default = "one")]
    pub record_stride: usize,
}

fn default_csv() -> String {
    "trajectory.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { trajectory_csv: default_csv(), summary_json: default_summary(), ensemble_size: 1, record_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidBodyParams {
    /// Principal moments of inertia.
    pub inertia: [f64; 3],
    pub initial: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTopParams {
    pub inertia: [f64; 3],
    pub mgl: f64,
    pub chi: [f64; 3],
    /// `(Pi, Gamma)`.
    pub initial: [f64; 6],
    #[serde(default)]
    pub renormalise_gamma: bool,
    /// Optional 6x6 metric on `so(3) x R^3`; block identity otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticParams {
    pub mass: f64,
    /// Harmonic potential `k |q|^2 / 2`.
    pub stiffness: f64,
    /// Uniform magnetic term.
    pub field: [f64; 3],
    #[serde(default = "one_f")]
    pub charge: f64,
    /// `(q, p)`.
    pub initial: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointVortexParams {
    #[serde(rename = "R")]
    pub radius: f64,
    pub strengths: Vec<f64>,
    /// Initial positions; drawn uniformly with `initial_seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_seed: Option<u64>,
    /// Highest harmonic degree in the noise.
    #[serde(default = "one")]
    pub ell_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomLiePoissonParams {
    /// `c[k][i][j]` with `[e_i, e_j] = c^k_ij e_k`.
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    pub gamma: Vec<Vec<f64>>,
    /// `gamma`-orthonormal noise directions.
    pub noise: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

fn field_of(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn config_error(prefix: &str, path: String, inner: &serde_json::Error) -> Error {
    let message = inner.to_string();
    let mut field = if path == "." || path.is_empty() { String::new() } else { path };
    if message.starts_with("missing field") {
        if let Some(f) = field_of(&message) {
            field = if field.is_empty() { f } else { format!("{field}.{f}") };
        }
    }
    let field = match (prefix.is_empty(), field.is_empty()) {
        (true, _) => field,
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{field}"),
    };
    Error::Config { field: if field.is_empty() { "<root>".into() } else { field }, message }
}

fn parse_value<T: DeserializeOwned>(prefix: &str, v: &serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        config_error(prefix, path, e.inner())
    })
}

fn bad(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

impl RunConfig {
    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            config_error("", path, e.inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.noise;
        if !(n.dt > 0.0) || !n.dt.is_finite() {
            return Err(bad("noise.dt", format!("must be positive, got {}", n.dt)));
        }
        if !(n.t_final > 0.0) || !n.t_final.is_finite() {
            return Err(bad("noise.t_final", format!("must be positive, got {}", n.t_final)));
        }
        let steps = n.t_final / n.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
            return Err(bad("noise.t_final", "must be a positive integer multiple of dt"));
        }
        Coupling::new(n.sigma, n.beta, n.theta).map_err(|e| bad("noise", e.to_string()))?;
        if self.outputs.ensemble_size == 0 {
            return Err(bad("outputs.ensemble_size", "must be at least 1"));
        }
        if self.outputs.record_stride == 0 {
            return Err(bad("outputs.record_stride", "must be at least 1"));
        }
        for (name, f) in [("outputs.trajectory_csv", &self.outputs.trajectory_csv), ("outputs.summary_json", &self.outputs.summary_json)] {
            let p = std::path::Path::new(f);
            if f.is_empty() || p.is_absolute() || p.components().count() != 1 {
                return Err(bad(name, "must be a plain file name"));
            }
        }
        self.build().map(|_| ())
    }

    pub fn n_steps(&self) -> usize {
        (self.noise.t_final / self.noise.dt).round() as usize
    }

    pub fn coupling(&self) -> Result<Coupling> {
        Coupling::new(self.noise.sigma, self.noise.beta, self.noise.theta).map_err(|e| bad("noise", e.to_string()))
    }

    /// Replaces randomly drawn initial data by its explicit value, so that
    /// the echoed config no longer depends on the draw.
    pub fn resolved(&self) -> Result<Self> {
        let mut out = self.clone();
        if self.system == SystemKind::PointVortex {
            let mut p: PointVortexParams = parse_value("parameters", &self.parameters)?;
            if p.positions.is_none() {
                let c = self.vortex_config(&p)?;
                p.positions = Some(c.positions);
                p.initial_seed = None;
                out.parameters = serde_json::to_value(p).expect("params serialise");
            }
        }
        Ok(out)
    }

    fn vortex_config(&self, p: &PointVortexParams) -> Result<VortexConfig> {
        match (&p.positions, p.initial_seed) {
            (Some(pos), _) => VortexConfig::new(p.radius, pos.clone(), p.strengths.clone())
                .map_err(|e| bad("parameters.positions", e.to_string())),
            (None, Some(seed)) => VortexConfig::random_uniform(p.radius, p.strengths.clone(), seed)
                .map_err(|e| bad("parameters.initial_seed", e.to_string())),
            (None, None) => Err(bad("parameters.positions", "give `positions` or `initial_seed`")),
        }
    }

    /// The configured system and its initial state.
    pub fn build(&self) -> Result<BuiltSystem> {
        let coupling = self.coupling()?;
        fn pe(field: &'static str) -> impl Fn(Error) -> Error {
            move |e| bad(&format!("parameters.{field}"), e.to_string())
        }
        Ok(match self.system {
            SystemKind::RigidBody => {
                let p: RigidBodyParams = parse_value("parameters", &self.parameters)?;
                let s = rigid_body(p.inertia, coupling).map_err(pe("inertia"))?;
                BuiltSystem { system: Arc::new(s), x0: p.initial.to_vec(), vortices: None, beta: self.noise.beta }
            }
            SystemKind::HeavyTop => {
                let p: HeavyTopParams = parse_value("parameters", &self.parameters)?;
                let inertia = Matrix3::from_diagonal(&Vector3::from(p.inertia));
                let mut t = HeavyTop::new(inertia, p.mgl, p.chi, coupling).map_err(pe("inertia"))?;
                if let Some(m) = &p.metric {
                    t = t.with_metric(matrix("parameters.metric", m, 6)?).map_err(pe("metric"))?;
                }
                if p.renormalise_gamma {
                    let g = &p.initial[3..];
                    t = t.with_gamma_renormalisation((g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt());
                }
                BuiltSystem { system: Arc::new(t), x0: p.initial.to_vec(), vortices: None, beta: self.noise.beta }
            }
            SystemKind::MagneticParticle => {
                let p: MagneticParams = parse_value("parameters", &self.parameters)?;
                let s = magnetic_particle_system(
                    p.mass,
                    HarmonicPotential { k: p.stiffness },
                    UniformField { b: p.field },
                    p.charge,
                    coupling,
                )
                .map_err(pe("mass"))?;
                BuiltSystem { system: Arc::new(s), x0: p.initial.to_vec(), vortices: None, beta: self.noise.beta }
            }
            SystemKind::PointVortex => {
                let p: PointVortexParams = parse_value("parameters", &self.parameters)?;
                let c = self.vortex_config(&p)?;
                let s = PointVortexSystem::new(c.clone(), p.ell_max, coupling).map_err(pe("ell_max"))?;
                BuiltSystem { system: Arc::new(s), x0: c.state(), vortices: Some(c), beta: self.noise.beta }
            }
            SystemKind::CustomLiePoisson => {
                let p: CustomLiePoissonParams = parse_value("parameters", &self.parameters)?;
                let dim = p.structure_constants.len();
                let gamma = matrix("parameters.gamma", &p.gamma, dim)?;
                let structure = LieStructure::new(p.structure_constants.clone(), gamma)
                    .map_err(pe("structure_constants"))?;
                let s = LiePoissonSystem::kinetic(structure, p.noise.clone(), coupling).map_err(pe("noise"))?;
                if p.initial.len() != dim {
                    return Err(bad("parameters.initial", format!("expected {dim} entries, got {}", p.initial.len())));
                }
                BuiltSystem { system: Arc::new(s), x0: p.initial, vortices: None, beta: self.noise.beta }
            }
        })
    }
}

fn matrix(field: &str, rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(bad(field, format!("expected a {dim}x{dim} matrix")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

/// A system ready to integrate.
pub struct BuiltSystem {
    pub system: Arc<dyn StochasticSystem>,
    pub x0: Vec<f64>,
    pub vortices: Option<VortexConfig>,
    pub beta: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "system": "rigid_body",
        "parameters": {"inertia": [1, 2, 3], "initial": [1, 1, 1]},
        "noise": {"sigma": 0.5, "beta": 1.0, "seed": 3, "dt": 0.01, "t_final": 1.0}
    }"#;

    #[test]
    fn parses_and_fills_defaults() {
        let c = RunConfig::from_json(GOOD).unwrap();
        assert_eq!(c.scheme, Scheme::Heun);
        assert_eq!(c.outputs.ensemble_size, 1);
        assert_eq!(c.n_steps(), 100);
        assert_eq!(c.coupling().unwrap().theta, 0.125);
    }

    #[test]
    fn missing_dt_names_the_field() {
        let text = GOOD.replace(r#""dt": 0.01, "#, "");
        match RunConfig::from_json(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "noise.dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_parameter_names_the_field() {
        let text = GOOD.replace(r#""inertia": [1, 2, 3], "#, "");
        match RunConfig::from_json(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "parameters.inertia"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_beta_theta_is_rejected() {
        let text = GOOD.replace(r#""beta": 1.0"#, r#""beta": 1.0, "theta": 0.3"#);
        assert!(matches!(RunConfig::from_json(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = GOOD.replace(r#""seed": 3"#, r#""seed": 3, "sedd": 4"#);
        match RunConfig::from_json(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "noise.sedd"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resolved_vortex_config_is_explicit() {
        let text = r#"{
            "system": "point_vortex",
            "parameters": {"R": 1.0, "strengths": [1, 1, 1], "initial_seed": 4},
            "noise": {"sigma": 0.0, "theta": 1.0, "seed": 0, "dt": 0.01, "t_final": 0.1}
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        let r = c.resolved().unwrap();
        assert!(r.parameters.get("positions").is_some());
        assert!(r.parameters.get("initial_seed").is_none());
        assert_eq!(c.build().unwrap().x0, r.build().unwrap().x0);
        let again = RunConfig::from_json(&r.to_json()).unwrap();
        assert_eq!(again, r);
    }
}
