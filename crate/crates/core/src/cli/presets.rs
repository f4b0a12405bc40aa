//! Shipped example configurations.

use std::path::Path;

use serde_json::json;

use super::config::RunConfig;
use super::run::{run_config, RunSummary};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 5] =
    ["rigidbody-gibbs", "rigidbody-dissipative", "heavytop-casimir", "magnetic-langevin", "vortex-figure1"];

/// File name under which `preset` stores the config it ran.
pub const PRESET_CONFIG_FILE: &str = "config.json";

pub fn preset(name: &str) -> Result<RunConfig> {
    let s = 2.0 / 3f64.sqrt();
    let v = match name {
        "rigidbody-gibbs" => json!({
            "system": "rigid_body",
            "parameters": {"inertia": [1.0, 2.0, 3.0], "initial": [s, s, s]},
            "noise": {"sigma": 0.5, "beta": 1.0, "seed": 11, "dt": 0.01, "t_final": 2000.0},
            "scheme": "coadjoint",
            "outputs": {"ensemble_size": 4, "record_stride": 100}
        }),
        "rigidbody-dissipative" => json!({
            "system": "rigid_body",
            "parameters": {"inertia": [1.0, 2.0, 3.0], "initial": [0.7, -1.1, 0.4]},
            "noise": {"sigma": 0.0, "theta": 0.1, "seed": 0, "dt": 0.001, "t_final": 200.0},
            "scheme": "coadjoint",
            "outputs": {"record_stride": 100}
        }),
        "heavytop-casimir" => json!({
            "system": "heavy_top",
            "parameters": {
                "inertia": [1.0, 1.0, 0.5], "mgl": 1.0, "chi": [0.0, 0.0, 1.0],
                "initial": [0.3, 0.2, 1.0, 0.6, 0.0, 0.8]
            },
            "noise": {"sigma": 0.3, "theta": 0.05, "seed": 5, "dt": 0.01, "t_final": 20.0},
            "scheme": "coadjoint",
            "outputs": {"ensemble_size": 8, "record_stride": 10}
        }),
        "magnetic-langevin" => json!({
            "system": "magnetic_particle",
            "parameters": {
                "mass": 1.0, "stiffness": 1.0, "field": [0.0, 0.0, 1.0],
                "initial": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
            },
            "noise": {"sigma": std::f64::consts::SQRT_2, "beta": 1.0, "seed": 7, "dt": 0.01, "t_final": 200.0},
            "scheme": "heun",
            "outputs": {"ensemble_size": 8, "record_stride": 10}
        }),
        "vortex-figure1" => json!({
            "system": "point_vortex",
            "parameters": {"R": 1.0, "strengths": [1.0, 1.0, 1.0, 1.0, 1.0, 1.0], "initial_seed": 0},
            "noise": {"sigma": 0.0, "theta": 1.0, "seed": 0, "dt": 0.01, "t_final": 1200.0},
            "scheme": "heun",
            "outputs": {"record_stride": 10}
        }),
        other => {
            return Err(Error::Config {
                field: "preset".into(),
                message: format!("unknown preset {other:?}; expected one of {}", PRESET_NAMES.join(", ")),
            })
        }
    };
    RunConfig::from_json(&v.to_string())
}

/// Writes the preset config to `out_dir` and runs it there.
pub fn run_preset(name: &str, out_dir: &Path) -> Result<RunSummary> {
    let cfg = preset(name)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(PRESET_CONFIG_FILE), cfg.to_json())?;
    run_config(&cfg, out_dir)
}
