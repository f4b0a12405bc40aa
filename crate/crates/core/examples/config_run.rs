//! Drives a JSON config through the same code path as `lie-langevin run`.

use lie_langevin::cli::{run_config, RunConfig};

fn main() -> lie_langevin::Result<()> {
    let cfg = RunConfig::from_json(
        r#"{
            "system": "heavy_top",
            "parameters": {"inertia": [1, 1, 0.5], "mgl": 1, "chi": [0, 0, 1], "initial": [0.3, 0.2, 1, 0.6, 0, 0.8]},
            "noise": {"sigma": 0.3, "theta": 0.05, "seed": 5, "dt": 0.01, "t_final": 5},
            "scheme": "coadjoint",
            "outputs": {"ensemble_size": 3, "record_stride": 10}
        }"#,
    )?;
    let dir = std::env::temp_dir().join("lie-langevin-config-run");
    let summary = run_config(&cfg, &dir)?;
    println!("status {} in {}", summary.status, dir.display());
    for f in &summary.files {
        println!("  {f}");
    }
    Ok(())
}
