//! Six equal vortices under pure dissipation settle on the vertices of an
//! octahedron; the vortex JSON files can be fed back as initial data.

use lie_langevin::diagnostics::invariant_report;
use lie_langevin::dynamics::{Coupling, StochasticSystem};
use lie_langevin::integrate::{integrate_trajectory, IntegrateOptions, Scheme};
use lie_langevin::noise::brownian_path;
use lie_langevin::sphere::{octahedron_defect, PointVortexSystem, VortexConfig};

fn main() -> lie_langevin::Result<()> {
    let start = VortexConfig::random_uniform(1.0, vec![1.0; 6], 0)?;
    let sys = PointVortexSystem::new(start.clone(), 1, Coupling::untied(0.0, 1.0)?)?;
    let path = brownian_path(sys.n_noise(), 0.0, 1200.0, 120_000, 0)?;
    let opts = IntegrateOptions { record_stride: 100, diagnostics: true };
    let traj = integrate_trajectory(&sys, Scheme::Heun, &path, &start.state(), &opts)?;
    let end = start.with_state(traj.final_state())?;
    let rep = invariant_report(&traj)?;
    println!("h0: {:.6} -> {:.6}", rep.energy.initial, rep.energy.last);
    println!("octahedron defect: {:.2e}", octahedron_defect(&end.positions, 1.0)?);
    let dir = std::env::temp_dir();
    end.save(&dir.join("vortices_final.json"))?;
    println!("wrote {}", dir.join("vortices_final.json").display());
    Ok(())
}
