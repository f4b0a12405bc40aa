//! A Lie-Poisson system from structure constants: so(3) with a
//! non-diagonal metric and a registered Casimir, integrated with Heun.

use lie_langevin::algebra::{Casimir, LieStructure};
use lie_langevin::diagnostics::invariant_report;
use lie_langevin::dynamics::{Coupling, LiePoissonSystem};
use lie_langevin::integrate::{integrate_trajectory, IntegrateOptions, Scheme};
use lie_langevin::noise::brownian_path;
use nalgebra::DMatrix;

fn main() -> lie_langevin::Result<()> {
    let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[k][i][j] = 1.0;
        c[k][j][i] = -1.0;
    }
    let gamma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
    let structure = LieStructure::new(c, gamma)?.with_casimir(Casimir::new(
        "norm_sq",
        |m| m.iter().map(|v| v * v).sum(),
        |m| m.iter().map(|v| 2.0 * v).collect(),
    ));
    let noise = vec![vec![1.0 / 2f64.sqrt(), 0.0, 0.0], vec![0.0, 0.0, 1.0]];
    let sys = LiePoissonSystem::kinetic(structure, noise, Coupling::new(0.4, Some(2.0), None)?)?;
    let path = brownian_path(2, 0.0, 50.0, 5000, 8)?;
    let traj = integrate_trajectory(&sys, Scheme::Heun, &path, &[1.0, 0.5, -0.3], &IntegrateOptions::default())?;
    let rep = invariant_report(&traj)?;
    println!("energy {:.4} -> {:.4}", rep.energy.initial, rep.energy.last);
    for c in &rep.casimirs {
        println!("{} relative drift {:.2e}", c.name, c.max_rel_drift);
    }
    Ok(())
}
