//! Stochastic heavy top: the coadjoint scheme keeps both Casimirs to
//! rounding, Heun drifts slowly.

use lie_langevin::diagnostics::invariant_report;
use lie_langevin::dynamics::{Coupling, HeavyTop};
use lie_langevin::integrate::{integrate_trajectory, IntegrateOptions, Scheme};
use lie_langevin::noise::brownian_path;
use nalgebra::{Matrix3, Vector3};

fn main() -> lie_langevin::Result<()> {
    let top = HeavyTop::new(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.5)), 1.0, [0.0, 0.0, 1.0], Coupling::untied(0.3, 0.05)?)?;
    let x0 = [0.3, 0.2, 1.0, 0.6, 0.0, 0.8];
    let path = brownian_path(3, 0.0, 20.0, 2000, 5)?;
    for scheme in [Scheme::Coadjoint, Scheme::Heun] {
        let rep = invariant_report(&integrate_trajectory(&top, scheme, &path, &x0, &IntegrateOptions::default())?)?;
        for c in &rep.casimirs {
            println!("{:>9} {:<13} max relative drift {:.2e}", scheme.as_str(), c.name, c.max_rel_drift);
        }
    }
    Ok(())
}
