//! Counter-based Brownian paths: Brownian-bridge refinement, CSV round trip
//! and Heun vs Ito-Euler on a common path.

use lie_langevin::dynamics::{rigid_body, Coupling};
use lie_langevin::integrate::{integrate_trajectory, IntegrateOptions, Scheme};
use lie_langevin::noise::{brownian_path, DrivingPath};

fn main() -> lie_langevin::Result<()> {
    let coarse = brownian_path(3, 0.0, 1.0, 50, 42)?;
    let fine = coarse.refine()?;
    println!("W1(1): coarse {:.15}, refined {:.15}", coarse.levels(1)[50], fine.levels(1)[100]);

    let mut buf = Vec::new();
    fine.write_csv(&mut buf)?;
    let back = DrivingPath::read_csv(buf.as_slice())?;
    println!("CSV round trip keeps {} steps", back.n_steps());

    let sys = rigid_body([1.0, 2.0, 3.0], Coupling::new(0.5, Some(1.0), None)?)?;
    let x0 = [0.6, -0.8, 1.2];
    let mut p = coarse;
    for level in 0..4 {
        let h = integrate_trajectory(&sys, Scheme::Heun, &p, &x0, &IntegrateOptions::default())?;
        let i = integrate_trajectory(&sys, Scheme::ItoEuler, &p, &x0, &IntegrateOptions::default())?;
        let gap = h.states.iter().zip(&i.states).flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs())).fold(0.0, f64::max);
        println!("level {level}: dt {:.5}, max |Heun - Ito| = {gap:.3e}", 1.0 / p.n_steps() as f64);
        p = p.refine()?;
    }
    Ok(())
}
