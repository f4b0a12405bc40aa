//! Charged particle in a harmonic trap: the magnetic term leaves the
//! equilibrium variances `1/(beta k)` and `m/beta` unchanged.

use lie_langevin::dynamics::{magnetic_particle_system, Coupling, HarmonicPotential, UniformField};
use lie_langevin::integrate::{run_ensemble, IntegrateOptions, Observable, PathSpec, Scheme};

fn main() -> lie_langevin::Result<()> {
    let observables = [
        Observable::new("q1^2", |x| x[0] * x[0]),
        Observable::new("p3^2", |x| x[5] * x[5]),
    ];
    for b in [[0.0; 3], [0.0, 0.0, 1.0]] {
        let sys = magnetic_particle_system(
            1.0,
            HarmonicPotential { k: 1.0 },
            UniformField { b },
            1.0,
            Coupling::new(std::f64::consts::SQRT_2, Some(1.0), None)?,
        )?;
        let spec = PathSpec { t0: 0.0, t1: 20.0, n_steps: 2000 };
        let opts = IntegrateOptions { record_stride: 2000, diagnostics: false };
        let r = run_ensemble(&sys, Scheme::Heun, 400, 1, spec, &[0.0; 6], &observables, &opts, false)?;
        let last = r.times.len() - 1;
        println!("B = {b:?}: <q1^2> = {:.3}, <p3^2> = {:.3} (target 1)", r.means[0][last], r.means[1][last]);
    }
    Ok(())
}
