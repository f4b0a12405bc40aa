//! Stratonovich vector fields for every system class.
//!
//! All systems expose the same [`StochasticSystem`] interface so the
//! integrators, ensembles and diagnostics never special-case a model. The
//! drift is the `dt` field and diffusion `i` multiplies `dW^i`.

mod canonical;
mod heavy_top;
mod lie_poisson;
mod magnetic;

pub use canonical::{bismut_fields, langevin_fields, poisson_bracket, CanonicalSystem, PhaseFunction};
pub use heavy_top::{heavy_top_fields, HeavyTop, HeavyTopNoise};
pub use lie_poisson::{lp_fields, lp_ito_correction, rigid_body, rigid_body_with_inertia, LiePoissonSystem};
pub use magnetic::{
    magnetic_particle_system, HarmonicPotential, MagneticParticle, Potential, UniformField,
    VectorPotential, ZeroPotential,
};

use crate::error::{Error, Result};

/// Drift and diffusion fields evaluated at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub drift: Vec<f64>,
    pub diffusions: Vec<Vec<f64>>,
}

/// Rotation generators for an `so(3)` coadjoint update `dPi = axis x Pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoadjointAxes {
    /// Drift rotation vector (per unit time).
    pub drift: [f64; 3],
    /// Constant rotation vector for each noise component.
    pub noise: Vec<[f64; 3]>,
}

/// Generators `(xi, u)` for a coadjoint update on `so(3)* x R^3`, where
/// `ad*_{(xi, u)}(Pi, Gamma) = (Pi x xi + Gamma x u, Gamma x xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemidirectGenerators {
    pub drift: ([f64; 3], [f64; 3]),
    pub noise: Vec<([f64; 3], [f64; 3])>,
}

/// Noise amplitude, dissipation and temperature of a system.
///
/// `theta = beta sigma^2 / 2` is enforced whenever `beta` is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub sigma: f64,
    pub theta: f64,
    pub beta: Option<f64>,
}

impl Coupling {
    /// Resolves the coupling from `sigma` and at least one of `beta`/`theta`.
    /// With neither given the system is conservative (`theta = 0`).
    pub fn new(sigma: f64, beta: Option<f64>, theta: Option<f64>) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma must be >= 0, got {sigma}")));
        }
        if let Some(b) = beta {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::InvalidInput(format!("beta must be >= 0, got {b}")));
            }
        }
        if let Some(t) = theta {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidInput(format!("theta must be >= 0, got {t}")));
            }
        }
        let theta = match (beta, theta) {
            (Some(b), Some(t)) => {
                let expected = b * sigma * sigma / 2.0;
                if (t - expected).abs() > 1e-12 * t.max(expected) {
                    return Err(Error::InvalidInput(format!(
                        "theta = {t} violates theta = beta sigma^2 / 2 = {expected}"
                    )));
                }
                t
            }
            (Some(b), None) => b * sigma * sigma / 2.0,
            (None, Some(t)) => t,
            (None, None) => 0.0,
        };
        Ok(Self { sigma, theta, beta })
    }

    /// Coupling with an explicit `theta` that is not tied to any temperature.
    pub fn untied(sigma: f64, theta: f64) -> Result<Self> {
        Self::new(sigma, None, Some(theta))
    }
}

/// A Stratonovich SDE `dx = f_0(x) dt + sum_i f_i(x) o dW^i` with diagnostics.
pub trait StochasticSystem: Send + Sync {
    /// Short identifier recorded in run metadata.
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    /// Number of Brownian components (excluding the clock).
    fn n_noise(&self) -> usize;

    fn fields(&self, x: &[f64]) -> Result<Fields>;

    /// Drift only; avoids evaluating diffusions where they are not needed.
    fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.fields(x)?.drift)
    }

    /// Stratonovich-to-Ito correction `1/2 sum_i (D f_i) f_i`.
    ///
    /// The default uses central differences of the diffusion fields along
    /// themselves; systems with linear or additive noise override it.
    fn ito_correction(&self, x: &[f64]) -> Result<Vec<f64>> {
        let base = self.fields(x)?;
        let n = x.len();
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut out = vec![0.0; n];
        for (i, f) in base.diffusions.iter().enumerate() {
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let h = f64::EPSILON.cbrt() * scale / norm;
            let plus: Vec<f64> = x.iter().zip(f).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = x.iter().zip(f).map(|(a, b)| a - h * b).collect();
            let fp = &self.fields(&plus)?.diffusions[i];
            let fm = &self.fields(&minus)?.diffusions[i];
            for k in 0..n {
                out[k] += 0.5 * (fp[k] - fm[k]) / (2.0 * h);
            }
        }
        Ok(out)
    }

    /// Energy `h_0`.
    fn energy(&self, x: &[f64]) -> f64;

    fn casimirs(&self, _x: &[f64]) -> Vec<(String, f64)> {
        Vec::new()
    }

    fn momentum_map(&self, _x: &[f64]) -> Vec<(String, f64)> {
        Vec::new()
    }

    /// Column labels for the state coordinates.
    fn state_labels(&self) -> Vec<String> {
        (0..self.state_dim()).map(|i| format!("x{i}")).collect()
    }

    /// Post-step projection back onto the state manifold.
    fn project(&self, _x: &mut [f64]) {}

    /// Rotation generators when the state evolves by `so(3)` coadjoint motion.
    fn coadjoint_axes(&self, _x: &[f64]) -> Option<CoadjointAxes> {
        None
    }

    /// Generators when the state `(Pi, Gamma)` moves by semidirect
    /// coadjoint motion.
    fn semidirect_generators(&self, _x: &[f64]) -> Option<SemidirectGenerators> {
        None
    }

    fn coupling(&self) -> Coupling;
}

pub fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
