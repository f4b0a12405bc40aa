use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};

use super::{CoadjointAxes, Coupling, Fields, StochasticSystem};
use crate::algebra::{LieStructure, StructureKind};
use crate::error::{check_dim, Error, Result};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Stochastic dissipative Lie-Poisson system on `g*`:
///
/// `dmu = ad*_{dh} mu dt + theta ad*_{(ad*_{dh} mu)^sharp} mu dt
///        + sigma sum_i ad*_{xi_i} mu o dW^i`.
#[derive(Clone)]
pub struct LiePoissonSystem {
    name: String,
    structure: LieStructure,
    energy: ScalarFn,
    gradient: VectorFn,
    noise_dirs: Vec<Vec<f64>>,
    coupling: Coupling,
    labels: Vec<String>,
}

impl std::fmt::Debug for LiePoissonSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiePoissonSystem")
            .field("name", &self.name)
            .field("structure", &self.structure)
            .field("noise_dirs", &self.noise_dirs)
            .field("coupling", &self.coupling)
            .finish()
    }
}

impl LiePoissonSystem {
    /// General constructor. The noise directions must be orthonormal in the
    /// structure's inner product (to `1e-10`); they need not span `g`.
    pub fn new(
        structure: LieStructure,
        energy: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        noise_dirs: Vec<Vec<f64>>,
        coupling: Coupling,
    ) -> Result<Self> {
        let n = structure.dim();
        for (a, xa) in noise_dirs.iter().enumerate() {
            check_dim(n, xa.len())?;
            for (b, xb) in noise_dirs.iter().enumerate().skip(a) {
                let g: f64 = (0..n)
                    .map(|i| (0..n).map(|j| xa[i] * structure.gamma()[(i, j)] * xb[j]).sum::<f64>())
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                if (g - target).abs() > 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "noise directions {a} and {b} are not orthonormal: gamma = {g}"
                    )));
                }
            }
        }
        Ok(Self {
            name: "lie_poisson".into(),
            labels: (0..n).map(|i| format!("mu{}", i + 1)).collect(),
            structure,
            energy: Arc::new(energy),
            gradient: Arc::new(gradient),
            noise_dirs,
            coupling,
        })
    }

    /// Kinetic energy `h(mu) = 1/2 gamma^{-1}(mu, mu)` with `dh = mu^sharp`.
    pub fn kinetic(structure: LieStructure, noise_dirs: Vec<Vec<f64>>, coupling: Coupling) -> Result<Self> {
        let s1 = structure.clone();
        let s2 = structure.clone();
        Self::new(
            structure,
            move |m| {
                let v = s1.sharp_raw(m);
                0.5 * m.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
            },
            move |m| s2.sharp_raw(m),
            noise_dirs,
            coupling,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = labels;
        self
    }

    pub fn structure(&self) -> &LieStructure {
        &self.structure
    }

    pub fn noise_dirs(&self) -> &[Vec<f64>] {
        &self.noise_dirs
    }

    pub fn gradient(&self, mu: &[f64]) -> Vec<f64> {
        (self.gradient)(mu)
    }

    /// Same system with a different coupling, e.g. to compare temperatures.
    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    /// Algebra element `dh + theta (ad*_{dh} mu)^sharp` whose coadjoint
    /// action gives the full drift.
    fn drift_generator(&self, mu: &[f64]) -> Vec<f64> {
        let g = (self.gradient)(mu);
        if self.coupling.theta == 0.0 {
            return g;
        }
        let v = self.structure.sharp_raw(&self.structure.ad_star_raw(&g, mu));
        g.iter().zip(&v).map(|(a, b)| a + self.coupling.theta * b).collect()
    }
}

/// Drift and diffusions of the Lie-Poisson system at `mu`.
pub fn lp_fields(system: &LiePoissonSystem, mu: &[f64]) -> Result<Fields> {
    check_dim(system.structure.dim(), mu.len())?;
    let s = &system.structure;
    let drift = s.ad_star_raw(&system.drift_generator(mu), mu);
    let diffusions = system
        .noise_dirs
        .iter()
        .map(|xi| {
            s.ad_star_raw(xi, mu)
                .into_iter()
                .map(|v| system.coupling.sigma * v)
                .collect()
        })
        .collect();
    Ok(Fields { drift, diffusions })
}

/// Stratonovich-to-Ito drift correction. The noise is linear in `mu`, so
/// this is `sigma^2 / 2 sum_i ad*_{xi_i} ad*_{xi_i} mu`.
pub fn lp_ito_correction(system: &LiePoissonSystem, mu: &[f64]) -> Result<Vec<f64>> {
    let s = &system.structure;
    check_dim(s.dim(), mu.len())?;
    let s2 = system.coupling.sigma * system.coupling.sigma;
    let mut out = vec![0.0; mu.len()];
    for xi in &system.noise_dirs {
        let once = s.ad_star_raw(xi, mu);
        let twice = s.ad_star_raw(xi, &once);
        for (o, t) in out.iter_mut().zip(twice) {
            *o += 0.5 * s2 * t;
        }
    }
    Ok(out)
}

impl StochasticSystem for LiePoissonSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn state_dim(&self) -> usize {
        self.structure.dim()
    }

    fn n_noise(&self) -> usize {
        self.noise_dirs.len()
    }

    fn fields(&self, x: &[f64]) -> Result<Fields> {
        lp_fields(self, x)
    }

    fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.structure.dim(), x.len())?;
        Ok(self.structure.ad_star_raw(&self.drift_generator(x), x))
    }

    fn ito_correction(&self, x: &[f64]) -> Result<Vec<f64>> {
        lp_ito_correction(self, x)
    }

    fn energy(&self, x: &[f64]) -> f64 {
        (self.energy)(x)
    }

    fn casimirs(&self, x: &[f64]) -> Vec<(String, f64)> {
        self.structure
            .casimir_list()
            .iter()
            .map(|c| (c.name.clone(), c.value(x)))
            .collect()
    }

    fn state_labels(&self) -> Vec<String> {
        self.labels.clone()
    }

    fn coadjoint_axes(&self, x: &[f64]) -> Option<CoadjointAxes> {
        // spatial: ad*_xi Pi = xi x Pi; body: ad*_xi Pi = (-xi) x Pi
        let sign = match self.structure.kind() {
            StructureKind::So3Spatial => 1.0,
            StructureKind::So3Body => -1.0,
            _ => return None,
        };
        let g = self.drift_generator(x);
        let sigma = self.coupling.sigma;
        Some(CoadjointAxes {
            drift: [sign * g[0], sign * g[1], sign * g[2]],
            noise: self
                .noise_dirs
                .iter()
                .map(|xi| [sign * sigma * xi[0], sign * sigma * xi[1], sign * sigma * xi[2]])
                .collect(),
        })
    }

    fn coupling(&self) -> Coupling {
        self.coupling
    }
}

/// Free rigid body with principal moments `inertia`.
///
/// Uses `dPi = Omega x Pi dt + theta ... + sigma sum_i xi_i x Pi o dW^i`
/// with `Omega = I^{-1} Pi`, metric `gamma = I` and noise along the principal
/// axes scaled to unit length in that metric.
pub fn rigid_body(inertia: [f64; 3], coupling: Coupling) -> Result<LiePoissonSystem> {
    rigid_body_with_inertia(Matrix3::from_diagonal(&inertia.into()), coupling)
}

/// Rigid body with a general symmetric positive-definite inertia tensor.
pub fn rigid_body_with_inertia(inertia: Matrix3<f64>, coupling: Coupling) -> Result<LiePoissonSystem> {
    let structure = LieStructure::so3_spatial(inertia)?;
    let eig = SymmetricEigen::new(inertia);
    let noise = (0..3)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            let s = eig.eigenvalues[k].sqrt();
            vec![v[0] / s, v[1] / s, v[2] / s]
        })
        .collect();
    Ok(LiePoissonSystem::kinetic(structure, noise, coupling)?
        .with_name("rigid_body")
        .with_labels(vec!["Pi1".into(), "Pi2".into(), "Pi3".into()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn body(theta: f64, sigma: f64) -> LiePoissonSystem {
        rigid_body([1.0, 2.0, 3.0], Coupling::untied(sigma, theta).unwrap()).unwrap()
    }

    #[test]
    fn conservative_drift_is_omega_cross_pi() {
        let s = body(0.0, 0.0);
        let pi = [1.0, 1.0, 1.0];
        let f = s.fields(&pi).unwrap();
        // Omega = (1, 1/2, 1/3); Omega x Pi
        let expect = [0.5 - 1.0 / 3.0, 1.0 / 3.0 - 1.0, 1.0 - 0.5];
        for k in 0..3 {
            assert_relative_eq!(f.drift[k], expect[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn dissipative_part_matches_hand_value() {
        let theta = 0.7;
        let d0 = body(0.0, 0.0).drift(&[1.0, 1.0, 1.0]).unwrap();
        let d1 = body(theta, 0.0).drift(&[1.0, 1.0, 1.0]).unwrap();
        let expect = [-0.5 * theta, 0.0, 0.5 * theta];
        for k in 0..3 {
            assert_relative_eq!(d1[k] - d0[k], expect[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn noise_directions_are_metric_orthonormal() {
        let s = body(0.0, 1.0);
        let inertia = [1.0, 2.0, 3.0];
        for a in s.noise_dirs() {
            let g: f64 = (0..3).map(|i| a[i] * a[i] * inertia[i]).sum();
            assert_relative_eq!(g, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_ito_correction_matches_numerical() {
        let s = rigid_body_with_inertia(
            Matrix3::new(2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0),
            Coupling::untied(0.8, 0.2).unwrap(),
        )
        .unwrap();
        let x = [0.4, -1.2, 0.9];
        let analytic = s.ito_correction(&x).unwrap();
        struct Plain<'a>(&'a LiePoissonSystem);
        impl StochasticSystem for Plain<'_> {
            fn name(&self) -> &str {
                "plain"
            }
            fn state_dim(&self) -> usize {
                3
            }
            fn n_noise(&self) -> usize {
                3
            }
            fn fields(&self, x: &[f64]) -> Result<Fields> {
                self.0.fields(x)
            }
            fn energy(&self, x: &[f64]) -> f64 {
                self.0.energy(x)
            }
            fn coupling(&self) -> Coupling {
                self.0.coupling()
            }
        }
        let numeric = Plain(&s).ito_correction(&x).unwrap();
        for k in 0..3 {
            assert_relative_eq!(analytic[k], numeric[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn isotropic_ito_correction_is_minus_sigma_sq_pi() {
        let s = rigid_body([1.0, 1.0, 1.0], Coupling::untied(0.6, 0.0).unwrap()).unwrap();
        let x = [0.3, -0.7, 1.1];
        let c = s.ito_correction(&x).unwrap();
        for k in 0..3 {
            assert_relative_eq!(c[k], -0.36 * x[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_non_orthonormal_noise() {
        let st = LieStructure::so3(Matrix3::identity()).unwrap();
        let r = LiePoissonSystem::kinetic(st, vec![vec![1.0, 1.0, 0.0]], Coupling::untied(1.0, 0.0).unwrap());
        assert!(r.is_err());
    }

    #[test]
    fn coadjoint_axes_reproduce_fields() {
        let s = body(0.3, 0.5);
        let x = [0.2, 1.0, -0.4];
        let f = s.fields(&x).unwrap();
        let ax = s.coadjoint_axes(&x).unwrap();
        let d = super::super::cross(&ax.drift, &x);
        for k in 0..3 {
            assert_relative_eq!(d[k], f.drift[k], epsilon = 1e-14);
        }
        for (a, fi) in ax.noise.iter().zip(&f.diffusions) {
            let v = super::super::cross(a, &x);
            for k in 0..3 {
                assert_relative_eq!(v[k], fi[k], epsilon = 1e-14);
            }
        }
    }
}
