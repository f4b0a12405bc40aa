use std::sync::Arc;

use super::{cross, Coupling, Fields, StochasticSystem};
use crate::error::{check_dim, Error, Result};

/// Scalar potential `V(q)` on `R^3`.
pub trait Potential: Send + Sync {
    fn value(&self, q: &[f64; 3]) -> f64;
    fn gradient(&self, q: &[f64; 3]) -> [f64; 3];
}

/// `V = k |q|^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPotential {
    pub k: f64,
}

impl Potential for HarmonicPotential {
    fn value(&self, q: &[f64; 3]) -> f64 {
        0.5 * self.k * (q[0] * q[0] + q[1] * q[1] + q[2] * q[2])
    }

    fn gradient(&self, q: &[f64; 3]) -> [f64; 3] {
        [self.k * q[0], self.k * q[1], self.k * q[2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn value(&self, _q: &[f64; 3]) -> f64 {
        0.0
    }

    fn gradient(&self, _q: &[f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }
}

/// One-form `A` on `R^3` together with its magnetic term
/// `B_i = (eps_ijk / 2)(dA_j/dq^k - dA_k/dq^j)`.
pub trait VectorPotential: Send + Sync {
    fn value(&self, q: &[f64; 3]) -> [f64; 3];

    /// Magnetic term; the default differentiates `value` numerically.
    fn field(&self, q: &[f64; 3]) -> [f64; 3] {
        let scale = q.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let h = f64::EPSILON.cbrt() * scale;
        // jac[j][k] = dA_j / dq^k
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let mut a = *q;
            let mut b = *q;
            a[k] += h;
            b[k] -= h;
            let fa = self.value(&a);
            let fb = self.value(&b);
            for j in 0..3 {
                jac[j][k] = (fa[j] - fb[j]) / (2.0 * h);
            }
        }
        magnetic_term(&jac)
    }
}

/// `B_i = (eps_ijk / 2)(J[j][k] - J[k][j])` for `J[j][k] = dA_j/dq^k`.
pub(crate) fn magnetic_term(jac: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut b = [0.0; 3];
    for (i, bi) in b.iter_mut().enumerate() {
        for j in 0..3 {
            for k in 0..3 {
                let e = crate::algebra::levi_civita(i, j, k);
                if e != 0.0 {
                    *bi += 0.5 * e * (jac[j][k] - jac[k][j]);
                }
            }
        }
    }
    b
}

/// Constant magnetic term `b`, generated by `A = -(b x q) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub b: [f64; 3],
}

impl VectorPotential for UniformField {
    fn value(&self, q: &[f64; 3]) -> [f64; 3] {
        let c = cross(&self.b, q);
        [-0.5 * c[0], -0.5 * c[1], -0.5 * c[2]]
    }

    fn field(&self, _q: &[f64; 3]) -> [f64; 3] {
        self.b
    }
}

/// Charged Brownian particle on `T*R^3` with state `(q, p~)`:
///
/// `dq = p~/m dt`,
/// `dp~ = (-grad V + (mu/m) p~ x B - (theta/m) p~) dt + sigma dW`.
#[derive(Clone)]
pub struct MagneticParticle {
    mass: f64,
    charge: f64,
    potential: Arc<dyn Potential>,
    vector_potential: Arc<dyn VectorPotential>,
    coupling: Coupling,
}

impl std::fmt::Debug for MagneticParticle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MagneticParticle")
            .field("mass", &self.mass)
            .field("charge", &self.charge)
            .field("coupling", &self.coupling)
            .finish()
    }
}

impl MagneticParticle {
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn magnetic_field(&self, q: &[f64; 3]) -> [f64; 3] {
        self.vector_potential.field(q)
    }
}

/// Builds the magnetic Langevin particle. `mass` must be positive.
pub fn magnetic_particle_system(
    mass: f64,
    potential: impl Potential + 'static,
    vector_potential: impl VectorPotential + 'static,
    charge: f64,
    coupling: Coupling,
) -> Result<MagneticParticle> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
    }
    Ok(MagneticParticle {
        mass,
        charge,
        potential: Arc::new(potential),
        vector_potential: Arc::new(vector_potential),
        coupling,
    })
}

fn split(x: &[f64]) -> ([f64; 3], [f64; 3]) {
    ([x[0], x[1], x[2]], [x[3], x[4], x[5]])
}

impl StochasticSystem for MagneticParticle {
    fn name(&self) -> &str {
        "magnetic_particle"
    }

    fn state_dim(&self) -> usize {
        6
    }

    fn n_noise(&self) -> usize {
        3
    }

    fn fields(&self, x: &[f64]) -> Result<Fields> {
        Ok(Fields {
            drift: self.drift(x)?,
            diffusions: (0..3)
                .map(|i| {
                    let mut f = vec![0.0; 6];
                    f[3 + i] = self.coupling.sigma;
                    f
                })
                .collect(),
        })
    }

    fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(6, x.len())?;
        let (q, p) = split(x);
        let m = self.mass;
        let grad = self.potential.gradient(&q);
        let b = self.vector_potential.field(&q);
        let pxb = cross(&p, &b);
        let mut d = vec![p[0] / m, p[1] / m, p[2] / m, 0.0, 0.0, 0.0];
        for i in 0..3 {
            d[3 + i] = -grad[i] + self.charge / m * pxb[i] - self.coupling.theta / m * p[i];
        }
        Ok(d)
    }

    /// Additive noise: the correction vanishes.
    fn ito_correction(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(6, x.len())?;
        Ok(vec![0.0; 6])
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let (q, p) = split(x);
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (2.0 * self.mass) + self.potential.value(&q)
    }

    fn state_labels(&self) -> Vec<String> {
        ["q1", "q2", "q3", "p1", "p2", "p3"].iter().map(|s| s.to_string()).collect()
    }

    fn coupling(&self) -> Coupling {
        self.coupling
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Swirl;
    impl VectorPotential for Swirl {
        fn value(&self, q: &[f64; 3]) -> [f64; 3] {
            [q[1] * q[2], -q[0] * q[0], (q[0] * q[1]).sin()]
        }
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let c = Coupling::untied(0.0, 0.0).unwrap();
        assert!(magnetic_particle_system(0.0, ZeroPotential, UniformField { b: [0.0; 3] }, 1.0, c).is_err());
        assert!(magnetic_particle_system(-1.0, ZeroPotential, UniformField { b: [0.0; 3] }, 1.0, c).is_err());
    }

    #[test]
    fn uniform_field_potential_reproduces_b() {
        let u = UniformField { b: [0.3, -1.2, 2.0] };
        struct Numeric(UniformField);
        impl VectorPotential for Numeric {
            fn value(&self, q: &[f64; 3]) -> [f64; 3] {
                self.0.value(q)
            }
        }
        let b = Numeric(u).field(&[0.4, 1.0, -2.0]);
        for k in 0..3 {
            assert_relative_eq!(b[k], u.b[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn general_field_matches_hand_derivative() {
        // A = (yz, -x^2, sin(xy)); J[j][k] = dA_j/dq^k
        let q: [f64; 3] = [0.5, -0.3, 1.2];
        let (x, y, z) = (q[0], q[1], q[2]);
        let c = (x * y).cos();
        let jac = [[0.0, z, y], [-2.0 * x, 0.0, 0.0], [y * c, x * c, 0.0]];
        let expect = magnetic_term(&jac);
        // B_1 = (dA_2/dq^3 - dA_3/dq^2) etc.
        assert_relative_eq!(expect[0], jac[1][2] - jac[2][1], epsilon = 1e-15);
        let b = Swirl.field(&q);
        for k in 0..3 {
            assert_relative_eq!(b[k], expect[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn pure_momentum_decay_rate() {
        let s = magnetic_particle_system(
            2.0,
            ZeroPotential,
            UniformField { b: [0.0; 3] },
            1.0,
            Coupling::untied(0.0, 0.6).unwrap(),
        )
        .unwrap();
        let d = s.drift(&[0.0, 0.0, 0.0, 1.0, -2.0, 0.5]).unwrap();
        assert_relative_eq!(d[3], -0.3, epsilon = 1e-15);
        assert_relative_eq!(d[4], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn energy_rate_matches_chain_rule() {
        let theta = 0.4;
        let m = 1.5;
        let s = magnetic_particle_system(
            m,
            HarmonicPotential { k: 2.0 },
            UniformField { b: [0.2, 0.0, 1.0] },
            0.7,
            Coupling::untied(0.0, theta).unwrap(),
        )
        .unwrap();
        let x = [0.3, -0.2, 1.0, 0.5, 1.5, -0.4];
        let d = s.drift(&x).unwrap();
        let grad = [2.0 * x[0], 2.0 * x[1], 2.0 * x[2], x[3] / m, x[4] / m, x[5] / m];
        let rate: f64 = grad.iter().zip(&d).map(|(a, b)| a * b).sum();
        let p2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
        assert_relative_eq!(rate, -theta / (m * m) * p2, epsilon = 1e-14);
    }
}
