use std::sync::Arc;

use super::{Coupling, Fields, StochasticSystem};
use crate::error::{check_dim, Error, Result};

type ValueFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// A scalar function `H(q, p)` on canonical phase space, with an optional
/// analytic gradient. Without one, central differences are used.
#[derive(Clone)]
pub struct PhaseFunction {
    value: ValueFn,
    gradient: Option<GradFn>,
}

impl std::fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhaseFunction")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl PhaseFunction {
    pub fn new(
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), gradient: Some(Arc::new(gradient)) }
    }

    /// Function whose gradient is taken by central differences.
    pub fn numerical(value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), gradient: None }
    }

    /// `H = p^2 / 2m + V(q)` with analytic gradient.
    pub fn kinetic_plus(
        mass: f64,
        potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_potential: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            move |q, p| p.iter().map(|v| v * v).sum::<f64>() / (2.0 * mass) + potential(q),
            move |q, p| (grad_potential(q), p.iter().map(|v| v / mass).collect()),
        )
    }

    /// Linear function `H = q^i`.
    pub fn position(i: usize) -> Self {
        Self::new(
            move |q, _| q[i],
            move |q, p| {
                let mut dq = vec![0.0; q.len()];
                dq[i] = 1.0;
                (dq, vec![0.0; p.len()])
            },
        )
    }

    pub fn value(&self, q: &[f64], p: &[f64]) -> f64 {
        (self.value)(q, p)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// `(dH/dq, dH/dp)`.
    pub fn gradient(&self, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &self.gradient {
            Some(g) => g(q, p),
            None => self.numerical_gradient(q, p),
        }
    }

    /// Central differences with step `eps^{1/3} * max(1, |z|_inf)`.
    pub fn numerical_gradient(&self, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let scale = q.iter().chain(p).fold(1.0f64, |m, v| m.max(v.abs()));
        let h = f64::EPSILON.cbrt() * scale;
        let mut qq = q.to_vec();
        let mut pp = p.to_vec();
        let mut dq = vec![0.0; q.len()];
        for i in 0..q.len() {
            qq[i] = q[i] + h;
            let a = (self.value)(&qq, p);
            qq[i] = q[i] - h;
            let b = (self.value)(&qq, p);
            qq[i] = q[i];
            dq[i] = (a - b) / (2.0 * h);
        }
        let mut dp = vec![0.0; p.len()];
        for i in 0..p.len() {
            pp[i] = p[i] + h;
            let a = (self.value)(q, &pp);
            pp[i] = p[i] - h;
            let b = (self.value)(q, &pp);
            pp[i] = p[i];
            dp[i] = (a - b) / (2.0 * h);
        }
        (dq, dp)
    }

    /// Hamiltonian vector field `(dH/dp, -dH/dq)`.
    pub fn hamiltonian_field(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        let (dq, dp) = self.gradient(q, p);
        dp.into_iter().chain(dq.into_iter().map(|v| -v)).collect()
    }
}

/// Canonical Poisson bracket `{F, G} = dF/dq . dG/dp - dF/dp . dG/dq`.
pub fn poisson_bracket(f: &PhaseFunction, g: &PhaseFunction, q: &[f64], p: &[f64]) -> f64 {
    let (fq, fp) = f.gradient(q, p);
    let (gq, gp) = g.gradient(q, p);
    let a: f64 = fq.iter().zip(&gp).map(|(x, y)| x * y).sum();
    let b: f64 = fp.iter().zip(&gq).map(|(x, y)| x * y).sum();
    a - b
}

/// Symplectic Langevin system on `T*R^n` with state `(q, p)`.
///
/// The energy is `hamiltonians[0]`; the noise Hamiltonians are `sigma H_i`
/// for `i >= 1`, so
/// `dz = X_{H_0} dt - theta sum_i {H_0, H_i} X_{H_i} dt + sigma sum_i X_{H_i} o dW^i`.
#[derive(Clone)]
pub struct CanonicalSystem {
    name: String,
    dim_q: usize,
    hamiltonians: Vec<PhaseFunction>,
    coupling: Coupling,
    momenta: Vec<(String, PhaseFunction)>,
}

impl std::fmt::Debug for CanonicalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CanonicalSystem")
            .field("name", &self.name)
            .field("dim_q", &self.dim_q)
            .field("n_hamiltonians", &self.hamiltonians.len())
            .field("coupling", &self.coupling)
            .finish()
    }
}

impl CanonicalSystem {
    pub fn new(dim_q: usize, hamiltonians: Vec<PhaseFunction>, coupling: Coupling) -> Result<Self> {
        if dim_q == 0 {
            return Err(Error::InvalidInput("dim_q must be positive".into()));
        }
        if hamiltonians.is_empty() {
            return Err(Error::InvalidInput("at least the energy H_0 is required".into()));
        }
        Ok(Self { name: "canonical".into(), dim_q, hamiltonians, coupling, momenta: Vec::new() })
    }

    /// Underdamped Langevin on `R^n`: `H_0 = p^2/2m + V`, `H_i = q^i`.
    pub fn underdamped(
        dim_q: usize,
        mass: f64,
        potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_potential: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        coupling: Coupling,
    ) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
        }
        let mut hs = vec![PhaseFunction::kinetic_plus(mass, potential, grad_potential)];
        hs.extend((0..dim_q).map(PhaseFunction::position));
        Ok(Self::new(dim_q, hs, coupling)?.with_name("underdamped_langevin"))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Registers a conserved quantity reported by [`StochasticSystem::momentum_map`].
    pub fn with_momentum(mut self, name: impl Into<String>, f: PhaseFunction) -> Self {
        self.momenta.push((name.into(), f));
        self
    }

    pub fn dim_q(&self) -> usize {
        self.dim_q
    }

    pub fn hamiltonians(&self) -> &[PhaseFunction] {
        &self.hamiltonians
    }

    fn split<'a>(&self, x: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        check_dim(2 * self.dim_q, x.len())?;
        Ok(x.split_at(self.dim_q))
    }
}

/// Hamiltonian vector fields `X_{H_i} = (dH_i/dp, -dH_i/dq)` for every
/// Hamiltonian of the system, energy first. Unscaled by `sigma`.
pub fn bismut_fields(sys: &CanonicalSystem, q: &[f64], p: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_dim(sys.dim_q, q.len())?;
    check_dim(sys.dim_q, p.len())?;
    Ok(sys.hamiltonians.iter().map(|h| h.hamiltonian_field(q, p)).collect())
}

/// Drift and diffusions of the symplectic Langevin equation.
pub fn langevin_fields(sys: &CanonicalSystem, q: &[f64], p: &[f64]) -> Result<Fields> {
    let xs = bismut_fields(sys, q, p)?;
    let sigma = sys.coupling.sigma;
    let theta = sys.coupling.theta;
    let mut drift = xs[0].clone();
    if theta != 0.0 {
        for h in &sys.hamiltonians[1..] {
            let c = poisson_bracket(&sys.hamiltonians[0], h, q, p);
            let xh = h.hamiltonian_field(q, p);
            for (d, v) in drift.iter_mut().zip(xh) {
                *d -= theta * c * v;
            }
        }
    }
    let diffusions = xs[1..]
        .iter()
        .map(|f| f.iter().map(|v| sigma * v).collect())
        .collect();
    Ok(Fields { drift, diffusions })
}

impl StochasticSystem for CanonicalSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn state_dim(&self) -> usize {
        2 * self.dim_q
    }

    fn n_noise(&self) -> usize {
        self.hamiltonians.len() - 1
    }

    fn fields(&self, x: &[f64]) -> Result<Fields> {
        let (q, p) = self.split(x)?;
        langevin_fields(self, q, p)
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let (q, p) = x.split_at(self.dim_q);
        self.hamiltonians[0].value(q, p)
    }

    fn momentum_map(&self, x: &[f64]) -> Vec<(String, f64)> {
        let (q, p) = x.split_at(self.dim_q);
        self.momenta.iter().map(|(n, f)| (n.clone(), f.value(q, p))).collect()
    }

    fn state_labels(&self) -> Vec<String> {
        (1..=self.dim_q)
            .map(|i| format!("q{i}"))
            .chain((1..=self.dim_q).map(|i| format!("p{i}")))
            .collect()
    }

    fn coupling(&self) -> Coupling {
        self.coupling
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn harmonic(theta: f64, sigma: f64) -> CanonicalSystem {
        CanonicalSystem::underdamped(
            2,
            2.0,
            |q| 0.5 * (q[0] * q[0] + 3.0 * q[1] * q[1]),
            |q| vec![q[0], 3.0 * q[1]],
            Coupling::untied(sigma, theta).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn free_particle_field() {
        let h = PhaseFunction::kinetic_plus(1.0, |_| 0.0, |q| vec![0.0; q.len()]);
        let f = h.hamiltonian_field(&[0.3, 0.1], &[1.5, -2.0]);
        assert_eq!(f, vec![1.5, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn position_hamiltonian_gives_additive_momentum_noise() {
        let f = PhaseFunction::position(1).hamiltonian_field(&[0.3, 0.1, 2.0], &[1.0, 1.0, 1.0]);
        assert_eq!(f, vec![0.0, 0.0, 0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn langevin_drift_is_underdamped() {
        let s = harmonic(0.4, 1.0);
        let q = [0.5, -1.0];
        let p = [2.0, 1.0];
        let f = langevin_fields(&s, &q, &p).unwrap();
        // dq = p/m, dp = -grad V - (theta/m) p
        let expect = [1.0, 0.5, -0.5 - 0.4, 3.0 - 0.2];
        for k in 0..4 {
            assert_relative_eq!(f.drift[k], expect[k], epsilon = 1e-14);
        }
        assert_eq!(f.diffusions[0], vec![0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn zero_theta_gives_bismut_drift() {
        let s = harmonic(0.0, 1.0);
        let f = langevin_fields(&s, &[0.5, -1.0], &[2.0, 1.0]).unwrap();
        let x0 = &bismut_fields(&s, &[0.5, -1.0], &[2.0, 1.0]).unwrap()[0];
        assert_eq!(&f.drift, x0);
    }

    #[test]
    fn numerical_gradient_matches_analytic() {
        let h = PhaseFunction::kinetic_plus(1.3, |q| q[0].powi(4) + q[0] * q[1], |q| {
            vec![4.0 * q[0].powi(3) + q[1], q[0]]
        });
        let q = [0.7, -0.2];
        let p = [0.1, 0.9];
        let (aq, ap) = h.gradient(&q, &p);
        let (nq, np) = h.numerical_gradient(&q, &p);
        for k in 0..2 {
            assert_relative_eq!(aq[k], nq[k], epsilon = 1e-8);
            assert_relative_eq!(ap[k], np[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn hamiltonian_fields_are_divergence_free() {
        let h = PhaseFunction::numerical(|q, p| (q[0] * p[1]).sin() + q[1] * q[1] * p[0]);
        let z = [0.3, -0.4, 0.8, 0.2];
        let hstep = 1e-4;
        let mut div = 0.0;
        for k in 0..4 {
            let mut a = z;
            let mut b = z;
            a[k] += hstep;
            b[k] -= hstep;
            let fa = h.hamiltonian_field(&a[..2], &a[2..]);
            let fb = h.hamiltonian_field(&b[..2], &b[2..]);
            div += (fa[k] - fb[k]) / (2.0 * hstep);
        }
        assert!(div.abs() < 1e-5, "divergence {div}");
    }

    #[test]
    fn additive_noise_has_no_ito_correction() {
        let s = harmonic(0.2, 0.7);
        let c = s.ito_correction(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn dissipation_decreases_energy(
            q0 in -3.0..3.0f64, q1 in -3.0..3.0f64, p0 in -3.0..3.0f64, p1 in -3.0..3.0f64,
        ) {
            let s = harmonic(0.3, 1.0);
            let q = [q0, q1];
            let p = [p0, p1];
            let f = langevin_fields(&s, &q, &p).unwrap();
            let (gq, gp) = s.hamiltonians()[0].gradient(&q, &p);
            let rate: f64 = gq.iter().chain(&gp).zip(&f.drift).map(|(a, b)| a * b).sum();
            let oracle: f64 = -0.3 * s.hamiltonians()[1..]
                .iter()
                .map(|h| poisson_bracket(&s.hamiltonians()[0], h, &q, &p).powi(2))
                .sum::<f64>();
            prop_assert!(rate <= 1e-12);
            prop_assert!((rate - oracle).abs() < 1e-10);
        }
    }
}
