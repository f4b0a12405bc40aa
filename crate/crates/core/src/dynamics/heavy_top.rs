use nalgebra::{DMatrix, Matrix3, Vector3};

use super::{cross, dot, Coupling, Fields, SemidirectGenerators, StochasticSystem};
use crate::error::{check_dim, Error, Result};

/// One noise direction `(xi_i, grad gamma_i(a_0))` of the heavy top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTopNoise {
    pub xi: [f64; 3],
    pub grad_gamma: [f64; 3],
}

impl HeavyTopNoise {
    /// Pure rotational noise about the standard axes.
    pub fn standard() -> Vec<Self> {
        (0..3)
            .map(|i| {
                let mut xi = [0.0; 3];
                xi[i] = 1.0;
                Self { xi, grad_gamma: [0.0; 3] }
            })
            .collect()
    }
}

/// Stochastic dissipative heavy top on `so(3)* x R^3` with state `(Pi, Gamma)`.
///
/// With `Omega = I^{-1} Pi`, `A = Pi x Omega + Mgl Gamma x chi` and
/// `(U, V) = sharp(A, Gamma x Omega)`:
///
/// `dPi = A dt + theta (Pi x U + Gamma x V) dt
///        + sigma sum_i (Pi x xi_i + Gamma x g_i) o dW^i`,
/// `dGamma = Gamma x Omega dt + theta Gamma x U dt + sigma sum_i Gamma x xi_i o dW^i`.
#[derive(Debug, Clone)]
pub struct HeavyTop {
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
    mgl: f64,
    chi: [f64; 3],
    noise: Vec<HeavyTopNoise>,
    metric_inv: DMatrix<f64>,
    coupling: Coupling,
    gamma_norm: Option<f64>,
}

impl HeavyTop {
    /// Heavy top with the standard noise and block-identity metric.
    pub fn new(inertia: Matrix3<f64>, mgl: f64, chi: [f64; 3], coupling: Coupling) -> Result<Self> {
        let inertia_inv = inertia
            .try_inverse()
            .filter(|_| inertia.cholesky().is_some() && (inertia - inertia.transpose()).norm() < 1e-12)
            .ok_or_else(|| Error::InvalidInput("inertia must be symmetric positive definite".into()))?;
        let n = (chi[0] * chi[0] + chi[1] * chi[1] + chi[2] * chi[2]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("chi must be a unit vector, |chi| = {n}")));
        }
        if !mgl.is_finite() {
            return Err(Error::InvalidInput("Mgl must be finite".into()));
        }
        Ok(Self {
            inertia,
            inertia_inv,
            mgl,
            chi,
            noise: HeavyTopNoise::standard(),
            metric_inv: DMatrix::identity(6, 6),
            coupling,
            gamma_norm: None,
        })
    }

    /// Replaces the metric on `so(3) x R^3` (6x6, SPD). Noise directions
    /// must stay orthonormal in it.
    pub fn with_metric(mut self, metric: DMatrix<f64>) -> Result<Self> {
        if metric.shape() != (6, 6) {
            return Err(Error::DimensionMismatch { expected: 6, got: metric.nrows() });
        }
        let chol = metric
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("metric must be positive definite".into()))?;
        self.metric_inv = chol.inverse();
        let noise = std::mem::take(&mut self.noise);
        self.with_noise_checked(noise, &metric)
    }

    pub fn with_noise(self, noise: Vec<HeavyTopNoise>) -> Result<Self> {
        let metric = self
            .metric_inv
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular metric".into()))?;
        self.with_noise_checked(noise, &metric)
    }

    fn with_noise_checked(mut self, noise: Vec<HeavyTopNoise>, metric: &DMatrix<f64>) -> Result<Self> {
        let vecs: Vec<Vec<f64>> = noise
            .iter()
            .map(|n| n.xi.iter().chain(&n.grad_gamma).copied().collect())
            .collect();
        for (a, va) in vecs.iter().enumerate() {
            for (b, vb) in vecs.iter().enumerate().skip(a) {
                let mut g = 0.0;
                for i in 0..6 {
                    for j in 0..6 {
                        g += va[i] * metric[(i, j)] * vb[j];
                    }
                }
                let target = if a == b { 1.0 } else { 0.0 };
                if (g - target).abs() > 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "heavy-top noise directions {a} and {b} are not orthonormal: {g}"
                    )));
                }
            }
        }
        self.noise = noise;
        Ok(self)
    }

    /// Rescale `Gamma` to the given norm after every step.
    pub fn with_gamma_renormalisation(mut self, norm: f64) -> Self {
        self.gamma_norm = Some(norm);
        self
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn mgl(&self) -> f64 {
        self.mgl
    }

    pub fn chi(&self) -> [f64; 3] {
        self.chi
    }

    pub fn noise(&self) -> &[HeavyTopNoise] {
        &self.noise
    }

    fn omega(&self, pi: &[f64]) -> [f64; 3] {
        let w = self.inertia_inv * Vector3::new(pi[0], pi[1], pi[2]);
        [w[0], w[1], w[2]]
    }
}

/// Drift and diffusions of the heavy top at `x = (Pi, Gamma)`.
pub fn heavy_top_fields(top: &HeavyTop, x: &[f64]) -> Result<Fields> {
    check_dim(6, x.len())?;
    let (pi, gam) = x.split_at(3);
    let omega = top.omega(pi);
    let pxo = cross(pi, &omega);
    let gxc = cross(gam, &top.chi);
    let a: Vec<f64> = (0..3).map(|k| pxo[k] + top.mgl * gxc[k]).collect();
    let gxo = cross(gam, &omega);
    let mut drift: Vec<f64> = a.iter().chain(&gxo).copied().collect();
    let theta = top.coupling.theta;
    if theta != 0.0 {
        let sharp = &top.metric_inv * nalgebra::DVector::from_column_slice(&drift);
        let (u, v) = sharp.as_slice().split_at(3);
        let pu = cross(pi, u);
        let gv = cross(gam, v);
        let gu = cross(gam, u);
        for k in 0..3 {
            drift[k] += theta * (pu[k] + gv[k]);
            drift[3 + k] += theta * gu[k];
        }
    }
    let sigma = top.coupling.sigma;
    let diffusions = top
        .noise
        .iter()
        .map(|n| {
            let a = cross(pi, &n.xi);
            let b = cross(gam, &n.grad_gamma);
            let c = cross(gam, &n.xi);
            (0..3)
                .map(|k| sigma * (a[k] + b[k]))
                .chain((0..3).map(|k| sigma * c[k]))
                .collect()
        })
        .collect();
    Ok(Fields { drift, diffusions })
}

impl StochasticSystem for HeavyTop {
    fn name(&self) -> &str {
        "heavy_top"
    }

    fn state_dim(&self) -> usize {
        6
    }

    fn n_noise(&self) -> usize {
        self.noise.len()
    }

    fn fields(&self, x: &[f64]) -> Result<Fields> {
        heavy_top_fields(self, x)
    }

    /// Linear noise: `sigma^2/2 sum_i L_i L_i x` with `L_i` the noise map.
    fn ito_correction(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(6, x.len())?;
        let s2 = self.coupling.sigma * self.coupling.sigma;
        let mut out = vec![0.0; 6];
        for n in &self.noise {
            let apply = |y: &[f64]| -> Vec<f64> {
                let (p, g) = y.split_at(3);
                let a = cross(p, &n.xi);
                let b = cross(g, &n.grad_gamma);
                let c = cross(g, &n.xi);
                (0..3).map(|k| a[k] + b[k]).chain(c).collect()
            };
            let twice = apply(&apply(x));
            for (o, t) in out.iter_mut().zip(twice) {
                *o += 0.5 * s2 * t;
            }
        }
        Ok(out)
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let omega = self.omega(&x[..3]);
        0.5 * dot(&x[..3], &omega) + self.mgl * dot(&x[3..], &self.chi)
    }

    fn casimirs(&self, x: &[f64]) -> Vec<(String, f64)> {
        vec![
            ("gamma_norm_sq".into(), dot(&x[3..], &x[3..])),
            ("pi_dot_gamma".into(), dot(&x[..3], &x[3..])),
        ]
    }

    fn state_labels(&self) -> Vec<String> {
        ["Pi1", "Pi2", "Pi3", "Gamma1", "Gamma2", "Gamma3"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn project(&self, x: &mut [f64]) {
        if let Some(r) = self.gamma_norm {
            let n = dot(&x[3..], &x[3..]).sqrt();
            if n > 0.0 {
                for v in &mut x[3..] {
                    *v *= r / n;
                }
            }
        }
    }

    /// Drift generator `(Omega + theta U, Mgl chi + theta V)`, noise `sigma (xi_i, g_i)`.
    fn semidirect_generators(&self, x: &[f64]) -> Option<SemidirectGenerators> {
        if x.len() != 6 {
            return None;
        }
        let (pi, gam) = x.split_at(3);
        let omega = self.omega(pi);
        let mut xi = omega;
        let mut u = [self.mgl * self.chi[0], self.mgl * self.chi[1], self.mgl * self.chi[2]];
        let theta = self.coupling.theta;
        if theta != 0.0 {
            let pxo = cross(pi, &omega);
            let gxc = cross(gam, &self.chi);
            let gxo = cross(gam, &omega);
            let rate: Vec<f64> = (0..3).map(|k| pxo[k] + self.mgl * gxc[k]).chain(gxo).collect();
            let sharp = &self.metric_inv * nalgebra::DVector::from_column_slice(&rate);
            for k in 0..3 {
                xi[k] += theta * sharp[k];
                u[k] += theta * sharp[3 + k];
            }
        }
        let s = self.coupling.sigma;
        Some(SemidirectGenerators {
            drift: (xi, u),
            noise: self
                .noise
                .iter()
                .map(|n| {
                    (
                        [s * n.xi[0], s * n.xi[1], s * n.xi[2]],
                        [s * n.grad_gamma[0], s * n.grad_gamma[1], s * n.grad_gamma[2]],
                    )
                })
                .collect(),
        })
    }

    fn coupling(&self) -> Coupling {
        self.coupling
    }
}
