//! Stochastic dissipative point vortices on the sphere of radius `R`.

mod harmonics;

pub use harmonics::{gauss_legendre, HarmonicBasis, HarmonicMode};

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{cross, dot, Coupling, Fields, StochasticSystem};
use crate::error::{Error, Result};

/// Default collision threshold relative to `R^2`.
pub const COLLISION_EPSILON: f64 = 1e-8;

/// Vortex positions (extrinsic, `|x_i| = R`) and strengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub positions: Vec<[f64; 3]>,
    pub strengths: Vec<f64>,
}

impl VortexConfig {
    /// Validates radius, lengths, `|x_i| = R` (to `1e-10 R`) and collisions.
    pub fn new(radius: f64, positions: Vec<[f64; 3]>, strengths: Vec<f64>) -> Result<Self> {
        let c = Self { radius, positions, strengths };
        c.validate()?;
        Ok(c)
    }

    /// Projects arbitrary nonzero points onto the sphere before validating.
    pub fn from_directions(radius: f64, directions: &[[f64; 3]], strengths: Vec<f64>) -> Result<Self> {
        let positions = directions
            .iter()
            .map(|d| {
                let n = dot(d, d).sqrt();
                [radius * d[0] / n, radius * d[1] / n, radius * d[2] / n]
            })
            .collect();
        Self::new(radius, positions, strengths)
    }

    /// Independent uniform positions on the sphere, keyed by `seed`.
    pub fn random_uniform(radius: f64, strengths: Vec<f64>, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dirs: Vec<[f64; 3]> = (0..strengths.len())
            .map(|_| loop {
                let d: [f64; 3] = [
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                ];
                if dot(&d, &d) > 1e-12 {
                    break d;
                }
            })
            .collect();
        Self::from_directions(radius, &dirs, strengths)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.radius;
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput(format!("R must be positive, got {r}")));
        }
        if self.positions.len() != self.strengths.len() {
            return Err(Error::DimensionMismatch {
                expected: self.positions.len(),
                got: self.strengths.len(),
            });
        }
        for (i, x) in self.positions.iter().enumerate() {
            let n = dot(x, x).sqrt();
            if !n.is_finite() || (n - r).abs() > 1e-10 * r {
                return Err(Error::InvalidInput(format!("vortex {i} has |x| = {n}, expected R = {r}")));
            }
        }
        if self.strengths.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput("strengths must be finite".into()));
        }
        check_collisions(r, &self.positions)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Flattened state `(x_1, ..., x_N)`.
    pub fn state(&self) -> Vec<f64> {
        self.positions.iter().flatten().copied().collect()
    }

    pub fn with_state(&self, x: &[f64]) -> Result<Self> {
        if x.len() != 3 * self.len() {
            return Err(Error::DimensionMismatch { expected: 3 * self.len(), got: x.len() });
        }
        Ok(Self {
            radius: self.radius,
            positions: x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
            strengths: self.strengths.clone(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let c: Self = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn check_collisions(r: f64, xs: &[[f64; 3]]) -> Result<()> {
    let eps = COLLISION_EPSILON * r * r;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let gap = r * r - dot(&xs[i], &xs[j]);
            if !(gap > eps) {
                return Err(Error::Collision { i, j, gap });
            }
        }
    }
    Ok(())
}

/// Green's function `G_0(x, y) = -log(R^2 - x.y) / (4 pi R)`.
pub fn green_g0(x: &[f64; 3], y: &[f64; 3], radius: f64) -> Result<f64> {
    let gap = radius * radius - dot(x, y);
    if !(gap > COLLISION_EPSILON * radius * radius) {
        return Err(Error::Collision { i: 0, j: 1, gap });
    }
    Ok(-gap.ln() / (4.0 * PI * radius))
}

/// `h_0 = sum_{i<j} Gamma_i Gamma_j G_0(x_i, x_j)`.
pub fn vortex_hamiltonian(c: &VortexConfig) -> Result<f64> {
    let mut h = 0.0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let g = green_g0(&c.positions[i], &c.positions[j], c.radius)
                .map_err(|e| relabel(e, i, j))?;
            h += c.strengths[i] * c.strengths[j] * g;
        }
    }
    Ok(h)
}

fn relabel(e: Error, i: usize, j: usize) -> Error {
    match e {
        Error::Collision { gap, .. } => Error::Collision { i, j, gap },
        other => other,
    }
}

/// Gradient of `h_0` with respect to each `x_i` (ambient, not projected).
pub fn vortex_energy_gradient(c: &VortexConfig) -> Result<Vec<[f64; 3]>> {
    let n = c.len();
    let r = c.radius;
    check_collisions(r, &c.positions)?;
    let mut g = vec![[0.0; 3]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = r * r - dot(&c.positions[i], &c.positions[j]);
            let w = c.strengths[i] * c.strengths[j] / (4.0 * PI * r * d);
            for k in 0..3 {
                g[i][k] += w * c.positions[j][k];
            }
        }
    }
    Ok(g)
}

/// Deterministic drift of every vortex: the conservative interaction plus
/// `theta` times the dissipative double sum.
pub fn vortex_drift(c: &VortexConfig, theta: f64) -> Result<Vec<[f64; 3]>> {
    if !(theta >= 0.0) {
        return Err(Error::InvalidInput(format!("theta must be nonnegative, got {theta}")));
    }
    check_collisions(c.radius, &c.positions)?;
    let n = c.len();
    let r = c.radius;
    let xs = &c.positions;
    let gs = &c.strengths;
    let k4 = 4.0 * PI * r;
    // inv[i][j] = 1 / (R^2 - x_i.x_j)
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = 1.0 / (r * r - dot(&xs[i], &xs[j]));
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    // v[k] = sum_{j != k} Gamma_j x_j x x_k / (4 pi R (R^2 - x_j.x_k))
    let mut v = vec![[0.0; 3]; n];
    for k in 0..n {
        for j in 0..n {
            if j == k {
                continue;
            }
            let c = cross(&xs[j], &xs[k]);
            let w = gs[j] * inv[j][k] / k4;
            for d in 0..3 {
                v[k][d] += w * c[d];
            }
        }
    }
    let mut out = vec![[0.0; 3]; n];
    for i in 0..n {
        let o = &mut out[i];
        // the conservative term is exactly v[i]
        *o = v[i];
        if theta == 0.0 {
            continue;
        }
        for k in 0..n {
            if k == i {
                continue;
            }
            let a = gs[k] * inv[i][k] / k4;
            let first = cross(&v[k], &xs[i]);
            let s = dot(&xs[i], &v[k]) * gs[k] * inv[i][k] * inv[i][k] / k4;
            let second = cross(&xs[k], &xs[i]);
            for d in 0..3 {
                o[d] -= theta * (a * first[d] + s * second[d]);
            }
        }
    }
    Ok(out)
}

/// Point vortices driven by the harmonic transport noise. Every vortex
/// sees the same Brownian increment per mode.
#[derive(Debug, Clone)]
pub struct PointVortexSystem {
    template: VortexConfig,
    basis: HarmonicBasis,
    coupling: Coupling,
}

impl PointVortexSystem {
    /// Uses modes up to `ell_max` on the config's sphere.
    pub fn new(config: VortexConfig, ell_max: usize, coupling: Coupling) -> Result<Self> {
        config.validate()?;
        let basis = HarmonicBasis::new(config.radius, ell_max)?;
        Ok(Self { template: config, basis, coupling })
    }

    pub fn with_basis(config: VortexConfig, basis: HarmonicBasis, coupling: Coupling) -> Result<Self> {
        config.validate()?;
        if (basis.radius() - config.radius).abs() > 1e-12 * config.radius {
            return Err(Error::InvalidInput("harmonic basis radius differs from vortex sphere".into()));
        }
        Ok(Self { template: config, basis, coupling })
    }

    pub fn config(&self) -> &VortexConfig {
        &self.template
    }

    pub fn basis(&self) -> &HarmonicBasis {
        &self.basis
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.template.state()
    }

    fn config_at(&self, x: &[f64]) -> Result<VortexConfig> {
        self.template.with_state(x)
    }
}

impl StochasticSystem for PointVortexSystem {
    fn name(&self) -> &str {
        "point_vortex"
    }

    fn state_dim(&self) -> usize {
        3 * self.template.len()
    }

    fn n_noise(&self) -> usize {
        self.basis.len()
    }

    fn fields(&self, x: &[f64]) -> Result<Fields> {
        let c = self.config_at(x)?;
        let drift = vortex_drift(&c, self.coupling.theta)?.into_iter().flatten().collect();
        let sigma = self.coupling.sigma;
        let mut diffusions = vec![vec![0.0; x.len()]; self.basis.len()];
        if sigma != 0.0 {
            for (i, p) in c.positions.iter().enumerate() {
                for (k, f) in self.basis.noise_fields(p).into_iter().enumerate() {
                    for d in 0..3 {
                        diffusions[k][3 * i + d] = sigma * f[d];
                    }
                }
            }
        }
        Ok(Fields { drift, diffusions })
    }

    fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.config_at(x)?;
        Ok(vortex_drift(&c, self.coupling.theta)?.into_iter().flatten().collect())
    }

    fn ito_correction(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.coupling.sigma == 0.0 {
            return Ok(vec![0.0; x.len()]);
        }
        // each vortex moves independently under a fixed field, so the
        // correction is per-vortex; differentiate along the field itself
        let c = self.config_at(x)?;
        let sigma = self.coupling.sigma;
        let mut out = vec![0.0; x.len()];
        for (i, p) in c.positions.iter().enumerate() {
            let fs = self.basis.noise_fields(p);
            for (k, f) in fs.iter().enumerate() {
                let fnorm = dot(f, f).sqrt();
                if fnorm == 0.0 {
                    continue;
                }
                let h = f64::EPSILON.cbrt() * c.radius / (sigma * fnorm);
                let at = |s: f64| {
                    let q = [p[0] + s * sigma * f[0], p[1] + s * sigma * f[1], p[2] + s * sigma * f[2]];
                    self.basis.noise_fields(&q)[k]
                };
                let (fp, fm) = (at(h), at(-h));
                for d in 0..3 {
                    out[3 * i + d] += 0.5 * sigma * (fp[d] - fm[d]) / (2.0 * h);
                }
            }
        }
        Ok(out)
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.config_at(x)
            .and_then(|c| vortex_hamiltonian(&c))
            .unwrap_or(f64::NAN)
    }

    fn momentum_map(&self, x: &[f64]) -> Vec<(String, f64)> {
        let mut m = [0.0; 3];
        for (p, g) in x.chunks(3).zip(&self.template.strengths) {
            for d in 0..3 {
                m[d] += g * p[d];
            }
        }
        vec![("M1".into(), m[0]), ("M2".into(), m[1]), ("M3".into(), m[2])]
    }

    fn state_labels(&self) -> Vec<String> {
        (1..=self.template.len())
            .flat_map(|i| ["x", "y", "z"].into_iter().map(move |a| format!("{a}{i}")))
            .collect()
    }

    fn project(&self, x: &mut [f64]) {
        let r = self.template.radius;
        for p in x.chunks_mut(3) {
            let n = dot(p, p).sqrt();
            if n > 0.0 {
                for v in p.iter_mut() {
                    *v *= r / n;
                }
            }
        }
    }

    fn coupling(&self) -> Coupling {
        self.coupling
    }
}

/// The six octahedron vertices on the sphere of radius `R`.
pub fn octahedron(radius: f64) -> Vec<[f64; 3]> {
    vec![
        [radius, 0.0, 0.0],
        [-radius, 0.0, 0.0],
        [0.0, radius, 0.0],
        [0.0, -radius, 0.0],
        [0.0, 0.0, radius],
        [0.0, 0.0, -radius],
    ]
}

/// Distance of a six-vortex configuration from a regular octahedron,
/// rotation-free: every vortex should see one antipode (`x_i . x_j = -R^2`)
/// and four orthogonal neighbours (`x_i . x_j = 0`). Returns the largest
/// deviation of `x_i . x_j / R^2` from those values.
pub fn octahedron_defect(positions: &[[f64; 3]], radius: f64) -> Result<f64> {
    if positions.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "octahedron check needs 6 vortices, got {}",
            positions.len()
        )));
    }
    let r2 = radius * radius;
    let mut worst = 0.0f64;
    for (i, a) in positions.iter().enumerate() {
        let mut d: Vec<f64> = positions
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, b)| dot(a, b) / r2)
            .collect();
        d.sort_by(f64::total_cmp);
        for (k, v) in d.iter().enumerate() {
            let target = if k == 0 { -1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    Ok(worst)
}
