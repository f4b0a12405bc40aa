//! Invariant monitors and Gibbs-measure checks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::StochasticSystem;
use crate::error::{Error, Result};
use crate::integrate::{integrate_trajectory, IntegrateOptions, Scheme, Trajectory};
use crate::noise::brownian_path_for;

/// Level set on which a Gibbs measure lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Orbit {
    /// `|Pi| = radius` in `so(3)*`.
    Sphere { radius: f64 },
    /// One sphere of radius `radius` per vortex.
    VortexProduct { radius: f64, strengths: Vec<f64> },
    /// `|Gamma|^2` and `Pi . Gamma` fixed; state `(Pi, Gamma)`.
    HeavyTop { gamma_norm_sq: f64, pi_dot_gamma: f64 },
    /// No constraint.
    Euclidean { dim: usize },
}

impl Orbit {
    pub fn dim(&self) -> usize {
        match self {
            Orbit::Sphere { .. } => 3,
            Orbit::VortexProduct { strengths, .. } => 3 * strengths.len(),
            Orbit::HeavyTop { .. } => 6,
            Orbit::Euclidean { dim } => *dim,
        }
    }

    /// Largest relative violation of the orbit constraints at `x`.
    pub fn defect(&self, x: &[f64]) -> Result<f64> {
        crate::error::check_dim(self.dim(), x.len())?;
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        Ok(match self {
            Orbit::Sphere { radius } => (norm(x) - radius).abs() / radius,
            Orbit::VortexProduct { radius, .. } => x
                .chunks(3)
                .map(|c| (norm(c) - radius).abs() / radius)
                .fold(0.0, f64::max),
            Orbit::HeavyTop { gamma_norm_sq, pi_dot_gamma } => {
                let g2: f64 = x[3..].iter().map(|a| a * a).sum();
                let pg: f64 = (0..3).map(|k| x[k] * x[3 + k]).sum();
                let d1 = (g2 - gamma_norm_sq).abs() / gamma_norm_sq.abs().max(1.0);
                let d2 = (pg - pi_dot_gamma).abs() / pi_dot_gamma.abs().max(1.0);
                d1.max(d2)
            }
            Orbit::Euclidean { .. } => 0.0,
        })
    }
}

/// Unnormalised Gibbs measure `exp(-beta h0)` on an orbit.
#[derive(Clone)]
pub struct GibbsSpec {
    pub beta: f64,
    pub h0: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub orbit: Orbit,
    /// Accepted orbit defect in [`gibbs_log_density`].
    pub tolerance: f64,
}

impl std::fmt::Debug for GibbsSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GibbsSpec")
            .field("beta", &self.beta)
            .field("orbit", &self.orbit)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl GibbsSpec {
    /// `beta = 0` is allowed and gives the uniform measure.
    pub fn new(beta: f64, h0: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, orbit: Orbit) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be non-negative, got {beta}")));
        }
        Ok(Self { beta, h0: Arc::new(h0), orbit, tolerance: 1e-8 })
    }

    /// Uses the energy of `system`.
    pub fn for_system(beta: f64, system: Arc<dyn StochasticSystem>, orbit: Orbit) -> Result<Self> {
        Self::new(beta, move |x| system.energy(x), orbit)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// `-beta h0(x)`, after checking that `x` lies on the orbit.
pub fn gibbs_log_density(spec: &GibbsSpec, x: &[f64]) -> Result<f64> {
    let defect = spec.orbit.defect(x)?;
    if defect > spec.tolerance {
        return Err(Error::OffOrbit { defect });
    }
    if spec.beta == 0.0 {
        return Ok(0.0);
    }
    Ok(-spec.beta * (spec.h0)(x))
}

/// Output of [`orbit_rejection_sampler`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionSample {
    pub samples: Vec<Vec<f64>>,
    pub h_min_estimate: f64,
    pub proposals: usize,
    pub acceptance_rate: f64,
    /// Proposals that undercut `h_min_estimate` (should be zero).
    pub undercuts: usize,
}

fn uniform_point(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [radius * v[0] / n, radius * v[1] / n, radius * v[2] / n];
        }
    }
}

fn sphere_blocks(orbit: &Orbit) -> Result<(f64, usize)> {
    match orbit {
        Orbit::Sphere { radius } => Ok((*radius, 1)),
        Orbit::VortexProduct { radius, strengths } => Ok((*radius, strengths.len())),
        other => Err(Error::Unsupported(format!("no uniform sampler for orbit {other:?}"))),
    }
}

/// Spiral grid of `n` nearly uniform points on the sphere.
pub fn fibonacci_sphere(n: usize, radius: f64) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [radius * r * phi.cos(), radius * r * phi.sin(), radius * z]
        })
        .collect()
}

fn rotate_on_sphere(p: &[f64], axis: usize, angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let (i, j) = [(1, 2), (2, 0), (0, 1)][axis];
    let mut out = [p[0], p[1], p[2]];
    out[i] = c * p[i] - s * p[j];
    out[j] = s * p[i] + c * p[j];
    out
}

/// Pattern search over small rotations of each block.
fn polish(h: &(dyn Fn(&[f64]) -> f64 + Send + Sync), x: &mut [f64], mut best: f64) -> f64 {
    let mut step = 0.1;
    while step > 1e-7 {
        let mut improved = false;
        for b in 0..x.len() / 3 {
            for axis in 0..3 {
                for sgn in [1.0, -1.0] {
                    let trial = rotate_on_sphere(&x[3 * b..3 * b + 3], axis, sgn * step);
                    let old = [x[3 * b], x[3 * b + 1], x[3 * b + 2]];
                    x[3 * b..3 * b + 3].copy_from_slice(&trial);
                    let v = h(x);
                    if v < best {
                        best = v;
                        improved = true;
                    } else {
                        x[3 * b..3 * b + 3].copy_from_slice(&old);
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Minimum of `h0` over the orbit: coarse grid (or random starts for
/// products of spheres) followed by a local pattern search.
pub fn estimate_h_min(spec: &GibbsSpec, seed: u64) -> Result<f64> {
    let (radius, blocks) = sphere_blocks(&spec.orbit)?;
    let h = spec.h0.as_ref();
    let mut starts: Vec<(f64, Vec<f64>)> = if blocks == 1 {
        fibonacci_sphere(2000, radius).into_iter().map(|p| (h(&p), p.to_vec())).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5_eed0_fa11);
        (0..400)
            .map(|_| {
                let x: Vec<f64> = (0..blocks).flat_map(|_| uniform_point(&mut rng, radius)).collect();
                (h(&x), x)
            })
            .collect()
    };
    starts.retain(|(v, _)| v.is_finite());
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.truncate(8);
    if starts.is_empty() {
        return Err(Error::Numerical { step: 0, what: "h0 is not finite anywhere on the grid".into() });
    }
    Ok(starts
        .into_par_iter()
        .map(|(v, mut x)| polish(h, &mut x, v))
        .reduce(|| f64::INFINITY, f64::min))
}

/// Exact samples from `exp(-beta h0)` on a sphere or product of spheres,
/// by rejection from the uniform measure.
pub fn orbit_rejection_sampler(spec: &GibbsSpec, n: usize, seed: u64) -> Result<RejectionSample> {
    let (radius, blocks) = sphere_blocks(&spec.orbit)?;
    let h_min = if spec.beta == 0.0 { 0.0 } else { estimate_h_min(spec, seed)? };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    let mut proposals = 0usize;
    let mut undercuts = 0usize;
    while samples.len() < n {
        proposals += 1;
        let x: Vec<f64> = (0..blocks).flat_map(|_| uniform_point(&mut rng, radius)).collect();
        let u: f64 = rng.random();
        let accept = if spec.beta == 0.0 {
            true
        } else {
            let hv = (spec.h0)(&x);
            if hv < h_min {
                undercuts += 1;
            }
            hv.is_finite() && u < (-spec.beta * (hv - h_min)).exp()
        };
        if accept {
            samples.push(x);
        }
        if proposals >= 100_000 && (samples.len() as f64) < 1e-4 * proposals as f64 {
            return Err(Error::Efficiency { rate: samples.len() as f64 / proposals as f64 });
        }
    }
    Ok(RejectionSample {
        samples,
        h_min_estimate: h_min,
        proposals,
        acceptance_rate: n as f64 / proposals.max(1) as f64,
        undercuts,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("KS needs two nonempty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(alpha: f64, n: f64, m: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

/// Effective sample size of a correlated series (initial positive
/// sequence estimate of the integrated autocorrelation time).
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let rho = |lag: usize| {
        x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / (n as f64 * var)
    };
    let mut tau = 1.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (n as f64 / tau).min(n as f64)
}

/// Least-squares slope of `log err` against `log dt`.
pub fn refinement_slope(dts: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = dts.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Drift of one conserved quantity along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub max_rel_drift: f64,
    /// `max_rel_drift / (t_final - t_0)`.
    pub rel_drift_per_unit_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub initial: f64,
    pub last: f64,
    pub max_rel_drift: f64,
    /// Largest increase between recorded points, relative to `|h0(0)|`.
    pub max_rel_increase: f64,
    /// Only judged for `sigma = 0`: `h0` never rises by more than `1e-12 |h0|`.
    pub non_increasing: Option<bool>,
    /// Only judged for `sigma = 0`, see [`strictly_decreasing_above_rounding`].
    pub strictly_decreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub system: String,
    pub scheme: Scheme,
    pub dt: f64,
    pub duration: f64,
    pub sigma: f64,
    pub theta: f64,
    pub energy: EnergyReport,
    pub casimirs: Vec<InvariantDrift>,
    pub momentum: Vec<InvariantDrift>,
}

fn drift_of(name: &str, series: impl Iterator<Item = f64> + Clone, duration: f64) -> InvariantDrift {
    let mut it = series.clone();
    let initial = it.next().unwrap_or(f64::NAN);
    let max_abs = series.map(|v| (v - initial).abs()).fold(0.0, f64::max);
    let scale = initial.abs().max(f64::MIN_POSITIVE);
    InvariantDrift {
        name: name.to_string(),
        initial,
        max_abs_drift: max_abs,
        max_rel_drift: max_abs / scale,
        rel_drift_per_unit_time: if duration > 0.0 { max_abs / scale / duration } else { 0.0 },
    }
}

/// Summarises conservation and dissipation along a recorded trajectory.
pub fn invariant_report(traj: &Trajectory) -> Result<InvariantReport> {
    if traj.energy.len() != traj.len() || traj.is_empty() {
        return Err(Error::InvalidInput("trajectory was recorded without diagnostics".into()));
    }
    let m = &traj.metadata;
    let duration = traj.times.last().unwrap() - traj.times[0];
    let h = &traj.energy;
    let scale = h[0].abs().max(f64::MIN_POSITIVE);
    let max_rel_increase = h.windows(2).map(|w| (w[1] - w[0]) / scale).fold(f64::NEG_INFINITY, f64::max);
    let deterministic = m.sigma == 0.0;
    let casimirs = m
        .casimir_labels
        .iter()
        .enumerate()
        .map(|(k, name)| drift_of(name, traj.casimirs.iter().map(move |c| c[k]), duration))
        .collect();
    let momentum = m
        .momentum_labels
        .iter()
        .enumerate()
        .map(|(k, name)| drift_of(name, traj.momentum.iter().map(move |c| c[k]), duration))
        .collect();
    Ok(InvariantReport {
        system: m.system.clone(),
        scheme: m.scheme,
        dt: duration / m.n_steps as f64,
        duration,
        sigma: m.sigma,
        theta: m.theta,
        energy: EnergyReport {
            initial: h[0],
            last: *h.last().unwrap(),
            max_rel_drift: h.iter().map(|v| (v - h[0]).abs()).fold(0.0, f64::max) / scale,
            max_rel_increase: if h.len() > 1 { max_rel_increase } else { 0.0 },
            non_increasing: deterministic.then(|| h.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs())),
            strictly_decreasing: deterministic.then(|| strictly_decreasing_above_rounding(h)),
        },
        casimirs,
        momentum,
    })
}

/// Settings for [`fluctuation_dissipation_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsCheckOptions {
    pub dt: f64,
    pub n_steps: usize,
    /// Independent trajectories whose subsampled series are pooled.
    pub n_traj: usize,
    pub burn_in_fraction: f64,
    pub stride: usize,
    pub n_oracle: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GibbsCheckOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            n_steps: 200_000,
            n_traj: 8,
            burn_in_fraction: 0.2,
            stride: 100,
            n_oracle: 4000,
            alpha: 0.01,
            seed: 2024,
        }
    }
}

/// KS comparison of observed `h0` values against exact Gibbs samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsComparison {
    pub n_samples: usize,
    /// Sum over independent series of their effective sample sizes.
    pub effective_samples: f64,
    pub n_oracle: usize,
    pub ks: f64,
    pub alpha: f64,
    /// Critical value computed with the effective sample size.
    pub critical: f64,
    pub sample_mean_h0: f64,
    pub oracle_mean_h0: f64,
    pub pass: bool,
}

/// Compares `h0` series (one per independent trajectory, already thinned)
/// with `n_oracle` rejection samples of `exp(-beta h0)`.
pub fn compare_with_gibbs(
    series: &[Vec<f64>],
    spec: &GibbsSpec,
    n_oracle: usize,
    seed: u64,
    alpha: f64,
) -> Result<GibbsComparison> {
    let pooled: Vec<f64> = series.iter().flatten().copied().collect();
    let ess: f64 = series.iter().map(|s| effective_sample_size(s)).sum();
    let oracle = orbit_rejection_sampler(spec, n_oracle, seed)?;
    let oracle_h: Vec<f64> = oracle.samples.iter().map(|x| (spec.h0)(x)).collect();
    let ks = ks_statistic(&pooled, &oracle_h)?;
    let critical = ks_critical(alpha, ess, oracle_h.len() as f64);
    Ok(GibbsComparison {
        n_samples: pooled.len(),
        effective_samples: ess,
        n_oracle: oracle_h.len(),
        ks,
        alpha,
        critical,
        sample_mean_h0: pooled.iter().sum::<f64>() / pooled.len() as f64,
        oracle_mean_h0: oracle_h.iter().sum::<f64>() / oracle_h.len() as f64,
        pass: ks < critical,
    })
}

/// Drops the first `burn_in_fraction` of a recorded series.
pub fn after_burn_in(times: &[f64], values: &[f64], burn_in_fraction: f64) -> Vec<f64> {
    if times.is_empty() {
        return Vec::new();
    }
    let t0 = times[0];
    let cut = t0 + burn_in_fraction * (times[times.len() - 1] - t0);
    times.iter().zip(values).filter(|(t, _)| **t >= cut).map(|(_, v)| *v).collect()
}

/// Outcome of [`fluctuation_dissipation_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsCheck {
    pub options: GibbsCheckOptions,
    pub beta: f64,
    pub sigma: f64,
    pub theta: f64,
    pub comparison: GibbsComparison,
    pub pass: bool,
}

/// Runs `system` from `x0`, discards the burn-in, keeps every `stride`-th
/// `h0` and compares with rejection samples of `exp(-beta h0)`.
pub fn fluctuation_dissipation_check(
    system: &dyn StochasticSystem,
    scheme: Scheme,
    spec: &GibbsSpec,
    x0: &[f64],
    opts: GibbsCheckOptions,
) -> Result<GibbsCheck> {
    let t1 = opts.dt * opts.n_steps as f64;
    let record = IntegrateOptions { record_stride: opts.stride.max(1), diagnostics: true };
    let runs: Vec<Result<Vec<f64>>> = (0..opts.n_traj.max(1))
        .into_par_iter()
        .map(|k| {
            let path = brownian_path_for(system.n_noise(), 0.0, t1, opts.n_steps, opts.seed, k as u64)?;
            let traj = integrate_trajectory(system, scheme, &path, x0, &record)?;
            Ok(after_burn_in(&traj.times, &traj.energy, opts.burn_in_fraction))
        })
        .collect();
    let series = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let comparison = compare_with_gibbs(&series, spec, opts.n_oracle, opts.seed.wrapping_add(0x9e37_79b9), opts.alpha)?;
    let c = system.coupling();
    Ok(GibbsCheck {
        options: opts,
        beta: spec.beta,
        sigma: c.sigma,
        theta: c.theta,
        pass: comparison.pass,
        comparison,
    })
}

/// `true` when every step lowers `h`, ignoring changes within
/// `1e-14 |h|` (the rounding floor once the motion has stopped).
pub fn strictly_decreasing_above_rounding(h: &[f64]) -> bool {
    h.windows(2).all(|w| w[1] < w[0] || (w[1] - w[0]).abs() <= 1e-14 * w[0].abs())
}
