//! Fixed-step schemes, trajectory drivers and ensembles.
//!
//! Every scheme consumes one row of a [`DrivingPath`] per step: entry 0 is
//! `dt`, entry `i >= 1` is the increment of noise component `i`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Coupling, StochasticSystem};
use crate::error::{Error, Result};
use crate::noise::{brownian_path_for, fmt_f64, ComponentKind, DrivingPath};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Stratonovich predictor-corrector.
    Heun,
    /// Euler-Maruyama on the Ito form (drift plus Ito correction).
    ItoEuler,
    /// Exact coadjoint motion with a frozen generator per step; `so(3)` and
    /// heavy-top systems only.
    Coadjoint,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Heun => "heun",
            Scheme::ItoEuler => "ito_euler",
            Scheme::Coadjoint => "coadjoint",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heun" => Ok(Scheme::Heun),
            "ito_euler" => Ok(Scheme::ItoEuler),
            "coadjoint" => Ok(Scheme::Coadjoint),
            _ => Err(Error::InvalidInput(format!("unknown scheme `{s}`"))),
        }
    }
}

fn check_increments(sys: &dyn StochasticSystem, inc: &[f64]) -> Result<()> {
    if inc.len() != sys.n_noise() + 1 {
        return Err(Error::DimensionMismatch { expected: sys.n_noise() + 1, got: inc.len() });
    }
    Ok(())
}

fn check_finite(x: Vec<f64>, step: usize, what: &str) -> Result<Vec<f64>> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Numerical { step, what: what.into() })
    }
}

fn combine(x: &[f64], drift: &[f64], diff: &[Vec<f64>], inc: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for (o, d) in out.iter_mut().zip(drift) {
        *o += d * inc[0];
    }
    for (f, dw) in diff.iter().zip(&inc[1..]) {
        for (o, v) in out.iter_mut().zip(f) {
            *o += v * dw;
        }
    }
    out
}

/// Stratonovich Heun step:
/// `x~ = x + sum_i f_i(x) dS^i`, `x' = x + 1/2 sum_i (f_i(x) + f_i(x~)) dS^i`.
pub fn heun_step(sys: &dyn StochasticSystem, x: &[f64], inc: &[f64], step: usize) -> Result<Vec<f64>> {
    check_increments(sys, inc)?;
    let f = sys.fields(x)?;
    let pred = check_finite(combine(x, &f.drift, &f.diffusions, inc), step, "heun predictor")?;
    let g = sys.fields(&pred)?;
    let drift: Vec<f64> = f.drift.iter().zip(&g.drift).map(|(a, b)| 0.5 * (a + b)).collect();
    let diff: Vec<Vec<f64>> = f
        .diffusions
        .iter()
        .zip(&g.diffusions)
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect())
        .collect();
    check_finite(combine(x, &drift, &diff, inc), step, "heun corrector")
}

/// Ito-Euler step `x' = x + (f_0 + c)(x) dt + sum_i f_i(x) dW^i` with `c`
/// the Stratonovich-to-Ito correction.
pub fn ito_euler_step(sys: &dyn StochasticSystem, x: &[f64], inc: &[f64], step: usize) -> Result<Vec<f64>> {
    check_increments(sys, inc)?;
    let f = sys.fields(x)?;
    let c = sys.ito_correction(x)?;
    let drift: Vec<f64> = f.drift.iter().zip(&c).map(|(a, b)| a + b).collect();
    check_finite(combine(x, &drift, &f.diffusions, inc), step, "ito-euler update")
}

/// Rotates `v` by the rotation vector `theta` (angle `|theta|`, right-handed).
pub fn rodrigues(theta: &[f64; 3], v: &[f64]) -> [f64; 3] {
    let angle = (theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]).sqrt();
    if angle == 0.0 {
        return [v[0], v[1], v[2]];
    }
    let k = [theta[0] / angle, theta[1] / angle, theta[2] / angle];
    let (s, c) = angle.sin_cos();
    let kxv = crate::dynamics::cross(&k, v);
    let kv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    [
        v[0] * c + kxv[0] * s + k[0] * kv * (1.0 - c),
        v[1] * c + kxv[1] * s + k[1] * kv * (1.0 - c),
        v[2] * c + kxv[2] * s + k[2] * kv * (1.0 - c),
    ]
}

/// Coadjoint step on `so(3)*`: `Pi' = exp(Theta^) Pi` with
/// `Theta = a dt + sum_i n_i dW^i`, where the drift axis `a` is averaged
/// between `Pi` and a predicted state. Preserves `|Pi|` to rounding.
pub fn coadjoint_step_so3(sys: &dyn StochasticSystem, x: &[f64], inc: &[f64], step: usize) -> Result<Vec<f64>> {
    check_increments(sys, inc)?;
    let unsupported = || Error::Unsupported(format!("coadjoint scheme needs an so(3) system, got `{}`", sys.name()));
    let ax = sys.coadjoint_axes(x).ok_or_else(unsupported)?;
    let total = |drift: [f64; 3]| {
        let mut t = [drift[0] * inc[0], drift[1] * inc[0], drift[2] * inc[0]];
        for (n, dw) in ax.noise.iter().zip(&inc[1..]) {
            for d in 0..3 {
                t[d] += n[d] * dw;
            }
        }
        t
    };
    let pred = rodrigues(&total(ax.drift), x);
    if !pred.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical { step, what: "coadjoint predictor".into() });
    }
    let ax2 = sys.coadjoint_axes(&pred).ok_or_else(unsupported)?;
    let mean = [
        0.5 * (ax.drift[0] + ax2.drift[0]),
        0.5 * (ax.drift[1] + ax2.drift[1]),
        0.5 * (ax.drift[2] + ax2.drift[2]),
    ];
    check_finite(rodrigues(&total(mean), x).to_vec(), step, "coadjoint update")
}

/// Exact time-one flow of `d(Pi, Gamma)/dt = ad*_{(xi, u)}(Pi, Gamma)`:
/// `Gamma' = R Gamma`, `Pi' = R (Pi + Gamma x W)` with `R = exp(-xi^)` and
/// `W = int_0^1 exp(s xi^) u ds`.
pub fn semidirect_flow(xi: &[f64; 3], u: &[f64; 3], x: &[f64]) -> [f64; 6] {
    let a2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let a = a2.sqrt();
    let (c1, c2) = if a < 1e-4 {
        (0.5 - a2 / 24.0, 1.0 / 6.0 - a2 / 120.0)
    } else {
        ((1.0 - a.cos()) / a2, (a - a.sin()) / (a2 * a))
    };
    let xu = crate::dynamics::cross(xi, u);
    let xxu = crate::dynamics::cross(xi, &xu);
    let w = [
        u[0] + c1 * xu[0] + c2 * xxu[0],
        u[1] + c1 * xu[1] + c2 * xxu[1],
        u[2] + c1 * xu[2] + c2 * xxu[2],
    ];
    let gw = crate::dynamics::cross(&x[3..6], &w);
    let shifted = [x[0] + gw[0], x[1] + gw[1], x[2] + gw[2]];
    let back = [-xi[0], -xi[1], -xi[2]];
    let p = rodrigues(&back, &shifted);
    let g = rodrigues(&back, &x[3..6]);
    [p[0], p[1], p[2], g[0], g[1], g[2]]
}

/// Coadjoint step on `so(3)* x R^3`, predictor-corrector on the drift
/// generator as in [`coadjoint_step_so3`]. Preserves `|Gamma|^2` and
/// `Pi . Gamma` to rounding.
pub fn coadjoint_step_semidirect(sys: &dyn StochasticSystem, x: &[f64], inc: &[f64], step: usize) -> Result<Vec<f64>> {
    check_increments(sys, inc)?;
    let unsupported =
        || Error::Unsupported(format!("coadjoint scheme needs a semidirect system, got `{}`", sys.name()));
    let g = sys.semidirect_generators(x).ok_or_else(unsupported)?;
    let total = |(xi, u): ([f64; 3], [f64; 3])| {
        let mut a = [xi[0] * inc[0], xi[1] * inc[0], xi[2] * inc[0]];
        let mut b = [u[0] * inc[0], u[1] * inc[0], u[2] * inc[0]];
        for ((nx, nu), dw) in g.noise.iter().zip(&inc[1..]) {
            for d in 0..3 {
                a[d] += nx[d] * dw;
                b[d] += nu[d] * dw;
            }
        }
        (a, b)
    };
    let (a, b) = total(g.drift);
    let pred = semidirect_flow(&a, &b, x);
    if !pred.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical { step, what: "coadjoint predictor".into() });
    }
    let g2 = sys.semidirect_generators(&pred).ok_or_else(unsupported)?;
    let mut mean = g.drift;
    for d in 0..3 {
        mean.0[d] = 0.5 * (g.drift.0[d] + g2.drift.0[d]);
        mean.1[d] = 0.5 * (g.drift.1[d] + g2.drift.1[d]);
    }
    let (a, b) = total(mean);
    check_finite(semidirect_flow(&a, &b, x).to_vec(), step, "coadjoint update")
}

/// One step of `scheme`.
pub fn step(scheme: Scheme, sys: &dyn StochasticSystem, x: &[f64], inc: &[f64], n: usize) -> Result<Vec<f64>> {
    match scheme {
        Scheme::Heun => heun_step(sys, x, inc, n),
        Scheme::ItoEuler => ito_euler_step(sys, x, inc, n),
        Scheme::Coadjoint if sys.semidirect_generators(x).is_some() => coadjoint_step_semidirect(sys, x, inc, n),
        Scheme::Coadjoint => coadjoint_step_so3(sys, x, inc, n),
    }
}

/// Recording options for [`integrate_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Keep every `record_stride`-th state (the final state is always kept).
    pub record_stride: usize,
    /// Record energy, Casimirs and momentum map with each kept state.
    pub diagnostics: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { record_stride: 1, diagnostics: true }
    }
}

/// Provenance recorded with every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub system: String,
    pub scheme: Scheme,
    /// All schemes are fixed-step choices of this library, not prescribed
    /// by the model equations.
    pub scheme_note: String,
    pub seed: u64,
    pub trajectory: u64,
    pub refinement_level: u32,
    pub n_steps: usize,
    pub record_stride: usize,
    pub sigma: f64,
    pub theta: f64,
    pub beta: Option<f64>,
    pub state_labels: Vec<String>,
    pub casimir_labels: Vec<String>,
    pub momentum_labels: Vec<String>,
    pub version: String,
}

/// Recorded states and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    pub casimirs: Vec<Vec<f64>>,
    pub momentum: Vec<Vec<f64>>,
    pub metadata: TrajectoryMetadata,
}

impl Trajectory {
    fn empty(sys: &dyn StochasticSystem, scheme: Scheme, path: &DrivingPath, x0: &[f64], opts: &IntegrateOptions) -> Self {
        let coupling: Coupling = sys.coupling();
        Self {
            times: Vec::new(),
            states: Vec::new(),
            energy: Vec::new(),
            casimirs: Vec::new(),
            momentum: Vec::new(),
            metadata: TrajectoryMetadata {
                system: sys.name().to_string(),
                scheme,
                scheme_note: "fixed-step discretisation chosen by this library".into(),
                seed: path.seed(),
                trajectory: path.trajectory(),
                refinement_level: path.level(),
                n_steps: path.n_steps(),
                record_stride: opts.record_stride,
                sigma: coupling.sigma,
                theta: coupling.theta,
                beta: coupling.beta,
                state_labels: sys.state_labels(),
                casimir_labels: sys.casimirs(x0).into_iter().map(|(n, _)| n).collect(),
                momentum_labels: sys.momentum_map(x0).into_iter().map(|(n, _)| n).collect(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    fn record(&mut self, sys: &dyn StochasticSystem, t: f64, x: &[f64], diagnostics: bool) {
        self.times.push(t);
        self.states.push(x.to_vec());
        if diagnostics {
            self.energy.push(sys.energy(x));
            self.casimirs.push(sys.casimirs(x).into_iter().map(|(_, v)| v).collect());
            self.momentum.push(sys.momentum_map(x).into_iter().map(|(_, v)| v).collect());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Keeps every `stride`-th record and the last one.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let n = self.len();
        let keep: Vec<usize> = (0..n).filter(|k| k % stride == 0 || *k + 1 == n).collect();
        let pick = |v: &Vec<Vec<f64>>| if v.is_empty() { Vec::new() } else { keep.iter().map(|&k| v[k].clone()).collect() };
        let mut metadata = self.metadata.clone();
        metadata.record_stride *= stride;
        Trajectory {
            times: keep.iter().map(|&k| self.times[k]).collect(),
            states: pick(&self.states),
            energy: if self.energy.is_empty() { Vec::new() } else { keep.iter().map(|&k| self.energy[k]).collect() },
            casimirs: pick(&self.casimirs),
            momentum: pick(&self.momentum),
            metadata,
        }
    }

    /// Column names of [`Trajectory::write_csv`].
    pub fn csv_header(&self) -> Vec<String> {
        let m = &self.metadata;
        let mut h = vec!["t".to_string()];
        h.extend(m.state_labels.iter().cloned());
        if !self.energy.is_empty() {
            h.push("h0".into());
            h.extend(m.casimir_labels.iter().map(|c| format!("C_{c}")));
            h.extend(m.momentum_labels.iter().map(|c| format!("J_{c}")));
        }
        h
    }

    /// Writes `t, state..., h0, C_*, J_*` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(self.csv_header()).map_err(io)?;
        for k in 0..self.times.len() {
            let mut row = vec![fmt_f64(self.times[k])];
            row.extend(self.states[k].iter().map(|v| fmt_f64(*v)));
            if !self.energy.is_empty() {
                row.push(fmt_f64(self.energy[k]));
                row.extend(self.casimirs[k].iter().map(|v| fmt_f64(*v)));
                row.extend(self.momentum[k].iter().map(|v| fmt_f64(*v)));
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.metadata).unwrap_or(serde_json::Value::Null)
    }
}

/// Failure during integration, with everything recorded before it.
#[derive(Debug, Clone)]
pub struct IntegrationFailure {
    pub error: Error,
    pub step: usize,
    pub partial: Trajectory,
}

impl std::fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "integration failed at step {}: {}", self.step, self.error)
    }
}

impl std::error::Error for IntegrationFailure {}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        f.error
    }
}

/// Integrates `sys` from `x0` along the whole `path`, projecting after
/// every step with [`StochasticSystem::project`].
pub fn integrate_trajectory(
    sys: &dyn StochasticSystem,
    scheme: Scheme,
    path: &DrivingPath,
    x0: &[f64],
    opts: &IntegrateOptions,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let mut traj = Trajectory::empty(sys, scheme, path, x0, opts);
    let fail = |error: Error, step: usize, partial: Trajectory| IntegrationFailure { error, step, partial };
    if x0.len() != sys.state_dim() {
        return Err(fail(Error::DimensionMismatch { expected: sys.state_dim(), got: x0.len() }, 0, traj));
    }
    if path.n_components() != sys.n_noise() + 1 {
        return Err(fail(
            Error::DimensionMismatch { expected: sys.n_noise() + 1, got: path.n_components() },
            0,
            traj,
        ));
    }
    if scheme == Scheme::ItoEuler && path.kinds().contains(&ComponentKind::Data) {
        return Err(fail(
            Error::Unsupported("the Ito form assumes Brownian components".into()),
            0,
            traj,
        ));
    }
    let stride = opts.record_stride.max(1);
    let times = path.times();
    let mut x = x0.to_vec();
    traj.record(sys, times[0], &x, opts.diagnostics);
    let n_steps = path.n_steps();
    for n in 0..n_steps {
        match step(scheme, sys, &x, path.increments_at(n), n) {
            Ok(mut next) => {
                sys.project(&mut next);
                x = next;
            }
            Err(e) => {
                if traj.times.last() != Some(&times[n]) {
                    traj.record(sys, times[n], &x, opts.diagnostics);
                }
                return Err(fail(e, n, traj));
            }
        }
        if (n + 1) % stride == 0 || n + 1 == n_steps {
            traj.record(sys, times[n + 1], &x, opts.diagnostics);
        }
    }
    Ok(traj)
}

/// Scalar observable evaluated on recorded states.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

impl Observable {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }
}

/// Time grid shared by every member of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

/// Ensemble statistics, reduced in trajectory-index order.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub observable_names: Vec<String>,
    /// `means[k][n]`: observable `k` at recorded time `n`, over successful members.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    /// Terminal state per member (`None` where it failed).
    pub terminal: Vec<Option<Vec<f64>>>,
    pub failures: Vec<(usize, Error)>,
    /// Full trajectories when requested.
    pub trajectories: Vec<Option<Trajectory>>,
}

impl EnsembleResult {
    pub fn n_success(&self) -> usize {
        self.terminal.iter().filter(|t| t.is_some()).count()
    }
}

/// Runs `n_traj` independent members with paths keyed by
/// `(base_seed, member index)`. Results do not depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    sys: &dyn StochasticSystem,
    scheme: Scheme,
    n_traj: usize,
    base_seed: u64,
    spec: PathSpec,
    x0: &[f64],
    observables: &[Observable],
    opts: &IntegrateOptions,
    keep_trajectories: bool,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(Error::InvalidInput("n_traj must be at least 1".into()));
    }
    let runs: Vec<std::result::Result<Trajectory, Error>> = (0..n_traj)
        .into_par_iter()
        .map(|k| {
            let path = brownian_path_for(sys.n_noise(), spec.t0, spec.t1, spec.n_steps, base_seed, k as u64)?;
            integrate_trajectory(sys, scheme, &path, x0, opts).map_err(Error::from)
        })
        .collect();
    let mut times = Vec::new();
    let n_obs = observables.len();
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); n_obs];
    let mut sq: Vec<Vec<f64>> = vec![Vec::new(); n_obs];
    let mut count = 0usize;
    let mut terminal = Vec::with_capacity(n_traj);
    let mut failures = Vec::new();
    let mut trajectories = Vec::with_capacity(n_traj);
    for (k, r) in runs.into_iter().enumerate() {
        match r {
            Ok(t) => {
                if times.is_empty() {
                    times = t.times.clone();
                    for j in 0..n_obs {
                        sums[j] = vec![0.0; times.len()];
                        sq[j] = vec![0.0; times.len()];
                    }
                }
                for (j, o) in observables.iter().enumerate() {
                    for (n, s) in t.states.iter().enumerate() {
                        let v = (o.f)(s);
                        sums[j][n] += v;
                        sq[j][n] += v * v;
                    }
                }
                count += 1;
                terminal.push(Some(t.final_state().to_vec()));
                trajectories.push(if keep_trajectories { Some(t) } else { None });
            }
            Err(e) => {
                failures.push((k, e));
                terminal.push(None);
                trajectories.push(None);
            }
        }
    }
    let c = count.max(1) as f64;
    let means: Vec<Vec<f64>> = sums.iter().map(|s| s.iter().map(|v| v / c).collect()).collect();
    let variances = sq
        .iter()
        .zip(&means)
        .map(|(q, m)| q.iter().zip(m).map(|(q, m)| (q / c - m * m).max(0.0)).collect())
        .collect();
    Ok(EnsembleResult {
        times,
        observable_names: observables.iter().map(|o| o.name.clone()).collect(),
        means,
        variances,
        terminal,
        failures,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{rigid_body, Fields};
    use crate::noise::{brownian_path, DrivingPath};
    use approx::assert_relative_eq;

    /// Scalar `dX = a X dt + b X o dW`.
    struct Gbm {
        a: f64,
        b: f64,
    }

    impl StochasticSystem for Gbm {
        fn name(&self) -> &str {
            "gbm"
        }
        fn state_dim(&self) -> usize {
            1
        }
        fn n_noise(&self) -> usize {
            1
        }
        fn fields(&self, x: &[f64]) -> Result<Fields> {
            Ok(Fields { drift: vec![self.a * x[0]], diffusions: vec![vec![self.b * x[0]]] })
        }
        fn energy(&self, x: &[f64]) -> f64 {
            x[0]
        }
        fn coupling(&self) -> Coupling {
            Coupling::untied(self.b, 0.0).unwrap()
        }
    }

    #[test]
    fn zero_increments_are_identity() {
        let s = rigid_body([1.0, 2.0, 3.0], Coupling::untied(0.5, 0.2).unwrap()).unwrap();
        let x = [0.3, 1.0, -0.2];
        let inc = [0.0; 4];
        for sc in [Scheme::Heun, Scheme::ItoEuler, Scheme::Coadjoint] {
            assert_eq!(step(sc, &s, &x, &inc, 0).unwrap(), x.to_vec());
        }
    }

    #[test]
    fn heun_matches_geometric_brownian_motion_locally() {
        let g = Gbm { a: 0.7, b: 0.9 };
        let x0 = 1.3;
        for (dt, dw) in [(1e-2, 0.08), (5e-3, -0.05), (1e-3, 0.03)] {
            let next = heun_step(&g, &[x0], &[dt, dw], 0).unwrap()[0];
            let exact = x0 * (g.a * dt + g.b * dw).exp();
            let h = dt + dw * dw;
            // the local error is third order in (dt, dW)
            assert!((next - exact).abs() < 2.0 * x0 * (g.a.abs() + g.b.abs()).powi(3) * h.powf(1.5));
        }
    }

    #[test]
    fn ito_euler_adds_correction() {
        let s = rigid_body([1.0, 1.0, 1.0], Coupling::untied(0.5, 0.0).unwrap()).unwrap();
        let x = [0.3, 1.0, -0.2];
        let dt = 0.01;
        let out = ito_euler_step(&s, &x, &[dt, 0.0, 0.0, 0.0], 0).unwrap();
        let drift = s.drift(&x).unwrap();
        for k in 0..3 {
            assert_relative_eq!(out[k], x[k] + dt * (drift[k] - 0.25 * x[k]), epsilon = 1e-15);
        }
    }

    #[test]
    fn full_turn_is_identity() {
        let v = [0.3, -1.2, 0.8];
        let axis: [f64; 3] = [1.0, 2.0, -0.5];
        let n = axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2];
        let s = 2.0 * std::f64::consts::PI / n.sqrt();
        let r = rodrigues(&[axis[0] * s, axis[1] * s, axis[2] * s], &v);
        for k in 0..3 {
            assert!((r[k] - v[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn coadjoint_step_preserves_norm() {
        let s = rigid_body([1.0, 2.0, 3.0], Coupling::untied(0.8, 0.3).unwrap()).unwrap();
        let x = [0.3, 1.0, -0.2];
        let n0: f64 = x.iter().map(|v| v * v).sum();
        let y = coadjoint_step_so3(&s, &x, &[0.05, 0.2, -0.1, 0.3], 0).unwrap();
        let n1: f64 = y.iter().map(|v| v * v).sum();
        assert!(((n1 - n0) / n0).abs() < 1e-14);
    }

    #[test]
    fn semidirect_flow_matches_fine_ode_solve() {
        let xi = [0.3, -0.7, 0.5];
        let u = [0.2, 0.4, -0.9];
        let x0 = [0.4, -1.0, 0.7, 0.3, 0.5, -0.8];
        let rhs = |y: &[f64; 6]| {
            let a = crate::dynamics::cross(&y[..3], &xi);
            let b = crate::dynamics::cross(&y[3..], &u);
            let c = crate::dynamics::cross(&y[3..], &xi);
            [a[0] + b[0], a[1] + b[1], a[2] + b[2], c[0], c[1], c[2]]
        };
        // classical RK4 with 2000 steps as reference
        let n = 2000;
        let h = 1.0 / n as f64;
        let mut y = x0;
        for _ in 0..n {
            let add = |y: &[f64; 6], k: &[f64; 6], s: f64| {
                let mut o = *y;
                for i in 0..6 {
                    o[i] += s * k[i];
                }
                o
            };
            let k1 = rhs(&y);
            let k2 = rhs(&add(&y, &k1, h / 2.0));
            let k3 = rhs(&add(&y, &k2, h / 2.0));
            let k4 = rhs(&add(&y, &k3, h));
            for i in 0..6 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let z = semidirect_flow(&xi, &u, &x0);
        for i in 0..6 {
            assert!((z[i] - y[i]).abs() < 1e-12, "{i}: {} vs {}", z[i], y[i]);
        }
        // small-angle branch agrees with the closed form
        let tiny = [1e-5, 2e-5, -1e-5];
        let a = semidirect_flow(&tiny, &u, &x0);
        let b = semidirect_flow(&[tiny[0] * 1.0000001, tiny[1] * 1.0000001, tiny[2] * 1.0000001], &u, &x0);
        for i in 0..6 {
            assert!((a[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn semidirect_step_keeps_casimirs() {
        use crate::dynamics::HeavyTop;
        let t = HeavyTop::new(
            nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0)),
            0.8,
            [0.0, 0.0, 1.0],
            Coupling::untied(0.7, 0.2).unwrap(),
        )
        .unwrap();
        let path = brownian_path(3, 0.0, 10.0, 2000, 4).unwrap();
        let x0 = [0.4, -1.0, 0.7, 0.3, 0.5, -0.8];
        let tr = integrate_trajectory(&t, Scheme::Coadjoint, &path, &x0, &IntegrateOptions::default()).unwrap();
        let c0 = &tr.casimirs[0];
        for c in &tr.casimirs {
            assert!((c[0] - c0[0]).abs() < 1e-13);
            assert!((c[1] - c0[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn coadjoint_rejects_non_so3() {
        let g = Gbm { a: 0.1, b: 0.1 };
        assert!(matches!(coadjoint_step_so3(&g, &[1.0], &[0.1, 0.0], 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn nan_reports_step() {
        let g = Gbm { a: f64::INFINITY, b: 0.0 };
        let path = brownian_path(1, 0.0, 1.0, 10, 3).unwrap();
        let err = integrate_trajectory(&g, Scheme::Heun, &path, &[1.0], &IntegrateOptions::default()).unwrap_err();
        assert!(matches!(err.error, Error::Numerical { step: 0, .. }));
        assert_eq!(err.partial.len(), 1);
    }

    #[test]
    fn deterministic_rigid_body_conserves_energy_and_casimir() {
        let s = rigid_body([1.0, 2.0, 3.0], Coupling::untied(0.0, 0.0).unwrap()).unwrap();
        let path = brownian_path(3, 0.0, 10.0, 10_000, 1).unwrap();
        let x0 = [1.0, 1.0, 1.0];
        let opts = IntegrateOptions { record_stride: 100, diagnostics: true };
        let heun = integrate_trajectory(&s, Scheme::Heun, &path, &x0, &opts).unwrap();
        let e0 = heun.energy[0];
        let c0 = heun.casimirs[0][0];
        for (e, c) in heun.energy.iter().zip(&heun.casimirs) {
            assert!(((e - e0) / e0).abs() < 1e-5);
            assert!(((c[0] - c0) / c0).abs() < 1e-5);
        }
        let co = integrate_trajectory(&s, Scheme::Coadjoint, &path, &x0, &opts).unwrap();
        for c in &co.casimirs {
            assert!(((c[0] - c0) / c0).abs() < 1e-12);
        }
    }

    #[test]
    fn stride_keeps_first_and_last() {
        let s = rigid_body([1.0, 2.0, 3.0], Coupling::untied(0.2, 0.0).unwrap()).unwrap();
        let path = brownian_path(3, 0.0, 1.0, 25, 1).unwrap();
        let t = integrate_trajectory(&s, Scheme::Heun, &path, &[1.0, 0.0, 0.0], &IntegrateOptions {
            record_stride: 10,
            diagnostics: false,
        })
        .unwrap();
        assert_eq!(t.times, vec![0.0, path.times()[10], path.times()[20], 1.0]);
        assert!(t.energy.is_empty());
    }

    #[test]
    fn single_member_ensemble_matches_trajectory() {
        let s = rigid_body([1.0, 2.0, 3.0], Coupling::new(0.5, Some(1.0), None).unwrap()).unwrap();
        let spec = PathSpec { t0: 0.0, t1: 1.0, n_steps: 100 };
        let x0 = [0.5, 1.0, 1.5];
        let e = run_ensemble(&s, Scheme::Heun, 1, 42, spec, &x0, &[], &IntegrateOptions::default(), true).unwrap();
        let path = brownian_path_for(3, 0.0, 1.0, 100, 42, 0).unwrap();
        let t = integrate_trajectory(&s, Scheme::Heun, &path, &x0, &IntegrateOptions::default()).unwrap();
        assert_eq!(e.trajectories[0].as_ref().unwrap(), &t);
    }

    #[test]
    fn csv_has_full_precision() {
        let s = rigid_body([1.0, 2.0, 3.0], Coupling::untied(0.1, 0.0).unwrap()).unwrap();
        let path = brownian_path(3, 0.0, 0.1, 3, 1).unwrap();
        let t = integrate_trajectory(&s, Scheme::Heun, &path, &[1.0, 0.0, 0.0], &IntegrateOptions::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, vec!["t", "Pi1", "Pi2", "Pi3", "h0", "C_norm_sq"]);
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.unwrap();
            for (j, v) in t.states[k].iter().enumerate() {
                assert_eq!(rec[j + 1].parse::<f64>().unwrap(), *v);
            }
        }
    }

    #[test]
    fn imported_paths_are_rejected_by_ito_scheme() {
        let times = vec![0.0, 0.1, 0.2];
        let path = DrivingPath::from_increments(times, vec![vec![0.1, -0.1]], ComponentKind::Data).unwrap();
        let g = Gbm { a: 0.1, b: 0.1 };
        let r = integrate_trajectory(&g, Scheme::ItoEuler, &path, &[1.0], &IntegrateOptions::default());
        assert!(matches!(r.unwrap_err().error, Error::Unsupported(_)));
        assert!(integrate_trajectory(&g, Scheme::Heun, &path, &[1.0], &IntegrateOptions::default()).is_ok());
    }
}
