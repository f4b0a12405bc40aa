//! Discretised driving semimartingales.
//!
//! Component 0 is always the clock (`dS^0 = dt`, zero quadratic variation).
//! Brownian components are drawn from a counter-based generator: every
//! normal variate is a pure function of
//! `(seed, trajectory, component, step, refinement level)`, so any increment
//! can be regenerated in isolation and ensembles do not depend on the
//! order in which trajectories are scheduled.

use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentKind {
    Clock,
    Brownian,
    /// Imported increments of unknown law.
    Data,
}

/// Random-access standard normal stream for one `(seed, trajectory, component, level)` key.
struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    fn new(seed: u64, trajectory: u64, component: usize, level: u32) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&trajectory.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(((level as u64) << 40) | component as u64);
        Self { rng }
    }

    fn at(&mut self, step: usize) -> f64 {
        // two u64 (four 32-bit words) per variate
        self.rng.set_word_pos(step as u128 * 4);
        self.next()
    }

    fn next(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = 1.0 - (a >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Standard normal variate for a single key, independent of any other draw.
pub fn normal_at(seed: u64, trajectory: u64, component: usize, step: usize, level: u32) -> f64 {
    NormalStream::new(seed, trajectory, component, level).at(step)
}

/// Time grid with per-component increments and quadratic-variation increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    times: Vec<f64>,
    kinds: Vec<ComponentKind>,
    // step-major: increments[n * n_components + i]
    increments: Vec<f64>,
    qv_increments: Vec<f64>,
    seed: u64,
    trajectory: u64,
    level: u32,
}

impl DrivingPath {
    /// Builds a path from explicit data. `increments[i][n]` is component `i`
    /// (excluding the clock) at step `n`; the clock is derived from `times`.
    pub fn from_increments(
        times: Vec<f64>,
        increments: Vec<Vec<f64>>,
        kind: ComponentKind,
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two time points".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
        }
        let steps = times.len() - 1;
        for (i, c) in increments.iter().enumerate() {
            if c.len() != steps {
                return Err(Error::InvalidInput(format!(
                    "component {} has {} increments, expected {steps}",
                    i + 1,
                    c.len()
                )));
            }
        }
        let m = increments.len() + 1;
        let mut inc = vec![0.0; steps * m];
        let mut qv = vec![0.0; steps * m];
        for n in 0..steps {
            let dt = times[n + 1] - times[n];
            inc[n * m] = dt;
            for (i, c) in increments.iter().enumerate() {
                inc[n * m + i + 1] = c[n];
                qv[n * m + i + 1] = match kind {
                    ComponentKind::Brownian => dt,
                    _ => c[n] * c[n],
                };
            }
        }
        let mut kinds = vec![ComponentKind::Clock];
        kinds.extend(std::iter::repeat_n(kind, m - 1));
        Ok(Self {
            times,
            kinds,
            increments: inc,
            qv_increments: qv,
            seed: 0,
            trajectory: 0,
            level: 0,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Number of components including the clock.
    pub fn n_components(&self) -> usize {
        self.kinds.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn kinds(&self) -> &[ComponentKind] {
        &self.kinds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trajectory(&self) -> u64 {
        self.trajectory
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Increments of every component over step `n`; entry 0 is `dt`.
    pub fn increments_at(&self, n: usize) -> &[f64] {
        let m = self.n_components();
        &self.increments[n * m..(n + 1) * m]
    }

    pub fn qv_increments_at(&self, n: usize) -> &[f64] {
        let m = self.n_components();
        &self.qv_increments[n * m..(n + 1) * m]
    }

    /// All increments of component `i`.
    pub fn component(&self, i: usize) -> Vec<f64> {
        let m = self.n_components();
        (0..self.n_steps()).map(|n| self.increments[n * m + i]).collect()
    }

    /// Path levels `S^i(t_n)` with `S^i(t_0) = 0` for `i >= 1`.
    pub fn levels(&self, i: usize) -> Vec<f64> {
        if i == 0 {
            return self.times.clone();
        }
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.times.len());
        out.push(0.0);
        for d in self.component(i) {
            acc += d;
            out.push(acc);
        }
        out
    }

    /// Halves every interval; midpoints follow the Brownian bridge so that
    /// each pair of fine increments sums to the coarse one.
    pub fn refine(&self) -> Result<DrivingPath> {
        if let Some(i) = self.kinds.iter().position(|k| *k == ComponentKind::Data) {
            return Err(Error::Unsupported(format!(
                "cannot refine imported component {i}: Brownian bridge needs Brownian increments"
            )));
        }
        let m = self.n_components();
        let steps = self.n_steps();
        let level = self.level + 1;
        let mut times = Vec::with_capacity(2 * steps + 1);
        for n in 0..steps {
            times.push(self.times[n]);
            times.push(self.times[n] + 0.5 * (self.times[n + 1] - self.times[n]));
        }
        times.push(self.times[steps]);

        let mut inc = vec![0.0; 2 * steps * m];
        let mut qv = vec![0.0; 2 * steps * m];
        for n in 0..2 * steps {
            let dt = times[n + 1] - times[n];
            inc[n * m] = dt;
            for i in 1..m {
                qv[n * m + i] = dt;
            }
        }
        for i in 1..m {
            let mut stream = NormalStream::new(self.seed, self.trajectory, i, level);
            for n in 0..steps {
                let coarse = self.increments[n * m + i];
                let h = self.times[n + 1] - self.times[n];
                let z = stream.at(n);
                let first = 0.5 * coarse + 0.5 * h.sqrt() * z;
                inc[2 * n * m + i] = first;
                inc[(2 * n + 1) * m + i] = coarse - first;
            }
        }
        Ok(DrivingPath {
            times,
            kinds: self.kinds.clone(),
            increments: inc,
            qv_increments: qv,
            seed: self.seed,
            trajectory: self.trajectory,
            level,
        })
    }

    /// Writes `t,S1..SM` levels with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let m = self.n_components();
        let mut header = vec!["t".to_string()];
        header.extend((1..m).map(|i| format!("S{i}")));
        w.write_record(&header).map_err(csv_err)?;
        let levels: Vec<Vec<f64>> = (1..m).map(|i| self.levels(i)).collect();
        for (n, t) in self.times.iter().enumerate() {
            let mut row = vec![fmt_f64(*t)];
            row.extend(levels.iter().map(|l| fmt_f64(l[n])));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `t,S1..SM` levels; increments are differenced on load and the
    /// stochastic components are tagged as imported data.
    pub fn read_csv<R: Read>(input: R) -> Result<DrivingPath> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers().map_err(csv_err)?.len();
        if width < 1 {
            return Err(Error::InvalidInput("path csv needs a `t` column".into()));
        }
        let mut times = Vec::new();
        let mut levels: Vec<Vec<f64>> = vec![Vec::new(); width - 1];
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad number `{s}`: {e}")))
            };
            times.push(parse(&rec[0])?);
            for (i, l) in levels.iter_mut().enumerate() {
                l.push(parse(&rec[i + 1])?);
            }
        }
        let incs = levels
            .iter()
            .map(|l| l.windows(2).map(|w| w[1] - w[0]).collect())
            .collect();
        DrivingPath::from_increments(times, incs, ComponentKind::Data)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Round-trip-exact decimal representation.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Brownian path with `n_components` Brownian components plus the clock.
pub fn brownian_path(
    n_components: usize,
    t0: f64,
    t1: f64,
    n_steps: usize,
    seed: u64,
) -> Result<DrivingPath> {
    brownian_path_for(n_components, t0, t1, n_steps, seed, 0)
}

/// Same as [`brownian_path`] for ensemble member `trajectory`.
pub fn brownian_path_for(
    n_components: usize,
    t0: f64,
    t1: f64,
    n_steps: usize,
    seed: u64,
    trajectory: u64,
) -> Result<DrivingPath> {
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be positive".into()));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidInput(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let span = t1 - t0;
    let times: Vec<f64> = (0..=n_steps)
        .map(|n| if n == n_steps { t1 } else { t0 + span * (n as f64 / n_steps as f64) })
        .collect();
    let m = n_components + 1;
    let mut inc = vec![0.0; n_steps * m];
    let mut qv = vec![0.0; n_steps * m];
    for n in 0..n_steps {
        let dt = times[n + 1] - times[n];
        inc[n * m] = dt;
        for i in 1..m {
            qv[n * m + i] = dt;
        }
    }
    for i in 1..m {
        let mut stream = NormalStream::new(seed, trajectory, i, 0);
        stream.rng.set_word_pos(0);
        for n in 0..n_steps {
            let dt = inc[n * m];
            inc[n * m + i] = dt.sqrt() * stream.next();
        }
    }
    let mut kinds = vec![ComponentKind::Clock];
    kinds.extend(std::iter::repeat_n(ComponentKind::Brownian, n_components));
    Ok(DrivingPath {
        times,
        kinds,
        increments: inc,
        qv_increments: qv,
        seed,
        trajectory,
        level: 0,
    })
}
