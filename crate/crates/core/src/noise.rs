//! Lévy measures, space-time jump noise and its truncation.
//!
//! A noise path on `[0,T] × D` consists of the jumps of a Poisson random
//! measure with intensity `dt dx ν(dz)` restricted to `|z| > ε`, simulated
//! exactly, plus a Gaussian white-noise surrogate carrying the variance
//! `σ_ε² = ∫_{|z|≤ε} z² ν(dz)` of the compensated small jumps. The surrogate
//! is piecewise constant on the solver's quadrature cells and time steps.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::QuadratureGrid;
use crate::error::{Error, Result};

/// A point mass `rate · δ_size` of a finite-activity Lévy measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub size: f64,
    pub rate: f64,
}

/// Declarative Lévy measure `ν` on `ℝ \ {0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyMeasure {
    /// Finite activity: `ν = Σ_i ρ_i δ_{z_i}`.
    Atoms { atoms: Vec<Atom> },
    /// `ν(dz) = (α/2)|z|^{-α-1} dz`, `α ∈ (0,2)`.
    SymmetricStable { alpha: f64 },
}

impl LevyMeasure {
    /// Symmetric two-point measure `{(+z, ρ/2), (-z, ρ/2)}`.
    pub fn symmetric_pair(size: f64, total_rate: f64) -> Self {
        LevyMeasure::Atoms {
            atoms: vec![
                Atom {
                    size,
                    rate: total_rate / 2.0,
                },
                Atom {
                    size: -size,
                    rate: total_rate / 2.0,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LevyMeasure::Atoms { atoms } => {
                for a in atoms {
                    if !(a.size.is_finite() && a.size != 0.0) {
                        return Err(Error::InvalidMeasure(format!("atom size {} must be finite and nonzero", a.size)));
                    }
                    if !(a.rate.is_finite() && a.rate >= 0.0) {
                        return Err(Error::InvalidMeasure(format!("atom rate {} must be finite and nonnegative", a.rate)));
                    }
                }
                Ok(())
            }
            LevyMeasure::SymmetricStable { alpha } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::InvalidMeasure(format!("stable index α = {alpha} must lie in (0,2)")));
                }
                Ok(())
            }
        }
    }

    /// `ν(A) = ν(-A)` for all `A`.
    pub fn is_symmetric(&self) -> bool {
        match self {
            LevyMeasure::SymmetricStable { .. } => true,
            LevyMeasure::Atoms { atoms } => {
                let mut pos: Vec<(f64, f64)> = Vec::new();
                let mut neg: Vec<(f64, f64)> = Vec::new();
                for a in atoms.iter().filter(|a| a.rate > 0.0) {
                    if a.size > 0.0 {
                        pos.push((a.size, a.rate));
                    } else {
                        neg.push((-a.size, a.rate));
                    }
                }
                let merge = |v: &mut Vec<(f64, f64)>| {
                    v.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut out: Vec<(f64, f64)> = Vec::new();
                    for (s, r) in v.drain(..) {
                        match out.last_mut() {
                            Some(last) if last.0 == s => last.1 += r,
                            _ => out.push((s, r)),
                        }
                    }
                    out
                };
                merge(&mut pos) == merge(&mut neg)
            }
        }
    }

    /// `m_2 = ∫ z² ν(dz)`; infinite for the stable measure.
    pub fn second_moment(&self) -> Result<f64> {
        match self {
            LevyMeasure::Atoms { .. } => Ok(self.truncated_second_moment(f64::INFINITY)),
            LevyMeasure::SymmetricStable { .. } => Err(Error::InfiniteSecondMoment),
        }
    }

    /// `m_2^K = ∫_{|z|≤K} z² ν(dz)`.
    pub fn truncated_second_moment(&self, level: f64) -> f64 {
        match self {
            LevyMeasure::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.size.abs() <= level)
                .map(|a| a.rate * a.size * a.size)
                .sum(),
            LevyMeasure::SymmetricStable { alpha } => {
                if level.is_infinite() {
                    f64::INFINITY
                } else {
                    alpha * level.powf(2.0 - alpha) / (2.0 - alpha)
                }
            }
        }
    }

    /// `ν(|z| > K)`.
    pub fn tail_mass(&self, level: f64) -> f64 {
        match self {
            LevyMeasure::Atoms { atoms } => atoms.iter().filter(|a| a.size.abs() > level).map(|a| a.rate).sum(),
            LevyMeasure::SymmetricStable { alpha } => {
                if level <= 0.0 {
                    f64::INFINITY
                } else {
                    level.powf(-alpha)
                }
            }
        }
    }

    /// `∫_{lo<|z|≤hi} z ν(dz)`, the drift removed by compensating those jumps.
    pub fn jump_mean(&self, lo: f64, hi: f64) -> f64 {
        match self {
            LevyMeasure::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.size.abs() > lo && a.size.abs() <= hi)
                .map(|a| a.rate * a.size)
                .sum(),
            LevyMeasure::SymmetricStable { .. } => 0.0,
        }
    }

    /// Second moment and tail mass summary, truncated at `level` if given.
    pub fn moments(&self, level: Option<f64>) -> Result<Moments> {
        let m2 = match self {
            LevyMeasure::Atoms { .. } => Some(self.second_moment()?),
            LevyMeasure::SymmetricStable { .. } => {
                if level.is_none() {
                    return Err(Error::InfiniteSecondMoment);
                }
                None
            }
        };
        Ok(Moments {
            m2,
            truncation: level,
            m2_truncated: level.map(|k| self.truncated_second_moment(k)),
            tail_mass: level.map(|k| self.tail_mass(k)),
        })
    }

    /// Draws a jump size from `ν` restricted to `|z| > ε` and normalized.
    pub fn sample_large_jump<R: Rng + ?Sized>(&self, cutoff: f64, rng: &mut R) -> f64 {
        match self {
            LevyMeasure::Atoms { atoms } => {
                let total = self.tail_mass(cutoff);
                let mut u = rng.random::<f64>() * total;
                let mut last = 0.0;
                for a in atoms.iter().filter(|a| a.size.abs() > cutoff && a.rate > 0.0) {
                    last = a.size;
                    if u < a.rate {
                        return a.size;
                    }
                    u -= a.rate;
                }
                last
            }
            LevyMeasure::SymmetricStable { alpha } => {
                // P(|Z| > s | |Z| > ε) = (s/ε)^{-α}.
                let u: f64 = 1.0 - rng.random::<f64>();
                let magnitude = cutoff * u.powf(-1.0 / alpha);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

/// Output of [`LevyMeasure::moments`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `None` when infinite.
    pub m2: Option<f64>,
    pub truncation: Option<f64>,
    pub m2_truncated: Option<f64>,
    pub tail_mass: Option<f64>,
}

/// A Lévy measure together with the small-jump cutoff `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub measure: LevyMeasure,
    /// Jumps with `|z| ≤ ε` are replaced by the Gaussian surrogate.
    pub cutoff: f64,
}

impl NoiseSpec {
    pub fn new(measure: LevyMeasure, cutoff: f64) -> Result<Self> {
        let spec = Self { measure, cutoff };
        spec.validate()?;
        Ok(spec)
    }

    /// Finite-activity measures are simulated without a cutoff.
    pub fn exact(measure: LevyMeasure) -> Result<Self> {
        Self::new(measure, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        if !(self.cutoff >= 0.0 && self.cutoff.is_finite()) {
            return Err(Error::InvalidMeasure(format!("cutoff ε = {} must be finite and nonnegative", self.cutoff)));
        }
        if matches!(self.measure, LevyMeasure::SymmetricStable { .. }) && self.cutoff <= 0.0 {
            return Err(Error::InvalidMeasure("infinite-activity measures need a cutoff ε > 0".into()));
        }
        Ok(())
    }

    /// `σ_ε² = ∫_{|z|≤ε} z² ν(dz)`.
    pub fn small_jump_variance(&self) -> f64 {
        if self.cutoff == 0.0 {
            0.0
        } else {
            self.measure.truncated_second_moment(self.cutoff)
        }
    }

    /// Expected number of simulated jumps per unit space-time.
    pub fn jump_intensity(&self) -> f64 {
        self.measure.tail_mass(self.cutoff)
    }
}

/// Uniform time partition of `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimePartition {
    pub horizon: f64,
    pub steps: usize,
}

impl TimePartition {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::PartitionMismatch(format!("horizon T = {horizon} must be positive")));
        }
        if steps == 0 {
            return Err(Error::PartitionMismatch("partition needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    /// Partition with step as close to `dt` as divides `T`.
    pub fn with_step(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::PartitionMismatch(format!("Δt = {dt} must be positive")));
        }
        Self::new(horizon, ((horizon / dt).round() as usize).max(1))
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Grid time `t_i = i·Δt`.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    /// Index of the step `[t_n, t_{n+1})` containing `t`.
    pub fn step_of(&self, t: f64) -> usize {
        ((t / self.dt()).floor() as usize).min(self.steps - 1)
    }
}

/// One atom of the Poisson random measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub x: [f64; 2],
    pub z: f64,
}

/// A realized noise on `[0,T] × D`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    spec: NoiseSpec,
    seed: u64,
    partition: TimePartition,
    grid: Arc<QuadratureGrid>,
    jumps: Vec<JumpEvent>,
    /// Row-major `steps × cells` Gaussian increments, absent when `σ_ε = 0`.
    surrogate: Option<Vec<f64>>,
    sigma_eps2: f64,
    /// Drift `∫_{ε<|z|≤K} z ν(dz)` subtracted per unit space-time.
    compensator: f64,
    truncation: f64,
    /// Noise is switched off for steps starting at or after this time.
    silent_from: f64,
}

impl NoisePath {
    /// Samples a path; fully determined by `(spec, partition, grid, seed)`.
    pub fn sample(spec: &NoiseSpec, partition: TimePartition, grid: Arc<QuadratureGrid>, seed: u64) -> Result<Self> {
        spec.validate()?;
        let dim = grid.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let intensity = spec.jump_intensity();
        let mean = partition.horizon * intensity;
        let count = if mean > 0.0 {
            let poisson = Poisson::new(mean).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
            poisson.sample(&mut rng) as usize
        } else {
            0
        };
        let mut jumps = Vec::with_capacity(count);
        for _ in 0..count {
            let t = rng.random::<f64>() * partition.horizon;
            let mut x = [0.0; 2];
            loop {
                for c in x.iter_mut().take(dim) {
                    *c = rng.random::<f64>();
                }
                let p = &x[..dim];
                if p.iter().all(|&c| c > 0.0 && c < 1.0) && !grid.on_cell_face(p) {
                    break;
                }
            }
            let z = spec.measure.sample_large_jump(spec.cutoff, &mut rng);
            jumps.push(JumpEvent { t, x, z });
        }
        jumps.sort_by(|a, b| a.t.total_cmp(&b.t));

        let sigma_eps2 = spec.small_jump_variance();
        let surrogate = if sigma_eps2 > 0.0 {
            let mut srng = ChaCha8Rng::seed_from_u64(seed);
            srng.set_stream(1);
            let dt = partition.dt();
            let scales: Vec<f64> = grid.weights().iter().map(|w| (sigma_eps2 * dt * w).sqrt()).collect();
            let mut values = Vec::with_capacity(partition.steps * grid.len());
            for _ in 0..partition.steps {
                for s in &scales {
                    let g: f64 = StandardNormal.sample(&mut srng);
                    values.push(g * s);
                }
            }
            Some(values)
        } else {
            None
        };

        Ok(Self {
            compensator: spec.measure.jump_mean(spec.cutoff, f64::INFINITY),
            spec: spec.clone(),
            seed,
            partition,
            grid,
            jumps,
            surrogate,
            sigma_eps2,
            truncation: f64::INFINITY,
            silent_from: f64::INFINITY,
        })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn partition(&self) -> TimePartition {
        self.partition
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension()
    }

    /// Jumps sorted by time.
    pub fn jumps(&self) -> &[JumpEvent] {
        &self.jumps
    }

    pub fn sigma_eps2(&self) -> f64 {
        self.sigma_eps2
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn compensator(&self) -> f64 {
        self.compensator
    }

    /// Second moment of the jump law this path realizes, `m_2^K` with `K`
    /// the truncation level (`m_2` when untruncated).
    pub fn second_moment(&self) -> Result<f64> {
        if self.truncation.is_infinite() {
            self.spec.measure.second_moment()
        } else {
            Ok(self.spec.measure.truncated_second_moment(self.truncation))
        }
    }

    /// Surrogate increments of step `n`, one per cell.
    pub fn surrogate_step(&self, n: usize) -> Option<&[f64]> {
        if !self.is_active(n) {
            return None;
        }
        let cells = self.grid.len();
        self.surrogate.as_ref().map(|v| &v[n * cells..(n + 1) * cells])
    }

    /// Drift subtracted in step `n` per unit volume, zero for silenced steps.
    pub fn compensator_step(&self, n: usize) -> f64 {
        if self.is_active(n) {
            self.compensator
        } else {
            0.0
        }
    }

    fn is_active(&self, n: usize) -> bool {
        self.partition.time(n) < self.silent_from
    }

    /// Range of jump indices falling in step `n`.
    pub fn jumps_in_step(&self, n: usize) -> &[JumpEvent] {
        let lo = self.partition.time(n);
        let hi = if n + 1 == self.partition.steps {
            f64::INFINITY
        } else {
            self.partition.time(n + 1)
        };
        let start = self.jumps.partition_point(|j| j.t < lo);
        let end = self.jumps.partition_point(|j| j.t < hi);
        &self.jumps[start..end]
    }

    /// `Λ^K`: drops jumps with `|z| > K`, keeps everything else unchanged.
    pub fn truncate(&self, level: f64) -> Result<Self> {
        if level < self.spec.cutoff || level.is_nan() {
            return Err(Error::TruncationBelowCutoff {
                level,
                cutoff: self.spec.cutoff,
            });
        }
        let mut out = self.clone();
        out.jumps.retain(|j| j.z.abs() <= level);
        out.truncation = self.truncation.min(level);
        out.compensator = self.spec.measure.jump_mean(self.spec.cutoff, out.truncation);
        Ok(out)
    }

    /// `τ^K`: time of the first jump with `|z| > K`, `+∞` if none.
    pub fn first_large_jump(&self, level: f64) -> f64 {
        self.jumps
            .iter()
            .find(|j| j.z.abs() > level)
            .map_or(f64::INFINITY, |j| j.t)
    }

    /// Removes all noise strictly after `t`: jumps with `t_j > t` and the
    /// surrogate and compensator of every step starting at or after `t`.
    pub fn silence_after(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.jumps.retain(|j| j.t <= t);
        out.silent_from = self.silent_from.min(t);
        if let Some(values) = out.surrogate.as_mut() {
            let cells = self.grid.len();
            for n in 0..self.partition.steps {
                if self.partition.time(n) >= t {
                    values[n * cells..(n + 1) * cells].iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
        out
    }

    /// The path with every jump and surrogate increment sign-flipped.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.jumps.iter_mut().for_each(|j| j.z = -j.z);
        if let Some(values) = out.surrogate.as_mut() {
            values.iter_mut().for_each(|v| *v = -*v);
        }
        out.compensator = -out.compensator;
        out
    }

    /// Replaces the jump list; times must lie in `[0,T)` and are re-sorted.
    pub fn with_jumps(&self, mut jumps: Vec<JumpEvent>) -> Result<Self> {
        if let Some(j) = jumps.iter().find(|j| !(j.t >= 0.0 && j.t < self.partition.horizon)) {
            return Err(Error::PartitionMismatch(format!("jump time {} outside [0, T)", j.t)));
        }
        jumps.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut out = self.clone();
        out.jumps = jumps;
        Ok(out)
    }

    /// `Λ(B)` for `B = [0,T] × D`: sum of all increments.
    pub fn total_mass(&self) -> f64 {
        let ones = StepField::constant(self.partition.steps, self.grid.len(), 1.0);
        self.integrate(&ones).expect("shape matches by construction")
    }

    /// `∫ H dL` for a step field `H` constant on each (step, cell).
    pub fn integrate(&self, field: &StepField) -> Result<f64> {
        if field.steps != self.partition.steps || field.cells != self.grid.len() {
            return Err(Error::PartitionMismatch(format!(
                "step field is {}×{}, path is {}×{}",
                field.steps,
                field.cells,
                self.partition.steps,
                self.grid.len()
            )));
        }
        let dim = self.dimension();
        let mut total = 0.0;
        for j in &self.jumps {
            let n = self.partition.step_of(j.t);
            let c = self.grid.cell_of(&j.x[..dim]);
            total += field.get(n, c) * j.z;
        }
        let dt = self.partition.dt();
        for n in 0..self.partition.steps {
            let row = field.row(n);
            let drift = self.compensator_step(n);
            if drift != 0.0 {
                let s: f64 = row.iter().zip(self.grid.weights()).map(|(h, w)| h * w).sum();
                total -= drift * dt * s;
            }
            if let Some(g) = self.surrogate_step(n) {
                total += row.iter().zip(g).map(|(h, g)| h * g).sum::<f64>();
            }
        }
        Ok(total)
    }
}

/// Predictable integrand constant on each (time step, spatial cell).
#[derive(Clone, Debug, PartialEq)]
pub struct StepField {
    steps: usize,
    cells: usize,
    values: Vec<f64>,
}

impl StepField {
    pub fn constant(steps: usize, cells: usize, value: f64) -> Self {
        Self {
            steps,
            cells,
            values: vec![value; steps * cells],
        }
    }

    /// Field whose value on step `n`, cell `i` is `f(t_n, x_i)` (left point).
    pub fn from_fn(partition: TimePartition, grid: &QuadratureGrid, f: impl Fn(f64, &[f64]) -> f64) -> Self {
        let mut values = Vec::with_capacity(partition.steps * grid.len());
        for n in 0..partition.steps {
            let t = partition.time(n);
            values.extend(grid.nodes().map(|x| f(t, x)));
        }
        Self {
            steps: partition.steps,
            cells: grid.len(),
            values,
        }
    }

    pub fn get(&self, step: usize, cell: usize) -> f64 {
        self.values[step * self.cells + cell]
    }

    pub fn row(&self, step: usize) -> &[f64] {
        &self.values[step * self.cells..(step + 1) * self.cells]
    }

    /// `∫∫ H² dx dt` with cell volumes as weights.
    pub fn square_integral(&self, partition: TimePartition, grid: &QuadratureGrid) -> f64 {
        let dt = partition.dt();
        (0..self.steps)
            .map(|n| {
                self.row(n)
                    .iter()
                    .zip(grid.weights())
                    .map(|(h, w)| h * h * w)
                    .sum::<f64>()
                    * dt
            })
            .sum()
    }
}
