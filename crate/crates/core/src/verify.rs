//! Monte Carlo ensembles and the quantitative bounds as executable checks.
//!
//! Every check compares a replica-level estimate with a target using a
//! uniform margin of [`SE_MARGIN`] standard errors. Replica `i` of an
//! ensemble with base seed `s` uses seed `s ^ i`, and results are collected
//! in replica order, so a verdict is a deterministic function of the
//! scenario, the base seed and the replica count, whatever the worker count.
//!
//! Suprema over `(t, x)` are maxima over the stored time grid and the
//! quadrature nodes. They under-estimate the true suprema, which can only
//! make an upper-bound check easier to fail, never easier to pass.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{EigenBasis, QuadratureGrid};
use crate::config::Scenario;
use crate::error::{Error, Result};
use crate::noise::{LevyMeasure, NoisePath, NoiseSpec, StepField, TimePartition};
use crate::solver::{paste_over_n, CoefficientPair, Model, ModeState, Preset};

/// Acceptance margin in standard errors.
pub const SE_MARGIN: f64 = 3.0;

/// Seed of replica `index`.
pub fn replica_seed(base: u64, index: u64) -> u64 {
    base ^ index
}

/// Runs `f(index, seed)` for every replica on `workers` threads (0 selects
/// the global pool) and returns the results in replica order.
pub fn run_replicas<T, F>(replicas: usize, base_seed: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync + Send,
{
    let job = || {
        (0..replicas as u64)
            .into_par_iter()
            .map(|i| f(i, replica_seed(base_seed, i)))
            .collect::<Result<Vec<T>>>()
    };
    if workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?
            .install(job)
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            se: 0.0,
            samples: 0,
        }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::exact(f64::NAN);
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, se, samples: n }
    }

    /// Frequency of `hits` among `n` trials, with the binomial standard error.
    pub fn proportion(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            mean: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
        }
    }

    /// Sample covariance of paired samples, with the standard error of the
    /// mean of centred products.
    pub fn covariance(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len().min(ys.len());
        let mx = xs[..n].iter().sum::<f64>() / n as f64;
        let my = ys[..n].iter().sum::<f64>() / n as f64;
        let products: Vec<f64> = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).collect();
        let mut e = Self::from_samples(&products);
        e.mean *= n as f64 / (n as f64 - 1.0);
        e
    }

    pub fn variance(xs: &[f64]) -> Self {
        Self::covariance(xs, xs)
    }
}

/// How an estimate is compared with its target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|mean − target| ≤ margin·SE`.
    Within,
    /// `mean + margin·SE ≤ target`.
    Below,
    /// `mean ≤ target + margin·SE`.
    NotAbove,
    /// `mean == target`.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub estimate: Estimate,
    pub target: f64,
    pub relation: Relation,
    pub margin: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, estimate: Estimate, target: f64, relation: Relation) -> Self {
        let (m, se) = (estimate.mean, estimate.se);
        let passed = match relation {
            Relation::Within => (m - target).abs() <= SE_MARGIN * se,
            Relation::Below => m + SE_MARGIN * se <= target,
            Relation::NotAbove => m <= target + SE_MARGIN * se,
            Relation::Exact => m == target,
        };
        Self {
            label: label.into(),
            estimate,
            target,
            relation,
            margin: SE_MARGIN,
            passed,
        }
    }

    /// A count that must be zero.
    pub fn zero_count(label: impl Into<String>, count: usize) -> Self {
        Self::new(label, Estimate::exact(count as f64), 0.0, Relation::Exact)
    }
}

/// Inputs of the moment bound `T·Ĉ_T·exp(T·Ĉ_T·C_∞²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub horizon: f64,
    /// `|D|`.
    pub volume: f64,
    pub drift_growth: f64,
    pub diffusion_growth: f64,
    pub m2: f64,
    /// `Σ_{k≤M} λ_k^{r−γ}`.
    pub lambda_sum: f64,
    /// Analytic bound on `Σ_{k>M} λ_k^{r−γ}`.
    pub lambda_tail: f64,
    pub embedding: f64,
    /// `Ĉ_T` including the tail.
    pub hat_c: f64,
    pub bound: f64,
}

/// `Ĉ_T` split into its partial sum and analytic upper-bound variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatC {
    pub partial: f64,
    pub with_tail: f64,
    pub lambda_sum: f64,
    pub lambda_tail: f64,
}

/// `Ĉ_T = 4(T|D|D_b² + 16 m_2 D_σ²)·Σ λ_k^{r−γ}`.
pub fn hat_c(
    horizon: f64,
    volume: f64,
    drift_growth: f64,
    diffusion_growth: f64,
    m2: f64,
    basis: &EigenBasis,
    r: f64,
    gamma: f64,
) -> Result<HatC> {
    let d = basis.dimension() as f64;
    if !(r < gamma - d / 2.0) {
        return Err(Error::Window(format!(
            "r < γ − d/2 required for Σλ^(r−γ) to converge (got r = {r}, γ = {gamma}, d = {d})"
        )));
    }
    let prefactor = 4.0 * (horizon * volume * drift_growth.powi(2) + 16.0 * m2 * diffusion_growth.powi(2));
    let lambda_sum = basis.power_sum(r - gamma);
    let lambda_tail = basis.power_tail_bound(r - gamma).unwrap_or(f64::INFINITY);
    Ok(HatC {
        partial: prefactor * lambda_sum,
        with_tail: prefactor * (lambda_sum + lambda_tail),
        lambda_sum,
        lambda_tail,
    })
}

/// `T·Ĉ·exp(T·Ĉ·C_∞²)`.
pub fn moment_bound(horizon: f64, hat_c: f64, embedding: f64) -> f64 {
    horizon * hat_c * (horizon * hat_c * embedding * embedding).exp()
}

impl BoundInputs {
    pub fn new(model: &Model, pair: &CoefficientPair, m2: f64, horizon: f64) -> Result<Self> {
        let (db, ds) = pair.growth_constants();
        let c = hat_c(horizon, 1.0, db, ds, m2, model.basis(), model.r(), model.gamma())?;
        let embedding = model.embedding_constant();
        Ok(Self {
            horizon,
            volume: 1.0,
            drift_growth: db,
            diffusion_growth: ds,
            m2,
            lambda_sum: c.lambda_sum,
            lambda_tail: c.lambda_tail,
            embedding,
            hat_c: c.with_tail,
            bound: moment_bound(horizon, c.with_tail, embedding),
        })
    }

    pub fn for_scenario(sc: &Scenario) -> Result<Self> {
        Self::new(&sc.model, &sc.pair, sc.second_moment()?, sc.partition.horizon)
    }

    /// The same inputs with understated growth constants; the resulting
    /// bound is too small and must be violated by a noisy ensemble.
    pub fn corrupted(&self) -> Self {
        let mut out = *self;
        out.drift_growth *= 1e-3;
        out.diffusion_growth *= 1e-3;
        let prefactor = 4.0 * (out.horizon * out.volume * out.drift_growth.powi(2) + 16.0 * out.m2 * out.diffusion_growth.powi(2));
        out.hat_c = prefactor * (out.lambda_sum + out.lambda_tail);
        out.bound = moment_bound(out.horizon, out.hat_c, out.embedding);
        out
    }

    /// Chebyshev bound on `P(τ_N ≤ T)`.
    pub fn tail_bound(&self, level: u32) -> f64 {
        self.bound / (level as f64).powi(2)
    }
}

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub suite: String,
    pub passed: bool,
    /// The suite ran with a deliberately broken ingredient and is expected
    /// to fail.
    pub negative_control: bool,
    pub replicas: usize,
    pub base_seed: u64,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inputs: Option<BoundInputs>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Verdict {
    fn new(suite: &str, run: &RunInfo, checks: Vec<Check>) -> Self {
        Self {
            suite: suite.into(),
            passed: checks.iter().all(|c| c.passed),
            negative_control: run.negative_control,
            replicas: run.replicas,
            base_seed: run.base_seed,
            workers: run.workers,
            inputs: None,
            checks,
            notes: Vec::new(),
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Replica count, seeding and control flag shared by every suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInfo {
    pub replicas: usize,
    pub base_seed: u64,
    pub workers: usize,
    pub negative_control: bool,
}

impl RunInfo {
    pub fn new(replicas: usize, base_seed: u64, workers: usize) -> Self {
        Self {
            replicas,
            base_seed,
            workers,
            negative_control: false,
        }
    }

    pub fn broken(mut self, on: bool) -> Self {
        self.negative_control = on;
        self
    }
}

/// Per-replica statistics of the `N`-truncated solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaStats {
    pub replica: u64,
    pub seed: u64,
    pub jumps: usize,
    /// `max_t ‖ũ_N(t)‖²_{H_r}` per level.
    pub sup_norm_sq: Vec<f64>,
    /// Grid `τ_N` per level, `None` when `τ_N > T`.
    pub tau: Vec<Option<f64>>,
    /// `‖u(T)‖_{H_r}` of the pasted solution.
    pub final_norm: f64,
    pub n_cap_reached: bool,
}

/// An ensemble of `N`-truncated runs over a level sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEnsemble {
    pub levels: Vec<u32>,
    pub horizon: f64,
    pub run: RunInfo,
    pub replicas: Vec<ReplicaStats>,
    /// `K_T = sup_{t,x} E u(t,x)²` for the pasted solution.
    pub k_t: f64,
}

const BLOCK: usize = 32;

/// Runs `ũ_N` for every level in `levels` and the pasted solution on each
/// replica path. Sums for `K_T` are reduced in fixed blocks of replicas so
/// the result does not depend on the worker count.
pub fn level_ensemble(sc: &Scenario, levels: &[u32], run: RunInfo) -> Result<LevelEnsemble> {
    if levels.is_empty() {
        return Err(Error::Config("level sweep must not be empty".into()));
    }
    sc.spec.measure.second_moment()?;
    let recording = sc.model.clone().recording_coefficients(true);
    let top = *levels.iter().max().expect("non-empty");
    let steps = sc.partition.steps;
    let nodes = sc.model.grid().len();
    let blocks = run.replicas.div_ceil(BLOCK);

    let per_block = run_replicas(blocks, 0, run.workers, |b, _| {
        let lo = b as usize * BLOCK;
        let hi = (lo + BLOCK).min(run.replicas);
        let mut sums = vec![0.0; (steps + 1) * nodes];
        let mut field = vec![0.0; nodes];
        let mut stats = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let seed = replica_seed(run.base_seed, i as u64);
            let path = sc.sample_path(seed)?;
            let mut sup_norm_sq = Vec::with_capacity(levels.len());
            let mut tau = Vec::with_capacity(levels.len());
            for &n in levels {
                let traj = sc.model.solve_truncated(&sc.pair, n, &path)?;
                sup_norm_sq.push(traj.sup_norm_sq());
                tau.push(traj.detect_stop(n as f64));
            }
            let pasted = paste_over_n(&recording, &sc.pair, &path, top)?;
            let coeffs = pasted.coefficients.as_ref().expect("recording model");
            for (j, c) in coeffs.iter().enumerate() {
                recording.table().synthesize(c, &mut field);
                for (s, u) in sums[j * nodes..(j + 1) * nodes].iter_mut().zip(&field) {
                    *s += u * u;
                }
            }
            stats.push(ReplicaStats {
                replica: i as u64,
                seed,
                jumps: path.jumps().len(),
                sup_norm_sq,
                tau,
                final_norm: *pasted.norms.last().expect("non-empty trajectory"),
                n_cap_reached: pasted.stops.n_cap_reached,
            });
        }
        Ok((stats, sums))
    })?;

    let mut replicas = Vec::with_capacity(run.replicas);
    let mut sums = vec![0.0; (steps + 1) * nodes];
    for (stats, block) in per_block {
        replicas.extend(stats);
        for (s, b) in sums.iter_mut().zip(block) {
            *s += b;
        }
    }
    let k_t = sums.iter().fold(0.0_f64, |m, s| m.max(*s)) / run.replicas.max(1) as f64;
    Ok(LevelEnsemble {
        levels: levels.to_vec(),
        horizon: sc.partition.horizon,
        run,
        replicas,
        k_t,
    })
}

/// Ensemble mean of `sup_t ‖ũ_N‖²_{H_r}` plus the margin stays below the
/// moment bound at every level.
pub fn check_moment_bound(ensemble: &LevelEnsemble, inputs: &BoundInputs) -> Verdict {
    let inputs = if ensemble.run.negative_control {
        inputs.corrupted()
    } else {
        *inputs
    };
    let checks = ensemble
        .levels
        .iter()
        .enumerate()
        .map(|(l, n)| {
            let xs: Vec<f64> = ensemble.replicas.iter().map(|s| s.sup_norm_sq[l]).collect();
            Check::new(format!("mean sup ‖ũ_{n}‖² (N = {n})"), Estimate::from_samples(&xs), inputs.bound, Relation::Below)
        })
        .collect();
    let mut v = Verdict::new("moment", &ensemble.run, checks);
    v.inputs = Some(inputs);
    v.notes.push(format!("K_T estimate (grid maximum of pointwise second moments): {:.6e}", ensemble.k_t));
    v
}

/// `P(τ_N ≤ T) ≤ bound/N²` at every level, with monotonicity of `τ_N` in
/// `N` on every replica and of the empirical probabilities along the sweep.
pub fn check_tail_bound(ensemble: &LevelEnsemble, inputs: &BoundInputs) -> Verdict {
    let inputs = if ensemble.run.negative_control {
        inputs.corrupted()
    } else {
        *inputs
    };
    let n = ensemble.replicas.len();
    let mut checks = Vec::new();
    let mut probabilities = Vec::new();
    for (l, &level) in ensemble.levels.iter().enumerate() {
        let hits = ensemble.replicas.iter().filter(|s| s.tau[l].is_some()).count();
        let p = Estimate::proportion(hits, n);
        probabilities.push((level, p.mean));
        checks.push(Check::new(
            format!("P(τ_{level} ≤ T) (N = {level})"),
            p,
            inputs.tail_bound(level),
            Relation::NotAbove,
        ));
    }
    let mut order: Vec<usize> = (0..ensemble.levels.len()).collect();
    order.sort_by_key(|&l| ensemble.levels[l]);
    let key = |t: Option<f64>| t.unwrap_or(f64::INFINITY);
    let violations = ensemble
        .replicas
        .iter()
        .filter(|s| order.windows(2).any(|w| key(s.tau[w[0]]) > key(s.tau[w[1]])))
        .count();
    checks.push(Check::zero_count("replicas with τ_N decreasing in N", violations));
    probabilities.sort_by_key(|&(level, _)| level);
    let increases = probabilities.windows(2).filter(|w| w[1].1 > w[0].1).count();
    checks.push(Check::zero_count("increases of P(τ_N ≤ T) along the sweep", increases));
    let mut v = Verdict::new("tail", &ensemble.run, checks);
    v.inputs = Some(inputs);
    v
}

/// Moment and tail verdicts of one level ensemble with the inputs they used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub replicas: usize,
    pub base_seed: u64,
    pub workers: usize,
    pub seeds: Vec<u64>,
    pub levels: Vec<u32>,
    pub inputs: BoundInputs,
    /// `K_T`, a grid maximum of pointwise second-moment estimates.
    pub k_t: f64,
    pub moment: Verdict,
    pub tail: Verdict,
    pub passed: bool,
}

impl EnsembleReport {
    pub fn new(ensemble: &LevelEnsemble, inputs: &BoundInputs) -> Self {
        let moment = check_moment_bound(ensemble, inputs);
        let tail = check_tail_bound(ensemble, inputs);
        Self {
            replicas: ensemble.replicas.len(),
            base_seed: ensemble.run.base_seed,
            workers: ensemble.run.workers,
            seeds: ensemble.replicas.iter().map(|s| s.seed).collect(),
            levels: ensemble.levels.clone(),
            inputs: *inputs,
            k_t: ensemble.k_t,
            passed: moment.passed && tail.passed,
            moment,
            tail,
        }
    }
}

/// `1, 2, 4, …` up to and including `n_max` when it is a power of two.
pub fn dyadic_levels(n_max: u32) -> Vec<u32> {
    std::iter::successors(Some(1u32), |n| n.checked_mul(2)).take_while(|&n| n <= n_max).collect()
}

/// A named deterministic integrand for the isometry suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// `H ≡ 1`.
    Unit,
    /// `H(t, x) = t`.
    Time,
    /// `H(t, x) = (1 + t)·Π sin(π x_i)`.
    Mixed,
}

impl Integrand {
    pub const MENU: [Integrand; 3] = [Integrand::Unit, Integrand::Time, Integrand::Mixed];

    pub fn eval(self, t: f64, x: &[f64]) -> f64 {
        match self {
            Integrand::Unit => 1.0,
            Integrand::Time => t,
            Integrand::Mixed => (1.0 + t) * x.iter().map(|c| (std::f64::consts::PI * c).sin()).product::<f64>(),
        }
    }

    pub fn field(self, partition: TimePartition, grid: &QuadratureGrid) -> StepField {
        StepField::from_fn(partition, grid, |t, x| self.eval(t, x))
    }
}

/// `E[(∫H dL)²] = m_2 ∫∫H²` for each integrand of [`Integrand::MENU`].
/// The negative control compares against `2m_2`.
pub fn isometry_suite(spec: &NoiseSpec, partition: TimePartition, grid: Arc<QuadratureGrid>, run: RunInfo) -> Result<Verdict> {
    let m2 = spec.measure.second_moment()?;
    let claimed = if run.negative_control { 2.0 * m2 } else { m2 };
    let fields: Vec<StepField> = Integrand::MENU.iter().map(|h| h.field(partition, &grid)).collect();
    let samples = run_replicas(run.replicas, run.base_seed, run.workers, |_, seed| {
        let path = NoisePath::sample(spec, partition, grid.clone(), seed)?;
        fields.iter().map(|f| path.integrate(f).map(|v| v * v)).collect::<Result<Vec<f64>>>()
    })?;
    let checks = Integrand::MENU
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let xs: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let target = claimed * fields[j].square_integral(partition, &grid);
            Check::new(format!("E[(∫H dL)²], H = {h:?}"), Estimate::from_samples(&xs), target, Relation::Within)
        })
        .collect();
    let mut v = Verdict::new("isometry", &run, checks);
    v.notes.push(format!("m_2 = {m2}, claimed m_2 = {claimed}"));
    Ok(v)
}

/// `Var u_k(t) = m_2 λ_k^{−γ}[t/2 − sin(2ω_k t)/(4ω_k)]` for `b ≡ 0`, `σ ≡ 1`.
pub fn additive_variance(m2: f64, lambda: f64, gamma: f64, t: f64) -> f64 {
    let w = lambda.powf(gamma / 2.0);
    m2 * lambda.powf(-gamma) * (t / 2.0 - (2.0 * w * t).sin() / (4.0 * w))
}

/// Options of [`additive_linear_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdditiveOptions {
    pub times: Vec<f64>,
    /// Modes `k ≤ modes` are checked.
    pub modes: usize,
    pub steps: usize,
    pub covariances: bool,
}

impl Default for AdditiveOptions {
    fn default() -> Self {
        Self {
            times: vec![0.25, 0.5, 1.0],
            modes: 8,
            steps: 4,
            covariances: true,
        }
    }
}

/// Per-mode variances of the additive linear solution against the closed
/// form, and vanishing cross-mode covariances. The negative control claims
/// twice the second moment.
pub fn additive_linear_suite(model: &Model, spec: &NoiseSpec, opts: &AdditiveOptions, run: RunInfo) -> Result<Verdict> {
    let m2 = spec.measure.second_moment()?;
    let claimed = if run.negative_control { 2.0 * m2 } else { m2 };
    let modes = opts.modes.min(model.basis().len());
    let horizon = opts.times.iter().copied().fold(0.0, f64::max);
    let partition = TimePartition::new(horizon, opts.steps)?;
    let mut indices = Vec::with_capacity(opts.times.len());
    for &t in &opts.times {
        let x = t / partition.dt();
        if (x - x.round()).abs() > 1e-9 || t < 0.0 {
            return Err(Error::PartitionMismatch(format!("t = {t} is not a grid time of {partition:?}")));
        }
        indices.push(x.round() as usize);
    }
    let pair = CoefficientPair::new(Preset::Zero, Preset::Constant { value: 1.0 });
    let samples = run_replicas(run.replicas, run.base_seed, run.workers, |_, seed| {
        let path = NoisePath::sample(spec, partition, model.grid().clone(), seed)?;
        let mut state = ModeState::zero(model.basis().len());
        let mut snaps = vec![Vec::new(); partition.steps + 1];
        snaps[0] = state.coefficients()[..modes].to_vec();
        for i in 1..=partition.steps {
            state.advance(model, &pair, &path)?;
            snaps[i] = state.coefficients()[..modes].to_vec();
        }
        Ok(indices.iter().map(|&i| snaps[i].clone()).collect::<Vec<_>>())
    })?;

    let mut checks = Vec::new();
    let gamma = model.gamma();
    for (ti, &t) in opts.times.iter().enumerate() {
        let column = |k: usize| samples.iter().map(|s| s[ti][k]).collect::<Vec<f64>>();
        for k in 0..modes {
            let target = additive_variance(claimed, model.basis().eigenvalue(k), gamma, t);
            checks.push(Check::new(format!("Var u_{}({t})", k + 1), Estimate::variance(&column(k)), target, Relation::Within));
        }
        if opts.covariances {
            for j in 0..modes {
                for k in j + 1..modes {
                    checks.push(Check::new(
                        format!("Cov(u_{}, u_{})({t})", j + 1, k + 1),
                        Estimate::covariance(&column(j), &column(k)),
                        0.0,
                        Relation::Within,
                    ));
                }
            }
        }
    }
    let mut v = Verdict::new("additive", &run, checks);
    v.notes.push(format!("m_2 = {m2}, claimed m_2 = {claimed}, γ = {gamma}"));
    Ok(v)
}

/// Options of [`consistency_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyOptions {
    /// `N` of each coupled `(N, N+1)` pair.
    pub n_levels: Vec<u32>,
    /// `K` of each coupled `(K, K+1)` pair; skipped for asymmetric noise.
    pub k_levels: Vec<f64>,
    pub localization: bool,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        Self {
            n_levels: vec![1, 2, 3, 4],
            k_levels: vec![1.0, 2.0],
            localization: true,
        }
    }
}

#[derive(Default)]
struct Coupling {
    n_failures: usize,
    n_finite: usize,
    n_pairs: usize,
    k_failures: usize,
    k_finite: usize,
    k_pairs: usize,
    loc_failures: usize,
}

/// `ũ_N = ũ_{N+1}` before grid `τ_N`; `u^K = u^{K+1}` before `τ^K`; zeroing
/// the noise after a random grid time leaves the past untouched. All
/// comparisons are bitwise. The negative control shrinks the clamp radius a
/// thousandfold so the truncations bite before `τ_N`.
pub fn consistency_suite(sc: &Scenario, opts: &ConsistencyOptions, run: RunInfo) -> Result<Verdict> {
    let mut model = sc.model.clone().recording_coefficients(true);
    if run.negative_control {
        let shrunk = model.embedding_constant() * 1e-3;
        model = model.with_embedding_constant(shrunk);
    }
    let finite_variance = sc.spec.measure.second_moment().is_ok();
    let k_levels: Vec<f64> = if sc.spec.measure.is_symmetric() {
        opts.k_levels.iter().copied().filter(|&k| k >= sc.spec.cutoff).collect()
    } else {
        Vec::new()
    };

    let per_seed = run_replicas(run.replicas, run.base_seed, run.workers, |_, seed| {
        let path = sc.sample_path(seed)?;
        let mut c = Coupling::default();
        if finite_variance {
            for &n in &opts.n_levels {
                let a = model.solve_truncated(&sc.pair, n, &path)?;
                let b = model.solve_truncated(&sc.pair, n + 1, &path)?;
                let stop = a.first_exceedance(n as f64);
                c.n_pairs += 1;
                c.n_finite += stop.is_some() as usize;
                if a.agreeing_prefix(&b) < stop.unwrap_or(a.len()) {
                    c.n_failures += 1;
                }
            }
        }
        for &k in &k_levels {
            let a = paste_over_n(&model, &sc.pair, &path.truncate(k)?, sc.n_max)?;
            let b = paste_over_n(&model, &sc.pair, &path.truncate(k + 1.0)?, sc.n_max)?;
            let tau = path.first_large_jump(k);
            let before = a.times.iter().take_while(|&&t| t < tau).count();
            c.k_pairs += 1;
            c.k_finite += tau.is_finite() as usize;
            if a.agreeing_prefix(&b) < before {
                c.k_failures += 1;
            }
        }
        if opts.localization {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2);
            let i = rng.random_range(0..=sc.partition.steps);
            let t = sc.partition.time(i);
            let full = sc.solve_with(&model, &path)?;
            let cut = sc.solve_with(&model, &path.silence_after(t))?;
            if full.agreeing_prefix(&cut) < i + 1 {
                c.loc_failures += 1;
            }
        }
        Ok(c)
    })?;

    let total = per_seed.iter().fold(Coupling::default(), |mut acc, c| {
        acc.n_failures += c.n_failures;
        acc.n_finite += c.n_finite;
        acc.n_pairs += c.n_pairs;
        acc.k_failures += c.k_failures;
        acc.k_finite += c.k_finite;
        acc.k_pairs += c.k_pairs;
        acc.loc_failures += c.loc_failures;
        acc
    });
    let mut checks = Vec::new();
    if total.n_pairs > 0 {
        checks.push(Check::zero_count("(N, N+1) pairs disagreeing before τ_N", total.n_failures));
    }
    if total.k_pairs > 0 {
        checks.push(Check::zero_count("(K, K+1) pairs disagreeing before τ^K", total.k_failures));
    }
    if opts.localization {
        checks.push(Check::zero_count("seeds whose past changed when the future was zeroed", total.loc_failures));
    }
    let mut v = Verdict::new("consistency", &run, checks);
    v.notes.push(format!("{} of {} (N, N+1) pairs had τ_N ≤ T", total.n_finite, total.n_pairs));
    v.notes.push(format!("{} of {} (K, K+1) pairs had τ^K ≤ T", total.k_finite, total.k_pairs));
    Ok(v)
}

/// `P(τ^K > T) = exp(−T|D|ν(|z| > K))` over sampled paths. Only the jump
/// record matters, so paths are drawn on a single step and a two-node grid.
/// The negative control halves the claimed tail mass.
pub fn tau_k_law(measure: &LevyMeasure, cutoff: f64, level: f64, horizon: f64, run: RunInfo) -> Result<Verdict> {
    let spec = NoiseSpec::new(measure.clone(), cutoff)?;
    if level < cutoff {
        return Err(Error::TruncationBelowCutoff { level, cutoff });
    }
    let partition = TimePartition::new(horizon, 1)?;
    let grid = Arc::new(QuadratureGrid::new(1, 2)?);
    let survived = run_replicas(run.replicas, run.base_seed, run.workers, |_, seed| {
        let path = NoisePath::sample(&spec, partition, grid.clone(), seed)?;
        Ok(path.first_large_jump(level).is_infinite())
    })?;
    let hits = survived.iter().filter(|&&s| s).count();
    let mass = measure.tail_mass(level) * if run.negative_control { 0.5 } else { 1.0 };
    let target = (-horizon * mass).exp();
    let checks = vec![Check::new(
        format!("P(τ^K > T), K = {level}"),
        Estimate::proportion(hits, run.replicas),
        target,
        Relation::Within,
    )];
    Ok(Verdict::new("tau_k", &run, checks))
}
