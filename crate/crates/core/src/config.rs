//! Run configuration and the scenario it describes.
//!
//! Configurations are JSON documents with every key optional; missing keys
//! take the defaults of [`RunConfig::default`] and unknown keys are rejected.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{EigenBasis, QuadratureGrid};
use crate::error::{Error, Result};
use crate::noise::{LevyMeasure, NoisePath, NoiseSpec, TimePartition};
use crate::solver::{paste_over_k, paste_over_n, validate_window, CoefficientPair, Model, Preset, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub gamma: f64,
    pub r: f64,
    pub modes: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Quadrature points per axis; `None` picks `max(4M+1, 257)`.
    pub grid: Option<usize>,
    pub drift: Preset,
    pub diffusion: Preset,
    pub noise: LevyMeasure,
    /// Small-jump cutoff `ε`.
    pub cutoff: f64,
    pub n_max: u32,
    /// Increasing `K` levels; required for infinite-variance noise.
    pub k_schedule: Vec<f64>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Write the `u_k` columns into trajectory CSVs.
    pub record_coefficients: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            gamma: 2.0,
            r: 1.0,
            modes: 16,
            horizon: 1.0,
            dt: 0.01,
            grid: None,
            drift: Preset::Linear { slope: 1.0, intercept: 0.0 },
            diffusion: Preset::Linear { slope: 1.0, intercept: 1.0 },
            noise: LevyMeasure::symmetric_pair(1.0, 1.0),
            cutoff: 0.01,
            n_max: 16,
            k_schedule: Vec::new(),
            seed: 0,
            out_dir: None,
            record_coefficients: false,
        }
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(document: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(document).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn require(ok: bool, what: &str, detail: String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} required ({detail})")))
    }
}

impl RunConfig {
    /// Checks every constraint, naming the first violated inequality.
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dimension) {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        validate_window(self.dimension, self.gamma, self.r).map_err(|e| match e {
            Error::Window(msg) => Error::Config(msg),
            other => other,
        })?;
        require(self.modes >= 1, "M ≥ 1", format!("got M = {}", self.modes))?;
        require(self.horizon > 0.0 && self.horizon.is_finite(), "T > 0", format!("got T = {}", self.horizon))?;
        require(self.dt > 0.0 && self.dt.is_finite(), "Δt > 0", format!("got Δt = {}", self.dt))?;
        require(self.dt <= self.horizon, "Δt ≤ T", format!("got Δt = {}, T = {}", self.dt, self.horizon))?;
        let ratio = self.horizon / self.dt;
        require(
            (ratio - ratio.round()).abs() <= 1e-9 * ratio,
            "T/Δt integer",
            format!("got T/Δt = {ratio}"),
        )?;
        require(self.n_max >= 1, "N_max ≥ 1", format!("got N_max = {}", self.n_max))?;
        self.noise_spec()?;
        if let Some(g) = self.grid {
            require(g >= 2, "grid ≥ 2", format!("got {g} points per axis"))?;
        }
        require(
            self.k_schedule.windows(2).all(|w| w[0] < w[1]),
            "K schedule strictly increasing",
            format!("got {:?}", self.k_schedule),
        )?;
        if let Some(&k) = self.k_schedule.first() {
            require(k >= self.cutoff, "K ≥ ε", format!("got K = {k}, ε = {}", self.cutoff))?;
            if !self.noise.is_symmetric() {
                return Err(Error::AsymmetricMeasure);
            }
        } else if self.noise.second_moment().is_err() {
            return Err(Error::Config(
                "K schedule required for infinite-variance noise (got an empty schedule)".into(),
            ));
        }
        Ok(())
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.noise.clone(), self.cutoff)
    }

    pub fn partition(&self) -> Result<TimePartition> {
        TimePartition::with_step(self.horizon, self.dt)
    }

    pub fn coefficients(&self) -> CoefficientPair {
        CoefficientPair::new(self.drift.clone(), self.diffusion.clone())
    }

    pub fn model(&self) -> Result<Model> {
        let basis = Arc::new(EigenBasis::new(self.dimension, self.modes)?);
        let grid = match self.grid {
            Some(n) => QuadratureGrid::new(self.dimension, n)?,
            None => QuadratureGrid::for_basis(&basis),
        };
        Ok(Model::new(basis, Arc::new(grid), self.gamma, self.r)?.recording_coefficients(self.record_coefficients))
    }

    /// Validates and assembles everything a run needs.
    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        Ok(Scenario {
            model: self.model()?,
            pair: self.coefficients(),
            spec: self.noise_spec()?,
            partition: self.partition()?,
            n_max: self.n_max,
            k_schedule: self.k_schedule.clone(),
        })
    }
}

/// A validated model, coefficient pair, noise and schedules.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: Model,
    pub pair: CoefficientPair,
    pub spec: NoiseSpec,
    pub partition: TimePartition,
    pub n_max: u32,
    pub k_schedule: Vec<f64>,
}

impl Scenario {
    pub fn sample_path(&self, seed: u64) -> Result<NoisePath> {
        NoisePath::sample(&self.spec, self.partition, self.model.grid().clone(), seed)
    }

    /// The global solution along `path`: pasted over `K` when a schedule is
    /// configured, otherwise over `N` only.
    pub fn solve(&self, path: &NoisePath) -> Result<Trajectory> {
        self.solve_with(&self.model, path)
    }

    /// As [`Self::solve`] with a substitute model.
    pub fn solve_with(&self, model: &Model, path: &NoisePath) -> Result<Trajectory> {
        if self.k_schedule.is_empty() {
            paste_over_n(model, &self.pair, path, self.n_max)
        } else {
            paste_over_k(model, &self.pair, path, &self.k_schedule, self.n_max)
        }
    }

    /// `m_2`, or `m_2^K` at the last scheduled level for heavy tails.
    pub fn second_moment(&self) -> Result<f64> {
        match self.spec.measure.second_moment() {
            Ok(m2) => Ok(m2),
            Err(e) => match self.k_schedule.last() {
                Some(&k) => Ok(self.spec.measure.truncated_second_moment(k)),
                None => Err(e),
            },
        }
    }
}
