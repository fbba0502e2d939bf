//! Mode-wise time stepping of the mild solution.
//!
//! With zero initial data the `k`-th Fourier coefficient of the mild
//! solution is a Duhamel integral against `sin(ω_k (t−s))/ω_k`,
//! `ω_k = λ_k^{γ/2}`. Expanding the sine of a difference turns both the drift
//! and the stochastic convolution into four running accumulators per mode,
//!
//! ```text
//! u_k(t) = [sin(ω_k t)(A_k + M_k) − cos(ω_k t)(B_k + N_k)] / ω_k,
//! ```
//!
//! where `A_k, M_k` integrate `cos(ω_k s)` and `B_k, N_k` integrate
//! `sin(ω_k s)` against `e_k b(u) ds` and `e_k σ(u) L(ds,dy)`. Each step is
//! `O(M)` per noise atom with no history convolution.
//!
//! Integrands are frozen at the left end of each step, which makes the scheme
//! causal: the state at a grid time depends only on noise strictly before it.

mod coefficients;
mod pasting;
mod state;
mod trajectory;

use std::sync::Arc;

pub use coefficients::{CoefficientFn, CoefficientPair, Preset};
pub use pasting::{paste_over_k, paste_over_n};
pub use state::ModeState;
pub use trajectory::{KStop, NStop, StoppingRecord, Trajectory};

use crate::basis::{EigenBasis, ModeTable, QuadratureGrid};
use crate::error::{Error, Result};
use crate::noise::NoisePath;

/// Spatial discretization and equation parameters shared by all runs.
#[derive(Clone, Debug)]
pub struct Model {
    basis: Arc<EigenBasis>,
    grid: Arc<QuadratureGrid>,
    table: Arc<ModeTable>,
    gamma: f64,
    r: f64,
    embedding: f64,
    frequencies: Vec<f64>,
    lambda_r: Vec<f64>,
    /// `⟨e_k, 1⟩` under the grid quadrature.
    unit_projection: Vec<f64>,
    record_coefficients: bool,
}

/// Probe points per axis used for the clamp-radius embedding constant.
pub const EMBEDDING_PROBE_1D: usize = 1025;
pub const EMBEDDING_PROBE_2D: usize = 129;

impl Model {
    /// Validates `γ > d` and `d/2 < r < γ − d/2`, then precomputes the mode
    /// table and the certified embedding constant `C_∞(M)`.
    pub fn new(basis: Arc<EigenBasis>, grid: Arc<QuadratureGrid>, gamma: f64, r: f64) -> Result<Self> {
        validate_window(basis.dimension(), gamma, r)?;
        grid.check_resolves(&basis)?;
        let probe = if basis.dimension() == 1 {
            EMBEDDING_PROBE_1D
        } else {
            EMBEDDING_PROBE_2D
        };
        let embedding = basis.embedding_constant(r, probe)?.certified;
        let table = grid.tabulate(&basis);
        let unit_projection = (0..basis.len())
            .map(|k| table.row(k).iter().zip(grid.weights()).map(|(e, w)| e * w).sum())
            .collect();
        Ok(Self {
            frequencies: (0..basis.len()).map(|k| basis.frequency(k, gamma)).collect(),
            lambda_r: basis.eigenvalues().iter().map(|l| l.powf(r)).collect(),
            table: Arc::new(table),
            unit_projection,
            basis,
            grid,
            gamma,
            r,
            embedding,
            record_coefficients: false,
        })
    }

    /// Unit box in dimension `d` with `modes` modes and the default grid.
    pub fn with_defaults(dim: usize, modes: usize, gamma: f64, r: f64) -> Result<Self> {
        let basis = Arc::new(EigenBasis::new(dim, modes)?);
        let grid = Arc::new(QuadratureGrid::for_basis(&basis));
        Self::new(basis, grid, gamma, r)
    }

    /// Overrides the clamp-radius constant.
    pub fn with_embedding_constant(mut self, value: f64) -> Self {
        self.embedding = value;
        self
    }

    /// Store per-grid-time coefficient snapshots in trajectories.
    pub fn recording_coefficients(mut self, on: bool) -> Self {
        self.record_coefficients = on;
        self
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn table(&self) -> &ModeTable {
        &self.table
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `C_∞(M)` used for the clamp radius `C_∞·N`.
    pub fn embedding_constant(&self) -> f64 {
        self.embedding
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn records_coefficients(&self) -> bool {
        self.record_coefficients
    }

    /// `‖u‖_{H_r}` from coefficients.
    pub fn hr_norm(&self, coefficients: &[f64]) -> f64 {
        self.lambda_r
            .iter()
            .zip(coefficients)
            .map(|(l, a)| l * a * a)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn unit_projection(&self) -> &[f64] {
        &self.unit_projection
    }

    pub(crate) fn check_path(&self, path: &NoisePath) -> Result<()> {
        if path.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::PartitionMismatch("noise path was sampled on a different spatial grid".into()));
        }
        Ok(())
    }

    /// `ũ_N` driven by `path`, run to the horizon, with `τ_N` recorded.
    pub fn solve_truncated(&self, pair: &CoefficientPair, level: u32, path: &NoisePath) -> Result<Trajectory> {
        self.check_path(path)?;
        let truncated = pair.truncate(level as f64, self.embedding);
        let partition = path.partition();
        let mut state = ModeState::zero(self.basis.len());
        let mut scratch = state::Scratch::new(self.grid.len());
        let mut traj = Trajectory::with_capacity(partition.steps + 1, self.record_coefficients);
        let label_k = finite(path.truncation());
        traj.push(&state, self.hr_norm(state.coefficients()), level, label_k, self.record_coefficients);
        for _ in 0..partition.steps {
            state.advance_with(self, &truncated, path, &mut scratch)?;
            traj.push(&state, self.hr_norm(state.coefficients()), level, label_k, self.record_coefficients);
        }
        if let Some(i) = traj.first_exceedance(level as f64) {
            traj.stops.n_stops.push(NStop::at(level, &traj.times, i));
        }
        Ok(traj)
    }
}

pub(crate) fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// `γ > d` and `d/2 < r < γ − d/2`, reported by the violated inequality.
pub fn validate_window(dim: usize, gamma: f64, r: f64) -> Result<()> {
    let d = dim as f64;
    if !(gamma > d) {
        return Err(Error::Window(format!("γ > d required (got γ = {gamma}, d = {dim})")));
    }
    if !(r > d / 2.0) {
        return Err(Error::Window(format!("r > d/2 required (got r = {r}, d = {dim})")));
    }
    if !(r < gamma - d / 2.0) {
        return Err(Error::Window(format!("r < γ − d/2 required (got r = {r}, γ = {gamma}, d = {dim})")));
    }
    Ok(())
}
