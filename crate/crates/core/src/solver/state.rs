use super::{CoefficientPair, Model};
use crate::basis::synthesize_at;
use crate::error::{Error, Result};
use crate::noise::NoisePath;

/// Accumulators and coefficients of the solution at one grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeState {
    step: usize,
    time: f64,
    /// `A_k = ∫ cos(ω_k s) ⟨e_k, b(u(s))⟩ ds`.
    drift_cos: Vec<f64>,
    /// `B_k = ∫ sin(ω_k s) ⟨e_k, b(u(s))⟩ ds`.
    drift_sin: Vec<f64>,
    /// `M_k = ∫∫ cos(ω_k s) e_k σ(u) L(ds,dy)`.
    noise_cos: Vec<f64>,
    /// `N_k = ∫∫ sin(ω_k s) e_k σ(u) L(ds,dy)`.
    noise_sin: Vec<f64>,
    coefficients: Vec<f64>,
}

pub(crate) struct Scratch {
    field: Vec<f64>,
    weighted: Vec<f64>,
    projected: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            field: vec![0.0; nodes],
            weighted: vec![0.0; nodes],
            projected: Vec::new(),
        }
    }
}

impl ModeState {
    /// Zero initial position and velocity.
    pub fn zero(modes: usize) -> Self {
        Self {
            step: 0,
            time: 0.0,
            drift_cos: vec![0.0; modes],
            drift_sin: vec![0.0; modes],
            noise_cos: vec![0.0; modes],
            noise_sin: vec![0.0; modes],
            coefficients: vec![0.0; modes],
        }
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `u_k` at the current grid time.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn drift_accumulators(&self) -> (&[f64], &[f64]) {
        (&self.drift_cos, &self.drift_sin)
    }

    pub fn noise_accumulators(&self) -> (&[f64], &[f64]) {
        (&self.noise_cos, &self.noise_sin)
    }

    /// `‖u(t)‖_{H_r}`.
    pub fn hr_norm(&self, model: &Model) -> f64 {
        model.hr_norm(&self.coefficients)
    }

    /// Advances one step of the path's partition with the left-point rule.
    pub fn advance(&mut self, model: &Model, pair: &CoefficientPair, path: &NoisePath) -> Result<()> {
        let mut scratch = Scratch::new(model.grid().len());
        self.advance_with(model, pair, path, &mut scratch)
    }

    pub(crate) fn advance_with(
        &mut self,
        model: &Model,
        pair: &CoefficientPair,
        path: &NoisePath,
        scratch: &mut Scratch,
    ) -> Result<()> {
        let partition = path.partition();
        let n = self.step;
        if n >= partition.steps {
            return Err(Error::PartitionMismatch(format!(
                "state is at step {n} but the path has only {} steps",
                partition.steps
            )));
        }
        let t = partition.time(n);
        let dt = partition.dt();
        let table = model.table();
        let grid = model.grid();
        let weights = grid.weights();
        let freq = model.frequencies();
        let modes = freq.len();

        let b_const = pair.drift.constant_value();
        let s_const = pair.diffusion.constant_value();
        let surrogate = path.surrogate_step(n);
        let drift_comp = path.compensator_step(n);
        let jumps = path.jumps_in_step(n);
        let noise_on_grid = surrogate.is_some() || drift_comp != 0.0;

        let needs_field = b_const.is_none() || (s_const.is_none() && (noise_on_grid || !jumps.is_empty()));
        if needs_field {
            table.synthesize(&self.coefficients, &mut scratch.field);
        }

        // Drift: g_k = ⟨e_k, b(u(t))⟩.
        scratch.projected.clear();
        match b_const {
            Some(c) if c == 0.0 => {}
            Some(c) => scratch.projected.extend(model.unit_projection().iter().map(|p| c * p)),
            None => {
                for ((wv, u), w) in scratch.weighted.iter_mut().zip(&scratch.field).zip(weights) {
                    *wv = w * pair.drift.eval(*u);
                }
                for k in 0..modes {
                    scratch
                        .projected
                        .push(table.row(k).iter().zip(&scratch.weighted).map(|(e, v)| e * v).sum());
                }
            }
        }
        if !scratch.projected.is_empty() {
            for k in 0..modes {
                let (s, c) = (freq[k] * t).sin_cos();
                let g = scratch.projected[k] * dt;
                self.drift_cos[k] += c * g;
                self.drift_sin[k] += s * g;
            }
        }

        // Gaussian surrogate and compensator on the grid cells.
        if noise_on_grid && s_const != Some(0.0) {
            for (i, v) in scratch.weighted.iter_mut().enumerate() {
                let mut incr = -drift_comp * dt * weights[i];
                if let Some(g) = surrogate {
                    incr += g[i];
                }
                let sig = match s_const {
                    Some(c) => c,
                    None => pair.diffusion.eval(scratch.field[i]),
                };
                *v = sig * incr;
            }
            for k in 0..modes {
                let s_k: f64 = table.row(k).iter().zip(&scratch.weighted).map(|(e, v)| e * v).sum();
                let (s, c) = (freq[k] * t).sin_cos();
                self.noise_cos[k] += c * s_k;
                self.noise_sin[k] += s * s_k;
            }
        }

        // Jumps, with σ evaluated on the field frozen at the step start.
        if s_const != Some(0.0) {
            let basis = model.basis();
            let dim = basis.dimension();
            for j in jumps {
                let x = &j.x[..dim];
                let sig = match s_const {
                    Some(c) => c,
                    None => pair.diffusion.eval(synthesize_at(basis, &self.coefficients, x)),
                };
                let weight = sig * j.z;
                for k in 0..modes {
                    let e = basis.mode_value(k, x);
                    let (s, c) = (freq[k] * j.t).sin_cos();
                    self.noise_cos[k] += c * e * weight;
                    self.noise_sin[k] += s * e * weight;
                }
            }
        }

        self.step = n + 1;
        self.time = partition.time(n + 1);
        self.refresh(freq);
        Ok(())
    }

    fn refresh(&mut self, freq: &[f64]) {
        for (k, w) in freq.iter().enumerate() {
            let (s, c) = (w * self.time).sin_cos();
            self.coefficients[k] =
                (s * (self.drift_cos[k] + self.noise_cos[k]) - c * (self.drift_sin[k] + self.noise_sin[k])) / w;
        }
    }
}
