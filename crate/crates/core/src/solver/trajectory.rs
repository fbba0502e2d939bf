use serde::{Deserialize, Serialize};

use super::ModeState;

/// Grid-resolution record of `τ_N = inf{t : ‖ũ_N(t)‖_{H_r} > N}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NStop {
    pub level: u32,
    /// Grid index of the first exceedance.
    pub index: usize,
    /// First grid time with norm above the level.
    pub time: f64,
    /// The true stopping time lies in `(bracket[0], bracket[1]]`.
    pub bracket: [f64; 2],
}

impl NStop {
    pub(crate) fn at(level: u32, times: &[f64], index: usize) -> Self {
        Self {
            level,
            index,
            time: times[index],
            bracket: [times[index.saturating_sub(1)], times[index]],
        }
    }
}

/// `τ^K`, the exact time of the first jump exceeding `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KStop {
    pub level: f64,
    /// `None` when no jump exceeds the level.
    pub time: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StoppingRecord {
    pub n_stops: Vec<NStop>,
    pub k_stops: Vec<KStop>,
    /// `τ_{N_max} ≤ T`: the N schedule ran out before the horizon.
    pub n_cap_reached: bool,
    /// `τ^{K_last} ≤ T`: the K schedule ran out before the horizon.
    pub k_cap_reached: bool,
}

/// Grid-time series of one solution with its pasting provenance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Truncation level `N` whose solution is reported at each grid time.
    pub active_n: Vec<u32>,
    /// Noise truncation `K` at each grid time; `None` for the untruncated noise.
    pub active_k: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coefficients: Option<Vec<Vec<f64>>>,
    pub stops: StoppingRecord,
}

impl Trajectory {
    pub(crate) fn with_capacity(n: usize, record: bool) -> Self {
        Self {
            times: Vec::with_capacity(n),
            norms: Vec::with_capacity(n),
            active_n: Vec::with_capacity(n),
            active_k: Vec::with_capacity(n),
            coefficients: record.then(|| Vec::with_capacity(n)),
            stops: StoppingRecord::default(),
        }
    }

    pub(crate) fn push(&mut self, state: &ModeState, norm: f64, level: u32, k: Option<f64>, record: bool) {
        self.times.push(state.time());
        self.norms.push(norm);
        self.active_n.push(level);
        self.active_k.push(k);
        if record {
            if let Some(c) = self.coefficients.as_mut() {
                c.push(state.coefficients().to_vec());
            }
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the first grid time whose norm exceeds `level`.
    pub fn first_exceedance(&self, level: f64) -> Option<usize> {
        self.norms.iter().position(|&n| n > level)
    }

    /// `τ_N` at grid resolution, `None` standing for `+∞`.
    pub fn detect_stop(&self, level: f64) -> Option<f64> {
        self.first_exceedance(level).map(|i| self.times[i])
    }

    /// Recorded `τ_N` for level `N`, if any.
    pub fn n_stop(&self, level: u32) -> Option<&NStop> {
        self.stops.n_stops.iter().find(|s| s.level == level)
    }

    /// `max_i ‖u(t_i)‖²_{H_r}`.
    pub fn sup_norm_sq(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max(n * n))
    }

    /// Number of leading grid times on which both trajectories carry
    /// bit-identical norms and, when recorded, coefficients.
    pub fn agreeing_prefix(&self, other: &Trajectory) -> usize {
        let n = self.len().min(other.len());
        let coeffs = match (&self.coefficients, &other.coefficients) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        (0..n)
            .position(|i| {
                self.norms[i].to_bits() != other.norms[i].to_bits()
                    || coeffs.is_some_and(|(a, b)| {
                        a[i].len() != b[i].len() || a[i].iter().zip(&b[i]).any(|(x, y)| x.to_bits() != y.to_bits())
                    })
            })
            .unwrap_or(n)
    }

    /// Provenance labels never decrease along time.
    pub fn provenance_is_monotone(&self) -> bool {
        let n_ok = self.active_n.windows(2).all(|w| w[0] <= w[1]);
        let key = |k: &Option<f64>| k.unwrap_or(f64::INFINITY);
        let k_ok = self.active_k.windows(2).all(|w| key(&w[0]) <= key(&w[1]));
        n_ok && k_ok
    }
}
