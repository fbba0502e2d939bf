//! Spectral Green kernel of `∂²/∂t² + (-Δ)^γ` with Dirichlet conditions.
//!
//! `G_t(x,y) = Σ_k sin(λ_k^{γ/2} t)/λ_k^{γ/2} · e_k(x) e_k(y)` for `t ≥ 0`.
//! The solver only ever touches the mode coefficients; the pointwise kernel
//! and its square integrals exist for diagnostics.

use std::sync::Arc;

use crate::basis::{EigenBasis, QuadratureGrid};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GreenKernel {
    basis: Arc<EigenBasis>,
    gamma: f64,
}

impl GreenKernel {
    /// Requires `γ > d/2`, the square-integrability threshold.
    pub fn new(basis: Arc<EigenBasis>, gamma: f64) -> Result<Self> {
        let d = basis.dimension() as f64;
        if !(gamma > d / 2.0) {
            return Err(Error::Window(format!(
                "γ > d/2 required (got γ = {gamma}, d = {})",
                basis.dimension()
            )));
        }
        Ok(Self { basis, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    /// `F_k[G_t(·,y)] / e_k(y) = sin(λ_k^{γ/2} t)/λ_k^{γ/2}`.
    pub fn coefficient(&self, k: usize, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if k >= self.basis.len() {
            return Err(Error::ModeOutOfRange {
                index: k,
                modes: self.basis.len(),
            });
        }
        Ok(self.coefficient_unchecked(k, t))
    }

    #[inline]
    fn coefficient_unchecked(&self, k: usize, t: f64) -> f64 {
        let w = self.basis.frequency(k, self.gamma);
        (w * t).sin() / w
    }

    /// `G_t(x,y)` truncated to the first `cutoff` modes.
    pub fn evaluate(&self, t: f64, x: &[f64], y: &[f64], cutoff: usize) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        self.basis.check_point(x)?;
        self.basis.check_point(y)?;
        let m = cutoff.min(self.basis.len());
        Ok((0..m)
            .map(|k| self.coefficient_unchecked(k, t) * self.basis.mode_value(k, x) * self.basis.mode_value(k, y))
            .sum())
    }

    /// `∫_D G_t(x,y)² dy = Σ_k sin²(λ_k^{γ/2} t) λ_k^{-γ} e_k(x)²`.
    pub fn square_integral_in_y(&self, t: f64, x: &[f64]) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        self.basis.check_point(x)?;
        Ok(self.square_integral_unchecked(t, x))
    }

    fn square_integral_unchecked(&self, t: f64, x: &[f64]) -> f64 {
        (0..self.basis.len())
            .map(|k| {
                let c = self.coefficient_unchecked(k, t);
                c * c * self.basis.mode_value(k, x).powi(2)
            })
            .sum()
    }

    /// Time-independent envelope `Σ_k λ_k^{-γ} e_k(x)²` of the square integral.
    pub fn square_integral_envelope(&self, x: &[f64]) -> f64 {
        (0..self.basis.len())
            .map(|k| self.basis.eigenvalue(k).powf(-self.gamma) * self.basis.mode_value(k, x).powi(2))
            .sum()
    }

    /// Bound on what the omitted modes `k > M` add to the square integral,
    /// `2^d Σ_{k>M} λ_k^{-γ}`.
    pub fn truncation_tail_bound(&self) -> f64 {
        let tail = self
            .basis
            .power_tail_bound(-self.gamma)
            .unwrap_or(f64::INFINITY);
        2f64.powi(self.basis.dimension() as i32) * tail
    }

    /// `∫_0^T sup_x ∫_D G_t²(x,y) dy dt` with the sup taken over a probe grid
    /// of `probe` points per axis and the time integral by the trapezoid rule
    /// on `time_points` nodes. The probe-grid sup is a lower bound of the true
    /// sup; [`Self::square_integral_envelope`] gives the matching upper bound.
    pub fn time_integrated_sup(&self, horizon: f64, time_points: usize, probe: usize) -> Result<f64> {
        if horizon < 0.0 {
            return Err(Error::NegativeTime(horizon));
        }
        if horizon == 0.0 {
            return Ok(0.0);
        }
        if time_points < 2 {
            return Err(Error::GridMismatch("time grid needs at least 2 points".into()));
        }
        let grid = QuadratureGrid::new(self.basis.dimension(), probe)?;
        let table = grid.tabulate(&self.basis);
        let e2: Vec<Vec<f64>> = (0..self.basis.len())
            .map(|k| table.row(k).iter().map(|e| e * e).collect())
            .collect();
        let dt = horizon / (time_points - 1) as f64;
        let mut values = vec![0.0; grid.len()];
        let mut integral = 0.0;
        for i in 0..time_points {
            let t = i as f64 * dt;
            values.iter_mut().for_each(|v| *v = 0.0);
            for (k, row) in e2.iter().enumerate() {
                let c = self.coefficient_unchecked(k, t);
                let c2 = c * c;
                for (v, e) in values.iter_mut().zip(row) {
                    *v += c2 * e;
                }
            }
            let sup = values.iter().copied().fold(0.0, f64::max);
            let w = if i == 0 || i == time_points - 1 { 0.5 } else { 1.0 };
            integral += w * dt * sup;
        }
        Ok(integral)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn kernel(m: usize, gamma: f64) -> GreenKernel {
        GreenKernel::new(Arc::new(EigenBasis::new(1, m).unwrap()), gamma).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let g = kernel(4, 2.0);
        assert_eq!(g.coefficient(0, 0.0).unwrap(), 0.0);
        let t = 0.37;
        let expected = (PI * PI * t).sin() / (PI * PI);
        assert!((g.coefficient(0, t).unwrap() - expected).abs() < 1e-15);
        for k in 0..4 {
            assert!((g.coefficient(k, 1e-6).unwrap() - 1e-6).abs() < 1e-12);
        }
        assert!(matches!(g.coefficient(0, -1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn rejects_gamma_below_half_dimension() {
        let b = Arc::new(EigenBasis::new(2, 4).unwrap());
        assert!(GreenKernel::new(b.clone(), 1.0).is_err());
        assert!(GreenKernel::new(b, 1.01).is_ok());
    }

    #[test]
    fn kernel_vanishes_at_zero_time_and_boundary() {
        let g = kernel(32, 2.0);
        assert_eq!(g.evaluate(0.0, &[0.3], &[0.6], 32).unwrap(), 0.0);
        assert!(g.evaluate(0.4, &[0.0], &[0.6], 32).unwrap().abs() < 1e-15);
        assert!(g.evaluate(0.4, &[0.3], &[1.0], 32).unwrap().abs() < 1e-14);
    }

    #[test]
    fn kernel_symmetry() {
        let g = kernel(32, 1.7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (t, x, y): (f64, f64, f64) = (rng.random::<f64>() * 2.0, rng.random(), rng.random());
            let a = g.evaluate(t, &[x], &[y], 32).unwrap();
            let b = g.evaluate(t, &[y], &[x], 32).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn square_integral_matches_quadrature() {
        let g = kernel(64, 2.0);
        let (t, x) = (0.3, 0.37);
        // Oracle: trapezoid quadrature of G_t(x,·)² on a fine grid.
        let n = 8193;
        let h = 1.0 / (n - 1) as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let y = i as f64 * h;
                let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
                w * g.evaluate(t, &[x], &[y], 64).unwrap().powi(2)
            })
            .sum();
        let spectral = g.square_integral_in_y(t, &[x]).unwrap();
        assert!((quad - spectral).abs() < 1e-8, "{quad} vs {spectral}");
        assert_eq!(g.square_integral_in_y(0.0, &[x]).unwrap(), 0.0);
    }

    #[test]
    fn square_integral_below_envelope() {
        let g = kernel(64, 2.0);
        let crude = 2.0 * g.basis().power_sum(-2.0);
        for i in 0..50 {
            let t = i as f64 * 0.07;
            for x in [0.1, 0.5, 0.83] {
                let s = g.square_integral_in_y(t, &[x]).unwrap();
                let env = g.square_integral_envelope(&[x]);
                assert!(s <= env + 1e-18 && env <= crude + 1e-18);
            }
        }
    }

    #[test]
    fn mode_truncation_tail() {
        let small = kernel(32, 2.0);
        let large = kernel(64, 2.0);
        let bound: f64 = 2.0 * (33..=64).map(|k| (k as f64 * PI).powi(-4)).sum::<f64>();
        for t in [0.1, 0.5, 1.3] {
            for x in [0.2, 0.5, 0.77] {
                let d = (small.square_integral_in_y(t, &[x]).unwrap()
                    - large.square_integral_in_y(t, &[x]).unwrap())
                .abs();
                assert!(d <= bound);
            }
        }
        assert!(bound <= small.truncation_tail_bound());
    }

    #[test]
    fn time_integrated_sup_properties() {
        let g = kernel(64, 2.0);
        assert_eq!(g.time_integrated_sup(0.0, 100, 65).unwrap(), 0.0);
        let mut prev = 0.0;
        for i in 1..=5 {
            let v = g.time_integrated_sup(0.2 * i as f64, 40 * i + 1, 129).unwrap();
            assert!(v.is_finite() && v >= prev);
            prev = v;
        }
    }
}
