//! Drift and diffusion coefficients `b`, `σ` and their clamped versions.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Named coefficient families, all locally Lipschitz with linear growth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Zero,
    Constant { value: f64 },
    /// `slope·ξ + intercept`.
    Linear { slope: f64, intercept: f64 },
    /// `scale·ξ³/(1+ξ²)`: cubic near zero, linear at infinity.
    ClampedCubic { scale: f64 },
    /// `amplitude·sin(ξ) + offset`.
    Sine { amplitude: f64, offset: f64 },
}

impl Preset {
    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            Preset::Zero => 0.0,
            Preset::Constant { value } => value,
            Preset::Linear { slope, intercept } => slope * xi + intercept,
            Preset::ClampedCubic { scale } => scale * xi * xi * xi / (1.0 + xi * xi),
            Preset::Sine { amplitude, offset } => amplitude * xi.sin() + offset,
        }
    }

    /// Smallest `D` with `|f(ξ)| ≤ D(1+|ξ|)` for all `ξ`.
    pub fn growth_constant(&self) -> f64 {
        match *self {
            Preset::Zero => 0.0,
            Preset::Constant { value } => value.abs(),
            Preset::Linear { slope, intercept } => slope.abs().max(intercept.abs()),
            Preset::ClampedCubic { scale } => scale.abs(),
            Preset::Sine { amplitude, offset } => amplitude.abs() + offset.abs(),
        }
    }

    /// Lipschitz constant on `[-R, R]`.
    pub fn lipschitz_on(&self, radius: f64) -> f64 {
        match *self {
            Preset::Zero | Preset::Constant { .. } => 0.0,
            Preset::Linear { slope, .. } => slope.abs(),
            Preset::ClampedCubic { scale } => {
                // f'(ξ) = scale·ξ²(3+ξ²)/(1+ξ²)², increasing up to ξ² = 3
                // where it peaks at 9/8.
                let x2 = (radius * radius).min(3.0);
                scale.abs() * x2 * (3.0 + x2) / (1.0 + x2).powi(2)
            }
            Preset::Sine { amplitude, .. } => amplitude.abs(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Preset::Zero | Preset::Constant { .. })
    }
}

#[derive(Clone)]
enum Kind {
    Preset(Preset),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A scalar coefficient, optionally clamped to `[-R, R]` before evaluation.
#[derive(Clone)]
pub struct CoefficientFn {
    kind: Kind,
    growth: f64,
    clamp: Option<f64>,
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("CoefficientFn");
        match &self.kind {
            Kind::Preset(p) => s.field("preset", p),
            Kind::Custom(_) => s.field("preset", &"custom"),
        };
        s.field("growth", &self.growth).field("clamp", &self.clamp).finish()
    }
}

impl From<Preset> for CoefficientFn {
    fn from(p: Preset) -> Self {
        Self {
            growth: p.growth_constant(),
            kind: Kind::Preset(p),
            clamp: None,
        }
    }
}

impl CoefficientFn {
    /// Wraps an arbitrary function with a declared linear-growth constant.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, growth: f64) -> Self {
        Self {
            kind: Kind::Custom(Arc::new(f)),
            growth,
            clamp: None,
        }
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        let x = match self.clamp {
            Some(r) => xi.clamp(-r, r),
            None => xi,
        };
        match &self.kind {
            Kind::Preset(p) => p.eval(x),
            Kind::Custom(f) => f(x),
        }
    }

    /// `f_N(ξ) = f(clamp(ξ, -R, R))`. Clamping an already clamped function
    /// keeps the tighter radius.
    pub fn clamped(&self, radius: f64) -> Self {
        let mut out = self.clone();
        out.clamp = Some(self.clamp.map_or(radius, |r| r.min(radius)));
        out
    }

    pub fn clamp_radius(&self) -> Option<f64> {
        self.clamp
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth
    }

    pub fn preset(&self) -> Option<&Preset> {
        match &self.kind {
            Kind::Preset(p) => Some(p),
            Kind::Custom(_) => None,
        }
    }

    /// Value when the function ignores its argument.
    pub fn constant_value(&self) -> Option<f64> {
        match &self.kind {
            Kind::Preset(p) if p.is_constant() => Some(p.eval(0.0)),
            _ => None,
        }
    }

    /// Global Lipschitz constant of the clamped function, or the Lipschitz
    /// constant on `[-R, R]` when unclamped. `None` for custom functions.
    pub fn lipschitz_on(&self, radius: f64) -> Option<f64> {
        let r = self.clamp.map_or(radius, |c| c.min(radius));
        self.preset().map(|p| p.lipschitz_on(r))
    }
}

/// The pair `(b, σ)` with linear-growth constants `D_b`, `D_σ`.
#[derive(Clone, Debug)]
pub struct CoefficientPair {
    pub drift: CoefficientFn,
    pub diffusion: CoefficientFn,
}

impl CoefficientPair {
    pub fn new(drift: impl Into<CoefficientFn>, diffusion: impl Into<CoefficientFn>) -> Self {
        Self {
            drift: drift.into(),
            diffusion: diffusion.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new(Preset::Zero, Preset::Zero)
    }

    pub fn growth_constants(&self) -> (f64, f64) {
        (self.drift.growth_constant(), self.diffusion.growth_constant())
    }

    /// `(b_N, σ_N)`: both clamped at `±C_∞·N`. Linear-growth constants are
    /// unchanged.
    pub fn truncate(&self, level: f64, embedding: f64) -> Self {
        let radius = embedding * level;
        Self {
            drift: self.drift.clamped(radius),
            diffusion: self.diffusion.clamped(radius),
        }
    }

    /// Local Lipschitz profile `(C_{b,N}, C_{σ,N})` on `[-C_∞N, C_∞N]`.
    pub fn lipschitz_profile(&self, level: f64, embedding: f64) -> Option<(f64, f64)> {
        let r = embedding * level;
        Some((self.drift.lipschitz_on(r)?, self.diffusion.lipschitz_on(r)?))
    }

    /// Randomized probe of `|f(ξ)| ≤ D(1+|ξ|)` over `|ξ| ≤ 10^span`, on a
    /// log-uniform magnitude scale. Returns the first violating argument.
    pub fn probe_linear_growth<R: Rng + ?Sized>(&self, rng: &mut R, probes: usize, span: f64) -> Option<f64> {
        for _ in 0..probes {
            let mag = 10f64.powf(rng.random_range(-span..span));
            let xi = if rng.random::<bool>() { mag } else { -mag };
            for f in [&self.drift, &self.diffusion] {
                let bound = f.growth_constant() * (1.0 + xi.abs());
                if f.eval(xi).abs() > bound * (1.0 + 1e-12) {
                    return Some(xi);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clamp_examples() {
        let square = CoefficientFn::custom(|x| x * x, f64::INFINITY);
        let b2 = square.clamped(2.0);
        assert_eq!(b2.eval(3.0), 4.0);
        assert_eq!(b2.eval(-3.0), 4.0);
        assert_eq!(b2.eval(1.0), 1.0);
        let cube = CoefficientFn::custom(|x| x * x * x, f64::INFINITY).clamped(1.5);
        assert_eq!(cube.eval(10.0), 3.375);
    }

    #[test]
    fn truncation_uses_embedding_times_level() {
        let pair = CoefficientPair::new(CoefficientFn::custom(|x| x * x, f64::INFINITY), Preset::Linear { slope: 2.0, intercept: 0.0 });
        let t = pair.truncate(4.0, 0.5);
        assert_eq!(t.drift.eval(3.0), 4.0);
        assert_eq!(t.diffusion.eval(-7.0), -4.0);
        assert_eq!(t.growth_constants(), pair.growth_constants());
    }

    #[test]
    fn lipschitz_function_unchanged_inside_radius() {
        let s: CoefficientFn = Preset::Sine { amplitude: 1.0, offset: 0.5 }.into();
        let sn = s.clamped(2.0);
        for i in -200..=200 {
            let x = i as f64 * 0.01;
            assert_eq!(s.eval(x), sn.eval(x));
        }
    }

    #[test]
    fn presets_have_linear_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let presets = [
            Preset::Zero,
            Preset::Constant { value: -2.0 },
            Preset::Linear { slope: 1.0, intercept: 1.0 },
            Preset::Linear { slope: -3.0, intercept: 0.5 },
            Preset::ClampedCubic { scale: 2.0 },
            Preset::Sine { amplitude: 1.5, offset: -0.25 },
        ];
        for p in presets.iter() {
            let pair = CoefficientPair::new(p.clone(), p.clone());
            assert_eq!(pair.probe_linear_growth(&mut rng, 10_000, 8.0), None, "{p:?}");
        }
        let bad = CoefficientPair::new(CoefficientFn::custom(|x| x * x, 1.0), Preset::Zero);
        assert!(bad.probe_linear_growth(&mut rng, 1000, 4.0).is_some());
    }

    #[test]
    fn clamped_cubic_lipschitz_profile_dominates_differences() {
        let p = Preset::ClampedCubic { scale: 1.0 };
        for r in [1.0, 2.0, 5.0] {
        let l = p.lipschitz_on(r);
        for i in 0..(200.0 * r) as usize {
            let x = -r + i as f64 * 0.01;
            let y = x + 0.01;
            assert!((p.eval(y) - p.eval(x)).abs() <= l * 0.01 + 1e-15);
        }
        }
    }
}
