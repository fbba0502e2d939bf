//! Monte Carlo checks of the noise sampler against closed forms and
//! quadrature oracles. All comparisons use a three standard error margin.

use std::sync::Arc;

use fracwave::basis::QuadratureGrid;
use fracwave::noise::{Atom, LevyMeasure, NoisePath, NoiseSpec, StepField, TimePartition};
use fracwave::verify::{isometry_suite, run_replicas, Estimate, RunInfo};

fn tiny_grid() -> Arc<QuadratureGrid> {
    Arc::new(QuadratureGrid::new(1, 2).unwrap())
}

fn counts(spec: &NoiseSpec, horizon: f64, paths: usize, seed: u64) -> Estimate {
    let partition = TimePartition::new(horizon, 1).unwrap();
    let grid = tiny_grid();
    let n = run_replicas(paths, seed, 0, |_, s| {
        Ok(NoisePath::sample(spec, partition, grid.clone(), s)?.jumps().len() as f64)
    })
    .unwrap();
    Estimate::from_samples(&n)
}

#[test]
fn compound_poisson_mean_count() {
    let spec = NoiseSpec::exact(LevyMeasure::symmetric_pair(1.0, 2.0)).unwrap();
    let e = counts(&spec, 1.0, 100_000, 7);
    assert!((e.mean - 2.0).abs() <= 3.0 * e.se, "{e:?}");
}

#[test]
fn stable_mean_count_above_cutoff() {
    let spec = NoiseSpec::new(LevyMeasure::SymmetricStable { alpha: 1.2 }, 0.01).unwrap();
    let expect = 0.01f64.powf(-1.2);
    assert!((expect - 251.19).abs() < 0.01);
    let e = counts(&spec, 1.0, 4_000, 8);
    assert!((e.mean - expect).abs() <= 3.0 * e.se, "{e:?} vs {expect}");
}

#[test]
fn asymmetric_isometry() {
    let measure = LevyMeasure::Atoms {
        atoms: vec![Atom { size: 2.0, rate: 0.5 }, Atom { size: -1.0, rate: 0.5 }],
    };
    let spec = NoiseSpec::exact(measure).unwrap();
    let grid = Arc::new(QuadratureGrid::new(2, 9).unwrap());
    let partition = TimePartition::new(0.5, 10).unwrap();
    let v = isometry_suite(&spec, partition, grid.clone(), RunInfo::new(50_000, 3, 0)).unwrap();
    assert!(v.passed, "{v:#?}");
    // The compensator centres the integral.
    let ones = StepField::constant(partition.steps, grid.len(), 1.0);
    let means = run_replicas(50_000, 4, 0, |_, s| NoisePath::sample(&spec, partition, grid.clone(), s)?.integrate(&ones)).unwrap();
    let e = Estimate::from_samples(&means);
    assert!(e.mean.abs() <= 3.0 * e.se, "{e:?}");
}

/// `∫_ℝ (1 − cos θz) ν(dz)` for the symmetric stable measure, by Simpson's
/// rule after `z = e^s`.
fn stable_exponent(alpha: f64, theta: f64) -> f64 {
    let (a, b, n) = (-40.0, 18.0, 400_000);
    let h = (b - a) / n as f64;
    let f = |s: f64| {
        let z = f64::exp(s);
        (1.0 - (theta * z).cos()) * alpha * (-alpha * s).exp()
    };
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn stable_exponent_quadrature_matches_cauchy() {
    assert!((stable_exponent(1.0, 1.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    // Self-similarity: the exponent scales as |θ|^α.
    let ratio = stable_exponent(1.5, 2.0) / stable_exponent(1.5, 1.0);
    assert!((ratio - 2f64.powf(1.5)).abs() < 1e-6);
}

#[test]
fn stable_characteristic_function() {
    let alpha = 1.2;
    let spec = NoiseSpec::new(LevyMeasure::SymmetricStable { alpha }, 0.02).unwrap();
    let partition = TimePartition::new(1.0, 1).unwrap();
    let grid = tiny_grid();
    let mass = run_replicas(50_000, 11, 0, |_, s| Ok(NoisePath::sample(&spec, partition, grid.clone(), s)?.total_mass())).unwrap();
    for theta in [0.25, 0.5, 1.0, 2.0] {
        let cos: Vec<f64> = mass.iter().map(|m| (theta * m).cos()).collect();
        let e = Estimate::from_samples(&cos);
        let target = (-stable_exponent(alpha, theta)).exp();
        assert!((e.mean - target).abs() <= 3.0 * e.se, "θ = {theta}: {e:?} vs {target}");
    }
}
