//! Global solutions assembled from truncated ones.
//!
//! Over `N`: `u = ũ_N` on `[τ_{N−1}, τ_N)`. Before `τ_N` the level-`N` field
//! stays inside the clamp radius, so every level `N' ≥ N` performs the same
//! floating-point operations; the pasted run therefore raises the level in
//! place instead of restarting.
//!
//! Over `K`: `u = u^K` on `[τ^{K−1}, τ^K)`, where `u^K` is driven by the
//! noise with jumps above `K` removed and `τ^K` is the first such jump.

use super::state::Scratch;
use super::trajectory::{KStop, NStop, Trajectory};
use super::{finite, CoefficientPair, Model, ModeState};
use crate::error::{Error, Result};
use crate::noise::NoisePath;

/// Pastes `ũ_1, ũ_2, …, ũ_{N_max}` along one finite-variance path.
///
/// If `τ_{N_max} ≤ T` the run continues at level `N_max` and the trajectory
/// is flagged with `n_cap_reached`.
pub fn paste_over_n(model: &Model, pair: &CoefficientPair, path: &NoisePath, n_max: u32) -> Result<Trajectory> {
    model.check_path(path)?;
    path.second_moment()?;
    if n_max == 0 {
        return Err(Error::Config("N_max must be at least 1".into()));
    }
    let partition = path.partition();
    let record = model.records_coefficients();
    let label_k = finite(path.truncation());
    let mut traj = Trajectory::with_capacity(partition.steps + 1, record);
    let mut state = ModeState::zero(model.basis().len());
    let mut scratch = Scratch::new(model.grid().len());
    let mut level = 1u32;
    let mut truncated = pair.truncate(level as f64, model.embedding_constant());
    let mut prev_time = 0.0;

    for i in 0..=partition.steps {
        let norm = model.hr_norm(state.coefficients());
        let start_level = level;
        while norm > level as f64 && !traj.stops.n_cap_reached {
            traj.stops.n_stops.push(NStop {
                level,
                index: i,
                time: state.time(),
                bracket: [prev_time, state.time()],
            });
            if level >= n_max {
                traj.stops.n_cap_reached = true;
            } else {
                level += 1;
            }
        }
        if level != start_level {
            truncated = pair.truncate(level as f64, model.embedding_constant());
        }
        traj.push(&state, norm, level, label_k, record);
        prev_time = state.time();
        if i < partition.steps {
            state.advance_with(model, &truncated, path, &mut scratch)?;
        }
    }
    Ok(traj)
}

/// Pastes `u^{K_1}, u^{K_2}, …` along one heavy-tailed path; each `u^K` is
/// itself pasted over `N`.
///
/// The measure must be symmetric so that dropping the large jumps leaves a
/// centred finite-variance noise. If jumps larger than the last level occur
/// before the horizon, the last segment is kept and `k_cap_reached` is set.
pub fn paste_over_k(
    model: &Model,
    pair: &CoefficientPair,
    path: &NoisePath,
    schedule: &[f64],
    n_max: u32,
) -> Result<Trajectory> {
    if !path.spec().measure.is_symmetric() {
        return Err(Error::AsymmetricMeasure);
    }
    if schedule.is_empty() {
        return Err(Error::Config("K schedule must not be empty".into()));
    }
    if schedule.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("K schedule must be strictly increasing".into()));
    }

    let mut runs: Vec<(f64, Option<f64>, Trajectory)> = Vec::new();
    for &level in schedule {
        let tau = finite(path.first_large_jump(level));
        let run = paste_over_n(model, pair, &path.truncate(level)?, n_max)?;
        runs.push((level, tau, run));
        if tau.is_none() {
            break;
        }
    }

    let base = &runs[0].2;
    let record = base.coefficients.is_some();
    let mut out = Trajectory::with_capacity(base.len(), record);
    let mut segment_of = Vec::with_capacity(base.len());
    for (j, &t) in base.times.iter().enumerate() {
        let seg = runs
            .iter()
            .position(|(_, tau, _)| tau.is_none_or(|tau| t < tau))
            .unwrap_or(runs.len() - 1);
        let run = &runs[seg].2;
        out.times.push(t);
        out.norms.push(run.norms[j]);
        out.active_n.push(run.active_n[j]);
        out.active_k.push(finite(runs[seg].0));
        if let (Some(dst), Some(src)) = (out.coefficients.as_mut(), run.coefficients.as_ref()) {
            dst.push(src[j].clone());
        }
        segment_of.push(seg);
    }

    for (seg, (level, tau, run)) in runs.iter().enumerate() {
        out.stops.k_stops.push(KStop {
            level: *level,
            time: *tau,
        });
        for stop in &run.stops.n_stops {
            if segment_of[stop.index] == seg {
                out.stops.n_stops.push(*stop);
                if stop.level == n_max && run.stops.n_cap_reached {
                    out.stops.n_cap_reached = true;
                }
            }
        }
    }
    out.stops.k_cap_reached = runs.last().is_some_and(|(_, tau, _)| tau.is_some());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Atom, JumpEvent, LevyMeasure, NoiseSpec, TimePartition};
    use crate::solver::Preset;

    fn model() -> Model {
        Model::with_defaults(1, 8, 2.0, 1.0).unwrap().recording_coefficients(true)
    }

    fn pair() -> CoefficientPair {
        CoefficientPair::new(Preset::Linear { slope: 1.0, intercept: 0.0 }, Preset::Linear { slope: 1.0, intercept: 1.0 })
    }

    #[test]
    fn tiny_noise_keeps_level_one() {
        let m = model();
        let spec = NoiseSpec::exact(LevyMeasure::symmetric_pair(1e-3, 2.0)).unwrap();
        let path = NoisePath::sample(&spec, TimePartition::new(1.0, 50).unwrap(), m.grid().clone(), 4).unwrap();
        let t = paste_over_n(&m, &pair(), &path, 8).unwrap();
        assert!(t.active_n.iter().all(|&n| n == 1));
        assert!(t.stops.n_stops.is_empty() && !t.stops.n_cap_reached);
    }

    #[test]
    fn pasted_equals_truncated_before_each_stop() {
        let m = model();
        let spec = NoiseSpec::exact(LevyMeasure::symmetric_pair(6.0, 4.0)).unwrap();
        let part = TimePartition::new(1.0, 100).unwrap();
        let mut saw_stop = false;
        for seed in 0..20 {
            let path = NoisePath::sample(&spec, part, m.grid().clone(), seed).unwrap();
            let pasted = paste_over_n(&m, &pair(), &path, 16).unwrap();
            assert!(pasted.provenance_is_monotone());
            let top = *pasted.active_n.last().unwrap();
            for level in 1..=top {
                let solo = m.solve_truncated(&pair(), level, &path).unwrap();
                let tau_idx = solo.first_exceedance(level as f64).unwrap_or(solo.len());
                saw_stop |= tau_idx < solo.len();
                // Agreement on [0, τ_N], where the pasted label is ≤ N.
                let upto = pasted.active_n.iter().position(|&n| n > level).unwrap_or(pasted.len());
                assert!(pasted.agreeing_prefix(&solo) >= upto);
                assert!(upto >= tau_idx.min(pasted.len()));
            }
        }
        assert!(saw_stop);
    }

    #[test]
    fn cap_reached_is_flagged() {
        let m = model();
        let spec = NoiseSpec::exact(LevyMeasure::symmetric_pair(50.0, 5.0)).unwrap();
        let path = NoisePath::sample(&spec, TimePartition::new(1.0, 50).unwrap(), m.grid().clone(), 1).unwrap();
        let t = paste_over_n(&m, &pair(), &path, 1).unwrap();
        assert!(t.stops.n_cap_reached);
        assert!(t.active_n.iter().all(|&n| n == 1));
    }

    #[test]
    fn k_pasting_rejects_asymmetric_measure() {
        let m = model();
        let spec = NoiseSpec::exact(LevyMeasure::Atoms { atoms: vec![Atom { size: 1.0, rate: 1.0 }] }).unwrap();
        let path = NoisePath::sample(&spec, TimePartition::new(1.0, 10).unwrap(), m.grid().clone(), 1).unwrap();
        assert!(matches!(paste_over_k(&m, &pair(), &path, &[1.0], 4), Err(Error::AsymmetricMeasure)));
    }

    #[test]
    fn k_pasting_single_segment_when_no_large_jumps() {
        let m = model();
        let spec = NoiseSpec::exact(LevyMeasure::symmetric_pair(1.0, 1.0)).unwrap();
        let path = NoisePath::sample(&spec, TimePartition::new(1.0, 40).unwrap(), m.grid().clone(), 2).unwrap();
        let pasted = paste_over_k(&m, &pair(), &path, &[1.0, 2.0], 8).unwrap();
        let direct = paste_over_n(&m, &pair(), &path.truncate(1.0).unwrap(), 8).unwrap();
        assert_eq!(pasted.norms, direct.norms);
        assert_eq!(pasted.stops.k_stops.len(), 1);
        assert!(!pasted.stops.k_cap_reached);
    }

    #[test]
    fn k_pasting_switches_at_first_large_jump() {
        let m = model();
        let spec = NoiseSpec::exact(LevyMeasure::symmetric_pair(0.5, 2.0)).unwrap();
        let part = TimePartition::new(1.0, 40).unwrap();
        let base = NoisePath::sample(&spec, part, m.grid().clone(), 3).unwrap();
        let mut jumps = base.jumps().to_vec();
        jumps.push(JumpEvent { t: 0.412, x: [0.3, 0.0], z: 1.5 });
        jumps.push(JumpEvent { t: 0.7, x: [0.6, 0.0], z: -3.0 });
        let path = base.with_jumps(jumps).unwrap();
        let pasted = paste_over_k(&m, &pair(), &path, &[1.0, 2.0, 4.0], 32).unwrap();
        let times: Vec<Option<f64>> = pasted.stops.k_stops.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![Some(0.412), Some(0.7), None]);
        for (j, &t) in pasted.times.iter().enumerate() {
            let expect = if t < 0.412 { 1.0 } else if t < 0.7 { 2.0 } else { 4.0 };
            assert_eq!(pasted.active_k[j], Some(expect));
        }
        assert!(pasted.provenance_is_monotone());
        let u1 = paste_over_n(&m, &pair(), &path.truncate(1.0).unwrap(), 32).unwrap();
        let u2 = paste_over_n(&m, &pair(), &path.truncate(2.0).unwrap(), 32).unwrap();
        let before = pasted.times.iter().position(|&t| t >= 0.412).unwrap();
        assert_eq!(u1.agreeing_prefix(&u2), before);
    }
}
