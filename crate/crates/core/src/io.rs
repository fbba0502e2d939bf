//! CSV and JSON persistence.
//!
//! Floats are written in Rust's shortest round-trip form, so every file is a
//! deterministic function of its inputs and reading it back is lossless.
//!
//! | file | columns / keys |
//! |------|----------------|
//! | trajectory CSV | `t, hr_norm, active_N, active_K[, u_1, …, u_M]` |
//! | noise CSV | `t, x1[, x2], z`, one row per simulated jump |
//! | noise header JSON | [`NoiseHeader`] |
//! | replica CSV | `replica, seed, jumps, final_norm, n_cap_reached, sup_norm_sq_N<n>…, tau_N<n>…` |
//! | summary JSON | [`Summary`] |
//! | verdict JSON | [`crate::verify::Verdict`] |
//!
//! An empty `active_K` or `tau_N<n>` cell stands for `+∞`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::noise::{NoisePath, NoiseSpec, TimePartition};
use crate::solver::{StoppingRecord, Trajectory};
use crate::verify::LevelEnsemble;

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let modes = traj.coefficients.as_ref().and_then(|c| c.first()).map_or(0, Vec::len);
    let mut header = vec!["t".to_string(), "hr_norm".into(), "active_N".into(), "active_K".into()];
    header.extend((1..=modes).map(|k| format!("u_{k}")));
    w.write_record(&header)?;
    for i in 0..traj.len() {
        let mut row = vec![num(traj.times[i]), num(traj.norms[i]), traj.active_n[i].to_string(), opt(traj.active_k[i])];
        if let Some(c) = &traj.coefficients {
            row.extend(c[i].iter().copied().map(num));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("cannot parse {what} value {s:?}")))
}

/// Reads back the series written by [`write_trajectory_csv`]; the stopping
/// record is not part of the CSV and comes back empty.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let expected = ["t", "hr_norm", "active_N", "active_K"];
    if header.len() < 4 || header.iter().take(4).ne(expected) {
        return Err(Error::Config(format!("unexpected trajectory header {header:?}")));
    }
    let modes = header.len() - 4;
    let mut traj = Trajectory {
        coefficients: (modes > 0).then(Vec::new),
        ..Trajectory::default()
    };
    for record in r.records() {
        let record = record?;
        traj.times.push(parse_f64(&record[0], "t")?);
        traj.norms.push(parse_f64(&record[1], "hr_norm")?);
        traj.active_n
            .push(record[2].parse().map_err(|_| Error::Config(format!("bad active_N {:?}", &record[2])))?);
        traj.active_k.push(match &record[3] {
            "" => None,
            s => Some(parse_f64(s, "active_K")?),
        });
        if let Some(c) = traj.coefficients.as_mut() {
            c.push((4..4 + modes).map(|j| parse_f64(&record[j], "u_k")).collect::<Result<_>>()?);
        }
    }
    Ok(traj)
}

/// Metadata written next to a noise CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseHeader {
    pub spec: NoiseSpec,
    pub seed: u64,
    pub partition: TimePartition,
    /// `ε`.
    pub cutoff: f64,
    /// `σ_ε²`, the variance per unit space-time of the Gaussian surrogate.
    pub sigma_eps2: f64,
    /// Drift subtracted per unit space-time.
    pub compensator: f64,
    pub dimension: usize,
    pub grid_per_axis: usize,
    pub jumps: usize,
}

impl NoiseHeader {
    pub fn of(path: &NoisePath) -> Self {
        Self {
            spec: path.spec().clone(),
            seed: path.seed(),
            partition: path.partition(),
            cutoff: path.spec().cutoff,
            sigma_eps2: path.sigma_eps2(),
            compensator: path.compensator(),
            dimension: path.dimension(),
            grid_per_axis: path.grid().per_axis(),
            jumps: path.jumps().len(),
        }
    }
}

/// Writes the jump record `t, x1[, x2], z`.
pub fn write_noise_csv<W: Write>(out: W, path: &NoisePath) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = path.dimension();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.push("z".into());
    w.write_record(&header)?;
    for j in path.jumps() {
        let mut row = vec![num(j.t)];
        row.extend(j.x[..dim].iter().copied().map(num));
        row.push(num(j.z));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replica of a level ensemble.
pub fn write_replica_csv<W: Write>(out: W, ensemble: &LevelEnsemble) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["replica", "seed", "jumps", "final_norm", "n_cap_reached"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(ensemble.levels.iter().map(|n| format!("sup_norm_sq_N{n}")));
    header.extend(ensemble.levels.iter().map(|n| format!("tau_N{n}")));
    w.write_record(&header)?;
    for s in &ensemble.replicas {
        let mut row = vec![
            s.replica.to_string(),
            s.seed.to_string(),
            s.jumps.to_string(),
            num(s.final_norm),
            s.n_cap_reached.to_string(),
        ];
        row.extend(s.sup_norm_sq.iter().copied().map(num));
        row.extend(s.tau.iter().copied().map(opt));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary of one simulated trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: RunConfig,
    pub seed: u64,
    pub steps: usize,
    pub embedding_constant: f64,
    pub jumps: usize,
    pub final_norm: f64,
    pub max_norm: f64,
    pub final_n: u32,
    pub final_k: Option<f64>,
    pub stops: StoppingRecord,
}

impl Summary {
    pub fn new(config: &RunConfig, embedding_constant: f64, path: &NoisePath, traj: &Trajectory) -> Self {
        Self {
            config: config.clone(),
            seed: path.seed(),
            steps: path.partition().steps,
            embedding_constant,
            jumps: path.jumps().len(),
            final_norm: traj.norms.last().copied().unwrap_or(0.0),
            max_norm: traj.norms.iter().copied().fold(0.0, f64::max),
            final_n: traj.active_n.last().copied().unwrap_or(1),
            final_k: traj.active_k.last().copied().flatten(),
            stops: traj.stops.clone(),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// Writes through a buffer-producing writer function into `path`.
pub fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}
