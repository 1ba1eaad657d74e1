use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_trajectory, InitialCondition, MotionParams, RunSpec, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Samples in the moving-average window of the inversion.
pub const INVERSION_WINDOW: usize = 50;

/// Ensemble mean and standard error per sample time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub n_traj: usize,
    pub t: Vec<f64>,
    /// Kinetic energy along the narrow (x) and broad (y) pump, units of ħΓ₃.
    pub ekin: [Vec<f64>; 2],
    pub ekin_err: [Vec<f64>; 2],
    /// ⟨σ₂₂⟩ − ⟨σ₁₁⟩, moving average over [`INVERSION_WINDOW`] samples.
    pub inversion: Vec<f64>,
    pub inversion_err: Vec<f64>,
    /// Mean number of decays per trajectory from |2⟩ and |3⟩.
    pub decays: [f64; 2],
}

fn mean_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Centered moving average, shrinking at the ends.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = vec![0.0; x.len() + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + window - half).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Runs `n_traj` trajectories with seeds `base_seed + i` and aggregates them.
pub fn ensemble_stats(
    n_traj: usize,
    p: &ModelParams,
    mp: &MotionParams,
    init: &InitialCondition,
    run: &RunSpec,
    base_seed: u64,
) -> Result<EnsembleSeries> {
    if n_traj < 2 {
        return Err(Error::InvalidParameter {
            name: "n_traj".into(),
            reason: format!("need at least 2 trajectories for an error estimate, got {n_traj}"),
        });
    }
    let trajs = (0..n_traj)
        .into_par_iter()
        .map(|i| simulate_trajectory(p, mp, init, run, base_seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<Trajectory>>>()?;
    Ok(aggregate(&trajs, mp))
}

pub fn aggregate(trajs: &[Trajectory], mp: &MotionParams) -> EnsembleSeries {
    let samples: Vec<&[Sample]> = trajs.iter().map(|t| t.samples.as_slice()).collect();
    let decays: Vec<[usize; 2]> = trajs.iter().map(Trajectory::decays).collect();
    aggregate_samples(&samples, &decays, mp)
}

/// Ensemble statistics from stored samples and per-trajectory decay counts.
pub fn aggregate_samples(trajs: &[&[Sample]], decays: &[[usize; 2]], mp: &MotionParams) -> EnsembleSeries {
    let m = mp.mass();
    let len = trajs.iter().map(|t| t.len()).min().unwrap_or(0);
    let mut out = EnsembleSeries {
        n_traj: trajs.len(),
        ..Default::default()
    };
    let mut inv_raw = Vec::with_capacity(len);
    let mut inv_var = Vec::with_capacity(len);
    let mut buf = vec![0.0; trajs.len()];
    for k in 0..len {
        out.t.push(trajs[0][k].t);
        for axis in 0..2 {
            for (b, tr) in buf.iter_mut().zip(trajs) {
                let q = tr[k].p[axis];
                *b = q * q / (2.0 * m);
            }
            let (mu, err) = mean_err(&buf);
            out.ekin[axis].push(mu);
            out.ekin_err[axis].push(err);
        }
        for (b, tr) in buf.iter_mut().zip(trajs) {
            let pop = tr[k].populations;
            *b = pop[1] - pop[0];
        }
        let (mu, err) = mean_err(&buf);
        inv_raw.push(mu);
        inv_var.push(err * err);
    }
    out.inversion = moving_average(&inv_raw, INVERSION_WINDOW);
    // window samples are strongly correlated, so keep the pointwise error
    out.inversion_err = moving_average(&inv_var, INVERSION_WINDOW)
        .into_iter()
        .map(f64::sqrt)
        .collect();
    for d in decays {
        for (acc, &x) in out.decays.iter_mut().zip(d) {
            *acc += x as f64 / decays.len() as f64;
        }
    }
    out
}

impl EnsembleSeries {
    /// Mean of a series over samples with `t >= t_from`, with its spread
    /// estimated from the per-sample errors.
    pub fn late_mean(series: &[f64], err: &[f64], t: &[f64], t_from: f64) -> (f64, f64) {
        let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= t_from).collect();
        if idx.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let n = idx.len() as f64;
        let m = idx.iter().map(|&i| series[i]).sum::<f64>() / n;
        let e = idx.iter().map(|&i| err[i]).sum::<f64>() / n;
        (m, e)
    }

    pub fn to_text(&self) -> String {
        let mut s =
            String::from("# t_gamma3 E_kin_x E_kin_y inversion stderr_E_kin_x stderr_E_kin_y stderr_inversion\n");
        for i in 0..self.t.len() {
            let _ = writeln!(
                s,
                "{:.6e} {:.10e} {:.10e} {:.10e} {:.4e} {:.4e} {:.4e}",
                self.t[i],
                self.ekin[0][i],
                self.ekin[1][i],
                self.inversion[i],
                self.ekin_err[0][i],
                self.ekin_err[1][i],
                self.inversion_err[i]
            );
        }
        s
    }
}
