use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{GridPoint, Kind, Plan, Source};
use crate::cumulant::{integrate_to_steady, threshold_estimate, to_text, MomentState, ThresholdPoint};
use crate::error::{Error, Result};
use crate::model::{inversion, populations, single_atom_steady, t95, ModelParams};
use crate::motion::{aggregate_samples, simulate_trajectory, InitialCondition, MotionParams, RunSpec, Sample};
use crate::quantum::DensityMatrix;
use crate::spectrum::{laser_spectrum, single_atom_feature, single_atom_spectrum, LaserEquations};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Finished with a diagnosed condition (limit cycle, no inversion).
    Warned,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub grid: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<u64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(with = "nan_as_null")]
    pub values: Vec<f64>,
}

/// JSON has no NaN; store it as `null` and read it back.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub code_version: String,
    pub kind: Kind,
    /// Canonical config; its SHA-256 is `config_hash`.
    pub config: String,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub points: usize,
    pub ok: usize,
    pub warned: usize,
    pub failed: usize,
    pub reused: usize,
    pub files: Vec<String>,
    pub summary: Vec<String>,
}

impl Manifest {
    pub fn status(&self) -> Status {
        if self.failed > 0 {
            Status::Failed
        } else if self.warned > 0 {
            Status::Warned
        } else {
            Status::Ok
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub force: bool,
    pub workers: Option<usize>,
}

pub const MANIFEST: &str = "manifest.json";
pub const POINTS: &str = "points.json";

#[derive(Debug, Clone, Copy)]
struct Task {
    grid: usize,
    trajectory: Option<u64>,
}

fn tasks(plan: &Plan, n_grid: usize) -> Vec<Task> {
    match (&plan.config.kind, &plan.config.cooling) {
        (Kind::Cooling, Some(c)) => (0..n_grid)
            .flat_map(|g| {
                (0..c.trajectories as u64).map(move |k| Task {
                    grid: g,
                    trajectory: Some(k),
                })
            })
            .collect(),
        _ => (0..n_grid)
            .map(|g| Task {
                grid: g,
                trajectory: None,
            })
            .collect(),
    }
}

fn motion_params(plan: &Plan) -> MotionParams {
    let mut mp = if plan.preset.name == "Yb174" {
        MotionParams::yb174()
    } else {
        MotionParams::sr88()
    };
    if let Some(c) = &plan.config.cooling {
        mp.recoil = c.recoil;
        mp.frozen = c.frozen;
    }
    mp
}

fn run_spec(plan: &Plan) -> RunSpec {
    let c = plan.config.cooling.as_ref().expect("cooling plan has a table");
    RunSpec {
        t_end: c.t_end,
        dt: c.dt,
        every: c.every,
    }
}

const NAN: f64 = f64::NAN;

fn compute(plan: &Plan, eqs: Option<&LaserEquations>, g: &GridPoint, task: Task) -> (Status, Option<String>, Vec<f64>) {
    let p = &g.params;
    let warned = |e: Error, values: Vec<f64>| (Status::Warned, Some(e.to_string()), values);
    let result: Result<(Status, Option<String>, Vec<f64>)> = (|| match plan.config.kind {
        Kind::InversionScan => {
            let rho = single_atom_steady(p)?;
            let pop = populations(&rho, 0);
            Ok((Status::Ok, None, vec![inversion(&rho, 0), pop[0], pop[1], pop[2]]))
        }
        Kind::T95 => {
            let space = crate::model::build_single_atom(p)?.space().clone();
            let rho0 = DensityMatrix::basis(space, 0)?;
            match t95(p, &rho0) {
                Ok(t) => Ok((Status::Ok, None, vec![t])),
                Err(e @ Error::NotInverted(_)) => Ok(warned(e, vec![NAN])),
                Err(e) => Err(e),
            }
        }
        Kind::Threshold | Kind::PhotonScan => {
            let sys = &eqs.expect("laser equations").moments;
            match integrate_to_steady(sys, p, &MomentState::ground(sys)) {
                Ok(s) => Ok((
                    Status::Ok,
                    None,
                    vec![s.photons(), s.inversion(), s.coherent_fraction(), NAN],
                )),
                Err(Error::LimitCycle { period }) => {
                    Ok(warned(Error::LimitCycle { period }, vec![NAN, NAN, NAN, period]))
                }
                Err(e) => Err(e),
            }
        }
        Kind::FwhmSweep => match laser_spectrum(eqs.expect("laser equations"), p) {
            Ok(ls) => {
                let st = if ls.spectrum.ambiguous {
                    Status::Warned
                } else {
                    Status::Ok
                };
                let msg = ls
                    .spectrum
                    .ambiguous
                    .then(|| "secondary peak above half maximum".to_string());
                Ok((
                    st,
                    msg,
                    vec![ls.steady.photons(), ls.spectrum.fwhm, ls.spectrum.peak, NAN],
                ))
            }
            Err(Error::LimitCycle { period }) => Ok(warned(Error::LimitCycle { period }, vec![NAN, NAN, NAN, period])),
            Err(e) => Err(e),
        },
        Kind::Spectrum => {
            let spec = plan.config.spectrum.as_ref().expect("checked in plan");
            let mut values;
            let res = match spec.source {
                Source::Atom => {
                    let res = single_atom_spectrum(p)?;
                    let hw = match &spec.feature_half_width {
                        Some(v) => {
                            let q = match v {
                                super::config::Value::Text(s) => s.parse::<crate::units::Quantity>()?,
                                _ => {
                                    return Err(Error::Config {
                                        path: "spectrum.feature_half_width".into(),
                                        reason: "needs a unit suffix".into(),
                                    })
                                }
                            };
                            q.internal(&plan.units) / p.gamma2
                        }
                        None => 100.0,
                    };
                    let pump = p.delta2 / p.gamma2;
                    let f = single_atom_feature(p, pump, hw)?;
                    values = vec![res.fwhm, res.peak, f.position, f.fwhm];
                    res
                }
                Source::Laser => {
                    let ls = laser_spectrum(eqs.expect("laser equations"), p)?;
                    values = vec![
                        ls.spectrum.fwhm,
                        ls.spectrum.peak,
                        ls.steady.photons(),
                        ls.steady.coherent_fraction(),
                    ];
                    ls.spectrum
                }
            };
            for (w, s) in res.omega.iter().zip(&res.s) {
                values.push(*w);
                values.push(*s);
            }
            let st = if res.ambiguous { Status::Warned } else { Status::Ok };
            Ok((
                st,
                res.ambiguous.then(|| "secondary peak above half maximum".into()),
                values,
            ))
        }
        Kind::Cooling => {
            let mp = motion_params(plan);
            let seed = plan.config.seed.wrapping_add(task.trajectory.unwrap_or(0));
            let tr = simulate_trajectory(p, &mp, &InitialCondition::hot(&mp), &run_spec(plan), seed)?;
            let d = tr.decays();
            let mut values = vec![d[0] as f64, d[1] as f64];
            for s in &tr.samples {
                values.extend_from_slice(&[s.p[0], s.p[1], s.populations[0], s.populations[1], s.populations[2]]);
            }
            Ok((Status::Ok, None, values))
        }
    })();
    result.unwrap_or_else(|e| (Status::Failed, Some(e.to_string()), vec![]))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), text)?;
    files.push(name.to_string());
    Ok(())
}

fn needs_equations(plan: &Plan) -> bool {
    matches!(plan.config.kind, Kind::Threshold | Kind::PhotonScan | Kind::FwhmSweep)
        || plan.config.spectrum.as_ref().is_some_and(|s| s.source == Source::Laser)
}

/// Runs every point of the plan into `dir`.
///
/// Points already completed by an earlier run of the same config are kept
/// unless `force` is set. If nothing is left to do the directory is not
/// touched.
pub fn run(plan: &Plan, dir: &Path, opts: &RunOptions) -> Result<Manifest> {
    let started = Instant::now();
    let hash = plan.config.hash();
    let grid = plan.grid();
    let todo = tasks(plan, grid.len());

    let mut previous: Vec<Option<PointRecord>> = vec![None; todo.len()];
    if !opts.force {
        let old: Option<Manifest> = read_json(&dir.join(MANIFEST));
        if let Some(m) = old.filter(|m| m.config_hash == hash) {
            let recs: Vec<PointRecord> = read_json(&dir.join(POINTS)).unwrap_or_default();
            for r in recs {
                if r.status != Status::Failed && r.index < previous.len() {
                    previous[r.index] = Some(r.clone());
                }
            }
            if previous.iter().all(Option::is_some) {
                log::info!("{}: all {} points up to date", dir.display(), todo.len());
                return Ok(Manifest {
                    reused: todo.len(),
                    ..m
                });
            }
        }
    }
    let reused = previous.iter().filter(|r| r.is_some()).count();

    let eqs = if needs_equations(plan) {
        Some(LaserEquations::generate(plan.base.gamma23 > 0.0)?)
    } else {
        None
    };
    let done = AtomicUsize::new(reused);
    let total = todo.len();
    let work = || -> Vec<PointRecord> {
        todo.par_iter()
            .enumerate()
            .map(|(index, task)| {
                if let Some(r) = &previous[index] {
                    return r.clone();
                }
                let (status, message, values) = compute(plan, eqs.as_ref(), &grid[task.grid], *task);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                log::info!("[{k}/{total}] point {index}: {status:?}");
                if let Some(m) = &message {
                    log::warn!("point {index}: {m}");
                }
                PointRecord {
                    index,
                    grid: task.grid,
                    trajectory: task.trajectory,
                    status,
                    message,
                    values,
                }
            })
            .collect()
    };
    let records = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let summary = write_outputs(plan, &grid, &records, dir, &mut files)?;
    if let Some(eqs) = &eqs {
        write(dir, "moment_equations.txt", &to_text(&eqs.moments), &mut files)?;
        write(
            dir,
            "correlation_equations.txt",
            &to_text(&eqs.correlations),
            &mut files,
        )?;
    }
    let count = |s: Status| records.iter().filter(|r| r.status == s).count();
    let manifest = Manifest {
        config_hash: hash,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: plan.config.kind,
        config: plan.config.canonical(),
        started_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_seconds: started.elapsed().as_secs_f64(),
        points: records.len(),
        ok: count(Status::Ok),
        warned: count(Status::Warned),
        failed: count(Status::Failed),
        reused,
        files,
        summary,
    };
    fs::write(
        dir.join(POINTS),
        serde_json::to_string(&records).expect("records serialize"),
    )?;
    fs::write(
        dir.join(MANIFEST),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}

fn header(plan: &Plan, columns: &[String]) -> String {
    let mut s = format!("# vlaser {} preset={}\n", plan.config.kind, plan.preset.name);
    let _ = writeln!(s, "# {}", columns.join(" "));
    s
}

fn fmt_row(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.10e}")).collect();
    cells.join(" ")
}

fn write_outputs(
    plan: &Plan,
    grid: &[GridPoint],
    records: &[PointRecord],
    dir: &Path,
    files: &mut Vec<String>,
) -> Result<Vec<String>> {
    let mut summary = Vec::new();
    let coords = |g: usize| -> Vec<f64> {
        grid[g]
            .coords
            .iter()
            .enumerate()
            .map(|(k, &v)| plan.display(k, v))
            .collect()
    };
    let axis_cols: Vec<String> = plan.axes.iter().map(|a| a.column()).collect();
    let table = |value_cols: &[&str], width: usize| -> String {
        let mut cols = axis_cols.clone();
        cols.extend(value_cols.iter().map(|c| c.to_string()));
        let mut s = header(plan, &cols);
        for r in records {
            let mut row = coords(r.grid);
            if r.values.len() == width {
                row.extend(&r.values);
            } else {
                row.extend(std::iter::repeat_n(NAN, width));
            }
            let _ = writeln!(s, "{}", fmt_row(&row));
        }
        s
    };
    match plan.config.kind {
        Kind::InversionScan => {
            write(
                dir,
                "inversion.txt",
                &table(&["inversion", "pop1", "pop2", "pop3"], 4),
                files,
            )?;
            if let Some(best) = records
                .iter()
                .filter(|r| r.values.len() == 4)
                .max_by(|a, b| a.values[0].total_cmp(&b.values[0]))
            {
                let at: Vec<String> = axis_cols
                    .iter()
                    .zip(coords(best.grid))
                    .map(|(c, v)| format!("{c}={v}"))
                    .collect();
                summary.push(format!("max inversion {:.4} at ({})", best.values[0], at.join(", ")));
            }
        }
        Kind::T95 => {
            write(dir, "t95.txt", &table(&["t95_inv_Gamma3"], 1), files)?;
        }
        Kind::Threshold | Kind::PhotonScan => {
            let name = if plan.config.kind == Kind::Threshold {
                "threshold.txt"
            } else {
                "photons.txt"
            };
            write(
                dir,
                name,
                &table(&["photons", "inversion", "coherent_fraction", "limit_cycle_period"], 4),
                files,
            )?;
            if plan.config.kind == Kind::Threshold {
                let n_last = plan.axes.last().map_or(1, |a| a.values.len());
                for chunk in records.chunks(n_last) {
                    let pts: Vec<ThresholdPoint> = chunk
                        .iter()
                        .filter(|r| r.values.len() == 4)
                        .map(|r| ThresholdPoint {
                            n: grid[r.grid].params.n_atoms,
                            photons: r.values[0],
                            inversion: r.values[1],
                            coherent_fraction: r.values[2],
                            limit_cycle: r.values[3].is_finite().then_some(r.values[3]),
                        })
                        .collect();
                    let label: Vec<String> = axis_cols
                        .iter()
                        .zip(coords(chunk[0].grid))
                        .take(plan.axes.len() - 1)
                        .map(|(c, v)| format!("{c}={v}"))
                        .collect();
                    let th = threshold_estimate(&pts).map_or("none".to_string(), |n| format!("{n:.0}"));
                    summary.push(format!("threshold N {th} {}", label.join(" ")).trim_end().to_string());
                }
            }
        }
        Kind::FwhmSweep => {
            write(
                dir,
                "fwhm.txt",
                &table(&["photons", "fwhm_Gamma2", "peak_Gamma2", "limit_cycle_period"], 4),
                files,
            )?;
        }
        Kind::Spectrum => {
            if let Some(r) = records.first().filter(|r| r.values.len() >= 4) {
                let mut s = String::from("# omega_offset_gamma2 S_normalized\n");
                for pair in r.values[4..].chunks(2) {
                    let _ = writeln!(s, "{:.10e} {:.10e}", pair[0], pair[1]);
                }
                write(dir, "spectrum.txt", &s, files)?;
                let v = &r.values;
                summary.push(format!("FWHM {:.4} Gamma2, peak offset {:.4} Gamma2", v[0], v[1]));
                match plan.config.spectrum.as_ref().map(|s| s.source) {
                    Some(Source::Atom) => {
                        summary.push(format!("pump feature at {:.2} Gamma2, FWHM {:.3} Gamma2", v[2], v[3]))
                    }
                    _ => summary.push(format!("photons {:.4e}, coherent fraction {:.3e}", v[2], v[3])),
                }
            }
        }
        Kind::Cooling => {
            let mp = motion_params(plan);
            let spec = run_spec(plan);
            for (g, _) in grid.iter().enumerate() {
                let recs: Vec<&PointRecord> = records
                    .iter()
                    .filter(|r| r.grid == g && r.status != Status::Failed)
                    .collect();
                if recs.len() < 2 {
                    continue;
                }
                let samples: Vec<Vec<Sample>> = recs
                    .iter()
                    .map(|r| {
                        r.values[2..]
                            .chunks(5)
                            .enumerate()
                            .map(|(k, c)| Sample {
                                t: (k * spec.every) as f64 * spec.dt,
                                r: [0.0; 2],
                                p: [c[0], c[1]],
                                populations: [c[2], c[3], c[4]],
                            })
                            .collect()
                    })
                    .collect();
                let decays: Vec<[usize; 2]> = recs
                    .iter()
                    .map(|r| [r.values[0] as usize, r.values[1] as usize])
                    .collect();
                let refs: Vec<&[Sample]> = samples.iter().map(Vec::as_slice).collect();
                let e = aggregate_samples(&refs, &decays, &mp);
                let tag: String = axis_cols
                    .iter()
                    .zip(coords(g))
                    .map(|(c, v)| format!("_{c}_{v}"))
                    .collect();
                write(dir, &format!("cooling{tag}.txt"), &e.to_text(), files)?;
                let t_from = 0.7 * spec.t_end;
                let (ey, _) = crate::motion::EnsembleSeries::late_mean(&e.ekin[1], &e.ekin_err[1], &e.t, t_from);
                let (inv, _) = crate::motion::EnsembleSeries::late_mean(&e.inversion, &e.inversion_err, &e.t, 0.0);
                summary.push(format!(
                    "{} trajectories{tag}: late E_kin_y {ey:.4} hbar*Gamma3 (k_B T {:.4}), mean inversion {inv:.4}",
                    e.n_traj,
                    2.0 * ey
                ));
            }
        }
    }
    Ok(summary)
}

/// Output directory of a config: `root/<config file stem>`.
pub fn output_dir(root: &Path, config_path: &Path) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    root.join(stem)
}

/// Parameters with every field in display units, for listings.
pub fn describe(p: &ModelParams, units: &crate::units::UnitSystem) -> Vec<(String, String)> {
    use crate::model::Param;
    use crate::units::Unit;
    Param::ALL
        .iter()
        .filter(|&&q| q != Param::Nu)
        .map(|&q| {
            let v = p.get(q);
            let text = if !q.is_frequency() {
                format!("{v}")
            } else if matches!(
                q,
                Param::Delta2 | Param::Delta3 | Param::Omega2 | Param::Omega3 | Param::Gamma3 | Param::DeltaC
            ) {
                format!("{} {}", units.from_internal(v, Unit::Gamma3), Unit::Gamma3)
            } else {
                format!("{} {}", units.from_internal(v, Unit::Gamma2), Unit::Gamma2)
            };
            (q.name().to_string(), text)
        })
        .collect()
}
