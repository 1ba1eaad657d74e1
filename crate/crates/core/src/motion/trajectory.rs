use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MotionParams;
use crate::error::{Error, Result};
use crate::model::ModelParams;

type C64 = num_complex::Complex64;

/// Largest step in units of 1/Γ₃.
pub const MAX_DT: f64 = 0.05;

/// Quantum jump channels of the V-atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    /// Spontaneous decay |j⟩ → |1⟩ with recoil.
    Decay(u8),
    /// Phase kick projecting onto |j⟩.
    Dephase(u8),
    /// |2⟩ → |3⟩.
    Repump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub channel: Channel,
    /// In-plane momentum change, units of ħk₃.
    pub kick: [f64; 2],
}

/// Internal amplitudes plus classical position and momentum.
#[derive(Debug, Clone)]
pub struct AtomState {
    pub t: f64,
    /// (|1⟩, |2⟩, |3⟩) amplitudes, not normalized between jumps.
    pub psi: Vector3<C64>,
    pub r: [f64; 2],
    pub p: [f64; 2],
    threshold: f64,
}

impl AtomState {
    pub fn ground(r: [f64; 2], p: [f64; 2], rng: &mut impl Rng) -> Self {
        Self {
            t: 0.0,
            psi: Vector3::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            r,
            p,
            threshold: draw_threshold(rng),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.norm_squared()
    }

    /// Populations of the normalized state.
    pub fn populations(&self) -> [f64; 3] {
        let n = self.norm_sqr();
        [0, 1, 2].map(|k| self.psi[k].norm_sqr() / n)
    }

    /// ⟨σ₁ⱼ⟩ of the normalized state.
    pub fn coherence(&self, j: usize) -> C64 {
        self.psi[0].conj() * self.psi[j] / self.norm_sqr()
    }

    pub fn kinetic(&self, mp: &MotionParams) -> [f64; 2] {
        let m = mp.mass();
        self.p.map(|q| q * q / (2.0 * m))
    }
}

fn draw_threshold(rng: &mut impl Rng) -> f64 {
    rng.random::<f64>()
}

/// Couplings and the non-Hermitian part, fixed for a run.
#[derive(Debug, Clone, Copy)]
struct Rates {
    decay: [f64; 2],
    dephase: [f64; 2],
    repump: f64,
}

/// Stepper for one atom: Strang splitting of internal evolution around a
/// symplectic Euler step of the motion.
#[derive(Debug, Clone)]
pub struct Stepper {
    p: ModelParams,
    mp: MotionParams,
    k: [f64; 2],
    mass: f64,
    rates: Rates,
    dt: f64,
}

impl Stepper {
    pub fn new(p: &ModelParams, mp: &MotionParams, dt: f64) -> Result<Self> {
        p.validate()?;
        mp.validate()?;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt".into(),
                reason: format!("must be positive, got {dt}"),
            });
        }
        // time runs in 1/Γ₃ of the species; Γ₃ < 1 only switches decay down
        let limit = MAX_DT / p.gamma3.max(1.0);
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit });
        }
        Ok(Self {
            p: *p,
            mp: *mp,
            k: [mp.k2(), 1.0],
            mass: mp.mass(),
            rates: Rates {
                decay: [p.gamma2, p.gamma3],
                dephase: [p.nu2, p.nu3],
                repump: p.gamma23,
            },
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Local Rabi frequencies Ωⱼcos(kⱼ·r).
    fn local_rabi(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.p.omega2 * (self.k[0] * r[0]).cos(),
            self.p.omega3 * (self.k[1] * r[1]).cos(),
        ]
    }

    fn h_eff(&self, r: [f64; 2]) -> Matrix3<C64> {
        let [o2, o3] = self.local_rabi(r);
        let w2 = self.rates.decay[0] + self.rates.dephase[0] + self.rates.repump;
        let w3 = self.rates.decay[1] + self.rates.dephase[1];
        let c = |x: f64| C64::new(x, 0.0);
        Matrix3::new(
            c(0.0),
            c(o2),
            c(o3),
            c(o2),
            C64::new(-self.p.delta2, -0.5 * w2),
            c(0.0),
            c(o3),
            c(0.0),
            C64::new(-self.p.delta3, -0.5 * w3),
        )
    }

    fn propagator(h: &Matrix3<C64>, tau: f64) -> Matrix3<C64> {
        (h * C64::new(0.0, -tau)).exp()
    }

    /// Gradient force −∂⟨H⟩/∂r on the normalized state.
    pub fn force(&self, s: &AtomState) -> [f64; 2] {
        let om = [self.p.omega2, self.p.omega3];
        let arg = [self.k[0] * s.r[0], self.k[1] * s.r[1]];
        [0, 1].map(|i| self.k[i] * om[i] * arg[i].sin() * 2.0 * s.coherence(i + 1).re)
    }

    /// ⟨H(r)⟩ on the normalized state plus kinetic energy.
    pub fn energy(&self, s: &AtomState) -> f64 {
        let mut h = self.h_eff(s.r);
        h[(1, 1)].im = 0.0;
        h[(2, 2)].im = 0.0;
        let e = (s.psi.adjoint() * h * s.psi)[(0, 0)].re / s.norm_sqr();
        e + s.kinetic(&self.mp).iter().sum::<f64>()
    }

    /// Internal evolution at fixed position over `tau`, jumping whenever the
    /// norm falls through the threshold.
    fn evolve(&self, s: &mut AtomState, tau: f64, rng: &mut impl Rng, log: &mut Vec<Jump>) -> Result<()> {
        let h = self.h_eff(s.r);
        let mut left = tau;
        let tol = 1e-3 * self.dt;
        while left > 0.0 {
            let full = Self::propagator(&h, left) * s.psi;
            let nf = full.norm_squared();
            if !nf.is_finite() {
                return Err(Error::NonFinite { t: s.t });
            }
            if nf > s.threshold {
                s.psi = full;
                s.t += left;
                break;
            }
            let (mut lo, mut hi) = (0.0, left);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if (Self::propagator(&h, mid) * s.psi).norm_squared() > s.threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            s.psi = Self::propagator(&h, hi) * s.psi;
            s.t += hi;
            left -= hi;
            if let Some(j) = self.jump(s, rng) {
                log.push(j);
            }
        }
        Ok(())
    }

    fn jump(&self, s: &mut AtomState, rng: &mut impl Rng) -> Option<Jump> {
        let pop = [s.psi[1].norm_sqr(), s.psi[2].norm_sqr()];
        let weights = [
            self.rates.decay[0] * pop[0],
            self.rates.decay[1] * pop[1],
            self.rates.dephase[0] * pop[0],
            self.rates.dephase[1] * pop[1],
            self.rates.repump * pop[0],
        ];
        let total: f64 = weights.iter().sum();
        s.threshold = draw_threshold(rng);
        if !(total > 0.0) {
            // norm loss below the bisection tolerance only
            return None;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        while weights[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        let basis = |k: usize| {
            let mut v = Vector3::zeros();
            v[k] = C64::new(1.0, 0.0);
            v
        };
        let (channel, kick) = match pick {
            0 | 1 => {
                let kick = if self.mp.recoil {
                    let n = unit_sphere(rng);
                    [self.k[pick] * n[0], self.k[pick] * n[1]]
                } else {
                    [0.0; 2]
                };
                s.psi = basis(0);
                if !self.mp.frozen {
                    s.p[0] += kick[0];
                    s.p[1] += kick[1];
                }
                (Channel::Decay(pick as u8 + 2), kick)
            }
            2 | 3 => {
                let j = pick - 1;
                let ph = s.psi[j] / s.psi[j].norm();
                s.psi = basis(j) * ph;
                (Channel::Dephase(j as u8 + 1), [0.0; 2])
            }
            _ => {
                s.psi = basis(2);
                (Channel::Repump, [0.0; 2])
            }
        };
        Some(Jump { t: s.t, channel, kick })
    }

    /// One step of length `dt`. Jumps are appended to `log`.
    pub fn step(&self, s: &mut AtomState, rng: &mut impl Rng, log: &mut Vec<Jump>) -> Result<()> {
        let half = 0.5 * self.dt;
        self.evolve(s, half, rng, log)?;
        if !self.mp.frozen {
            let f = self.force(s);
            for (i, fi) in f.iter().enumerate() {
                s.p[i] += fi * self.dt;
                s.r[i] += s.p[i] / self.mass * self.dt;
            }
        }
        self.evolve(s, half, rng, log)?;
        if !(s.r.iter().chain(&s.p).all(|x| x.is_finite())) {
            return Err(Error::NonFinite { t: s.t });
        }
        Ok(())
    }
}

/// Uniform point on the unit sphere.
pub fn unit_sphere(rng: &mut impl Rng) -> [f64; 3] {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub r: [f64; 2],
    pub p: [f64; 2],
    pub populations: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub samples: Vec<Sample>,
    pub jumps: Vec<Jump>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Spontaneous decays from |2⟩ and |3⟩.
    pub fn decays(&self) -> [usize; 2] {
        let mut n = [0; 2];
        for j in &self.jumps {
            if let Channel::Decay(level) = j.channel {
                n[level as usize - 2] += 1;
            }
        }
        n
    }
}

/// Start of one trajectory and the run length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub r: [f64; 2],
    pub p: [f64; 2],
}

impl InitialCondition {
    /// Pump anti-nodes, momentum 100 ħkᵢ along each beam.
    pub fn hot(mp: &MotionParams) -> Self {
        Self {
            r: [0.0; 2],
            p: [100.0 * mp.k2(), 100.0],
        }
    }
}

/// Sampling layout of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub t_end: f64,
    pub dt: f64,
    /// Steps between stored samples.
    pub every: usize,
}

impl RunSpec {
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t_end".into(),
                reason: format!("must be positive, got {}", self.t_end),
            });
        }
        if self.every == 0 {
            return Err(Error::InvalidParameter {
                name: "every".into(),
                reason: "sampling stride must be at least 1".into(),
            });
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

pub fn simulate_trajectory(
    p: &ModelParams,
    mp: &MotionParams,
    init: &InitialCondition,
    run: &RunSpec,
    seed: u64,
) -> Result<Trajectory> {
    let stepper = Stepper::new(p, mp, run.dt)?;
    let n = run.n_steps()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = AtomState::ground(init.r, init.p, &mut rng);
    let sample = |s: &AtomState| Sample {
        t: s.t,
        r: s.r,
        p: s.p,
        populations: s.populations(),
    };
    let mut samples = Vec::with_capacity(n / run.every + 1);
    samples.push(sample(&s));
    let mut jumps = Vec::new();
    for k in 1..=n {
        stepper.step(&mut s, &mut rng, &mut jumps)?;
        s.t = k as f64 * run.dt;
        if k % run.every == 0 {
            samples.push(sample(&s));
        }
    }
    Ok(Trajectory { seed, samples, jumps })
}
