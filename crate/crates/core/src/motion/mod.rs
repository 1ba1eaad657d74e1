//! Single V-atom moving in two crossed standing-wave pumps: quantum jumps
//! for the internal state, classical motion with the dipole force and
//! photon recoil at each spontaneous decay.

mod ensemble;
mod params;
mod trajectory;

pub use ensemble::{aggregate, aggregate_samples, ensemble_stats, moving_average, EnsembleSeries, INVERSION_WINDOW};
pub use params::{doppler_broadening, MotionParams, ATOMIC_MASS, HBAR, SPEED_OF_LIGHT};
pub use trajectory::{
    simulate_trajectory, unit_sphere, AtomState, Channel, InitialCondition, Jump, RunSpec, Sample, Stepper, Trajectory,
    MAX_DT,
};
