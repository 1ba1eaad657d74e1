//! The driven V-atom and its cavity: parameters, presets, exact master
//! equations and single-atom scans.

mod build;
mod observe;
mod params;
pub mod presets;
mod scan;

pub use build::{build_atom_cavity_exact, build_single_atom, sigma, MasterEquation, BROAD, GROUND, LEVELS, NARROW};
pub use observe::{
    atom_cavity_steady, inversion, populations, single_atom_steady, steady_inversion, CavitySteady, FOCK_TAIL_TOL,
    MAX_FOCK,
};
pub use params::{ModelParams, Param};
pub use presets::{preset, presets, Preset};
pub use scan::{inversion_scan, repump_rate, t95, time_to_fraction, SCANNABLE};
