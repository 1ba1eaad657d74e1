//! Symbolic second-order cumulant expansion for N identical atoms in a
//! cavity, and numerical integration of the resulting moment equations.

pub mod algebra;
mod compile;
mod generate;
pub mod model;
mod moments;
pub mod poly;
mod solve;
mod text;

pub use algebra::{normal_order, Algebra, Factor, Local, OpExpr, Word};
pub use compile::{AffineSystem, CompiledRhs, Symbols};
pub use generate::{
    adjoint_rhs, correlation_seeds, cumulant_close, generate_correlation_system, generate_system, laser_seeds,
    moment_rhs, Equation, EquationSystem, Frame, Slot, MOMENT_CAP,
};
pub use model::{param_value, Dissipator, SymbolicModel};
pub use moments::{close_word, Average, MomentPoly, Term};
pub use poly::{Monomial, Poly, Symbol, Q};
pub use solve::{
    integrate_to_steady, integrate_to_steady_with, threshold_estimate, threshold_scan, MomentState,
    SteadyMomentOptions, ThresholdPoint,
};
pub use text::{parse_moment_poly, parse_system, to_text};
