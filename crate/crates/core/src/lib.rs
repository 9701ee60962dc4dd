//! Jost functions, Birman–Schwinger operators and trace-formula checks for
//! the half-line Schrödinger operator −d²/dx² + V with complex V and a
//! Dirichlet condition at 0.

pub mod blaschke;
pub mod bs_operator;
pub mod error;
pub mod jost;
pub mod ode;
pub mod oracle;
pub mod potential;
pub mod quad;
pub mod resolvent;
pub mod spectra;
pub mod traceform;

pub use error::{Error, Result};
pub use jost::{jost_function, jost_solution, Jost, JostSolution, JostValue, Method};
pub use potential::{Moments, PotentialSpec, Segment};
pub use resolvent::Wavenumber;
