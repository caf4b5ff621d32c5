//! Simulator and analysis toolkit for temporal-mode-selective quantum
//! frequency conversion: pulsed three-wave-mixing propagation, scattering
//! (Green) matrices and Schmidt decompositions, and two-stage cascades
//! forming a two-color optical Ramsey interferometer.

extern crate blas_src;

pub mod cascade;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod green;
pub mod grid;
pub mod io;
pub mod propagator;
pub mod schmidt;
pub mod shapes;

pub use error::{Result, TmiError};
