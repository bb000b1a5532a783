//! Link-level simulator for a two-user downlink MIMO-OTFS system.
//!
//! The two users' delay-Doppler channels are factored jointly with the
//! generalized SVD; the right factor drives the precoder and the left
//! factors are the (unitary) detectors, which leaves every stream behind a
//! diagonal gain. Block diagonalization, MMSE equalization and MMSE
//! precoding are provided as baselines, and [`sim`] measures per-stream bit
//! error rates over seeded Monte Carlo runs.

pub mod channel;
pub mod config;
pub mod error;
pub mod frame;
pub mod linalg;
pub mod output;
pub mod precode;
pub mod qam;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::CMat;
pub use num_complex::Complex64;
