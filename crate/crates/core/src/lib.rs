//! Robust Tomlinson-Harashima transceiver design for MIMO two-way relaying.
//!
//! Two multi-antenna nodes exchange data through an amplify-and-forward relay.
//! Each node precodes with a nonlinear THP stage followed by a linear matrix,
//! the relay applies one linear matrix, and each receiver equalizes linearly.
//! The relay→node channels are known only up to a spherical error ball, and
//! the design minimizes a worst-case bound on the sum MSE.
//!
//! Layers, bottom to top:
//!
//! - [`numerics`]: ordered SVD, LDLᴴ, Hermitian solves.
//! - [`system`]: configuration, channels, THP encoding, the link simulator.
//! - [`robust_mse`]: worst-case MSE bound, MMSE equalizer, reduced MSE, powers.
//! - [`thp`]: optimal unit-lower-triangular feedback matrix.
//! - [`spectral`]: joint SVD directions and the diagonalized objective.
//! - [`socp`]: conic modeling, interior-point solver, alternating optimizer.
//! - [`harness`]: experiments, CSV output and the command-line front end.

pub mod error;
pub mod harness;
pub mod numerics;
pub mod random;
pub mod robust_mse;
pub mod socp;
pub mod spectral;
pub mod system;
pub mod thp;

pub use error::{Error, Result};
pub use system::{ChannelSet, DesignSolution, Node, SystemConfig};
