//! Traveling waves of a one-dimensional attraction-repulsion chemotaxis
//! model with logistic source,
//!
//! ```text
//! u_t = u_xx - chi1 (u v1_x)_x + chi2 (u v2_x)_x + u (a - b u)
//! 0   = v1_xx - lambda1 v1 + mu1 u
//! 0   = v2_xx - lambda2 v2 + mu2 u
//! ```
//!
//! in the moving frame `x - c t`. The crate computes the threshold
//! constants, the critical decay rate and speed, sub/super-solution
//! envelopes, waves as fixed points of a frozen-coefficient evolution,
//! principal-eigenvalue certificates for nonexistence, and direct spreading
//! speeds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod eigen;
pub mod elliptic;
pub mod error;
pub mod evolver;
pub mod front;
pub mod grid;
pub mod params;
pub mod profiles;
pub mod wave;

pub use error::{Error, Result};
pub use grid::{Field, Grid1D, Tail};
pub use params::ChemoParams;
