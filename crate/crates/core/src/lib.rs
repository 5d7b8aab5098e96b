//! Two-dimensional phase-field dynamic fracture with an asynchronous variational
//! integrator: every element advances on its own fixed time step, scheduled through a
//! priority queue, and solves its phase values over its node-sharing patch under bound
//! and irreversibility constraints.

pub mod app;
pub mod config;
pub mod diagnostics;
pub mod element;
pub mod engine;
pub mod error;
pub mod material;
pub mod mesh;
pub mod output;
pub mod solver;

pub use error::Error;
