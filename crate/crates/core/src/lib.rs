//! Secrecy performance of a dual-hop link: a mobile RF hop (κ-μ fading,
//! random-waypoint distance) decoded and forwarded over an underwater optical
//! hop (mixture exponential–generalized-gamma turbulence with pointing error,
//! optionally through a reconfigurable surface).

pub mod accel;
pub mod config;
pub mod dual_hop;
pub mod error;
pub mod montecarlo;
pub mod par;
pub mod preset;
pub mod quad;
pub mod registry;
pub mod rf;
pub mod secrecy;
pub mod sweep;
pub mod uowc;
pub mod specfun;

pub use error::{Error, Result};
