//! Blocking probability and spatial throughput of a cellular-connected UAV
//! network.
//!
//! UAVs hover at a common altitude with downward-pointing directional
//! antennas whose main lobes cover ground disks of radius `r_c`. A UAV can
//! be served only by a base station that lies in its disk and in no other
//! UAV's disk. This crate simulates that blocking event over Poisson
//! deployments, evaluates closed-form bounds on it, and turns both into
//! spatial-throughput curves.

pub mod blocking;
pub mod cli;
pub mod error;
pub mod format;
pub mod geometry;
pub mod moments;
pub mod pointprocess;
pub mod radio;
pub mod streams;
pub mod throughput;

mod grid;

pub use error::{Error, Result};
