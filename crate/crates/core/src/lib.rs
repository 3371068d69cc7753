//! Learned operator selection for neighborhood search on the capacitated
//! vehicle routing problem.

#![allow(clippy::needless_range_loop)]

pub mod agent;
pub mod dataset;
pub mod encoder;
pub mod neighborhood;
pub mod rng;
pub mod state;
pub mod vrp;
