//! Random walks on comb-type graphs: exact kernels, pair simulations and
//! dyadic collision statistics.

pub mod cli;
pub mod config;
pub mod ensemble;
pub mod graph;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod statistics;
