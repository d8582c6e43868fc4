//! Discrete-event simulator for elastic optical networks with multi-hop,
//! multi-modulation allocation schemes.

pub mod config;
pub mod energy;
pub mod error;
pub mod modulation;
pub mod network;
pub mod rsa;
pub mod schemes;
pub mod simulator;
pub mod spectrum;
pub mod topology;
pub mod virtual_topology;

pub use error::SimError;
