use thiserror::Error;

use crate::energy::EnergyError;
use crate::modulation::ModulationError;
use crate::spectrum::SpectrumError;
use crate::topology::TopologyError;
use crate::virtual_topology::{FlowId, VirtualTopologyError};

/// Failures of a simulation run. Apart from `InvalidRequest` and
/// `Config`, these indicate a broken internal invariant.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Modulation(#[from] ModulationError),
    #[error("spectrum state: {0}")]
    Spectrum(#[from] SpectrumError),
    #[error("virtual topology: {0}")]
    VirtualTopology(#[from] VirtualTopologyError),
    #[error("energy ledger: {0}")]
    Energy(#[from] EnergyError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("flow {0:?} is not active")]
    UnknownFlow(FlowId),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
