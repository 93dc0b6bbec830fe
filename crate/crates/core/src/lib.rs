//! Simulation and analysis of computing with disordered ensembles of
//! excitable microspheres.
//!
//! The pipeline is: generate a disc ensemble and rasterise it into a
//! [`ConductiveMask`](ensemble::ConductiveMask); integrate FitzHugh-Nagumo
//! excitation on it ([`medium`]); record a simulated electrode array
//! ([`electrode`]); detect spikes ([`spikes`]); and decode them either into
//! two-input logic gates ([`gates`]) or into a k-bit mapping whose functional
//! graph and output functions are analysed ([`mapping`], [`graph`],
//! [`boolean`]).

pub mod boolean;
pub mod electrode;
pub mod ensemble;
pub mod error;
pub mod gates;
pub mod graph;
pub mod mapping;
pub mod medium;
pub mod snapshot;
pub mod spikes;

pub use error::{Error, Result};
