//! Surface-code simulation with soft-information decoding.
//!
//! The crate is organised bottom-up:
//!
//! * [`chain_complex`]: indexed hypergraphs and GF(2) chains.
//! * [`surface_code`]: rotated surface code layout, base decoding graphs,
//!   residual classification and weighted minimum distance.
//! * [`soft_measurement`]: Gaussian and amplitude-damping readout models.
//! * [`noise_models`]: graphical noise models (phenomenological and circuit)
//!   and shot sampling.
//! * [`decoding_graph`]: decoding graph with ghost vertex and soft edges.
//! * [`mwpm_decoder`] and [`uf_decoder`]: the two decoders.
//! * [`montecarlo`]: trial protocol, statistics, threshold fits and sweeps.
//! * [`validation`]: sampled identity checks and readout simulation.

pub mod chain_complex;
pub mod decoding_graph;
pub mod error;
pub mod montecarlo;
pub mod mwpm_decoder;
pub mod noise_models;
pub mod numerics;
pub mod soft_measurement;
pub mod surface_code;
pub mod uf_decoder;
pub mod validation;

pub use error::{Error, Result};
