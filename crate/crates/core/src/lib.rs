//! Exact inference, restricted graph ensembles, information-theoretic
//! sample-complexity bounds, and Monte Carlo maximum-likelihood decoding
//! experiments for ferromagnetic Ising model selection under exact and
//! approximate (edit-distance) recovery criteria.
//!
//! Everything is computed per connected component by exhaustive spin
//! enumeration, carried in log domain, and seeded so that results are
//! bit-identical across runs and worker counts.

pub mod bounds;
pub mod decoders;
pub mod ensembles;
pub mod error;
pub mod graph;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sample;
pub mod verify;

pub use error::{Error, Result};
pub use graph::Graph;
pub use model::IsingModel;
pub use sample::SampleMatrix;
