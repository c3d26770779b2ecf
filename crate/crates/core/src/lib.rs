//! Quasi-inverses of quantum channels and classical stochastic channels.
//!
//! Channels are stored as superoperators, Choi matrices, Kraus sets or affine
//! pairs over a Gell-Mann type basis; see [`channel`] for the index conventions.

pub mod basis;
pub mod channel;
pub mod classical;
pub mod constructors;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod ensembles;
pub mod linalg;
pub mod lp;
pub mod qinvert;
pub mod state;
pub mod unitary_opt;

pub use basis::OperatorBasis;
pub use channel::{AffinePair, ChannelRep, ChoiMatrix, KrausSet, Superoperator, ValidationReport};
pub use classical::{ClassicalQiResult, StochasticMatrix};
pub use error::{QinvError, Result};
pub use state::{BlochVector, DensityMatrix};
