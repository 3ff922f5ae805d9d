//! Interpretable matrix completion.
//!
//! A partially observed `n x m` matrix `A` is completed as `X = U Bₛᵀ`, where
//! `Bₛ` holds exactly `k` columns selected from a known `m x p` feature
//! matrix `B`. Selecting the columns is a binary convex problem, solved here
//! by outer approximation: [`drivers::cutplanes`] uses exact cuts and
//! [`drivers::optcomplete`] builds cuts from row and column subsamples. The
//! master problem over the `k`-subsets is solved by the branch-and-bound in
//! [`master`].

pub mod bench;
pub mod config;
pub mod drivers;
pub mod error;
pub mod evaluator;
pub mod io;
pub mod linalg;
pub mod master;
pub mod matrix;
pub mod result;
pub mod sampler;
pub mod support;
pub mod two_sided;

pub use config::{ProblemConfig, WarmStartKind};
pub use error::{Error, Result};
pub use evaluator::{Cut, RowFill};
pub use matrix::{FeatureMatrix, MaskedMatrix, Row};
pub use result::{CompletionResult, Diagnostics, TracePoint};
pub use support::Support;
