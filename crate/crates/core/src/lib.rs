//! Bivariate partial information decompositions built on channel deficiency,
//! plus Blackwell sufficiency tests, Le Cam deficiency, and decision-risk
//! bound audits, for discrete and jointly Gaussian (M, X, Y) triples.

pub mod blackwell;
pub mod assembly;
pub mod broja;
pub mod config;
pub mod corpus;
pub mod delta;
pub mod io;
pub mod ipid;
pub mod lambda;
pub mod lp;
pub mod error;
pub mod prob;
pub mod risk;

pub use error::{Error, Result};
