//! Finite-scale tools for epsilon-chain connectivity in metric spaces.
//!
//! The crate works on finite metric spaces and finite sequence prefixes.
//! Statements about limits are replaced by checks against an explicit
//! [`ToleranceSchedule`], and every such check reports `consistent` or
//! `falsified` rather than a proof.

pub mod approximation;
pub mod chain_graph;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod harness;
pub mod json;
pub mod metric;
pub mod moduli;
pub mod sequences;

pub use error::{Axiom, Error, Result};
pub use exec::Execution;
pub use metric::{MetricSpace, PointData, Provider, SparseVector};
