//! Deterministic approximate counting of proper list 4-colorings on graphs
//! of maximum degree 3, by correlation decay on a marginal recursion.
//!
//! - [`instance`]: graphs, color lists, and the instance surgery the
//!   recursion needs.
//! - [`oracle`]: exact counts and marginals by backtracking.
//! - [`estimator`]: depth-truncated marginal recursion.
//! - [`counter`]: counting by self-reduction.
//! - [`decay`]: grid re-verification of the contraction-rate inequalities.
//! - [`generators`]: test corpora.

pub mod counter;
pub mod decay;
pub mod estimator;
pub mod generators;
pub mod instance;
pub mod oracle;
pub mod scalar;

pub use counter::{approx_count, CountConfig, CountError, CountResult, CountValue, DepthPolicy};
pub use estimator::{
    classify_boundary, estimate_marginal, estimate_marginals, BoundaryClass, BoundaryKind, EstimateError,
    Estimator, EstimatorConfig,
};
pub use instance::{Color, ColorLists, ColorSet, Graph, Instance, InstanceError, Vertex};
pub use oracle::{count_colorings, exact_marginal, Oracle, OracleError};
pub use scalar::{Backend, Probability, Scalar};
