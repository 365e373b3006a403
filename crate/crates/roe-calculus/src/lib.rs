//! A desk-scale calculus of metrics on disjoint unions of finite metric
//! spaces and of the finite-propagation operators they control.
//!
//! The building blocks:
//!
//! - [`space::FiniteMetricSpace`]: labeled points with exact pairwise
//!   distances, plus axiom validation and growth functions.
//! - [`glue::GlueMetric`]: a metric on X ⊔ Y extending d_X and d_Y;
//!   composition is min-plus, the adjoint is the transpose, and d⁰ is the
//!   identity morphism on two copies of a space.
//! - [`almost_isometry::PartialMap`]: maps of bounded additive distortion
//!   and the glue metrics they induce.
//! - [`operator::FinitePropagationOperator`]: sparse complex matrices with
//!   propagation measured against a glue metric; width-1 band
//!   decomposition and factorization through a middle space.
//! - [`order`]: the domination order and equivalence proxies over
//!   families of truncations, with growth diagnostics and obstruction
//!   certificates.
//! - [`catalog`]: deterministic generators for every space, map, and
//!   family used by tests and the CLI.

pub mod almost_isometry;
pub mod catalog;
pub mod error;
pub mod family;
pub mod glue;
pub mod io;
pub mod matching;
pub mod operator;
pub mod order;
pub mod space;

pub use almost_isometry::{
    extract_close_map, near_identity_check, sandwich_check, DefectReport, ExtractOutcome,
    NearIdentityReport, PartialMap, SandwichReport,
};
pub use error::{Error, Result};
pub use family::MetricFamily;
pub use glue::{identity_glue, GlueMetric};
pub use operator::{
    band_decompose, factor_through, propagation_bound_check, Band, BandDecomposition, BandFactor,
    FinitePropagationOperator, PropagationBoundReport,
};
pub use order::{
    close_pair_matching, domination_profile, equivalence_check, idempotent_check, inv_semi_check,
    maximality_inequality_check, order_check, selfadjoint_check, upper_bound_feasibility,
    ClosePairMatching, DominationProfile, EquivalenceVerdict, IdempotentReport, InvSemiReport,
    MaximalityReport, ObstructionCertificate, OrderRelation, OrderVerdict, SelfadjointReport,
    UpperBoundOutcome,
};
pub use space::{FiniteMetricSpace, ValidationReport, Violation, ViolationKind};

/// Absolute tolerance for all metric comparisons. Catalog scenarios use
/// dyadic values, so their equality checks are exact; the tolerance guards
/// everything else.
pub const TOL: f64 = 1e-9;
