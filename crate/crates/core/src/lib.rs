//! Verification engine for gradient Ricci solitons on multiply warped
//! products `g = ds^2 + sum_j h_j(s)^2 g_j`.
//!
//! The crate is organised bottom up:
//!
//! * [`jet`] and [`expr`]: truncated Taylor arithmetic and the expression
//!   language used for warping functions and potentials.
//! * [`metric`] and [`catalog`]: the model description and the explicit
//!   solutions of the local classification.
//! * [`curvature`]: adapted-frame curvature (Ricci spectrum, Schouten,
//!   Weyl, Cotton and D components).
//! * [`analysis`]: residual tables, the two-eigenvalue identities, the
//!   three-eigenvalue obstruction search and the local type classifier.
//! * [`ode`]: the soliton ODE system with an adaptive integrator and
//!   conservation monitoring.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod curvature;
pub mod expr;
pub mod jet;
pub mod metric;
pub mod ode;

pub use catalog::{catalog_entry, CatalogId, CatalogKind};
pub use curvature::{connection_state, CurvatureError, FrameState};
pub use expr::{parse_expr, Expr, ParseError};
pub use jet::{Jet, Jet2, Jet3, Jet4, JetError};
pub use metric::{build_metric, FiberSpec, SolitonSpec, SpecError};
