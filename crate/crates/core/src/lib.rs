//! Optimal cut-points of binomial group testing procedures.
//!
//! A binomial group testing (BGT) procedure screens cohorts of items that
//! are independently defective with prevalence `p`. Pooling pays off only
//! while `p` is small; each procedure stops beating one-by-one testing at
//! its own optimal cut-point (OCP), and no procedure survives past the
//! universal cut-point `(3 - sqrt(5)) / 2`.
//!
//! This crate locates the OCP by treating the prevalence as the control
//! parameter of the flow `dn/dt = t(n, p) - 1` over the (continuously
//! extended) cohort parameter `n`: the fixed-point locus is a curve
//! `n -> p_n`, the OCP is its supremum, and the shape of the curve at the
//! supremum classifies the bifurcation (`b0`, `b1`, `b2`). The discrete
//! (integer-cohort) cut-point is recovered both from the stationary point
//! and by exhaustive integer scan, and every closed-form mean is
//! cross-validated by discrete-event Monte-Carlo simulation of the actual
//! protocols.
//!
//! Modules:
//! - [`procedures`]: the registry of rates, means and derivatives,
//! - [`assumptions`]: numerical audit of the modeling assumptions,
//! - [`bifurcation`]: curve tracing, stationary system, classification,
//! - [`discrete`]: integer-scale cut-point recovery,
//! - [`simulate`]: Monte-Carlo protocol simulation,
//! - [`report`]: combined reports, CSV/SVG emission.

pub mod assumptions;
pub mod bifurcation;
pub mod discrete;
mod error;
mod numeric;
pub mod procedures;
pub mod report;
pub mod simulate;

pub use error::{CutpointError, Result};
pub use procedures::{ucp, CohortParam, Prevalence, Procedure};
