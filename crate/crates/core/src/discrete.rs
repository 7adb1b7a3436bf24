//! Discrete-scale optimal cut-point (DOCP): the supremum of `p_n` over
//! integer cohort parameters.
//!
//! Two independent routes are provided. The recovery recipe evaluates the
//! curve only at the two integers flanking the interior stationary point
//! `n*` and takes the larger value; the brute-force scan maximizes over the
//! whole integer range and serves as the recipe's oracle. For boundary
//! (`b1`) bifurcations the recipe is inapplicable and the discrete cut-point
//! coincides with the continuous one.

use serde::Serialize;

use crate::bifurcation::{root_below_ucp, BifurcationType, CutPointResult};
use crate::error::{CutpointError, Result};
use crate::procedures::Procedure;

/// How a [`DiscreteCutPoint`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DocpMethod {
    /// Flanking-integer recovery around the stationary point.
    #[serde(rename = "flanking-integers")]
    FlankingIntegers,
    /// Exhaustive maximum over the integer scan range.
    #[serde(rename = "bruteforce")]
    BruteForce,
}

impl DocpMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DocpMethod::FlankingIntegers => "flanking-integers",
            DocpMethod::BruteForce => "bruteforce",
        }
    }
}

/// Discrete-scale cut-point together with the integer attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteCutPoint {
    pub docp: f64,
    pub achieving_n: u32,
    pub method: DocpMethod,
    /// `cocp - docp`, filled where the continuous cut-point is at hand.
    pub cocp_gap: Option<f64>,
}

/// Configuration of the brute-force integer scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteScanConfig {
    /// Upper end of the integer range; every known maximum sits at tiny `n`,
    /// and the curve is decreasing long before the default end.
    pub n_max: u32,
    /// Whether to evaluate at `n = c` itself. The bifurcation domain is open
    /// at `c`, but discrete analyses in the literature count from the
    /// smallest usable group, so the boundary is included by default.
    pub include_boundary: bool,
}

impl Default for DiscreteScanConfig {
    fn default() -> Self {
        Self {
            n_max: 512,
            include_boundary: true,
        }
    }
}

/// Recover the DOCP from the flanking integers of the stationary point:
/// `max(p_floor(n*), p_ceil(n*))`.
///
/// Needs an interior stationary point, so it applies to `b2` (and a
/// hypothetical `b0` carrying one). For `b1` results it signals
/// [`CutpointError::DiscreteRecoveryInapplicable`]; callers should then
/// report the discrete cut-point as coinciding with the continuous one.
pub fn docp_from_stationary(proc: Procedure, result: &CutPointResult) -> Result<DiscreteCutPoint> {
    let n_star = match (result.bifurcation_type, result.n_star) {
        (BifurcationType::B2 | BifurcationType::B0, Some(n_star)) => n_star,
        _ => {
            return Err(CutpointError::DiscreteRecoveryInapplicable {
                bifurcation_type: result.bifurcation_type.as_str(),
            })
        }
    };

    let mut best: Option<(f64, u32)> = None;
    for m in [n_star.floor(), n_star.ceil()] {
        if m < proc.c() || m < 1.0 {
            continue;
        }
        match root_below_ucp(proc, m) {
            Ok(p) => {
                if best.is_none_or(|(bp, _)| p > bp) {
                    best = Some((p, m as u32));
                }
            }
            // No contribution from integers whose root escapes (0, UCP].
            Err(CutpointError::RootAboveUcp { .. }) | Err(CutpointError::NoRoot { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let (docp, achieving_n) = best.ok_or_else(|| {
        CutpointError::Domain(format!(
            "no admissible integer flanks n* = {n_star} for {}",
            proc.name()
        ))
    })?;
    Ok(DiscreteCutPoint {
        docp,
        achieving_n,
        method: DocpMethod::FlankingIntegers,
        cocp_gap: Some(result.cocp - docp),
    })
}

/// Definitional DOCP restricted to `n <= cfg.n_max`: evaluate `p_n` at every
/// admissible integer and return the maximum. Integers whose root lies
/// above UCP contribute nothing.
pub fn docp_bruteforce(proc: Procedure, cfg: DiscreteScanConfig) -> Result<DiscreteCutPoint> {
    if !proc.is_continuous() {
        return Err(CutpointError::NotContinuous {
            procedure: proc.name(),
            operation: "docp_bruteforce",
        });
    }
    let c = proc.c();
    let boundary_is_integer = c.fract() == 0.0;
    let start = if cfg.include_boundary && boundary_is_integer {
        c as u32
    } else {
        c.floor() as u32 + 1
    };
    if cfg.n_max < start + 1 {
        return Err(CutpointError::Domain(format!(
            "scan range [{start}, {}] too small",
            cfg.n_max
        )));
    }

    let mut best: Option<(f64, u32)> = None;
    for m in start..=cfg.n_max {
        match root_below_ucp(proc, m as f64) {
            Ok(p) => {
                if best.is_none_or(|(bp, _)| p > bp) {
                    best = Some((p, m));
                }
            }
            Err(CutpointError::RootAboveUcp { .. }) | Err(CutpointError::NoRoot { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let (docp, achieving_n) = best.ok_or_else(|| {
        CutpointError::Domain(format!(
            "no integer in [{start}, {}] admits a root in (0, UCP] for {}",
            cfg.n_max,
            proc.name()
        ))
    })?;
    Ok(DiscreteCutPoint {
        docp,
        achieving_n,
        method: DocpMethod::BruteForce,
        cocp_gap: None,
    })
}
