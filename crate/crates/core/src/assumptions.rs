//! Numerical audit of the modeling assumptions (M0)-(M4) behind the
//! cut-point machinery.
//!
//! - (M0): a lower domain constant `c >= 2` exists below which the procedure
//!   is a-priori useless. The checker records `c`; "uselessness" on `[1, c)`
//!   is not something it attempts to verify.
//! - (M1): the mean extends to a differentiable function of real `n`. Not
//!   numerically checkable; the report carries each procedure's trust flag
//!   verbatim.
//! - (M2): `p -> M(n, p)` is strictly increasing on `(0, UCP]` for every
//!   `n > c`.
//! - (M3): `t(n, UCP) > 1` for every `n > c`.
//! - (M4): for every `n > c` there is a `p` in `(0, UCP)` with `t(n, p) < 1`.
//!
//! Every failing check carries a concrete counterexample point, and
//! identical grids produce bit-identical reports.

use serde::Serialize;

use crate::error::{CutpointError, Result};
use crate::numeric::{golden_min, log_spaced};
use crate::procedures::{ucp, CohortParam, Prevalence, Procedure};

/// Margin for calling a rate "strictly above 1" in the (M3) check. Points
/// with `t - 1 <=` this are counted as violations, which separates genuine
/// slack from boundary equality such as pairwise testing at UCP.
pub const M3_STRICTNESS_MARGIN: f64 = 1e-12;

const P_SCAN_LO: f64 = 1e-12;
const P_SCAN_POINTS: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M0Check {
    pub c: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M1Check {
    /// Differentiability is a modeling assumption taken on trust per
    /// procedure, not a property a grid audit can establish.
    pub trusted: bool,
}

/// First point at which the (M2) monotonicity audit failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum M2Violation {
    NonIncreasingMean {
        n: f64,
        p_lo: f64,
        p_hi: f64,
        mean_lo: f64,
        mean_hi: f64,
    },
    NonPositiveSlope {
        n: f64,
        p: f64,
        dt_dp: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M2Check {
    pub pass: bool,
    pub first_violation: Option<M2Violation>,
}

/// A refined interior extremum of `n -> t(n, UCP)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateExtremum {
    pub n: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M3Check {
    pub pass: bool,
    /// Smallest audited `t(n, UCP)`: the refined interior minimum when the
    /// profile has one, otherwise the grid minimum (for profiles decreasing
    /// toward the boundary this sits at the largest grid `n`).
    pub min_rate_at_ucp: f64,
    pub argmin_n: f64,
    pub interior_min: Option<RateExtremum>,
    pub interior_max: Option<RateExtremum>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M4Witness {
    pub n: f64,
    /// Largest scanned prevalence with `t(n, p) < 1`; `None` marks an (M4)
    /// violation at this `n`.
    pub witness_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct M4Check {
    pub pass: bool,
    pub witnesses: Vec<M4Witness>,
}

/// Combined audit of one procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub procedure: String,
    pub m0: M0Check,
    pub m1: M1Check,
    pub m2: M2Check,
    pub m3: M3Check,
    pub m4: M4Check,
}

impl AssumptionReport {
    /// Assumptions that stand in the way of the continuous cut-point
    /// machinery: failed checks plus an untrusted (M1).
    pub fn violated(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.m0.pass {
            v.push("M0");
        }
        if !self.m1.trusted {
            v.push("M1");
        }
        if !self.m2.pass {
            v.push("M2");
        }
        if !self.m3.pass {
            v.push("M3");
        }
        if !self.m4.pass {
            v.push("M4");
        }
        v
    }

    pub fn all_pass(&self) -> bool {
        self.violated().is_empty()
    }
}

/// Default `n` grid: 128 log-spaced points on `(c + 1e-3, 1e6]` for
/// continuously extendable procedures, the integers `2..=50` otherwise.
/// The span covers both boundary behaviors the limit arguments rely on.
pub fn default_n_grid(proc: Procedure) -> Vec<f64> {
    if proc.is_continuous() {
        log_spaced(proc.c() + 1e-3, 1e6, 128)
    } else {
        (2..=50).map(f64::from).collect()
    }
}

/// Default `p` grid: 128 log-spaced points on `(1e-12, UCP]`.
pub fn default_p_grid() -> Vec<f64> {
    log_spaced(P_SCAN_LO, ucp(), P_SCAN_POINTS)
}

/// (M2): for every grid `n`, the mean must increase across consecutive `p`
/// grid points, and the closed-form `dt/dp` (when the procedure registers
/// one) must not be negative at any grid point.
///
/// The audit works at floating-point resolution: at huge `n` the `q^n`
/// contribution underflows and the mean plateaus exactly, so only a
/// resolvable decrease (or a negative slope) is flagged as a violation,
/// never a representation plateau.
pub fn check_m2(proc: Procedure, n_grid: &[f64], p_grid: &[f64]) -> Result<M2Check> {
    validate_n_grid(proc, n_grid)?;
    validate_p_grid(p_grid)?;

    for &n in n_grid {
        let nv = CohortParam::new(n)?;
        let mut prev: Option<(f64, f64)> = None;
        for &p in p_grid {
            let mean = proc.mean(nv, Prevalence::new(p)?)?;
            if let Some((p_lo, mean_lo)) = prev {
                if mean < mean_lo {
                    return Ok(M2Check {
                        pass: false,
                        first_violation: Some(M2Violation::NonIncreasingMean {
                            n,
                            p_lo,
                            p_hi: p,
                            mean_lo,
                            mean_hi: mean,
                        }),
                    });
                }
            }
            prev = Some((p, mean));
        }
    }

    for &n in n_grid {
        for &p in p_grid {
            if let Some(slope) = proc.dt_dp(n, Prevalence::new(p)?) {
                if slope < 0.0 {
                    return Ok(M2Check {
                        pass: false,
                        first_violation: Some(M2Violation::NonPositiveSlope {
                            n,
                            p,
                            dt_dp: slope,
                        }),
                    });
                }
            }
        }
    }

    Ok(M2Check {
        pass: true,
        first_violation: None,
    })
}

/// (M3): `t(n, UCP) > 1` (with [`M3_STRICTNESS_MARGIN`]) at every grid `n`.
///
/// For continuously extendable procedures, interior local extrema of the
/// grid profile are refined by golden-section search and reported; when an
/// interior minimum exists it becomes the reported minimum.
pub fn check_m3(proc: Procedure, n_grid: &[f64]) -> Result<M3Check> {
    validate_n_grid(proc, n_grid)?;
    let at_ucp = Prevalence::new(ucp())?;

    let rates: Vec<f64> = n_grid
        .iter()
        .map(|&n| proc.rate(CohortParam::new(n)?, at_ucp))
        .collect::<Result<_>>()?;

    let pass = rates.iter().all(|&t| t - 1.0 > M3_STRICTNESS_MARGIN);

    let (mut argmin_idx, mut grid_min) = (0usize, rates[0]);
    for (i, &t) in rates.iter().enumerate() {
        if t < grid_min {
            grid_min = t;
            argmin_idx = i;
        }
    }

    let mut interior_min = None;
    let mut interior_max = None;
    if proc.is_continuous() {
        let rate_at = |n: f64| proc.rate_continuous(n, at_ucp);
        for i in 1..n_grid.len().saturating_sub(1) {
            if interior_min.is_none() && rates[i] <= rates[i - 1] && rates[i] <= rates[i + 1] {
                let (n, rate) = golden_min(n_grid[i - 1], n_grid[i + 1], rate_at, 1e-9);
                interior_min = Some(RateExtremum { n, rate });
            }
            if interior_max.is_none() && rates[i] >= rates[i - 1] && rates[i] >= rates[i + 1] {
                let (n, neg) = golden_min(n_grid[i - 1], n_grid[i + 1], |x| -rate_at(x), 1e-9);
                interior_max = Some(RateExtremum { n, rate: -neg });
            }
        }
    }

    let (min_rate_at_ucp, argmin_n) = match &interior_min {
        Some(ext) => (ext.rate, ext.n),
        None => (grid_min, n_grid[argmin_idx]),
    };

    Ok(M3Check {
        pass,
        min_rate_at_ucp,
        argmin_n,
        interior_min,
        interior_max,
    })
}

/// (M4): for every grid `n`, a log-spaced scan of `(1e-12, UCP)` must find
/// some `p` with `t(n, p) < 1`. The stored witness is the largest such
/// scanned prevalence.
pub fn check_m4(proc: Procedure, n_grid: &[f64]) -> Result<M4Check> {
    validate_n_grid(proc, n_grid)?;
    let p_scan = default_p_grid();

    let mut witnesses = Vec::with_capacity(n_grid.len());
    let mut pass = true;
    for &n in n_grid {
        let nv = CohortParam::new(n)?;
        let mut witness_p = None;
        for &p in p_scan.iter().rev() {
            if proc.rate(nv, Prevalence::new(p)?)? < 1.0 {
                witness_p = Some(p);
                break;
            }
        }
        if witness_p.is_none() {
            pass = false;
        }
        witnesses.push(M4Witness { n, witness_p });
    }

    Ok(M4Check { pass, witnesses })
}

/// Run every check on its default grid and assemble the full report.
pub fn check_all(proc: Procedure) -> Result<AssumptionReport> {
    let n_grid = default_n_grid(proc);
    let p_grid = default_p_grid();
    Ok(AssumptionReport {
        procedure: proc.name().to_string(),
        m0: M0Check {
            c: proc.c(),
            pass: proc.c() >= 2.0,
        },
        m1: M1Check {
            trusted: proc.is_continuous(),
        },
        m2: check_m2(proc, &n_grid, &p_grid)?,
        m3: check_m3(proc, &n_grid)?,
        m4: check_m4(proc, &n_grid)?,
    })
}

fn validate_n_grid(proc: Procedure, n_grid: &[f64]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(CutpointError::Domain("empty n grid".into()));
    }
    for &n in n_grid {
        if !n.is_finite() {
            return Err(CutpointError::Domain(format!("non-finite grid n = {n}")));
        }
        if proc.is_continuous() {
            if n <= proc.c() {
                return Err(CutpointError::Domain(format!(
                    "grid n = {n} outside ({}, inf) for {}",
                    proc.c(),
                    proc.name()
                )));
            }
        } else if n < proc.c() || n.fract() != 0.0 {
            return Err(CutpointError::Domain(format!(
                "grid n = {n} must be an integer >= {} for {}",
                proc.c(),
                proc.name()
            )));
        }
    }
    Ok(())
}

fn validate_p_grid(p_grid: &[f64]) -> Result<()> {
    if p_grid.len() < 2 {
        return Err(CutpointError::Domain(
            "p grid needs at least two points".into(),
        ));
    }
    if p_grid[0] <= 0.0 || *p_grid.last().unwrap() > ucp() {
        return Err(CutpointError::Domain(format!(
            "p grid must lie within (0, UCP], got [{}, {}]",
            p_grid[0],
            p_grid.last().unwrap()
        )));
    }
    if p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CutpointError::Domain(
            "p grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}
