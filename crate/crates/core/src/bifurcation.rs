//! Bifurcation analysis of the testing-rate flow `dn/dt = t(n, p) - 1`.
//!
//! Treating the prevalence `p` as a control parameter, the fixed points of
//! the flow are the pairs with `t(n, p) = 1`. Monotonicity of the rate in
//! `p` makes the fixed-point locus the graph of a differentiable map
//! `n -> p_n` on `(c, inf)`, and the continuous-scale optimal cut-point
//! (COCP) is the supremum of that curve. The supremum is attained either at
//! an interior stationary point (solving `t = 1`, `dt/dn = 0` jointly) or in
//! the limit toward a domain boundary, which yields the three bifurcation
//! types:
//!
//! - `b0`: the curve is constant; every `n` is a fixed point at the
//!   cut-point,
//! - `b1`: the supremum is a boundary limit and is not itself a fixed point,
//! - `b2`: an interior maximum attains the cut-point, necessarily below UCP.
//!
//! Along the curve, the implicit-function derivative is
//! `dp_n/dn = -(dt/dn) / (dt/dp)`.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

use crate::error::{CutpointError, Result};
use crate::numeric::{bisect, central_diff, log_spaced, neville};
use crate::procedures::{ucp, Prevalence, Procedure};

/// Lower edge of every prevalence search; the interval `(0, UCP]` is open
/// at zero.
pub const P_MIN: f64 = 1e-12;
/// Bisection brackets on `p` are shrunk below this width.
pub const BRACKET_TOL: f64 = 1e-13;
/// Every emitted curve point satisfies `|t(n, p_n) - 1|` below this.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Default upper end of the traced domain; limits at infinity are
/// extrapolated in `1/n` from beneath it.
pub const N_MAX: f64 = 1e6;

/// Offset used to approach the open boundary at `c`.
const C_OFFSET: f64 = 1e-6;
/// A curve whose total `p_n` variation stays below this is classified `b0`.
const FLATNESS_TOL: f64 = 1e-9;
/// Stationary-system candidates are Newton-polished below this residual.
const NEWTON_TOL: f64 = 1e-11;
/// Sample count for the sign-change scan in [`scan_all_roots`].
const SCAN_POINTS: usize = 1024;
/// Curve resolution used by classification and stationary-point bracketing.
const CLASSIFY_STEPS: usize = 512;

/// One sample of the inverted bifurcation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: f64,
    /// Unique root of `t(n, p) = 1` in `(0, UCP]`.
    pub p_n: f64,
    /// Implicit-function derivative `-(dt/dn) / (dt/dp)` at `(n, p_n)`.
    pub dp_dn: f64,
    /// `|t(n, p_n) - 1|` after root refinement.
    pub residual: f64,
}

/// Sampled bifurcation curve of one procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationCurve {
    pub procedure: String,
    pub points: Vec<CurvePoint>,
    pub n_domain: (f64, f64),
}

impl BifurcationCurve {
    pub fn max_p(&self) -> f64 {
        self.points.iter().map(|pt| pt.p_n).fold(f64::MIN, f64::max)
    }

    pub fn min_p(&self) -> f64 {
        self.points.iter().map(|pt| pt.p_n).fold(f64::MAX, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BifurcationType {
    B0,
    B1,
    B2,
}

impl BifurcationType {
    pub fn as_str(self) -> &'static str {
        match self {
            BifurcationType::B0 => "b0",
            BifurcationType::B1 => "b1",
            BifurcationType::B2 => "b2",
        }
    }
}

impl fmt::Display for BifurcationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Continuous-scale cut-point with its classification and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutPointResult {
    pub procedure: String,
    /// Continuous-scale optimal cut-point `p_{X,c}`.
    pub cocp: f64,
    pub bifurcation_type: BifurcationType,
    /// Stationary point attaining the maximum (`b2` only).
    pub n_star: Option<f64>,
    /// Curve limit toward `n -> c+`, extrapolated and clamped to UCP.
    pub limit_at_c: f64,
    /// Curve limit toward `n -> inf`, Richardson-extrapolated in `1/n`.
    pub limit_at_infinity: f64,
    /// All interior solutions of `t = 1`, `dt/dn = 0`.
    pub system_solutions: Vec<(f64, f64)>,
}

/// Solve `t(n, p) = 1` for the unique `p` in `(0, UCP]` at fixed `n > c`.
///
/// Bracketed bisection refined until the bracket is narrower than
/// [`BRACKET_TOL`]; monotonicity of the rate in `p` pins the root. A rate
/// that stays at or above 1 across the scan signals an (M4) violation at
/// this `n`; a rate still below 1 at UCP signals an (M3) violation (the
/// root lies above UCP).
pub fn solve_p_n(proc: Procedure, n: f64) -> Result<f64> {
    ensure_continuous(proc, "solve_p_n")?;
    if n.is_nan() || n <= proc.c() {
        return Err(CutpointError::Domain(format!(
            "solve_p_n needs n > c = {}, got n = {n}",
            proc.c()
        )));
    }
    root_below_ucp(proc, n)
}

/// Root search shared with the discrete scan, which also evaluates exactly
/// at the boundary `n = c`.
pub(crate) fn root_below_ucp(proc: Procedure, n: f64) -> Result<f64> {
    let f = |p: f64| proc.rate_continuous(n, Prevalence::new(p).unwrap()) - 1.0;
    let f_hi = f(ucp());
    if f_hi < 0.0 {
        return Err(CutpointError::RootAboveUcp { n });
    }
    if f_hi == 0.0 {
        return Ok(ucp());
    }
    let f_lo = f(P_MIN);
    if f_lo > 0.0 {
        return Err(CutpointError::NoRoot { n });
    }
    if f_lo == 0.0 {
        return Ok(P_MIN);
    }
    Ok(bisect(P_MIN, ucp(), f, BRACKET_TOL))
}

/// `dp_n/dn` at a point of the curve, via closed-form partials where the
/// procedure registers them and central differences (`h = 1e-6 * scale`)
/// otherwise.
pub(crate) fn curve_derivative(proc: Procedure, n: f64, p_n: f64) -> f64 {
    let p = Prevalence::new(p_n).unwrap();
    let dt_dn = proc.dt_dn(n, p).unwrap_or_else(|| {
        central_diff(|x| proc.rate_continuous(x, p), n, 1e-6 * n)
    });
    let dt_dp = proc.dt_dp(n, p).unwrap_or_else(|| {
        let h = 1e-6 * p_n;
        central_diff(
            |x| proc.rate_continuous(n, Prevalence::new(x).unwrap()),
            p_n,
            h,
        )
    });
    -dt_dn / dt_dp
}

fn curve_point(proc: Procedure, n: f64) -> Result<CurvePoint> {
    let p_n = root_below_ucp(proc, n)?;
    let residual = (proc.rate_continuous(n, Prevalence::new(p_n).unwrap()) - 1.0).abs();
    debug_assert!(residual < RESIDUAL_TOL, "residual {residual} at n = {n}");
    Ok(CurvePoint {
        n,
        p_n,
        dp_dn: curve_derivative(proc, n, p_n),
        residual,
    })
}

/// Trace the curve `n -> p_n` on a log-spaced grid of `steps >= 2` points
/// covering `[n_lo, n_hi]`.
///
/// Points are solved independently (fanning out across worker threads) and
/// merged in grid order, so the result does not depend on the worker count.
/// Root-finding failures propagate tagged with the offending `n`.
pub fn trace_curve(proc: Procedure, n_lo: f64, n_hi: f64, steps: usize) -> Result<BifurcationCurve> {
    ensure_continuous(proc, "trace_curve")?;
    if !(n_lo >= proc.c() && n_lo < n_hi) {
        return Err(CutpointError::Domain(format!(
            "need c <= n_lo < n_hi, got n_lo = {n_lo}, n_hi = {n_hi}, c = {}",
            proc.c()
        )));
    }
    if steps < 2 {
        return Err(CutpointError::Domain(format!(
            "need at least 2 steps, got {steps}"
        )));
    }
    let grid = log_spaced(n_lo, n_hi, steps);
    let points: Vec<CurvePoint> = grid
        .par_iter()
        .map(|&n| curve_point(proc, n))
        .collect::<Result<_>>()?;
    Ok(BifurcationCurve {
        procedure: proc.name().to_string(),
        points,
        n_domain: (n_lo, n_hi),
    })
}

/// Solve the stationary system `t(n, p) = 1`, `dt/dn(n, p) = 0` on
/// `(c, N_MAX] x (0, UCP]`.
///
/// Because `dt/dp > 0` on the curve, the system is equivalent to
/// `dp_n/dn = 0` along the traced curve, which turns the search into
/// one-dimensional sign-change bracketing; each bracket is then polished by
/// damped two-dimensional Newton iteration to residuals below `1e-11`. An
/// empty result is valid and signals a boundary (`b1`) maximum.
pub fn solve_stationary_system(proc: Procedure) -> Result<Vec<(f64, f64)>> {
    ensure_continuous(proc, "solve_stationary_system")?;
    let curve = trace_curve(proc, proc.c() + C_OFFSET, N_MAX, CLASSIFY_STEPS)?;
    stationary_from_curve(proc, &curve)
}

pub(crate) fn stationary_from_curve(
    proc: Procedure,
    curve: &BifurcationCurve,
) -> Result<Vec<(f64, f64)>> {
    let pts = &curve.points;
    let mut solutions: Vec<(f64, f64)> = Vec::new();

    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let candidate_n = if a.dp_dn == 0.0 {
            Some(a.n)
        } else if a.dp_dn.signum() != b.dp_dn.signum() && b.dp_dn != 0.0 {
            let slope = |n: f64| {
                let p_n = root_below_ucp(proc, n).expect("bracket interior stays solvable");
                curve_derivative(proc, n, p_n)
            };
            Some(bisect(a.n, b.n, slope, 1e-9 * b.n))
        } else {
            None
        };

        if let Some(n0) = candidate_n {
            let p0 = root_below_ucp(proc, n0)?;
            let (n, p) = newton_polish(proc, n0, p0);
            let duplicate = solutions
                .iter()
                .any(|&(sn, _)| (sn - n).abs() <= 1e-6 * n.max(1.0));
            if !duplicate && n > proc.c() && n <= N_MAX && p > 0.0 && p <= ucp() + 1e-12 {
                solutions.push((n, p));
            }
        }
    }
    Ok(solutions)
}

/// Damped 2-D Newton on `F = (t - 1, dt/dn)` from a near-solution seed.
fn newton_polish(proc: Procedure, mut n: f64, mut p: f64) -> (f64, f64) {
    let t_n = |n: f64, p: Prevalence| {
        proc.dt_dn(n, p)
            .unwrap_or_else(|| central_diff(|x| proc.rate_continuous(x, p), n, 1e-6 * n))
    };
    let t_p = |n: f64, p: Prevalence| {
        proc.dt_dp(n, p).unwrap_or_else(|| {
            central_diff(
                |x| proc.rate_continuous(n, Prevalence::new(x).unwrap()),
                p.value(),
                1e-6 * p.value(),
            )
        })
    };

    for _ in 0..60 {
        let pv = Prevalence::new(p).unwrap();
        let f1 = proc.rate_continuous(n, pv) - 1.0;
        let f2 = t_n(n, pv);
        if f1.abs() < NEWTON_TOL && f2.abs() < NEWTON_TOL {
            break;
        }
        let j11 = t_n(n, pv);
        let j12 = t_p(n, pv);
        let h = 1e-7 * n;
        let j21 = (t_n(n + h, pv) - t_n(n - h, pv)) / (2.0 * h);
        let hp = 1e-7 * p;
        let j22 = (t_n(n, Prevalence::new(p + hp).unwrap())
            - t_n(n, Prevalence::new(p - hp).unwrap()))
            / (2.0 * hp);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let mut dn = -(f1 * j22 - f2 * j12) / det;
        let mut dp = -(j11 * f2 - j21 * f1) / det;
        // Halve the step until it stays inside the open domain.
        for _ in 0..40 {
            let (nn, np) = (n + dn, p + dp);
            if nn > proc.c() && np > 0.0 && np < 1.0 {
                break;
            }
            dn *= 0.5;
            dp *= 0.5;
        }
        n += dn;
        p += dp;
    }
    (n, p)
}

/// Classify the bifurcation and return the continuous cut-point.
///
/// Decision order: a curve flat within `1e-9` is `b0` (its constant value is
/// the cut-point); otherwise an interior stationary maximum that attains the
/// curve supremum is `b2`; otherwise `b1`, whose cut-point is the larger of
/// the two boundary limits.
pub fn classify_and_find_cocp(proc: Procedure) -> Result<CutPointResult> {
    ensure_continuous(proc, "classify_and_find_cocp")?;
    let curve = trace_curve(proc, proc.c() + C_OFFSET, N_MAX, CLASSIFY_STEPS)?;
    let system_solutions = stationary_from_curve(proc, &curve)?;

    let limit_at_c = limit_toward_c(proc)?;
    let limit_at_infinity = limit_toward_infinity(proc)?;

    let (bifurcation_type, cocp, n_star) = decide_bifurcation(
        curve.max_p(),
        curve.min_p(),
        &system_solutions,
        limit_at_c,
        limit_at_infinity,
    );

    Ok(CutPointResult {
        procedure: proc.name().to_string(),
        cocp,
        bifurcation_type,
        n_star,
        limit_at_c,
        limit_at_infinity,
        system_solutions,
    })
}

/// The classification decision itself, on already-computed curve evidence.
/// No registered procedure exercises `b0`, so the branch is kept honest by
/// direct tests on synthetic inputs.
fn decide_bifurcation(
    curve_max_p: f64,
    curve_min_p: f64,
    solutions: &[(f64, f64)],
    limit_at_c: f64,
    limit_at_infinity: f64,
) -> (BifurcationType, f64, Option<f64>) {
    if curve_max_p - curve_min_p < FLATNESS_TOL {
        return (BifurcationType::B0, curve_max_p.min(ucp()), None);
    }
    if let Some(&(n_s, p_s)) = solutions.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
        if p_s >= curve_max_p - 1e-7 {
            return (BifurcationType::B2, p_s, Some(n_s));
        }
    }
    let cocp = limit_at_c.max(limit_at_infinity).min(ucp());
    (BifurcationType::B1, cocp, None)
}

/// Curve limit toward the open boundary at `c`: `p_n` is sampled at
/// `c + 1e-6 * {1, 1/2, 1/4}` and extrapolated to `n = c`. The single-point
/// value at `c + 1e-6` carries an `O(1e-6 * slope)` bias that the
/// extrapolation removes.
fn limit_toward_c(proc: Procedure) -> Result<f64> {
    let offsets = [C_OFFSET, 0.5 * C_OFFSET, 0.25 * C_OFFSET];
    let mut ps = [0.0; 3];
    for (i, &h) in offsets.iter().enumerate() {
        ps[i] = root_below_ucp(proc, proc.c() + h)?;
    }
    Ok(neville(&offsets, &ps, 0.0).clamp(0.0, ucp()))
}

/// Curve limit toward infinity, Richardson-extrapolated in `x = 1/n` from
/// `n = 1e4, 1e5, 1e6` (the rate limits at UCP converge like `1/n`).
fn limit_toward_infinity(proc: Procedure) -> Result<f64> {
    let ns = [1e4, 1e5, N_MAX];
    let xs: Vec<f64> = ns.iter().map(|n| 1.0 / n).collect();
    let mut ps = [0.0; 3];
    for (i, &n) in ns.iter().enumerate() {
        ps[i] = root_below_ucp(proc, n)?;
    }
    Ok(neville(&xs, &ps, 0.0).clamp(0.0, ucp()))
}

/// All roots of `t(n, p) = 1` in `(0, UCP]` at fixed `n`, on the extended
/// domain (`n > 0`): a uniform 1024-point sign-change scan with bisection on
/// every bracket. No root is a valid outcome; the count always equals the
/// scan's sign-change count by construction.
pub fn scan_all_roots(proc: Procedure, n: f64) -> Result<Vec<f64>> {
    ensure_continuous(proc, "scan_all_roots")?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(CutpointError::Domain(format!(
            "extended domain needs n > 0, got {n}"
        )));
    }
    let f = |p: f64| proc.rate_continuous(n, Prevalence::new(p).unwrap()) - 1.0;
    let step = (ucp() - P_MIN) / (SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            if i == SCAN_POINTS - 1 {
                ucp()
            } else {
                P_MIN + step * i as f64
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&p| f(p)).collect();

    let mut roots = Vec::new();
    for i in 0..SCAN_POINTS - 1 {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        } else if values[i].signum() != values[i + 1].signum() && values[i + 1] != 0.0 {
            roots.push(bisect(grid[i], grid[i + 1], f, BRACKET_TOL));
        }
    }
    if values[SCAN_POINTS - 1] == 0.0 {
        roots.push(ucp());
    }
    Ok(roots)
}

fn ensure_continuous(proc: Procedure, operation: &'static str) -> Result<()> {
    if proc.is_continuous() {
        Ok(())
    } else {
        Err(CutpointError::NotContinuous {
            procedure: proc.name(),
            operation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn dorfman_roots_match_analytic_curve() {
        // p_n = 1 - (1/n)^(1/n)
        let p4 = solve_p_n(Procedure::Dorfman, 4.0).unwrap();
        assert!((p4 - 0.292_893_218_813_452_4).abs() < 1e-12);
        let p3 = solve_p_n(Procedure::Dorfman, 3.0).unwrap();
        assert!((p3 - 0.306_638_725_649_365_3).abs() < 1e-12);
        let p10 = solve_p_n(Procedure::Dorfman, 10.0).unwrap();
        assert!((p10 - 0.205_671_765_275_718).abs() < 1e-12);
    }

    #[test]
    fn a2_root_at_five() {
        let p5 = solve_p_n(Procedure::SquaredArray, 5.0).unwrap();
        assert!((p5 - 0.2498).abs() < 1e-4);
        assert!((p5 - 0.249_790_039_114_117).abs() < 1e-12);
    }

    #[test]
    fn solve_p_n_rejects_bad_domains() {
        assert!(matches!(
            solve_p_n(Procedure::Dorfman, 2.0),
            Err(CutpointError::Domain(_))
        ));
        assert!(matches!(
            solve_p_n(Procedure::PairwiseTesting, 5.0),
            Err(CutpointError::NotContinuous { .. })
        ));
    }

    #[test]
    fn traced_dorfman_curve_matches_analytic_formula() {
        let curve = trace_curve(Procedure::Dorfman, 2.01, 100.0, 256).unwrap();
        assert_eq!(curve.points.len(), 256);
        for pt in &curve.points {
            let analytic = Procedure::Dorfman.analytic_p_n(pt.n).unwrap();
            assert!(
                (pt.p_n - analytic).abs() < 1e-9,
                "n={}: {} vs {}",
                pt.n,
                pt.p_n,
                analytic
            );
            assert!(pt.residual < RESIDUAL_TOL);
        }
        assert!(curve.points.windows(2).all(|w| w[0].n < w[1].n));
    }

    #[test]
    fn md_curve_is_decreasing_from_ucp() {
        let curve = trace_curve(Procedure::ModifiedDorfman, 2.01, 1000.0, 256).unwrap();
        assert!(curve
            .points
            .windows(2)
            .all(|w| w[0].p_n > w[1].p_n), "monotone decreasing");
        // Limit at n -> 2+ is UCP.
        let near_c = root_below_ucp(Procedure::ModifiedDorfman, 2.0 + 1e-9).unwrap();
        assert!((near_c - ucp()).abs() < 1e-7);
    }

    #[test]
    fn a2_curve_has_single_interior_maximum() {
        let curve = trace_curve(Procedure::SquaredArray, 3.01, 100.0, 256).unwrap();
        let max_idx = curve
            .points
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.p_n.total_cmp(&b.1.p_n))
            .unwrap()
            .0;
        assert!(max_idx > 0 && max_idx < curve.points.len() - 1);
        assert!((curve.points[max_idx].n - 4.4535).abs() < 0.15);
        // Single sign change of dp/dn across the whole curve.
        let changes = curve
            .points
            .windows(2)
            .filter(|w| w[0].dp_dn.signum() != w[1].dp_dn.signum())
            .count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn stationary_system_dorfman() {
        let sols = solve_stationary_system(Procedure::Dorfman).unwrap();
        assert_eq!(sols.len(), 1);
        let (n, p) = sols[0];
        assert!((n - E).abs() < 1e-9, "n* = {n}");
        assert!((p - 0.307_799_372_444_653_6).abs() < 1e-11, "p* = {p}");
    }

    #[test]
    fn stationary_system_a2() {
        let sols = solve_stationary_system(Procedure::SquaredArray).unwrap();
        assert_eq!(sols.len(), 1);
        let (n, p) = sols[0];
        assert!((n - 4.453_524_013_247_95).abs() < 1e-7, "n* = {n}");
        assert!((p - 0.251_583_639_879_395).abs() < 1e-9, "p* = {p}");
    }

    #[test]
    fn stationary_system_empty_for_md() {
        assert!(solve_stationary_system(Procedure::ModifiedDorfman)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn classify_dorfman_b2() {
        let res = classify_and_find_cocp(Procedure::Dorfman).unwrap();
        assert_eq!(res.bifurcation_type, BifurcationType::B2);
        assert!((res.cocp - 0.307_799_372_444_653_6).abs() < 1e-9);
        assert!((res.n_star.unwrap() - E).abs() < 1e-6);
        assert!(res.cocp < ucp());
    }

    #[test]
    fn decision_covers_all_three_types() {
        // b0: a flat curve is the cut-point itself, no stationary point.
        let (ty, cocp, n_star) = decide_bifurcation(0.25, 0.25 - 1e-10, &[], 0.25, 0.1);
        assert_eq!(ty, BifurcationType::B0);
        assert_eq!(cocp, 0.25);
        assert!(n_star.is_none());

        // b2: the largest stationary p attains the curve maximum.
        let sols = [(3.0, 0.2), (7.0, 0.31)];
        let (ty, cocp, n_star) = decide_bifurcation(0.31, 0.05, &sols, 0.1, 0.0);
        assert_eq!(ty, BifurcationType::B2);
        assert_eq!(cocp, 0.31);
        assert_eq!(n_star, Some(7.0));

        // b1 with no solutions at all: the larger boundary limit wins.
        let (ty, cocp, _) = decide_bifurcation(0.38, 0.01, &[], 0.38, 0.002);
        assert_eq!(ty, BifurcationType::B1);
        assert_eq!(cocp, 0.38);

        // b1 despite an interior stationary point (a dip, not the maximum).
        let (ty, cocp, n_star) = decide_bifurcation(0.38, 0.01, &[(5.0, 0.02)], 0.38, 0.002);
        assert_eq!(ty, BifurcationType::B1);
        assert_eq!(cocp, 0.38);
        assert!(n_star.is_none());

        // The reported cut-point never exceeds UCP.
        let (_, cocp, _) = decide_bifurcation(0.5, 0.5 - 1e-10, &[], 0.5, 0.5);
        assert!(cocp <= ucp());
    }

    #[test]
    fn classify_md_and_sterrett_b1() {
        for proc in [Procedure::ModifiedDorfman, Procedure::Sterrett] {
            let res = classify_and_find_cocp(proc).unwrap();
            assert_eq!(res.bifurcation_type, BifurcationType::B1, "{}", proc.name());
            assert!(
                (res.cocp - ucp()).abs() < 1e-9,
                "{}: cocp = {}",
                proc.name(),
                res.cocp
            );
            assert!(res.n_star.is_none());
            assert!(res.system_solutions.is_empty());
            assert!((res.limit_at_c - ucp()).abs() < 1e-9);
            assert!(res.limit_at_infinity < 0.01);
        }
    }

    #[test]
    fn scan_finds_unique_roots_on_standard_domains() {
        for (proc, ns) in [
            (Procedure::Dorfman, [3.0, 10.0, 700.0]),
            (Procedure::ModifiedDorfman, [2.5, 10.0, 700.0]),
            (Procedure::Sterrett, [2.5, 10.0, 700.0]),
            (Procedure::SquaredArray, [3.5, 10.0, 700.0]),
        ] {
            for n in ns {
                let roots = scan_all_roots(proc, n).unwrap();
                assert_eq!(roots.len(), 1, "{} at n={n}", proc.name());
            }
        }
        let roots = scan_all_roots(Procedure::Dorfman, 10.0).unwrap();
        assert!((roots[0] - 0.205_671_765_275_718).abs() < 1e-10);
        let roots = scan_all_roots(Procedure::SquaredArray, 5.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.2498).abs() < 1e-4);
    }

    #[test]
    fn scan_count_matches_sign_changes_on_extended_domain() {
        // Oracle by construction: recount the sign changes independently.
        for n in [0.5, 1.0, 1.5, 2.0, 2.5] {
            let roots = scan_all_roots(Procedure::SquaredArray, n).unwrap();
            let f =
                |p: f64| Procedure::SquaredArray.rate_continuous(n, Prevalence::new(p).unwrap()) - 1.0;
            let step = (ucp() - P_MIN) / 1023.0;
            let mut changes = 0;
            let mut prev = f(P_MIN);
            for i in 1..1024 {
                let p = if i == 1023 { ucp() } else { P_MIN + step * i as f64 };
                let cur = f(p);
                if prev.signum() != cur.signum() {
                    changes += 1;
                }
                prev = cur;
            }
            assert_eq!(roots.len(), changes, "n={n}");
        }
    }

    #[test]
    fn rate_brackets_root_locally() {
        // Monotonicity in p: slightly above the root the rate exceeds 1,
        // slightly below it stays under.
        for (proc, n) in [
            (Procedure::Dorfman, 4.0),
            (Procedure::ModifiedDorfman, 4.0),
            (Procedure::Sterrett, 4.0),
            (Procedure::SquaredArray, 5.0),
        ] {
            let p_n = solve_p_n(proc, n).unwrap();
            let above = proc.rate_continuous(n, Prevalence::new(p_n + 1e-6).unwrap());
            let below = proc.rate_continuous(n, Prevalence::new(p_n - 1e-6).unwrap());
            assert!(above > 1.0 && below < 1.0, "{} at n={n}", proc.name());
        }
    }

    #[test]
    fn curve_derivative_matches_secant_slope() {
        for proc in [Procedure::Dorfman, Procedure::SquaredArray, Procedure::Sterrett] {
            let curve = trace_curve(proc, proc.c() + 0.5, 50.0, 4096).unwrap();
            let pts = &curve.points;
            let max_slope = pts.iter().map(|p| p.dp_dn.abs()).fold(0.0, f64::max);
            for i in 1..pts.len() - 1 {
                let secant = (pts[i + 1].p_n - pts[i - 1].p_n) / (pts[i + 1].n - pts[i - 1].n);
                let cd = pts[i].dp_dn;
                // A relative check is meaningless where dp/dn crosses zero
                // at the curve maximum; compare away from it.
                if cd.abs() > 0.1 * max_slope {
                    let rel = (secant - cd).abs() / cd.abs();
                    assert!(rel < 1e-4, "{} i={i} n={}: rel={rel}", proc.name(), pts[i].n);
                }
            }
        }
    }
}
