//! Registry of binomial group testing (BGT) procedures.
//!
//! Each procedure `X` screens a cohort of `N(n)` items that are independently
//! defective with prevalence `p`, and is characterized by
//!
//! - `M_X(n, p)`: expected total number of tests for the cohort,
//! - `t_X(n, p) = M_X(n, p) / N(n)`: expected tests per item.
//!
//! A procedure beats one-by-one testing exactly where `t_X < 1`. No BGT
//! procedure does so once `p` exceeds the universal cut-point
//! `UCP = (3 - sqrt(5)) / 2`, so all prevalence analysis happens on
//! `(0, UCP]`.
//!
//! Registered procedures: Dorfman (`dorfman`), Modified Dorfman (`md`),
//! Sterrett (`sterrett`), Squared Array (`a2`), Pairwise Testing (`pt`) and
//! Halving (`halving`). The first four extend to real-valued `n` and carry
//! closed-form rates; `pt` and `halving` are defined on integer `n` only and
//! exist as counterexamples to the continuity assumption behind the
//! cut-point machinery.

use crate::error::{CutpointError, Result};

/// Universal cut-point `(3 - sqrt(5)) / 2 ≈ 0.38197`.
///
/// Its complement `q = 1 - UCP` solves `q^2 + q - 1 = 0`; above this
/// prevalence every BGT procedure averages more than one test per item.
pub fn ucp() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

/// A defectiveness probability, constrained to the open interval `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prevalence(f64);

impl Prevalence {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p < 1.0 {
            Ok(Self(p))
        } else {
            Err(CutpointError::Domain(format!(
                "prevalence must lie in (0, 1), got {p}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Complement `q = 1 - p`, the probability of a clean item.
    pub fn q(self) -> f64 {
        1.0 - self.0
    }

    /// `ln q` computed as `ln(1 - p)` without forming `q` first, so tiny
    /// prevalences keep full precision.
    pub(crate) fn ln_q(self) -> f64 {
        (-self.0).ln_1p()
    }

    /// `q^n` for real `n`, computed as `exp(n ln q)`.
    pub(crate) fn q_pow(self, n: f64) -> f64 {
        (n * self.ln_q()).exp()
    }
}

/// Real-valued cohort parameter `n > 0`.
///
/// For most procedures `n` is the cohort size itself; for the squared array
/// it indexes an `n x n` layout and for halving a cohort of `2^n` items.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CohortParam(f64);

impl CohortParam {
    pub fn new(n: f64) -> Result<Self> {
        if n.is_finite() && n > 0.0 {
            Ok(Self(n))
        } else {
            Err(CutpointError::Domain(format!(
                "cohort parameter must be positive and finite, got {n}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A registered BGT procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Procedure {
    /// Pool all `n` items; retest each individually when the pool is positive.
    Dorfman,
    /// Dorfman, except the last individual test is skipped when it can be
    /// inferred from the pool result and the other `n - 1` tests.
    ModifiedDorfman,
    /// Pool, then test one by one until the first positive; the untested
    /// remainder re-enters as a fresh pool.
    Sterrett,
    /// `n x n` array: `n` row pools, `n` column pools, then individual tests
    /// on items whose row and column both test positive.
    SquaredArray,
    /// Pairwise testing; its mean carries an alternating `(-q)^n` term, so it
    /// has no differentiable extension to real `n`.
    PairwiseTesting,
    /// Recursive binary splitting of a cohort of `2^n` items; mean formula
    /// only, no protocol details are registered.
    Halving,
}

impl Procedure {
    pub const ALL: [Procedure; 6] = [
        Procedure::Dorfman,
        Procedure::ModifiedDorfman,
        Procedure::Sterrett,
        Procedure::SquaredArray,
        Procedure::PairwiseTesting,
        Procedure::Halving,
    ];

    /// Look a procedure up by its registry name: `dorfman`, `md`,
    /// `sterrett`, `a2`, `pt` or `halving`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "dorfman" => Ok(Procedure::Dorfman),
            "md" => Ok(Procedure::ModifiedDorfman),
            "sterrett" => Ok(Procedure::Sterrett),
            "a2" => Ok(Procedure::SquaredArray),
            "pt" => Ok(Procedure::PairwiseTesting),
            "halving" => Ok(Procedure::Halving),
            other => Err(CutpointError::UnknownProcedure(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Procedure::Dorfman => "dorfman",
            Procedure::ModifiedDorfman => "md",
            Procedure::Sterrett => "sterrett",
            Procedure::SquaredArray => "a2",
            Procedure::PairwiseTesting => "pt",
            Procedure::Halving => "halving",
        }
    }

    /// Lower domain constant `c >= 2`: the procedure is treated as useless
    /// for `n` below it, and the bifurcation analysis runs on `(c, inf)`.
    pub fn c(self) -> f64 {
        match self {
            Procedure::SquaredArray => 3.0,
            _ => 2.0,
        }
    }

    /// Cohort size `N(n)`.
    pub fn cohort_size(self, n: f64) -> f64 {
        match self {
            Procedure::SquaredArray => n * n,
            Procedure::Halving => 2f64.powf(n),
            _ => n,
        }
    }

    /// Cohort size law as a display string: `n`, `n^2` or `2^n`.
    pub fn cohort_law(self) -> &'static str {
        match self {
            Procedure::SquaredArray => "n^2",
            Procedure::Halving => "2^n",
            _ => "n",
        }
    }

    /// Whether the mean extends to a differentiable function of real `n`
    /// (assumption (M1)). Taken on trust per procedure; it is not something
    /// a numerical audit can establish.
    pub fn is_continuous(self) -> bool {
        !matches!(
            self,
            Procedure::PairwiseTesting | Procedure::Halving
        )
    }

    /// Per-item rate `t(n, p)`.
    ///
    /// Integer-only procedures reject non-integer `n`; everything else is
    /// defined for any `n > 0`.
    pub fn rate(self, n: CohortParam, p: Prevalence) -> Result<f64> {
        if self.is_continuous() {
            Ok(self.rate_continuous(n.value(), p))
        } else {
            let k = require_integer(self.name(), n.value())?;
            Ok(self.mean_integer(k, p) / self.cohort_size(k as f64))
        }
    }

    /// Expected total tests `M(n, p) = t(n, p) * N(n)`.
    pub fn mean(self, n: CohortParam, p: Prevalence) -> Result<f64> {
        match self {
            Procedure::Dorfman => {
                let nv = n.value();
                Ok(nv + 1.0 - nv * p.q_pow(nv))
            }
            Procedure::SquaredArray => {
                let nv = n.value();
                Ok(2.0 * nv + nv * nv * (1.0 - 2.0 * p.q_pow(nv) + p.q_pow(2.0 * nv - 1.0)))
            }
            Procedure::ModifiedDorfman | Procedure::Sterrett => {
                Ok(self.rate_continuous(n.value(), p) * n.value())
            }
            Procedure::PairwiseTesting | Procedure::Halving => {
                let k = require_integer(self.name(), n.value())?;
                Ok(self.mean_integer(k, p))
            }
        }
    }

    /// Closed-form `dt/dn` where one is registered (Dorfman, Squared Array,
    /// Modified Dorfman). Callers fall back to finite differences otherwise.
    pub fn dt_dn(self, n: f64, p: Prevalence) -> Option<f64> {
        let lq = p.ln_q();
        match self {
            Procedure::Dorfman => Some(-1.0 / (n * n) - p.q_pow(n) * lq),
            Procedure::SquaredArray => {
                Some(-2.0 / (n * n) - 2.0 * p.q_pow(n) * lq * (1.0 - p.q_pow(n - 1.0)))
            }
            Procedure::ModifiedDorfman => {
                let pv = p.value();
                Some(
                    -p.q_pow(n) * lq - pv * p.q_pow(n - 1.0) * lq / n
                        - (1.0 - pv * p.q_pow(n - 1.0)) / (n * n),
                )
            }
            _ => None,
        }
    }

    /// Closed-form `dt/dp` where one is registered.
    pub fn dt_dp(self, n: f64, p: Prevalence) -> Option<f64> {
        match self {
            Procedure::Dorfman => Some(n * p.q_pow(n - 1.0)),
            Procedure::SquaredArray => {
                Some(2.0 * n * p.q_pow(n - 1.0) - (2.0 * n - 1.0) * p.q_pow(2.0 * n - 2.0))
            }
            Procedure::ModifiedDorfman => {
                let pv = p.value();
                Some(
                    p.q_pow(n - 1.0) * (n - 1.0 / n)
                        + (n - 1.0) / n * pv * p.q_pow(n - 2.0),
                )
            }
            _ => None,
        }
    }

    /// Analytic bifurcation-curve value `p_n` where a closed form exists.
    /// Dorfman admits `p_n = 1 - (1/n)^(1/n)`.
    pub fn analytic_p_n(self, n: f64) -> Option<f64> {
        match self {
            Procedure::Dorfman => Some(-(-n.ln() / n).exp_m1()),
            _ => None,
        }
    }

    /// Rate of a continuously extendable procedure at raw `n > 0`.
    /// Callers are responsible for the domain; integer-only procedures are
    /// rejected by `debug_assert`.
    pub(crate) fn rate_continuous(self, n: f64, p: Prevalence) -> f64 {
        debug_assert!(self.is_continuous() && n > 0.0);
        match self {
            Procedure::Dorfman => rate_dorfman_raw(n, p),
            Procedure::ModifiedDorfman => rate_md_raw(n, p),
            Procedure::Sterrett => rate_sterrett_raw(n, p),
            Procedure::SquaredArray => rate_a2_raw(n, p),
            _ => unreachable!(),
        }
    }

    fn mean_integer(self, k: u32, p: Prevalence) -> f64 {
        match self {
            Procedure::PairwiseTesting => mean_pt_raw(k, p),
            Procedure::Halving => mean_halving_raw(k, p),
            _ => unreachable!(),
        }
    }
}

fn require_integer(name: &'static str, n: f64) -> Result<u32> {
    if n >= 1.0 && n <= u32::MAX as f64 && n.fract() == 0.0 {
        Ok(n as u32)
    } else {
        Err(CutpointError::IntegerCohortRequired { procedure: name, n })
    }
}

/// Dorfman rate `t_D(n, p) = 1 + 1/n - q^n`.
pub fn rate_dorfman(n: CohortParam, p: Prevalence) -> f64 {
    rate_dorfman_raw(n.value(), p)
}

fn rate_dorfman_raw(n: f64, p: Prevalence) -> f64 {
    1.0 + 1.0 / n - p.q_pow(n)
}

/// Squared-array rate `t_A2(n, p) = 2/n + 1 - 2 q^n + q^(2n-1)` for the
/// `n x n` layout of `N(n) = n^2` items.
pub fn rate_a2(n: CohortParam, p: Prevalence) -> f64 {
    rate_a2_raw(n.value(), p)
}

fn rate_a2_raw(n: f64, p: Prevalence) -> f64 {
    2.0 / n + 1.0 - 2.0 * p.q_pow(n) + p.q_pow(2.0 * n - 1.0)
}

/// Modified-Dorfman rate `t_MD(n, p) = 1 - q^n + (1 - p q^(n-1)) / n`.
pub fn rate_md(n: CohortParam, p: Prevalence) -> f64 {
    rate_md_raw(n.value(), p)
}

fn rate_md_raw(n: f64, p: Prevalence) -> f64 {
    1.0 - p.q_pow(n) + (1.0 - p.value() * p.q_pow(n - 1.0)) / n
}

/// Sterrett rate `t_S(n, p) = 2 - q + (2q - (1-q)^(-1) (1 - q^(n+1))) / n`.
///
/// The formula has a removable singularity at `q = 1`; below `p = 1e-12`
/// the limit value `1/n` is returned. The `(1 - q^(n+1)) / p` factor is
/// evaluated through `exp_m1` so the cancellation near `q = 1` stays benign.
pub fn rate_sterrett(n: CohortParam, p: Prevalence) -> f64 {
    rate_sterrett_raw(n.value(), p)
}

fn rate_sterrett_raw(n: f64, p: Prevalence) -> f64 {
    let pv = p.value();
    if pv < 1e-12 {
        return 1.0 / n;
    }
    // (1 - q^(n+1)) / (1 - q) = -expm1((n+1) ln q) / p
    let geom = -((n + 1.0) * p.ln_q()).exp_m1() / pv;
    2.0 - p.q() + (2.0 * p.q() - geom) / n
}

/// Pairwise-testing mean
/// `M_PT(n, p) = n (2 - q^2)/(1 + q) + (q^2 + q - 1)/(1 + q)^2 (1 - (-q)^n)`,
/// defined for integer `n >= 1` only.
pub fn mean_pt(n: u32, p: Prevalence) -> Result<f64> {
    if n == 0 {
        return Err(CutpointError::Domain(
            "pairwise testing needs n >= 1".into(),
        ));
    }
    Ok(mean_pt_raw(n, p))
}

fn mean_pt_raw(n: u32, p: Prevalence) -> f64 {
    let q = p.q();
    let qn = p.q_pow(n as f64);
    let signed_qn = if n % 2 == 1 { -qn } else { qn };
    n as f64 * (2.0 - q * q) / (1.0 + q)
        + (q * q + q - 1.0) / ((1.0 + q) * (1.0 + q)) * (1.0 - signed_qn)
}

/// Halving mean `M_H(n, p) = 1 + 2^(n+1) sum_{k=1..n} (1 - q^(2^k)) / 2^k`
/// for a cohort of `2^n` items, integer `n >= 1` only.
pub fn mean_halving(n: u32, p: Prevalence) -> Result<f64> {
    if n == 0 || n > 60 {
        return Err(CutpointError::Domain(format!(
            "halving needs integer n in [1, 60], got {n}"
        )));
    }
    Ok(mean_halving_raw(n, p))
}

fn mean_halving_raw(n: u32, p: Prevalence) -> f64 {
    let sum: f64 = (1..=n)
        .map(|k| {
            let pow2 = 2f64.powi(k as i32);
            (1.0 - p.q_pow(pow2)) / pow2
        })
        .sum();
    1.0 + 2f64.powi(n as i32 + 1) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Prevalence {
        Prevalence::new(v).unwrap()
    }

    fn n(v: f64) -> CohortParam {
        CohortParam::new(v).unwrap()
    }

    #[test]
    fn ucp_value_and_defining_equation() {
        assert!((ucp() - 0.381_966_011_250_105_15).abs() < 1e-15);
        let q = 1.0 - ucp();
        assert!((q * q + q - 1.0).abs() < 1e-14);
        assert!(ucp() < 0.5);
    }

    #[test]
    fn prevalence_rejects_out_of_range() {
        assert!(Prevalence::new(0.0).is_err());
        assert!(Prevalence::new(1.0).is_err());
        assert!(Prevalence::new(-0.2).is_err());
        assert!(Prevalence::new(f64::NAN).is_err());
        assert!(Prevalence::new(0.5).is_ok());
    }

    #[test]
    fn cohort_param_rejects_nonpositive() {
        assert!(CohortParam::new(0.0).is_err());
        assert!(CohortParam::new(-3.0).is_err());
        assert!(CohortParam::new(f64::INFINITY).is_err());
        assert!(CohortParam::new(2.5).is_ok());
    }

    #[test]
    fn registry_round_trips_names() {
        for proc in Procedure::ALL {
            assert_eq!(Procedure::from_name(proc.name()).unwrap(), proc);
        }
        assert!(matches!(
            Procedure::from_name("unknown"),
            Err(CutpointError::UnknownProcedure(_))
        ));
    }

    #[test]
    fn dorfman_rate_at_its_stationary_point_is_one() {
        let e = std::f64::consts::E;
        let p_star = 1.0 - (-1.0 / e).exp();
        assert!((rate_dorfman(n(e), p(p_star)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dorfman_rate_small_prevalence_limit() {
        for nv in [3.0, 10.0, 100.0] {
            let t = rate_dorfman(n(nv), p(1e-13));
            assert!((t - 1.0 / nv).abs() < 1e-9, "n={nv}: {t}");
        }
    }

    #[test]
    fn dorfman_rate_near_its_ucp_minimum() {
        let t = rate_dorfman(n(2.888), p(ucp()));
        assert!((t - 1.097).abs() < 5e-3);
    }

    #[test]
    fn a2_rate_frozen_values() {
        // Small-prevalence limit: only the 2/n term survives.
        assert!((rate_a2(n(4.0), p(1e-14)) - 0.5).abs() < 1e-10);
        // Direct evaluation, cross-checked by the simulation oracle:
        // t_A2(3, 0.1) = 7.19241 / 9.
        assert!((rate_a2(n(3.0), p(0.1)) - 7.19241 / 9.0).abs() < 1e-12);
        // Paper-grade reading of the stationary point.
        assert!((rate_a2(n(4.454), p(0.252)) - 1.0).abs() < 2e-3);
    }

    #[test]
    fn md_rate_frozen_values() {
        assert!((rate_md(n(2.0), p(ucp())) - 1.0).abs() < 1e-12);
        for nv in [3.0, 10.0] {
            assert!((rate_md(n(nv), p(1e-13)) - 1.0 / nv).abs() < 1e-9);
        }
        // 1.732 / 3, cross-checked by the simulation oracle.
        assert!((rate_md(n(3.0), p(0.1)) - 1.732 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sterrett_rate_frozen_values() {
        assert!((rate_sterrett(n(2.0), p(ucp())) - 1.0).abs() < 1e-12);
        // Removable singularity: limit branch.
        for nv in [3.0, 7.0] {
            assert!((rate_sterrett(n(nv), p(1e-13)) - 1.0 / nv).abs() < 1e-15);
            // Just above the branch cut the formula itself must agree with
            // the limit.
            assert!((rate_sterrett(n(nv), p(1e-11)) - 1.0 / nv).abs() < 1e-9);
        }
        // 1.661 / 3, cross-checked by the simulation oracle.
        assert!((rate_sterrett(n(3.0), p(0.1)) - 1.661 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pt_mean_is_cohort_size_at_ucp() {
        let at_ucp = p(ucp());
        assert!((mean_pt(5, at_ucp).unwrap() - 5.0).abs() < 1e-10);
        for k in 2..=50 {
            assert!(
                (mean_pt(k, at_ucp).unwrap() - k as f64).abs() < 1e-10,
                "n={k}"
            );
        }
    }

    #[test]
    fn pt_mean_small_prevalence() {
        assert!((mean_pt(2, p(1e-14)).unwrap() - 1.0).abs() < 1e-9);
        assert!(mean_pt(0, p(0.1)).is_err());
    }

    #[test]
    fn halving_mean_frozen_values() {
        // All summands vanish at q = 1.
        assert!((mean_halving(3, p(1e-16)).unwrap() - 1.0).abs() < 1e-9);
        // q = 0: pool test plus two individual tests.
        assert!((mean_halving(1, p(1.0 - 1e-15)).unwrap() - 3.0).abs() < 1e-9);
        // 1 + 8 ((1 - 0.9^2)/2 + (1 - 0.9^4)/4) = 2.4478
        assert!((mean_halving(2, p(0.1)).unwrap() - 2.4478).abs() < 1e-12);
        assert!(mean_halving(0, p(0.1)).is_err());
    }

    #[test]
    fn integer_only_procedures_reject_real_n() {
        let err = Procedure::PairwiseTesting.rate(n(2.5), p(0.1));
        assert!(matches!(
            err,
            Err(CutpointError::IntegerCohortRequired { .. })
        ));
        assert!(Procedure::Halving.mean(n(1.5), p(0.1)).is_err());
        assert!(Procedure::PairwiseTesting.rate(n(3.0), p(0.1)).is_ok());
    }

    #[test]
    fn mean_is_rate_times_cohort_size() {
        // The identity is algebraic and holds on the whole continuous
        // domain, including below each procedure's analysis constant c.
        let procs = [
            Procedure::Dorfman,
            Procedure::ModifiedDorfman,
            Procedure::Sterrett,
            Procedure::SquaredArray,
        ];
        let ns = [2.5, 3.0, 5.0, 10.0, 100.0];
        let ps = [0.01, 0.1, 0.3, ucp()];
        for proc in procs {
            for &nv in &ns {
                for &pv in &ps {
                    let m = proc.mean(n(nv), p(pv)).unwrap();
                    let t = proc.rate(n(nv), p(pv)).unwrap();
                    let rel = (m - t * proc.cohort_size(nv)).abs() / m.abs();
                    assert!(rel < 1e-12, "{} n={nv} p={pv}: rel={rel}", proc.name());
                }
            }
        }
    }

    #[test]
    fn md_saves_tests_over_dorfman() {
        // The analytic gap is p q^(n-1) / n; where it exceeds f64
        // resolution the ordering must be strict, and it may never invert.
        for nv in [2.5, 3.0, 5.0, 10.0, 100.0] {
            for pv in [0.01, 0.1, 0.3, ucp()] {
                let md = rate_md(n(nv), p(pv));
                let d = rate_dorfman(n(nv), p(pv));
                assert!(md <= d, "n={nv} p={pv}");
                let gap = pv * p(pv).q_pow(nv - 1.0) / nv;
                if gap > 1e-13 {
                    assert!(md < d, "n={nv} p={pv}");
                }
            }
        }
    }

    #[test]
    fn closed_form_partials_match_finite_differences() {
        let procs = [
            Procedure::Dorfman,
            Procedure::SquaredArray,
            Procedure::ModifiedDorfman,
        ];
        for proc in procs {
            for nv in [2.5, 3.0, 5.0, 10.0, 100.0] {
                if nv <= proc.c() {
                    continue;
                }
                for pv in [0.01, 0.1, 0.3, ucp()] {
                    // Skip derivatives whose magnitude sits below the
                    // cancellation noise floor of the central difference
                    // (q^n underflow at the large-n large-p corner).
                    let h = 1e-6 * nv.max(1.0);
                    let fd_n = (proc.rate_continuous(nv + h, p(pv))
                        - proc.rate_continuous(nv - h, p(pv)))
                        / (2.0 * h);
                    let cf_n = proc.dt_dn(nv, p(pv)).unwrap();
                    if cf_n.abs() > 1e-8 {
                        assert!(
                            (fd_n - cf_n).abs() / cf_n.abs() < 1e-5,
                            "{} dt/dn n={nv} p={pv}: fd={fd_n} cf={cf_n}",
                            proc.name()
                        );
                    }

                    let hp = 1e-6 * pv;
                    let fd_p = (proc.rate_continuous(nv, p(pv + hp))
                        - proc.rate_continuous(nv, p(pv - hp)))
                        / (2.0 * hp);
                    let cf_p = proc.dt_dp(nv, p(pv)).unwrap();
                    if cf_p.abs() > 1e-8 {
                        assert!(
                            (fd_p - cf_p).abs() / cf_p.abs() < 1e-5,
                            "{} dt/dp n={nv} p={pv}: fd={fd_p} cf={cf_p}",
                            proc.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dorfman_analytic_curve_satisfies_rate_equation() {
        for nv in [2.1, 3.0, 4.0, 10.0, 100.0] {
            let pn = Procedure::Dorfman.analytic_p_n(nv).unwrap();
            assert!((rate_dorfman(n(nv), p(pn)) - 1.0).abs() < 1e-14, "n={nv}");
        }
        assert!(Procedure::Sterrett.analytic_p_n(5.0).is_none());
    }

    #[test]
    fn cohort_sizes() {
        assert_eq!(Procedure::Dorfman.cohort_size(7.0), 7.0);
        assert_eq!(Procedure::SquaredArray.cohort_size(4.0), 16.0);
        assert_eq!(Procedure::Halving.cohort_size(5.0), 32.0);
    }
}
