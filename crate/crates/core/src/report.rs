//! Report assembly and file formats: the combined per-procedure JSON report,
//! CSV curve emission (with a parser for round-trips), and a minimal SVG
//! rendering of a curve against the UCP reference line.
//!
//! All numeric text output carries 12 significant digits so downstream
//! comparisons at tolerances down to `1e-10` survive serialization.

use std::io::{self, BufRead, Write};

use serde::Serialize;

use crate::assumptions::{check_all, AssumptionReport};
use crate::bifurcation::{
    classify_and_find_cocp, curve_derivative, BifurcationCurve, BifurcationType, CurvePoint,
};
use crate::discrete::{docp_bruteforce, docp_from_stationary, DiscreteScanConfig};
use crate::error::{CutpointError, Result};
use crate::procedures::{ucp, Prevalence, Procedure};

/// Combined report for one procedure: assumption audit, continuous
/// cut-point, and (optionally) the discrete cut-point by both routes.
///
/// When any assumption is violated the cut-point machinery is inapplicable;
/// the report then carries the violation list and `null` cut-point fields.
#[derive(Debug, Clone, Serialize)]
pub struct ProcedureReport {
    pub name: String,
    pub c: f64,
    pub ucp: f64,
    pub assumption_report: AssumptionReport,
    pub violated_assumptions: Vec<String>,
    pub cocp: Option<f64>,
    pub bifurcation_type: Option<BifurcationType>,
    pub n_star: Option<f64>,
    pub limit_at_c: Option<f64>,
    pub limit_at_infinity: Option<f64>,
    pub docp: Option<f64>,
    pub docp_achieving_n: Option<u32>,
    pub docp_method: Option<String>,
    pub docp_bruteforce: Option<f64>,
    pub docp_bruteforce_achieving_n: Option<u32>,
    pub curve_file: Option<String>,
}

impl ProcedureReport {
    pub fn is_flagged(&self) -> bool {
        !self.violated_assumptions.is_empty()
    }
}

/// Run the full pipeline for one procedure.
///
/// `with_discrete` adds the discrete cut-point: the stationary-point
/// recovery where it applies (`b2`), the coincidence rule for `b1`, and the
/// brute-force integer scan alongside either.
pub fn build_report(
    proc: Procedure,
    with_discrete: bool,
    curve_file: Option<String>,
) -> Result<ProcedureReport> {
    let assumption_report = check_all(proc)?;
    let violated: Vec<String> = assumption_report
        .violated()
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut report = ProcedureReport {
        name: proc.name().to_string(),
        c: proc.c(),
        ucp: ucp(),
        assumption_report,
        violated_assumptions: violated,
        cocp: None,
        bifurcation_type: None,
        n_star: None,
        limit_at_c: None,
        limit_at_infinity: None,
        docp: None,
        docp_achieving_n: None,
        docp_method: None,
        docp_bruteforce: None,
        docp_bruteforce_achieving_n: None,
        curve_file,
    };
    if report.is_flagged() {
        return Ok(report);
    }

    let result = classify_and_find_cocp(proc)?;
    report.cocp = Some(result.cocp);
    report.bifurcation_type = Some(result.bifurcation_type);
    report.n_star = result.n_star;
    report.limit_at_c = Some(result.limit_at_c);
    report.limit_at_infinity = Some(result.limit_at_infinity);

    if with_discrete {
        match docp_from_stationary(proc, &result) {
            Ok(d) => {
                report.docp = Some(d.docp);
                report.docp_achieving_n = Some(d.achieving_n);
                report.docp_method = Some(d.method.as_str().to_string());
            }
            Err(CutpointError::DiscreteRecoveryInapplicable { .. }) => {
                report.docp = Some(result.cocp);
                report.docp_method = Some("coincides-with-cocp".to_string());
            }
            Err(e) => return Err(e),
        }
        let bf = docp_bruteforce(proc, DiscreteScanConfig::default())?;
        report.docp_bruteforce = Some(bf.docp);
        report.docp_bruteforce_achieving_n = Some(bf.achieving_n);
    }

    Ok(report)
}

/// 12 significant digits, scientific notation.
fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Emit a traced curve as CSV: a `# ucp=...` comment carrying the dashed
/// reference value, the `n,p_n,dp_dn,residual` header, one row per sample.
pub fn write_curve_csv<W: Write>(w: &mut W, curve: &BifurcationCurve) -> io::Result<()> {
    writeln!(w, "# ucp={}", fmt12(ucp()))?;
    writeln!(w, "n,p_n,dp_dn,residual")?;
    for pt in &curve.points {
        writeln!(
            w,
            "{},{},{},{}",
            fmt12(pt.n),
            fmt12(pt.p_n),
            fmt12(pt.dp_dn),
            fmt12(pt.residual)
        )?;
    }
    Ok(())
}

/// Emit the extended-domain multi-root diagram: one row per `(n, root)`
/// pair, in the same column layout as [`write_curve_csv`].
pub fn write_multi_root_csv<W: Write>(
    w: &mut W,
    proc: Procedure,
    roots_by_n: &[(f64, Vec<f64>)],
) -> io::Result<()> {
    writeln!(w, "# ucp={}", fmt12(ucp()))?;
    writeln!(w, "n,p_n,dp_dn,residual")?;
    for (n, roots) in roots_by_n {
        for &p_n in roots {
            let residual =
                (proc.rate_continuous(*n, Prevalence::new(p_n).unwrap()) - 1.0).abs();
            let dp_dn = curve_derivative(proc, *n, p_n);
            writeln!(
                w,
                "{},{},{},{}",
                fmt12(*n),
                fmt12(p_n),
                fmt12(dp_dn),
                fmt12(residual)
            )?;
        }
    }
    Ok(())
}

/// Parse a curve CSV produced by [`write_curve_csv`] back into points.
pub fn parse_curve_csv<R: BufRead>(r: R) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::new();
    let mut saw_header = false;
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "n,p_n,dp_dn,residual" {
                return Err(CutpointError::CsvParse {
                    line: idx + 1,
                    reason: format!("unexpected header '{trimmed}'"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(CutpointError::CsvParse {
                line: idx + 1,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 4];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|e| CutpointError::CsvParse {
                line: idx + 1,
                reason: format!("bad number '{field}': {e}"),
            })?;
        }
        points.push(CurvePoint {
            n: vals[0],
            p_n: vals[1],
            dp_dn: vals[2],
            residual: vals[3],
        });
    }
    if !saw_header {
        return Err(CutpointError::CsvParse {
            line: 0,
            reason: "missing header".into(),
        });
    }
    Ok(points)
}

/// Minimal SVG rendering: the curve as a polyline plus the dashed UCP
/// reference line. Intended for quick visual inspection, not publication.
pub fn write_curve_svg<W: Write>(w: &mut W, curve: &BifurcationCurve) -> io::Result<()> {
    const WIDTH: f64 = 800.0;
    const HEIGHT: f64 = 560.0;
    const MARGIN: f64 = 60.0;

    let (n_lo, n_hi) = curve.n_domain;
    let p_hi = ucp() * 1.08;
    let x = |n: f64| MARGIN + (n - n_lo) / (n_hi - n_lo) * (WIDTH - 2.0 * MARGIN);
    let y = |p: f64| HEIGHT - MARGIN - p / p_hi * (HEIGHT - 2.0 * MARGIN);

    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )?;
    // axes
    writeln!(
        w,
        r#"<line x1="{m}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#,
        m = MARGIN,
        y0 = HEIGHT - MARGIN,
        x1 = WIDTH - MARGIN
    )?;
    writeln!(
        w,
        r#"<line x1="{m}" y1="{y1}" x2="{m}" y2="{y0}" stroke="black"/>"#,
        m = MARGIN,
        y1 = MARGIN,
        y0 = HEIGHT - MARGIN
    )?;
    // dashed UCP reference
    writeln!(
        w,
        r#"<line x1="{x0}" y1="{yu}" x2="{x1}" y2="{yu}" stroke="gray" stroke-dasharray="8,6"/>"#,
        x0 = MARGIN,
        x1 = WIDTH - MARGIN,
        yu = y(ucp())
    )?;
    writeln!(
        w,
        r#"<text x="{x}" y="{yt}" font-size="12" fill="gray">UCP = {v:.6}</text>"#,
        x = MARGIN + 4.0,
        yt = y(ucp()) - 6.0,
        v = ucp()
    )?;
    let pts: Vec<String> = curve
        .points
        .iter()
        .map(|pt| format!("{:.2},{:.2}", x(pt.n), y(pt.p_n)))
        .collect();
    writeln!(
        w,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        pts.join(" ")
    )?;
    // axis labels
    writeln!(
        w,
        r#"<text x="{x}" y="{y}" font-size="12">n: {lo:.4} .. {hi:.4}</text>"#,
        x = WIDTH / 2.0 - 60.0,
        y = HEIGHT - MARGIN / 3.0,
        lo = n_lo,
        hi = n_hi
    )?;
    writeln!(
        w,
        r#"<text x="{x}" y="{y}" font-size="12" transform="rotate(-90 {x} {y})">p_n ({name})</text>"#,
        x = MARGIN / 3.0,
        y = HEIGHT / 2.0,
        name = curve.procedure
    )?;
    writeln!(w, "</svg>")?;
    Ok(())
}
