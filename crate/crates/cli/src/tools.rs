//! `dilate` and `spectrum` subcommands over user-supplied JSON.

use crate::error::CliError;
use crate::report::{Checks, Report};
use crate::Ctx;
use dilation_lab::dilation::{build_min_dilation, triangle_violation_search, verify_dilation, DilationBundle, SearchBudget};
use dilation_lab::operators::classify_contraction;
use dilation_lab::shifts::{make_sigma_shift, spectrum_csv, spectrum_table, unit_circle};
use dilation_lab::{Operator, Space, Verdict};
use serde::{Deserialize, Serialize};

/// Classify, certify `A_T` and, when it is a (semi-)norm, build and verify
/// the minimal isometric dilation.
pub fn dilate(t: &Operator, depth: usize, ctx: &Ctx) -> Result<(Report, Option<DilationBundle>), CliError> {
    ctx.validate()?;
    if depth < 2 {
        return Err(CliError::Input("depth must be at least 2".into()));
    }
    let mut c = ctx.checks();
    let class = classify_contraction(t, ctx.seed);
    c.holds("contraction", class.class != Verdict::NotContraction, format!("norm estimate {}", class.norm.value));
    if class.class == Verdict::NotContraction {
        return Ok((Report::new("dilate", "dilate", ctx.seed, c.rows), None));
    }
    let n = triangle_violation_search(t, SearchBudget::default(), ctx.seed, &[])?;
    let ok = matches!(n.verdict, Verdict::Norm | Verdict::SemiNorm);
    let row = c.holds("a_t_triangle", ok, format!("{:?}, margin {}", n.verdict, n.margin));
    if let Some((x, y)) = &n.witness {
        row.with_witness(&[x.clone(), y.clone()]);
    }
    if !ok {
        return Ok((Report::new("dilate", "dilate", ctx.seed, c.rows), None));
    }
    let b = build_min_dilation(t, &n, depth)?;
    let kmax = ctx.horizon.unwrap_or(depth.saturating_sub(2).max(1));
    let v = verify_dilation(&b, kmax, 1e-10 * ctx.tol_scale, 100, ctx.seed)?;
    c.small("identity_residual", v.value, 1e-10).with_witness(&v.witnesses);
    Ok((Report::new("dilate", "dilate", ctx.seed, c.rows), Some(b)))
}

/// Input of `lab spectrum`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaSpec {
    pub base: Space,
    pub halfwidth: usize,
    /// Defaults to `halfwidth - 1`.
    #[serde(default)]
    pub horizon: Option<usize>,
}

/// Probe the σ-shift on `grid` unit-circle points. Returns the report and the
/// residual table as CSV.
pub fn spectrum(spec: &SigmaSpec, grid: usize, ctx: &Ctx) -> Result<(Report, String), CliError> {
    ctx.validate()?;
    if grid == 0 {
        return Err(CliError::Input("grid must be positive".into()));
    }
    let b = make_sigma_shift(&spec.base, spec.halfwidth, ctx.seed)?;
    let horizon = ctx.horizon.or(spec.horizon).unwrap_or(spec.halfwidth.saturating_sub(1));
    let rows = spectrum_table(&b, &unit_circle(grid), horizon, ctx.seed)?;
    let mut c: Checks = ctx.checks();
    c.holds("sigma_checks", b.certificate.passed(), format!("{:?}", b.certificate.verdict));
    // |V z - l z| >= ||l| - 1| for unit z supported away from the edge.
    let worst = rows.iter().map(|r| (r.lambda_re.hypot(r.lambda_im) - 1.0).abs() - r.residual).fold(f64::MIN, f64::max);
    c.small("residual_above_trivial_bound", worst.max(0.0), 1e-12);
    c.equal("rows", rows.len(), grid);
    Ok((Report::new("spectrum", "spectrum", ctx.seed, c.rows), spectrum_csv(&rows)?))
}
