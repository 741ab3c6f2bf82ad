//! Named verification suites. Steps run on the worker pool; rows are
//! assembled in declaration order so a report depends only on the seed.

use crate::error::CliError;
use crate::gallery::{self, real_op, Run};
use crate::report::{Checks, Report};
use crate::Ctx;
use dilation_lab::decomposition::{canonical_decompose, x_of_t, XMethod};
use dilation_lab::dilation::{
    build_min_dilation, build_nagy_dilation, build_rowform_dilation, defect_representation, nagy_backward_intertwiner,
    triangle_margin, triangle_violation_search, verify_dilation, SearchBudget,
};
use dilation_lab::functionals::{hb_linearity_probe, rank_one, star_adjoint_eval, star_defect, star_linearity_probe};
use dilation_lab::operators::{operator_norm, a_t};
use dilation_lab::orthogonality::{bj_min, bj_orthogonal, norm_one_projection_check, BJ_TOL};
use dilation_lab::shifts::{
    bilateral_phi_witness, make_backward_shift, make_bilateral_shift, make_sigma_shift, make_unilateral_shift,
    phi_alpha, phi_norm_search, spectrum_probe, spectrum_table, unit_circle,
};
use dilation_lab::spaces::{basis_vec, gaussian_mat, gaussian_vec, real_vec, rng};
use dilation_lab::{c64, linalg, CMat, CVec, Operator, Space, Subspace, Verdict, C64};
use rand::Rng;
use rayon::prelude::*;

pub const SUITES: &[&str] = &["orthogonality", "dilation", "shifts", "decomposition", "hilbert-characterization", "all"];

enum Step {
    Example(&'static str),
    Check(&'static str, Run),
}

impl Step {
    fn name(&self) -> &'static str {
        match self {
            Step::Example(id) | Step::Check(id, _) => id,
        }
    }
}

fn steps(name: &str) -> Result<Vec<Step>, CliError> {
    use Step::*;
    Ok(match name {
        "orthogonality" => vec![
            Example("lp-coordinate-complement"),
            Example("cinf3-two-complements"),
            Example("disk-algebra-Mz"),
            Check("bj-homogeneity", bj_homogeneity),
            Check("bj-min-vs-grid", bj_min_vs_grid),
            Check("l3-asymmetry", l3_asymmetry),
            Check("norm-one-projection", norm_one_projection),
            Check("hb-linearity", hb_linearity),
        ],
        "dilation" => vec![
            Example("ex6-case1-p1.5"),
            Example("ex6-case1-p1"),
            Example("ex6-case2-p3"),
            Example("ex6-case2-pinf"),
            Example("ci-defect-norm"),
            Example("diag-defect-norm"),
            Example("g1-l1-not-norm"),
            Example("g1-l2-norm"),
            Example("g2-l1-not-seminorm"),
            Example("g2-backward-shift-seminorm"),
            Example("l1-mhat-not-subspace"),
            Example("l1-mhat-subspace-outside-class"),
            Example("diag-ahat-seminorm"),
            Check("min-dilation-identity", min_dilation_identity),
            Check("rowform-and-nagy", rowform_and_nagy),
            Check("powers-triangle", powers_triangle),
        ],
        "shifts" => vec![
            Example("mz-unilateral-shift"),
            Example("sigma-bilateral-l3"),
            Check("sigma-spectrum", sigma_spectrum),
            Check("adjoint-of-shifts", adjoint_of_shifts),
            Check("moebius", moebius),
        ],
        "decomposition" => vec![
            Example("l1-xt-not-subspace"),
            Example("l1-xt-subspace-not-seminorm"),
            Example("canonical-lp3"),
            Example("levan-lp3"),
            Check("phase-unitary-split", phase_unitary_split),
            Check("structural-vs-dilation", structural_vs_dilation),
        ],
        "hilbert-characterization" => vec![
            Check("hilbert-side", hilbert_side),
            Check("non-hilbert-witnesses", non_hilbert_witnesses),
        ],
        "all" => {
            let mut all = Vec::new();
            for s in &SUITES[..SUITES.len() - 1] {
                all.extend(steps(s)?);
            }
            all
        }
        other => return Err(CliError::UnknownSuite(other.to_string())),
    })
}

pub fn run_suite(name: &str, ctx: &Ctx) -> Result<Report, CliError> {
    ctx.validate()?;
    let list = steps(name)?;
    let parts: Vec<Checks> = list
        .par_iter()
        .map(|step| {
            let mut c = ctx.checks();
            c.scope(step.name());
            let out = match step {
                Step::Example(id) => gallery::run_into(id, ctx, &mut c),
                Step::Check(_, f) => f(ctx, &mut c),
            };
            if let Err(e) = out {
                c.holds("completed", false, e.to_string());
            }
            c
        })
        .collect();
    let rows = parts.into_iter().flat_map(|c| c.rows).collect();
    Ok(Report::new(name, "suite", ctx.seed, rows))
}

fn bj_homogeneity(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(3, 3.0)?;
    let mut r = rng(ctx.seed);
    let mut bad = 0;
    for _ in 0..40 {
        let x = gaussian_vec(3, &mut r);
        let j = dilation_lab::functionals::duality_map(&s, &x);
        let y0 = gaussian_vec(3, &mut r);
        let fy: C64 = j.iter().zip(y0.iter()).map(|(a, b)| a * b).sum();
        let fx: C64 = j.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        let y = &y0 - &x * (fy / fx);
        let a = C64::from_polar(r.random_range(0.1..5.0), r.random_range(0.0..std::f64::consts::TAU));
        let b = C64::from_polar(r.random_range(0.1..5.0), r.random_range(0.0..std::f64::consts::TAU));
        for (u, v) in [(x.clone(), y.clone()), (&x * a, &y * b)] {
            if bj_orthogonal(&s, &u, &v, BJ_TOL)?.verdict != Verdict::Orthogonal {
                bad += 1;
            }
        }
    }
    c.equal("james_pairs_rejected", bad, 0);
    Ok(())
}

fn bj_min_vs_grid(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(3, 1.5)?;
    let mut r = rng(ctx.seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let x = gaussian_vec(3, &mut r);
        let y = gaussian_vec(3, &mut r);
        let m = bj_min(&s, &x, &y)?;
        let rad = 4.0 * s.norm(&x)? / s.norm(&y)?;
        let mut grid = f64::INFINITY;
        for i in -30..=30 {
            for k in -30..=30 {
                let l = c64(rad * i as f64 / 30.0, rad * k as f64 / 30.0);
                grid = grid.min(s.norm(&(&x + &y * l))?);
            }
        }
        worst = worst.max(m.value - grid);
    }
    c.small("min_above_grid", worst.max(0.0), 1e-9);
    Ok(())
}

fn l3_asymmetry(_ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(3, 3.0)?;
    let x = real_vec(&[1.0, 2.0, 0.0]);
    let y = real_vec(&[4.0, -1.0, 0.0]);
    c.verdict("x_perp_y", bj_orthogonal(&s, &x, &y, BJ_TOL)?.verdict, Verdict::Orthogonal);
    let back = bj_orthogonal(&s, &y, &x, BJ_TOL)?;
    c.verdict("y_not_perp_x", back.verdict, Verdict::NotOrthogonal).with_witness(&back.witnesses);
    Ok(())
}

fn norm_one_projection(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(3, 1.5)?;
    let mut m = CMat::zeros(3, 3);
    m[(0, 0)] = c64(1.0, 0.0);
    m[(1, 1)] = c64(1.0, 0.0);
    let p = norm_one_projection_check(&Operator::on(s, m)?, ctx.seed)?;
    c.holds("coordinate_projection", p.certificate.passed(), format!("{:?}", p.certificate.verdict));
    c.equal("range_dim", p.range.dim(), 2);
    c.equal("kernel_dim", p.kernel.dim(), 1);
    Ok(())
}

fn hb_linearity(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(4, 3.0)?;
    let coord = Subspace::coordinates(s.clone(), &[0, 1])?;
    c.small("coordinate_defect", hb_linearity_probe(&coord, 200, ctx.seed)?.value, 1e-8);
    let skew = Subspace::from_vectors(s, &[real_vec(&[1.0, 1.0, 0.0, 0.0]), real_vec(&[0.0, 1.0, 1.0, 0.0])])?;
    let non = hb_linearity_probe(&skew, 200, ctx.seed)?;
    c.above("skew_defect", non.value, 1e-3).with_witness(&non.witnesses);
    Ok(())
}

fn min_dilation_identity(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let mut r = rng(ctx.seed);
    let l2 = Space::lpf(3, 2.0)?;
    let vals: Vec<C64> = (0..3).map(|_| c64(r.random_range(-0.6..0.6), r.random_range(-0.6..0.6))).collect();
    let l3 = Space::lpf(4, 3.0)?;
    let phases: Vec<C64> = (0..4).map(|k| C64::from_polar(0.8, 0.9 * k as f64)).collect();
    for (name, t) in [("l2", Operator::diagonal(l2, vals)?), ("l3", Operator::diagonal(l3, phases)?)] {
        let n = triangle_violation_search(&t, SearchBudget::default(), ctx.seed, &[])?;
        c.verdict(&format!("{name}_verdict"), n.verdict, Verdict::Norm);
        let mut b = build_min_dilation(&t, &n, 6)?;
        if ctx.corrupt {
            b = b.with_corrupted_v(0, 0, c64(0.05, 0.0))?;
        }
        let v = verify_dilation(&b, 4, 1e-10, 100, ctx.seed)?;
        let row = c.small(&format!("{name}_identity_residual"), v.value, 1e-10).with_witness(&v.witnesses);
        if let (Some(k), Some(blk)) = (v.notes.get("worst_k"), v.notes.get("worst_block")) {
            row.detail = format!("worst k {k}, block {blk}");
        }
    }
    Ok(())
}

fn rowform_and_nagy(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(3, 2.0)?;
    let g = gaussian_mat(3, 3, &mut rng(ctx.seed));
    let t = Operator::on(s, g.unscale(linalg::spectral_norm(&g) / 0.8))?;
    let b = build_nagy_dilation(&t, 6, ctx.seed)?;
    c.small("nagy_residual", verify_dilation(&b, 4, 1e-9, 40, ctx.seed)?.value, 1e-9);
    if let Some(a) = defect_representation(&t)? {
        let b = build_rowform_dilation(&t, &a, 5, ctx.seed)?;
        c.small("rowform_residual", verify_dilation(&b, 3, 1e-9, 40, ctx.seed)?.value, 1e-9);
    } else {
        c.holds("hilbert_defect_available", false, "");
    }
    let w = nagy_backward_intertwiner(&t, 20)?;
    let mut r = rng(ctx.seed ^ 1);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = t.domain().random_unit_with(&mut r);
        worst = worst.max(1.0 - w.codomain().norm(&w.apply(&x)?)?);
    }
    c.small("intertwiner_defect_over_bound", worst / 0.8f64.powi(20), 1.0);
    Ok(())
}

fn powers_triangle(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l3 = Space::lpf(4, 3.0)?;
    let t = Operator::diagonal(l3, (0..4).map(|k| C64::from_polar(0.6, 1.3 * k as f64)).collect())?;
    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    for k in 1..=4 {
        let tk = t.pow(k)?;
        for _ in 0..50 {
            let x = gaussian_vec(4, &mut r);
            let y = gaussian_vec(4, &mut r);
            worst = worst.max(-triangle_margin(&tk, &x, &y)?);
        }
    }
    c.small("power_triangle_deficit", worst.max(0.0), 1e-9);
    Ok(())
}

fn sigma_spectrum(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let hw = ctx.horizon.unwrap_or(200);
    for p in [2.0, 3.0] {
        let b = make_sigma_shift(&Space::lpf(1, p)?, hw, ctx.seed)?;
        c.holds(&format!("p{p}_sigma_checks"), b.certificate.passed(), "");
        let rows = spectrum_table(&b, &unit_circle(8), hw - 1, ctx.seed)?;
        let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        c.small(&format!("p{p}_circle_residual"), worst, 0.15);
        let inner = spectrum_probe(&b, c64(0.5, 0.0), hw - 1, ctx.seed)?;
        c.above(&format!("p{p}_residual_inside"), inner.residual, 0.5 - 1e-12);
    }
    Ok(())
}

fn zero_at(mut v: CVec, idx: impl Iterator<Item = usize>) -> CVec {
    for i in idx {
        v[i] = c64(0.0, 0.0);
    }
    v
}

fn adjoint_of_shifts(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let x = Space::lpf(2, 3.0)?;
    let mz = make_unilateral_shift(&x, 6)?;
    let back = make_backward_shift(&x, 6)?;
    let k = mz.domain().clone();
    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let v = zero_at(k.random_unit_with(&mut r), 10..12);
        worst = worst.max(k.norm(&(star_adjoint_eval(&mz, &v)? - back.apply(&v)?))?);
    }
    c.small("mz_star_is_backward_shift", worst, 1e-12);
    let u = make_bilateral_shift(&x, 6, false)?;
    let uinv = make_bilateral_shift(&x, 6, true)?;
    let y = u.domain().clone();
    let mut worst_u: f64 = 0.0;
    for _ in 0..30 {
        let v = zero_at(y.random_unit_with(&mut r), 0..2);
        worst_u = worst_u.max(y.norm(&(star_adjoint_eval(&u, &v)? - uinv.apply(&v)?))?);
    }
    c.small("u_star_is_inverse", worst_u, 1e-12);
    Ok(())
}

fn moebius(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l3 = Space::lpf(2, 3.0)?;
    let t = rank_one(&l3, &basis_vec(2, 0), &basis_vec(2, 1), c64(0.99, 0.0))?;
    let found = phi_norm_search(&t, 10, 0.95, ctx.seed)?;
    c.above("l3_phi_norm", found.norm, 1.0 + 1e-3);
    let w = bilateral_phi_witness(&l3, 400, ctx.seed)?;
    c.above("two_block_gap", w.lhs - w.rhs, 0.0).with_witness(&[w.x.clone(), w.y.clone()]);
    c.above("bilateral_excess", w.excess, 1e-4);
    Ok(())
}

fn phase_unitary_split(_ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(4, 3.0)?;
    let t = Operator::diagonal(s.clone(), vec![c64(0.5, 0.0), c64(0.0, 0.3), C64::from_polar(1.0, 1.0), C64::from_polar(1.0, 2.0)])?;
    let d = canonical_decompose(&t, 5, 4)?;
    let un = Subspace::coordinates(s.clone(), &[2, 3])?;
    let rest = Subspace::coordinates(s, &[0, 1])?;
    c.small("unitary_distance", d.part("unitary").map_or(f64::MAX, |p| p.subspace.distance(&un)), 1e-8);
    c.small("cnu_distance", d.part("cnu").map_or(f64::MAX, |p| p.subspace.distance(&rest)), 1e-8);
    Ok(())
}

fn structural_vs_dilation(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(3, 2.0)?;
    let t = Operator::diagonal(s, vec![c64(1.0, 0.0), C64::from_polar(1.0, 0.4), c64(0.5, 0.0)])?;
    let n = triangle_violation_search(&t, SearchBudget::default(), ctx.seed, &[])?;
    let b = build_min_dilation(&t, &n, 6)?;
    let a = x_of_t(&t, 4, XMethod::Dilation(&b))?.subspace;
    let st = x_of_t(&t, 4, XMethod::Structural)?.subspace;
    match (a, st) {
        (Some(a), Some(st)) => {
            c.equal("dims_agree", a.dim(), st.dim());
            c.small("distance", a.distance(&st), 1e-8);
        }
        _ => {
            c.holds("both_subspaces", false, "");
        }
    }
    Ok(())
}

fn hilbert_side(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let mut r = rng(ctx.seed);
    let mut not_norm = 0;
    let mut lowest = f64::INFINITY;
    let mut star: f64 = 0.0;
    let mut phi: f64 = 0.0;
    for i in 0..10u64 {
        let n = 2 + (i as usize % 4);
        let s = Space::lpf(n, 2.0)?;
        let g = gaussian_mat(n, n, &mut r);
        let target: f64 = r.random_range(0.05..0.95);
        let t = Operator::on(s, g.unscale(linalg::spectral_norm(&g) / target))?;
        let v = triangle_violation_search(&t, SearchBudget::default(), ctx.seed + i, &[])?;
        if v.verdict != Verdict::Norm {
            not_norm += 1;
        }
        lowest = lowest.min(v.search_min);
        star = star.max(star_linearity_probe(&t, 30, ctx.seed + i)?.value);
        let a = C64::from_polar(r.random_range(0.0..0.95), r.random_range(0.0..std::f64::consts::TAU));
        phi = phi.max(operator_norm(&phi_alpha(&t, a)?.operator, 4, i).value);
    }
    c.equal("a_t_not_a_norm", not_norm, 0);
    c.small("search_min_deficit", (-lowest).max(0.0), 1e-10);
    c.small("star_defect", star, 1e-10);
    c.small("phi_excess", (phi - 1.0).max(0.0), 1e-9);
    let s = Space::lpf(4, 2.0)?;
    let mut asym = 0;
    for _ in 0..100 {
        let x = gaussian_vec(4, &mut r);
        let y0 = gaussian_vec(4, &mut r);
        let y = &y0 - &x * (x.dotc(&y0) / x.dotc(&x));
        let a = bj_orthogonal(&s, &x, &y, BJ_TOL)?.verdict;
        let b = bj_orthogonal(&s, &y, &x, BJ_TOL)?.verdict;
        if a != Verdict::Orthogonal || a != b {
            asym += 1;
        }
    }
    c.equal("bj_asymmetric_pairs", asym, 0);
    let y = Subspace::from_vectors(s, &[gaussian_vec(4, &mut r), gaussian_vec(4, &mut r)])?;
    c.small("hb_defect", hb_linearity_probe(&y, 100, ctx.seed)?.value, 1e-8);
    Ok(())
}

fn non_hilbert_witnesses(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l3 = Space::lpf(2, 3.0)?;
    let t = real_op(l3.clone(), &[&[0.7, 0.0], &[-0.7, 0.0]])?;
    let k = 2f64.powf(-1.0 / 3.0);
    let (u, v) = (real_vec(&[k, k]), real_vec(&[-k, k]));
    let n = triangle_violation_search(&t, SearchBudget::default(), ctx.seed, &[(u, v)])?;
    c.verdict("triangle", n.verdict, Verdict::Violation);
    if let Some((x, y)) = &n.witness {
        c.below("triangle_margin", triangle_margin(&t, x, y)?, 0.0).with_witness(&[x.clone(), y.clone()]);
    }
    let s3 = Space::lpf(3, 3.0)?;
    let x = real_vec(&[1.0, 2.0, 0.0]);
    let y = real_vec(&[4.0, -1.0, 0.0]);
    let fwd = bj_orthogonal(&s3, &x, &y, BJ_TOL)?.verdict;
    let back = bj_orthogonal(&s3, &y, &x, BJ_TOL)?.verdict;
    c.holds("bj_asymmetry", fwd == Verdict::Orthogonal && back == Verdict::NotOrthogonal, "").with_witness(&[x, y]);
    let r1 = rank_one(&s3, &real_vec(&[1.0, 0.5, -0.3]), &real_vec(&[0.2, 1.0, 0.4]), c64(0.8, 0.0))?;
    let st = star_linearity_probe(&r1, 200, ctx.seed)?;
    c.above("star_defect", st.value, 1e-3).with_witness(&st.witnesses);
    if st.witnesses.len() >= 2 {
        let again = star_defect(&r1, &st.witnesses[0], &st.witnesses[1])?;
        c.near("star_witness_reproduces", again, st.value, 1e-9);
    }
    let rk = rank_one(&l3, &basis_vec(2, 0), &basis_vec(2, 1), c64(0.99, 0.0))?;
    c.above("phi_norm", phi_norm_search(&rk, 10, 0.95, ctx.seed)?.norm, 1.0 + 1e-3);
    let s4 = Space::lpf(4, 3.0)?;
    let skew = Subspace::from_vectors(s4, &[real_vec(&[1.0, 1.0, 0.0, 0.0]), real_vec(&[0.0, 1.0, 1.0, 0.0])])?;
    c.above("hb_defect", hb_linearity_probe(&skew, 200, ctx.seed)?.value, 1e-3);
    // A_T for cI is a norm, but not one from an inner product.
    let ci = Operator::diagonal(s3, vec![c64(0.6, 0.0); 3])?;
    let (e1, e2) = (basis_vec(3, 0), basis_vec(3, 1));
    let lhs = a_t(&ci, &(&e1 + &e2))?.powi(2) + a_t(&ci, &(&e1 - &e2))?.powi(2);
    let rhs = 2.0 * (a_t(&ci, &e1)?.powi(2) + a_t(&ci, &e2)?.powi(2));
    c.above("parallelogram_defect", (lhs - rhs).abs(), 1e-3);
    Ok(())
}
