//! Registry of worked examples. Each entry builds its instance, runs its
//! checks and records one assertion row per claim.

use crate::error::CliError;
use crate::report::{Checks, Report};
use crate::Ctx;
use dilation_lab::decomposition::{canonical_decompose, gallery_operator, levan_decompose, wold_decompose, x_of_t, XMethod};
use dilation_lab::dilation::{lambda_window, triangle_margin, triangle_violation_search, SearchBudget};
use dilation_lab::operators::{a_hat_t, a_t, classify_contraction, left_inverse, norm_attainment_set, operator_norm};
use dilation_lab::orthogonality::{bj_orthogonal, bj_subspace, convex_hull_bj_poly, right_complement_check, BJ_TOL};
use dilation_lab::shifts::{make_backward_shift, make_sigma_shift, make_unilateral_shift, sigma_extension};
use dilation_lab::spaces::{basis_vec, real_vec, rng};
use dilation_lab::{c64, CMat, CVec, Operator, Space, Subspace, Verdict, C64};
use std::time::Instant;

pub(crate) type Run = fn(&Ctx, &mut Checks) -> Result<(), CliError>;

pub struct GalleryEntry {
    pub id: &'static str,
    /// Which worked example the entry reproduces.
    pub anchor: &'static str,
    pub summary: &'static str,
    run: Run,
}

/// Worked examples that have a finite-dimensional reproduction. Every topic
/// must be covered by exactly one registry entry.
pub const TOPICS: &[&str] = &[
    "lp counterexample, case I (p = 3/2)",
    "lp counterexample, case I (p = 1)",
    "lp counterexample, case II (p = 3)",
    "lp counterexample, case II (p = inf)",
    "coordinate complements in lp",
    "two right complements in l_inf^3",
    "disk algebra and the shift M_z",
    "unilateral shift on l_2(X)",
    "sigma shift on l_2(Z, X)",
    "scalar contraction cI",
    "diagonal contraction with A_T a norm",
    "G1 operator on l_1 without a norm",
    "G1 diagonal on l_2 with a norm",
    "G2 operator on l_1^3 without a semi-norm",
    "G2 backward shift with a semi-norm",
    "attainment set on l_1^2 that is not a subspace",
    "attainment set on l_1^3 that is a subspace outside the dilation class",
    "diagonal contraction with modified A_T",
    "X(T) on l_1^3 that is not a subspace",
    "X(T) on l_1^3 that is a subspace without a semi-norm",
    "canonical decomposition on l_3",
    "Levan decomposition on l_3",
];

pub fn registry() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry { id: "ex6-case1-p1.5", anchor: TOPICS[0], summary: "A_T violates the triangle inequality on l_3/2^2 at (e1, e2)", run: case1_p15 },
        GalleryEntry { id: "ex6-case1-p1", anchor: TOPICS[1], summary: "same operator on l_1^2", run: case1_p1 },
        GalleryEntry { id: "ex6-case2-p3", anchor: TOPICS[2], summary: "A_S violates the triangle inequality on l_3^2 at (u, v)", run: case2_p3 },
        GalleryEntry { id: "ex6-case2-pinf", anchor: TOPICS[3], summary: "same operator on l_inf^2", run: case2_pinf },
        GalleryEntry { id: "lp-coordinate-complement", anchor: TOPICS[4], summary: "coordinate blocks of l_3^4 are mutual right complements", run: lp_coordinate },
        GalleryEntry { id: "cinf3-two-complements", anchor: TOPICS[5], summary: "span{e1,e2} and span{e2,e3} both right-complement span{(1,1,1)}", run: cinf3 },
        GalleryEntry { id: "disk-algebra-Mz", anchor: TOPICS[6], summary: "z^n orthogonal to z^m, z+z^2 not orthogonal to 1", run: disk_algebra },
        GalleryEntry { id: "mz-unilateral-shift", anchor: TOPICS[7], summary: "Wold pieces and left inverse of M_z on l_2(l_3^2)", run: mz_shift },
        GalleryEntry { id: "sigma-bilateral-l3", anchor: TOPICS[8], summary: "sigma shift over l_3 and the extension of M_z", run: sigma_bilateral },
        GalleryEntry { id: "ci-defect-norm", anchor: TOPICS[9], summary: "A_T = sqrt(1 - c^2)|x| for T = cI", run: ci_defect },
        GalleryEntry { id: "diag-defect-norm", anchor: TOPICS[10], summary: "A_T = |T_mu x| for a block-diagonal T_lambda", run: diag_defect },
        GalleryEntry { id: "g1-l1-not-norm", anchor: TOPICS[11], summary: "G1 on l_1: A_T fails the triangle inequality at (e1, e2)", run: g1_l1 },
        GalleryEntry { id: "g1-l2-norm", anchor: TOPICS[12], summary: "G1 on l_2: A_T = |D_T x| is a norm", run: g1_l2 },
        GalleryEntry { id: "g2-l1-not-seminorm", anchor: TOPICS[13], summary: "G2 on l_1^3: A_T fails the triangle inequality at (e2, e3)", run: g2_l1 },
        GalleryEntry { id: "g2-backward-shift-seminorm", anchor: TOPICS[14], summary: "backward shift: A_T(x) = |x_0|", run: g2_backward },
        GalleryEntry { id: "l1-mhat-not-subspace", anchor: TOPICS[15], summary: "e1, e2 attain the norm, (e1+e2)/2 does not", run: mhat_not_subspace },
        GalleryEntry { id: "l1-mhat-subspace-outside-class", anchor: TOPICS[16], summary: "attainment set span{e1} while the modified A_T fails the triangle inequality", run: mhat_subspace },
        GalleryEntry { id: "diag-ahat-seminorm", anchor: TOPICS[17], summary: "modified A_T of T_lambda equals |T_mu x|", run: diag_ahat },
        GalleryEntry { id: "l1-xt-not-subspace", anchor: TOPICS[18], summary: "X(T) contains e1, e2 but not e1+e2", run: xt_not_subspace },
        GalleryEntry { id: "l1-xt-subspace-not-seminorm", anchor: TOPICS[19], summary: "X(T) = span{e1} while A_T is not a semi-norm", run: xt_subspace },
        GalleryEntry { id: "canonical-lp3", anchor: TOPICS[20], summary: "X(T) and the unitary part W of the l_3 gallery operator", run: canonical_lp3 },
        GalleryEntry { id: "levan-lp3", anchor: TOPICS[21], summary: "unitary, shift and c.n.i. parts of the l_3 gallery operator", run: levan_lp3 },
    ]
}

pub fn ids() -> Vec<&'static str> {
    registry().iter().map(|e| e.id).collect()
}

pub fn run_example(id: &str, ctx: &Ctx) -> Result<Report, CliError> {
    ctx.validate()?;
    let reg = registry();
    let entry = reg.iter().find(|e| e.id == id).ok_or_else(|| CliError::UnknownId(id.to_string()))?;
    let mut c = ctx.checks();
    let start = Instant::now();
    (entry.run)(ctx, &mut c)?;
    let mut r = Report::new(entry.id, "example", ctx.seed, c.rows);
    r.anchor = Some(entry.anchor.to_string());
    r.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(r)
}

/// Run an entry's checks into an existing collector.
pub(crate) fn run_into(id: &str, ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let reg = registry();
    let entry = reg.iter().find(|e| e.id == id).ok_or_else(|| CliError::UnknownId(id.to_string()))?;
    (entry.run)(ctx, c)
}

pub(crate) fn real_op(space: Space, rows: &[&[f64]]) -> Result<Operator, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    let flat: Vec<C64> = rows.iter().flat_map(|r| r.iter().map(|&x| c64(x, 0.0))).collect();
    Ok(Operator::on(space, CMat::from_row_slice(n, m, &flat))?)
}

fn close(a: &CVec, b: &CVec, tol: f64) -> bool {
    a.len() == b.len() && (a - b).norm() <= tol
}

/// `2 sqrt(1 - l^2) - |u + v|` for the two-point counterexamples.
fn margin_oracle(l: f64, joint: f64) -> f64 {
    2.0 * (1.0 - l * l).sqrt() - joint
}

fn lambda_checks(c: &mut Checks, p: f64, l: f64) {
    let (lo, hi) = lambda_window(p).unwrap_or((f64::NAN, f64::NAN));
    c.holds("lambda_in_window", lo < l && l < hi, format!("{l} in ({lo}, {hi})"));
}

fn violation_at(
    c: &mut Checks,
    t: &Operator,
    seed: u64,
    pair: (CVec, CVec),
    oracle: f64,
    must_match_pair: bool,
) -> Result<(), CliError> {
    let (x, y) = pair;
    let direct = triangle_margin(t, &x, &y)?;
    c.near("margin_at_pair", direct, oracle, 1e-9).with_witness(&[x.clone(), y.clone()]);
    c.below("margin_at_pair_negative", direct, 0.0);
    let s = triangle_violation_search(t, SearchBudget::default(), seed, &[(x.clone(), y.clone())])?;
    c.verdict("search_verdict", s.verdict, Verdict::Violation);
    c.below("search_margin", s.margin, 0.0);
    if let Some((wx, wy)) = &s.witness {
        let again = triangle_margin(t, wx, wy)?;
        c.near("witness_reproduces", again, s.margin, 1e-12).with_witness(&[wx.clone(), wy.clone()]);
        if must_match_pair {
            c.holds("witness_is_pair", close(wx, &x, 1e-12) && close(wy, &y, 1e-12), "");
        }
    } else {
        c.holds("witness_present", false, "violation without witness");
    }
    Ok(())
}

fn case1_op(p: f64, l: f64) -> Result<Operator, CliError> {
    real_op(Space::lpf(2, p)?, &[&[l, -l], &[0.0, 0.0]])
}

fn case1_p15(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.7;
    lambda_checks(c, 1.5, l);
    let t = case1_op(1.5, l)?;
    let (e1, e2) = (basis_vec(2, 0), basis_vec(2, 1));
    let sum = a_t(&t, &e1)? + a_t(&t, &e2)?;
    c.near("a_t(e1)+a_t(e2)", sum, 2.0 * 0.51f64.sqrt(), 1e-9);
    c.near("a_t(e1+e2)", a_t(&t, &(&e1 + &e2))?, 2f64.powf(2.0 / 3.0), 1e-9);
    let oracle = margin_oracle(l, 2f64.powf(2.0 / 3.0));
    let s = triangle_violation_search(&t, SearchBudget::default(), ctx.seed, &[])?;
    c.verdict("search_verdict", s.verdict, Verdict::Violation);
    c.near("search_margin", s.margin, oracle, 1e-6);
    let (x, y) = s.witness.clone().unwrap_or((CVec::zeros(2), CVec::zeros(2)));
    c.holds("witness_is_e1_e2", close(&x, &e1, 1e-12) && close(&y, &e2, 1e-12), "").with_witness(&[x, y]);
    Ok(())
}

fn case1_p1(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.7;
    lambda_checks(c, 1.0, l);
    let t = case1_op(1.0, l)?;
    violation_at(c, &t, ctx.seed, (basis_vec(2, 0), basis_vec(2, 1)), margin_oracle(l, 2.0), false)
}

fn case2_op(p: f64, l: f64) -> Result<Operator, CliError> {
    real_op(Space::lpf(2, p)?, &[&[l, 0.0], &[-l, 0.0]])
}

fn case2_p3(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.7;
    lambda_checks(c, 3.0, l);
    let s = Space::lpf(2, 3.0)?;
    let t = case2_op(3.0, l)?;
    let k = 2f64.powf(-1.0 / 3.0);
    let (u, v) = (real_vec(&[k, k]), real_vec(&[-k, k]));
    c.near("|Su|", s.norm(&t.apply(&u)?)?, l, 1e-9);
    violation_at(c, &t, ctx.seed, (u, v), margin_oracle(l, 2f64.powf(2.0 / 3.0)), true)
}

fn case2_pinf(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.7;
    lambda_checks(c, f64::INFINITY, l);
    let s = Space::lpf(2, f64::INFINITY)?;
    let t = case2_op(f64::INFINITY, l)?;
    let (u, v) = (real_vec(&[1.0, 1.0]), real_vec(&[-1.0, 1.0]));
    c.near("|Su|", s.norm(&t.apply(&u)?)?, l, 1e-9);
    violation_at(c, &t, ctx.seed, (u, v), margin_oracle(l, 2.0), false)
}

fn lp_coordinate(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(4, 3.0)?;
    let y = Subspace::coordinates(s.clone(), &[0, 1])?;
    let z = Subspace::coordinates(s.clone(), &[2, 3])?;
    let yz = right_complement_check(&y, &z, 16, ctx.seed)?;
    c.verdict("z_right_complements_y", yz.verdict, Verdict::Pass);
    let zy = right_complement_check(&z, &y, 16, ctx.seed)?;
    c.verdict("y_right_complements_z", zy.verdict, Verdict::Pass);
    let skew = Subspace::from_vectors(s, &[real_vec(&[1.0, 0.0, 1.0, 0.0]), basis_vec(4, 3)])?;
    let b = bj_subspace(&y, &skew, 16, ctx.seed)?;
    c.verdict("skew_complement_rejected", b.verdict, Verdict::NotOrthogonal).with_witness(&b.witnesses);
    Ok(())
}

fn cinf3(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let s = Space::lpf(3, f64::INFINITY)?;
    let ones = real_vec(&[1.0, 1.0, 1.0]);
    for (i, e) in [(0, basis_vec(3, 0)), (1, basis_vec(3, 1)), (2, basis_vec(3, 2))] {
        let o = bj_orthogonal(&s, &ones, &e, BJ_TOL)?;
        c.verdict(&format!("ones_perp_e{}", i + 1), o.verdict, Verdict::Orthogonal);
    }
    let y = Subspace::from_vectors(s.clone(), &[ones])?;
    for (name, idx) in [("span_e1_e2", [0, 1]), ("span_e2_e3", [1, 2])] {
        let z = Subspace::coordinates(s.clone(), &idx)?;
        let r = right_complement_check(&y, &z, 32, ctx.seed)?;
        c.verdict(&format!("{name}_right_complement"), r.verdict, Verdict::Pass);
    }
    let a = Subspace::coordinates(s.clone(), &[0, 1])?;
    let b = Subspace::coordinates(s, &[1, 2])?;
    c.above("complements_differ", a.distance(&b), 0.5);
    Ok(())
}

fn disk_algebra(_ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let g = 4096;
    let deg = 6;
    let s = Space::poly_sup(deg, g)?;
    let mut bad = Vec::new();
    let mut hull_bad = Vec::new();
    for n in 1..=deg {
        for m in 0..n {
            let v = bj_orthogonal(&s, &basis_vec(deg + 1, n), &basis_vec(deg + 1, m), BJ_TOL)?;
            if v.verdict != Verdict::Orthogonal {
                bad.push(format!("z^{n},z^{m}"));
            }
            let h = convex_hull_bj_poly(&basis_vec(n + 1, n), &basis_vec(m + 1, m), g)?;
            if h.verdict != Verdict::Orthogonal {
                hull_bad.push(format!("z^{n},z^{m}"));
            }
        }
    }
    c.holds("z^n_perp_z^m", bad.is_empty(), bad.join(" "));
    c.holds("z^n_perp_z^m_hull", hull_bad.is_empty(), hull_bad.join(" "));
    let f = real_vec(&[0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let one = basis_vec(deg + 1, 0);
    let o = bj_orthogonal(&s, &f, &one, BJ_TOL)?;
    c.verdict("z+z^2_not_perp_1", o.verdict, Verdict::NotOrthogonal).with_witness(&o.witnesses);
    let m = o.notes.get("bj_min").copied().unwrap_or(f64::NAN);
    c.below("min_|z+z^2+l|", m, 2.0 - 0.02);
    let h = convex_hull_bj_poly(&real_vec(&[0.0, 1.0, 1.0]), &real_vec(&[1.0]), g)?;
    c.verdict("z+z^2_not_perp_1_hull", h.verdict, Verdict::NotOrthogonal);
    // z + z^2 lies in the range of M_z and 1 spans the constants, the only
    // coordinate candidate for a complement; the pair above rules it out.
    let range = Subspace::coordinates(s.clone(), &(1..=deg).collect::<Vec<_>>())?;
    let consts = Subspace::coordinates(s.clone(), &[0])?;
    let in_place = range.contains(&f, 1e-15) && consts.contains(&one, 1e-15);
    c.holds("constants_not_right_complement_of_range", in_place && o.verdict == Verdict::NotOrthogonal, "")
        .with_witness(&[f.clone(), one.clone()]);
    // M_z is an isometry on polynomials of lower degree.
    let mut worst: f64 = 0.0;
    let mut rr = rng(6);
    for _ in 0..20 {
        let mut p = dilation_lab::spaces::gaussian_vec(deg + 1, &mut rr);
        p[deg] = c64(0.0, 0.0);
        let zp = CVec::from_fn(deg + 1, |i, _| if i == 0 { c64(0.0, 0.0) } else { p[i - 1] });
        worst = worst.max((s.norm(&zp)? - s.norm(&p)?).abs() / s.norm(&p)?);
    }
    c.small("M_z_isometry_grid", worst, 1e-12);
    Ok(())
}

fn mz_shift(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let h = ctx.horizon.unwrap_or(4);
    let blocks = 2 * h;
    let x = Space::lpf(2, 3.0)?;
    let v = make_unilateral_shift(&x, blocks)?;
    let k = v.domain().clone();
    let d = wold_decompose(&v, h, ctx.window.unwrap_or(k.dim()), ctx.seed)?;
    c.equal("unitary_part_dim", d.part("unitary").map_or(usize::MAX, |p| p.subspace.dim()), 0);
    c.above("shift_part_dim", d.part("shift").map_or(0.0, |p| p.window_subspace.dim() as f64), 0.0);
    for (key, val) in &d.residuals {
        if key.ends_with("bj_gap") {
            c.small(&format!("{key}_deficit"), (-val).max(0.0), 1e-9);
        }
    }
    let a = left_inverse(&v)?;
    let av = a.entries() * v.entries();
    let inner = (blocks - 1) * 2;
    let mut worst: f64 = 0.0;
    for j in 0..inner {
        for i in 0..k.dim() {
            let e = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((av[(i, j)] - c64(e, 0.0)).norm());
        }
    }
    c.small("left_inverse_residual", worst, 1e-12);
    let mut r = rng(ctx.seed);
    let mut iso: f64 = 0.0;
    for _ in 0..20 {
        let mut u = k.random_unit_with(&mut r);
        for i in inner..k.dim() {
            u[i] = c64(0.0, 0.0);
        }
        iso = iso.max((k.norm(&v.apply(&u)?)? - k.norm(&u)?).abs());
    }
    c.small("isometry_off_the_edge", iso, 1e-12);
    Ok(())
}

fn sigma_bilateral(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let x = Space::lpf(1, 3.0)?;
    let hw = ctx.horizon.unwrap_or(20);
    let b = make_sigma_shift(&x, hw, ctx.seed)?;
    c.holds("sigma_shift_checks", b.certificate.passed(), format!("{:?}", b.certificate.verdict));
    let v = make_unilateral_shift(&x, 10)?;
    let (eb, cert) = sigma_extension(&v, 6, ctx.seed)?;
    c.holds("extension_checks", cert.passed() && eb.certificate.passed(), format!("{:?}", cert.verdict));
    c.small("extension_residual", cert.notes.get("extension_residual").copied().unwrap_or(f64::NAN), 1e-10);
    let ratio = cert.notes.get("sigma_ratio_max").copied().unwrap_or(f64::NAN);
    c.small("sigma_ratio_max_over_sqrt2", ratio - std::f64::consts::SQRT_2, 1e-9);
    Ok(())
}

fn ci_defect(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let cc = 0.6;
    let s = Space::lpf(3, 3.0)?;
    let t = Operator::diagonal(s.clone(), vec![c64(cc, 0.0); 3])?;
    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = dilation_lab::spaces::gaussian_vec(3, &mut r);
        worst = worst.max((a_t(&t, &x)? - (1.0 - cc * cc).sqrt() * s.norm(&x)?).abs());
    }
    c.small("a_t_is_scaled_norm", worst, 1e-12);
    let n = triangle_violation_search(&t, SearchBudget::default(), ctx.seed, &[])?;
    c.verdict("a_t_verdict", n.verdict, Verdict::Norm);
    // (X, A_T) is l_3 rescaled, so the parallelogram law fails.
    let (e1, e2) = (basis_vec(3, 0), basis_vec(3, 1));
    let lhs = a_t(&t, &(&e1 + &e2))?.powi(2) + a_t(&t, &(&e1 - &e2))?.powi(2);
    let rhs = 2.0 * (a_t(&t, &e1)?.powi(2) + a_t(&t, &e2)?.powi(2));
    c.above("parallelogram_defect", (lhs - rhs).abs(), 1e-3);
    Ok(())
}

fn block_diag(x: &Space, blocks: usize, vals: &[C64]) -> Result<Operator, CliError> {
    let k = Space::block_seq(x.clone(), blocks)?;
    let d = x.dim();
    let diag: Vec<C64> = (0..blocks * d).map(|i| vals[i / d]).collect();
    Ok(Operator::diagonal(k, diag)?)
}

fn diag_defect(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let x = Space::lpf(2, 3.0)?;
    let blocks = 6;
    let lam: Vec<C64> = (1..=blocks).map(|n| c64(n as f64 / (2.0 * (n as f64 + 2.0)), 0.0)).collect();
    let mu: Vec<C64> = lam.iter().map(|l| c64((1.0 - l.norm_sqr()).sqrt(), 0.0)).collect();
    let t = block_diag(&x, blocks, &lam)?;
    let tm = block_diag(&x, blocks, &mu)?;
    let k = t.domain().clone();
    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = k.random_unit_with(&mut r);
        worst = worst.max((a_t(&t, &v)? - k.norm(&tm.apply(&v)?)?).abs());
    }
    c.small("a_t_equals_|T_mu x|", worst, 1e-12);
    let n = triangle_violation_search(&t, SearchBudget::default(), ctx.seed, &[])?;
    c.verdict("a_t_verdict", n.verdict, Verdict::Norm);
    c.near("positivity", n.positivity_value, (1.0 - lam[blocks - 1].norm_sqr()).sqrt(), 1e-6);
    Ok(())
}

fn g1_l1(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let n = 8;
    let lam = |k: usize| (2.0 * k as f64 - 1.0) / (2.0 * k as f64);
    let mut m = CMat::zeros(n, n);
    m[(0, 0)] = c64(lam(1), 0.0);
    m[(0, 1)] = c64(-lam(1), 0.0);
    for i in 1..n - 1 {
        m[(i, i + 1)] = c64(lam(i + 1), 0.0);
    }
    let t = Operator::on(Space::lpf(n, 1.0)?, m)?.with_model_norm(1.0);
    let cl = classify_contraction(&t, ctx.seed);
    c.verdict("class", cl.class, Verdict::G1);
    c.below("truncated_norm", cl.norm.value, 1.0);
    let oracle = margin_oracle(lam(1), 2.0);
    violation_at(c, &t, ctx.seed, (basis_vec(n, 0), basis_vec(n, 1)), oracle, false)
}

fn g1_l2(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let n = 8;
    let lam: Vec<f64> = (1..=n).map(|k| (k as f64 - 1.0) / k as f64).collect();
    let s = Space::lpf(n, 2.0)?;
    let t = Operator::diagonal(s.clone(), lam.iter().map(|&l| c64(l, 0.0)).collect())?.with_model_norm(1.0);
    let cl = classify_contraction(&t, ctx.seed);
    c.verdict("class", cl.class, Verdict::G1);
    let dt = Operator::diagonal(s.clone(), lam.iter().map(|&l| c64((1.0 - l * l).sqrt(), 0.0)).collect())?;
    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = s.random_unit_with(&mut r);
        worst = worst.max((a_t(&t, &v)? - s.norm(&dt.apply(&v)?)?).abs());
    }
    c.small("a_t_equals_|D_T x|", worst, 1e-12);
    let v = triangle_violation_search(&t, SearchBudget::default(), ctx.seed, &[])?;
    c.verdict("a_t_verdict", v.verdict, Verdict::Norm);
    Ok(())
}

fn l1_xyz(l: f64) -> Result<Operator, CliError> {
    real_op(Space::lpf(3, 1.0)?, &[&[1.0, 0.0, 0.0], &[0.0, l, -l], &[0.0, 0.0, 0.0]])
}

fn g2_l1(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.5;
    let t = l1_xyz(l)?;
    let cl = classify_contraction(&t, ctx.seed);
    c.verdict("class", cl.class, Verdict::G2);
    let e1 = basis_vec(3, 0);
    c.small("e1_attains", 1.0 - t.domain().norm(&t.apply(&e1)?)?, 1e-12);
    violation_at(c, &t, ctx.seed, (basis_vec(3, 1), basis_vec(3, 2)), margin_oracle(l, 2.0), false)
}

fn g2_backward(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let x = Space::lpf(2, 3.0)?;
    let b = make_backward_shift(&x, 5)?;
    let k = b.domain().clone();
    let cl = classify_contraction(&b, ctx.seed);
    c.verdict("class", cl.class, Verdict::G2);
    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = k.random_unit_with(&mut r);
        let head = x.norm(&v.rows(0, 2).into_owned())?;
        worst = worst.max((a_t(&b, &v)? - head).abs());
    }
    c.small("a_t_equals_|x_0|", worst, 1e-12);
    let n = triangle_violation_search(&b, SearchBudget::default(), ctx.seed, &[])?;
    c.verdict("a_t_verdict", n.verdict, Verdict::SemiNorm);
    Ok(())
}

fn mhat_not_subspace(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.5;
    let t = real_op(Space::lpf(2, 1.0)?, &[&[l, -l], &[0.0, 0.0]])?;
    let m = norm_attainment_set(&t, ctx.seed, None)?;
    c.near("norm", m.norm.value, l, 1e-12);
    c.equal("attaining_unit_vectors", m.witnesses.len(), 2);
    c.holds("not_a_subspace", !m.is_subspace, "");
    if let Some(w) = &m.closure_witness {
        let s = t.domain();
        let ratio = s.norm(&t.apply(w)?)? / s.norm(w)?;
        c.below("closure_witness_ratio", ratio, l - 1e-3).with_witness(std::slice::from_ref(w));
    } else {
        c.holds("closure_witness_present", false, "");
    }
    let mid = real_vec(&[0.5, 0.5]);
    c.small("midpoint_ratio", t.domain().norm(&t.apply(&mid)?)?, 1e-15);
    Ok(())
}

fn mhat_subspace(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.5;
    let t = l1_xyz(l)?;
    let m = norm_attainment_set(&t, ctx.seed, None)?;
    c.holds("is_subspace", m.is_subspace, "");
    let e1 = Subspace::coordinates(t.domain().clone(), &[0])?;
    c.small("span_is_e1", m.span.distance(&e1), 1e-9);
    let nt = m.norm.value;
    let (e2, e3) = (basis_vec(3, 1), basis_vec(3, 2));
    let margin = a_hat_t(&t, nt, &e2)? + a_hat_t(&t, nt, &e3)? - a_hat_t(&t, nt, &(&e2 + &e3))?;
    c.near("modified_margin", margin, margin_oracle(l, 2.0), 1e-9).with_witness(&[e2, e3]);
    c.below("modified_margin_negative", margin, 0.0);
    Ok(())
}

fn diag_ahat(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let x = Space::lpf(2, 3.0)?;
    let lam = vec![c64(0.5, 0.0), C64::from_polar(0.9, 1.0), c64(0.3, 0.0), c64(0.0, 0.7), c64(0.2, 0.0)];
    let sup = 0.9;
    let t = block_diag(&x, lam.len(), &lam)?;
    let mu: Vec<C64> = lam.iter().map(|l| c64((sup * sup - l.norm_sqr()).sqrt(), 0.0)).collect();
    let tm = block_diag(&x, lam.len(), &mu)?;
    let k = t.domain().clone();
    let est = operator_norm(&t, 16, ctx.seed);
    c.near("norm", est.value, sup, 1e-9);
    let mut r = rng(ctx.seed);
    let mut worst: f64 = 0.0;
    let mut tri: f64 = 0.0;
    for _ in 0..50 {
        let u = k.random_unit_with(&mut r);
        let v = k.random_unit_with(&mut r);
        worst = worst.max((a_hat_t(&t, sup, &u)? - k.norm(&tm.apply(&u)?)?).abs());
        let m = a_hat_t(&t, sup, &u)? + a_hat_t(&t, sup, &v)? - a_hat_t(&t, sup, &(&u + &v))?;
        tri = tri.max(-m);
    }
    c.small("modified_a_t_equals_|T_mu x|", worst, 1e-12);
    c.small("triangle_deficit", tri.max(0.0), 1e-12);
    let peak = k.embed_block(1, &real_vec(&[1.0, -1.0]))?;
    c.small("vanishes_on_peak_block", a_hat_t(&t, sup, &peak)?, 1e-7);
    Ok(())
}

fn xt_not_subspace(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let t = real_op(Space::lpf(3, 1.0)?, &[&[1.0, -1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]])?;
    let t2 = t.pow(2)?;
    c.small("idempotent", (t2.entries() - t.entries()).norm(), 1e-15);
    let nmax = ctx.horizon.unwrap_or(4);
    let p = x_of_t(&t, nmax, XMethod::Structural)?;
    c.holds("not_a_subspace", !p.is_subspace, "");
    let s = t.domain();
    for j in [0, 1] {
        let e = basis_vec(3, j);
        c.small(&format!("e{}_isometric", j + 1), (s.norm(&t.apply(&e)?)? - 1.0).abs(), 1e-15);
    }
    let sum = real_vec(&[1.0, 1.0, 0.0]);
    c.above("e1+e2_loses_norm", s.norm(&sum)? - s.norm(&t.apply(&sum)?)?, 1e-3);
    if let Some(w) = &p.closure_witness {
        let gap = (s.norm(w)? - s.norm(&t.apply(w)?)?).abs();
        c.above("closure_witness_gap", gap, 1e-9).with_witness(std::slice::from_ref(w));
    }
    Ok(())
}

fn xt_subspace(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let l = 0.5;
    let t = l1_xyz(l)?;
    let p = x_of_t(&t, ctx.horizon.unwrap_or(4), XMethod::Structural)?;
    c.holds("is_subspace", p.is_subspace, "");
    c.holds("coordinates_are_e1", p.coords.as_deref() == Some(&[0][..]), format!("{:?}", p.coords));
    violation_at(c, &t, ctx.seed, (basis_vec(3, 1), basis_vec(3, 2)), margin_oracle(l, 2.0), false)
}

fn coords(n: usize, f: impl Fn(usize) -> bool) -> Vec<usize> {
    (0..n).filter(|&j| f(j)).collect()
}

fn canonical_lp3(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let window = ctx.window.unwrap_or(64);
    let nmax = ctx.horizon.unwrap_or(8);
    let t = gallery_operator(window, nmax)?;
    let d = canonical_decompose(&t, nmax, window)?;
    let x = t.domain().clone();
    let odd = Subspace::coordinates(x.clone(), &coords(window, |j| j % 2 == 1))?;
    let w = Subspace::coordinates(x, &coords(window, |j| j % 4 == 1))?;
    let xt = d.part("x_of_t").ok_or_else(|| CliError::Input("missing X(T)".into()))?;
    let un = d.part("unitary").ok_or_else(|| CliError::Input("missing W".into()))?;
    c.small("x_of_t_distance", xt.window_subspace.distance(&odd), 1e-8);
    c.small("unitary_distance", un.window_subspace.distance(&w), 1e-8);
    c.small("left_inverse", d.residuals.get("left_inverse").copied().unwrap_or(f64::NAN), 1e-12);
    c.small("unitary_isometry", d.residuals.get("unitary_isometry").copied().unwrap_or(f64::NAN), 1e-9);
    c.small("unitary_invariance", un.invariance_residual, 1e-12);
    Ok(())
}

fn levan_lp3(ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let window = ctx.window.unwrap_or(32);
    let nmax = ctx.horizon.unwrap_or(6);
    let t = gallery_operator(window, nmax)?;
    let d = levan_decompose(&t, nmax, window, ctx.seed)?;
    let x = t.domain().clone();
    for (name, want) in [
        ("unitary", coords(window, |j| j % 4 == 1)),
        ("shift", coords(window, |j| j % 4 == 3)),
        ("cni", coords(window, |j| j % 2 == 0)),
    ] {
        let target = Subspace::coordinates(x.clone(), &want)?;
        let got = d.part(name).ok_or_else(|| CliError::Input(format!("missing part {name}")))?;
        c.small(&format!("{name}_distance"), got.window_subspace.distance(&target), 1e-8);
    }
    c.small("cni_isometric_samples", d.residuals.get("cni_isometric_samples").copied().unwrap_or(f64::NAN), 0.0);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_topic_has_exactly_one_entry() {
        let reg = registry();
        for t in TOPICS {
            assert_eq!(reg.iter().filter(|e| e.anchor == *t).count(), 1, "{t}");
        }
        assert_eq!(reg.len(), TOPICS.len());
        let mut ids = ids();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), reg.len());
    }

    #[test]
    fn unknown_ids_are_errors() {
        assert!(matches!(run_example("no-such-example", &Ctx::default()), Err(CliError::UnknownId(_))));
    }
}
