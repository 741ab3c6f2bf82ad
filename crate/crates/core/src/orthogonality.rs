//! Birkhoff-James orthogonality for vectors, subspaces and polynomials, and
//! checks for norm-one projections and right complements.

use crate::certificate::{Certificate, Verdict};
use crate::error::{check_len, Error, Result};
use crate::functionals::support_functional;
use crate::linalg;
use crate::operators::{operator_norm, Operator};
use crate::optim::compass_2d;
use crate::spaces::{poly_grid_values, rng, Space};
use crate::subspace::Subspace;
use crate::{CVec, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Minimizer and minimum of `lambda -> |x + lambda y|`.
#[derive(Clone, Copy, Debug)]
pub struct BjMin {
    pub lambda: C64,
    pub value: f64,
}

/// Minimize `|x + lambda y|` over complex `lambda`: a 16 x 24 polar grid out
/// to radius `4|x|/|y|`, then compass descent from the best grid point.
pub fn bj_min(space: &Space, x: &CVec, y: &CVec) -> Result<BjMin> {
    check_len(space.dim(), x.len())?;
    check_len(space.dim(), y.len())?;
    let ny = space.norm(y)?;
    if ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let nx = space.norm(x)?;
    if nx == 0.0 {
        return Ok(BjMin { lambda: C64::new(0.0, 0.0), value: 0.0 });
    }
    let mut buf = x.clone();
    let mut eval = |a: f64, b: f64| {
        let l = C64::new(a, b);
        for i in 0..buf.len() {
            buf[i] = x[i] + l * y[i];
        }
        space.norm_slice(buf.as_slice())
    };
    let radius = 4.0 * nx / ny;
    let mut best = ((0.0, 0.0), nx);
    for ia in 0..16 {
        let th = 2.0 * PI * ia as f64 / 16.0;
        for ir in 1..=24 {
            let r = radius * ir as f64 / 24.0;
            let (a, b) = (r * th.cos(), r * th.sin());
            let v = eval(a, b);
            if v < best.1 {
                best = ((a, b), v);
            }
        }
    }
    let step = radius / 24.0;
    let min_step = 1e-10 * radius.max(f64::MIN_POSITIVE);
    let (mut p, mut v) = compass_2d(&mut eval, best.0, step, min_step);
    // Restart from the polished point with a rotated stencil; compass search
    // can stall on ridges of nonsmooth norms that are not axis aligned.
    let rot = (PI / 8.0).sin_cos();
    for _ in 0..4 {
        let (q, w) = compass_2d(
            |a, b| {
                let (u, t) = (a * rot.1 - b * rot.0, a * rot.0 + b * rot.1);
                eval(p.0 + u, p.1 + t)
            },
            (0.0, 0.0),
            step / 8.0,
            min_step,
        );
        let (u, t) = (q.0 * rot.1 - q.1 * rot.0, q.0 * rot.0 + q.1 * rot.1);
        let cand = (p.0 + u, p.1 + t);
        if w < v {
            let (q2, w2) = compass_2d(&mut eval, cand, step / 8.0, min_step);
            p = q2;
            v = w2;
        } else {
            break;
        }
    }
    if v > nx {
        return Ok(BjMin { lambda: C64::new(0.0, 0.0), value: nx });
    }
    Ok(BjMin { lambda: C64::new(p.0, p.1), value: v })
}

/// Decide `x ⊥_B y`: orthogonal iff `min |x + lambda y| >= |x| (1 - tol)`.
///
/// On smooth spaces James's criterion `f_x(y) = 0` is evaluated as well. A
/// non-orthogonal verdict with `|f_x(y)| <= tol |x||y|`, or an orthogonal one
/// with `|f_x(y)| > 10 sqrt(tol) |x||y|`, is an `Inconsistent` error. Between
/// the two bands the minimization is authoritative, since a first-order
/// defect `d` only lowers the minimum by about `d^2`.
pub fn bj_orthogonal(space: &Space, x: &CVec, y: &CVec, tol: f64) -> Result<Certificate> {
    let nx = space.norm(x)?;
    let ny = space.norm(y)?;
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let m = bj_min(space, x, y)?;
    let gap = m.value / nx - 1.0;
    let orthogonal = gap >= -tol;
    let mut cert = Certificate::new(
        if orthogonal { Verdict::Orthogonal } else { Verdict::NotOrthogonal },
        gap,
        0,
        1,
    )
    .with_note("bj_min", m.value)
    .with_note("lambda_re", m.lambda.re)
    .with_note("lambda_im", m.lambda.im);
    if space.is_smooth() {
        let f = support_functional(space, x, false)?;
        let james = f.apply(y).norm() / (nx * ny);
        cert = cert.with_note("james", james);
        if !orthogonal && james <= tol {
            return Err(Error::Inconsistent(format!(
                "minimization found gap {gap:.3e} but f_x(y) = {james:.3e}"
            )));
        }
        if orthogonal && james > 10.0 * tol.sqrt() {
            return Err(Error::Inconsistent(format!(
                "minimization found no descent but f_x(y) = {james:.3e}"
            )));
        }
    }
    if !orthogonal {
        cert.witnesses = vec![x.clone(), y.clone()];
    }
    Ok(cert)
}

/// Default tolerance for orthogonality decisions.
pub const BJ_TOL: f64 = 1e-9;

fn pair_gap(space: &Space, y: &CVec, z: &CVec) -> f64 {
    let ny = space.norm_slice(y.as_slice());
    match bj_min(space, y, z) {
        Ok(m) if ny > 0.0 => m.value / ny - 1.0,
        _ => 0.0,
    }
}

/// `Y ⊥_B Z` by sampling unit pairs and a local descent on the worst ones.
pub fn bj_subspace(y: &Subspace, z: &Subspace, samples: usize, seed: u64) -> Result<Certificate> {
    if y.is_zero() || z.is_zero() {
        return Err(Error::Refused("orthogonality of a zero subspace".into()));
    }
    let space = y.ambient();
    let (by, bz) = (y.basis(), z.basis());
    let (ky, kz) = (by.ncols(), bz.ncols());
    let coeff_pairs: Vec<(CVec, CVec)> = {
        let mut r = rng(seed);
        let mut v: Vec<(CVec, CVec)> = Vec::with_capacity(samples + ky * kz);
        // Basis pairs first: they catch most structured failures.
        for i in 0..ky {
            for j in 0..kz {
                v.push((crate::spaces::basis_vec(ky, i), crate::spaces::basis_vec(kz, j)));
            }
        }
        // Two lines: the gap is homogeneous, so the basis pair decides.
        let samples = if ky * kz == 1 { 0 } else { samples };
        for _ in 0..samples {
            v.push((crate::spaces::gaussian_vec(ky, &mut r), crate::spaces::gaussian_vec(kz, &mut r)));
        }
        v
    };
    let gaps: Vec<f64> = coeff_pairs
        .par_iter()
        .map(|(cy, cz)| pair_gap(space, &(by * cy), &(bz * cz)))
        .collect();
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b)));
    // Random-perturbation descent from the four worst pairs.
    let refined: Vec<(f64, CVec, CVec)> = order
        .iter()
        .take(if ky * kz == 1 { 0 } else { 4 })
        .map(|&i| {
            let (mut cy, mut cz) = coeff_pairs[i].clone();
            let mut g = gaps[i];
            let mut r = rng(seed ^ (0xb1 + i as u64));
            let mut h = 0.3;
            for _ in 0..60 {
                let dy = crate::spaces::gaussian_vec(ky, &mut r) * C64::new(h * cy.norm(), 0.0);
                let dz = crate::spaces::gaussian_vec(kz, &mut r) * C64::new(h * cz.norm(), 0.0);
                let (ny, nz) = (&cy + dy, &cz + dz);
                let gn = pair_gap(space, &(by * &ny), &(bz * &nz));
                if gn < g {
                    cy = ny;
                    cz = nz;
                    g = gn;
                } else {
                    h *= 0.8;
                }
            }
            (g, by * cy, bz * cz)
        })
        .collect();
    let mut worst = (gaps[order[0]], by * &coeff_pairs[order[0]].0, bz * &coeff_pairs[order[0]].1);
    for c in refined {
        if c.0 < worst.0 {
            worst = c;
        }
    }
    let orth = worst.0 >= -BJ_TOL;
    let mut cert = Certificate::new(
        if orth { Verdict::Orthogonal } else { Verdict::NotOrthogonal },
        worst.0,
        seed,
        coeff_pairs.len(),
    );
    cert.witnesses = vec![worst.1, worst.2];
    Ok(cert)
}

/// Range and kernel of a projection together with the check outcome.
#[derive(Clone, Debug)]
pub struct ProjectionCheck {
    pub certificate: Certificate,
    pub range: Subspace,
    pub kernel: Subspace,
}

/// Check that `P` is a norm-one projection and that its range is
/// Birkhoff-James orthogonal to its kernel.
pub fn norm_one_projection_check(p: &Operator, seed: u64) -> Result<ProjectionCheck> {
    if !p.is_square() {
        return Err(Error::Refused("projection must be square".into()));
    }
    let m = p.entries();
    let idem = linalg::max_abs(&(m * m - m));
    if idem >= 1e-10 {
        return Err(Error::Inconsistent(format!("P^2 - P has entry {idem:.3e}")));
    }
    let space = p.domain().clone();
    let range = Subspace::span_of(space.clone(), m, 1e-10)?;
    let kernel = Subspace::from_frame(space.clone(), linalg::null_space(m, 1e-10));
    let est = operator_norm(p, 16, seed);
    let norm_ok = (est.value - 1.0).abs() <= 1e-6 || (range.is_zero() && est.value == 0.0);
    let mut cert = Certificate::new(Verdict::Pass, est.value, seed, 1)
        .with_note("idempotence", idem)
        .with_note("norm_exact", if est.exact { 1.0 } else { 0.0 });
    if !norm_ok {
        cert.verdict = Verdict::Fail;
        cert.witnesses.push(est.witness.clone());
        return Ok(ProjectionCheck { certificate: cert, range, kernel });
    }
    if !range.is_zero() && !kernel.is_zero() {
        let bj = bj_subspace(&range, &kernel, 64, seed)?;
        cert = cert.with_note("range_kernel_gap", bj.value);
        if bj.verdict != Verdict::Orthogonal {
            cert.verdict = Verdict::Fail;
            cert.witnesses = bj.witnesses;
        }
    }
    Ok(ProjectionCheck { certificate: cert, range, kernel })
}

/// `Z` is a right complement of `Y`: a vector-space complement with `Y ⊥_B Z`.
pub fn right_complement_check(y: &Subspace, z: &Subspace, samples: usize, seed: u64) -> Result<Certificate> {
    let n = y.ambient().dim();
    let sum = y.sum(z);
    let meet = y.intersect(z, 1e-9);
    if sum.dim() != n || !meet.is_zero() {
        return Ok(Certificate::new(Verdict::Fail, (n - sum.dim()) as f64 + meet.dim() as f64, seed, 0));
    }
    let bj = bj_subspace(y, z, samples, seed)?;
    let mut cert = bj.clone();
    cert.verdict = if bj.verdict == Verdict::Orthogonal { Verdict::Pass } else { Verdict::Fail };
    if cert.verdict == Verdict::Pass {
        cert.witnesses.clear();
    }
    Ok(cert)
}

/// Convex-hull test for `f ⊥_B g` in the disk algebra, sampled on `gridsize`
/// points of the circle: `0` must lie in the hull of `f(z) conj(g(z))` over
/// the near-maximizers `|f(z)| >= |f| (1 - 10/gridsize)`.
///
/// The grid minimization `bj_min` is run as a cross-check; the two are
/// reported side by side and only a flagrant disagreement is an error.
pub fn convex_hull_bj_poly(f: &CVec, g: &CVec, gridsize: usize) -> Result<Certificate> {
    let deg = f.len().max(g.len()).max(1) - 1;
    let space = Space::poly_sup(deg, gridsize)?;
    let pad = |v: &CVec| {
        let mut out = CVec::zeros(deg + 1);
        out.rows_mut(0, v.len()).copy_from(v);
        out
    };
    let (f, g) = (pad(f), pad(g));
    let fv = poly_grid_values(f.as_slice(), gridsize);
    let nf = fv.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if nf == 0.0 {
        return Err(Error::ZeroVector);
    }
    if g.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(Certificate::new(Verdict::Orthogonal, 0.0, 0, gridsize));
    }
    let gv = poly_grid_values(g.as_slice(), gridsize);
    let eps = 10.0 / gridsize as f64;
    let s: Vec<C64> = fv
        .iter()
        .zip(&gv)
        .filter(|(a, _)| a.norm() >= nf * (1.0 - eps))
        .map(|(a, b)| a * b.conj())
        .collect();
    if s.is_empty() {
        return Err(Error::EmptyBand(format!("no near-maximizers at grid {gridsize}; refine the grid")));
    }
    let smax = s.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let contains = if s.iter().any(|z| z.norm() <= 1e-12 * smax.max(f64::MIN_POSITIVE)) {
        (true, 0.0)
    } else {
        let mut ang: Vec<f64> = s.iter().map(|z| z.arg()).collect();
        ang.sort_by(f64::total_cmp);
        let mut gap = ang[0] + 2.0 * PI - ang[ang.len() - 1];
        for w in ang.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        (gap <= PI + 1e-12, gap)
    };
    let m = bj_min(&space, &f, &g)?;
    let bj_gap = m.value / nf - 1.0;
    if contains.0 && bj_gap < -1e-2 {
        return Err(Error::Inconsistent(format!("hull contains 0 but |f + lambda g| drops by {bj_gap:.3e}")));
    }
    let verdict = if contains.0 { Verdict::Orthogonal } else { Verdict::NotOrthogonal };
    let mut cert = Certificate::new(verdict, bj_gap, 0, gridsize)
        .with_note("max_angular_gap", contains.1)
        .with_note("band_points", s.len() as f64)
        .with_note("bj_min", m.value)
        .with_note("lambda_re", m.lambda.re)
        .with_note("lambda_im", m.lambda.im);
    if !contains.0 {
        cert.witnesses = vec![f, g];
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::spaces::real_vec;

    #[test]
    fn orthogonal_coordinates_in_l2() {
        let s = Space::lpf(2, 2.0).unwrap();
        let m = bj_min(&s, &real_vec(&[1.0, 0.0]), &real_vec(&[0.0, 1.0])).unwrap();
        assert!(m.lambda.norm() < 1e-9 && (m.value - 1.0).abs() < 1e-12);
        let m = bj_min(&s, &real_vec(&[1.0, 0.0]), &real_vec(&[1.0, 0.0])).unwrap();
        assert!((m.lambda - c64(-1.0, 0.0)).norm() < 1e-8 && m.value < 1e-8);
    }

    #[test]
    fn cinf3_right_complements() {
        let s = Space::lpf(3, f64::INFINITY).unwrap();
        let y = Subspace::from_vectors(s.clone(), &[real_vec(&[1.0, 1.0, 1.0])]).unwrap();
        let a = Subspace::coordinates(s.clone(), &[0, 1]).unwrap();
        let b = Subspace::coordinates(s, &[1, 2]).unwrap();
        assert_eq!(right_complement_check(&y, &a, 64, 1).unwrap().verdict, Verdict::Pass);
        assert_eq!(right_complement_check(&y, &b, 64, 1).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn poly_criterion_examples() {
        let z2 = CVec::from_vec(vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let z = CVec::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0)]);
        assert_eq!(convex_hull_bj_poly(&z2, &z, 4096).unwrap().verdict, Verdict::Orthogonal);
        let f = CVec::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0)]);
        let one = CVec::from_vec(vec![c64(1.0, 0.0)]);
        assert_eq!(convex_hull_bj_poly(&f, &one, 4096).unwrap().verdict, Verdict::NotOrthogonal);
        let zero = CVec::from_vec(vec![c64(0.0, 0.0)]);
        assert_eq!(convex_hull_bj_poly(&f, &zero, 4096).unwrap().verdict, Verdict::Orthogonal);
    }

    #[test]
    fn rank_one_projection_fails_norm_check() {
        let s = Space::lpf(2, 2.0).unwrap();
        let m = crate::CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let p = Operator::on(s, m).unwrap();
        let c = norm_one_projection_check(&p, 0).unwrap();
        assert_eq!(c.certificate.verdict, Verdict::Fail);
        assert!((c.certificate.value - 2f64.sqrt()).abs() < 1e-12);
    }
}
