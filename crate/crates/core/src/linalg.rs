//! Euclidean-frame linear algebra: rank-revealing bases, kernels,
//! intersections, principal angles and Hermitian square roots.

use crate::error::{Error, Result};
use crate::{CMat, CVec, C64};
use nalgebra::SymmetricEigen;

/// Default relative threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

fn svd_parts(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    (u, svd.singular_values.iter().copied().collect(), vt)
}

/// Largest singular value (0 for empty matrices).
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b))
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&0.0) => 0,
        Some(&top) => s.iter().filter(|&&x| x > rel_tol * top).count(),
    }
}

/// Orthonormal basis of the column space.
pub fn column_space(m: &CMat, rel_tol: f64) -> CMat {
    if m.is_empty() {
        return CMat::zeros(m.nrows(), 0);
    }
    let (u, s, _) = svd_parts(m);
    let top = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    if top == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rel_tol * top).collect();
    CMat::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` inside `C^n`.
pub fn orth_complement(q: &CMat, n: usize) -> CMat {
    if q.ncols() == 0 {
        return CMat::identity(n, n);
    }
    if q.ncols() >= n {
        return CMat::zeros(n, 0);
    }
    let proj = CMat::identity(n, n) - q * q.adjoint();
    let c = column_space(&proj, 1e-8);
    // The complement of a k-dimensional frame has dimension n - k; trim any
    // spurious directions that survive the threshold.
    let want = n - q.ncols();
    if c.ncols() > want {
        c.columns(0, want).into_owned()
    } else {
        c
    }
}

/// Orthonormal basis of the kernel of `m`.
pub fn null_space(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMat::identity(n, n);
    }
    let (_, s, vt) = svd_parts(m);
    let top = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    if top == 0.0 {
        return CMat::identity(n, n);
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rel_tol * top).collect();
    let row_space = CMat::from_fn(n, keep.len(), |i, j| vt[(keep[j], i)].conj());
    orth_complement(&row_space, n)
}

/// Intersection of the spans of two orthonormal frames.
pub fn intersect(a: &CMat, b: &CMat, tol: f64) -> CMat {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let off_b = a - b * (b.adjoint() * a);
    // Coefficients u with off_b * u = 0; absolute threshold since the frames
    // are orthonormal.
    let (_, s, vt) = svd_parts(&off_b);
    let k = a.ncols();
    let mut kernel_cols: Vec<CVec> = Vec::new();
    for (i, &sv) in s.iter().enumerate() {
        if sv <= tol {
            kernel_cols.push(CVec::from_fn(k, |r, _| vt[(i, r)].conj()));
        }
    }
    // When off_b has fewer rows than columns the SVD is thin; directions not
    // represented in vt belong to the kernel.
    if s.len() < k {
        let row_space = CMat::from_fn(k, s.len(), |r, c| vt[(c, r)].conj());
        let comp = orth_complement(&row_space, k);
        for j in 0..comp.ncols() {
            kernel_cols.push(comp.column(j).into_owned());
        }
    }
    if kernel_cols.is_empty() {
        return CMat::zeros(n, 0);
    }
    let u = CMat::from_columns(&kernel_cols);
    column_space(&(a * u), 1e-8)
}

/// Orthonormal frame of the sum of two spans.
pub fn span_sum(a: &CMat, b: &CMat, rel_tol: f64) -> CMat {
    let n = a.nrows();
    let mut cols: Vec<CVec> = Vec::new();
    for j in 0..a.ncols() {
        cols.push(a.column(j).into_owned());
    }
    for j in 0..b.ncols() {
        cols.push(b.column(j).into_owned());
    }
    if cols.is_empty() {
        return CMat::zeros(n, 0);
    }
    column_space(&CMat::from_columns(&cols), rel_tol)
}

/// Largest principal angle between the spans of two orthonormal frames.
/// Frames of different dimension are at distance pi/2.
pub fn principal_angle(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let ab = a - b * (b.adjoint() * a);
    let ba = b - a * (a.adjoint() * b);
    let s = spectral_norm(&ab).max(spectral_norm(&ba));
    s.min(1.0).asin()
}

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues of
/// modulus at most `1e-10 * trace` are set to zero, so exact null directions
/// survive the square root; eigenvalues below `-reject` are an error.
pub fn hermitian_sqrt(h: &CMat, reject: f64) -> Result<CMat> {
    let sym = (h + h.adjoint()).scale(0.5);
    let trace: f64 = (0..sym.nrows()).map(|i| sym[(i, i)].re).sum::<f64>().abs();
    let zero_below = 1e-10 * trace.max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(sym);
    let mut min_ev = f64::INFINITY;
    let vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            min_ev = min_ev.min(l);
            if l <= zero_below {
                0.0
            } else {
                l.sqrt()
            }
        })
        .collect();
    if min_ev < -reject {
        return Err(Error::NotContraction(format!(
            "radicand has eigenvalue {min_ev:.3e} below -{reject:.0e}"
        )));
    }
    let q = &eig.eigenvectors;
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::new(v, 0.0))));
    Ok(q * d * q.adjoint())
}

/// Solve `a x = b` with partial pivoting; returns the solution and the
/// 2-norm condition number of `a`.
pub fn solve(a: &CMat, b: &CMat) -> Result<(CMat, f64)> {
    let s = singular_values(a);
    let cond = match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    };
    let lu = a.clone().lu();
    match lu.solve(b) {
        Some(x) if cond.is_finite() => Ok((x, cond)),
        _ => Err(Error::Singular("matrix is singular to working precision".into())),
    }
}

/// Max-modulus entry of a matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

/// Phase-normalize: first coordinate with modulus above `tol * max` becomes
/// positive real.
pub fn phase_normalize(v: &CVec) -> CVec {
    let top = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if top == 0.0 {
        return v.clone();
    }
    let pivot = v.iter().find(|z| z.norm() > 1e-8 * top).copied().unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    v.map(|z| z * phase)
}

/// Lexicographic order on (re, im) pairs, used for deterministic tie-breaks.
pub fn lex_cmp(a: &CVec, b: &CVec) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn basis(n: usize, idx: &[usize]) -> CMat {
        CMat::from_fn(n, idx.len(), |i, j| if i == idx[j] { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = CMat::from_row_slice(1, 3, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let k = null_space(&m, RANK_TOL);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-12);
    }

    #[test]
    fn intersection_of_coordinate_planes() {
        let a = basis(4, &[0, 1]);
        let b = basis(4, &[1, 2]);
        let c = intersect(&a, &b, 1e-9);
        assert_eq!(c.ncols(), 1);
        assert!(principal_angle(&c, &basis(4, &[1])) < 1e-12);
    }

    #[test]
    fn intersection_with_wide_frame() {
        let a = basis(5, &[0, 1, 2, 3]);
        let b = basis(5, &[2, 3, 4]);
        let c = intersect(&a, &b, 1e-9);
        assert_eq!(c.ncols(), 2);
        assert!(principal_angle(&c, &basis(5, &[2, 3])) < 1e-12);
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let h = CMat::from_row_slice(
            2,
            2,
            &[c64(2.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0), c64(2.0, 0.0)],
        );
        let r = hermitian_sqrt(&h, 1e-10).unwrap();
        assert!(max_abs(&(&r * &r - &h)) < 1e-12);
    }

    #[test]
    fn hermitian_sqrt_rejects_negative() {
        let h = CMat::from_diagonal(&CVec::from_vec(vec![c64(1.0, 0.0), c64(-1e-3, 0.0)]));
        assert!(hermitian_sqrt(&h, 1e-9).is_err());
    }

    #[test]
    fn principal_angle_of_rotated_line() {
        let t: f64 = 0.3;
        let a = CMat::from_column_slice(2, 1, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let b = CMat::from_column_slice(2, 1, &[c64(t.cos(), 0.0), c64(t.sin(), 0.0)]);
        assert!((principal_angle(&a, &b) - t).abs() < 1e-12);
    }
}
