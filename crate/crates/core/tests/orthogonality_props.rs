use dilation_lab::functionals::{duality_map, star_defect, star_linearity_probe, rank_one};
use dilation_lab::orthogonality::{
    bj_min, bj_orthogonal, bj_subspace, convex_hull_bj_poly, norm_one_projection_check, right_complement_check, BJ_TOL,
};
use dilation_lab::spaces::{basis_vec, gaussian_vec, real_vec, rng};
use dilation_lab::{c64, CMat, CVec, Operator, Space, Subspace, Verdict, C64};
use proptest::prelude::*;

/// Project `y` so that `f_x(y) = 0` (James orthogonality on smooth spaces).
fn james_orthogonal(space: &Space, x: &CVec, y: &CVec) -> CVec {
    let j = duality_map(space, x);
    let fy: C64 = j.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    let fx: C64 = j.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    y - x * (fy / fx)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homogeneous_in_both_arguments(seed in 0u64..10_000, a in 0.1f64..5.0, b in 0.1f64..5.0, th in 0.0f64..std::f64::consts::TAU) {
        let s = Space::lpf(3, 3.0).unwrap();
        let mut r = rng(seed);
        let x = gaussian_vec(3, &mut r);
        let y = james_orthogonal(&s, &x, &gaussian_vec(3, &mut r));
        prop_assume!(s.norm(&y).unwrap() > 1e-3);
        let c = bj_orthogonal(&s, &x, &y, BJ_TOL).unwrap();
        prop_assert_eq!(c.verdict, Verdict::Orthogonal);
        let (ca, cb) = (C64::from_polar(a, th), C64::from_polar(b, -2.0 * th));
        let c2 = bj_orthogonal(&s, &(&x * ca), &(&y * cb), BJ_TOL).unwrap();
        prop_assert_eq!(c2.verdict, Verdict::Orthogonal);
    }

    #[test]
    fn minimum_beats_a_brute_force_grid(seed in 0u64..10_000) {
        let s = Space::lpf(3, 1.5).unwrap();
        let mut r = rng(seed);
        let x = gaussian_vec(3, &mut r);
        let y = gaussian_vec(3, &mut r);
        let m = bj_min(&s, &x, &y).unwrap();
        let rad = 4.0 * s.norm(&x).unwrap() / s.norm(&y).unwrap();
        let mut grid = f64::INFINITY;
        for i in -30..=30 {
            for k in -30..=30 {
                let l = c64(rad * i as f64 / 30.0, rad * k as f64 / 30.0);
                grid = grid.min(s.norm(&(&x + &y * l)).unwrap());
            }
        }
        prop_assert!(m.value <= grid + 1e-9);
    }

    #[test]
    fn james_criterion_agrees_on_smooth_spaces(seed in 0u64..10_000) {
        for s in [Space::lpf(3, 1.5).unwrap(), Space::lpf(4, 4.0).unwrap()] {
            let mut r = rng(seed);
            let x = gaussian_vec(s.dim(), &mut r);
            let y = gaussian_vec(s.dim(), &mut r);
            // Generic pair: neither criterion says orthogonal.
            let c = bj_orthogonal(&s, &x, &y, BJ_TOL).unwrap();
            prop_assert_eq!(c.verdict, Verdict::NotOrthogonal);
            let yo = james_orthogonal(&s, &x, &y);
            prop_assume!(s.norm(&yo).unwrap() > 1e-3);
            let c = bj_orthogonal(&s, &x, &yo, BJ_TOL).unwrap();
            prop_assert_eq!(c.verdict, Verdict::Orthogonal);
        }
    }
}

#[test]
fn euclidean_orthogonality_is_symmetric() {
    let s = Space::lpf(4, 2.0).unwrap();
    let mut r = rng(21);
    for _ in 0..1000 {
        let x = gaussian_vec(4, &mut r);
        let y0 = gaussian_vec(4, &mut r);
        let y = &y0 - &x * (x.dotc(&y0) / x.dotc(&x));
        let a = bj_orthogonal(&s, &x, &y, BJ_TOL).unwrap().verdict;
        let b = bj_orthogonal(&s, &y, &x, BJ_TOL).unwrap().verdict;
        assert_eq!(a, Verdict::Orthogonal);
        assert_eq!(a, b);
    }
}

#[test]
fn asymmetry_in_l3() {
    // f_x(y) = 1*4 + |2|*2*(-1) = 0 but f_y(x) = |4|*4*1 + |-1|*(-1)*2 = 14.
    let s = Space::lpf(3, 3.0).unwrap();
    let x = real_vec(&[1.0, 2.0, 0.0]);
    let y = real_vec(&[4.0, -1.0, 0.0]);
    assert_eq!(bj_orthogonal(&s, &x, &y, BJ_TOL).unwrap().verdict, Verdict::Orthogonal);
    let back = bj_orthogonal(&s, &y, &x, BJ_TOL).unwrap();
    assert_eq!(back.verdict, Verdict::NotOrthogonal);
    assert_eq!(back.witnesses.len(), 2);
}

#[test]
fn disk_algebra_hull_criterion() {
    let z2 = real_vec(&[0.0, 0.0, 1.0]);
    let z = real_vec(&[0.0, 1.0]);
    assert_eq!(convex_hull_bj_poly(&z2, &z, 4096).unwrap().verdict, Verdict::Orthogonal);
    let f = real_vec(&[0.0, 1.0, 1.0]);
    let one = real_vec(&[1.0]);
    let c = convex_hull_bj_poly(&f, &one, 4096).unwrap();
    assert_eq!(c.verdict, Verdict::NotOrthogonal);
    assert!(c.value < 0.0);
    assert_eq!(convex_hull_bj_poly(&f, &real_vec(&[0.0]), 4096).unwrap().verdict, Verdict::Orthogonal);
    for n in 1..=5 {
        for m in 0..n {
            let c = convex_hull_bj_poly(&basis_vec(n + 1, n), &basis_vec(m + 1, m), 1024).unwrap();
            assert_eq!(c.verdict, Verdict::Orthogonal, "z^{n} vs z^{m}");
        }
    }
}

#[test]
fn coordinate_blocks_are_right_complements_in_lp() {
    let s = Space::lpf(4, 3.0).unwrap();
    let y = Subspace::coordinates(s.clone(), &[0, 1]).unwrap();
    let z = Subspace::coordinates(s.clone(), &[2, 3]).unwrap();
    assert!(right_complement_check(&y, &z, 16, 3).unwrap().passed());
    let skew = Subspace::from_vectors(s.clone(), &[real_vec(&[1.0, 0.0, 1.0, 0.0]), basis_vec(4, 3)]).unwrap();
    let c = bj_subspace(&y, &skew, 16, 3).unwrap();
    assert_eq!(c.verdict, Verdict::NotOrthogonal);
    assert_eq!(c.witnesses.len(), 2);
    let gap = bj_orthogonal(&s, &c.witnesses[0], &c.witnesses[1], BJ_TOL).unwrap();
    assert!(gap.value < 0.0);
}

#[test]
fn coordinate_projection_has_norm_one() {
    let s = Space::lpf(3, 1.5).unwrap();
    let mut m = CMat::zeros(3, 3);
    m[(0, 0)] = c64(1.0, 0.0);
    m[(1, 1)] = c64(1.0, 0.0);
    let p = Operator::on(s.clone(), m).unwrap();
    let c = norm_one_projection_check(&p, 4).unwrap();
    assert!(c.certificate.passed());
    assert_eq!(c.range.dim(), 2);
    assert_eq!(c.kernel.dim(), 1);
}

#[test]
fn nonlinear_witnesses_reproduce() {
    let s = Space::lpf(3, 3.0).unwrap();
    let t = rank_one(&s, &real_vec(&[1.0, 0.5, -0.3]), &real_vec(&[0.2, 1.0, 0.4]), c64(0.8, 0.0)).unwrap();
    let c = star_linearity_probe(&t, 100, 1).unwrap();
    assert_eq!(c.verdict, Verdict::Nonlinear);
    let again = star_defect(&t, &c.witnesses[0], &c.witnesses[1]).unwrap();
    assert!((again - c.value).abs() < 1e-9);
}
