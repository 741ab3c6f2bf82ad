use dilation_lab::dilation::{
    build_min_dilation, build_nagy_dilation, build_rowform_dilation, defect_representation, nagy_backward_intertwiner,
    triangle_margin, triangle_violation_search, verify_dilation, Construction, SearchBudget,
};
use dilation_lab::operators::{a_hat_t, a_t, classify_contraction, left_inverse, operator_norm};
use dilation_lab::shifts::make_unilateral_shift;
use dilation_lab::spaces::{gaussian_mat, gaussian_vec, real_vec, rng};
use dilation_lab::{c64, CMat, Operator, Space, Verdict, C64};
use proptest::prelude::*;

fn contraction(n: usize, p: f64, seed: u64, target: f64) -> Operator {
    let s = Space::lpf(n, p).unwrap();
    let g = gaussian_mat(n, n, &mut rng(seed));
    let t = Operator::on(s, g).unwrap();
    let est = operator_norm(&t, 16, seed).value;
    t.scaled(c64(target / est, 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_estimates_are_submultiplicative(seed in 0u64..10_000) {
        let s = Space::lpf(3, 3.0).unwrap();
        let mut r = rng(seed);
        let t = Operator::on(s.clone(), gaussian_mat(3, 3, &mut r)).unwrap();
        let u = Operator::on(s, gaussian_mat(3, 3, &mut r)).unwrap();
        let tu = t.compose(&u).unwrap();
        let (a, b, c) = (operator_norm(&t, 16, 1).value, operator_norm(&u, 16, 2).value, operator_norm(&tu, 16, 3).value);
        prop_assert!(c <= a * b * (1.0 + 1e-6));
    }

    #[test]
    fn defect_functional_identities(seed in 0u64..10_000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let t = contraction(3, 3.0, seed, 0.8);
        let x = gaussian_vec(3, &mut rng(seed + 1));
        let a = c64(re, im);
        let ax = a_t(&t, &(&x * a)).unwrap();
        prop_assert!((ax - a.norm() * a_t(&t, &x).unwrap()).abs() <= 1e-10 * (1.0 + ax));
        let nt = operator_norm(&t, 16, seed).value;
        let hat = a_hat_t(&t, nt, &x).unwrap();
        let scaled = a_t(&t.scaled(c64(1.0 / nt, 0.0)), &x).unwrap() * nt;
        prop_assert!((hat - scaled).abs() <= 1e-9 * (1.0 + hat));
    }

    #[test]
    fn radicand_bound_for_strict_contractions(seed in 0u64..10_000) {
        let t = contraction(4, 2.0, seed, 0.9);
        let nt = operator_norm(&t, 4, seed);
        prop_assert!(nt.exact);
        let x = gaussian_vec(4, &mut rng(seed + 9));
        let nx = t.domain().norm(&x).unwrap();
        prop_assert!(a_t(&t, &x).unwrap() >= nx * (1.0 - nt.value * nt.value).sqrt() - 1e-9);
    }

    #[test]
    fn hilbert_norm_and_equivalence(seed in 0u64..10_000) {
        let t = contraction(3, 2.0, seed, 0.7);
        let c = triangle_violation_search(&t, SearchBudget::default(), seed, &[]).unwrap();
        prop_assert_eq!(c.verdict, Verdict::Norm);
        let mut r = rng(seed ^ 3);
        for _ in 0..20 {
            let x = gaussian_vec(3, &mut r);
            let nx = t.domain().norm(&x).unwrap();
            let ax = a_t(&t, &x).unwrap();
            prop_assert!(ax <= nx + 1e-12);
            prop_assert!(nx <= ax / (1.0 - c.operator_norm.powi(2)).sqrt() + 1e-9);
        }
    }
}

#[test]
fn lambda_window_values() {
    use dilation_lab::dilation::lambda_window;
    // At p = 3/2 the margin 2 sqrt(1 - l^2) - 2^{2/3} changes sign at sqrt(1 - 2^{-2/3}).
    let (lo, _) = lambda_window(1.5).unwrap();
    assert!((lo - (1.0 - 2f64.powf(-2.0 / 3.0)).sqrt()).abs() < 1e-9);
    let t = Operator::on(
        Space::lpf(2, 1.5).unwrap(),
        CMat::from_row_slice(2, 2, &[c64(0.7, 0.0), c64(-0.7, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]),
    )
    .unwrap();
    let c = triangle_violation_search(&t, SearchBudget::default(), 0, &[]).unwrap();
    assert_eq!(c.verdict, Verdict::Violation);
    let (x, y) = c.witness.clone().unwrap();
    assert!((triangle_margin(&t, &x, &y).unwrap() - c.margin).abs() < 1e-9);
    // Below the window the same shape is a norm.
    let small = t.scaled(c64(0.5 / 0.7, 0.0));
    let c = triangle_violation_search(&small, SearchBudget::default(), 0, &[]).unwrap();
    assert_eq!(c.verdict, Verdict::Norm);
}

#[test]
fn non_contractions_are_refused() {
    let t = Operator::diagonal(Space::lpf(2, 3.0).unwrap(), vec![c64(1.5, 0.0), c64(0.1, 0.0)]).unwrap();
    assert!(triangle_violation_search(&t, SearchBudget::default(), 0, &[]).is_err());
    assert_eq!(classify_contraction(&t, 0).class, Verdict::NotContraction);
}

#[test]
fn norm_one_operators_give_semi_norms_without_equivalence() {
    let t = Operator::diagonal(Space::lpf(2, 2.0).unwrap(), vec![c64(1.0, 0.0), c64(0.5, 0.0)]).unwrap();
    let c = triangle_violation_search(&t, SearchBudget::default(), 0, &[]).unwrap();
    assert_eq!(c.verdict, Verdict::SemiNorm);
    assert!(c.positivity_value < 1e-6);
    assert!(a_t(&t, &c.positivity_witness).unwrap() < 1e-6);
    assert_eq!(classify_contraction(&t, 0).class, Verdict::G2);
    // Semi-norm dilation still satisfies the identities.
    let b = build_min_dilation(&t, &c, 5).unwrap();
    assert!(verify_dilation(&b, 3, 1e-10, 50, 1).unwrap().passed());
}

#[test]
fn dilations_imply_the_triangle_inequality_for_powers() {
    let l3 = Space::lpf(4, 3.0).unwrap();
    let t = Operator::diagonal(l3, (0..4).map(|k| C64::from_polar(0.6, 1.3 * k as f64)).collect()).unwrap();
    let c = triangle_violation_search(&t, SearchBudget::default(), 5, &[]).unwrap();
    assert_eq!(c.verdict, Verdict::Norm);
    let depth = 6;
    let b = build_min_dilation(&t, &c, depth).unwrap();
    assert_eq!(b.construction, Construction::BlockMin);
    let mut r = rng(6);
    for k in 1..=depth - 2 {
        let tk = t.pow(k).unwrap();
        for _ in 0..50 {
            let x = gaussian_vec(4, &mut r);
            let y = gaussian_vec(4, &mut r);
            assert!(triangle_margin(&tk, &x, &y).unwrap() >= -1e-9);
        }
    }
}

#[test]
fn row_form_and_nagy_dilations_verify() {
    let t = contraction(3, 2.0, 8, 0.8);
    let b = build_nagy_dilation(&t, 6, 1).unwrap();
    assert!(verify_dilation(&b, 4, 1e-9, 40, 2).unwrap().passed());
    let a = defect_representation(&t).unwrap().expect("Hilbert defect");
    let b = build_rowform_dilation(&t, &a, 5, 3).unwrap();
    assert!(verify_dilation(&b, 3, 1e-9, 40, 4).unwrap().passed());
    // Monomial operator on l_3: per-coordinate defect.
    let shift = make_unilateral_shift(&Space::lpf(1, 3.0).unwrap(), 4).unwrap().scaled(c64(0.5, 0.0));
    let a = defect_representation(&shift).unwrap().expect("monomial defect");
    let b = build_rowform_dilation(&shift, &a, 4, 5).unwrap();
    assert!(verify_dilation(&b, 2, 1e-9, 40, 6).unwrap().passed());
}

#[test]
fn backward_intertwiner_defects() {
    let s = Space::lpf(1, 2.0).unwrap();
    let zero = Operator::zero(s.clone(), s.clone());
    let w = nagy_backward_intertwiner(&zero, 5).unwrap();
    let x = real_vec(&[0.75]);
    assert!((w.codomain().norm(&w.apply(&x).unwrap()).unwrap() - 0.75).abs() < 1e-15);
    let half = Operator::diagonal(s, vec![c64(0.5, 0.0)]).unwrap();
    let w = nagy_backward_intertwiner(&half, 20).unwrap();
    let d = 1.0 - w.codomain().norm(&w.apply(&real_vec(&[1.0])).unwrap()).unwrap();
    assert!(d >= 0.0 && d <= 2f64.powi(-20));
}

#[test]
fn shift_left_inverse() {
    let x = Space::lpf(2, 3.0).unwrap();
    let v = make_unilateral_shift(&x, 5).unwrap();
    let a = left_inverse(&v).unwrap();
    let av = a.entries() * v.entries();
    // Identity except on the last block, which V pushes out of the window.
    for j in 0..8 {
        for i in 0..10 {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((av[(i, j)] - c64(e, 0.0)).norm() < 1e-15);
        }
    }
    let p = v.entries() * a.entries();
    assert!((&p * &p - &p).norm() < 1e-14);
}

#[test]
fn operators_round_trip_through_json() {
    let t = contraction(3, 3.0, 1, 0.5);
    let js = serde_json::to_string(&t).unwrap();
    let back: Operator = serde_json::from_str(&js).unwrap();
    assert_eq!(back, t);
    let v = make_unilateral_shift(&Space::lpf(2, 3.0).unwrap(), 3).unwrap();
    let back: Operator = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(back.entries(), v.entries());
    assert!(back.annotation().is_some());
}
