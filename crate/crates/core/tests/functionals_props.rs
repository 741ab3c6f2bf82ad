use dilation_lab::functionals::{
    duality_map, functional_attainment, hahn_banach_extend, inverse_duality_map, rank_one, restricted_norm,
    star_linearity_probe, support_functional, Functional,
};
use dilation_lab::operators::banach_adjoint;
use dilation_lab::shifts::make_unilateral_shift;
use dilation_lab::spaces::{gaussian_vec, real_vec, rng};
use dilation_lab::{c64, CVec, Operator, Space, Subspace, Verdict};
use proptest::prelude::*;

fn smooth_spaces() -> Vec<Space> {
    vec![
        Space::lpf(3, 1.5).unwrap(),
        Space::lpf(3, 2.0).unwrap(),
        Space::lpf(4, 3.0).unwrap(),
        Space::lp_weighted(dilation_lab::Exponent::new(4.0).unwrap(), vec![2.0, 1.0, 0.25]).unwrap(),
        Space::direct_sum2(vec![Space::lpf(2, 1.5).unwrap(), Space::lpf(2, 3.0).unwrap()]).unwrap(),
    ]
}

proptest! {
    #[test]
    fn duality_round_trip(seed in 0u64..10_000) {
        for s in smooth_spaces() {
            let x = gaussian_vec(s.dim(), &mut rng(seed));
            let back = inverse_duality_map(&s, &duality_map(&s, &x)).unwrap();
            prop_assert!((&back - &x).norm() <= 1e-10 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn support_functional_identities(seed in 0u64..10_000) {
        for s in smooth_spaces() {
            let x = gaussian_vec(s.dim(), &mut rng(seed));
            let n = s.norm(&x).unwrap();
            let f = support_functional(&s, &x, false).unwrap();
            prop_assert!((f.apply(&x) - c64(n * n, 0.0)).norm() <= 1e-10 * (1.0 + n * n));
            prop_assert!((f.dual_norm - n).abs() <= 1e-10 * (1.0 + n));
        }
    }

    #[test]
    fn attainment_inverts_support(seed in 0u64..10_000) {
        let s = Space::lpf(3, 3.0).unwrap();
        let g = gaussian_vec(3, &mut rng(seed));
        let f = Functional::new(s.clone(), g.clone()).unwrap();
        let x0 = functional_attainment(&f).unwrap();
        prop_assert!((s.norm(&x0).unwrap() - 1.0).abs() < 1e-10);
        let back = support_functional(&s, &x0, false).unwrap();
        prop_assert!((&back.coeffs * c64(f.dual_norm, 0.0) - &g).norm() < 1e-9 * (1.0 + g.norm()));
    }
}

#[test]
fn cross_of_isometry_maps_support_functionals_back() {
    // V^x (f_{Vx}) = f_x for the truncated shift on vectors clear of the edge.
    let x = Space::lpf(2, 3.0).unwrap();
    let v = make_unilateral_shift(&x, 5).unwrap();
    let k = v.domain().clone();
    let vx = banach_adjoint(&v).unwrap();
    let mut r = rng(5);
    for _ in 0..20 {
        let mut u = gaussian_vec(k.dim(), &mut r);
        u[8] = c64(0.0, 0.0);
        u[9] = c64(0.0, 0.0);
        let f_vu = support_functional(&k, &v.apply(&u).unwrap(), false).unwrap();
        let f_u = support_functional(&k, &u, false).unwrap();
        let pulled = vx.apply(&f_vu.coeffs).unwrap();
        assert!((&pulled - &f_u.coeffs).norm() < 1e-9);
    }
}

#[test]
fn cross_keeps_norm_exactly_on_the_range() {
    let x = Space::lpf(1, 3.0).unwrap();
    let v = make_unilateral_shift(&x, 4).unwrap();
    let k = v.domain().clone();
    let dual = k.dual().unwrap();
    let vx = banach_adjoint(&v).unwrap();
    // Attained inside range(V) (block 0 empty).
    let inside = real_vec(&[0.0, 1.0, -2.0, 0.5]);
    let fin = Functional::new(k.clone(), duality_map(&k, &inside)).unwrap();
    let a = dual.norm(&vx.apply(&fin.coeffs).unwrap()).unwrap();
    assert!((a - fin.dual_norm).abs() < 1e-12);
    // Attained with mass in block 0: strictly smaller.
    let outside = real_vec(&[1.0, 1.0, -2.0, 0.0]);
    let fout = Functional::new(k.clone(), duality_map(&k, &outside)).unwrap();
    let b = dual.norm(&vx.apply(&fout.coeffs).unwrap()).unwrap();
    assert!(b < fout.dual_norm - 1e-3);
}

#[test]
fn hahn_banach_extension_preserves_norm_and_values() {
    let s = Space::lpf(4, 3.0).unwrap();
    let mut r = rng(11);
    for i in 0..50 {
        let y = Subspace::from_vectors(s.clone(), &[gaussian_vec(4, &mut r), gaussian_vec(4, &mut r)]).unwrap();
        let values = gaussian_vec(2, &mut r);
        let f = hahn_banach_extend(&y, &values).unwrap();
        for (j, b) in y.basis_vectors().iter().enumerate() {
            assert!((f.apply(b) - values[j]).norm() < 1e-9);
        }
        let sup = restricted_norm(&y, &values, i);
        assert!((f.dual_norm - sup).abs() < 1e-8 * (1.0 + sup), "{} vs {}", f.dual_norm, sup);
    }
}

#[test]
fn non_smooth_points_need_opt_in() {
    let l1 = Space::lpf(3, 1.0).unwrap();
    let x = real_vec(&[1.0, 0.0, -2.0]);
    assert!(support_functional(&l1, &x, false).is_err());
    let f = support_functional(&l1, &x, true).unwrap();
    assert!((f.apply(&x).re - 9.0).abs() < 1e-12);
    assert!((f.dual_norm - 3.0).abs() < 1e-12);
}

#[test]
fn adjoint_linearity_cases() {
    let mut r = rng(12);
    for n in 2..=5 {
        let s = Space::lpf(n, 2.0).unwrap();
        let t = Operator::on(s, dilation_lab::spaces::gaussian_mat(n, n, &mut r)).unwrap();
        let c = star_linearity_probe(&t, 40, n as u64).unwrap();
        assert_eq!(c.verdict, Verdict::Linear);
        assert!(c.value < 1e-10);
    }
    let s3 = Space::lpf(3, 3.0).unwrap();
    let scalar = Operator::diagonal(s3.clone(), vec![c64(0.3, 0.4); 3]).unwrap();
    assert!(star_linearity_probe(&scalar, 40, 1).unwrap().value < 1e-10);
    let t = rank_one(&s3, &real_vec(&[1.0, 2.0, 0.5]), &real_vec(&[0.0, 1.0, 1.0]), c64(0.5, 0.0)).unwrap();
    let c = star_linearity_probe(&t, 200, 2).unwrap();
    assert_eq!(c.verdict, Verdict::Nonlinear);
    assert!(c.value > 1e-3);
    assert!(!c.witnesses.is_empty());
}

#[test]
fn functionals_round_trip_through_json() {
    let s = Space::lpf(2, 3.0).unwrap();
    let f = Functional::new(s, CVec::from_vec(vec![c64(1.0, 2.0), c64(-0.5, 0.0)])).unwrap();
    let back: Functional = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(back, f);
}
