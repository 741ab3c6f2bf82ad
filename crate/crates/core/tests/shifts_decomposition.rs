use dilation_lab::decomposition::{
    canonical_decompose, gallery_operator, levan_decompose, maximality_evidence, wold_decompose, x_of_t, XMethod,
};
use dilation_lab::dilation::{build_min_dilation, triangle_violation_search, SearchBudget};
use dilation_lab::shifts::{
    make_bilateral_shift, make_sigma_shift, make_unilateral_shift, phi_alpha, sigma_extension, spectrum_csv,
    spectrum_probe, spectrum_table, unit_circle,
};
use dilation_lab::spaces::{gaussian_mat, rng};
use dilation_lab::{c64, Operator, Space, Subspace, C64};
use proptest::prelude::*;

fn coords(n: usize, f: impl Fn(usize) -> bool) -> Vec<usize> {
    (0..n).filter(|&j| f(j)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn moebius_maps_invert_each_other(seed in 0u64..10_000, r in 0.0f64..0.9, th in 0.0f64..std::f64::consts::TAU) {
        let s = Space::lpf(3, 3.0).unwrap();
        let g = gaussian_mat(3, 3, &mut rng(seed));
        let t = Operator::on(s, g.unscale(2.0 * g.norm())).unwrap();
        let a = C64::from_polar(r, th);
        let inner = phi_alpha(&t, -a).unwrap().operator;
        let back = phi_alpha(&inner, a).unwrap().operator;
        let err = (back.entries() - t.entries()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(err <= 1e-8);
    }
}

#[test]
fn sigma_extension_of_the_l3_shift() {
    let v = make_unilateral_shift(&Space::lpf(1, 3.0).unwrap(), 10).unwrap();
    let (b, c) = sigma_extension(&v, 6, 2).unwrap();
    assert!(b.certificate.passed(), "{:?}", b.certificate);
    assert!(c.passed(), "{c:?}");
    assert!(c.notes["extension_residual"] < 1e-10);
    assert!(c.notes["sigma_ratio_max"] <= std::f64::consts::SQRT_2 + 1e-9);
    assert!(sigma_extension(&v, 9, 2).is_err());
}

#[test]
fn spectrum_probe_examples() {
    let b = make_sigma_shift(&Space::lpf(1, 2.0).unwrap(), 200, 1).unwrap();
    assert!(spectrum_probe(&b, c64(1.0, 0.0), 199, 1).unwrap().residual <= 0.1);
    let b3 = make_sigma_shift(&Space::lpf(1, 3.0).unwrap(), 200, 1).unwrap();
    let l = C64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let p = spectrum_probe(&b3, l, 199, 1).unwrap();
    assert!(p.residual <= 0.15);
    // The reported residual is attained by the witness.
    let w = &p.witness;
    let y = &b3.y_space;
    assert!((y.norm(w).unwrap() - 1.0).abs() < 1e-12);
    let r = y.norm(&(b3.vtilde.apply(w).unwrap() - w * l)).unwrap();
    assert!((r - p.residual).abs() < 1e-12);
    assert!(spectrum_probe(&b3, l, 200, 1).is_err());
}

#[test]
fn spectrum_csv_schema() {
    let b = make_sigma_shift(&Space::lpf(1, 2.0).unwrap(), 20, 1).unwrap();
    let rows = spectrum_table(&b, &unit_circle(4), 10, 1).unwrap();
    let csv = spectrum_csv(&rows).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda_re,lambda_im,residual,horizon"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn hilbert_bilateral_moebius_is_contractive() {
    let l2 = Space::lpf(1, 2.0).unwrap();
    let u = make_bilateral_shift(&l2, 12, false).unwrap();
    let y = u.domain().clone();
    let mut r = rng(3);
    for k in 0..30 {
        let a = C64::from_polar(0.03 * k as f64, 0.7 * k as f64);
        let p = phi_alpha(&u, a).unwrap();
        let mut v = y.random_unit_with(&mut r);
        for i in (0..4).chain(21..25) {
            v[i] = c64(0.0, 0.0);
        }
        let excess = y.norm(&p.operator.apply(&v).unwrap()).unwrap() - y.norm(&v).unwrap();
        assert!(excess <= 1e-9);
    }
}

#[test]
fn gallery_levan_parts() {
    let t = gallery_operator(32, 6).unwrap();
    let d = levan_decompose(&t, 6, 32, 1).unwrap();
    let x = t.domain().clone();
    let w1 = Subspace::coordinates(x.clone(), &coords(32, |j| j % 4 == 1)).unwrap();
    let w2 = Subspace::coordinates(x.clone(), &coords(32, |j| j % 4 == 3)).unwrap();
    let cni = Subspace::coordinates(x.clone(), &coords(32, |j| j % 2 == 0)).unwrap();
    assert!(d.part("unitary").unwrap().window_subspace.distance(&w1) < 1e-8);
    assert!(d.part("shift").unwrap().window_subspace.distance(&w2) < 1e-8);
    assert!(d.part("cni").unwrap().window_subspace.distance(&cni) < 1e-8);
    assert_eq!(d.residuals["cni_isometric_samples"], 0.0);
    assert!(d.part("unitary").unwrap().invariance_residual < 1e-12);
    // Chain edges that stay inside the window stay inside the shift part.
    let shift = &d.part("shift").unwrap().subspace;
    for j in coords(32, |j| j % 4 == 3 && j + 4 < 32) {
        let tj = t.apply(&dilation_lab::spaces::basis_vec(x.dim(), j)).unwrap();
        assert!(shift.contains(&tj, 1e-12));
    }
}

#[test]
fn gallery_canonical_left_inverse_and_maximality() {
    let t = gallery_operator(32, 6).unwrap();
    let d = canonical_decompose(&t, 6, 32).unwrap();
    assert!(d.residuals["left_inverse"] < 1e-12);
    assert!(d.residuals["unitary_isometry"] < 1e-9);
    let w = &d.part("unitary").unwrap().subspace;
    assert!(maximality_evidence(&t, w, 50, 2).unwrap() < 1e-8);
}

#[test]
fn contraction_plus_phase_unitary() {
    let s = Space::lpf(4, 3.0).unwrap();
    let t = Operator::diagonal(s.clone(), vec![c64(0.5, 0.0), c64(0.0, 0.3), C64::from_polar(1.0, 1.0), C64::from_polar(1.0, 2.0)])
        .unwrap();
    let d = canonical_decompose(&t, 5, 4).unwrap();
    let unitary = Subspace::coordinates(s.clone(), &[2, 3]).unwrap();
    let rest = Subspace::coordinates(s.clone(), &[0, 1]).unwrap();
    assert!(d.part("unitary").unwrap().subspace.distance(&unitary) < 1e-8);
    assert!(d.part("cnu").unwrap().subspace.distance(&rest) < 1e-8);
    assert_eq!(d.residuals["cnu_candidate_dim"], 0.0);
}

#[test]
fn unilateral_shift_has_no_unitary_part() {
    // Chains no longer than twice the horizon leave nothing two-sided.
    let v = make_unilateral_shift(&Space::lpf(1, 3.0).unwrap(), 8).unwrap();
    let d = wold_decompose(&v, 4, 8, 1).unwrap();
    assert_eq!(d.residuals["unitary_vs_structure"], 0.0);
    assert_eq!(d.part("unitary").unwrap().subspace.dim(), 0);
    assert!(d.part("shift").unwrap().window_subspace.dim() > 0);
}

#[test]
fn structural_and_dilation_isometric_parts_agree() {
    let s = Space::lpf(3, 2.0).unwrap();
    let t = Operator::diagonal(s.clone(), vec![c64(1.0, 0.0), C64::from_polar(1.0, 0.4), c64(0.5, 0.0)]).unwrap();
    let c = triangle_violation_search(&t, SearchBudget::default(), 0, &[]).unwrap();
    let b = build_min_dilation(&t, &c, 6).unwrap();
    let a = x_of_t(&t, 4, XMethod::Dilation(&b)).unwrap().subspace.unwrap();
    let st = x_of_t(&t, 4, XMethod::Structural).unwrap();
    let st = st.subspace.unwrap();
    assert_eq!(a.dim(), st.dim());
    assert!(a.distance(&st) < 1e-8);
    assert!(st.distance(&Subspace::coordinates(s, &[0, 1]).unwrap()) < 1e-12);
}
