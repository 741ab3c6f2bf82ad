use dilation_lab::spaces::{basis_vec, gaussian_vec, real_vec, rng};
use dilation_lab::{c64, CVec, Space, C64};
use proptest::prelude::*;

fn family() -> Vec<Space> {
    vec![
        Space::lpf(3, 1.0).unwrap(),
        Space::lpf(3, 1.5).unwrap(),
        Space::lpf(3, 2.0).unwrap(),
        Space::lpf(3, 3.0).unwrap(),
        Space::lpf(3, f64::INFINITY).unwrap(),
        Space::lp_weighted(dilation_lab::Exponent::new(2.5).unwrap(), vec![1.0, 0.5, 3.0]).unwrap(),
        Space::direct_sum2(vec![Space::lpf(1, 1.0).unwrap(), Space::lpf(2, 4.0).unwrap()]).unwrap(),
        Space::block_seq(Space::lpf(1, 3.0).unwrap(), 3).unwrap(),
        Space::poly_sup(2, 256).unwrap(),
    ]
}

fn vec_from(seed: u64, n: usize) -> CVec {
    gaussian_vec(n, &mut rng(seed))
}

proptest! {
    #[test]
    fn homogeneity(seed in 0u64..10_000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let a = c64(re, im);
        for s in family() {
            let v = vec_from(seed, s.dim());
            let lhs = s.norm(&(&v * a)).unwrap();
            let rhs = a.norm() * s.norm(&v).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
    }

    #[test]
    fn triangle_inequality(seed in 0u64..10_000) {
        for s in family() {
            let u = vec_from(seed, s.dim());
            let v = vec_from(seed + 77_777, s.dim());
            let lhs = s.norm(&(&u + &v)).unwrap();
            prop_assert!(lhs <= s.norm(&u).unwrap() + s.norm(&v).unwrap() + 1e-12);
        }
    }

    #[test]
    fn embedded_blocks_keep_their_norm(seed in 0u64..10_000, idx in 0i64..4) {
        let base = Space::lpf(2, 3.0).unwrap();
        let k = Space::block_seq(base.clone(), 4).unwrap();
        let y = Space::bi_block_seq(base.clone(), 3).unwrap();
        let x = vec_from(seed, 2);
        let nx = base.norm(&x).unwrap();
        prop_assert!((k.norm(&k.embed_block(idx, &x).unwrap()).unwrap() - nx).abs() <= 1e-12);
        prop_assert!((y.norm(&y.embed_block(idx - 2, &x).unwrap()).unwrap() - nx).abs() <= 1e-12);
    }

    #[test]
    fn poly_grid_refinement(seed in 0u64..10_000, degree in 1usize..=8) {
        let g = 512;
        let coarse = Space::poly_sup(degree, g).unwrap();
        let fine = Space::poly_sup(degree, 4 * g).unwrap();
        let c = vec_from(seed, degree + 1);
        let (a, b) = (coarse.norm(&c).unwrap(), fine.norm(&c).unwrap());
        prop_assert!(a <= b + 1e-12);
        prop_assert!((b - a) <= 2.0 * (degree * degree) as f64 / g as f64 * b);
    }
}

#[test]
fn hand_values() {
    let s = Space::lpf(2, 1.5).unwrap();
    let v = real_vec(&[1.0, 1.0]);
    assert!((s.norm(&v).unwrap() - 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
    let d = Space::direct_sum2(vec![Space::lpf(2, 1.0).unwrap(), Space::lpf(2, f64::INFINITY).unwrap()]).unwrap();
    assert!((d.norm(&real_vec(&[3.0, 4.0, 1.0, 2.0])).unwrap() - 53f64.sqrt()).abs() < 1e-12);
    for s in family() {
        assert_eq!(s.norm(&CVec::zeros(s.dim())).unwrap(), 0.0);
    }
}

#[test]
fn nested_direct_sums_follow_the_two_sum_formula() {
    let a = Space::lpf(2, 1.0).unwrap();
    let b = Space::lpf(1, 3.0).unwrap();
    let inner = Space::direct_sum2(vec![a.clone(), b.clone()]).unwrap();
    let mid = Space::direct_sum2(vec![inner.clone(), a.clone()]).unwrap();
    let outer = Space::direct_sum2(vec![mid.clone(), b.clone()]).unwrap();
    let v = vec_from(3, outer.dim());
    let part = |lo: usize, s: &Space| s.norm(&v.rows(lo, s.dim()).into_owned()).unwrap();
    let inner_n = (part(0, &a).powi(2) + part(2, &b).powi(2)).sqrt();
    let mid_n = (inner_n.powi(2) + part(3, &a).powi(2)).sqrt();
    let expect = (mid_n.powi(2) + part(5, &b).powi(2)).sqrt();
    assert!((outer.norm(&v).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn block_embedding_layout() {
    let k = Space::block_seq(Space::lpf(2, 2.0).unwrap(), 3).unwrap();
    let v = k.embed_block(0, &real_vec(&[1.0, 0.0])).unwrap();
    assert_eq!(v, real_vec(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    let y = Space::bi_block_seq(Space::lpf(1, 2.0).unwrap(), 2).unwrap();
    let v = y.embed_block(-1, &real_vec(&[5.0])).unwrap();
    assert_eq!(v, real_vec(&[0.0, 5.0, 0.0, 0.0, 0.0]));
    assert!(y.embed_block(3, &real_vec(&[1.0])).is_err());
}

#[test]
fn random_units_are_units_and_reproducible() {
    let s = Space::lpf(3, 2.0).unwrap();
    assert_eq!(s.random_unit(42), s.random_unit(42));
    let l1 = Space::lpf(4, 1.0).unwrap();
    let v = l1.random_unit(7);
    assert!((v.iter().map(|z| z.norm()).sum::<f64>() - 1.0).abs() < 1e-12);
    let linf = Space::lpf(3, f64::INFINITY).unwrap();
    let mut r = rng(1);
    for _ in 0..1000 {
        let v = linf.random_unit_with(&mut r);
        let m = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!((m - 1.0).abs() < 1e-12);
    }
}

#[test]
fn descriptors_round_trip_through_json() {
    for s in family() {
        let js = serde_json::to_string(&s).unwrap();
        let back: Space = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
    }
    let s: Space = serde_json::from_str(r#"{"kind":"lp","n":2,"p":1.5}"#).unwrap();
    assert_eq!(s, Space::lpf(2, 1.5).unwrap());
}

#[test]
fn dual_exponents() {
    let one = dilation_lab::Exponent::new(1.0).unwrap();
    assert!(one.conjugate().is_infinite());
    let inf = dilation_lab::Exponent::new(f64::INFINITY).unwrap();
    assert_eq!(inf.conjugate().get(), 1.0);
    assert!(dilation_lab::Exponent::new(0.5).is_err());
    let x = basis_vec(2, 0) * C64::new(0.0, 2.0);
    assert_eq!(Space::lpf(2, 3.0).unwrap().norm(&x).unwrap(), 2.0);
}
