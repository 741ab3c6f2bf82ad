//! The isometric part `X(T)`, Wold decompositions of annotated isometries,
//! the canonical (unitary plus c.n.u.) and Levan-type decompositions.
//!
//! Infinite intersections and sums are cut at `nmax`; results restricted to
//! the first `window` coordinates are reported next to the full ones.
//! Verdicts about the absence of unitary or isometric pieces mean that no
//! counterexample was found at the given budget.

use crate::dilation::DilationBundle;
use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{left_inverse, wold_structure, Annotation, MonomialMap, Operator};
use crate::orthogonality::bj_subspace;
use crate::serde_util::cmat;
use crate::spaces::{basis_vec, rng, Space};
use crate::subspace::Subspace;
use crate::{CMat, CVec, C64};
use serde::Serialize;
use std::collections::BTreeMap;

/// `X_n = {x : |T^n x| = |x|} = ker((I - P) V^n W)` from a dilation bundle
/// of `T`.
pub fn isometry_subspace(bundle: &DilationBundle, n: usize) -> Result<Subspace> {
    if n > bundle.horizon() {
        return Err(Error::Refused(format!("power {n} exceeds the bundle horizon {}", bundle.horizon())));
    }
    let x = bundle.t.domain();
    let rows = bundle.defect_rows(n);
    let frame = linalg::null_space(&rows, 1e-9);
    let sub = Subspace::from_frame(x.clone(), frame);
    let tn = bundle.t.pow(n)?;
    for v in sub.basis_vectors() {
        let nv = x.norm_slice(v.as_slice());
        let ntv = x.norm_slice(tn.apply(&v)?.as_slice());
        if (ntv - nv).abs() > 1e-8 * nv.max(1.0) {
            return Err(Error::Inconsistent(format!(
                "kernel vector has |T^{n} x| = {ntv} but |x| = {nv}"
            )));
        }
    }
    Ok(sub)
}

/// How `X(T)` is computed.
#[derive(Clone, Copy, Debug)]
pub enum XMethod<'a> {
    Dilation(&'a DilationBundle),
    /// From a monomial structure on a lattice.
    Structural,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometricPart {
    /// `None` when the candidate set is not a subspace.
    pub subspace: Option<Subspace>,
    /// Coordinates spanning the result when it is a coordinate subspace.
    pub coords: Option<Vec<usize>>,
    pub is_subspace: bool,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_cvec")]
    pub closure_witness: Option<CVec>,
    pub nmax: usize,
    pub method: &'static str,
}

mod opt_cvec {
    use crate::CVec;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<CVec>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => crate::serde_util::cvec::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

fn is_isometric_up_to(t: &Operator, x: &CVec, nmax: usize, tol: f64) -> bool {
    let s = t.domain();
    let nx = s.norm_slice(x.as_slice());
    let mut v = x.clone();
    for _ in 0..nmax {
        v = t.entries() * v;
        if (s.norm_slice(v.as_slice()) - nx).abs() > tol * nx {
            return false;
        }
    }
    true
}

fn structure_of(t: &Operator) -> Option<MonomialMap> {
    t.monomial().or_else(|| t.monomial_from_entries())
}

/// `X(T) = ∩_{n <= nmax} X_n`.
pub fn x_of_t(t: &Operator, nmax: usize, method: XMethod<'_>) -> Result<IsometricPart> {
    if !t.is_square() {
        return Err(Error::Refused("X(T) needs a square operator".into()));
    }
    let x = t.domain().clone();
    match method {
        XMethod::Dilation(b) => {
            if b.t.entries() != t.entries() {
                return Err(Error::Refused("bundle was built for a different operator".into()));
            }
            let mut s = Subspace::full(x);
            for n in 1..=nmax {
                s = s.intersect(&isometry_subspace(b, n)?, 1e-9);
            }
            Ok(IsometricPart { subspace: Some(s), coords: None, is_subspace: true, closure_witness: None, nmax, method: "dilation" })
        }
        XMethod::Structural => {
            if structure_of(t).is_none() || !x.is_lattice() {
                return Err(Error::Refused("structural X(T) needs a monomial operator on a lattice".into()));
            }
            let n = x.dim();
            let coords: Vec<usize> = (0..n).filter(|&j| is_isometric_up_to(t, &basis_vec(n, j), nmax, 1e-12)).collect();
            let sub = Subspace::coordinates(x.clone(), &coords)?;
            // Closure: pairwise sums with unimodular phases, then random samples.
            let mut witness = None;
            'pairs: for (a, &i) in coords.iter().enumerate() {
                for &j in &coords[a + 1..] {
                    for ph in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                        let v = basis_vec(n, i) + basis_vec(n, j) * ph;
                        if !is_isometric_up_to(t, &v, nmax, 1e-9) {
                            witness = Some(v);
                            break 'pairs;
                        }
                    }
                }
            }
            if witness.is_none() {
                let mut r = rng(nmax as u64);
                for _ in 0..64 {
                    if let Some(v) = sub.random_unit_with(&mut r) {
                        if !is_isometric_up_to(t, &v, nmax, 1e-9) {
                            witness = Some(v);
                            break;
                        }
                    }
                }
            }
            let ok = witness.is_none();
            Ok(IsometricPart {
                subspace: ok.then_some(sub),
                coords: ok.then_some(coords),
                is_subspace: ok,
                closure_witness: witness,
                nmax,
                method: "structural",
            })
        }
    }
}

/// A named piece of a decomposition with the matrix of `T` restricted to it
/// (in its orthonormal frame) and its trace on the window.
#[derive(Clone, Debug, Serialize)]
pub struct Part {
    pub name: String,
    pub subspace: Subspace,
    pub window_subspace: Subspace,
    #[serde(with = "cmat")]
    pub restriction: CMat,
    /// `|(I - Q Q^*) T Q|_max`; zero for invariant parts.
    pub invariance_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionResult {
    pub kind: String,
    pub parts: Vec<Part>,
    pub residuals: BTreeMap<String, f64>,
    pub nmax: usize,
    pub window: usize,
    pub notes: Vec<String>,
}

impl DecompositionResult {
    pub fn part(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }
}

fn window_of(s: &Subspace, window: usize) -> Result<Subspace> {
    let n = s.ambient().dim();
    if window >= n {
        return Ok(s.clone());
    }
    let w = Subspace::coordinates(s.ambient().clone(), &(0..window).collect::<Vec<_>>())?;
    Ok(s.intersect(&w, 1e-9))
}

fn make_part(name: &str, s: Subspace, t: &Operator, window: usize) -> Result<Part> {
    let q = s.frame().clone();
    let tq = t.entries() * &q;
    let restriction = q.adjoint() * &tq;
    let invariance_residual = if q.ncols() == 0 { 0.0 } else { linalg::max_abs(&(&tq - &q * &restriction)) };
    Ok(Part { name: name.into(), window_subspace: window_of(&s, window)?, subspace: s, restriction, invariance_residual })
}

/// `∩_{n <= nmax} M^n(S)`.
fn power_images(s: &Subspace, m: &Operator, nmax: usize) -> Subspace {
    let mut out = s.clone();
    let mut cur = s.clone();
    for _ in 0..nmax {
        cur = cur.image(m);
        out = out.intersect(&cur, 1e-9);
    }
    out
}

/// Wold decomposition `X = X_1 ⊕ X_2` of an annotated isometry: `X_1 =
/// ∩ V^n X ∩ A^n X` with `A` the left inverse of `V`, and `X_2 = span{V^n L}` with wandering subspace `L`, both cut at
/// `horizon`, checked against the cycle/chain structure of the annotation.
pub fn wold_decompose(v: &Operator, horizon: usize, window: usize, seed: u64) -> Result<DecompositionResult> {
    let mono = v.monomial().ok_or_else(|| Error::Refused("Wold decomposition needs a monomial-type annotation".into()))?;
    if !v.is_square() || !v.domain().is_lattice() {
        return Err(Error::Refused("Wold decomposition needs a square operator on a lattice".into()));
    }
    if !mono.is_injective() {
        return Err(Error::Refused("annotation is not injective".into()));
    }
    if mono.coeffs.iter().zip(&mono.targets).any(|(c, t)| t.is_some() && (c.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::Refused("annotation has non-unimodular coefficients".into()));
    }
    let x = v.domain().clone();
    let n = x.dim();
    let full = Subspace::full(x.clone());
    // Two-sided: on a truncation, V^n X alone keeps the tail of every chain.
    let back = left_inverse(v)?;
    let x1 = power_images(&full, v, horizon).intersect(&power_images(&full, &back, horizon), 1e-9);
    let hit: std::collections::BTreeSet<usize> = mono.targets.iter().flatten().copied().collect();
    let wandering: Vec<usize> = (0..n).filter(|i| !hit.contains(i)).collect();
    let l = Subspace::coordinates(x.clone(), &wandering)?;
    let mut x2 = l.clone();
    let mut cur = l.clone();
    for _ in 0..horizon {
        cur = cur.image(v);
        x2 = x2.sum(&cur);
    }
    let ws = wold_structure(&mono, &(0..n).collect::<Vec<_>>());
    let unitary = Subspace::coordinates(x.clone(), &ws.unitary_coords())?;
    let shift = Subspace::coordinates(x.clone(), &ws.shift_coords())?;
    let mut residuals = BTreeMap::new();
    residuals.insert("unitary_vs_structure".into(), x1.distance(&unitary));
    residuals.insert("shift_vs_structure".into(), x2.distance(&shift));

    // V on X_1: isometric and onto.
    let mut r = rng(seed);
    let mut iso: f64 = 0.0;
    for _ in 0..16 {
        if let Some(u) = x1.random_unit_with(&mut r) {
            iso = iso.max((x.norm_slice(v.apply(&u)?.as_slice()) - 1.0).abs());
        }
    }
    residuals.insert("unitary_isometry".into(), iso);
    residuals.insert("unitary_onto".into(), x1.image(v).distance(&x1));

    // Wandering families and the right complement of the range.
    let mut notes = Vec::new();
    if !l.is_zero() {
        let mut worst = f64::INFINITY;
        let depth = horizon.min(3);
        let mut powers = vec![l.clone()];
        for k in 1..=depth {
            let next = powers[k - 1].image(v);
            powers.push(next);
        }
        for a in 1..=depth {
            for b in 0..a {
                if powers[a].is_zero() {
                    continue;
                }
                let c = bj_subspace(&powers[a], &powers[b], 8, seed.wrapping_add((a * 31 + b) as u64))?;
                worst = worst.min(c.value);
                if !c.passed() {
                    notes.push(format!("V^{a} L is not BJ-orthogonal to V^{b} L"));
                }
            }
        }
        residuals.insert("wandering_bj_gap".into(), worst);
        let range = full.image(v);
        if !range.is_zero() {
            let c = bj_subspace(&range, &l, 8, seed ^ 0xabc)?;
            residuals.insert("range_bj_gap".into(), c.value);
            if !c.passed() {
                notes.push("range(V) is not BJ-orthogonal to L".into());
            }
        }
    }
    Ok(DecompositionResult {
        kind: "wold".into(),
        parts: vec![
            make_part("unitary", x1, v, window)?,
            make_part("shift", x2, v, window)?,
            make_part("wandering", l, v, window)?,
        ],
        residuals,
        nmax: horizon,
        window,
        notes,
    })
}

/// `T` cut down to the coordinate set `coords`: columns outside it and
/// edges leaving it are dropped.
fn restricted_monomial(t: &Operator, coords: &[usize]) -> Result<Operator> {
    let mono = structure_of(t).ok_or_else(|| Error::Refused("operator is not monomial".into()))?;
    let inside: std::collections::BTreeSet<usize> = coords.iter().copied().collect();
    let n = mono.targets.len();
    let mut targets = vec![None; n];
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for &j in coords {
        if let Some(tj) = mono.targets[j].filter(|tj| inside.contains(tj)) {
            targets[j] = Some(tj);
            coeffs[j] = mono.coeffs[j];
        }
    }
    Operator::from_annotation(t.domain().clone(), t.domain().clone(), Annotation::Monomial { targets, coeffs })
}

struct Canonical {
    xt: IsometricPart,
    coords: Vec<usize>,
    restricted: Operator,
    a: Operator,
    w: Subspace,
}

fn canonical_core(t: &Operator, nmax: usize) -> Result<Canonical> {
    let xt = x_of_t(t, nmax, XMethod::Structural)?;
    let coords = match (&xt.coords, xt.is_subspace) {
        (Some(c), true) => c.clone(),
        _ => return Err(Error::Refused("hypothesis failed: X(T) is not a linear subspace".into())),
    };
    let xs = xt.subspace.clone().expect("subspace");
    let restricted = restricted_monomial(t, &coords)?;
    let a = left_inverse(&restricted)
        .map_err(|e| Error::Refused(format!("hypothesis failed: T restricted to X(T) has no norm-one left inverse ({e})")))?;
    let w = power_images(&xs, t, nmax).intersect(&power_images(&xs, &a, nmax), 1e-9);
    Ok(Canonical { xt, coords, restricted, a, w })
}

/// `X = W ⊕ W'` with `T|W` unitary: `W = (∩ T^n X(T)) ∩ (∩ A^n X(T))`
/// where `A` is the left inverse of `T` on `X(T)`.
pub fn canonical_decompose(t: &Operator, nmax: usize, window: usize) -> Result<DecompositionResult> {
    let c = canonical_core(t, nmax)?;
    let x = t.domain().clone();
    let n = x.dim();
    let mut residuals = BTreeMap::new();
    let mut notes = Vec::new();

    // A T = I on X(T), away from edges that leave X(T).
    let at = c.a.entries() * c.restricted.entries();
    let mut left: f64 = 0.0;
    let rmono = c.restricted.monomial().expect("annotated");
    for &j in &c.coords {
        if rmono.targets[j].is_some() {
            left = left.max((at.column(j).into_owned() - basis_vec(n, j)).norm());
        }
    }
    residuals.insert("left_inverse".into(), left);

    // T|W unitary: isometric on samples and onto W.
    let mut r = rng(nmax as u64 ^ 0x77);
    let mut iso: f64 = 0.0;
    for _ in 0..32 {
        if let Some(u) = c.w.random_unit_with(&mut r) {
            iso = iso.max((x.norm_slice(t.apply(&u)?.as_slice()) - 1.0).abs());
        }
    }
    residuals.insert("unitary_isometry".into(), iso);
    residuals.insert("unitary_onto".into(), c.w.image(t).distance(&c.w));

    // W' = coordinate complement (W is a coordinate subspace on a lattice);
    // look for a unitary piece of T inside it.
    let w_coords: Vec<usize> = (0..n).filter(|&j| c.w.contains(&basis_vec(n, j), 1e-9)).collect();
    let coordinate_w = w_coords.len() == c.w.dim();
    let w_prime = if coordinate_w {
        Subspace::coordinates(x.clone(), &(0..n).filter(|j| !w_coords.contains(j)).collect::<Vec<_>>())?
    } else {
        notes.push("W is not a coordinate subspace; W' is its Euclidean complement".into());
        c.w.complement()
    };
    let xs = c.xt.subspace.clone().expect("subspace");
    let inner = xs.intersect(&w_prime, 1e-9);
    let hidden = power_images(&inner, t, nmax).intersect(&power_images(&inner, &c.a, nmax), 1e-9);
    residuals.insert("cnu_candidate_dim".into(), hidden.dim() as f64);
    notes.push(format!(
        "c.n.u. evidence on W': no unitary piece found among T^n/A^n-stable candidates up to n = {nmax}"
    ));
    Ok(DecompositionResult {
        kind: "canonical".into(),
        parts: vec![
            make_part("x_of_t", xs, t, window)?,
            make_part("unitary", c.w, t, window)?,
            make_part("cnu", w_prime, t, window)?,
        ],
        residuals,
        nmax,
        window,
        notes,
    })
}

/// `X = (W_1 ⊕ W_2) ⊕ W'` with `T|W_1` unitary, `T|W_2` a unilateral shift
/// and `T|W'` completely non-isometric, taking `X(T)` as the maximal
/// invariant piece on which `T` is an isometry.
pub fn levan_decompose(t: &Operator, nmax: usize, window: usize, seed: u64) -> Result<DecompositionResult> {
    let c = canonical_core(t, nmax)?;
    let x = t.domain().clone();
    let n = x.dim();
    let rmono = c.restricted.monomial().expect("annotated");
    let ws = wold_structure(&rmono, &c.coords);
    let w1 = Subspace::coordinates(x.clone(), &ws.unitary_coords())?;
    let w2 = Subspace::coordinates(x.clone(), &ws.shift_coords())?;
    let rest: Vec<usize> = (0..n).filter(|j| !c.coords.contains(j)).collect();
    let wp = Subspace::coordinates(x.clone(), &rest)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("unitary_vs_canonical".into(), w1.distance(&c.w));

    // c.n.i.: no sampled unit vector of W' stays isometric for n <= nmax.
    let mut found = 0usize;
    let mut r = rng(seed);
    let mut samples: Vec<CVec> = rest.iter().map(|&j| basis_vec(n, j)).collect();
    for _ in 0..64 {
        if let Some(u) = wp.random_unit_with(&mut r) {
            samples.push(u);
        }
    }
    for s in &samples {
        if is_isometric_up_to(t, s, nmax, 1e-6) {
            found += 1;
        }
    }
    residuals.insert("cni_isometric_samples".into(), found as f64);
    let notes = vec![format!("c.n.i. evidence: {} samples of W' checked for n <= {nmax}", samples.len())];
    Ok(DecompositionResult {
        kind: "levan".into(),
        parts: vec![
            make_part("x_of_t", c.xt.subspace.clone().expect("subspace"), t, window)?,
            make_part("unitary", w1, t, window)?,
            make_part("shift", w2, t, window)?,
            make_part("cni", wp, t, window)?,
        ],
        residuals,
        nmax,
        window,
        notes,
    })
}

/// The `l_3` operator `T e_{2k} = 2^{-(k+1)} e_{2k}`, `T e_{4k+1} = e_{4k+1}`,
/// `T e_{4k+3} = e_{4k+7}` on `window + 4 nmax` coordinates, so that chains
/// starting inside the window survive `nmax` steps.
pub fn gallery_operator(window: usize, nmax: usize) -> Result<Operator> {
    let n = window + 4 * nmax;
    let s = Space::lpf(n, 3.0)?;
    let mut targets = vec![None; n];
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (j, (t, c)) in targets.iter_mut().zip(coeffs.iter_mut()).enumerate() {
        match j % 4 {
            0 | 2 => {
                *t = Some(j);
                *c = C64::new(0.5f64.powi((j / 2 + 1) as i32), 0.0);
            }
            1 => {
                *t = Some(j);
                *c = C64::new(1.0, 0.0);
            }
            _ => {
                if j + 4 < n {
                    *t = Some(j + 4);
                    *c = C64::new(1.0, 0.0);
                }
            }
        }
    }
    Operator::from_annotation(s.clone(), s, Annotation::Monomial { targets, coeffs })
}

/// Sampled maximality evidence for `W`: spans of eigenvectors of `T` on
/// random unions of unimodular cycles are `T`-invariant pieces on which `T`
/// is onto and isometric; each must lie in `W`. Returns the largest excess
/// angle over `samples` draws.
pub fn maximality_evidence(t: &Operator, w: &Subspace, samples: usize, seed: u64) -> Result<f64> {
    let mono = structure_of(t).ok_or_else(|| Error::Refused("operator is not monomial".into()))?;
    let n = mono.targets.len();
    let ws = wold_structure(&mono, &(0..n).collect::<Vec<_>>());
    let cycles: Vec<&Vec<usize>> = ws
        .cycles
        .iter()
        .filter(|c| c.iter().all(|&j| (mono.coeffs[j].norm() - 1.0).abs() <= 1e-12))
        .collect();
    if cycles.is_empty() {
        return Ok(0.0);
    }
    use rand::Rng;
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut vs: Vec<CVec> = Vec::new();
        for c in &cycles {
            if r.random::<f64>() < 0.5 {
                continue;
            }
            // Eigenvectors of the cycle: x_{c_{k+1}} = (μ / coeff_k) x_{c_k}.
            let prod: C64 = c.iter().map(|&j| mono.coeffs[j]).product();
            let root = C64::from_polar(1.0, prod.arg() / c.len() as f64);
            let m = r.random_range(0..c.len());
            let mu = root * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / c.len() as f64);
            let mut v = CVec::zeros(n);
            let mut amp = C64::new(1.0, 0.0);
            for &j in c.iter() {
                v[j] = amp;
                amp = amp * mono.coeffs[j] / mu;
            }
            vs.push(v);
        }
        if vs.is_empty() {
            continue;
        }
        let m = Subspace::span_of(t.domain().clone(), &CMat::from_columns(&vs), 1e-9)?;
        let invariant = m.image(t).distance(&m);
        if invariant > 1e-8 {
            return Err(Error::Inconsistent(format!("sampled piece is not invariant ({invariant:.2e})")));
        }
        worst = worst.max(m.excess_over(w));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::dilation::build_nagy_dilation;

    #[test]
    fn nagy_kernel_of_diag() {
        let s = Space::lpf(2, 2.0).unwrap();
        let t = Operator::diagonal(s.clone(), vec![c64(1.0, 0.0), c64(0.5, 0.0)]).unwrap();
        let b = build_nagy_dilation(&t, 4, 0).unwrap();
        for n in 1..=3 {
            let k = isometry_subspace(&b, n).unwrap();
            assert_eq!(k.dim(), 1);
            assert!(k.contains(&basis_vec(2, 0), 1e-12));
        }
        assert!(isometry_subspace(&b, 4).is_err());
    }

    #[test]
    fn l1_candidate_set_is_not_a_subspace() {
        let s = Space::lpf(3, 1.0).unwrap();
        let one = c64(1.0, 0.0);
        let z = c64(0.0, 0.0);
        let m = CMat::from_row_slice(3, 3, &[one, -one, z, z, z, z, z, z, one]);
        let t = Operator::on(s, m).unwrap();
        let x = x_of_t(&t, 3, XMethod::Structural).unwrap();
        assert!(!x.is_subspace);
        let w = x.closure_witness.unwrap();
        assert!(w[0].norm() > 0.0 && w[1].norm() > 0.0);
    }

    #[test]
    fn gallery_isometric_part_is_odd_coordinates() {
        let t = gallery_operator(16, 2).unwrap();
        let x = x_of_t(&t, 2, XMethod::Structural).unwrap();
        let c = x.coords.unwrap();
        assert!(c.iter().filter(|&&j| j < 16).all(|j| j % 2 == 1));
        assert_eq!(c.iter().filter(|&&j| j < 16).count(), 8);
    }
}
