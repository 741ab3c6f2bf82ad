//! Triangle-inequality certification of `A_T`, isometric dilations (the
//! minimal block construction, the row-form construction and its Hilbert
//! special case) and their verification.

use crate::certificate::{Certificate, Verdict};
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::operators::{self, a_t, block_monomial_coeffs, operator_norm, Annotation, Operator};
use crate::optim::{lbfgs, pack, pack_into, unpack, LbfgsOptions};
use crate::serde_util::{cmat, cvec};
use crate::spaces::{basis_vec, rng, Space};
use crate::{CMat, CVec, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

/// Outcome of certifying whether `A_T` is a norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormCertificate {
    pub id: String,
    /// `norm`, `semi-norm` or `violation`.
    pub verdict: Verdict,
    /// `(x, y)` with `A_T(x) + A_T(y) < A_T(x + y)`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_pair")]
    pub witness: Option<(CVec, CVec)>,
    /// `A_T(x) + A_T(y) - A_T(x + y)` at the reported pair: the witness for a
    /// violation, the best search pair otherwise.
    pub margin: f64,
    /// Lowest value reached by descent over unit pairs.
    pub search_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_pair")]
    pub search_witness: Option<(CVec, CVec)>,
    /// `min A_T` over the unit sphere, i.e. `sqrt(1 - |T|^2)`.
    pub positivity_value: f64,
    #[serde(with = "cvec")]
    pub positivity_witness: CVec,
    pub operator_norm: f64,
    pub norm_exact: bool,
    pub seed: u64,
    pub trials: usize,
    pub fingerprint: u64,
}

mod opt_pair {
    use crate::serde_util::cvec_list;
    use crate::CVec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<(CVec, CVec)>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some((a, b)) => cvec_list::serialize(&[a.clone(), b.clone()], s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<(CVec, CVec)>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "cvec_list")] Vec<CVec>);
        let v: Option<W> = Option::deserialize(d)?;
        match v {
            None => Ok(None),
            Some(W(mut xs)) if xs.len() == 2 => {
                let b = xs.pop().expect("two");
                let a = xs.pop().expect("two");
                Ok(Some((a, b)))
            }
            Some(_) => Err(serde::de::Error::custom("witness pair must have two vectors")),
        }
    }
}

impl NormCertificate {
    pub fn to_certificate(&self) -> Certificate {
        let mut c = Certificate::new(self.verdict, self.margin, self.seed, self.trials)
            .with_note("search_min", self.search_min)
            .with_note("positivity", self.positivity_value)
            .with_note("operator_norm", self.operator_norm);
        if let Some((x, y)) = &self.witness {
            c.witnesses = vec![x.clone(), y.clone()];
        }
        c
    }
}

/// Search effort for the triangle search.
#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    pub starts: usize,
    pub iterations: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { starts: 8, iterations: 400 }
    }
}

/// Stable hash of an operator's entries and spaces.
pub fn fingerprint(t: &Operator) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    t.entries().nrows().hash(&mut h);
    t.entries().ncols().hash(&mut h);
    for z in t.entries().iter() {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    serde_json::to_string(t.domain()).unwrap_or_default().hash(&mut h);
    h.finish()
}

/// `A_T(x + y)` margin `A_T(x) + A_T(y) - A_T(x + y)`.
pub fn triangle_margin(t: &Operator, x: &CVec, y: &CVec) -> Result<f64> {
    Ok(a_t(t, x)? + a_t(t, y)? - a_t(t, &(x + y))?)
}

fn a_val_grad(t: &CMat, space: &Space, x: &CVec) -> (f64, CVec) {
    let nx = space.norm_slice(x.as_slice());
    let tx = t * x;
    let ntx = space.norm_slice(tx.as_slice());
    let rad = nx * nx - ntx * ntx;
    let a = rad.max(0.0).sqrt();
    if a <= 1e-300 {
        return (0.0, CVec::zeros(x.len()));
    }
    let gx = space.norm_grad(x).expect("shape");
    let gtx = space.norm_grad(&tx).expect("shape");
    let g = (gx.scale(nx) - (t.adjoint() * gtx).scale(ntx)).unscale(a);
    (a, g)
}

/// Margin at `(x/|x|, y/|y|)` with its real gradient.
fn unit_margin(t: &CMat, space: &Space, x: &CVec, y: &CVec) -> (f64, CVec, CVec) {
    let (nx, ny) = (space.norm_slice(x.as_slice()), space.norm_slice(y.as_slice()));
    let n = x.len();
    if nx == 0.0 || ny == 0.0 {
        return (0.0, CVec::zeros(n), CVec::zeros(n));
    }
    let (xh, yh) = (x.unscale(nx), y.unscale(ny));
    let (ax, gx) = a_val_grad(t, space, &xh);
    let (ay, gy) = a_val_grad(t, space, &yh);
    let (as_, gs) = a_val_grad(t, space, &(&xh + &yh));
    let val = ax + ay - as_;
    let (gxh, gyh) = (gx - &gs, gy - gs);
    let chain = |g: CVec, v: &CVec, nv: f64| {
        let vh = v.unscale(nv);
        let inner: f64 = g.iter().zip(vh.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        let gn = space.norm_grad(v).expect("shape");
        g.unscale(nv) - gn.scale(inner / nv)
    };
    (val, chain(gxh, x, nx), chain(gyh, y, ny))
}

/// Coordinate pairs with phases `1, -1, i, -i`, as unit vectors.
fn structured_pairs(space: &Space) -> Vec<(CVec, CVec)> {
    let n = space.dim();
    let phases = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let ei = basis_vec(n, i);
            let ei = ei.unscale(space.norm_slice(ei.as_slice()));
            let ej = basis_vec(n, j);
            let ej = ej.unscale(space.norm_slice(ej.as_slice()));
            for ph in phases {
                out.push((ei.clone(), &ej * ph));
            }
        }
    }
    out
}

/// Search for a violation of `A_T(x + y) <= A_T(x) + A_T(y)`.
///
/// Structured seeds (coordinate pairs and the caller's `extra` pairs) are
/// evaluated first; descent then runs from the best of them and from random
/// unit pairs. A violation is reported at the most negative structured seed
/// when one violates, otherwise at the descent minimum. Without a violation
/// the verdict is `semi-norm` when `T` attains norm one and `norm` otherwise.
pub fn triangle_violation_search(
    t: &Operator,
    budget: SearchBudget,
    seed: u64,
    extra: &[(CVec, CVec)],
) -> Result<NormCertificate> {
    if !t.is_square() {
        return Err(Error::Refused("A_T needs a square operator".into()));
    }
    let space = t.domain();
    let n = space.dim();
    let est = operator_norm(t, operators::DEFAULT_RESTARTS, seed);
    if est.value > 1.0 + 1e-9 {
        return Err(Error::NotContraction(format!("|T| >= {}", est.value)));
    }
    let m = t.entries();
    let mut seeds = structured_pairs(space);
    for (x, y) in extra {
        check_len(n, x.len())?;
        check_len(n, y.len())?;
        seeds.push((x.clone(), y.clone()));
    }
    let seed_vals: Vec<f64> = seeds.par_iter().map(|(x, y)| triangle_margin(t, x, y)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    order.sort_by(|&a, &b| seed_vals[a].total_cmp(&seed_vals[b]).then(a.cmp(&b)));

    let mut starts: Vec<(CVec, CVec)> = order.iter().take(budget.starts.min(3)).map(|&i| seeds[i].clone()).collect();
    let mut r = rng(seed);
    while starts.len() < budget.starts.max(1) {
        starts.push((space.random_unit_with(&mut r), space.random_unit_with(&mut r)));
    }
    let opts = LbfgsOptions { max_iter: budget.iterations, rel_tol: 1e-12, memory: 10 };
    let runs: Vec<(f64, CVec, CVec)> = starts
        .into_par_iter()
        .map(|(x0, y0)| {
            let mut z0 = pack(&x0);
            z0.extend(pack(&y0));
            let res = lbfgs(
                |z, g| {
                    let x = unpack(&z[..2 * n]);
                    let y = unpack(&z[2 * n..]);
                    let (v, gx, gy) = unit_margin(m, space, &x, &y);
                    pack_into(&gx, &mut g[..2 * n]);
                    pack_into(&gy, &mut g[2 * n..]);
                    v
                },
                z0,
                opts,
            );
            let x = unpack(&res.x[..2 * n]);
            let y = unpack(&res.x[2 * n..]);
            let (nx, ny) = (space.norm_slice(x.as_slice()), space.norm_slice(y.as_slice()));
            let (x, y) = (x.unscale(nx), y.unscale(ny));
            let v = triangle_margin(t, &x, &y).unwrap_or(f64::INFINITY);
            (v, x, y)
        })
        .collect();
    let mut best = runs[0].clone();
    for run in runs.into_iter().skip(1) {
        if run.0 < best.0 {
            best = run;
        }
    }
    let (search_min, sx, sy) = best;
    let structured = seed_vals[order[0]];
    let (witness, margin, verdict) = if structured < -1e-9 {
        let (x, y) = seeds[order[0]].clone();
        (Some((x, y)), structured, Verdict::Violation)
    } else if search_min < -1e-9 {
        (Some((sx.clone(), sy.clone())), search_min, Verdict::Violation)
    } else {
        let w = &est.witness;
        let nw = space.norm_slice(w.as_slice());
        let ntw = space.norm_slice((m * w).as_slice());
        let radicand = (nw * nw - ntw * ntw) / (nw * nw);
        let v = if radicand < 1e-9 { Verdict::SemiNorm } else { Verdict::Norm };
        (None, search_min.min(structured), v)
    };
    let positivity_value = a_t(t, &est.witness).unwrap_or(0.0);
    let fp = fingerprint(t);
    Ok(NormCertificate {
        id: format!("normcert-{fp:016x}-{seed}"),
        verdict,
        witness,
        margin,
        search_min,
        search_witness: Some((sx, sy)),
        positivity_value,
        positivity_witness: est.witness.clone(),
        operator_norm: est.value,
        norm_exact: est.exact,
        seed,
        trials: seeds.len() + budget.starts * budget.iterations,
        fingerprint: fp,
    })
}

/// Admissible `lambda` window of the `l_p` counterexample operators: Case I
/// for `1 < p < 2`, Case II for `2 < p < inf`, `(0, 1)` at `p = 1, inf`.
pub fn lambda_window(p: f64) -> Option<(f64, f64)> {
    if p == 1.0 || p.is_infinite() {
        Some((0.0, 1.0))
    } else if p > 1.0 && p < 2.0 {
        Some((((4.0 - 4f64.powf(1.0 / p)) / 4.0).sqrt(), 2f64.powf(1.0 / p - 1.0)))
    } else if p > 2.0 {
        Some(((1.0 - 4f64.powf(-1.0 / p)).sqrt(), 2f64.powf(-1.0 / p)))
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    BlockMin,
    RowForm,
    Nagy,
}

/// An isometric dilation `V` of `T` on `K` with embedding `W` and projection
/// `P` onto `W(X)`.
#[derive(Clone, Debug, Serialize)]
pub struct DilationBundle {
    pub construction: Construction,
    pub depth: usize,
    pub k: Space,
    pub v: Operator,
    pub w: Operator,
    pub p: Operator,
    pub t: Operator,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representation: Option<Operator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_id: Option<String>,
    /// Orthonormal frame of the null space of the semi-norm `A_T` (empty for
    /// a norm); used to read kernels modulo the semi-norm.
    #[serde(with = "cmat")]
    pub null_frame: CMat,
    /// Start offsets of the `(X, A_T)` slots in `K`.
    pub seminorm_slots: Vec<usize>,
}

impl DilationBundle {
    /// Largest `k` for which `V^k W` is computed without truncation.
    pub fn horizon(&self) -> usize {
        self.depth - 1
    }

    pub fn x_dim(&self) -> usize {
        self.t.domain().dim()
    }

    /// Copy with one entry of `V` shifted by `delta`, for fault injection.
    pub fn with_corrupted_v(&self, row: usize, col: usize, delta: C64) -> Result<DilationBundle> {
        let mut m = self.v.entries().clone();
        if row >= m.nrows() || col >= m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: row.max(col) });
        }
        m[(row, col)] += delta;
        let mut b = self.clone();
        b.v = Operator::on(self.k.clone(), m)?;
        Ok(b)
    }

    /// `V^k W` as a matrix.
    pub fn vk_w(&self, k: usize) -> CMat {
        let mut m = self.w.entries().clone();
        for _ in 0..k {
            m = self.v.entries() * m;
        }
        m
    }

    /// Rows of `(I - P) V^k W` with the semi-norm slots reduced modulo its
    /// null space; its kernel is `{x : |T^k x| = |x|}`.
    pub fn defect_rows(&self, k: usize) -> CMat {
        let m = self.vk_w(k);
        let n = self.x_dim();
        let keep = self.p.entries();
        let mut rows: Vec<CVec> = Vec::new();
        let is_semi = |i: usize| self.seminorm_slots.iter().any(|&s| i >= s && i < s + n);
        for i in 0..m.nrows() {
            if keep[(i, i)] != C64::new(0.0, 0.0) || is_semi(i) {
                continue;
            }
            rows.push(m.row(i).transpose());
        }
        let proj = if self.null_frame.ncols() > 0 {
            CMat::identity(n, n) - &self.null_frame * self.null_frame.adjoint()
        } else {
            CMat::identity(n, n)
        };
        for &s in &self.seminorm_slots {
            let block = proj.clone() * m.rows(s, n);
            for i in 0..n {
                rows.push(block.row(i).transpose());
            }
        }
        if rows.is_empty() {
            return CMat::zeros(0, m.ncols());
        }
        CMat::from_columns(&rows).transpose()
    }
}

fn projection_onto_block0(k: &Space, n: usize) -> Result<Operator> {
    let dim = k.dim();
    let mut vals = vec![C64::new(0.0, 0.0); dim];
    vals.iter_mut().take(n).for_each(|v| *v = C64::new(1.0, 0.0));
    Operator::from_annotation(k.clone(), k.clone(), Annotation::Diagonal { values: vals })
}

fn embedding(x: &Space, k: &Space) -> Result<Operator> {
    let n = x.dim();
    let targets = (0..n).map(Some).collect();
    let m = {
        let mut m = CMat::zeros(k.dim(), n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    };
    Operator::new(m, x.clone(), k.clone())?
        .with_annotation(Annotation::Monomial { targets, coeffs: vec![C64::new(1.0, 0.0); n] })
}

/// The minimal dilation on `K = l_2(X ⊕_2 (X, A_T))` truncated to `depth`
/// blocks: `V(x_0, x_1, ...) = (T x_0, D x_0, x_1, ...)` with
/// `T(a, c) = (Ta, c)` and `D(a, c) = (0, a)`.
pub fn build_min_dilation(t: &Operator, cert: &NormCertificate, depth: usize) -> Result<DilationBundle> {
    if !matches!(cert.verdict, Verdict::Norm | Verdict::SemiNorm) {
        return Err(Error::Refused(format!("certificate {} does not assert a norm or semi-norm", cert.id)));
    }
    if cert.fingerprint != fingerprint(t) {
        return Err(Error::Refused(format!("certificate {} was issued for a different operator", cert.id)));
    }
    if depth < 2 {
        return Err(Error::Refused("depth must be at least 2".into()));
    }
    let x = t.domain().clone();
    let n = x.dim();
    let positive = cert.verdict == Verdict::Norm;
    let x0 = Space::renormed(x.clone(), t.entries().clone(), cert.id.clone(), positive)?;
    let e = Space::direct_sum2(vec![x.clone(), x0])?;
    let k = Space::block_seq(e, depth)?;
    let d = 2 * n;
    let mut v = CMat::zeros(k.dim(), k.dim());
    // Block 0 <- [[T, 0], [0, I]] x_0 ; block 1 <- [[0, 0], [I, 0]] x_0.
    v.view_mut((0, 0), (n, n)).copy_from(t.entries());
    for i in 0..n {
        v[(n + i, n + i)] = C64::new(1.0, 0.0);
        if depth > 1 {
            v[(d + n + i, i)] = C64::new(1.0, 0.0);
        }
    }
    // Block j + 1 <- x_j for j >= 1.
    for j in 1..depth.saturating_sub(1) {
        for i in 0..d {
            v[((j + 1) * d + i, j * d + i)] = C64::new(1.0, 0.0);
        }
    }
    let rep = defect_representation(t)?;
    let null_frame = if positive {
        CMat::zeros(n, 0)
    } else if let Some(a) = &rep {
        linalg::null_space(a.entries(), 1e-9)
    } else {
        let att = operators::norm_attainment_set(t, cert.seed, None)?;
        att.span.frame().clone()
    };
    Ok(DilationBundle {
        construction: Construction::BlockMin,
        depth,
        v: Operator::on(k.clone(), v)?,
        w: embedding(&x, &k)?,
        p: projection_onto_block0(&k, n)?,
        k: k.clone(),
        t: t.clone(),
        representation: rep,
        certificate_id: Some(cert.id.clone()),
        null_frame,
        seminorm_slots: (0..depth).map(|b| b * d + n).collect(),
    })
}

/// Number of `X` blocks of the row-form window that keeps `V^k W` exact for
/// `k < depth`.
pub fn rowform_blocks(r: usize, depth: usize) -> usize {
    (2 * r - 1) * (1usize << (depth - 2)) + 1
}

/// Row-form dilation on a truncation of `l_2(X)` from a representation
/// `A = (A_0, A_1, ...)` with `|Ax| = A_T(x)`: rows `T; A_0; I; A_1; I; ...`,
/// so `x_j` lands in block `2j` and `A_j x_0` in block `2j + 1`.
pub fn build_rowform_dilation(t: &Operator, a: &Operator, depth: usize, seed: u64) -> Result<DilationBundle> {
    rowform(t, a, depth, seed, Construction::RowForm)
}

fn rowform(t: &Operator, a: &Operator, depth: usize, seed: u64, construction: Construction) -> Result<DilationBundle> {
    if !t.is_square() {
        return Err(Error::Refused("dilation needs a square operator".into()));
    }
    if !(2..=12).contains(&depth) {
        return Err(Error::Refused("row-form depth must lie in 2..=12".into()));
    }
    let x = t.domain().clone();
    let n = x.dim();
    let (base, lo, hi) = a
        .codomain()
        .block_layout()
        .ok_or_else(|| Error::Refused("representation must map into a block sequence over X".into()))?;
    if *base != x || lo != 0 || a.domain() != &x {
        return Err(Error::Refused("representation must map X into a block sequence over X".into()));
    }
    let r = (hi + 1) as usize;
    let mut rr = rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let v = x.random_unit_with(&mut rr);
        let lhs = a.codomain().norm_slice(a.apply(&v)?.as_slice());
        worst = worst.max((lhs - a_t(t, &v)?).abs());
    }
    if worst > 1e-8 {
        return Err(Error::Inconsistent(format!("|Ax| differs from A_T(x) by {worst:.3e}")));
    }
    let blocks = rowform_blocks(r, depth);
    let k = Space::block_seq(x.clone(), blocks)?;
    let mut v = CMat::zeros(k.dim(), k.dim());
    v.view_mut((0, 0), (n, n)).copy_from(t.entries());
    for j in 0..r {
        let row = (2 * j + 1) * n;
        if row + n <= k.dim() {
            v.view_mut((row, 0), (n, n)).copy_from(&a.entries().rows(j * n, n));
        }
    }
    for j in 1..blocks {
        if 2 * j < blocks {
            for i in 0..n {
                v[(2 * j * n + i, j * n + i)] = C64::new(1.0, 0.0);
            }
        }
    }
    Ok(DilationBundle {
        construction,
        depth,
        v: Operator::on(k.clone(), v)?,
        w: embedding(&x, &k)?,
        p: projection_onto_block0(&k, n)?,
        k,
        t: t.clone(),
        representation: Some(a.clone()),
        certificate_id: None,
        null_frame: CMat::zeros(n, 0),
        seminorm_slots: Vec::new(),
    })
}

/// Row-form dilation with `A = D_T` on a Hilbert space.
pub fn build_nagy_dilation(t: &Operator, depth: usize, seed: u64) -> Result<DilationBundle> {
    if !t.domain().is_hilbert() {
        return Err(Error::Refused("the Nagy construction needs a Hilbert space".into()));
    }
    let a = defect_representation(t)?.ok_or_else(|| Error::Refused("no defect operator".into()))?;
    rowform(t, &a, depth, seed, Construction::Nagy)
}

/// Check `P V^k W x = W T^k x` and `|V^k W x| = |x|` for `k <= kmax` on
/// `samples` seeded unit vectors, plus the coefficient rank of
/// `span{V^k W x}` against the minimal count.
pub fn verify_dilation(bundle: &DilationBundle, kmax: usize, tol: f64, samples: usize, seed: u64) -> Result<Certificate> {
    if kmax + 1 > bundle.depth {
        return Err(Error::Refused(format!("kmax {kmax} exceeds the horizon of depth {}", bundle.depth)));
    }
    let x = bundle.t.domain();
    let n = x.dim();
    let k = &bundle.k;
    let mut r = rng(seed);
    let xs: Vec<CVec> = (0..samples).map(|_| x.random_unit_with(&mut r)).collect();
    let pm = bundle.p.entries();
    let wm = bundle.w.entries();
    // (residual, k, sample, check) with check 0 = identity, 1 = isometry.
    let mut worst = (0.0_f64, 0usize, 0usize, 0usize);
    let mut residuals = Vec::with_capacity(kmax + 1);
    let mut tk = CMat::identity(n, n);
    for kk in 0..=kmax {
        let vkw = bundle.vk_w(kk);
        let lhs_m = pm * &vkw;
        let rhs_m = wm * &tk;
        let mut row_worst = 0.0_f64;
        for (si, xv) in xs.iter().enumerate() {
            let d = (&lhs_m - &rhs_m) * xv;
            let res = k.norm_slice(d.as_slice());
            let iso = (k.norm_slice((&vkw * xv).as_slice()) - 1.0).abs();
            row_worst = row_worst.max(res).max(iso);
            if res > worst.0 {
                worst = (res, kk, si, 0);
            }
            if iso > worst.0 {
                worst = (iso, kk, si, 1);
            }
        }
        residuals.push(row_worst);
        tk = bundle.t.entries() * tk;
    }
    let pass = worst.0 <= tol;
    let mut cert = Certificate::new(if pass { Verdict::Pass } else { Verdict::Fail }, worst.0, seed, samples * (kmax + 1))
        .with_note("worst_k", worst.1 as f64)
        .with_note("worst_check", worst.3 as f64);
    cert.residuals = residuals;
    if !pass {
        let xv = &xs[worst.2];
        let vkw = bundle.vk_w(worst.1);
        let d = if worst.3 == 0 { (pm * &vkw - wm * bundle.t.pow(worst.1)?.entries()) * xv } else { &vkw * xv };
        if let Some((base, lo, hi)) = k.block_layout() {
            let bd = base.dim();
            let (mut bb, mut bv) = (lo, -1.0);
            for b in lo..=hi {
                let s = ((b - lo) as usize) * bd;
                let v = base.norm_slice(&d.as_slice()[s..s + bd]);
                if v > bv {
                    bb = b;
                    bv = v;
                }
            }
            cert = cert.with_note("worst_block", bb as f64);
        }
        cert.witnesses.push(xv.clone());
    }
    // Minimality: coefficient rank of span{V^k W x : k <= kmax}.
    let mut cols: Vec<CVec> = Vec::new();
    let basis: Vec<CVec> = (0..n).map(|_| x.random_unit_with(&mut r)).collect();
    for kk in 0..=kmax {
        let vkw = bundle.vk_w(kk);
        for b in &basis {
            cols.push(&vkw * b);
        }
    }
    let mut span = CMat::from_columns(&cols);
    if bundle.null_frame.ncols() > 0 {
        let proj = CMat::identity(n, n) - &bundle.null_frame * bundle.null_frame.adjoint();
        for &s in &bundle.seminorm_slots {
            let blk = &proj * span.rows(s, n);
            span.rows_mut(s, n).copy_from(&blk);
        }
    }
    let rank = linalg::rank(&span, 1e-9);
    cert = cert.with_note("span_rank", rank as f64);
    let residual_dim = match bundle.construction {
        Construction::BlockMin => Some(n - bundle.null_frame.ncols()),
        Construction::Nagy => bundle.representation.as_ref().map(|a| linalg::rank(a.entries(), 1e-9)),
        Construction::RowForm => None,
    };
    if let Some(rd) = residual_dim {
        let expected = n + kmax * rd;
        cert = cert.with_note("expected_rank", expected as f64);
        if rank != expected && cert.verdict == Verdict::Pass {
            cert.verdict = Verdict::Fail;
            cert.value = (rank as f64 - expected as f64).abs();
        }
    }
    Ok(cert)
}

/// A linear `A : X -> l_2(X)` (truncated) with `|Ax| = A_T(x)` when one is
/// known in closed form: `T = 0`, Hilbert spaces, and block-scalar monomial
/// operators on lattices (including diagonals constant in modulus on each
/// non-Hilbert leaf).
pub fn defect_representation(t: &Operator) -> Result<Option<Operator>> {
    if !t.is_square() {
        return Ok(None);
    }
    let x = t.domain().clone();
    let n = x.dim();
    let target = Space::block_seq(x.clone(), 1)?;
    if t.entries().iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(Some(Operator::new(CMat::identity(n, n), x, target)?));
    }
    if let Some(s) = x.hilbert_scaling() {
        let sm = CMat::from_fn(n, n, |i, j| if i == j { C64::new(s[i] * s[i], 0.0) } else { C64::new(0.0, 0.0) });
        let h = &sm - t.entries().adjoint() * &sm * t.entries();
        let root = linalg::hermitian_sqrt(&h, 1e-9)?;
        let a = CMat::from_fn(n, n, |i, j| root[(i, j)] / s[i]);
        return Ok(Some(Operator::new(a, x, target)?));
    }
    if let Some(mu) = block_monomial_coeffs(t) {
        if mu.iter().any(|c| c.norm() > 1.0 + 1e-12) {
            return Err(Error::NotContraction("block coefficient above one".into()));
        }
        let d = n / mu.len();
        let vals: Vec<C64> = (0..n).map(|i| C64::new((1.0 - mu[i / d].norm_sqr()).max(0.0).sqrt(), 0.0)).collect();
        return Ok(Some(Operator::new(CMat::from_diagonal(&CVec::from_vec(vals)), x, target)?));
    }
    if let Some(mu) = lattice_diagonal_defect(t) {
        return Ok(Some(Operator::new(CMat::from_diagonal(&CVec::from_vec(mu)), x, target)?));
    }
    Ok(None)
}

/// Diagonal `T` on a 2-sum of `l_p` leaves: coordinatewise `sqrt(1 - |l_i|^2)`
/// on Hilbert leaves, a leaf constant when `|l_i|` is constant on a
/// non-Hilbert leaf.
fn lattice_diagonal_defect(t: &Operator) -> Option<Vec<C64>> {
    let x = t.domain();
    let m = t.entries();
    let n = x.dim();
    if !x.is_lattice() || (0..n).any(|j| (0..n).any(|i| i != j && m[(i, j)] != C64::new(0.0, 0.0))) {
        return None;
    }
    let mut mu = vec![C64::new(0.0, 0.0); n];
    for (off, leaf) in x.leaves() {
        let (p, _) = leaf.as_lp()?;
        let len = leaf.dim();
        let mods: Vec<f64> = (off..off + len).map(|i| m[(i, i)].norm()).collect();
        if mods.iter().any(|&v| v > 1.0 + 1e-12) {
            return None;
        }
        let constant = mods.iter().all(|&v| (v - mods[0]).abs() <= 1e-14);
        if p.get() != 2.0 && !constant && len > 1 {
            return None;
        }
        for (k, v) in mods.iter().enumerate() {
            mu[off + k] = C64::new((1.0 - v * v).max(0.0).sqrt(), 0.0);
        }
    }
    Some(mu)
}

/// `W x = (D_T x, D_T T x, ..., D_T T^(depth-1) x)` into `l_2(X)` truncated
/// to `depth` blocks; it intertwines the backward shift with `T` on blocks
/// `0..depth-1`.
pub fn nagy_backward_intertwiner(t: &Operator, depth: usize) -> Result<Operator> {
    let x = t.domain().clone();
    if !x.is_hilbert() || !t.is_square() {
        return Err(Error::Refused("the intertwiner needs a Hilbert space operator".into()));
    }
    let est = operator_norm(t, 4, 0);
    if est.value >= 1.0 {
        return Err(Error::NotContraction(format!("|T| = {} is not below one", est.value)));
    }
    let d = defect_representation(t)?.expect("Hilbert spaces always have D_T");
    let n = x.dim();
    let k = Space::block_seq(x.clone(), depth)?;
    let mut w = CMat::zeros(k.dim(), n);
    let mut tj = CMat::identity(n, n);
    for j in 0..depth {
        let blk = d.entries() * &tj;
        w.view_mut((j * n, 0), (n, n)).copy_from(&blk);
        tj = t.entries() * tj;
    }
    Operator::new(w, x, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::spaces::real_vec;

    fn case1() -> Operator {
        let s = Space::lpf(2, 1.5).unwrap();
        let l = 0.7;
        let m = CMat::from_row_slice(2, 2, &[c64(l, 0.0), c64(-l, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        Operator::on(s, m).unwrap()
    }

    #[test]
    fn case_one_violation_values() {
        let t = case1();
        let e1 = basis_vec(2, 0);
        let e2 = basis_vec(2, 1);
        let lhs = a_t(&t, &e1).unwrap() + a_t(&t, &e2).unwrap();
        assert!((lhs - 2.0 * 0.51f64.sqrt()).abs() < 1e-12);
        assert!((a_t(&t, &(&e1 + &e2)).unwrap() - 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
        let c = triangle_violation_search(&t, SearchBudget::default(), 1, &[]).unwrap();
        assert_eq!(c.verdict, Verdict::Violation);
        assert!((c.margin - (2.0 * 0.51f64.sqrt() - 2f64.powf(2.0 / 3.0))).abs() < 1e-9);
        assert!(c.search_min <= c.margin + 1e-12);
    }

    #[test]
    fn window_for_three_halves() {
        let (lo, hi) = lambda_window(1.5).unwrap();
        // 4^(2/3) = 2^(4/3); the lower end is sqrt(1 - 2^(-2/3)).
        let lo_oracle = (1.0 - 2f64.powf(-2.0 / 3.0)).sqrt();
        assert!((lo - lo_oracle).abs() < 1e-14);
        assert!((lo - 0.608309).abs() < 1e-6 && (hi - 0.793701).abs() < 1e-6);
        assert!(lo < 0.7 && 0.7 < hi);
    }

    #[test]
    fn hilbert_defect_is_diagonal_root() {
        let s = Space::lpf(2, 2.0).unwrap();
        let t = Operator::diagonal(s, vec![c64(0.6, 0.0), c64(0.8, 0.0)]).unwrap();
        let a = defect_representation(&t).unwrap().unwrap();
        let want = CMat::from_diagonal(&real_vec(&[0.8, 0.6]));
        assert!(linalg::max_abs(&(a.entries() - want)) < 1e-12);
    }

    #[test]
    fn min_dilation_of_zero_is_a_shift() {
        let s = Space::lpf(2, 2.0).unwrap();
        let t = Operator::zero(s.clone(), s);
        let c = triangle_violation_search(&t, SearchBudget::default(), 0, &[]).unwrap();
        assert_eq!(c.verdict, Verdict::Norm);
        let b = build_min_dilation(&t, &c, 5).unwrap();
        for k in 1..4 {
            let pk = b.p.entries() * b.vk_w(k);
            assert!(linalg::max_abs(&pk) == 0.0);
        }
        let cert = verify_dilation(&b, 3, 1e-12, 20, 0).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass, "{cert:?}");
    }

    #[test]
    fn intertwiner_defect_is_geometric() {
        let s = Space::lpf(1, 2.0).unwrap();
        let t = Operator::diagonal(s, vec![c64(0.5, 0.0)]).unwrap();
        let w = nagy_backward_intertwiner(&t, 20).unwrap();
        let x = real_vec(&[1.0]);
        let nw = w.codomain().norm(&w.apply(&x).unwrap()).unwrap();
        assert!((nw - 1.0).abs() <= 0.5f64.powi(20));
    }
}
