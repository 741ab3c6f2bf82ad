//! Dense operators between spaces, norm estimation, `A_T`, contraction
//! classes, norm attainment sets, Banach adjoints and left inverses of
//! structured isometries.

use crate::certificate::{Certificate, Verdict};
use crate::dilation::DilationBundle;
use crate::error::{check_len, Error, Result};
use crate::functionals;
use crate::linalg::{self, lex_cmp, phase_normalize};
use crate::optim::{lbfgs, pack, pack_into, unpack, LbfgsOptions};
use crate::serde_util::{c64_list, cvec, MatrixRepr};
use crate::spaces::{basis_vec, rng, Space};
use crate::subspace::Subspace;
use crate::{CMat, CVec, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Structural description of an operator; when present it must reproduce the
/// entries to `1e-14`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Annotation {
    /// Diagonal operator on a square space.
    Diagonal {
        #[serde(with = "c64_list")]
        values: Vec<C64>,
    },
    /// Forward (`M_z`) or backward shift on a block sequence with `blocks`
    /// blocks of dimension `base_dim`.
    ShiftBlock { base_dim: usize, blocks: usize, backward: bool },
    /// Bilateral shift (or its inverse) on a two-sided block sequence.
    BilateralShift { base_dim: usize, halfwidth: usize, inverse: bool },
    /// `z -> scale * (sum_i functional_i z_i) * vector`.
    RankOne {
        #[serde(with = "cvec")]
        functional: CVec,
        #[serde(with = "cvec")]
        vector: CVec,
        #[serde(with = "crate::serde_util::c64_pair")]
        scale: C64,
    },
    /// `e_j -> phases[j] e_{perm[j]}` with `perm` a permutation.
    PermutationPhase {
        perm: Vec<usize>,
        #[serde(with = "c64_list")]
        phases: Vec<C64>,
    },
    /// `e_j -> coeffs[j] e_{targets[j]}`, or `0` when the target is absent.
    Monomial {
        targets: Vec<Option<usize>>,
        #[serde(with = "c64_list")]
        coeffs: Vec<C64>,
    },
}

/// Column-monomial map: column `j` has at most one nonzero entry.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialMap {
    pub targets: Vec<Option<usize>>,
    pub coeffs: Vec<C64>,
}

impl MonomialMap {
    pub fn is_injective(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.targets.iter().flatten().all(|t| seen.insert(*t))
    }

    /// Preimage of each row index.
    pub fn preimages(&self, rows: usize) -> Vec<Option<usize>> {
        let mut pre = vec![None; rows];
        for (j, t) in self.targets.iter().enumerate() {
            if let Some(t) = t {
                pre[*t] = Some(j);
            }
        }
        pre
    }
}

impl Annotation {
    fn build(&self, rows: usize, cols: usize) -> Result<CMat> {
        let mut m = CMat::zeros(rows, cols);
        let one = C64::new(1.0, 0.0);
        match self {
            Annotation::RankOne { functional, vector, scale } => {
                check_len(cols, functional.len())?;
                check_len(rows, vector.len())?;
                m = vector * functional.transpose() * *scale;
            }
            Annotation::ShiftBlock { base_dim, blocks, backward } => {
                check_len(rows, base_dim * blocks)?;
                check_len(cols, base_dim * blocks)?;
                for b in 0..blocks.saturating_sub(1) {
                    for i in 0..*base_dim {
                        let (r, c) = if *backward {
                            (b * base_dim + i, (b + 1) * base_dim + i)
                        } else {
                            ((b + 1) * base_dim + i, b * base_dim + i)
                        };
                        m[(r, c)] = one;
                    }
                }
            }
            Annotation::BilateralShift { base_dim, halfwidth, inverse } => {
                let slots = 2 * halfwidth + 1;
                check_len(rows, base_dim * slots)?;
                check_len(cols, base_dim * slots)?;
                for s in 0..slots - 1 {
                    for i in 0..*base_dim {
                        let (r, c) = if *inverse {
                            (s * base_dim + i, (s + 1) * base_dim + i)
                        } else {
                            ((s + 1) * base_dim + i, s * base_dim + i)
                        };
                        m[(r, c)] = one;
                    }
                }
            }
            other => {
                let mono = other.as_monomial().expect("monomial kinds");
                check_len(cols, mono.targets.len())?;
                for (j, t) in mono.targets.iter().enumerate() {
                    if let Some(t) = t {
                        if *t >= rows {
                            return Err(Error::Annotation(format!("target {t} outside {rows} rows")));
                        }
                        m[(*t, j)] = mono.coeffs[j];
                    }
                }
            }
        }
        Ok(m)
    }

    /// Column-monomial view of the annotation, when it has one.
    pub fn as_monomial(&self) -> Option<MonomialMap> {
        match self {
            Annotation::Diagonal { values } => Some(MonomialMap {
                targets: (0..values.len()).map(Some).collect(),
                coeffs: values.clone(),
            }),
            Annotation::PermutationPhase { perm, phases } => Some(MonomialMap {
                targets: perm.iter().map(|&p| Some(p)).collect(),
                coeffs: phases.clone(),
            }),
            Annotation::Monomial { targets, coeffs } => {
                Some(MonomialMap { targets: targets.clone(), coeffs: coeffs.clone() })
            }
            Annotation::ShiftBlock { base_dim, blocks, backward } => {
                let n = base_dim * blocks;
                let targets = (0..n)
                    .map(|j| {
                        let b = j / base_dim;
                        if *backward {
                            (b > 0).then(|| j - base_dim)
                        } else {
                            (b + 1 < *blocks).then(|| j + base_dim)
                        }
                    })
                    .collect();
                Some(MonomialMap { targets, coeffs: vec![C64::new(1.0, 0.0); n] })
            }
            Annotation::BilateralShift { base_dim, halfwidth, inverse } => {
                let slots = 2 * halfwidth + 1;
                let n = base_dim * slots;
                let targets = (0..n)
                    .map(|j| {
                        let s = j / base_dim;
                        if *inverse {
                            (s > 0).then(|| j - base_dim)
                        } else {
                            (s + 1 < slots).then(|| j + base_dim)
                        }
                    })
                    .collect();
                Some(MonomialMap { targets, coeffs: vec![C64::new(1.0, 0.0); n] })
            }
            Annotation::RankOne { .. } => None,
        }
    }
}

/// A dense complex matrix acting between two spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    entries: CMat,
    domain: Space,
    codomain: Space,
    annotation: Option<Annotation>,
    model_norm: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    domain: Space,
    codomain: Space,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotation: Option<Annotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model_norm: Option<f64>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = MatrixRepr::from(&self.entries);
        OperatorRepr {
            rows: m.rows,
            cols: m.cols,
            re: m.re,
            im: m.im,
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            annotation: self.annotation.clone(),
            model_norm: self.model_norm,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = OperatorRepr::deserialize(d)?;
        let m = MatrixRepr { rows: r.rows, cols: r.cols, re: r.re, im: r.im }
            .to_matrix()
            .map_err(D::Error::custom)?;
        let mut op = Operator::new(m, r.domain, r.codomain).map_err(D::Error::custom)?;
        if let Some(a) = r.annotation {
            op = op.with_annotation(a).map_err(D::Error::custom)?;
        }
        op.model_norm = r.model_norm;
        Ok(op)
    }
}

impl Operator {
    pub fn new(entries: CMat, domain: Space, codomain: Space) -> Result<Operator> {
        check_len(domain.dim(), entries.ncols())?;
        check_len(codomain.dim(), entries.nrows())?;
        Ok(Operator { entries, domain, codomain, annotation: None, model_norm: None })
    }

    /// Square operator on one space.
    pub fn on(space: Space, entries: CMat) -> Result<Operator> {
        Operator::new(entries, space.clone(), space)
    }

    pub fn from_annotation(domain: Space, codomain: Space, annotation: Annotation) -> Result<Operator> {
        let m = annotation.build(codomain.dim(), domain.dim())?;
        Ok(Operator { entries: m, domain, codomain, annotation: Some(annotation), model_norm: None })
    }

    pub fn identity(space: Space) -> Operator {
        let n = space.dim();
        Operator::from_annotation(
            space.clone(),
            space,
            Annotation::Diagonal { values: vec![C64::new(1.0, 0.0); n] },
        )
        .expect("identity shape")
    }

    pub fn zero(domain: Space, codomain: Space) -> Operator {
        let m = CMat::zeros(codomain.dim(), domain.dim());
        Operator { entries: m, domain, codomain, annotation: None, model_norm: None }
    }

    pub fn diagonal(space: Space, values: Vec<C64>) -> Result<Operator> {
        Operator::from_annotation(space.clone(), space, Annotation::Diagonal { values })
    }

    /// Attach an annotation after checking it reproduces the entries.
    pub fn with_annotation(mut self, a: Annotation) -> Result<Operator> {
        let m = a.build(self.entries.nrows(), self.entries.ncols())?;
        let diff = linalg::max_abs(&(&m - &self.entries));
        if diff > 1e-14 {
            return Err(Error::Annotation(format!("max entry difference {diff:.3e}")));
        }
        self.annotation = Some(a);
        Ok(self)
    }

    /// Record the norm of the infinite operator this matrix truncates. Only
    /// used to expose the class G1, which finite matrices cannot reach.
    pub fn with_model_norm(mut self, norm: f64) -> Operator {
        self.model_norm = Some(norm);
        self
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn annotation(&self) -> Option<&Annotation> {
        self.annotation.as_ref()
    }

    pub fn model_norm(&self) -> Option<f64> {
        self.model_norm
    }

    pub fn is_square(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        check_len(self.domain.dim(), x.len())?;
        Ok(&self.entries * x)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        if other.codomain != self.domain {
            return Err(Error::InvalidSpace("composition of operators with mismatched spaces".into()));
        }
        Operator::new(&self.entries * &other.entries, other.domain.clone(), self.codomain.clone())
    }

    pub fn pow(&self, k: usize) -> Result<Operator> {
        if !self.is_square() {
            return Err(Error::InvalidSpace("powers need a square operator".into()));
        }
        let mut m = CMat::identity(self.entries.nrows(), self.entries.ncols());
        for _ in 0..k {
            m = &self.entries * m;
        }
        Operator::new(m, self.domain.clone(), self.codomain.clone())
    }

    pub fn scaled(&self, s: C64) -> Operator {
        Operator {
            entries: self.entries.map(|z| z * s),
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            annotation: None,
            model_norm: self.model_norm.map(|m| m * s.norm()),
        }
    }

    /// Column-monomial structure read off the annotation.
    pub fn monomial(&self) -> Option<MonomialMap> {
        self.annotation.as_ref().and_then(Annotation::as_monomial)
    }

    /// Column-monomial structure read off the entries.
    pub fn monomial_from_entries(&self) -> Option<MonomialMap> {
        let m = &self.entries;
        let mut targets = Vec::with_capacity(m.ncols());
        let mut coeffs = Vec::with_capacity(m.ncols());
        for j in 0..m.ncols() {
            let mut t = None;
            let mut c = C64::new(0.0, 0.0);
            for i in 0..m.nrows() {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    if t.is_some() {
                        return None;
                    }
                    t = Some(i);
                    c = m[(i, j)];
                }
            }
            targets.push(t);
            coeffs.push(c);
        }
        Some(MonomialMap { targets, coeffs })
    }
}

/// Result of an operator-norm computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// True when a closed form was used; otherwise `value` is a lower bound
    /// attained by `witness`.
    pub exact: bool,
    #[serde(with = "cvec")]
    pub witness: CVec,
}

fn unit(space: &Space, v: CVec) -> CVec {
    let n = space.norm_slice(v.as_slice());
    if n > 0.0 {
        v.unscale(n)
    } else {
        v
    }
}

fn ratio(t: &Operator, x: &CVec) -> f64 {
    let nx = t.domain.norm_slice(x.as_slice());
    if nx == 0.0 {
        return 0.0;
    }
    t.codomain.norm_slice((&t.entries * x).as_slice()) / nx
}

fn hilbert_norm(t: &Operator) -> Option<(f64, CVec, CMat, Vec<f64>)> {
    let sd = t.domain.hilbert_scaling()?;
    let sc = t.codomain.hilbert_scaling()?;
    let m = CMat::from_fn(t.entries.nrows(), t.entries.ncols(), |i, j| t.entries[(i, j)] * (sc[i] / sd[j]));
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (k, top) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let svals: Vec<f64> = svd.singular_values.iter().copied().collect();
    let w = CVec::from_fn(t.entries.ncols(), |j, _| vt[(k, j)].conj() / sd[j]);
    Some((top.max(0.0), w, vt, svals))
}

/// Block-monomial structure on a block sequence: every block column maps to
/// at most one block row by a scalar multiple of the identity.
fn block_monomial(t: &Operator) -> Option<Vec<(usize, Option<usize>, C64)>> {
    if !t.is_square() {
        return None;
    }
    let (base, lo, hi) = t.domain.block_layout()?;
    let d = base.dim();
    let nb = (hi - lo + 1) as usize;
    let m = &t.entries;
    let mut out = Vec::with_capacity(nb);
    let mut used = vec![false; nb];
    for bc in 0..nb {
        let mut hit: Option<(usize, C64)> = None;
        for br in 0..nb {
            let blk = m.view((br * d, bc * d), (d, d));
            if blk.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            if hit.is_some() {
                return None;
            }
            let c = blk[(0, 0)];
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j { c } else { C64::new(0.0, 0.0) };
                    if blk[(i, j)] != want {
                        return None;
                    }
                }
            }
            hit = Some((br, c));
        }
        match hit {
            Some((br, c)) => {
                if used[br] {
                    return None;
                }
                used[br] = true;
                out.push((bc, Some(br), c));
            }
            None => out.push((bc, None, C64::new(0.0, 0.0))),
        }
    }
    Some(out)
}

/// Coefficient of each domain block of a block-monomial operator (zero for
/// blocks sent to zero).
pub(crate) fn block_monomial_coeffs(t: &Operator) -> Option<Vec<C64>> {
    block_monomial(t).map(|bm| bm.into_iter().map(|(_, _, c)| c).collect())
}

/// Closed-form operator norms. Returns `(value, unit witness)`.
fn exact_norm(t: &Operator) -> Option<(f64, CVec)> {
    let n = t.entries.ncols();
    if n == 0 {
        return None;
    }
    if t.entries.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Some((0.0, unit(&t.domain, basis_vec(n, 0))));
    }
    if let Some((v, w, _, _)) = hilbert_norm(t) {
        return Some((v, unit(&t.domain, w)));
    }
    // Diagonal on a lattice.
    if t.is_square() && t.domain.is_lattice() {
        let diag = (0..n).all(|j| (0..n).all(|i| i == j || t.entries[(i, j)] == C64::new(0.0, 0.0)));
        if diag {
            let (k, v) = (0..n)
                .map(|i| (i, t.entries[(i, i)].norm()))
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            return Some((v, unit(&t.domain, basis_vec(n, k))));
        }
    }
    // l_1 domain: extreme points are the scaled coordinate vectors.
    if let Some((p, w)) = t.domain.as_lp() {
        if p.get() == 1.0 {
            let (k, v) = (0..n)
                .map(|j| {
                    let col = t.entries.column(j).into_owned();
                    (j, t.codomain.norm_slice(col.as_slice()) / w[j])
                })
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            return Some((v, unit(&t.domain, basis_vec(n, k))));
        }
    }
    // l_inf codomain: maximum over rows of the dual norm of the row.
    if let (Some((pc, wc)), Ok(dual)) = (t.codomain.as_lp(), t.domain.dual()) {
        if pc.is_infinite() {
            let mut best = (0usize, -1.0);
            for (i, w) in wc.iter().enumerate() {
                let row = t.entries.row(i).transpose();
                let v = w * dual.norm_slice(row.as_slice());
                if v > best.1 {
                    best = (i, v);
                }
            }
            let row = t.entries.row(best.0).transpose();
            let w = functionals::attainment_coeffs(&t.domain, &row).ok()?;
            return Some((best.1, w));
        }
    }
    // Injective column-monomial between single l_p spaces of equal exponent.
    if let (Some((pd, wd)), Some((pc, wc)), Some(mono)) =
        (t.domain.as_lp(), t.codomain.as_lp(), t.monomial_from_entries())
    {
        if pd == pc && mono.is_injective() {
            let mut best = (0usize, 0.0);
            for (j, tg) in mono.targets.iter().enumerate() {
                if let Some(i) = tg {
                    let ratio = if pd.is_infinite() { wc[*i] / wd[j] } else { (wc[*i] / wd[j]).powf(1.0 / pd.get()) };
                    let v = mono.coeffs[j].norm() * ratio;
                    if v > best.1 {
                        best = (j, v);
                    }
                }
            }
            return Some((best.1, unit(&t.domain, basis_vec(n, best.0))));
        }
    }
    // Block-monomial on a block sequence.
    if let Some(bm) = block_monomial(t) {
        let (base, lo, _) = t.domain.block_layout()?;
        let (bc, _, c) = bm.iter().copied().fold((0, None, C64::new(0.0, 0.0)), |a, b| {
            if b.2.norm() > a.2.norm() {
                b
            } else {
                a
            }
        });
        let x = base.random_unit(0);
        let w = t.domain.embed_block(bc as i64 + lo, &x).ok()?;
        return Some((c.norm(), w));
    }
    None
}

fn ascent_run(t: &Operator, x0: CVec, iters: usize) -> (f64, CVec) {
    let n = x0.len();
    let opts = LbfgsOptions { max_iter: iters, rel_tol: 1e-13, memory: 10 };
    let dom = &t.domain;
    let cod = &t.codomain;
    let m = &t.entries;
    let mh = m.adjoint();
    let res = lbfgs(
        |z, g| {
            let x = unpack(z);
            let nx = dom.norm_slice(x.as_slice());
            if nx == 0.0 {
                g.iter_mut().for_each(|v| *v = 0.0);
                return 0.0;
            }
            let tx = m * &x;
            let ntx = cod.norm_slice(tx.as_slice());
            let gx = dom.norm_grad(&x).expect("shape");
            let gtx = cod.norm_grad(&tx).expect("shape");
            // f = -|Tx| / |x|
            let grad = (&mh * gtx).unscale(nx) - gx.scale(ntx / (nx * nx));
            pack_into(&(-grad), g);
            -ntx / nx
        },
        pack(&x0),
        opts,
    );
    let x = unpack(&res.x);
    let x = if x.len() == n { x } else { x0 };
    (ratio(t, &x), unit(dom, x))
}

/// Operator norm: closed forms where available, otherwise multi-start ascent
/// of `|Tx|` on the unit sphere (a lower bound, flagged inexact).
pub fn operator_norm(t: &Operator, restarts: usize, seed: u64) -> NormEstimate {
    if let Some((value, witness)) = exact_norm(t) {
        return NormEstimate { value, exact: true, witness };
    }
    let n = t.entries.ncols();
    let mut starts: Vec<CVec> = Vec::new();
    // Best coordinate vector and the Euclidean top singular vector.
    let best_col = (0..n)
        .map(|j| (j, ratio(t, &basis_vec(n, j))))
        .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
    starts.push(basis_vec(n, best_col.0));
    let svd = t.entries.clone().svd(false, true);
    if let Some(vt) = svd.v_t {
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, -1.0), |a, (i, &s)| if s > a.1 { (i, s) } else { a })
            .0;
        starts.push(CVec::from_fn(n, |j, _| vt[(k, j)].conj()));
    }
    for r in 0..restarts {
        starts.push(t.domain.random_unit(seed.wrapping_mul(1_000_003).wrapping_add(r as u64)));
    }
    let runs: Vec<(f64, CVec)> = starts.into_par_iter().map(|x0| ascent_run(t, x0, 400)).collect();
    let mut best = runs[0].clone();
    for r in runs.into_iter().skip(1) {
        if r.0 > best.0 {
            best = r;
        }
    }
    NormEstimate { value: best.0, exact: false, witness: phase_normalize(&best.1) }
}

/// Default restart count for norm estimates.
pub const DEFAULT_RESTARTS: usize = 16;

/// `A_T(x)` together with the raw radicand.
#[derive(Clone, Copy, Debug)]
pub struct DefectValue {
    pub value: f64,
    pub radicand: f64,
    pub clamped: bool,
}

pub fn a_t_detailed(t: &Operator, x: &CVec) -> Result<DefectValue> {
    check_len(t.domain.dim(), x.len())?;
    let nx = t.domain.norm_slice(x.as_slice());
    let ntx = t.codomain.norm_slice((&t.entries * x).as_slice());
    let rad = nx * nx - ntx * ntx;
    if rad < -1e-9 * (nx * nx).max(f64::MIN_POSITIVE) {
        return Err(Error::NotContraction(format!("|x|^2 - |Tx|^2 = {rad:.3e}")));
    }
    Ok(DefectValue { value: rad.max(0.0).sqrt(), radicand: rad, clamped: rad < 0.0 })
}

/// `A_T(x) = (|x|^2 - |Tx|^2)^(1/2)`.
pub fn a_t(t: &Operator, x: &CVec) -> Result<f64> {
    Ok(a_t_detailed(t, x)?.value)
}

/// `Â_T(x) = (|T|^2 |x|^2 - |Tx|^2)^(1/2)` given `|T|`.
pub fn a_hat_t(t: &Operator, norm_t: f64, x: &CVec) -> Result<f64> {
    check_len(t.domain.dim(), x.len())?;
    if norm_t == 0.0 {
        return Err(Error::Refused("Â_T needs T != 0".into()));
    }
    let nx = t.domain.norm_slice(x.as_slice());
    let ntx = t.codomain.norm_slice((&t.entries * x).as_slice());
    let rad = norm_t * norm_t * nx * nx - ntx * ntx;
    if rad < -1e-9 * (norm_t * nx).powi(2).max(f64::MIN_POSITIVE) {
        return Err(Error::Inconsistent(format!("|T| = {norm_t} is below |Tx|/|x|")));
    }
    Ok(rad.max(0.0).sqrt())
}

/// Contraction class with its certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Classification {
    pub class: Verdict,
    pub norm: NormEstimate,
    pub certificate: Certificate,
}

/// Classify `T` as strict, G1, G2 or not a contraction.
pub fn classify_contraction(t: &Operator, seed: u64) -> Classification {
    let est = operator_norm(t, 32, seed);
    let mut cert = Certificate::new(Verdict::Strict, est.value, seed, 32)
        .with_note("exact", if est.exact { 1.0 } else { 0.0 });
    let class = if est.value > 1.0 + 1e-9 {
        Verdict::NotContraction
    } else if est.value >= 1.0 - 1e-9 {
        Verdict::G2
    } else {
        match t.model_norm {
            Some(m) if m >= 1.0 - 1e-9 && est.value < 1.0 - 1e-6 => {
                cert = cert.with_note("model_norm", m);
                Verdict::G1
            }
            _ => Verdict::Strict,
        }
    };
    cert.verdict = class;
    if class != Verdict::Strict {
        cert = cert.with_witness(est.witness.clone());
    }
    Classification { class, norm: est, certificate: cert }
}

/// Norm attainment data.
#[derive(Clone, Debug)]
pub struct AttainmentSet {
    pub norm: NormEstimate,
    /// Distinct unit maximizers, phase-normalized and lexicographically sorted.
    pub witnesses: Vec<CVec>,
    /// Span of the witnesses.
    pub span: Subspace,
    /// False when a sampled unit vector of the span fails to attain the norm.
    pub is_subspace: bool,
    /// A unit vector of the span that does not attain, when one was found.
    pub closure_witness: Option<CVec>,
    /// Kernel of `(I - P) V W` for a dilation of `T/|T|`, when supplied.
    pub kernel: Option<Subspace>,
}

fn dedupe(space: &Space, mut ws: Vec<CVec>) -> Vec<CVec> {
    let mut out: Vec<CVec> = Vec::new();
    for w in ws.drain(..) {
        let w = phase_normalize(&unit(space, w));
        if !out.iter().any(|o| (o - &w).norm() < 1e-6) {
            out.push(w);
        }
    }
    out.sort_by(lex_cmp);
    out
}

/// Gather maximizers of `|Tx|` on the unit sphere and decide whether they form
/// the unit sphere of a subspace. With a dilation bundle of `T/|T|` the exact
/// attainment set is also computed as a kernel and compared.
pub fn norm_attainment_set(t: &Operator, seed: u64, bundle: Option<&DilationBundle>) -> Result<AttainmentSet> {
    let est = operator_norm(t, 32, seed);
    let nt = est.value;
    let n = t.entries.ncols();
    let mut exact_witnesses = true;
    let candidates: Vec<CVec> = if nt == 0.0 {
        (0..n).map(|j| basis_vec(n, j)).collect()
    } else if let Some((_, _, vt, svals)) = hilbert_norm(t) {
        let sd = t.domain.hilbert_scaling().expect("hilbert");
        (0..svals.len())
            .filter(|&k| svals[k] >= nt * (1.0 - 1e-12))
            .map(|k| CVec::from_fn(n, |j, _| vt[(k, j)].conj() / sd[j]))
            .collect()
    } else if matches!(t.domain.as_lp(), Some((p, _)) if p.get() == 1.0) {
        (0..n).map(|j| basis_vec(n, j)).filter(|e| ratio(t, e) >= nt * (1.0 - 1e-12)).collect()
    } else if let (true, Some(mono)) = (
        t.domain.is_lattice() && t.domain.leaves().iter().all(|(_, l)| !l.as_lp().is_some_and(|(p, _)| p.is_infinite())),
        t.monomial_from_entries().filter(|m| m.is_injective() && t.is_square()),
    ) {
        let _ = mono;
        (0..n).map(|j| basis_vec(n, j)).filter(|e| ratio(t, e) >= nt * (1.0 - 1e-12)).collect()
    } else {
        exact_witnesses = false;
        let starts: Vec<CVec> = (0..32).map(|r| t.domain.random_unit(seed.wrapping_add(7919 * r as u64))).collect();
        let mut found: Vec<CVec> = starts
            .into_par_iter()
            .map(|x0| ascent_run(t, x0, 600))
            .filter(|(v, _)| *v >= nt * (1.0 - 1e-9))
            .map(|(_, x)| x)
            .collect();
        found.push(est.witness.clone());
        found
    };
    let witnesses = dedupe(&t.domain, candidates);
    let span = Subspace::span_of(
        t.domain.clone(),
        &CMat::from_columns(&witnesses),
        if exact_witnesses { 1e-9 } else { 1e-6 },
    )?;
    let mut is_subspace = true;
    let mut closure_witness = None;
    if nt > 0.0 && span.dim() > 1 {
        let mut r = rng(seed ^ 0x5eed);
        for _ in 0..64 {
            let x = span.random_unit_with(&mut r).expect("nonzero span");
            if ratio(t, &x) < nt * (1.0 - 1e-7) {
                is_subspace = false;
                closure_witness = Some(x);
                break;
            }
        }
        // The midpoint of two attaining coordinates is the classical test case.
        if is_subspace && witnesses.len() >= 2 {
            let x = unit(&t.domain, &witnesses[0] + &witnesses[1]);
            if ratio(t, &x) < nt * (1.0 - 1e-7) {
                is_subspace = false;
                closure_witness = Some(x);
            }
        }
    }
    let kernel = match bundle {
        None => None,
        Some(b) => {
            let k = crate::decomposition::isometry_subspace(b, 1)?;
            let tol = if exact_witnesses { 1e-8 } else { 1e-6 };
            for w in &witnesses {
                let off = k.relative_offset(w);
                if off > tol {
                    return Err(Error::Inconsistent(format!(
                        "attainment witness lies {off:.2e} away from ker((I-P)VW)"
                    )));
                }
            }
            Some(k)
        }
    };
    Ok(AttainmentSet { norm: est, witnesses, span, is_subspace, closure_witness, kernel })
}

/// Banach adjoint: transpose acting on dual coefficients.
pub fn banach_adjoint(t: &Operator) -> Result<Operator> {
    Operator::new(t.entries.transpose(), t.codomain.dual()?, t.domain.dual()?)
}

/// Wold structure of an injective monomial isometry restricted to a
/// coordinate set: cycles carry the unitary part, chains the shift part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WoldStructure {
    pub cycles: Vec<Vec<usize>>,
    /// Each chain starts at a wandering coordinate.
    pub chains: Vec<Vec<usize>>,
}

impl WoldStructure {
    pub fn unitary_coords(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cycles.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn shift_coords(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.chains.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn wandering_coords(&self) -> Vec<usize> {
        self.chains.iter().map(|c| c[0]).collect()
    }
}

/// Split `coords` under the monomial map into chains and cycles. Edges that
/// leave `coords` end a chain (truncation leak).
pub fn wold_structure(map: &MonomialMap, coords: &[usize]) -> WoldStructure {
    let inside: std::collections::BTreeSet<usize> = coords.iter().copied().collect();
    let next = |j: usize| map.targets[j].filter(|t| inside.contains(t));
    let mut has_pre = std::collections::BTreeSet::new();
    for &j in &inside {
        if let Some(t) = next(j) {
            has_pre.insert(t);
        }
    }
    let mut visited = std::collections::BTreeSet::new();
    let mut chains = Vec::new();
    for &h in &inside {
        if has_pre.contains(&h) {
            continue;
        }
        let mut chain = vec![h];
        visited.insert(h);
        let mut cur = h;
        while let Some(t) = next(cur) {
            if !visited.insert(t) {
                break;
            }
            chain.push(t);
            cur = t;
        }
        chains.push(chain);
    }
    let mut cycles = Vec::new();
    for &s in &inside {
        if visited.contains(&s) {
            continue;
        }
        let mut cyc = vec![s];
        visited.insert(s);
        let mut cur = s;
        while let Some(t) = next(cur) {
            if !visited.insert(t) {
                break;
            }
            cyc.push(t);
            cur = t;
        }
        cycles.push(cyc);
    }
    WoldStructure { cycles, chains }
}

/// Left inverse of an annotated Wold isometry: the inverse on the unitary
/// part and the backward shift along each chain, zero on wandering
/// coordinates. The result has norm one and `TV = I` on boundary-safe vectors.
pub fn left_inverse(v: &Operator) -> Result<Operator> {
    let mono = v
        .monomial()
        .ok_or_else(|| Error::Refused("left inverse needs a shift-block, permutation-phase or monomial annotation".into()))?;
    if !v.is_square() {
        return Err(Error::Refused("left inverse needs a square isometry".into()));
    }
    if !v.domain.is_lattice() {
        return Err(Error::Refused(
            "range of the isometry is not known to be right-complemented outside l_p lattices".into(),
        ));
    }
    if !mono.is_injective() {
        return Err(Error::Refused("monomial map is not injective".into()));
    }
    if let Some(c) = mono.coeffs.iter().zip(&mono.targets).find(|(c, t)| t.is_some() && (c.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::Refused(format!("coefficient {} is not unimodular", c.0)));
    }
    let n = mono.targets.len();
    let mut targets = vec![None; n];
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (j, t) in mono.targets.iter().enumerate() {
        if let Some(t) = t {
            targets[*t] = Some(j);
            coeffs[*t] = C64::new(1.0, 0.0) / mono.coeffs[j];
        }
    }
    let a = Operator::from_annotation(
        v.domain.clone(),
        v.domain.clone(),
        Annotation::Monomial { targets, coeffs },
    )?;
    // TV = I on every coordinate that V keeps inside the window.
    let tv = &a.entries * &v.entries;
    for (j, t) in mono.targets.iter().enumerate() {
        if t.is_some() {
            let col = tv.column(j).into_owned();
            if (col - basis_vec(n, j)).norm() != 0.0 {
                return Err(Error::Inconsistent(format!("TV e_{j} != e_{j}")));
            }
        }
    }
    let nrm = operator_norm(&a, DEFAULT_RESTARTS, 0);
    if (nrm.value - 1.0).abs() > 1e-8 && nrm.value > 0.0 {
        return Err(Error::Inconsistent(format!("left inverse has norm {}", nrm.value)));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::spaces::real_vec;

    fn lp(n: usize, p: f64) -> Space {
        Space::lpf(n, p).unwrap()
    }

    #[test]
    fn diagonal_norm_is_exact() {
        let t = Operator::diagonal(lp(2, 3.0), vec![c64(0.5, 0.0), c64(0.25, 0.0)]).unwrap();
        let e = operator_norm(&t, 4, 0);
        assert!(e.exact);
        assert!((e.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn l1_column_rule() {
        let l = 0.3;
        let m = CMat::from_row_slice(2, 2, &[c64(l, 0.0), c64(-l, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let t = Operator::on(lp(2, 1.0), m).unwrap();
        let e = operator_norm(&t, 4, 0);
        assert!(e.exact && (e.value - l).abs() < 1e-15);
    }

    #[test]
    fn annotation_must_reproduce_entries() {
        let t = Operator::on(lp(2, 2.0), CMat::identity(2, 2)).unwrap();
        assert!(t.clone().with_annotation(Annotation::Diagonal { values: vec![c64(1.0, 0.0); 2] }).is_ok());
        assert!(t.with_annotation(Annotation::Diagonal { values: vec![c64(1.0, 0.0), c64(0.5, 0.0)] }).is_err());
    }

    #[test]
    fn a_t_examples() {
        let s = lp(2, 1.5);
        let z = Operator::zero(s.clone(), s.clone());
        let x = real_vec(&[0.3, -0.4]);
        assert!((a_t(&z, &x).unwrap() - s.norm(&x).unwrap()).abs() < 1e-15);
        let l = 0.7;
        let m = CMat::from_row_slice(2, 2, &[c64(l, 0.0), c64(-l, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let t = Operator::on(s, m).unwrap();
        assert!((a_t(&t, &real_vec(&[1.0, 0.0])).unwrap() - 0.51f64.sqrt()).abs() < 1e-12);
        let big = Operator::on(lp(1, 2.0), CMat::from_element(1, 1, c64(2.0, 0.0))).unwrap();
        assert!(matches!(a_t(&big, &real_vec(&[1.0])), Err(Error::NotContraction(_))));
    }

    #[test]
    fn wold_structure_of_gallery_like_map() {
        // 0 fixed, 1 -> 3 -> 5 (leaves), 2 -> 4.
        let map = MonomialMap {
            targets: vec![Some(0), Some(3), Some(4), Some(5), None, Some(7)],
            coeffs: vec![c64(1.0, 0.0); 6],
        };
        let w = wold_structure(&map, &[0, 1, 3, 5]);
        assert_eq!(w.cycles, vec![vec![0]]);
        assert_eq!(w.chains, vec![vec![1, 3, 5]]);
    }

    #[test]
    fn rank_one_annotation() {
        let f = real_vec(&[1.0, 0.0]);
        let y = real_vec(&[0.0, 1.0]);
        let t = Operator::from_annotation(
            lp(2, 3.0),
            lp(2, 3.0),
            Annotation::RankOne { functional: f, vector: y, scale: c64(0.99, 0.0) },
        )
        .unwrap();
        assert_eq!(t.entries()[(1, 0)], c64(0.99, 0.0));
        assert_eq!(t.entries()[(0, 1)], c64(0.0, 0.0));
    }
}
