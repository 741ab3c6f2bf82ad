//! Space descriptors, norm evaluation, norm subgradients, dual spaces, block
//! embeddings and seeded sampling on unit spheres.

use crate::error::{check_len, Error, Result};
use crate::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::sync::Arc;

/// Exponent `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidSpace(format!("exponent {p} is not in [1, inf]")));
        }
        Ok(Exponent(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// The exponent `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        if self.0 == 1.0 {
            Exponent::INF
        } else if self.0.is_infinite() {
            Exponent::ONE
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }

    /// True for `1 < p < inf`, where the unit sphere is smooth and strictly convex.
    pub fn is_smooth(self) -> bool {
        self.0 > 1.0 && self.0.is_finite()
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Str(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => f64::INFINITY,
                other => other.parse::<f64>().map_err(serde::de::Error::custom)?,
            },
        };
        Exponent::new(p).map_err(serde::de::Error::custom)
    }
}

/// The space `(X, A_T)`. Only the dilation module builds these, from a
/// certificate that `A_T` is a norm or a semi-norm.
#[derive(Clone, Debug)]
pub struct Renormed {
    base: Box<Space>,
    contraction: Arc<CMat>,
    certificate: String,
    positive: bool,
}

impl Renormed {
    pub fn base(&self) -> &Space {
        &self.base
    }

    pub fn contraction(&self) -> &CMat {
        &self.contraction
    }

    pub fn certificate_id(&self) -> &str {
        &self.certificate
    }

    /// True when the certificate asserted a norm; false for a semi-norm.
    pub fn is_positive(&self) -> bool {
        self.positive
    }

    fn tx(&self, v: &[C64]) -> Vec<C64> {
        let t = &*self.contraction;
        (0..t.nrows())
            .map(|i| (0..t.ncols()).map(|j| t[(i, j)] * v[j]).sum())
            .collect()
    }

    fn eval(&self, v: &[C64]) -> f64 {
        let nx = self.base.norm_slice(v);
        let ntx = self.base.norm_slice(&self.tx(v));
        (nx * nx - ntx * ntx).max(0.0).sqrt()
    }
}

impl PartialEq for Renormed {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
            && self.certificate == other.certificate
            && *self.contraction == *other.contraction
    }
}

/// A finite-dimensional normed space over C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub enum Space {
    /// Weighted `l_p^n`: `(sum w_i |x_i|^p)^(1/p)`, or `max w_i |x_i|` for `p = inf`.
    Lp { n: usize, p: Exponent, weights: Vec<f64> },
    /// 2-direct sum of the parts.
    DirectSum2 { parts: Vec<Space> },
    /// First `blocks` coordinates of `l_2(X)`.
    BlockSeq { base: Box<Space>, blocks: usize },
    /// Indices `-halfwidth..=halfwidth` of `l_2(Z, X)`; block `0` sits at slot `halfwidth`.
    BiBlockSeq { base: Box<Space>, halfwidth: usize },
    /// Polynomials of degree at most `degree` with the sup norm sampled on
    /// `gridsize` equispaced points of the unit circle.
    PolySup { degree: usize, gridsize: usize },
    /// `(X, A_T)`.
    Renormed(Renormed),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SpaceRepr {
    Lp {
        n: usize,
        p: Exponent,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    DirectSum2 {
        parts: Vec<SpaceRepr>,
    },
    BlockSeq {
        base: Box<SpaceRepr>,
        blocks: usize,
    },
    BiBlockSeq {
        base: Box<SpaceRepr>,
        halfwidth: usize,
    },
    PolySup {
        degree: usize,
        gridsize: usize,
    },
    Renormed {
        base: Box<SpaceRepr>,
        certificate: String,
    },
}

impl From<Space> for SpaceRepr {
    fn from(s: Space) -> Self {
        match s {
            Space::Lp { n, p, weights } => {
                let trivial = weights.iter().all(|&w| w == 1.0);
                SpaceRepr::Lp { n, p, weights: if trivial { None } else { Some(weights) } }
            }
            Space::DirectSum2 { parts } => {
                SpaceRepr::DirectSum2 { parts: parts.into_iter().map(Into::into).collect() }
            }
            Space::BlockSeq { base, blocks } => {
                SpaceRepr::BlockSeq { base: Box::new((*base).into()), blocks }
            }
            Space::BiBlockSeq { base, halfwidth } => {
                SpaceRepr::BiBlockSeq { base: Box::new((*base).into()), halfwidth }
            }
            Space::PolySup { degree, gridsize } => SpaceRepr::PolySup { degree, gridsize },
            Space::Renormed(r) => SpaceRepr::Renormed {
                base: Box::new((*r.base).into()),
                certificate: r.certificate,
            },
        }
    }
}

impl TryFrom<SpaceRepr> for Space {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Self> {
        match r {
            SpaceRepr::Lp { n, p, weights } => match weights {
                Some(w) => Space::lp_weighted(p, w),
                None => Space::lp(n, p),
            },
            SpaceRepr::DirectSum2 { parts } => {
                Space::direct_sum2(parts.into_iter().map(Space::try_from).collect::<Result<_>>()?)
            }
            SpaceRepr::BlockSeq { base, blocks } => Space::block_seq(Space::try_from(*base)?, blocks),
            SpaceRepr::BiBlockSeq { base, halfwidth } => {
                Space::bi_block_seq(Space::try_from(*base)?, halfwidth)
            }
            SpaceRepr::PolySup { degree, gridsize } => Space::poly_sup(degree, gridsize),
            SpaceRepr::Renormed { certificate, .. } => Err(Error::Refused(format!(
                "renormed space (certificate {certificate}) must be rebuilt from its norm certificate"
            ))),
        }
    }
}

/// Default grid for the disk-algebra sup norm.
pub const DEFAULT_GRID: usize = 4096;

fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn lp_norm(v: &[C64], p: Exponent, w: &[f64]) -> f64 {
    if p.is_infinite() {
        return v.iter().zip(w).fold(0.0_f64, |a, (z, wi)| a.max(wi * z.norm()));
    }
    let pv = p.get();
    if v.len() == 1 {
        return w[0].powf(1.0 / pv) * v[0].norm();
    }
    if pv == 1.0 {
        return sorted_sum(v.iter().zip(w).map(|(z, wi)| wi * z.norm()).collect());
    }
    if pv == 2.0 {
        return sorted_sum(v.iter().zip(w).map(|(z, wi)| wi * z.norm_sqr()).collect()).sqrt();
    }
    let m = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if m == 0.0 {
        return 0.0;
    }
    let s = sorted_sum(v.iter().zip(w).map(|(z, wi)| wi * (z.norm() / m).powf(pv)).collect());
    m * s.powf(1.0 / pv)
}

fn lp_grad(v: &[C64], p: Exponent, w: &[f64], out: &mut [C64]) {
    let zero = C64::new(0.0, 0.0);
    out.iter_mut().for_each(|g| *g = zero);
    if p.is_infinite() {
        let mut best = (0usize, -1.0);
        for (i, (z, wi)) in v.iter().zip(w).enumerate() {
            let m = wi * z.norm();
            if m > best.1 {
                best = (i, m);
            }
        }
        if best.1 > 0.0 {
            let z = v[best.0];
            out[best.0] = z / z.norm() * w[best.0];
        }
        return;
    }
    let pv = p.get();
    if pv == 1.0 {
        for i in 0..v.len() {
            let r = v[i].norm();
            if r > 0.0 {
                out[i] = v[i] / r * w[i];
            }
        }
        return;
    }
    let n = lp_norm(v, p, w);
    if n == 0.0 {
        return;
    }
    for i in 0..v.len() {
        let r = v[i].norm();
        if r > 0.0 {
            out[i] = v[i] / n * (w[i] * (r / n).powf(pv - 2.0));
        }
    }
}

/// Values of the polynomial with coefficients `c` at the `g` grid points
/// `exp(2 pi i j / g)`.
pub fn poly_grid_values(c: &[C64], g: usize) -> Vec<C64> {
    (0..g)
        .map(|j| {
            let (s, co) = (2.0 * PI * j as f64 / g as f64).sin_cos();
            let z = C64::new(co, s);
            c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
        })
        .collect()
}

thread_local! {
    static GRIDS: std::cell::RefCell<std::collections::HashMap<usize, std::rc::Rc<Vec<C64>>>> =
        Default::default();
}

fn grid_points(g: usize) -> std::rc::Rc<Vec<C64>> {
    GRIDS.with(|m| {
        m.borrow_mut()
            .entry(g)
            .or_insert_with(|| {
                std::rc::Rc::new(
                    (0..g)
                        .map(|j| {
                            let (s, co) = (2.0 * PI * j as f64 / g as f64).sin_cos();
                            C64::new(co, s)
                        })
                        .collect(),
                )
            })
            .clone()
    })
}

fn poly_sup(c: &[C64], g: usize) -> (f64, usize, C64) {
    let zero = C64::new(0.0, 0.0);
    let top = c.iter().rposition(|z| *z != zero).map_or(0, |k| k + 1);
    let c = &c[..top];
    let mut best = (0.0, 0usize, zero);
    for (j, &z) in grid_points(g).iter().enumerate() {
        let v = c.iter().rev().fold(zero, |acc, &ck| acc * z + ck);
        let m = v.norm_sqr();
        if m > best.0 {
            best = (m, j, v);
        }
    }
    (best.0.sqrt(), best.1, best.2)
}

/// Anything that can evaluate a norm (or semi-norm) on coefficient slices.
pub trait NormEval: Sync {
    fn norm_of(&self, v: &[C64]) -> f64;
    fn dim(&self) -> usize;
}

impl NormEval for Space {
    fn norm_of(&self, v: &[C64]) -> f64 {
        self.norm_slice(v)
    }
    fn dim(&self) -> usize {
        Space::dim(self)
    }
}

impl Space {
    pub fn lp(n: usize, p: Exponent) -> Result<Space> {
        if n == 0 {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        Ok(Space::Lp { n, p, weights: vec![1.0; n] })
    }

    /// Convenience: unweighted `l_p^n` from a float exponent (`f64::INFINITY` allowed).
    pub fn lpf(n: usize, p: f64) -> Result<Space> {
        Space::lp(n, Exponent::new(p)?)
    }

    pub fn lp_weighted(p: Exponent, weights: Vec<f64>) -> Result<Space> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidSpace(format!("weight {w} is not a positive real")));
        }
        Ok(Space::Lp { n: weights.len(), p, weights })
    }

    pub fn direct_sum2(parts: Vec<Space>) -> Result<Space> {
        if parts.is_empty() {
            return Err(Error::InvalidSpace("direct sum needs at least one part".into()));
        }
        Ok(Space::DirectSum2 { parts })
    }

    pub fn block_seq(base: Space, blocks: usize) -> Result<Space> {
        if blocks == 0 {
            return Err(Error::InvalidSpace("block count must be positive".into()));
        }
        Ok(Space::BlockSeq { base: Box::new(base), blocks })
    }

    pub fn bi_block_seq(base: Space, halfwidth: usize) -> Result<Space> {
        Ok(Space::BiBlockSeq { base: Box::new(base), halfwidth })
    }

    pub fn poly_sup(degree: usize, gridsize: usize) -> Result<Space> {
        if gridsize < 2 * (degree + 1) {
            return Err(Error::InvalidSpace(format!(
                "grid of {gridsize} points is too coarse for degree {degree}"
            )));
        }
        Ok(Space::PolySup { degree, gridsize })
    }

    pub(crate) fn renormed(base: Space, contraction: CMat, certificate: String, positive: bool) -> Result<Space> {
        let n = base.dim();
        if contraction.nrows() != n || contraction.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: contraction.nrows() });
        }
        Ok(Space::Renormed(Renormed {
            base: Box::new(base),
            contraction: Arc::new(contraction),
            certificate,
            positive,
        }))
    }

    /// Ambient (complex) dimension.
    pub fn dim(&self) -> usize {
        match self {
            Space::Lp { n, .. } => *n,
            Space::DirectSum2 { parts } => parts.iter().map(Space::dim).sum(),
            Space::BlockSeq { base, blocks } => base.dim() * blocks,
            Space::BiBlockSeq { base, halfwidth } => base.dim() * (2 * halfwidth + 1),
            Space::PolySup { degree, .. } => degree + 1,
            Space::Renormed(r) => r.base.dim(),
        }
    }

    /// Norm of a coefficient vector.
    pub fn norm(&self, v: &CVec) -> Result<f64> {
        check_len(self.dim(), v.len())?;
        Ok(self.norm_slice(v.as_slice()))
    }

    /// Norm of a coefficient slice whose length is the caller's responsibility.
    pub fn norm_slice(&self, v: &[C64]) -> f64 {
        match self {
            Space::Lp { p, weights, .. } => lp_norm(v, *p, weights),
            Space::DirectSum2 { parts } => {
                let mut off = 0;
                let sq = parts
                    .iter()
                    .map(|s| {
                        let d = s.dim();
                        let n = s.norm_slice(&v[off..off + d]);
                        off += d;
                        n * n
                    })
                    .collect();
                sorted_sum(sq).sqrt()
            }
            Space::BlockSeq { base, .. } | Space::BiBlockSeq { base, .. } => {
                let d = base.dim();
                let zero = C64::new(0.0, 0.0);
                let sq = v
                    .chunks(d)
                    .filter(|c| c.iter().any(|z| *z != zero))
                    .map(|c| {
                        let n = base.norm_slice(c);
                        n * n
                    })
                    .collect();
                sorted_sum(sq).sqrt()
            }
            Space::PolySup { gridsize, .. } => poly_sup(v, *gridsize).0,
            Space::Renormed(r) => r.eval(v),
        }
    }

    /// A subgradient of the norm at `v` in the real-gradient convention:
    /// `d|v| = Re sum conj(g_i) dv_i`. Zero at `v = 0`.
    pub fn norm_grad(&self, v: &CVec) -> Result<CVec> {
        check_len(self.dim(), v.len())?;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.grad_slice(v.as_slice(), &mut out);
        Ok(CVec::from_vec(out))
    }

    pub(crate) fn grad_slice(&self, v: &[C64], out: &mut [C64]) {
        match self {
            Space::Lp { p, weights, .. } => lp_grad(v, *p, weights, out),
            Space::DirectSum2 { parts } => {
                let total = self.norm_slice(v);
                let mut off = 0;
                for s in parts {
                    let d = s.dim();
                    let nb = s.norm_slice(&v[off..off + d]);
                    s.grad_slice(&v[off..off + d], &mut out[off..off + d]);
                    let scale = if total > 0.0 { nb / total } else { 0.0 };
                    out[off..off + d].iter_mut().for_each(|g| *g *= scale);
                    off += d;
                }
            }
            Space::BlockSeq { base, .. } | Space::BiBlockSeq { base, .. } => {
                let total = self.norm_slice(v);
                let d = base.dim();
                for (c, o) in v.chunks(d).zip(out.chunks_mut(d)) {
                    let nb = base.norm_slice(c);
                    base.grad_slice(c, o);
                    let scale = if total > 0.0 { nb / total } else { 0.0 };
                    o.iter_mut().for_each(|g| *g *= scale);
                }
            }
            Space::PolySup { gridsize, .. } => {
                let (m, j, val) = poly_sup(v, *gridsize);
                out.iter_mut().for_each(|g| *g = C64::new(0.0, 0.0));
                if m > 0.0 {
                    let (s, c) = (2.0 * PI * j as f64 / *gridsize as f64).sin_cos();
                    let zc = C64::new(c, -s);
                    let sgn = val / m;
                    let mut pw = C64::new(1.0, 0.0);
                    for g in out.iter_mut() {
                        *g = sgn * pw;
                        pw *= zc;
                    }
                }
            }
            Space::Renormed(r) => {
                let n = v.len();
                let a = r.eval(v);
                out.iter_mut().for_each(|g| *g = C64::new(0.0, 0.0));
                if a == 0.0 {
                    return;
                }
                let nx = r.base.norm_slice(v);
                let tx = r.tx(v);
                let ntx = r.base.norm_slice(&tx);
                let mut gx = vec![C64::new(0.0, 0.0); n];
                let mut gtx = vec![C64::new(0.0, 0.0); n];
                r.base.grad_slice(v, &mut gx);
                r.base.grad_slice(&tx, &mut gtx);
                let t = &*r.contraction;
                for j in 0..n {
                    let th: C64 = (0..n).map(|i| t[(i, j)].conj() * gtx[i]).sum();
                    out[j] = (gx[j] * nx - th * ntx) / a;
                }
            }
        }
    }

    /// True when every leaf is an `l_p` space (no sampled or renormed norms).
    /// On such spaces disjointly supported coordinates are Birkhoff-James
    /// orthogonal and the norm is monotone in coordinate moduli.
    pub fn is_lattice(&self) -> bool {
        match self {
            Space::Lp { .. } => true,
            Space::DirectSum2 { parts } => parts.iter().all(Space::is_lattice),
            Space::BlockSeq { base, .. } | Space::BiBlockSeq { base, .. } => base.is_lattice(),
            Space::PolySup { .. } | Space::Renormed(_) => false,
        }
    }

    /// Per-coordinate scaling `s` with `|x| = |s * x|_2` when every leaf is a
    /// (weighted) `l_2` space or one-dimensional; `None` otherwise.
    pub fn hilbert_scaling(&self) -> Option<Vec<f64>> {
        match self {
            Space::Lp { n, p, weights } => {
                if *n == 1 {
                    let w = weights[0];
                    let s = if p.is_infinite() { w } else { w.powf(1.0 / p.get()) };
                    Some(vec![s])
                } else if p.get() == 2.0 {
                    Some(weights.iter().map(|w| w.sqrt()).collect())
                } else {
                    None
                }
            }
            Space::DirectSum2 { parts } => {
                let mut out = Vec::new();
                for s in parts {
                    out.extend(s.hilbert_scaling()?);
                }
                Some(out)
            }
            Space::BlockSeq { base, blocks } => {
                let b = base.hilbert_scaling()?;
                Some(b.iter().copied().cycle().take(b.len() * blocks).collect())
            }
            Space::BiBlockSeq { base, halfwidth } => {
                let b = base.hilbert_scaling()?;
                Some(b.iter().copied().cycle().take(b.len() * (2 * halfwidth + 1)).collect())
            }
            Space::PolySup { .. } | Space::Renormed(_) => None,
        }
    }

    pub fn is_hilbert(&self) -> bool {
        self.hilbert_scaling().is_some()
    }

    /// Single `l_p` leaf view: `(p, weights)`.
    pub fn as_lp(&self) -> Option<(Exponent, &[f64])> {
        match self {
            Space::Lp { p, weights, .. } => Some((*p, weights)),
            _ => None,
        }
    }

    /// Leaves of the 2-sum tree in coordinate order: `(offset, leaf)`.
    pub fn leaves(&self) -> Vec<(usize, &Space)> {
        let mut out = Vec::new();
        self.collect_leaves(0, &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, off: usize, out: &mut Vec<(usize, &'a Space)>) {
        match self {
            Space::DirectSum2 { parts } => {
                let mut o = off;
                for s in parts {
                    s.collect_leaves(o, out);
                    o += s.dim();
                }
            }
            Space::BlockSeq { base, blocks } => {
                for b in 0..*blocks {
                    base.collect_leaves(off + b * base.dim(), out);
                }
            }
            Space::BiBlockSeq { base, halfwidth } => {
                for b in 0..(2 * halfwidth + 1) {
                    base.collect_leaves(off + b * base.dim(), out);
                }
            }
            _ => out.push((off, self)),
        }
    }

    /// The dual space: `l_q` with weights `w^(1-q)` (or `1/w` at the
    /// endpoints) on each leaf, same sum structure.
    pub fn dual(&self) -> Result<Space> {
        match self {
            Space::Lp { n, p, weights } => {
                let q = p.conjugate();
                let w = if p.is_smooth() {
                    weights.iter().map(|w| w.powf(1.0 - q.get())).collect()
                } else {
                    weights.iter().map(|w| 1.0 / w).collect()
                };
                Ok(Space::Lp { n: *n, p: q, weights: w })
            }
            Space::DirectSum2 { parts } => {
                Ok(Space::DirectSum2 { parts: parts.iter().map(Space::dual).collect::<Result<_>>()? })
            }
            Space::BlockSeq { base, blocks } => Ok(Space::BlockSeq { base: Box::new(base.dual()?), blocks: *blocks }),
            Space::BiBlockSeq { base, halfwidth } => {
                Ok(Space::BiBlockSeq { base: Box::new(base.dual()?), halfwidth: *halfwidth })
            }
            Space::PolySup { .. } => Err(Error::Unsupported(
                "the dual of the disk-algebra grid space is a space of measures".into(),
            )),
            Space::Renormed(_) => Err(Error::Unsupported("dual of a renormed space".into())),
        }
    }

    /// True when every leaf is an `l_p` with `1 < p < inf` (or one-dimensional),
    /// so support functionals are unique.
    pub fn is_smooth(&self) -> bool {
        self.leaves().iter().all(|(_, l)| match l {
            Space::Lp { n, p, .. } => *n == 1 || p.is_smooth(),
            _ => false,
        })
    }

    /// Base space and block window `(lo, hi)` of a block sequence.
    pub fn block_layout(&self) -> Option<(&Space, i64, i64)> {
        match self {
            Space::BlockSeq { base, blocks } => Some((base, 0, *blocks as i64 - 1)),
            Space::BiBlockSeq { base, halfwidth } => Some((base, -(*halfwidth as i64), *halfwidth as i64)),
            _ => None,
        }
    }

    /// Coordinate range of block `index` in a block sequence.
    pub fn block_range(&self, index: i64) -> Result<std::ops::Range<usize>> {
        let (base, lo, hi) = self
            .block_layout()
            .ok_or_else(|| Error::Unsupported("block access needs a block sequence".into()))?;
        if index < lo || index > hi {
            return Err(Error::OutOfWindow { index, lo, hi });
        }
        let d = base.dim();
        let slot = (index - lo) as usize;
        Ok(slot * d..(slot + 1) * d)
    }

    /// Put `x` into block `index`, zeros elsewhere.
    pub fn embed_block(&self, index: i64, x: &CVec) -> Result<CVec> {
        let range = self.block_range(index)?;
        check_len(range.len(), x.len())?;
        let mut out = CVec::zeros(self.dim());
        out.rows_mut(range.start, range.len()).copy_from(x);
        Ok(out)
    }

    /// Seeded complex-Gaussian sample divided by its norm.
    pub fn random_unit(&self, seed: u64) -> CVec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_unit_with(&mut rng)
    }

    pub fn random_unit_with<R: Rng>(&self, rng: &mut R) -> CVec {
        loop {
            let v = gaussian_vec(self.dim(), rng);
            let n = self.norm_slice(v.as_slice());
            if n > 1e-6 * v.norm() {
                return v.unscale(n);
            }
        }
    }
}

/// Complex Gaussian vector with independent standard normal real and
/// imaginary parts.
pub fn gaussian_vec<R: Rng>(n: usize, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        C64::new(a, b)
    })
}

/// Complex Gaussian matrix.
pub fn gaussian_mat<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        C64::new(a, b)
    })
}

/// Seeded generator used across the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit coordinate vector.
pub fn basis_vec(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Real coefficient vector.
pub fn real_vec(xs: &[f64]) -> CVec {
    CVec::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(x, 0.0)))
}

/// A coefficient vector tagged with its space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub space: Space,
    #[serde(with = "crate::serde_util::cvec")]
    pub coeffs: CVec,
}

impl Vector {
    pub fn new(space: Space, coeffs: CVec) -> Result<Vector> {
        check_len(space.dim(), coeffs.len())?;
        Ok(Vector { space, coeffs })
    }

    pub fn norm(&self) -> f64 {
        self.space.norm_slice(self.coeffs.as_slice())
    }
}
