//! Truncated unilateral and bilateral shifts, the σ-shift extension of a
//! unilateral shift, Möbius transforms `φ_α(T)` and approximate point
//! spectrum probes.
//!
//! Truncated identities hold only on boundary-safe vectors, whose iterates
//! stay inside the window; every check here samples such vectors.

use crate::certificate::{Certificate, Verdict};
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::operators::{operator_norm, Annotation, Operator};
use crate::optim::{compass_2d, lbfgs, pack, pack_into, unpack, LbfgsOptions};
use crate::orthogonality::bj_subspace;
use crate::serde_util::c64_pair;
use crate::spaces::{gaussian_vec, rng, Space};
use crate::subspace::Subspace;
use crate::{CMat, CVec, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Condition numbers above this flag a `φ_α` solve.
pub const COND_FLAG: f64 = 1e8;

/// Forward shift `M_z` on `BlockSeq(X, blocks)`.
pub fn make_unilateral_shift(x: &Space, blocks: usize) -> Result<Operator> {
    if blocks < 2 {
        return Err(Error::Refused("a shift needs at least two blocks".into()));
    }
    let k = Space::block_seq(x.clone(), blocks)?;
    Operator::from_annotation(
        k.clone(),
        k,
        Annotation::ShiftBlock { base_dim: x.dim(), blocks, backward: false },
    )
}

/// Backward shift `M̂_z` on `BlockSeq(X, blocks)`.
pub fn make_backward_shift(x: &Space, blocks: usize) -> Result<Operator> {
    if blocks < 2 {
        return Err(Error::Refused("a shift needs at least two blocks".into()));
    }
    let k = Space::block_seq(x.clone(), blocks)?;
    Operator::from_annotation(
        k.clone(),
        k,
        Annotation::ShiftBlock { base_dim: x.dim(), blocks, backward: true },
    )
}

/// Bilateral shift `U` (block index `+1`) or its inverse on
/// `BiBlockSeq(X, halfwidth)`.
pub fn make_bilateral_shift(x: &Space, halfwidth: usize, inverse: bool) -> Result<Operator> {
    let y = Space::bi_block_seq(x.clone(), halfwidth)?;
    Operator::from_annotation(
        y.clone(),
        y,
        Annotation::BilateralShift { base_dim: x.dim(), halfwidth, inverse },
    )
}

/// Block `0` of a block sequence.
pub fn generating_subspace(space: &Space) -> Result<Subspace> {
    let r = space.block_range(0)?;
    Subspace::coordinates(space.clone(), &r.collect::<Vec<_>>())
}

/// How the `Y` norm of a σ-shift is evaluated.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaNorm {
    /// `l_2` block norm of `BiBlockSeq(X, h)`.
    Block,
    /// `|(l_n)|_Y^2 = |Σ_{n<0} V^{|n|} l_n|^2 + |Σ_{n>=0} V^n l_n|^2` from a
    /// unilateral shift `V` on `K` with generating subspace block `0`.
    Extended {
        k: Space,
        /// `V^n` restricted to block `0`, for `n = 0..=halfwidth + 1`.
        #[serde(skip)]
        powers: Vec<CMat>,
    },
}

/// A σ-shift on bi-sequences over `X`.
#[derive(Clone, Debug, Serialize)]
pub struct SigmaShiftBundle {
    pub y_space: Space,
    pub base: Space,
    pub halfwidth: usize,
    pub norm: SigmaNorm,
    /// `Ṽ (l_n) = (l_{n-1})`.
    pub vtilde: Operator,
    pub generating: Subspace,
    pub certificate: Certificate,
}

impl SigmaShiftBundle {
    /// `|·|_Y`.
    pub fn norm_y(&self, v: &CVec) -> Result<f64> {
        check_len(self.y_space.dim(), v.len())?;
        match &self.norm {
            SigmaNorm::Block => Ok(self.y_space.norm_slice(v.as_slice())),
            SigmaNorm::Extended { k, powers } => {
                let d = self.base.dim();
                let h = self.halfwidth as i64;
                let mut neg = CVec::zeros(k.dim());
                let mut pos = CVec::zeros(k.dim());
                for n in -h..=h {
                    let s = ((n + h) as usize) * d;
                    let l = v.rows(s, d);
                    let m = &powers[n.unsigned_abs() as usize];
                    if n < 0 {
                        neg += m * l;
                    } else {
                        pos += m * l;
                    }
                }
                let (a, b) = (k.norm_slice(neg.as_slice()), k.norm_slice(pos.as_slice()));
                Ok((a * a + b * b).sqrt())
            }
        }
    }

    /// `|(l_n)|_σ = |(l_{n-1})|_Y`.
    pub fn norm_sigma(&self, v: &CVec) -> Result<f64> {
        self.norm_y(&self.vtilde.apply(v)?)
    }

    /// Coordinates of blocks `lo..=hi`.
    pub fn block_coords(&self, lo: i64, hi: i64) -> Vec<usize> {
        let d = self.base.dim();
        let h = self.halfwidth as i64;
        (lo.max(-h)..=hi.min(h)).flat_map(|b| (0..d).map(move |i| ((b + h) as usize) * d + i)).collect()
    }

    /// Random unit vector supported on blocks `lo..=hi`.
    pub fn random_supported<R: rand::Rng>(&self, lo: i64, hi: i64, r: &mut R) -> CVec {
        let coords = self.block_coords(lo, hi);
        let g = gaussian_vec(coords.len(), r);
        let mut v = CVec::zeros(self.y_space.dim());
        for (c, z) in coords.iter().zip(g.iter()) {
            v[*c] = *z;
        }
        let n = self.norm_y(&v).expect("shape");
        v.unscale(n)
    }
}

fn sigma_checks(b: &SigmaShiftBundle, seed: u64) -> Result<Certificate> {
    let h = b.halfwidth as i64;
    let horizon = (h - 1).min(4);
    let mut r = rng(seed);
    let mut iso: f64 = 0.0;
    let mut split: f64 = 0.0;
    let mut consistency: f64 = 0.0;
    for _ in 0..32 {
        let v = b.random_supported(-h, h - 1, &mut r);
        iso = iso.max((b.norm_y(&b.vtilde.apply(&v)?)? - b.norm_sigma(&v)?).abs());
        consistency = consistency.max((b.norm_y(&v)? - b.y_space.norm_slice(v.as_slice())).abs());
        let w1 = b.random_supported(-h, -1, &mut r);
        let w2 = b.random_supported(0, h, &mut r);
        let s = w1.scale(0.7) + w2.scale(1.3);
        let lhs = b.norm_y(&s)?.powi(2);
        let rhs = (0.7 * b.norm_y(&w1)?).powi(2) + (1.3 * b.norm_y(&w2)?).powi(2);
        split = split.max((lhs - rhs).abs());
    }
    if consistency > 1e-10 {
        return Err(Error::Inconsistent(format!(
            "Y norm differs from the block norm by {consistency:.2e}"
        )));
    }
    // Wandering families: Ṽ^n I ⊥ I and I ⊥ Ṽ^{-n} I.
    let gen = &b.generating;
    let mut worst = f64::INFINITY;
    let mut runs = 0;
    for n in 1..=horizon {
        let fwd = block_subspace(b, n)?;
        let back = block_subspace(b, -n)?;
        for (y, z) in [(&fwd, gen), (gen, &back)] {
            let c = bj_subspace(y, z, 8, seed.wrapping_add(n as u64))?;
            runs += 1;
            worst = worst.min(c.value);
            if !c.passed() {
                return Ok(Certificate::new(Verdict::Fail, c.value, seed, runs)
                    .with_note("horizon", horizon as f64)
                    .with_note("failed_power", n as f64));
            }
        }
    }
    let value = iso.max(split);
    let verdict = if value <= 1e-10 { Verdict::Pass } else { Verdict::Fail };
    Ok(Certificate::new(verdict, value, seed, 32 + runs)
        .with_note("isometry_residual", iso)
        .with_note("split_residual", split)
        .with_note("bj_min_gap", worst)
        .with_note("horizon", horizon as f64))
}

/// Block `n` as a subspace of `Y`.
pub fn block_subspace(b: &SigmaShiftBundle, n: i64) -> Result<Subspace> {
    Subspace::coordinates(b.y_space.clone(), &b.block_coords(n, n))
}

/// The bilateral shift on `BiBlockSeq(X, halfwidth)` as a σ-shift with both
/// norms equal to the block norm and generating subspace block `0`.
pub fn make_sigma_shift(x: &Space, halfwidth: usize, seed: u64) -> Result<SigmaShiftBundle> {
    if halfwidth < 2 {
        return Err(Error::Refused("halfwidth must be at least 2".into()));
    }
    let y = Space::bi_block_seq(x.clone(), halfwidth)?;
    let mut b = SigmaShiftBundle {
        generating: generating_subspace(&y)?,
        vtilde: make_bilateral_shift(x, halfwidth, false)?,
        y_space: y,
        base: x.clone(),
        halfwidth,
        norm: SigmaNorm::Block,
        certificate: Certificate::new(Verdict::Inconclusive, 0.0, seed, 0),
    };
    b.certificate = sigma_checks(&b, seed)?;
    Ok(b)
}

/// Extend a truncated unilateral shift `V` on `BlockSeq(X, blocks)` to a
/// σ-shift on `BiBlockSeq(X, halfwidth)`. The extension `Ṽ` is checked to be
/// isometric from `σ` to `Y`, to agree with `V` on the embedded copy of `K`,
/// and `|p|_Y <= sqrt(2) |p|_σ` is sampled on negatively supported `p`.
pub fn sigma_extension(v: &Operator, halfwidth: usize, seed: u64) -> Result<(SigmaShiftBundle, Certificate)> {
    let (base_dim, blocks) = match v.annotation() {
        Some(Annotation::ShiftBlock { base_dim, blocks, backward: false }) => (*base_dim, *blocks),
        _ => return Err(Error::Refused("sigma extension needs a forward shift-block annotation".into())),
    };
    if halfwidth < 2 || blocks < halfwidth + 2 {
        return Err(Error::Refused(format!(
            "need halfwidth >= 2 and blocks >= halfwidth + 2, got {halfwidth} and {blocks}"
        )));
    }
    let k = v.domain().clone();
    let (x, _, _) = k.block_layout().ok_or_else(|| Error::Refused("shift must act on a block sequence".into()))?;
    let x = x.clone();
    let embed0 = CMat::from_fn(k.dim(), base_dim, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let mut powers = vec![embed0];
    for n in 1..=halfwidth + 1 {
        let next = v.entries() * &powers[n - 1];
        powers.push(next);
    }
    let y = Space::bi_block_seq(x.clone(), halfwidth)?;
    let mut b = SigmaShiftBundle {
        generating: generating_subspace(&y)?,
        vtilde: make_bilateral_shift(&x, halfwidth, false)?,
        y_space: y.clone(),
        base: x.clone(),
        halfwidth,
        norm: SigmaNorm::Extended { k: k.clone(), powers },
        certificate: Certificate::new(Verdict::Inconclusive, 0.0, seed, 0),
    };
    b.certificate = sigma_checks(&b, seed)?;

    // Extension property on K-vectors whose last block is zero.
    let h = halfwidth as i64;
    let d = base_dim;
    let embed = |kv: &CVec| -> CVec {
        let mut out = CVec::zeros(y.dim());
        for n in 0..=halfwidth {
            let s = ((n as i64 + h) as usize) * d;
            out.rows_mut(s, d).copy_from(&kv.rows(n * d, d));
        }
        out
    };
    let mut r = rng(seed ^ 0x51);
    let mut ext: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for _ in 0..64 {
        let mut kv = k.random_unit_with(&mut r);
        for i in (halfwidth * d)..k.dim() {
            kv[i] = C64::new(0.0, 0.0);
        }
        let lhs = b.vtilde.apply(&embed(&kv))?;
        let rhs = embed(&v.apply(&kv)?);
        ext = ext.max(y.norm_slice((lhs - rhs).as_slice()));
        let p = b.random_supported(-h, -1, &mut r);
        ratio = ratio.max(b.norm_y(&p)? / b.norm_sigma(&p)?);
    }
    let bound = std::f64::consts::SQRT_2 + 1e-9;
    let pass = ext <= 1e-12 && ratio <= bound && b.certificate.passed();
    let cert = Certificate::new(if pass { Verdict::Pass } else { Verdict::Fail }, ext, seed, 64)
        .with_note("extension_residual", ext)
        .with_note("sigma_ratio_max", ratio)
        .with_note("sigma_ratio_bound", std::f64::consts::SQRT_2);
    Ok((b, cert))
}

/// `φ_α(T) = (T - αI)(I - ᾱT)^{-1}` with the condition number of the solve.
#[derive(Clone, Debug, Serialize)]
pub struct PhiAlpha {
    pub operator: Operator,
    #[serde(with = "c64_pair")]
    pub alpha: C64,
    pub condition: f64,
    /// Set when the condition number exceeds [`COND_FLAG`].
    pub flagged: bool,
}

pub fn phi_alpha(t: &Operator, alpha: C64) -> Result<PhiAlpha> {
    if !t.is_square() {
        return Err(Error::Refused("φ_α needs a square operator".into()));
    }
    if alpha.norm() >= 1.0 {
        return Err(Error::Refused(format!("|α| = {} is not below one", alpha.norm())));
    }
    let n = t.entries().nrows();
    let id = CMat::identity(n, n);
    let num = t.entries() - id.scale(1.0) * alpha;
    let den = &id - t.entries() * alpha.conj();
    // Both factors are polynomials in T, so they commute.
    let (m, cond) = linalg::solve(&den, &num)?;
    Ok(PhiAlpha {
        operator: Operator::on(t.domain().clone(), m)?,
        alpha,
        condition: cond,
        flagged: cond > COND_FLAG,
    })
}

/// Largest `|φ_α(T)|` over a polar grid of `α` in the disc of radius
/// `rmax`, refined by compass search.
#[derive(Clone, Debug, Serialize)]
pub struct PhiSearch {
    #[serde(with = "c64_pair")]
    pub alpha: C64,
    pub norm: f64,
    pub evaluations: usize,
}

pub fn phi_norm_search(t: &Operator, grid: usize, rmax: f64, seed: u64) -> Result<PhiSearch> {
    let eval = |a: C64| -> f64 {
        if a.norm() >= rmax {
            return f64::NEG_INFINITY;
        }
        match phi_alpha(t, a) {
            Ok(p) => operator_norm(&p.operator, 4, seed).value,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut pts = vec![C64::new(0.0, 0.0)];
    for i in 1..=grid {
        let r = rmax * i as f64 / (grid as f64 + 1.0);
        for k in 0..(2 * grid) {
            let th = std::f64::consts::PI * k as f64 / grid as f64;
            pts.push(C64::from_polar(r, th));
        }
    }
    let vals: Vec<f64> = pts.par_iter().map(|&a| eval(a)).collect();
    let (bi, _) = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let start = pts[bi];
    let ((re, im), v) = compass_2d(|re, im| -eval(C64::new(re, im)), (start.re, start.im), rmax / (2.0 * grid as f64), 1e-6);
    let (alpha, norm) = if -v > vals[bi] { (C64::new(re, im), -v) } else { (start, vals[bi]) };
    Ok(PhiSearch { alpha, norm, evaluations: pts.len() })
}

/// Two-block witness against `φ_α(U)` being a contraction on `l_2(Z, X)`:
/// `|x| = |y|` with `|x - αy| > |y - ᾱx|`. For `z = (..., 0, [x], y, 0, ...)`
/// the vector `u = (I - ᾱU) z` has `|φ_α(U) u| = |(U - α) z| > |u|`.
#[derive(Clone, Debug, Serialize)]
pub struct BilateralPhiWitness {
    #[serde(with = "crate::serde_util::cvec")]
    pub x: CVec,
    #[serde(with = "crate::serde_util::cvec")]
    pub y: CVec,
    #[serde(with = "c64_pair")]
    pub alpha: C64,
    /// `|x - αy|`.
    pub lhs: f64,
    /// `|y - ᾱx|`.
    pub rhs: f64,
    /// `|φ_α(U) u| - |u|` on the truncated shift.
    pub excess: f64,
    pub halfwidth: usize,
}

pub fn bilateral_phi_witness(x_space: &Space, samples: usize, seed: u64) -> Result<BilateralPhiWitness> {
    let gap = |x: &CVec, y: &CVec, a: C64| -> f64 {
        let l = x_space.norm_slice((x - y * a).as_slice());
        let r = x_space.norm_slice((y - x * a.conj()).as_slice());
        l - r
    };
    let mut r = rng(seed);
    let pairs: Vec<(CVec, CVec)> = (0..samples)
        .map(|_| (x_space.random_unit_with(&mut r), x_space.random_unit_with(&mut r)))
        .collect();
    let alphas: Vec<C64> = (1..10).flat_map(|i| (0..16).map(move |k| C64::from_polar(i as f64 / 10.0, std::f64::consts::PI * k as f64 / 8.0))).collect();
    let best = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let (a, v) = alphas.iter().map(|&a| (a, gap(x, y, a))).fold((alphas[0], f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
            (v, i, a)
        })
        .reduce(|| (f64::NEG_INFINITY, 0, C64::new(0.0, 0.0)), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let (x, y) = pairs[best.1].clone();
    let ((re, im), v) = compass_2d(
        |re, im| {
            let a = C64::new(re, im);
            if a.norm() >= 0.99 {
                f64::INFINITY
            } else {
                -gap(&x, &y, a)
            }
        },
        (best.2.re, best.2.im),
        0.05,
        1e-8,
    );
    let alpha = if -v > best.0 { C64::new(re, im) } else { best.2 };
    let lhs = x_space.norm_slice((&x - &y * alpha).as_slice());
    let rhs = x_space.norm_slice((&y - &x * alpha.conj()).as_slice());

    // Check on the truncated bilateral shift with z in blocks 0 and 1.
    let halfwidth = 4;
    let u_op = make_bilateral_shift(x_space, halfwidth, false)?;
    let yspace = u_op.domain().clone();
    let mut z = yspace.embed_block(0, &x)?;
    z += yspace.embed_block(1, &y)?;
    let n = yspace.dim();
    let u = (CMat::identity(n, n) - u_op.entries() * alpha.conj()) * &z;
    let phi = phi_alpha(&u_op, alpha)?;
    let excess = yspace.norm_slice(phi.operator.apply(&u)?.as_slice()) - yspace.norm_slice(u.as_slice());
    Ok(BilateralPhiWitness { x, y, alpha, lhs, rhs, excess, halfwidth })
}

/// One row of a spectrum probe table.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumRow {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub residual: f64,
    pub horizon: usize,
}

/// Result of [`spectrum_probe`]: `residual = |(U - λ)x|_Y` at the unit
/// vector `witness`, so it bounds the infimum from above.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumProbe {
    pub residual: f64,
    #[serde(with = "crate::serde_util::cvec")]
    pub witness: CVec,
    pub horizon: usize,
}

fn geometric_seed(b: &SigmaShiftBundle, lambda: C64, horizon: i64, taper: bool, dir: &CVec) -> CVec {
    let d = b.base.dim();
    let h = b.halfwidth as i64;
    let span = (2 * horizon) as f64;
    let logmod = if lambda.norm() > 0.0 { lambda.norm().ln() } else { -50.0 };
    let ns: Vec<i64> = (-horizon..horizon).collect();
    let top = ns.iter().map(|&n| -(n as f64) * logmod).fold(f64::NEG_INFINITY, f64::max);
    let mut v = CVec::zeros(b.y_space.dim());
    for &n in &ns {
        let mag = (-(n as f64) * logmod - top).exp();
        let ph = C64::from_polar(1.0, -(n as f64) * lambda.arg());
        let w = if taper { (std::f64::consts::PI * ((n + horizon) as f64 + 1.0) / (span + 1.0)).sin() } else { 1.0 };
        let s = ((n + h) as usize) * d;
        for i in 0..d {
            v[s + i] = dir[i] * ph * (mag * w);
        }
    }
    v
}

/// `min |(U - λ)x|_Y` over unit `x` supported on blocks
/// `-horizon..horizon-1`, by descent from flat and sine-tapered
/// `λ^{-n}`-phased seeds.
pub fn spectrum_probe(b: &SigmaShiftBundle, lambda: C64, horizon: usize, seed: u64) -> Result<SpectrumProbe> {
    if horizon == 0 || horizon + 1 > b.halfwidth {
        return Err(Error::Refused(format!("horizon {horizon} must lie in 1..halfwidth")));
    }
    if !matches!(b.norm, SigmaNorm::Block) {
        return Err(Error::Refused("spectrum probes use the block-normed σ-shift".into()));
    }
    let hz = horizon as i64;
    let coords = b.block_coords(-hz, hz - 1);
    let y = &b.y_space;
    let n = y.dim();
    let mut m = b.vtilde.entries().clone();
    for i in 0..n {
        m[(i, i)] -= lambda;
    }
    // M - λ restricted to the window is sparse; keep the nonzeros.
    let mref = &m;
    let nz: Vec<(usize, usize, C64)> = coords
        .iter()
        .enumerate()
        .flat_map(|(j, &cj)| (0..n).filter_map(move |i| Some((i, j, mref[(i, cj)])).filter(|t| t.2 != C64::new(0.0, 0.0))))
        .collect();
    let apply = |c: &CVec| {
        let mut w = CVec::zeros(n);
        for &(i, j, a) in &nz {
            w[i] += a * c[j];
        }
        w
    };
    let apply_adj = |g: &CVec| {
        let mut w = CVec::zeros(coords.len());
        for &(i, j, a) in &nz {
            w[j] += a.conj() * g[i];
        }
        w
    };
    let full = |c: &CVec| -> CVec {
        let mut v = CVec::zeros(n);
        for (k, &i) in coords.iter().enumerate() {
            v[i] = c[k];
        }
        v
    };
    let restrict = |v: &CVec| CVec::from_iterator(coords.len(), coords.iter().map(|&i| v[i]));
    let mut r = rng(seed);
    let d = b.base.dim();
    let mut dirs = vec![b.base.random_unit_with(&mut r)];
    if d > 1 {
        dirs.push(CVec::from_fn(d, |i, _| if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }));
    }
    let mut seeds = Vec::new();
    for dir in &dirs {
        seeds.push(geometric_seed(b, lambda, hz, false, dir));
        seeds.push(geometric_seed(b, lambda, hz, true, dir));
    }
    let opts = LbfgsOptions { max_iter: 300, rel_tol: 1e-12, memory: 8 };
    let objective = |c: &CVec| -> (f64, CVec) {
        let v = full(c);
        let nv = y.norm_slice(v.as_slice());
        let w = apply(c);
        let nw = y.norm_slice(w.as_slice());
        if nv == 0.0 {
            return (f64::INFINITY, CVec::zeros(c.len()));
        }
        let gv = restrict(&y.norm_grad(&v).expect("shape"));
        let gw = if nw > 0.0 { apply_adj(&y.norm_grad(&w).expect("shape")) } else { CVec::zeros(c.len()) };
        let val = nw / nv;
        (val, (gw - gv.scale(val)).unscale(nv))
    };
    let runs: Vec<(f64, CVec)> = seeds
        .into_par_iter()
        .map(|s| {
            let c0 = restrict(&s);
            let res = lbfgs(
                |z, g| {
                    let (v, gr) = objective(&unpack(z));
                    pack_into(&gr, g);
                    v
                },
                pack(&c0),
                opts,
            );
            let c = unpack(&res.x);
            let c = if objective(&c).0 <= objective(&c0).0 { c } else { c0 };
            let v = full(&c);
            let v = v.unscale(y.norm_slice(v.as_slice()));
            let val = y.norm_slice((&m * &v).as_slice());
            (val, v)
        })
        .collect();
    let (residual, witness) = runs.into_iter().fold((f64::INFINITY, CVec::zeros(n)), |a, b| if b.0 < a.0 { b } else { a });
    Ok(SpectrumProbe { residual, witness, horizon })
}

/// Probe every `λ` in parallel.
pub fn spectrum_table(b: &SigmaShiftBundle, lambdas: &[C64], horizon: usize, seed: u64) -> Result<Vec<SpectrumRow>> {
    lambdas
        .par_iter()
        .map(|&l| {
            spectrum_probe(b, l, horizon, seed).map(|p| SpectrumRow {
                lambda_re: l.re,
                lambda_im: l.im,
                residual: p.residual,
                horizon,
            })
        })
        .collect()
}

/// `count` equispaced points on the unit circle starting at `1`.
pub fn unit_circle(count: usize) -> Vec<C64> {
    (0..count).map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / count as f64)).collect()
}

/// CSV with header `lambda_re,lambda_im,residual,horizon`.
pub fn spectrum_csv(rows: &[SpectrumRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
