//! Support functionals, the duality map and its inverse, norm attainment of
//! functionals, minimal-norm Hahn-Banach extensions and the adjoint
//! `T_* = J^-1 T^x J`.
//!
//! A functional acts bilinearly: `f(x) = sum f_i x_i`.

use crate::certificate::{linearity_verdict, Certificate};
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::operators::Operator;
use crate::optim::{lbfgs, pack, pack_into, unpack, LbfgsOptions};
use crate::serde_util::cvec;
use crate::spaces::{gaussian_vec, rng, Space};
use crate::subspace::Subspace;
use crate::{CMat, CVec, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    #[serde(with = "cvec")]
    pub coeffs: CVec,
    pub predual: Space,
    pub dual_norm: f64,
}

impl Functional {
    pub fn new(predual: Space, coeffs: CVec) -> Result<Functional> {
        check_len(predual.dim(), coeffs.len())?;
        let dual_norm = predual.dual()?.norm(&coeffs)?;
        Ok(Functional { coeffs, predual, dual_norm })
    }

    pub fn apply(&self, x: &CVec) -> C64 {
        self.coeffs.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Why a point fails to be smooth, if it does.
fn non_smooth_reason(space: &Space, x: &CVec) -> Option<String> {
    for (off, leaf) in space.leaves() {
        let d = leaf.dim();
        let block = &x.as_slice()[off..off + d];
        if block.iter().all(|z| *z == C64::new(0.0, 0.0)) || d == 1 {
            continue;
        }
        match leaf {
            Space::Lp { p, weights, .. } if p.get() == 1.0 => {
                if let Some(i) = block.iter().position(|z| *z == C64::new(0.0, 0.0)) {
                    return Some(format!("l_1 point with zero coordinate {}", off + i));
                }
                let _ = weights;
            }
            Space::Lp { p, weights, .. } if p.is_infinite() => {
                let vals: Vec<f64> = block.iter().zip(weights.iter()).map(|(z, w)| w * z.norm()).collect();
                let m = vals.iter().fold(0.0_f64, |a, &b| a.max(b));
                let hits = vals.iter().filter(|&&v| v >= m * (1.0 - 1e-12)).count();
                if hits > 1 {
                    return Some(format!("l_inf point with {hits} maximal coordinates"));
                }
            }
            Space::Lp { .. } => {}
            Space::PolySup { gridsize, .. } => {
                let vals = crate::spaces::poly_grid_values(block, *gridsize);
                let m = vals.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
                let hits = vals.iter().filter(|z| z.norm() >= m * (1.0 - 1e-12)).count();
                if hits > 1 {
                    return Some(format!("sup attained at {hits} grid points"));
                }
            }
            _ => return Some("renormed spaces have no closed-form support functional".into()),
        }
    }
    None
}

/// The support functional `f_x`: `f_x(x) = |x|^2`, `|f_x| = |x|`.
///
/// At non-smooth points of `l_1`/`l_inf` leaves this errors unless
/// `canonical` is set, in which case the sign vector on the support (`l_1`)
/// or the first maximal coordinate (`l_inf`) is used.
pub fn support_functional(space: &Space, x: &CVec, canonical: bool) -> Result<Functional> {
    check_len(space.dim(), x.len())?;
    if matches!(space, Space::Renormed(_)) {
        return Err(Error::Unsupported("support functionals of renormed spaces".into()));
    }
    let n = space.norm(x)?;
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !canonical {
        if let Some(why) = non_smooth_reason(space, x) {
            return Err(Error::NotSmooth(why));
        }
    }
    let g = space.norm_grad(x)?;
    let coeffs = g.map(|z| z.conj() * n);
    match space.dual() {
        Ok(_) => Functional::new(space.clone(), coeffs),
        Err(_) => Ok(Functional { coeffs, predual: space.clone(), dual_norm: n }),
    }
}

/// `J(x)` as bare coefficients (smooth spaces, no checks).
pub fn duality_map(space: &Space, x: &CVec) -> CVec {
    let n = space.norm_slice(x.as_slice());
    if n == 0.0 {
        return CVec::zeros(x.len());
    }
    let g = space.norm_grad(x).expect("shape checked by caller");
    g.map(|z| z.conj() * n)
}

/// Unit vector `x_0` with `f(x_0) = |f|`; `f` is given by coefficients on `space`.
pub fn attainment_coeffs(space: &Space, f: &CVec) -> Result<CVec> {
    let dual = space.dual()?;
    if dual.norm(f)? == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dual.norm_grad(f)?.map(|z| z.conj()))
}

/// Norm attainment of a functional on a smooth, strictly convex space.
pub fn functional_attainment(f: &Functional) -> Result<CVec> {
    if !f.predual.is_smooth() {
        return Err(Error::Unsupported("attainment is unique only on smooth l_p spaces".into()));
    }
    attainment_coeffs(&f.predual, &f.coeffs)
}

/// `J^-1(g)`: the vector whose support functional is `g`.
pub fn inverse_duality_map(space: &Space, g: &CVec) -> Result<CVec> {
    let dual = space.dual()?;
    let n = dual.norm(g)?;
    if n == 0.0 {
        return Ok(CVec::zeros(g.len()));
    }
    Ok(dual.norm_grad(g)?.map(|z| z.conj() * n))
}

fn require_smooth(space: &Space, what: &str) -> Result<()> {
    if !space.is_smooth() {
        return Err(Error::Refused(format!(
            "{what} needs 1 < p < inf on every leaf (the dual is not strictly convex otherwise)"
        )));
    }
    Ok(())
}

/// Minimal-norm Hahn-Banach extension of the functional on `y` whose values on
/// the basis vectors are `values`.
///
/// The extension `g` attains its norm at some unit `y_0` in `Y` and is then
/// `J(y_0)` up to scale, so it is found by solving `B^T J(B c) = values` for
/// the coefficients `c` of `y_0`. That system is the stationarity condition of
/// the strictly convex `c -> |Bc|^2/2 - Re(values . c)`.
pub fn hahn_banach_extend(y: &Subspace, values: &CVec) -> Result<Functional> {
    let space = y.ambient();
    require_smooth(space, "Hahn-Banach extension")?;
    let b = y.basis().clone();
    let k = b.ncols();
    check_len(k, values.len())?;
    if k == 0 {
        return Functional::new(space.clone(), CVec::zeros(space.dim()));
    }
    if linalg::rank(&b, linalg::RANK_TOL) < k {
        return Err(Error::RankDeficient { rank: linalg::rank(&b, linalg::RANK_TOL), expected: k });
    }
    if values.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Functional::new(space.clone(), CVec::zeros(space.dim()));
    }
    let bt = b.transpose();
    let residual = |c: &CVec| -> CVec { &bt * duality_map(space, &(&b * c)) - values };
    // Euclidean least-norm start, then L-BFGS on the convex potential.
    let gram = b.adjoint() * &b;
    let start = gram
        .clone()
        .lu()
        .solve(&values.map(|z| z.conj()))
        .map(|c| c.map(|z| z.conj()))
        .unwrap_or_else(|| CVec::zeros(k));
    let opts = LbfgsOptions { max_iter: 2000, rel_tol: 1e-16, memory: 12 };
    let res = lbfgs(
        |z, g| {
            let c = unpack(z);
            let yv = &b * &c;
            let ny = space.norm_slice(yv.as_slice());
            let grad = &bt * duality_map(space, &yv) - values;
            // d(Re v.c) contributes -values; the potential's real gradient is conj.
            pack_into(&grad.map(|z| z.conj()), g);
            let lin: C64 = values.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
            0.5 * ny * ny - lin.re
        },
        pack(&start),
        opts,
    );
    let mut c = unpack(&res.x);
    // Newton polish with a finite-difference Jacobian of the real system.
    let mut r = residual(&c);
    for _ in 0..8 {
        let rn = r.norm();
        if rn <= 1e-15 * values.norm() {
            break;
        }
        let x0 = pack(&c);
        let m = x0.len();
        let f0 = pack(&r);
        let mut jac = nalgebra::DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let h = 1e-7 * x0[j].abs().max(1e-3 * (c.norm() / (k as f64).sqrt()).max(1e-12));
            let mut xp = x0.clone();
            xp[j] += h;
            let fp = pack(&residual(&unpack(&xp)));
            for i in 0..m {
                jac[(i, j)] = (fp[i] - f0[i]) / h;
            }
        }
        let rhs = nalgebra::DVector::from_vec(f0.iter().map(|v| -v).collect());
        let Some(step) = jac.lu().solve(&rhs) else { break };
        let xn: Vec<f64> = x0.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
        let cn = unpack(&xn);
        let rnew = residual(&cn);
        if rnew.norm() < rn {
            c = cn;
            r = rnew;
        } else {
            break;
        }
    }
    let g = duality_map(space, &(&b * &c));
    Functional::new(space.clone(), g)
}

/// Norm of the functional `values` on `Y`: `max |f(y)|` over unit `y` in `Y`,
/// by multi-start ascent.
pub fn restricted_norm(y: &Subspace, values: &CVec, seed: u64) -> f64 {
    let space = y.ambient();
    let b = y.basis();
    let k = b.ncols();
    let mut r = rng(seed);
    let mut starts: Vec<CVec> = vec![values.map(|z| z.conj())];
    for _ in 0..7 {
        starts.push(gaussian_vec(k, &mut r));
    }
    starts
        .into_par_iter()
        .map(|c0| {
            let res = lbfgs(
                |z, g| {
                    let c = unpack(z);
                    let yv = b * &c;
                    let ny = space.norm_slice(yv.as_slice());
                    if ny == 0.0 {
                        g.iter_mut().for_each(|v| *v = 0.0);
                        return 0.0;
                    }
                    let fv: C64 = values.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
                    let gy = space.norm_grad(&yv).expect("shape");
                    // -Re f(y) / |y|
                    let g_lin = values.map(|z| z.conj()).unscale(ny);
                    let g_norm = (b.adjoint() * gy).scale(fv.re / (ny * ny));
                    pack_into(&(-(g_lin - g_norm)), g);
                    -fv.re / ny
                },
                pack(&c0),
                LbfgsOptions { max_iter: 1000, rel_tol: 1e-15, memory: 10 },
            );
            -res.value
        })
        .reduce(|| 0.0, f64::max)
}

/// Sample pairs of functionals on `Y` and measure the additivity defect of
/// the Hahn-Banach extension operator.
pub fn hb_linearity_probe(y: &Subspace, trials: usize, seed: u64) -> Result<Certificate> {
    require_smooth(y.ambient(), "Hahn-Banach extension")?;
    let k = y.dim();
    if k < 2 {
        return Err(Error::Refused("linearity probe needs dim Y >= 2".into()));
    }
    let dual = y.ambient().dual()?;
    let samples: Vec<(CVec, CVec, C64)> = {
        let mut r = rng(seed);
        (0..trials)
            .map(|_| {
                let a = gaussian_vec(k, &mut r);
                let b = gaussian_vec(k, &mut r);
                let s = gaussian_vec(1, &mut r)[0];
                (a, b, s)
            })
            .collect()
    };
    let defects: Vec<Result<f64>> = samples
        .par_iter()
        .map(|(a, b, s)| hb_defect(y, &dual, a, b, *s))
        .collect();
    let mut worst = (0usize, -1.0);
    for (i, d) in defects.into_iter().enumerate() {
        let d = d?;
        if d > worst.1 {
            worst = (i, d);
        }
    }
    let verdict = linearity_verdict(worst.1, 1e-8, 1e-5);
    let (a, b, s) = &samples[worst.0];
    let mut cert = Certificate::new(verdict, worst.1, seed, trials).with_note("worst_trial", worst.0 as f64);
    cert.witnesses = vec![a.clone(), b.clone(), CVec::from_element(1, *s)];
    Ok(cert)
}

/// `|Psi(s a + b) - s Psi(a) - Psi(b)|` in the dual norm.
pub fn hb_defect(y: &Subspace, dual: &Space, a: &CVec, b: &CVec, s: C64) -> Result<f64> {
    let fa = hahn_banach_extend(y, a)?;
    let fb = hahn_banach_extend(y, b)?;
    let fab = hahn_banach_extend(y, &(a * s + b))?;
    let d = fab.coeffs - fa.coeffs * s - fb.coeffs;
    dual.norm(&d)
}

/// `T_*(x) = J^-1(T^x f_x)`; `T` acts from `domain` to `codomain`, `x` lives
/// in the codomain and the result in the domain.
pub fn star_adjoint_eval(t: &Operator, x: &CVec) -> Result<CVec> {
    require_smooth(t.domain(), "T_*")?;
    require_smooth(t.codomain(), "T_*")?;
    check_len(t.codomain().dim(), x.len())?;
    let fx = duality_map(t.codomain(), x);
    let g = t.entries().transpose() * fx;
    inverse_duality_map(t.domain(), &g)
}

/// Additivity defect of `T_*` on sampled unit pairs.
pub fn star_linearity_probe(t: &Operator, trials: usize, seed: u64) -> Result<Certificate> {
    require_smooth(t.domain(), "T_*")?;
    require_smooth(t.codomain(), "T_*")?;
    let cod = t.codomain();
    let pairs: Vec<(CVec, CVec)> = {
        let mut r = rng(seed);
        (0..trials).map(|_| (cod.random_unit_with(&mut r), cod.random_unit_with(&mut r))).collect()
    };
    let defects: Vec<f64> = pairs
        .par_iter()
        .map(|(u, v)| star_defect(t, u, v).expect("shapes checked"))
        .collect();
    let mut worst = (0usize, -1.0);
    for (i, d) in defects.iter().enumerate() {
        if *d > worst.1 {
            worst = (i, *d);
        }
    }
    let (u, v) = &pairs[worst.0];
    let mut cert = Certificate::new(linearity_verdict(worst.1, 1e-8, 1e-5), worst.1, seed, trials)
        .with_note("worst_trial", worst.0 as f64);
    cert.witnesses = vec![u.clone(), v.clone()];
    Ok(cert)
}

/// `|T_*(u + v) - T_* u - T_* v|`.
pub fn star_defect(t: &Operator, u: &CVec, v: &CVec) -> Result<f64> {
    let d = star_adjoint_eval(t, &(u + v))? - star_adjoint_eval(t, u)? - star_adjoint_eval(t, v)?;
    t.domain().norm(&d)
}

/// Rank-one operator `z -> scale * f_x(z) * y` on `space`.
pub fn rank_one(space: &Space, x: &CVec, y: &CVec, scale: C64) -> Result<Operator> {
    let fx = support_functional(space, x, false)?;
    let a = crate::operators::Annotation::RankOne { functional: fx.coeffs, vector: y.clone(), scale };
    Operator::from_annotation(space.clone(), space.clone(), a)
}

/// Coefficients of a basis in matrix form, used by callers building `Y`.
pub fn basis_matrix(vs: &[CVec]) -> CMat {
    CMat::from_columns(vs)
}
