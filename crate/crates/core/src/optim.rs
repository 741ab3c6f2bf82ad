//! Small deterministic optimizers: limited-memory BFGS with backtracking for
//! smooth objectives, and a compass search for two-parameter convex problems.

use crate::{CVec, C64};

#[derive(Clone, Copy, Debug)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { max_iter: 500, rel_tol: 1e-12, memory: 10 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f`, which writes its gradient into the second argument and
/// returns the value. Nonsmooth objectives are tolerated: the line search
/// simply stops making progress and the best point is returned.
pub fn lbfgs<F>(mut f: F, x0: Vec<f64>, opts: LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    if n == 0 || !fx.is_finite() {
        return Minimum { x, value: fx, iterations: 0 };
    }
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut small_steps = 0;
    let mut iterations = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let gnorm = dot(&g, &g).sqrt();
        if gnorm == 0.0 {
            break;
        }
        // Two-loop recursion.
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dot(&s_hist[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        if m > 0 {
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            d.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / gnorm.max(1e-300);
            let xs = dot(&x, &x).sqrt().max(1.0);
            d.iter_mut().for_each(|v| *v *= scale * 0.1 * xs);
        }
        for i in 0..m {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            let scale = 0.1 * dot(&x, &x).sqrt().max(1.0) / gnorm;
            d = g.iter().map(|v| -v * scale).collect();
            slope = dot(&g, &d);
        }

        // Backtracking with Armijo condition.
        let mut t = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..50 {
            for i in 0..n {
                x_new[i] = x[i] + t * d[i];
            }
            f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if s_hist.is_empty() {
                break;
            }
            // Retry once along steepest descent before giving up.
            s_hist.clear();
            y_hist.clear();
            continue;
        }
        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let decrease = fx - f_new;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if decrease <= opts.rel_tol * fx.abs().max(1e-300) {
            small_steps += 1;
            if small_steps >= 3 {
                break;
            }
        } else {
            small_steps = 0;
        }
    }
    Minimum { x, value: fx, iterations }
}

/// Compass search over the plane with eight directions and step halving.
/// Returns the best point and value.
pub fn compass_2d<F>(mut f: F, start: (f64, f64), step: f64, min_step: f64) -> ((f64, f64), f64)
where
    F: FnMut(f64, f64) -> f64,
{
    let dirs: [(f64, f64); 8] = {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (r, r), (-r, -r), (r, -r), (-r, r)]
    };
    let mut p = start;
    let mut fp = f(p.0, p.1);
    let mut h = step;
    let mut evals = 0usize;
    while h > min_step && evals < 20_000 {
        let mut improved = false;
        for &(dx, dy) in &dirs {
            let q = (p.0 + h * dx, p.1 + h * dy);
            let fq = f(q.0, q.1);
            evals += 1;
            if fq < fp {
                p = q;
                fp = fq;
                improved = true;
                break;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (p, fp)
}

/// Real view of a complex vector: real parts then imaginary parts.
pub fn pack(v: &CVec) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        out[i] = v[i].re;
        out[n + i] = v[i].im;
    }
    out
}

pub fn unpack(x: &[f64]) -> CVec {
    let n = x.len() / 2;
    CVec::from_fn(n, |i, _| C64::new(x[i], x[n + i]))
}

/// Write a complex gradient (real-gradient convention, `df = Re <g, dx>`)
/// into its packed real form.
pub fn pack_into(g: &CVec, out: &mut [f64]) {
    let n = g.len();
    for i in 0..n {
        out[i] = g[i].re;
        out[n + i] = g[i].im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_solves_quadratic() {
        let m = lbfgs(
            |x, g| {
                g[0] = 2.0 * (x[0] - 1.0);
                g[1] = 20.0 * (x[1] + 2.0);
                (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2)
            },
            vec![5.0, 5.0],
            LbfgsOptions::default(),
        );
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] + 2.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn lbfgs_handles_rosenbrock() {
        let m = lbfgs(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            vec![-1.2, 1.0],
            LbfgsOptions { max_iter: 2000, ..Default::default() },
        );
        assert!(m.value < 1e-10, "{}", m.value);
    }

    #[test]
    fn compass_finds_kink_minimum() {
        let ((x, y), v) = compass_2d(|x, y| (x - 0.3).abs() + (y + 0.2).abs(), (0.0, 0.0), 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-9 && (y + 0.2).abs() < 1e-9 && v < 1e-9);
    }

    #[test]
    fn pack_roundtrip() {
        let v = CVec::from_vec(vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.5)]);
        assert_eq!(unpack(&pack(&v)), v);
    }
}
