//! Limited-memory BFGS with a strong-Wolfe line search.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Stop when the max-abs gradient entry falls below this value.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Stop as soon as the objective drops below this value.
    pub f_target: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            grad_tol: 1e-12,
            max_iters: 5000,
            f_target: f64::NEG_INFINITY,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    GradientTolerance,
    TargetReached,
    MaxIterations,
    /// No step satisfying the Wolfe conditions could be found (typically
    /// the objective is flat to rounding).
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iters: usize,
    pub evals: usize,
    pub status: Status,
}

impl LbfgsResult {
    pub fn grad_inf_norm(&self) -> f64 {
        inf_norm(&self.grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

struct Probe {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dg: f64,
}

/// Minimizer of the cubic interpolating `(a, fa, da)` and `(b, fb, db)`,
/// safeguarded into the interior of the bracket.
fn cubic_step(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mid = 0.5 * (a + b);
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    let w = hi - lo;
    if !t.is_finite() || t <= lo + 0.1 * w || t >= hi - 0.1 * w {
        mid
    } else {
        t
    }
}

fn line_search<F>(
    fg: &mut F,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    dir: &[f64],
    alpha0: f64,
    o: &LbfgsOptions,
    evals: &mut usize,
) -> Option<Probe>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let d0 = dot(g0, dir);
    if d0 >= 0.0 {
        return None;
    }
    let mut eval = |a: f64, evals: &mut usize| {
        *evals += 1;
        let (f, g) = fg(&axpy(x, a, dir));
        let dg = dot(&g, dir);
        Probe { alpha: a, f, g, dg }
    };
    let mut prev = Probe {
        alpha: 0.0,
        f: f0,
        g: g0.to_vec(),
        dg: d0,
    };
    let mut alpha = alpha0;
    for i in 0..40 {
        let cur = eval(alpha, evals);
        if !cur.f.is_finite() {
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if cur.f > f0 + o.c1 * alpha * d0 || (i > 0 && cur.f >= prev.f) {
            return zoom(&mut eval, prev, cur, f0, d0, o, evals);
        }
        if cur.dg.abs() <= -o.c2 * d0 {
            return Some(cur);
        }
        if cur.dg >= 0.0 {
            return zoom(&mut eval, cur, prev, f0, d0, o, evals);
        }
        let next = (2.0 * alpha).min(alpha + 1e3 * (alpha - prev.alpha).max(1e-300));
        prev = cur;
        alpha = next;
    }
    None
}

fn zoom<E>(
    eval: &mut E,
    mut lo: Probe,
    mut hi: Probe,
    f0: f64,
    d0: f64,
    o: &LbfgsOptions,
    evals: &mut usize,
) -> Option<Probe>
where
    E: FnMut(f64, &mut usize) -> Probe,
{
    for _ in 0..60 {
        let a = cubic_step(lo.alpha, lo.f, lo.dg, hi.alpha, hi.f, hi.dg);
        if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1e-300) {
            break;
        }
        let cur = eval(a, evals);
        if cur.f > f0 + o.c1 * a * d0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.dg.abs() <= -o.c2 * d0 {
                return Some(cur);
            }
            if cur.dg * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // accept the best sufficient-decrease point found, if any
    if lo.alpha > 0.0 && lo.f < f0 {
        Some(lo)
    } else {
        None
    }
}

/// Minimize `fg(x) -> (f, ∇f)` from `x0`.
pub fn minimize<F>(mut fg: F, x0: &[f64], o: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    let mut evals = 1usize;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(o.memory);
    let mut iters = 0usize;
    let status = loop {
        if f < o.f_target {
            break Status::TargetReached;
        }
        if inf_norm(&g) <= o.grad_tol {
            break Status::GradientTolerance;
        }
        if iters >= o.max_iters {
            break Status::MaxIterations;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match hist.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / inf_norm(&g).max(1.0),
        };
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&dir, &g) >= 0.0 {
            hist.clear();
            dir = g.iter().map(|v| -v / inf_norm(&g).max(1.0)).collect();
        }
        let probe = match line_search(&mut fg, &x, f, &g, &dir, 1.0, o, &mut evals) {
            Some(p) => p,
            None => {
                if hist.is_empty() {
                    break Status::LineSearchStalled;
                }
                hist.clear();
                iters += 1;
                continue;
            }
        };
        let x_new = axpy(&x, probe.alpha, &dir);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = probe.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == o.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let improved = probe.f < f;
        x = x_new;
        f = probe.f;
        g = probe.g;
        iters += 1;
        if !improved {
            break Status::LineSearchStalled;
        }
    };
    LbfgsResult {
        x,
        f,
        grad: g,
        iters,
        evals,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g)
        };
        let r = minimize(fg, &[-1.2, 1.0], &LbfgsOptions::default());
        assert!(
            (r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8,
            "{r:?}"
        );
    }

    #[test]
    fn quadratic_exact() {
        let diag = [1.0, 10.0, 100.0, 1000.0];
        let fg = |x: &[f64]| {
            let f = x.iter().zip(&diag).map(|(v, d)| 0.5 * d * v * v).sum();
            let g = x.iter().zip(&diag).map(|(v, d)| d * v).collect();
            (f, g)
        };
        let r = minimize(fg, &[1.0, 1.0, 1.0, 1.0], &LbfgsOptions::default());
        assert!(r.f < 1e-20, "{r:?}");
    }
}
