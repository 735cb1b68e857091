//! Degree and query-count calculators.
//!
//! Natural logarithms throughout. Integer degrees are always found by an
//! upward search against the defining inequality, never by rounding a
//! real-valued formula.

use crate::error::{Error, Result};
use crate::special_fns::{bessel_j_all, cheb_exp_coeffs, lambert_w, poisson_tail};
use serde::{Deserialize, Serialize};

/// Decay exponent `c` of `f_c(x) = e^{c(x-1)}` and tolerance `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub c: f64,
    pub eps: f64,
}

impl BoundInputs {
    pub fn new(c: f64, eps: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Domain(format!("c must be positive, got {c}")));
        }
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain(format!(
                "eps must lie in (0, 1/2), got {eps}"
            )));
        }
        Ok(BoundInputs { c, eps })
    }

    /// Half-width parameter `a = c/2` of the Chebyshev variable.
    pub fn a(&self) -> f64 {
        0.5 * self.c
    }
}

/// Query budget split between the Hermitian (R) and anti-Hermitian (I) oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeBudget {
    pub d_r: usize,
    pub d_i: usize,
    pub eta: f64,
    pub q: usize,
    pub q_lower: f64,
}

/// Asymptotic lower bound `floor(L''/W(2L''/(e a))) - 1`.
pub fn degree_lower_bound(inp: BoundInputs) -> Result<i64> {
    let a = inp.a();
    let l = (1.0 / inp.eps).ln();
    let base = l - a - (2.0 * std::f64::consts::E / std::f64::consts::PI).ln();
    if base <= 0.0 {
        return Err(Error::Domain(format!(
            "eps = {} too large for the asymptotic bound",
            inp.eps
        )));
    }
    let lpp = base - 0.5 * base.ln();
    if lpp <= 0.0 {
        return Err(Error::Domain(format!(
            "eps = {} too large for the asymptotic bound",
            inp.eps
        )));
    }
    let w = lambert_w(2.0 * lpp / (std::f64::consts::E * a))?;
    Ok((lpp / w).floor() as i64 - 1)
}

/// Chebyshev coefficients of `e^{a(t-1)}` extended until they drop four
/// decades below `eps` (and past the peak region).
fn cheb_coeffs_to_tolerance(a: f64, eps: f64) -> Result<Vec<f64>> {
    let mut kmax = 32usize.max((4.0 * a.sqrt() + a.min(50.0)) as usize);
    loop {
        let s = cheb_exp_coeffs(a, kmax)?;
        let last = *s.coeffs.last().unwrap_or(&0.0);
        if last < eps * 1e-4 || kmax > 100_000 {
            return Ok(s.coeffs);
        }
        kmax *= 2;
    }
}

/// Smallest `d` whose tail sum over `terms[d+1..]` is at most `eps`.
fn first_tail_below(terms: &[f64], eps: f64, cutoff: f64) -> usize {
    let mut tail = 0.0;
    let mut tails = vec![0.0; terms.len()];
    for k in (0..terms.len()).rev() {
        tails[k] = tail;
        if terms[k].abs() >= cutoff {
            tail += terms[k].abs();
        }
    }
    tails.iter().position(|&t| t <= eps).unwrap_or(terms.len())
}

/// Upper bound: smallest `d` with `2 e^{-a} sum_{k>d} I_k(a) <= eps`.
pub fn degree_upper_bound(inp: BoundInputs) -> Result<usize> {
    let b = cheb_coeffs_to_tolerance(inp.a(), inp.eps)?;
    Ok(first_tail_below(&b, inp.eps, inp.eps * 1e-4))
}

/// Independent check: smallest `d` whose Chebyshev partial sum has sup-norm
/// error at most `eps` on a 2001-point grid of `[-1, 1]`.
pub fn oracle_min_degree(inp: BoundInputs) -> Result<usize> {
    const CAP: usize = 200;
    let a = inp.a();
    let series = cheb_exp_coeffs(a, CAP + 40)?;
    let grid: Vec<f64> = (0..2001).map(|i| -1.0 + 2.0 * i as f64 / 2000.0).collect();
    let exact: Vec<f64> = grid.iter().map(|&t| (a * (t - 1.0)).exp()).collect();
    for d in 0..=CAP {
        let s = series.truncated(d);
        let err = grid
            .iter()
            .zip(&exact)
            .map(|(&t, &f)| (s.eval(t) - f).abs())
            .fold(0.0, f64::max);
        if err <= inp.eps {
            return Ok(d);
        }
    }
    Err(Error::CapExceeded(CAP))
}

/// Smallest `d` with `2 sum_{k>d} |J_k(alphaT)| <= eps_r`.
pub fn jacobi_anger_degree(alpha_t: f64, eps_r: f64) -> usize {
    if alpha_t == 0.0 {
        return 0;
    }
    let x = alpha_t.abs();
    let mut kmax = (x + 40.0 + 15.0 * x.cbrt()) as usize;
    loop {
        let j = bessel_j_all(kmax, x);
        let terms: Vec<f64> = j.iter().map(|v| 2.0 * v.abs()).collect();
        if terms[kmax] < eps_r * 1e-4 || kmax > 200_000 {
            return first_tail_below(&terms, eps_r, eps_r * 1e-4);
        }
        kmax *= 2;
    }
}

/// Smallest `M` with `betaT^{M+1}/(M+1)! <= eps_i`.
pub fn taylor_degree(beta_t: f64, eps_i: f64) -> usize {
    if beta_t == 0.0 {
        return 0;
    }
    let ln_b = beta_t.ln();
    let ln_eps = eps_i.ln();
    let mut ln_term = ln_b; // M = 0: beta^1 / 1!
    let mut m = 0usize;
    while ln_term > ln_eps {
        m += 1;
        ln_term += ln_b - ((m + 1) as f64).ln();
    }
    m
}

/// Closed-form leading-order split `log L / (1 + log L)`, `L = log(1/eps)`.
pub fn eta_closed_form(eps: f64) -> f64 {
    let ll = (1.0 / eps).ln().ln();
    ll / (1.0 + ll)
}

/// Total query count `d_R(alphaT, eta eps) + d_I(betaT, (1 - eta) eps)`.
pub fn split_query_count(alpha_t: f64, beta_t: f64, eps: f64, eta: f64) -> (usize, usize) {
    (
        jacobi_anger_degree(alpha_t, eta * eps),
        taylor_degree(beta_t, (1.0 - eta) * eps),
    )
}

/// Error split minimizing the total integer query count.
///
/// Golden-section search on `Q(eta)`; comparisons that tie move toward the
/// larger `eta`. The integer objective has plateaus and unit-size ripples, so
/// the result is checked against a 0.01-spaced scan and replaced by the
/// largest scanned `eta` attaining a strictly smaller count, if any.
pub fn optimal_eta(alpha_t: f64, beta_t: f64, eps: f64) -> f64 {
    let q = |eta: f64| {
        let (r, i) = split_query_count(alpha_t, beta_t, eps, eta);
        r + i
    };
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.01_f64, 0.99_f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = q(x1);
    let mut f2 = q(x2);
    while hi - lo > 1e-6 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = q(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = q(x2);
        }
    }
    let mut best_eta = 0.5 * (lo + hi);
    let mut best_q = q(best_eta);
    for k in 1..100 {
        let eta = k as f64 / 100.0;
        let v = q(eta);
        if v < best_q {
            best_q = v;
            best_eta = eta;
        }
    }
    best_eta
}

/// Information-theoretic reference `(alphaT + betaT) + L/log L`.
pub fn query_lower_reference(alpha_t: f64, beta_t: f64, eps: f64) -> f64 {
    let l = (1.0 / eps).ln();
    alpha_t + beta_t + l / l.ln()
}

/// Optimized M-QSP query count at the optimal split.
pub fn mqsp_query_count(alpha_t: f64, beta_t: f64, eps: f64) -> DegreeBudget {
    let eta = optimal_eta(alpha_t, beta_t, eps);
    let (d_r, d_i) = split_query_count(alpha_t, beta_t, eps, eta);
    DegreeBudget {
        d_r,
        d_i,
        eta,
        q: d_r + d_i,
        q_lower: query_lower_reference(alpha_t, beta_t, eps),
    }
}

/// Segmented Dyson LCU: `r = ceil(betaT)` segments, each with budget `eps/r`
/// for both its Jacobi-Anger and Taylor factors.
pub fn lcu_query_count(alpha_t: f64, beta_t: f64, eps: f64) -> usize {
    let r = (beta_t.ceil() as usize).max(1);
    let rf = r as f64;
    let seg = jacobi_anger_degree(alpha_t / rf, eps / rf) + taylor_degree(beta_t / rf, eps / rf);
    r * seg
}

/// Default prefactor of the LCHS estimate.
pub const LCHS_C: f64 = 1.0;
/// Default polylog exponent of the LCHS estimate, calibrated so that the
/// ratio at `(10, 10, 1e-3)` is 5.8.
pub const LCHS_P: f64 = 1.362;

/// LCHS estimate `ceil(C (alphaT + betaT) log(1/eps)^p)`.
pub fn lchs_query_estimate(alpha_t: f64, beta_t: f64, eps: f64, c: f64, p: f64) -> Result<usize> {
    if !(c > 0.0) || !(p >= 1.0) {
        return Err(Error::Domain(format!(
            "LCHS estimate needs C > 0 and p >= 1, got C = {c}, p = {p}"
        )));
    }
    Ok((c * (alpha_t + beta_t) * (1.0 / eps).ln().powf(p)).ceil() as usize)
}

/// Exponent `p` for which the LCHS/M-QSP ratio at `(alphaT, betaT, eps)` equals `ratio`.
pub fn calibrate_lchs_exponent(alpha_t: f64, beta_t: f64, eps: f64, c: f64, ratio: f64) -> f64 {
    let q = mqsp_query_count(alpha_t, beta_t, eps).q as f64;
    (ratio * q / (c * (alpha_t + beta_t))).ln() / (1.0 / eps).ln().ln()
}

/// Truncation order `M` of the state-dependent Taylor series: smallest `M`
/// with Poisson exceedance `P(N > M) <= eps` at rate `beta_eff T`.
pub fn state_dependent_order(beta_eff: f64, t: f64, eps: f64) -> usize {
    let lam = beta_eff * t;
    let mut m = 0usize;
    while poisson_tail(m, lam) > eps {
        m += 1;
    }
    m
}

/// One row of the method comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub alpha_t: f64,
    pub beta_t: f64,
    pub eps: f64,
    pub q_mqsp: usize,
    pub q_lcu: usize,
    pub ratio_lcu: f64,
    pub q_lchs: usize,
    pub ratio_lchs: f64,
    pub q_lower: f64,
}

pub fn compare(
    alpha_t: f64,
    beta_t: f64,
    eps: f64,
    lchs_c: f64,
    lchs_p: f64,
) -> Result<ComparisonRow> {
    let m = mqsp_query_count(alpha_t, beta_t, eps);
    let q_lcu = lcu_query_count(alpha_t, beta_t, eps);
    let q_lchs = lchs_query_estimate(alpha_t, beta_t, eps, lchs_c, lchs_p)?;
    Ok(ComparisonRow {
        alpha_t,
        beta_t,
        eps,
        q_mqsp: m.q,
        q_lcu,
        ratio_lcu: q_lcu as f64 / m.q as f64,
        q_lchs,
        ratio_lchs: q_lchs as f64 / m.q as f64,
        q_lower: m.q_lower,
    })
}

/// The six `(alphaT, betaT, eps)` points of the method-comparison table.
pub const COMPARISON_GRID: [(f64, f64, f64); 6] = [
    (10.0, 10.0, 1e-3),
    (10.0, 10.0, 1e-6),
    (10.0, 10.0, 1e-10),
    (10.0, 50.0, 1e-3),
    (10.0, 50.0, 1e-6),
    (10.0, 50.0, 1e-10),
];
