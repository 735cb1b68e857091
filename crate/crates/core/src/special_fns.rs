//! Special-function kernels: Lambert W, Bessel J and I, Poisson tails and
//! the Chebyshev expansion of a shifted exponential.
//!
//! Everything here is a pure function of its arguments.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const INV_E: f64 = 0.367_879_441_171_442_33;

/// Principal branch of the Lambert W function (`w >= -1`).
pub fn lambert_w(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - 1e-15 {
        return Err(Error::Domain(format!(
            "lambert_w requires x >= -1/e, got {x}"
        )));
    }
    if x <= -INV_E {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = initial_guess(x);
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    if w.is_finite() && w >= -1.0 && (w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1e-300) {
        return Ok(w);
    }
    Ok(lambert_w_bisect(x))
}

fn initial_guess(x: f64) -> f64 {
    if x > std::f64::consts::E {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    } else if x > -0.25 {
        let l = (1.0 + x).ln();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    }
}

/// Bisection on `w e^w - x` over the principal branch; always converges.
pub fn lambert_w_bisect(x: f64) -> f64 {
    let mut lo = -1.0_f64;
    let mut hi = if x <= std::f64::consts::E {
        1.0
    } else {
        x.ln().max(1.0)
    };
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn series_leading(order: usize, half: f64) -> f64 {
    let mut t = 1.0;
    for j in 1..=order {
        t *= half / j as f64;
    }
    t
}

fn bessel_j_series(k: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = series_leading(k, half);
    let mut sum = term;
    for m in 1..500 {
        term *= q / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_i_series(k: usize, a: f64) -> f64 {
    let half = 0.5 * a;
    let q = half * half;
    let mut term = series_leading(k, half);
    let mut sum = term;
    for m in 1..2000 {
        term *= q / (m as f64 * (m + k) as f64);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

fn miller_start(top: usize, x: f64, extra: f64) -> usize {
    let m = (top as f64).max(x);
    let n = (m + 30.0 + extra).ceil() as usize;
    n + (n % 2)
}

/// `J_0(x) .. J_kmax(x)` by Miller backward recurrence, normalized with
/// `J_0 + 2 sum J_2m = 1`. Requires `x > 0`.
fn bessel_j_miller(kmax: usize, x: f64) -> Vec<f64> {
    let m = (kmax as f64).max(x);
    let n = miller_start(kmax, x, 12.0 * m.cbrt() + 20.0);
    let mut out = vec![0.0; kmax + 1];
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut norm = 0.0_f64;
    for order in (0..=n).rev() {
        if order <= kmax {
            out[order] = j;
        }
        if order % 2 == 0 {
            norm += if order == 0 { j } else { 2.0 * j };
        }
        if order == 0 {
            break;
        }
        let jm1 = 2.0 * order as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `e^{-a} I_0(a) .. e^{-a} I_kmax(a)` by backward recurrence normalized with
/// `I_0 + 2 sum_{k>=1} I_k = e^a`. Requires `a > 0`.
fn bessel_i_scaled_miller(kmax: usize, a: f64) -> Vec<f64> {
    let n = miller_start(kmax, 0.0, (100.0 * a).sqrt() + 10.0);
    let mut out = vec![0.0; kmax + 1];
    let mut ip1 = 0.0_f64;
    let mut i = 1e-300_f64;
    let mut norm = 0.0_f64;
    for order in (0..=n).rev() {
        if order <= kmax {
            out[order] = i;
        }
        norm += if order == 0 { i } else { 2.0 * i };
        if order == 0 {
            break;
        }
        let im1 = 2.0 * order as f64 / a * i + ip1;
        ip1 = i;
        i = im1;
        if i > 1e250 {
            let s = 1e-250;
            i *= s;
            ip1 *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Bessel function of the first kind `J_k(x)`.
pub fn bessel_j(k: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let v = bessel_j(k, -x);
        return if k % 2 == 1 { -v } else { v };
    }
    if x <= 2.0 || x * x <= 4.0 * (k as f64 + 1.0) {
        bessel_j_series(k, x)
    } else {
        bessel_j_miller(k, x)[k]
    }
}

/// `J_0(x) .. J_kmax(x)` in one pass.
pub fn bessel_j_all(kmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    if x < 0.0 {
        return bessel_j_all(kmax, -x)
            .into_iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 1 { -v } else { v })
            .collect();
    }
    if x <= 2.0 {
        return (0..=kmax).map(|k| bessel_j_series(k, x)).collect();
    }
    bessel_j_miller(kmax, x)
}

/// Exponentially scaled modified Bessel function `e^{-a} I_k(a)`, `a >= 0`.
pub fn bessel_i_scaled(k: usize, a: f64) -> Result<f64> {
    Ok(bessel_i_scaled_all(k, a)?[k])
}

/// `e^{-a} I_0(a) .. e^{-a} I_kmax(a)`.
pub fn bessel_i_scaled_all(kmax: usize, a: f64) -> Result<Vec<f64>> {
    if a.is_nan() || a < 0.0 {
        return Err(Error::Domain(format!("bessel_i requires a >= 0, got {a}")));
    }
    if a == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    if a <= 30.0 {
        let s = (-a).exp();
        return Ok((0..=kmax).map(|k| s * bessel_i_series(k, a)).collect());
    }
    Ok(bessel_i_scaled_miller(kmax, a))
}

/// Modified Bessel function of the first kind `I_k(a)`, `a >= 0`.
pub fn bessel_i(k: usize, a: f64) -> Result<f64> {
    if a.is_nan() || a < 0.0 {
        return Err(Error::Domain(format!("bessel_i requires a >= 0, got {a}")));
    }
    if a <= 30.0 {
        return Ok(bessel_i_series(k, a));
    }
    let v = bessel_i_scaled(k, a)? * a.exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("I_{k}({a})")));
    }
    Ok(v)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

fn poisson_log_pmf(k: usize, lam: f64) -> f64 {
    -lam + k as f64 * lam.ln() - ln_factorial(k)
}

/// `P(N <= m)` for `N ~ Poisson(lam)`, by direct summation of the pmf.
pub fn poisson_cdf(m: usize, lam: f64) -> f64 {
    1.0 - poisson_tail(m, lam)
}

/// Exceedance probability `P(N > m) = 1 - sum_{k<=m} e^{-lam} lam^k / k!`.
///
/// This is the regularized lower incomplete gamma `P(m+1, lam)`.
/// Whichever side is smaller is summed directly, so no cancellation occurs.
pub fn poisson_tail(m: usize, lam: f64) -> f64 {
    if lam <= 0.0 {
        return 0.0;
    }
    if (m as f64) + 1.0 > lam {
        // terms k > m decrease monotonically
        let mut k = m + 1;
        let mut term = poisson_log_pmf(k, lam).exp();
        let mut sum = 0.0;
        while term > 0.0 {
            sum += term;
            k += 1;
            term *= lam / k as f64;
            if term <= 1e-18 * sum {
                break;
            }
        }
        sum.min(1.0)
    } else {
        // terms k <= m increase with k; sum downward from m
        let mut term = poisson_log_pmf(m, lam).exp();
        let mut sum = 0.0;
        let mut k = m;
        loop {
            sum += term;
            if k == 0 || term <= 1e-18 * sum {
                break;
            }
            term *= k as f64 / lam;
            k -= 1;
        }
        (1.0 - sum).clamp(0.0, 1.0)
    }
}

/// Chebyshev expansion of `e^{a(x-1)}` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    pub a: f64,
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    /// Evaluate `sum_k b_k T_k(x)` by Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        match self.coeffs.first() {
            Some(&c0) => x * b1 - b2 + c0,
            None => 0.0,
        }
    }

    /// Partial sum truncated at degree `d`.
    pub fn truncated(&self, d: usize) -> ChebSeries {
        ChebSeries {
            a: self.a,
            coeffs: self.coeffs[..(d + 1).min(self.coeffs.len())].to_vec(),
        }
    }
}

/// Coefficients `b_0 = e^{-a} I_0(a)`, `b_k = 2 e^{-a} I_k(a)`.
pub fn cheb_exp_coeffs(a: f64, kmax: usize) -> Result<ChebSeries> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "cheb_exp_coeffs requires a > 0, got {a}"
        )));
    }
    let mut coeffs = bessel_i_scaled_all(kmax, a)?;
    for c in coeffs.iter_mut().skip(1) {
        *c *= 2.0;
    }
    Ok(ChebSeries { a, coeffs })
}
