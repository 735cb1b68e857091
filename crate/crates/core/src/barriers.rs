//! Postselection-barrier diagnostics for `H_eff = H_R + i H_I`: random
//! ensembles, spectral abscissa, propagator norms, defect operators,
//! Kreiss and pseudospectral quantities, gap predictors and the Padé
//! torus bound.

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, eigenvalues, expm, frobenius, hermitian_eigen, identity, op_norm, sigma_min, CMat,
};
use crate::seeds::{self, rng_for};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative threshold for counting defect eigenvalues as nonzero.
pub const DEFECT_RANK_TOL: f64 = 1e-9;
/// Eigenvalues of `H_I` within this distance of `β_I` span the top eigenspace.
pub const TOP_EIGENSPACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianPair {
    pub h_r: CMat,
    pub h_i: CMat,
    pub alpha_r: f64,
    pub beta_i: f64,
}

fn is_hermitian(a: &CMat, tol: f64) -> bool {
    frobenius(&(a - a.adjoint())) <= tol
}

impl HamiltonianPair {
    /// Validates Hermiticity and `H_I ⪰ 0`, and records operator norms.
    pub fn new(h_r: CMat, h_i: CMat) -> Result<Self> {
        let n = h_r.nrows();
        if h_r.ncols() != n || h_i.nrows() != n || h_i.ncols() != n {
            return Err(Error::Domain(
                "H_R and H_I must be square of equal size".into(),
            ));
        }
        if !is_hermitian(&h_r, 1e-12) || !is_hermitian(&h_i, 1e-12) {
            return Err(Error::Domain("H_R and H_I must be Hermitian".into()));
        }
        let (ev, _) = hermitian_eigen(&h_i);
        if ev.first().is_some_and(|&v| v < -1e-12) {
            return Err(Error::Domain(format!(
                "H_I must be positive semidefinite (min eigenvalue {:e})",
                ev[0]
            )));
        }
        let alpha_r = op_norm(&h_r);
        let beta_i = ev.last().copied().unwrap_or(0.0).max(0.0);
        Ok(HamiltonianPair {
            h_r,
            h_i,
            alpha_r,
            beta_i,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_r.nrows()
    }

    pub fn h_eff(&self) -> CMat {
        &self.h_r + &self.h_i * C64::new(0.0, 1.0)
    }

    /// `A = -i H_eff`, the generator of the propagator.
    pub fn generator(&self) -> CMat {
        self.h_eff() * C64::new(0.0, -1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    GueWishart,
    Rank1,
    NearDiag,
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gue-wishart" => Ok(EnsembleKind::GueWishart),
            "rank1" => Ok(EnsembleKind::Rank1),
            "near-diag" => Ok(EnsembleKind::NearDiag),
            other => Err(Error::Domain(format!("unknown ensemble kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleKind::GueWishart => "gue-wishart",
            EnsembleKind::Rank1 => "rank1",
            EnsembleKind::NearDiag => "near-diag",
        })
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(n, n, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal) * s,
            rng.sample::<f64, _>(StandardNormal) * s,
        )
    })
}

fn hermitize(g: &CMat) -> CMat {
    (g + g.adjoint()) * C64::new(0.5, 0.0)
}

fn rescale(a: CMat) -> CMat {
    let nrm = op_norm(&a);
    a / C64::new(nrm, 0.0)
}

fn wishart<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = complex_gaussian(rng, n);
    rescale(hermitize(&(&a * a.adjoint())))
}

fn haar_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = DVector::from_fn(n, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal) * s,
            rng.sample::<f64, _>(StandardNormal) * s,
        )
    });
    let nrm = v.norm();
    v / C64::new(nrm, 0.0)
}

/// Draw a pair from `kind`; both operators are rescaled to operator norm 1.
/// For `near-diag`, `param` is the target `‖[H_R, H_I]‖_op`.
pub fn sample_pair<R: Rng + ?Sized>(
    kind: EnsembleKind,
    n: usize,
    param: f64,
    rng: &mut R,
) -> Result<HamiltonianPair> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "ensemble dimension must be at least 2, got {n}"
        )));
    }
    match kind {
        EnsembleKind::GueWishart => {
            let h_r = rescale(hermitize(&complex_gaussian(rng, n)));
            let h_i = wishart(rng, n);
            HamiltonianPair::new(h_r, h_i)
        }
        EnsembleKind::Rank1 => {
            let h_r = rescale(hermitize(&complex_gaussian(rng, n)));
            let v = haar_vector(rng, n);
            let h_i = &v * v.adjoint();
            HamiltonianPair::new(h_r, hermitize(&h_i))
        }
        EnsembleKind::NearDiag => near_diag_pair(n, param, rng),
    }
}

fn near_diag_pair<R: Rng + ?Sized>(n: usize, target: f64, rng: &mut R) -> Result<HamiltonianPair> {
    let d_r: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let h_r = rescale(CMat::from_diagonal(&DVector::from_iterator(
        n,
        d_r.iter().map(|&v| C64::new(v, 0.0)),
    )));
    let d_i: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let h_diag = rescale(CMat::from_diagonal(&DVector::from_iterator(
        n,
        d_i.iter().map(|&v| C64::new(v, 0.0)),
    )));
    let h_rand = wishart(rng, n);
    let blend = |lam: f64| {
        rescale(hermitize(
            &(&h_diag * C64::new(1.0 - lam, 0.0) + &h_rand * C64::new(lam, 0.0)),
        ))
    };
    let comm = |lam: f64| op_norm(&commutator(&h_r, &blend(lam)));
    // locate the first grid crossing, then bisect
    let grid: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&l| comm(l)).collect();
    let k = vals.iter().position(|&v| v >= target).ok_or_else(|| {
        Error::Tuning(format!(
            "commutator norm {target} unreachable; maximum over the blend is {:.4}",
            vals.iter().cloned().fold(0.0, f64::max)
        ))
    })?;
    if k == 0 {
        return HamiltonianPair::new(h_r, blend(0.0));
    }
    let (mut lo, mut hi) = (grid[k - 1], grid[k]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if comm(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    HamiltonianPair::new(h_r, blend(hi))
}

/// `max Im λ(H_R + i H_I)`.
pub fn spectral_abscissa(pair: &HamiltonianPair) -> Result<f64> {
    Ok(eigenvalues(&pair.h_eff())?
        .iter()
        .map(|z| z.im)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `e^{-i H_eff T}`.
pub fn propagator(pair: &HamiltonianPair, t: f64) -> Result<CMat> {
    if t < 0.0 {
        return Err(Error::Domain(format!("T must be nonnegative, got {t}")));
    }
    Ok(expm(&(pair.generator() * C64::new(t, 0.0))))
}

/// `e^{-i H_eff T} / e^{s}`, computed without forming the unscaled exponential.
pub fn scaled_propagator(pair: &HamiltonianPair, t: f64, log_scale: f64) -> Result<CMat> {
    if t < 0.0 {
        return Err(Error::Domain(format!("T must be nonnegative, got {t}")));
    }
    let n = pair.dim();
    Ok(expm(
        &(pair.generator() * C64::new(t, 0.0) - identity(n) * C64::new(log_scale, 0.0)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectResult {
    /// Smallest eigenvalue of `D = λ² I - U†U`.
    pub min_eig: f64,
    pub rank: usize,
    pub is_contraction: bool,
}

/// Defect operator of `U = e^{-i H_eff T}` at normalization `lam`.
///
/// Computed as `λ² (I - V†V)` with `V = U / λ`, so large `T` never overflows.
pub fn defect_check(pair: &HamiltonianPair, t: f64, lam: f64) -> Result<DefectResult> {
    if !(lam > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lam}")));
    }
    let v = scaled_propagator(pair, t, lam.ln())?;
    let d = identity(pair.dim()) - v.adjoint() * &v;
    let (ev, _) = hermitian_eigen(&hermitize(&d));
    let rank = ev.iter().filter(|&&e| e > DEFECT_RANK_TOL).count();
    let min_rel = ev.first().copied().unwrap_or(0.0);
    Ok(DefectResult {
        min_eig: min_rel * lam * lam,
        rank,
        is_contraction: min_rel >= -DEFECT_RANK_TOL,
    })
}

/// Smallest `λ` with `D ⪰ 0`, by bisection on [`defect_check`], reported
/// relative to `e^{β_I T}`.
pub fn minimal_contraction_ratio(pair: &HamiltonianPair, t: f64, rel_tol: f64) -> Result<f64> {
    let base = (pair.beta_i * t).exp();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // the Coppel bound makes `hi = 1` feasible; widen if rounding says otherwise
    while !defect_check(pair, t, hi * base)?.is_contraction {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && defect_check(pair, t, mid * base)?.is_contraction {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.log10(), b.log10());
    (0..n)
        .map(|k| 10f64.powf(la + (lb - la) * k as f64 / (n - 1) as f64))
        .collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Kreiss constant of the shifted generator `Ã = A - ω I`, `A = -i H_eff`:
/// `sup_{Re z > 0} Re z ‖(z I - Ã)^{-1}‖`.
///
/// Re z runs over 60 log-spaced points in `[1e-4, 1e2]`, Im z over 64
/// points spanning the spectrum plus the eigenvalue imaginary parts; one
/// local refinement follows around the best point.
pub fn kreiss_constant(pair: &HamiltonianPair) -> Result<f64> {
    let a = pair.generator();
    let n = pair.dim();
    let ev = eigenvalues(&a)?;
    let w = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let at = &a - identity(n) * C64::new(w, 0.0);
    let eye = identity(n);
    let value = |x: f64, y: f64| x / sigma_min(&(&eye * C64::new(x, y) - &at));
    let span = pair.alpha_r + pair.beta_i + 1.0;
    let xs = logspace(1e-4, 1e2, 60);
    let mut ys = linspace(-span, span, 64);
    ys.extend(ev.iter().map(|z| z.im));
    let mut best = (0.0, xs[0], ys[0]);
    for &x in &xs {
        for &y in &ys {
            let v = value(x, y);
            if v > best.0 {
                best = (v, x, y);
            }
        }
    }
    let ratio = (xs[1] / xs[0]).sqrt();
    let dy = 2.0 * span / 63.0;
    let (_, bx, by) = best;
    for &x in &logspace(bx / ratio, bx * ratio, 21) {
        for &y in &linspace(by - dy, by + dy, 21) {
            best.0 = best.0.max(value(x, y));
        }
    }
    Ok(best.0)
}

/// ε-pseudospectral abscissa of `A = -i H_eff`, normalized by `β_I`.
///
/// For each of 200 imaginary offsets (plus the eigenvalue imaginary
/// parts), Re z is scanned downward on 200 points from the numerical-range
/// bound `β_I + ε` to `ω - 1`; the first point with `σ_min(zI - A) ≤ ε`
/// is refined by bisection against its predecessor.
pub fn pseudo_abscissa(pair: &HamiltonianPair, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let a = pair.generator();
    let n = pair.dim();
    let ev = eigenvalues(&a)?;
    let w = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let eye = identity(n);
    let smin = |x: f64, y: f64| sigma_min(&(&eye * C64::new(x, y) - &a));
    let (ylo, yhi) = ev
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
            (lo.min(z.im), hi.max(z.im))
        });
    let mut ys = linspace(ylo - 1.0 - eps, yhi + 1.0 + eps, 200);
    ys.extend(ev.iter().map(|z| z.im));
    let top = pair.beta_i + eps;
    let xs = linspace(top, w - 1.0, 200);
    let mut best = w;
    for &y in &ys {
        let mut prev = None;
        for &x in &xs {
            if x <= best {
                break;
            }
            if smin(x, y) <= eps {
                let mut lo = x;
                if let Some(mut hi) = prev {
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        if smin(mid, y) <= eps {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                }
                best = best.max(lo);
                break;
            }
            prev = Some(x);
        }
    }
    Ok(best / pair.beta_i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predictors {
    /// `‖[H_R, Π_β]‖_op / ‖H_R‖_op`.
    pub projected_commutator: f64,
    /// `Σ_j p_j λ_j^R`.
    pub overlap_energy: f64,
    /// `‖[H_R, H_I]‖_F / (‖H_R‖_F ‖H_I‖_F)`.
    pub full_commutator: f64,
    /// `-Σ_j p_j ln p_j`.
    pub overlap_entropy: f64,
    /// `Σ_j p_j²`.
    pub participation: f64,
    /// The top eigenspace of `H_I` was degenerate.
    pub degenerate_top: bool,
}

impl Predictors {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.projected_commutator,
            self.overlap_energy,
            self.full_commutator,
            self.overlap_entropy,
            self.participation,
        ]
    }

    pub const NAMES: [&'static str; 5] = [
        "projected_commutator",
        "overlap_energy",
        "full_commutator",
        "overlap_entropy",
        "participation",
    ];
}

fn top_eigenspace(pair: &HamiltonianPair) -> (Vec<usize>, CMat) {
    let n = pair.dim();
    let (ev_i, vec_i) = hermitian_eigen(&pair.h_i);
    let beta = ev_i[n - 1];
    let top = (0..n)
        .filter(|&k| (beta - ev_i[k]).abs() <= TOP_EIGENSPACE_TOL)
        .collect();
    (top, vec_i)
}

/// Overlaps `p_j = |⟨ψ_j^R | φ_max^I⟩|²` over the eigenbasis of `H_R`
/// (ascending eigenvalues), with `φ_max^I` the first top eigenvector of `H_I`.
pub fn overlap_weights(pair: &HamiltonianPair) -> Vec<f64> {
    let (top, vec_i) = top_eigenspace(pair);
    let phi = vec_i.column(top[0]);
    let (_, vec_r) = hermitian_eigen(&pair.h_r);
    (0..pair.dim())
        .map(|j| vec_r.column(j).dotc(&phi).norm_sqr())
        .collect()
}

/// The five gap predictors, with `p_j` from [`overlap_weights`].
pub fn gap_predictors(pair: &HamiltonianPair) -> Predictors {
    let n = pair.dim();
    let (top, vec_i) = top_eigenspace(pair);
    let mut proj = CMat::zeros(n, n);
    for &k in &top {
        let v = vec_i.column(k);
        proj += v * v.adjoint();
    }
    let projected_commutator = op_norm(&commutator(&pair.h_r, &proj)) / op_norm(&pair.h_r);
    let (ev_r, _) = hermitian_eigen(&pair.h_r);
    let p = overlap_weights(pair);
    let overlap_energy = p.iter().zip(&ev_r).map(|(pj, lj)| pj * lj).sum();
    let full_commutator = frobenius(&commutator(&pair.h_r, &pair.h_i))
        / (frobenius(&pair.h_r) * frobenius(&pair.h_i));
    let overlap_entropy = -p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>();
    let participation = p.iter().map(|x| x * x).sum();
    Predictors {
        projected_commutator,
        overlap_energy,
        full_commutator,
        overlap_entropy,
        participation,
        degenerate_top: top.len() > 1,
    }
}

/// Ordinary least-squares `R²` of `ys` on `xs`.
pub fn regression_r2(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::Domain("regression needs at least 3 points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-300 * n {
        return Err(Error::Degenerate("predictor has zero variance".into()));
    }
    if syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// Largest eigenvalue of `H_I` whose eigenprojector overlaps `psi0` by more than `overlap_tol`.
pub fn beta_eff(h_i: &CMat, psi0: &DVector<C64>, overlap_tol: f64) -> Result<f64> {
    if (psi0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "initial state must be normalized, norm is {}",
            psi0.norm()
        )));
    }
    let (ev, vecs) = hermitian_eigen(h_i);
    let n = ev.len();
    // group numerically equal eigenvalues into one projector
    let mut k = n;
    while k > 0 {
        let lam = ev[k - 1];
        let mut j = k;
        let mut weight = 0.0;
        while j > 0 && (lam - ev[j - 1]).abs() <= TOP_EIGENSPACE_TOL * lam.abs().max(1.0) {
            weight += vecs.column(j - 1).dotc(psi0).norm_sqr();
            j -= 1;
        }
        if weight > overlap_tol {
            return Ok(lam);
        }
        k = j;
    }
    Err(Error::Degenerate(
        "initial state has no overlap above tolerance with any eigenspace".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadeReport {
    /// Numerator coefficients `p_0..p_m`.
    pub numerator: Vec<f64>,
    /// Denominator coefficients `q_0..q_n`, `q_0 = 1`.
    pub denominator: Vec<f64>,
    pub sup: f64,
    pub min_pole_modulus: f64,
}

/// `(m, n)` Padé approximant to `e^{cx}` from the linear system matching
/// Taylor coefficients through order `m + n`.
pub fn pade_coefficients(m: usize, n: usize, c: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let taylor: Vec<f64> = {
        let mut t = vec![1.0; m + n + 1];
        for k in 1..=m + n {
            t[k] = t[k - 1] * c / k as f64;
        }
        t
    };
    let tc = |k: isize| if k < 0 { 0.0 } else { taylor[k as usize] };
    let mut q = vec![1.0];
    if n > 0 {
        // sum_{j=0}^{n} q_j t_{k-j} = 0 for k = m+1..m+n
        let a = DMatrix::from_fn(n, n, |r, col| tc((m + 1 + r) as isize - (col + 1) as isize));
        let b = DVector::from_fn(n, |r, _| -tc((m + 1 + r) as isize));
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Linalg("singular Padé system".into()))?;
        q.extend(sol.iter());
    }
    let p = (0..=m)
        .map(|k| {
            (0..=k.min(n))
                .map(|j| q[j] * tc(k as isize - j as isize))
                .sum()
        })
        .collect();
    Ok((p, q))
}

fn poly_roots(coeffs: &[f64]) -> Result<Vec<C64>> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().is_some_and(|v| v.abs() == 0.0) {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let comp = CMat::from_fn(deg, deg, |r, col| {
        if r == 0 {
            C64::new(-c[deg - 1 - col] / lead, 0.0)
        } else if r == col + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    eigenvalues(&comp)
}

fn horner(c: &[f64], z: C64) -> C64 {
    c.iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &v| acc * z + v)
}

/// `max |r_{m,n}(z)|` over 4096 points of the unit circle, and the smallest pole modulus.
pub fn pade_torus_sup(m: usize, n: usize, c: f64) -> Result<PadeReport> {
    let (p, q) = pade_coefficients(m, n, c)?;
    let poles = poly_roots(&q)?;
    let min_pole_modulus = poles.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if min_pole_modulus <= 1.0 + 1e-9 {
        return Err(Error::Degenerate(format!(
            "Padé ({m},{n}) has a pole of modulus {min_pole_modulus} on or inside the unit circle"
        )));
    }
    let sup = (0..4096)
        .map(|k| {
            let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / 4096.0);
            (horner(&p, z) / horner(&q, z)).norm()
        })
        .fold(0.0, f64::max);
    Ok(PadeReport {
        numerator: p,
        denominator: q,
        sup,
        min_pole_modulus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyOptions {
    pub param: f64,
    pub kreiss: bool,
    pub pseudo_eps: Vec<f64>,
    pub defect: bool,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        SurveyOptions {
            param: 0.1,
            kreiss: false,
            pseudo_eps: Vec::new(),
            defect: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub sample: usize,
    pub seed: u64,
    pub beta_t: f64,
    pub omega: f64,
    pub ratio: f64,
    pub log10_advantage: f64,
    /// `e^{2(β_I - ω)T}`; may be infinite for extreme `T`.
    pub advantage: f64,
    pub log_lambda_restricted: f64,
    pub defect_rank: Option<usize>,
    pub min_defect_eig: Option<f64>,
    pub kreiss: Option<f64>,
    pub pseudo_abscissa: Vec<(f64, f64)>,
    pub predictors: Predictors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let k = s.len();
        let median = if k % 2 == 1 {
            s[k / 2]
        } else {
            0.5 * (s[k / 2 - 1] + s[k / 2])
        };
        Summary {
            mean,
            std: var.sqrt(),
            median,
            min: s[0],
            max: s[k - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub kind: EnsembleKind,
    pub n: usize,
    pub beta_t: f64,
    pub ratio: Summary,
    pub log10_advantage: Summary,
    pub advantage: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub records: Vec<DiagnosticsRecord>,
    pub summaries: Vec<CellSummary>,
}

fn diagnose(
    pair: &HamiltonianPair,
    sample: usize,
    seed: u64,
    beta_ts: &[f64],
    opts: &SurveyOptions,
) -> Result<Vec<DiagnosticsRecord>> {
    let omega = spectral_abscissa(pair)?;
    let beta = pair.beta_i;
    let kreiss = if opts.kreiss {
        Some(kreiss_constant(pair)?)
    } else {
        None
    };
    let pseudo = opts
        .pseudo_eps
        .iter()
        .map(|&e| pseudo_abscissa(pair, e).map(|v| (e, v)))
        .collect::<Result<Vec<_>>>()?;
    let predictors = gap_predictors(pair);
    beta_ts
        .iter()
        .map(|&bt| {
            let t = bt / beta;
            let gap = 2.0 * (beta - omega) * t;
            let (rank, min_eig) = if opts.defect {
                let d = defect_check(pair, t, (beta * t).exp())?;
                (Some(d.rank), Some(d.min_eig))
            } else {
                (None, None)
            };
            Ok(DiagnosticsRecord {
                sample,
                seed,
                beta_t: bt,
                omega,
                ratio: omega / beta,
                log10_advantage: gap / std::f64::consts::LN_10,
                advantage: gap.exp(),
                log_lambda_restricted: omega * t,
                defect_rank: rank,
                min_defect_eig: min_eig,
                kreiss,
                pseudo_abscissa: pseudo.clone(),
                predictors,
            })
        })
        .collect()
}

/// Per-sample diagnostics for `n_samples` pairs of `kind` at every `β_I T`
/// in `beta_ts`, plus summaries per `β_I T`. Sample `s` uses the seed
/// stream `(seed, barrier, s)`, so the same pairs appear at every `β_I T`.
pub fn ensemble_survey(
    kind: EnsembleKind,
    n: usize,
    beta_ts: &[f64],
    n_samples: usize,
    seed: u64,
    opts: &SurveyOptions,
) -> Result<EnsembleReport> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    let per_sample: Vec<Vec<DiagnosticsRecord>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let sample_seed = seeds::derive_seed(seed, seeds::STREAM_BARRIER, s as u64);
            let mut rng = rng_for(seed, seeds::STREAM_BARRIER, s as u64);
            let pair = sample_pair(kind, n, opts.param, &mut rng)?;
            diagnose(&pair, s, sample_seed, beta_ts, opts)
        })
        .collect::<Result<_>>()?;
    let records: Vec<DiagnosticsRecord> = per_sample.into_iter().flatten().collect();
    let summaries = beta_ts
        .iter()
        .map(|&bt| {
            let cell: Vec<&DiagnosticsRecord> = records.iter().filter(|r| r.beta_t == bt).collect();
            let col =
                |f: fn(&DiagnosticsRecord) -> f64| cell.iter().map(|r| f(r)).collect::<Vec<f64>>();
            CellSummary {
                kind,
                n,
                beta_t: bt,
                ratio: Summary::of(&col(|r| r.ratio)),
                log10_advantage: Summary::of(&col(|r| r.log10_advantage)),
                advantage: Summary::of(&col(|r| r.advantage)),
            }
        })
        .collect();
    Ok(EnsembleReport { records, summaries })
}
