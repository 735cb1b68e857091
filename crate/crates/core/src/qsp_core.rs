//! The M-QSP circuit engine.
//!
//! A circuit is `R_0 · prod_j [diag(z_{s(j)}, 1) · R_j]` with
//! `R(θ, φ) = [[cos θ, -e^{iφ} sin θ], [e^{-iφ} sin θ, cos θ]]`.
//! `P` is entry (0, 0) and `Q` entry (1, 0) of the product.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Oracle family of a signal slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    R,
    I,
}

/// Ordered family labels, one per signal slot.
pub type Schedule = Vec<Family>;

/// `d_r` R-slots followed by `d_i` I-slots.
pub fn block_schedule(d_r: usize, d_i: usize) -> Schedule {
    let mut s = vec![Family::R; d_r];
    s.extend(std::iter::repeat_n(Family::I, d_i));
    s
}

/// Alternating R, I, R, I, ... until one family is exhausted.
pub fn interleaved_schedule(d_r: usize, d_i: usize) -> Schedule {
    let (mut a, mut b) = (d_r, d_i);
    let mut s = Vec::with_capacity(d_r + d_i);
    while a > 0 || b > 0 {
        if a > 0 {
            s.push(Family::R);
            a -= 1;
        }
        if b > 0 {
            s.push(Family::I);
            b -= 1;
        }
    }
    s
}

/// Segmented block schedule `R^{r_1} I^{i_1} R^{r_2} I^{i_2} ...`.
pub fn segmented_schedule(segments: &[(usize, usize)]) -> Schedule {
    segments
        .iter()
        .flat_map(|&(r, i)| block_schedule(r, i))
        .collect()
}

/// `(d_R, d_I)` counts of a schedule.
pub fn bidegree_of(schedule: &[Family]) -> (usize, usize) {
    let r = schedule.iter().filter(|&&f| f == Family::R).count();
    (r, schedule.len() - r)
}

/// 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Mat2([[o, z], [z, o]])
    }

    pub fn mul(&self, b: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &b.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn dagger(&self) -> Mat2 {
        let a = &self.0;
        Mat2([
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Right-multiply by `diag(z, 1)`.
    pub fn mul_signal(&self, z: C64) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0] * z, a[0][1]], [a[1][0] * z, a[1][1]]])
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        // largest eigenvalue of M M^dagger, written without cancellation
        let a = &self.0;
        let p = a[0][0].norm_sqr() + a[0][1].norm_sqr();
        let q = a[1][0].norm_sqr() + a[1][1].norm_sqr();
        let r = a[0][0] * a[1][0].conj() + a[0][1] * a[1][1].conj();
        let disc = ((p - q).powi(2) + 4.0 * r.norm_sqr()).sqrt();
        (0.5 * (p + q + disc)).sqrt()
    }

    pub fn sub(&self, b: &Mat2) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] -= b.0[i][j];
            }
        }
        out
    }
}

/// A 2x2 circuit value; `P` and `Q` are its first column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitValue(pub Mat2);

impl CircuitValue {
    pub fn p(&self) -> C64 {
        self.0 .0[0][0]
    }
    pub fn q(&self) -> C64 {
        self.0 .0[1][0]
    }
}

/// `R(θ, φ) = [[cos θ, -e^{iφ} sin θ], [e^{-iφ} sin θ, cos θ]]`.
pub fn rotation_gate(theta: f64, phi: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    Mat2([[C64::new(c, 0.0), -e * s], [e.conj() * s, C64::new(c, 0.0)]])
}

fn rotation_dtheta(theta: f64, phi: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    Mat2([
        [C64::new(-s, 0.0), -e * c],
        [e.conj() * c, C64::new(-s, 0.0)],
    ])
}

fn rotation_dphi(theta: f64, phi: f64) -> Mat2 {
    let s = theta.sin();
    let e = C64::from_polar(1.0, phi);
    let i = C64::new(0.0, 1.0);
    Mat2([
        [C64::new(0.0, 0.0), -i * e * s],
        [-i * e.conj() * s, C64::new(0.0, 0.0)],
    ])
}

/// Rotation angles `(θ_k, φ_k)`, `k = 0..d`, and the schedule of the `d` signal slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleProgram {
    pub angles: Vec<(f64, f64)>,
    pub schedule: Schedule,
}

impl AngleProgram {
    pub fn new(angles: Vec<(f64, f64)>, schedule: Schedule) -> Result<Self> {
        if angles.len() != schedule.len() + 1 {
            return Err(Error::LengthMismatch {
                expected: schedule.len() + 1,
                got: angles.len(),
            });
        }
        Ok(AngleProgram { angles, schedule })
    }

    /// Program with all angles zero.
    pub fn zeros(schedule: Schedule) -> Self {
        AngleProgram {
            angles: vec![(0.0, 0.0); schedule.len() + 1],
            schedule,
        }
    }

    /// Build from a flat parameter vector `θ_0, φ_0, θ_1, φ_1, ...`.
    pub fn from_params(params: &[f64], schedule: Schedule) -> Result<Self> {
        if params.len() != 2 * (schedule.len() + 1) {
            return Err(Error::LengthMismatch {
                expected: 2 * (schedule.len() + 1),
                got: params.len(),
            });
        }
        let angles = params.chunks(2).map(|c| (c[0], c[1])).collect();
        Ok(AngleProgram { angles, schedule })
    }

    /// Random program with `θ ~ U(theta_range)` and `φ ~ U(-π, π)`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        schedule: Schedule,
        theta_range: (f64, f64),
    ) -> Self {
        let angles = (0..=schedule.len())
            .map(|_| {
                (
                    rng.random_range(theta_range.0..theta_range.1),
                    rng.random_range(-PI..PI),
                )
            })
            .collect();
        AngleProgram { angles, schedule }
    }

    pub fn params(&self) -> Vec<f64> {
        self.angles.iter().flat_map(|&(t, p)| [t, p]).collect()
    }

    pub fn d(&self) -> usize {
        self.schedule.len()
    }

    pub fn bidegree(&self) -> (usize, usize) {
        bidegree_of(&self.schedule)
    }

    /// `n_P = 2 (d_R + d_I) + 2`.
    pub fn n_params(&self) -> usize {
        2 * self.d() + 2
    }

    fn rotations(&self) -> Vec<Mat2> {
        self.angles
            .iter()
            .map(|&(t, p)| rotation_gate(t, p))
            .collect()
    }
}

/// Real constraint count `(d_R + 1)(d_I + 1) - 1` quoted for the unitarity condition.
pub fn n_constraints(d_r: usize, d_i: usize) -> usize {
    (d_r + 1) * (d_i + 1) - 1
}

/// Complex coefficient count `(d_R + 1)(d_I + 1)` targeted by the Jacobian.
pub fn n_coefficients(d_r: usize, d_i: usize) -> usize {
    (d_r + 1) * (d_i + 1)
}

/// Overparameterization ratio `n_C / n_P`.
pub fn overparameterization_ratio(d_r: usize, d_i: usize) -> f64 {
    n_constraints(d_r, d_i) as f64 / (2 * (d_r + d_i) + 2) as f64
}

/// Coefficients `c_{mn}` of a polynomial in `z_1^m z_2^n`, `0 <= m <= d_R`, `0 <= n <= d_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffGrid {
    pub d_r: usize,
    pub d_i: usize,
    /// Row-major, entry `m * (d_i + 1) + n`.
    pub coeffs: Vec<C64>,
}

impl CoeffGrid {
    pub fn zeros(d_r: usize, d_i: usize) -> Self {
        CoeffGrid {
            d_r,
            d_i,
            coeffs: vec![C64::new(0.0, 0.0); (d_r + 1) * (d_i + 1)],
        }
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.d_r, self.d_i)
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.coeffs[m * (self.d_i + 1) + n]
    }

    pub fn set(&mut self, m: usize, n: usize, v: C64) {
        self.coeffs[m * (self.d_i + 1) + n] = v;
    }

    /// Horner evaluation at `(z1, z2)`.
    pub fn eval(&self, z1: C64, z2: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for m in (0..=self.d_r).rev() {
            let mut row = C64::new(0.0, 0.0);
            for n in (0..=self.d_i).rev() {
                row = row * z2 + self.get(m, n);
            }
            acc = acc * z1 + row;
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &CoeffGrid) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coefficient grid serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::Domain(format!("invalid coefficient grid JSON: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffGridRepr {
    bidegree: (usize, usize),
    coeffs: Vec<(f64, f64)>,
}

impl Serialize for CoeffGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoeffGridRepr {
            bidegree: (self.d_r, self.d_i),
            coeffs: self.coeffs.iter().map(|c| (c.re, c.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoeffGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CoeffGridRepr::deserialize(d)?;
        let (d_r, d_i) = r.bidegree;
        if r.coeffs.len() != (d_r + 1) * (d_i + 1) {
            return Err(serde::de::Error::custom(
                "coefficient count does not match bidegree",
            ));
        }
        Ok(CoeffGrid {
            d_r,
            d_i,
            coeffs: r
                .coeffs
                .into_iter()
                .map(|(re, im)| C64::new(re, im))
                .collect(),
        })
    }
}

/// Evaluate the circuit at `(z1, z2)`.
pub fn evaluate(prog: &AngleProgram, z1: C64, z2: C64) -> CircuitValue {
    let rots = prog.rotations();
    CircuitValue(chain(&rots, &prog.schedule, z1, z2))
}

fn chain(rots: &[Mat2], schedule: &[Family], z1: C64, z2: C64) -> Mat2 {
    let mut m = rots[0];
    for (j, f) in schedule.iter().enumerate() {
        let z = match f {
            Family::R => z1,
            Family::I => z2,
        };
        m = m.mul_signal(z).mul(&rots[j + 1]);
    }
    m
}

/// Evaluate with an independent signal variable per slot.
pub fn evaluate_multilinear(prog: &AngleProgram, zs: &[C64]) -> Result<CircuitValue> {
    if zs.len() != prog.d() {
        return Err(Error::LengthMismatch {
            expected: prog.d(),
            got: zs.len(),
        });
    }
    let rots = prog.rotations();
    let mut m = rots[0];
    for (j, &z) in zs.iter().enumerate() {
        m = m.mul_signal(z).mul(&rots[j + 1]);
    }
    Ok(CircuitValue(m))
}

fn roots_of_unity(n: usize) -> Vec<C64> {
    (0..n)
        .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// Separable 2-D DFT `c_{mn} = (1/N) sum_{jk} v_{jk} e^{-2πi(jm/N1 + kn/N2)}`.
fn grid_dft(vals: &[C64], n1: usize, n2: usize) -> Vec<C64> {
    let w1 = roots_of_unity(n1);
    let w2 = roots_of_unity(n2);
    let mut tmp = vec![C64::new(0.0, 0.0); n1 * n2];
    for j in 0..n1 {
        for n in 0..n2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n2 {
                acc += vals[j * n2 + k] * w2[(k * n) % n2].conj();
            }
            tmp[j * n2 + n] = acc;
        }
    }
    let scale = 1.0 / (n1 * n2) as f64;
    let mut out = vec![C64::new(0.0, 0.0); n1 * n2];
    for m in 0..n1 {
        for n in 0..n2 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n1 {
                acc += tmp[j * n2 + n] * w1[(j * m) % n1].conj();
            }
            out[m * n2 + n] = acc * scale;
        }
    }
    out
}

/// Torus sample points of the exactly determined extraction grid.
pub fn torus_grid(d_r: usize, d_i: usize) -> (Vec<C64>, Vec<C64>) {
    (roots_of_unity(d_r + 1), roots_of_unity(d_i + 1))
}

/// Coefficients of `P` and `Q` from samples on the `(d_R+1) x (d_I+1)` torus grid.
pub fn extract(prog: &AngleProgram) -> (CoeffGrid, CoeffGrid) {
    let (d_r, d_i) = prog.bidegree();
    let (n1, n2) = (d_r + 1, d_i + 1);
    let (z1s, z2s) = torus_grid(d_r, d_i);
    let rots = prog.rotations();
    let mut pv = Vec::with_capacity(n1 * n2);
    let mut qv = Vec::with_capacity(n1 * n2);
    for &z1 in &z1s {
        for &z2 in &z2s {
            let m = chain(&rots, &prog.schedule, z1, z2);
            pv.push(m.0[0][0]);
            qv.push(m.0[1][0]);
        }
    }
    (
        CoeffGrid {
            d_r,
            d_i,
            coeffs: grid_dft(&pv, n1, n2),
        },
        CoeffGrid {
            d_r,
            d_i,
            coeffs: grid_dft(&qv, n1, n2),
        },
    )
}

fn check_bidegree(prog: &AngleProgram, target: &CoeffGrid) -> Result<()> {
    let b = prog.bidegree();
    if b != target.bidegree() {
        return Err(Error::BidegreeMismatch {
            expected: b,
            got: target.bidegree(),
        });
    }
    Ok(())
}

/// `sum_{mn} |c_{mn}(Θ) - c_{mn}^target|^2`.
pub fn cost(prog: &AngleProgram, target: &CoeffGrid) -> Result<f64> {
    check_bidegree(prog, target)?;
    let (p, _) = extract(prog);
    Ok(p.coeffs
        .iter()
        .zip(&target.coeffs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum())
}

/// Derivatives `dP/dΘ` at one torus point, ordered `θ_0, φ_0, θ_1, ...`, plus `P`.
fn point_derivatives(prog: &AngleProgram, rots: &[Mat2], z1: C64, z2: C64, out: &mut [C64]) -> C64 {
    let d = prog.d();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let zf = |j: usize| match prog.schedule[j] {
        Family::R => z1,
        Family::I => z2,
    };
    // prefix row vectors a_k = e_0^T R_0 S_1 R_1 ... S_k
    let mut pre = Vec::with_capacity(d + 1);
    let mut a = [one, zero];
    pre.push(a);
    for (k, rot) in rots.iter().enumerate().take(d) {
        let r = &rot.0;
        let row = [
            a[0] * r[0][0] + a[1] * r[1][0],
            a[0] * r[0][1] + a[1] * r[1][1],
        ];
        a = [row[0] * zf(k), row[1]];
        pre.push(a);
    }
    // suffix column vectors b_k = S_{k+1} R_{k+1} ... S_d R_d e_0
    let mut suf = vec![[zero, zero]; d + 1];
    let mut b = [one, zero];
    suf[d] = b;
    for k in (0..d).rev() {
        let r = &rots[k + 1].0;
        let col = [
            r[0][0] * b[0] + r[0][1] * b[1],
            r[1][0] * b[0] + r[1][1] * b[1],
        ];
        b = [col[0] * zf(k), col[1]];
        suf[k] = b;
    }
    let form = |m: &Mat2, a: &[C64; 2], b: &[C64; 2]| {
        let r = &m.0;
        a[0] * (r[0][0] * b[0] + r[0][1] * b[1]) + a[1] * (r[1][0] * b[0] + r[1][1] * b[1])
    };
    for k in 0..=d {
        let (t, p) = prog.angles[k];
        out[2 * k] = form(&rotation_dtheta(t, p), &pre[k], &suf[k]);
        out[2 * k + 1] = form(&rotation_dphi(t, p), &pre[k], &suf[k]);
    }
    form(&rots[0], &pre[0], &suf[0])
}

/// Analytic gradient of [`cost`] with respect to `θ_0, φ_0, ..., θ_d, φ_d`.
pub fn gradient(prog: &AngleProgram, target: &CoeffGrid) -> Result<Vec<f64>> {
    Ok(cost_and_gradient(prog, target)?.1)
}

/// Cost and gradient in one pass over the torus grid.
///
/// By Parseval the cost equals the grid mean of `|P - P_target|^2`.
pub fn cost_and_gradient(prog: &AngleProgram, target: &CoeffGrid) -> Result<(f64, Vec<f64>)> {
    check_bidegree(prog, target)?;
    let (d_r, d_i) = prog.bidegree();
    let (z1s, z2s) = torus_grid(d_r, d_i);
    let rots = prog.rotations();
    let np = prog.n_params();
    let npts = (z1s.len() * z2s.len()) as f64;
    let mut grad = vec![0.0; np];
    let mut dp = vec![C64::new(0.0, 0.0); np];
    let mut cost = 0.0;
    for &z1 in &z1s {
        for &z2 in &z2s {
            let p = point_derivatives(prog, &rots, z1, z2, &mut dp);
            let r = p - target.eval(z1, z2);
            cost += r.norm_sqr();
            for (g, d) in grad.iter_mut().zip(&dp) {
                *g += 2.0 * (r.conj() * d).re;
            }
        }
    }
    for g in grad.iter_mut() {
        *g /= npts;
    }
    Ok((cost / npts, grad))
}

/// Real Jacobian of `Θ -> {c_mn}`: rows are `Re c_mn` for all `(m, n)` in
/// row-major order followed by `Im c_mn`; columns `θ_0, φ_0, ..., θ_d, φ_d`.
pub fn jacobian(prog: &AngleProgram) -> DMatrix<f64> {
    let (d_r, d_i) = prog.bidegree();
    let (n1, n2) = (d_r + 1, d_i + 1);
    let (z1s, z2s) = torus_grid(d_r, d_i);
    let rots = prog.rotations();
    let np = prog.n_params();
    let nc = n1 * n2;
    let mut cols = vec![vec![C64::new(0.0, 0.0); nc]; np];
    let mut dp = vec![C64::new(0.0, 0.0); np];
    for (j, &z1) in z1s.iter().enumerate() {
        for (k, &z2) in z2s.iter().enumerate() {
            point_derivatives(prog, &rots, z1, z2, &mut dp);
            for (c, v) in cols.iter_mut().zip(&dp) {
                c[j * n2 + k] = *v;
            }
        }
    }
    let mut jm = DMatrix::<f64>::zeros(2 * nc, np);
    for (col, vals) in cols.iter().enumerate() {
        let coeffs = grid_dft(vals, n1, n2);
        for (row, c) in coeffs.iter().enumerate() {
            jm[(row, col)] = c.re;
            jm[(nc + row, col)] = c.im;
        }
    }
    jm
}

/// Relative threshold below which the smallest singular value counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// `σ_max / σ_min`, or `f64::INFINITY` when `σ_min < 1e-12 σ_max`.
pub fn condition_number(j: &DMatrix<f64>) -> f64 {
    let (smin, smax) = extreme_singular_values(j);
    if smax == 0.0 || smin < RANK_TOL * smax {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Smallest and largest singular values (the smallest counts the missing
/// rows as zeros when the matrix is wide).
pub fn extreme_singular_values(j: &DMatrix<f64>) -> (f64, f64) {
    if j.ncols() == 0 || j.nrows() == 0 {
        return (0.0, 0.0);
    }
    let sv = j.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = if j.nrows() < j.ncols() {
        0.0
    } else {
        sv.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    (smin, smax)
}

/// Parameter directions along which `P` is exactly invariant:
/// the common phase shift `φ_k -> φ_k + δ` for all `k`, and `φ_k` alone
/// whenever `sin θ_k` vanishes (the rotation is `±I`).
pub fn gauge_directions(prog: &AngleProgram, theta_tol: f64) -> Vec<Vec<f64>> {
    let np = prog.n_params();
    let mut dirs = vec![(0..np)
        .map(|i| if i % 2 == 1 { 1.0 } else { 0.0 })
        .collect::<Vec<f64>>()];
    for (k, &(t, _)) in prog.angles.iter().enumerate() {
        if t.sin().abs() < theta_tol {
            let mut v = vec![0.0; np];
            v[2 * k + 1] = 1.0;
            dirs.push(v);
        }
    }
    dirs
}

/// Jacobian restricted to the orthogonal complement of [`gauge_directions`].
pub fn reduced_jacobian(prog: &AngleProgram, theta_tol: f64) -> DMatrix<f64> {
    let j = jacobian(prog);
    let np = prog.n_params();
    let dirs = gauge_directions(prog, theta_tol);
    let v = DMatrix::from_fn(np, dirs.len(), |r, c| dirs[c][r]);
    // orthonormal basis of the complement from the full SVD of the gauge span
    let svd = (v.clone() * v.transpose()).symmetric_eigen();
    let mut basis = Vec::new();
    for (i, &ev) in svd.eigenvalues.iter().enumerate() {
        if ev.abs() < 1e-9 {
            basis.push(svd.eigenvectors.column(i).clone_owned());
        }
    }
    let nb = DMatrix::from_columns(&basis);
    j * nb
}

/// Condition number of the Jacobian modulo exact parameter redundancies.
pub fn reduced_condition_number(prog: &AngleProgram, theta_tol: f64) -> f64 {
    condition_number(&reduced_jacobian(prog, theta_tol))
}

/// Coefficients of `P` and `Q` by exact polynomial propagation through the
/// circuit (no sampling).
pub fn extract_by_propagation(prog: &AngleProgram) -> (CoeffGrid, CoeffGrid) {
    let (d_r, d_i) = prog.bidegree();
    let rots = prog.rotations();
    // entries of the running 2x2 matrix as coefficient grids
    let mut ent: Vec<CoeffGrid> = (0..4).map(|_| CoeffGrid::zeros(d_r, d_i)).collect();
    for (idx, g) in ent.iter_mut().enumerate() {
        g.set(0, 0, rots[0].0[idx / 2][idx % 2]);
    }
    for (j, f) in prog.schedule.iter().enumerate() {
        // multiply column 0 by the signal variable
        for row in 0..2 {
            let g = &ent[2 * row];
            let mut shifted = CoeffGrid::zeros(d_r, d_i);
            for m in 0..=d_r {
                for n in 0..=d_i {
                    let v = g.get(m, n);
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    match f {
                        Family::R => shifted.set(m + 1, n, v),
                        Family::I => shifted.set(m, n + 1, v),
                    }
                }
            }
            ent[2 * row] = shifted;
        }
        let r = rots[j + 1].0;
        let mut next: Vec<CoeffGrid> = (0..4).map(|_| CoeffGrid::zeros(d_r, d_i)).collect();
        for row in 0..2 {
            for col in 0..2 {
                for t in 0..ent[0].coeffs.len() {
                    next[2 * row + col].coeffs[t] =
                        ent[2 * row].coeffs[t] * r[0][col] + ent[2 * row + 1].coeffs[t] * r[1][col];
                }
            }
        }
        ent = next;
    }
    (ent[0].clone(), ent[2].clone())
}
