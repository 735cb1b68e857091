//! Time-dependent benchmark: a driven two-qubit Ising pair with collective
//! decay, midpoint segmentation, per-segment degree budgets and the
//! peel-and-resynthesize validation of the segmented circuit.

use crate::angle_finding::{angle_error, block_peel, canonicalize};
use crate::barriers::HamiltonianPair;
use crate::degree_bounds::{jacobi_anger_degree, taylor_degree};
use crate::error::{Error, Result};
use crate::linalg::{expm, identity, op_norm, CMat};
use crate::qsp_core::{
    evaluate, evaluate_multilinear, extract, segmented_schedule, AngleProgram, Family, Schedule,
};
use crate::seeds::{rng_for, STREAM_TD};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Per-segment, per-family degree cap.
pub const SEGMENT_CAP: usize = 500;
/// Smallest accepted step count for the reference propagator.
pub const MIN_REFERENCE_STEPS: usize = 1000;
/// Side of the torus grid used for the circuit error.
pub const CIRCUIT_GRID: usize = 32;
/// Reference rotation angles are `θ = u·x/k` with `u ~ U(REFERENCE_SPREAD)`,
/// `x` the segment's normalized evolution (`α_R Δ` or `β_I Δ`) and `k` its
/// degree in that family.
pub const REFERENCE_SPREAD: (f64, f64) = (0.5, 1.5);

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

fn lowering() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Collective lowering operator `(σ⁻⊗I + I⊗σ⁻)/√2`, scaled so `‖L†L‖ = 1`.
pub fn collective_lowering() -> CMat {
    let i2 = identity(2);
    (kron(&lowering(), &i2) + kron(&i2, &lowering()))
        * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TDBenchmark {
    pub j: f64,
    pub h: f64,
    pub gamma: f64,
    pub omega: f64,
    #[serde(skip, default = "default_jump_ops")]
    pub jump_ops: Vec<CMat>,
}

fn default_jump_ops() -> Vec<CMat> {
    vec![collective_lowering()]
}

impl Default for TDBenchmark {
    fn default() -> Self {
        TDBenchmark {
            j: 1.0,
            h: 0.5,
            gamma: 0.3,
            omega: 0.4,
            jump_ops: default_jump_ops(),
        }
    }
}

impl TDBenchmark {
    /// `Σ_k L_k† L_k`.
    pub fn dissipator(&self) -> CMat {
        let mut acc = CMat::zeros(4, 4);
        for l in &self.jump_ops {
            acc += l.adjoint() * l;
        }
        acc
    }

    pub fn h_r(&self, t: f64) -> CMat {
        let (x, z, i2) = (pauli_x(), pauli_z(), identity(2));
        kron(&z, &z) * C64::new(self.j * (self.omega * t).cos(), 0.0)
            + (kron(&x, &i2) + kron(&i2, &x)) * C64::new(self.h, 0.0)
    }

    pub fn h_i(&self, t: f64) -> CMat {
        self.dissipator() * C64::new(self.beta_profile(t), 0.0)
    }

    /// Scalar envelope `(γ/2)(1 + sin²(Ωt/2))` of `H_I(t)`.
    pub fn beta_profile(&self, t: f64) -> f64 {
        0.5 * self.gamma * (1.0 + (0.5 * self.omega * t).sin().powi(2))
    }

    /// `-i H_R(t) + H_I(t)`.
    pub fn generator(&self, t: f64) -> CMat {
        self.h_r(t) * C64::new(0.0, -1.0) + self.h_i(t)
    }
}

/// The Hamiltonian pair at time `t`.
pub fn benchmark_at(t: f64, bench: &TDBenchmark) -> Result<HamiltonianPair> {
    HamiltonianPair::new(bench.h_r(t), bench.h_i(t))
}

/// Time-ordered midpoint product `Π_{k=n}^{1} exp(G(t_k) Δ)` for the
/// generator `G = -iH_R + H_I`.
pub fn reference_propagator(bench: &TDBenchmark, t_final: f64, n_steps: usize) -> Result<CMat> {
    if n_steps < MIN_REFERENCE_STEPS {
        return Err(Error::Domain(format!(
            "need at least {MIN_REFERENCE_STEPS} steps, got {n_steps}"
        )));
    }
    if !(t_final >= 0.0) {
        return Err(Error::Domain(format!("negative duration {t_final}")));
    }
    let dt = t_final / n_steps as f64;
    let mut u = identity(4);
    for k in 0..n_steps {
        let tau = (k as f64 + 0.5) * dt;
        u = expm(&(bench.generator(tau) * C64::new(dt, 0.0))) * u;
    }
    Ok(u)
}

/// Midpoint-segmented propagator with `r` exact segment exponentials.
pub fn segmented_propagator(bench: &TDBenchmark, t_final: f64, r: usize) -> Result<CMat> {
    if r == 0 {
        return Err(Error::Domain("r must be at least 1".into()));
    }
    let dt = t_final / r as f64;
    let mut u = identity(4);
    for k in 0..r {
        u = expm(&(bench.generator((k as f64 + 0.5) * dt) * C64::new(dt, 0.0))) * u;
    }
    Ok(u)
}

/// `(B_R, B_I) = (∫α_R, ∫β_I)` over `[0, T]` by adaptive Simpson.
pub fn integrated_norms(bench: &TDBenchmark, t_final: f64, tol: f64) -> Result<(f64, f64)> {
    let alpha = |t: f64| op_norm(&bench.h_r(t));
    let beta = |t: f64| op_norm(&bench.h_i(t));
    Ok((
        adaptive_simpson(&alpha, 0.0, t_final, tol),
        adaptive_simpson(&beta, 0.0, t_final, tol),
    ))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `e^{-2B_I} ‖U(T)ψ₀‖² / ‖U(T)‖²` from the reference propagator.
pub fn success_probability(
    bench: &TDBenchmark,
    t_final: f64,
    psi0: &DVector<C64>,
    n_steps: usize,
) -> Result<f64> {
    let u = reference_propagator(bench, t_final, n_steps)?;
    let (_, b_i) = integrated_norms(bench, t_final, 1e-10)?;
    let norm = psi0.norm();
    if norm == 0.0 {
        return Err(Error::Domain("zero initial state".into()));
    }
    let out = (&u * psi0).norm() / norm;
    Ok((-2.0 * b_i).exp() * out * out / op_norm(&u).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TDValidation {
    #[serde(rename = "T")]
    pub t: f64,
    pub r: usize,
    pub d: usize,
    pub crc_var: f64,
    pub angle_err: f64,
    pub circuit_err: f64,
}

struct SegmentPlan {
    d_r: usize,
    m: usize,
    alpha_dt: f64,
    beta_dt: f64,
}

fn plan(bench: &TDBenchmark, t_final: f64, r: usize, eps: f64) -> Result<Vec<SegmentPlan>> {
    if r == 0 {
        return Err(Error::Domain("r must be at least 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(t_final > 0.0) {
        return Err(Error::Domain(format!("T must be positive, got {t_final}")));
    }
    let dt = t_final / r as f64;
    let budget = eps / (2.0 * r as f64);
    (0..r)
        .map(|k| {
            let pair = benchmark_at((k as f64 + 0.5) * dt, bench)?;
            let (alpha_dt, beta_dt) = (pair.alpha_r * dt, pair.beta_i * dt);
            let d_r = jacobi_anger_degree(alpha_dt, budget).max(1);
            let m = taylor_degree(beta_dt, budget).max(1);
            if d_r > SEGMENT_CAP || m > SEGMENT_CAP {
                return Err(Error::CapExceeded(SEGMENT_CAP));
            }
            Ok(SegmentPlan {
                d_r,
                m,
                alpha_dt,
                beta_dt,
            })
        })
        .collect()
}

/// Per-segment degrees `(d_R^{(j)}, M_j)` with budget `eps/(2r)` for each family.
pub fn segment_degrees(
    bench: &TDBenchmark,
    t_final: f64,
    r: usize,
    eps: f64,
) -> Result<Vec<(usize, usize)>> {
    Ok(plan(bench, t_final, r, eps)?
        .iter()
        .map(|s| (s.d_r, s.m))
        .collect())
}

/// Segmented block schedule and its deterministic reference circuit.
/// The returned validation carries `T`, `r` and `d`; the error fields are
/// filled by [`validate`].
pub fn build_td_circuit(
    bench: &TDBenchmark,
    t_final: f64,
    r: usize,
    eps: f64,
) -> Result<(AngleProgram, Schedule, TDValidation)> {
    let segs = plan(bench, t_final, r, eps)?;
    let schedule = segmented_schedule(&segs.iter().map(|s| (s.d_r, s.m)).collect::<Vec<_>>());
    let d = schedule.len();
    let mut rng = rng_for(t_final.to_bits() ^ r as u64, STREAM_TD, 0);
    let mut draw = |scale: f64| {
        (
            scale * rng.random_range(REFERENCE_SPREAD.0..REFERENCE_SPREAD.1),
            rng.random_range(-PI..PI),
        )
    };
    let mut angles = Vec::with_capacity(d + 1);
    for s in &segs {
        let (a, b) = (s.alpha_dt / s.d_r as f64, s.beta_dt / s.m as f64);
        angles.extend((0..s.d_r).map(|_| draw(a)));
        angles.extend((0..s.m).map(|_| draw(b)));
    }
    angles.push(draw(
        segs[segs.len() - 1].beta_dt / segs[segs.len() - 1].m as f64,
    ));
    let prog = AngleProgram::new(angles, schedule.clone())?;
    let partial = TDValidation {
        t: t_final,
        r,
        d,
        crc_var: f64::NAN,
        angle_err: f64::NAN,
        circuit_err: f64::NAN,
    };
    Ok((prog, schedule, partial))
}

/// Largest relative operator-norm distance between two chains on the
/// `CIRCUIT_GRID × CIRCUIT_GRID` torus grid.
pub fn circuit_error(a: &AngleProgram, b: &AngleProgram) -> Result<f64> {
    if a.schedule != b.schedule {
        return Err(Error::BadSchedule(
            "circuits have different schedules".into(),
        ));
    }
    let n = CIRCUIT_GRID;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let z1 = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        for k in 0..n {
            let z2 = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            let ga = evaluate(a, z1, z2).0;
            let gb = evaluate(b, z1, z2).0;
            worst = worst.max(gb.sub(&ga).op_norm() / ga.op_norm());
        }
    }
    Ok(worst)
}

/// Synthesize the reference circuit, extract `(P, Q)`, block-peel and
/// compare angles and re-synthesized chains.
pub fn validate(bench: &TDBenchmark, t_final: f64, r: usize, eps: f64) -> Result<TDValidation> {
    let (prog, schedule, mut out) = build_td_circuit(bench, t_final, r, eps)?;
    let segments = crate::angle_finding::segments_of(&schedule);
    let (p, q) = extract(&prog);
    let (rec, trace) = block_peel(&p, &q, &segments)?;
    out.crc_var = trace.max_crc_variation();
    out.angle_err = angle_error(&canonicalize(&rec), &canonicalize(&prog));
    out.circuit_err = circuit_error(&prog, &rec)?;
    Ok(out)
}

/// Largest deviation between the multilinear evaluation with per-slot
/// variables tied within each family and the bivariate evaluation.
pub fn multilinear_collapse_error(prog: &AngleProgram, n_points: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_for(seed, STREAM_TD, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..n_points {
        let z1 = C64::from_polar(1.0, rng.random_range(-PI..PI));
        let z2 = C64::from_polar(1.0, rng.random_range(-PI..PI));
        let zs: Vec<C64> = prog
            .schedule
            .iter()
            .map(|f| if *f == Family::R { z1 } else { z2 })
            .collect();
        let a = evaluate_multilinear(prog, &zs)?.0;
        let b = evaluate(prog, z1, z2).0;
        worst = worst.max(a.sub(&b).op_norm());
    }
    Ok(worst)
}
