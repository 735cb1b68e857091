//! Angle recovery from `(P, Q)` coefficient pairs.
//!
//! Rotations are stripped from the left. If `R_0^† (P, Q) = (z P', Q')`,
//! the leading slices in the peeled variable satisfy
//! `Q_top / P_top = e^{-iφ_0} tan θ_0`, a constant independent of the other
//! variable (the constant-ratio condition, CRC). Recovered interior angles
//! are canonical: `θ_k ∈ [0, π/2]`, and the last `θ_d ∈ [0, π]`.

use crate::error::{Error, Result};
use crate::optim::{self, LbfgsOptions};
use crate::qsp_core::{cost, cost_and_gradient, AngleProgram, CoeffGrid, Family, Schedule};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Leading slices below this norm are treated as vanishing.
pub const DEGENERATE_TOL: f64 = 1e-14;
/// Largest admissible discarded coefficient or ratio spread for achievable input.
pub const ACHIEVABLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelStep {
    /// Index `k` of the recovered rotation.
    pub index: usize,
    /// Family of the signal slot that follows rotation `k`.
    pub family: Family,
    pub theta: f64,
    pub phi: f64,
    /// `e^{-iφ} tan θ`, as `(re, im)`.
    pub crc_ratio: (f64, f64),
    pub crc_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelTrace {
    pub steps: Vec<PeelStep>,
    pub op_count: u64,
}

impl PeelTrace {
    pub fn max_crc_variation(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.crc_variation)
            .fold(0.0, f64::max)
    }
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Representative of `prog` under `R(-θ, φ) = R(θ, φ + π)` and
/// `R(π - θ, φ + π) = -R(θ, φ)`, with signs pushed into the last rotation.
/// Phases of rotations with `sin θ = 0` are set to zero.
pub fn canonicalize(prog: &AngleProgram) -> AngleProgram {
    let d = prog.d();
    let mut sign = 1.0;
    let mut out = Vec::with_capacity(d + 1);
    for (k, &(t, p)) in prog.angles.iter().enumerate() {
        let mut t = wrap(t);
        let mut p = p;
        if t < 0.0 {
            t = -t;
            p += PI;
        }
        if k < d {
            if t > PI / 2.0 {
                t = PI - t;
                p += PI;
                sign = -sign;
            }
        } else if sign < 0.0 {
            t = PI - t;
            p += PI;
        }
        if t.sin().abs() < 1e-12 {
            p = 0.0;
        }
        out.push((t, wrap(p)));
    }
    AngleProgram {
        angles: out,
        schedule: prog.schedule.clone(),
    }
}

/// Max angle difference modulo 2π, skipping phases of rotations with
/// `|sin θ| < 1e-8` where the phase is unidentifiable.
pub fn angle_error(a: &AngleProgram, b: &AngleProgram) -> f64 {
    a.angles
        .iter()
        .zip(&b.angles)
        .map(|(&(ta, pa), &(tb, pb))| {
            let dt = wrap(ta - tb).abs();
            let dp = if ta.sin().abs() < 1e-8 || tb.sin().abs() < 1e-8 {
                0.0
            } else {
                wrap(pa - pb).abs()
            };
            dt.max(dp)
        })
        .fold(0.0, f64::max)
}

/// Residual pair during peeling.
#[derive(Clone)]
struct Residual {
    p: CoeffGrid,
    q: CoeffGrid,
}

impl Residual {
    fn top_slices(&self, f: Family) -> (Vec<C64>, Vec<C64>) {
        let (dr, di) = self.p.bidegree();
        match f {
            Family::R => (
                (0..=di).map(|n| self.p.get(dr, n)).collect(),
                (0..=di).map(|n| self.q.get(dr, n)).collect(),
            ),
            Family::I => (
                (0..=dr).map(|m| self.p.get(m, di)).collect(),
                (0..=dr).map(|m| self.q.get(m, di)).collect(),
            ),
        }
    }

    /// Apply `R(θ, φ)^†`, divide `P` by the signal variable of family `f`
    /// and drop the emptied slices. Returns the largest discarded magnitude.
    fn strip(&mut self, f: Family, theta: f64, phi: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let e = C64::from_polar(1.0, phi);
        let (dr, di) = self.p.bidegree();
        let (nr, ni) = match f {
            Family::R => (dr - 1, di),
            Family::I => (dr, di - 1),
        };
        let mut p2 = CoeffGrid::zeros(nr, ni);
        let mut q2 = CoeffGrid::zeros(nr, ni);
        let mut discarded: f64 = 0.0;
        for m in 0..=dr {
            for n in 0..=di {
                let pv = c * self.p.get(m, n) + e * s * self.q.get(m, n);
                let qv = -e.conj() * s * self.p.get(m, n) + c * self.q.get(m, n);
                match f {
                    Family::R => {
                        if m == 0 {
                            discarded = discarded.max(pv.norm());
                        } else {
                            p2.set(m - 1, n, pv);
                        }
                        if m == dr {
                            discarded = discarded.max(qv.norm());
                        } else {
                            q2.set(m, n, qv);
                        }
                    }
                    Family::I => {
                        if n == 0 {
                            discarded = discarded.max(pv.norm());
                        } else {
                            p2.set(m, n - 1, pv);
                        }
                        if n == di {
                            discarded = discarded.max(qv.norm());
                        } else {
                            q2.set(m, n, qv);
                        }
                    }
                }
            }
        }
        self.p = p2;
        self.q = q2;
        discarded
    }

    fn degree_in(&self, f: Family) -> usize {
        match f {
            Family::R => self.p.d_r,
            Family::I => self.p.d_i,
        }
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `(θ, φ)` from leading slices by least squares over the whole slice.
fn angles_from_slices(pt: &[C64], qt: &[C64]) -> (f64, f64, C64) {
    let np = norm(pt);
    let nq = norm(qt);
    if np < DEGENERATE_TOL && nq < DEGENERATE_TOL {
        return (0.0, 0.0, C64::new(0.0, 0.0));
    }
    let ip = inner(pt, qt);
    let theta = nq.atan2(np);
    let phi = if ip.norm() > 0.0 {
        -ip.arg()
    } else if np < DEGENERATE_TOL {
        -inner(qt, qt).arg()
    } else {
        0.0
    };
    let ratio = if np > 0.0 {
        ip / (np * np)
    } else {
        C64::new(f64::INFINITY, 0.0)
    };
    (theta, phi, ratio)
}

/// `(θ, φ)` from the single largest entry of the leading slice.
fn angles_from_pivot(pt: &[C64], qt: &[C64]) -> (f64, f64, C64) {
    let (idx, pmax) =
        pt.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc },
        );
    let qmax = qt.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if pmax < DEGENERATE_TOL && qmax < DEGENERATE_TOL {
        return (0.0, 0.0, C64::new(0.0, 0.0));
    }
    if pmax < DEGENERATE_TOL {
        let j = qt
            .iter()
            .enumerate()
            .fold(
                (0, 0.0),
                |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc },
            )
            .0;
        return (PI / 2.0, -qt[j].arg(), C64::new(f64::INFINITY, 0.0));
    }
    let ratio = qt[idx] / pt[idx];
    (ratio.norm().atan(), -ratio.arg(), ratio)
}

/// Spread of the leading-coefficient ratio over slice-polynomial evaluations
/// at `probes` points of the unit circle: `max_j |r_j - mean(r)|`.
fn ratio_variation(pt: &[C64], qt: &[C64], probes: usize) -> f64 {
    if pt.len() == 1 {
        return 0.0;
    }
    let horner = |c: &[C64], w: C64| {
        c.iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &v| acc * w + v)
    };
    let scale = norm(pt).max(norm(qt));
    if scale < DEGENERATE_TOL {
        return 0.0;
    }
    let mut ratios = Vec::with_capacity(probes);
    for j in 0..probes {
        // irrational offset keeps probes off accidental roots
        let w = C64::from_polar(1.0, 2.0 * PI * (j as f64 + std::f64::consts::FRAC_1_PI) / probes as f64);
        let a = horner(pt, w);
        let b = horner(qt, w);
        if a.norm() > 1e-6 * scale {
            ratios.push(b / a);
        }
    }
    if ratios.len() < 2 {
        return 0.0;
    }
    let mean = ratios.iter().sum::<C64>() / ratios.len() as f64;
    ratios.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max)
}

/// Final rotation from the constant residual `(a, b) = (cos θ, e^{-iφ} sin θ)`.
fn final_rotation(res: &Residual) -> Result<(f64, f64)> {
    let a = res.p.get(0, 0);
    let b = res.q.get(0, 0);
    let unit = (a.norm_sqr() + b.norm_sqr() - 1.0).abs();
    if unit > ACHIEVABLE_TOL || a.im.abs() > ACHIEVABLE_TOL {
        return Err(Error::NotAchievable(format!(
            "final residual ({a}, {b}) is not a rotation column"
        )));
    }
    let theta = b.norm().atan2(a.re);
    let phi = if b.norm() > DEGENERATE_TOL {
        -b.arg()
    } else {
        0.0
    };
    Ok((theta, phi))
}

fn check_inputs(p: &CoeffGrid, q: &CoeffGrid, schedule: &[Family]) -> Result<()> {
    let b = crate::qsp_core::bidegree_of(schedule);
    if p.bidegree() != b {
        return Err(Error::BidegreeMismatch {
            expected: b,
            got: p.bidegree(),
        });
    }
    if q.bidegree() != b {
        return Err(Error::BidegreeMismatch {
            expected: b,
            got: q.bidegree(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Standard,
    Block,
    Trace,
}

fn peel(
    p: &CoeffGrid,
    q: &CoeffGrid,
    schedule: &[Family],
    mode: Mode,
    probes: usize,
) -> Result<(AngleProgram, PeelTrace)> {
    check_inputs(p, q, schedule)?;
    let mut res = Residual {
        p: p.clone(),
        q: q.clone(),
    };
    let mut steps = Vec::with_capacity(schedule.len());
    let mut angles = Vec::with_capacity(schedule.len() + 1);
    let mut ops: u64 = 0;
    for (k, &f) in schedule.iter().enumerate() {
        let (pt, qt) = res.top_slices(f);
        let (theta, phi, ratio) = match mode {
            Mode::Block => angles_from_pivot(&pt, &qt),
            _ => angles_from_slices(&pt, &qt),
        };
        let variation = ratio_variation(&pt, &qt, probes);
        let (dr, di) = res.p.bidegree();
        ops += match mode {
            Mode::Block => match f {
                Family::R => di as u64,
                Family::I => dr as u64,
            },
            _ => (dr * di) as u64,
        };
        if mode != Mode::Trace && variation > ACHIEVABLE_TOL {
            return Err(Error::NotAchievable(format!(
                "leading-coefficient ratio varies by {variation:e} at step {k}"
            )));
        }
        debug_assert!(res.degree_in(f) > 0);
        let discarded = res.strip(f, theta, phi);
        if mode != Mode::Trace && discarded > ACHIEVABLE_TOL {
            return Err(Error::NotAchievable(format!(
                "degree reduction fails at step {k} (residue {discarded:e})"
            )));
        }
        angles.push((theta, phi));
        steps.push(PeelStep {
            index: k,
            family: f,
            theta,
            phi,
            crc_ratio: (ratio.re, ratio.im),
            crc_variation: variation,
        });
    }
    let last = match final_rotation(&res) {
        Ok(v) => v,
        Err(e) if mode != Mode::Trace => return Err(e),
        Err(_) => (0.0, 0.0),
    };
    angles.push(last);
    Ok((
        AngleProgram {
            angles,
            schedule: schedule.to_vec(),
        },
        PeelTrace {
            steps,
            op_count: ops,
        },
    ))
}

/// Number of probe points used by the peels' internal CRC check.
pub const DEFAULT_PROBES: usize = 8;

/// Recursive peel using least-squares ratios over whole leading slices.
///
/// `op_count` charges `d_R · d_I` of the residual for every step.
pub fn standard_peel(
    p: &CoeffGrid,
    q: &CoeffGrid,
    schedule: &[Family],
) -> Result<(AngleProgram, PeelTrace)> {
    peel(p, q, schedule, Mode::Standard, DEFAULT_PROBES)
}

/// Block peel over `segments = [(r_1, i_1), (r_2, i_2), ...]`, the schedule
/// `R^{r_1} I^{i_1} R^{r_2} I^{i_2} ...`.
///
/// Each step reads its angles from one pivot entry of the leading slice,
/// which the CRC makes sufficient, and `op_count` charges the residual
/// degree in the other family. Over any schedule the charges sum to `d_R · d_I`.
pub fn block_peel(
    p: &CoeffGrid,
    q: &CoeffGrid,
    segments: &[(usize, usize)],
) -> Result<(AngleProgram, PeelTrace)> {
    if segments.is_empty() && p.bidegree() != (0, 0) {
        return Err(Error::BadSchedule("no segments given".into()));
    }
    if let Some(s) = segments.iter().find(|s| s.0 + s.1 == 0) {
        return Err(Error::BadSchedule(format!("empty segment {s:?}")));
    }
    let schedule = crate::qsp_core::segmented_schedule(segments);
    peel(p, q, &schedule, Mode::Block, DEFAULT_PROBES)
}

/// Split a schedule into maximal `R^a I^b` segments.
pub fn segments_of(schedule: &[Family]) -> Vec<(usize, usize)> {
    let mut segs: Vec<(usize, usize)> = Vec::new();
    let mut cur = (0usize, 0usize);
    for &f in schedule {
        match f {
            Family::R => {
                if cur.1 > 0 {
                    segs.push(cur);
                    cur = (0, 0);
                }
                cur.0 += 1;
            }
            Family::I => cur.1 += 1,
        }
    }
    if cur.0 + cur.1 > 0 {
        segs.push(cur);
    }
    segs
}

/// Peel without validation, recording the ratio spread over `probes`
/// evaluations of the leading slices at every step.
pub fn crc_trace(
    p: &CoeffGrid,
    q: &CoeffGrid,
    schedule: &[Family],
    probes: usize,
) -> Result<PeelTrace> {
    if probes < 3 {
        return Err(Error::Domain(format!(
            "crc_trace needs at least 3 probes, got {probes}"
        )));
    }
    Ok(peel(p, q, schedule, Mode::Trace, probes)?.1)
}

/// Standard op-count model on a schedule: `sum over steps of d_R · d_I` of the residual.
pub fn standard_op_count(schedule: &[Family]) -> u64 {
    let (mut dr, mut di) = crate::qsp_core::bidegree_of(schedule);
    let mut ops = 0u64;
    for f in schedule {
        ops += (dr * di) as u64;
        match f {
            Family::R => dr -= 1,
            Family::I => di -= 1,
        }
    }
    ops
}

/// Block op-count model on a schedule: each step costs the residual degree in the other family.
pub fn block_op_count(schedule: &[Family]) -> u64 {
    let (mut dr, mut di) = crate::qsp_core::bidegree_of(schedule);
    let mut ops = 0u64;
    for f in schedule {
        match f {
            Family::R => {
                ops += di as u64;
                dr -= 1;
            }
            Family::I => {
                ops += dr as u64;
                di -= 1;
            }
        }
    }
    ops
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub program: AngleProgram,
    pub cost: f64,
    pub iters: usize,
}

/// Cost below which refinement stops.
pub const REFINE_TARGET: f64 = 1e-20;

/// Warm-started quasi-Newton refinement of `init` toward `target`.
pub fn fft_refine(
    init: &AngleProgram,
    target: &CoeffGrid,
    max_iters: usize,
) -> Result<RefineOutcome> {
    let c0 = cost(init, target)?;
    if c0 < REFINE_TARGET {
        return Ok(RefineOutcome {
            program: init.clone(),
            cost: c0,
            iters: 0,
        });
    }
    let schedule: Schedule = init.schedule.clone();
    let opts = LbfgsOptions {
        max_iters,
        f_target: REFINE_TARGET,
        ..LbfgsOptions::default()
    };
    let r = optim::minimize(
        |x| {
            let prog = AngleProgram {
                angles: x.chunks(2).map(|c| (c[0], c[1])).collect(),
                schedule: schedule.clone(),
            };
            cost_and_gradient(&prog, target).expect("bidegree checked above")
        },
        &init.params(),
        &opts,
    );
    let program = AngleProgram::from_params(&r.x, schedule)?;
    if r.f < REFINE_TARGET {
        Ok(RefineOutcome {
            program,
            cost: r.f,
            iters: r.iters,
        })
    } else {
        Err(Error::NotConverged(r.f))
    }
}
