//! Optimization-landscape experiments on Dyson targets: random-start
//! surveys with spurious-minimum classification, warm-start basins,
//! c_∞ estimation and Jacobian conditioning sweeps.

use crate::error::{Error, Result};
use crate::optim::{self, LbfgsOptions};
use crate::qsp_core::{
    block_schedule, cost, cost_and_gradient, extreme_singular_values, interleaved_schedule,
    jacobian, reduced_jacobian, AngleProgram, CoeffGrid, Schedule,
};
use crate::seeds::{self, rng_for};
use crate::special_fns::bessel_j;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

/// Finite-difference step for Hessians.
pub const HESSIAN_STEP: f64 = 1e-5;
/// Smallest admissible Hessian eigenvalue for a spurious minimum.
pub const HESSIAN_TOL: f64 = 1e-8;
/// Gradient 2-norm below which a non-converged endpoint counts as critical.
pub const CRITICAL_GRAD_TOL: f64 = 1e-8;
/// Cost window for spurious minima.
pub const SPURIOUS_COST_RANGE: (f64, f64) = (1e-6, 1e-1);
/// `|sin θ|` below which a rotation's phase is treated as unidentifiable.
pub const GAUGE_THETA_TOL: f64 = 1e-6;
/// Relative slack on `c_∞` for membership in its basin.
pub const C_INF_SLACK: f64 = 0.01;

/// Single-row Dyson target: `c_{d_R,k} = (-1)^k J_{d_R}(αT) (βT)^k / k!`.
pub fn dyson_single_row(d_r: usize, d_i: usize, alpha_t: f64, beta_t: f64) -> CoeffGrid {
    let mut g = CoeffGrid::zeros(d_r, d_i);
    let j = bessel_j(d_r, alpha_t);
    let mut term = j;
    for k in 0..=d_i {
        if k > 0 {
            term *= -beta_t / k as f64;
        }
        g.set(d_r, k, C64::new(term, 0.0));
    }
    g
}

/// Full Dyson tensor `c_{k,n} = ε_k (-i)^k J_k(αT) (-βT)^n / n!`, `ε_0 = 1`, `ε_k = 2`.
pub fn dyson_full_tensor(d_r: usize, d_i: usize, alpha_t: f64, beta_t: f64) -> CoeffGrid {
    let mut g = CoeffGrid::zeros(d_r, d_i);
    let mut mi = C64::new(1.0, 0.0);
    for k in 0..=d_r {
        let eps = if k == 0 { 1.0 } else { 2.0 };
        let row = mi * eps * bessel_j(k, alpha_t);
        let mut t = 1.0;
        for n in 0..=d_i {
            if n > 0 {
                t *= -beta_t / n as f64;
            }
            g.set(k, n, row * t);
        }
        mi *= C64::new(0.0, -1.0);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    SingleRow,
    FullTensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Block,
    Interleaved,
}

impl ScheduleKind {
    pub fn build(self, d_r: usize, d_i: usize) -> Schedule {
        match self {
            ScheduleKind::Block => block_schedule(d_r, d_i),
            ScheduleKind::Interleaved => interleaved_schedule(d_r, d_i),
        }
    }
}

pub fn build_target(
    kind: TargetKind,
    d_r: usize,
    d_i: usize,
    alpha_t: f64,
    beta_t: f64,
) -> CoeffGrid {
    match kind {
        TargetKind::SingleRow => dyson_single_row(d_r, d_i, alpha_t, beta_t),
        TargetKind::FullTensor => dyson_full_tensor(d_r, d_i, alpha_t, beta_t),
    }
}

fn default_conv_tol() -> f64 {
    1e-10
}

fn default_c_inf_restarts() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyConfig {
    pub bidegree: (usize, usize),
    #[serde(rename = "alphaT")]
    pub alpha_t: f64,
    #[serde(rename = "betaT")]
    pub beta_t: f64,
    pub target_kind: TargetKind,
    pub n_trials: usize,
    pub seed: u64,
    /// Threshold on the residual 2-norm `√cost`.
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
    pub schedule_kind: ScheduleKind,
    /// Restarts used to estimate `c_∞` for full-tensor targets.
    #[serde(default = "default_c_inf_restarts")]
    pub c_inf_restarts: usize,
}

impl SurveyConfig {
    pub fn new(
        bidegree: (usize, usize),
        alpha_t: f64,
        beta_t: f64,
        target_kind: TargetKind,
        n_trials: usize,
        seed: u64,
    ) -> Self {
        SurveyConfig {
            bidegree,
            alpha_t,
            beta_t,
            target_kind,
            n_trials,
            seed,
            conv_tol: default_conv_tol(),
            schedule_kind: ScheduleKind::Block,
            c_inf_restarts: default_c_inf_restarts(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Domain("n_trials must be at least 1".into()));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::Domain(format!(
                "conv_tol must be positive, got {}",
                self.conv_tol
            )));
        }
        if !self.alpha_t.is_finite() || !self.beta_t.is_finite() {
            return Err(Error::Domain("alphaT and betaT must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpuriousRecord {
    pub trial: usize,
    pub final_cost: f64,
    pub min_hessian_eig: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyResult {
    pub n_trials: usize,
    pub n_converged: usize,
    pub rate: f64,
    pub wilson_ci: (f64, f64),
    pub n_spurious: usize,
    pub spurious_records: Vec<SpuriousRecord>,
    /// Reduced-Jacobian condition number at the best trial; `f64::INFINITY` if singular.
    pub kappa_at_best: f64,
    pub best_cost: f64,
    pub best: AngleProgram,
    /// Basin reference for full-tensor targets.
    pub c_infinity: Option<f64>,
}

/// Outcome of one local optimization.
#[derive(Debug, Clone)]
pub struct Descent {
    pub program: AngleProgram,
    pub cost: f64,
    pub grad_norm: f64,
    pub iters: usize,
}

fn lbfgs_options(f_target: f64) -> LbfgsOptions {
    LbfgsOptions {
        grad_tol: 1e-12,
        max_iters: 5000,
        f_target,
        ..LbfgsOptions::default()
    }
}

/// L-BFGS on [`cost`] from `x0`; stops early once `cost < f_target`.
pub fn descend(
    x0: &[f64],
    schedule: &Schedule,
    target: &CoeffGrid,
    f_target: f64,
) -> Result<Descent> {
    let probe = AngleProgram::from_params(x0, schedule.clone())?;
    cost(&probe, target)?;
    let r = optim::minimize(
        |x| {
            let prog = AngleProgram {
                angles: x.chunks(2).map(|c| (c[0], c[1])).collect(),
                schedule: schedule.clone(),
            };
            cost_and_gradient(&prog, target).expect("bidegree checked")
        },
        x0,
        &lbfgs_options(f_target),
    );
    let grad_norm = r.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok(Descent {
        program: AngleProgram::from_params(&r.x, schedule.clone())?,
        cost: r.f,
        grad_norm,
        iters: r.iters,
    })
}

fn uniform_start<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Central-difference Hessian of [`cost`] from the analytic gradient, symmetrized.
pub fn fd_hessian(prog: &AngleProgram, target: &CoeffGrid, h: f64) -> Result<DMatrix<f64>> {
    let x = prog.params();
    let n = x.len();
    let mut hm = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let gp = cost_and_gradient(
            &AngleProgram::from_params(&xp, prog.schedule.clone())?,
            target,
        )?
        .1;
        let gm = cost_and_gradient(
            &AngleProgram::from_params(&xm, prog.schedule.clone())?,
            target,
        )?
        .1;
        for i in 0..n {
            hm[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok(0.5 * (&hm + hm.transpose()))
}

pub fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    h.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// `‖∇²F - 2 JᵀJ‖_F / ‖∇²F‖_F`, small at zero-residual minima.
pub fn gauss_newton_gap(prog: &AngleProgram, target: &CoeffGrid) -> Result<f64> {
    let h = fd_hessian(prog, target, HESSIAN_STEP)?;
    let j = jacobian(prog);
    let gn = 2.0 * j.transpose() * j;
    Ok((&h - gn).norm() / h.norm())
}

/// Full spurious-minimum test on a non-converged endpoint.
pub fn classify_spurious(
    d: &Descent,
    target: &CoeffGrid,
    trial: usize,
) -> Result<Option<SpuriousRecord>> {
    let (lo, hi) = SPURIOUS_COST_RANGE;
    if d.grad_norm >= CRITICAL_GRAD_TOL || d.cost < lo || d.cost > hi {
        return Ok(None);
    }
    let ev = min_eigenvalue(&fd_hessian(&d.program, target, HESSIAN_STEP)?);
    Ok((ev >= -HESSIAN_TOL).then_some(SpuriousRecord {
        trial,
        final_cost: d.cost,
        min_hessian_eig: ev,
        grad_norm: d.grad_norm,
    }))
}

/// `σ_max / σ_min` of the reduced Jacobian at `prog`.
pub fn kappa_at(prog: &AngleProgram) -> f64 {
    let (smin, smax) = extreme_singular_values(&reduced_jacobian(prog, GAUGE_THETA_TOL));
    if smin <= crate::qsp_core::RANK_TOL * smax {
        f64::INFINITY
    } else {
        smax / smin
    }
}

fn run_trials(
    schedule: &Schedule,
    target: &CoeffGrid,
    seed: u64,
    stream: u64,
    n: usize,
    f_target: f64,
) -> Result<Vec<Descent>> {
    let np = 2 * schedule.len() + 2;
    (0..n)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, stream, t as u64);
            descend(&uniform_start(&mut rng, np), schedule, target, f_target)
        })
        .collect()
}

/// Random-start survey of one cell.
pub fn run_survey(cfg: &SurveyConfig) -> Result<SurveyResult> {
    cfg.validate()?;
    let (d_r, d_i) = cfg.bidegree;
    let schedule = cfg.schedule_kind.build(d_r, d_i);
    let target = build_target(cfg.target_kind, d_r, d_i, cfg.alpha_t, cfg.beta_t);
    let f_target = cfg.conv_tol * cfg.conv_tol;
    let trials = run_trials(
        &schedule,
        &target,
        cfg.seed,
        seeds::STREAM_SURVEY,
        cfg.n_trials,
        f_target,
    )?;
    let best_idx = (0..trials.len())
        .min_by(|&a, &b| trials[a].cost.total_cmp(&trials[b].cost))
        .expect("n_trials >= 1");
    let best_cost = trials[best_idx].cost;

    // basin membership as a cost threshold: `√cost < conv_tol`, or within `c_∞` slack
    let (c_infinity, threshold) = match cfg.target_kind {
        TargetKind::SingleRow => (None, f_target),
        TargetKind::FullTensor => {
            let est = estimate_c_infinity(&target, &schedule, cfg.c_inf_restarts, cfg.seed)?;
            let c_inf = est.min(best_cost);
            (Some(c_inf), (1.0 + C_INF_SLACK) * c_inf)
        }
    };
    let in_basin = |c: f64| c < threshold;

    let n_converged = trials.iter().filter(|d| in_basin(d.cost)).count();
    let spurious: Vec<SpuriousRecord> = trials
        .par_iter()
        .enumerate()
        .filter(|(_, d)| !in_basin(d.cost))
        .map(|(t, d)| classify_spurious(d, &target, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let rate = n_converged as f64 / cfg.n_trials as f64;
    Ok(SurveyResult {
        n_trials: cfg.n_trials,
        n_converged,
        rate,
        wilson_ci: wilson_ci(n_converged, cfg.n_trials, 0.95)?,
        n_spurious: spurious.len(),
        spurious_records: spurious,
        kappa_at_best: kappa_at(&trials[best_idx].program),
        best_cost,
        best: trials[best_idx].program.clone(),
        c_infinity,
    })
}

/// Fraction of `n` perturbations `Θ* + eps_pert·ξ`, `ξ ~ N(0, I)`, that
/// reconverge to `√cost < conv_tol`.
pub fn warm_start_survey(
    star: &AngleProgram,
    target: &CoeffGrid,
    eps_pert: f64,
    n: usize,
    seed: u64,
    conv_tol: f64,
) -> Result<f64> {
    let c0 = cost(star, target)?;
    if c0.sqrt() >= conv_tol {
        return Err(Error::Domain(format!(
            "warm-start centre has residual {:e}, not a zero-residual solution",
            c0.sqrt()
        )));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let x = star.params();
    let f_target = conv_tol * conv_tol;
    let ok: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, seeds::STREAM_WARM_START, t as u64);
            let x0: Vec<f64> = x
                .iter()
                .map(|v| v + eps_pert * rng.sample::<f64, _>(StandardNormal))
                .collect();
            descend(&x0, &star.schedule, target, f_target).map(|d| d.cost.sqrt() < conv_tol)
        })
        .collect::<Result<_>>()?;
    Ok(ok.iter().filter(|&&b| b).count() as f64 / n as f64)
}

/// Minimum final cost over `n_restarts` random-start optimizations.
pub fn estimate_c_infinity(
    target: &CoeffGrid,
    schedule: &Schedule,
    n_restarts: usize,
    seed: u64,
) -> Result<f64> {
    if n_restarts == 0 {
        return Err(Error::Domain("n_restarts must be at least 1".into()));
    }
    let runs = run_trials(
        schedule,
        target,
        seed,
        seeds::STREAM_C_INFINITY,
        n_restarts,
        1e-30,
    )?;
    Ok(runs.iter().map(|d| d.cost).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub prefactor: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub prefactor: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub d: usize,
    pub n_converged: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub rows: Vec<KappaRow>,
    pub sigma_min_fit: PowerFit,
    pub sigma_max_fit: PowerFit,
    pub kappa_fit: PowerFit,
    pub kappa_exp_fit: ExpFit,
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

pub fn power_fit(x: &[f64], y: &[f64]) -> PowerFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (a, b) = linear_fit(&lx, &ly);
    PowerFit {
        prefactor: a.exp(),
        exponent: b,
    }
}

pub fn exp_fit(x: &[f64], y: &[f64]) -> ExpFit {
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (a, b) = linear_fit(x, &ly);
    ExpFit {
        prefactor: a.exp(),
        rate: b,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Reduced-Jacobian singular values at converged minima of the single-row
/// target at balanced bidegrees `(d/2, d/2)`, with power-law and exponential fits.
pub fn kappa_sweep(
    d_list: &[usize],
    alpha_t: f64,
    beta_t: f64,
    trials_per_d: usize,
    seed: u64,
) -> Result<KappaReport> {
    if let Some(d) = d_list.iter().find(|&&d| d == 0 || d % 2 == 1) {
        return Err(Error::Domain(format!(
            "kappa_sweep needs even positive d, got {d}"
        )));
    }
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        let h = d / 2;
        let schedule = block_schedule(h, h);
        let target = dyson_single_row(h, h, alpha_t, beta_t);
        let stream_seed = seeds::derive_seed(seed, seeds::STREAM_KAPPA, d as u64);
        let runs = run_trials(
            &schedule,
            &target,
            stream_seed,
            seeds::STREAM_KAPPA,
            trials_per_d,
            1e-22,
        )?;
        let mut smins = Vec::new();
        let mut smaxs = Vec::new();
        let mut kappas = Vec::new();
        for r in runs.iter().filter(|r| r.cost.sqrt() < 1e-10) {
            let (smin, smax) =
                extreme_singular_values(&reduced_jacobian(&r.program, GAUGE_THETA_TOL));
            smins.push(smin);
            smaxs.push(smax);
            kappas.push(smax / smin);
        }
        rows.push(KappaRow {
            d,
            n_converged: kappas.len(),
            sigma_min: median(smins),
            sigma_max: median(smaxs),
            kappa: median(kappas),
        });
    }
    let ok: Vec<&KappaRow> = rows.iter().filter(|r| r.n_converged > 0).collect();
    let ds: Vec<f64> = ok.iter().map(|r| r.d as f64).collect();
    let col = |f: fn(&KappaRow) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
    Ok(KappaReport {
        sigma_min_fit: power_fit(&ds, &col(|r| r.sigma_min)),
        sigma_max_fit: power_fit(&ds, &col(|r| r.sigma_max)),
        kappa_fit: power_fit(&ds, &col(|r| r.kappa)),
        kappa_exp_fit: exp_fit(&ds, &col(|r| r.kappa)),
        rows,
    })
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_ci(k: usize, n: usize, conf: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::Domain(format!(
            "wilson_ci needs 0 <= k <= n, n >= 1; got k={k}, n={n}"
        )));
    }
    if !(conf > 0.0 && conf < 1.0) {
        return Err(Error::Domain(format!(
            "confidence must lie in (0, 1), got {conf}"
        )));
    }
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(0.5 + 0.5 * conf);
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // the bounds at k = 0 and k = n are exactly 0 and 1; avoid rounding residue
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    Ok((lo, hi))
}
