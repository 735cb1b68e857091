use crate::output::{opt6, sig6, to_json, Artifacts, Table};
use crate::Failure;
use mqsp_core::angle_finding::{
    angle_error, block_op_count, block_peel, canonicalize, segments_of, standard_op_count, standard_peel,
};
use mqsp_core::barriers::{ensemble_survey, EnsembleKind, Predictors, Summary, SurveyOptions};
use mqsp_core::degree_bounds::{
    compare, degree_lower_bound, degree_upper_bound, oracle_min_degree, BoundInputs, COMPARISON_GRID, LCHS_C, LCHS_P,
};
use mqsp_core::landscape::{run_survey, ScheduleKind, SurveyConfig, TargetKind};
use mqsp_core::qsp_core::{block_schedule, extract, interleaved_schedule, overparameterization_ratio, AngleProgram};
use mqsp_core::seeds::{rng_for, STREAM_ROUND_TRIP};
use mqsp_core::td_sim::{validate, TDBenchmark, TDValidation};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------- bounds

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsConfig {
    pub c: f64,
    pub eps: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig { c: 2.0, eps: 1e-6 }
    }
}

#[derive(Serialize)]
struct BoundsOut {
    lower: i64,
    upper: usize,
    oracle: usize,
}

pub fn bounds(cfg: &BoundsConfig) -> Result<Artifacts, Failure> {
    let inp = BoundInputs::new(cfg.c, cfg.eps)?;
    let out = BoundsOut { lower: degree_lower_bound(inp)?, upper: degree_upper_bound(inp)?, oracle: oracle_min_degree(inp)? };
    let bracket_ok = out.lower <= out.oracle as i64 && out.oracle <= out.upper;
    let art = Artifacts::single(to_json(&out));
    if !bracket_ok {
        return Err(Failure::Validation(format!("oracle {} outside [{}, {}]", out.oracle, out.lower, out.upper), art));
    }
    Ok(art)
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    /// `(alphaT, betaT, eps)` rows.
    pub rows: Vec<(f64, f64, f64)>,
    pub lchs_c: f64,
    pub lchs_p: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { rows: COMPARISON_GRID.to_vec(), lchs_c: LCHS_C, lchs_p: LCHS_P }
    }
}

pub fn compare_table(cfg: &CompareConfig) -> Result<Artifacts, Failure> {
    let mut t = Table::new(["alphaT", "betaT", "eps", "Q_mqsp", "Q_LCU", "ratio_LCU", "Q_LCHS", "ratio_LCHS", "Q_lower"]);
    for &(a, b, e) in &cfg.rows {
        let r = compare(a, b, e, cfg.lchs_c, cfg.lchs_p)?;
        t.push(vec![
            sig6(r.alpha_t),
            sig6(r.beta_t),
            sig6(r.eps),
            r.q_mqsp.to_string(),
            r.q_lcu.to_string(),
            sig6(r.ratio_lcu),
            r.q_lchs.to_string(),
            sig6(r.ratio_lchs),
            sig6(r.q_lower),
        ]);
    }
    Ok(Artifacts::single(t.to_csv()))
}

// ---------------------------------------------------------------- angles

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleChoice {
    Block,
    Interleaved,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnglesConfig {
    pub programs: usize,
    /// Largest degree in each family.
    pub max_degree: usize,
    pub schedule: ScheduleChoice,
    pub theta_max: f64,
    pub angle_tol: f64,
    pub crc_tol: f64,
}

impl Default for AnglesConfig {
    fn default() -> Self {
        AnglesConfig {
            programs: 100,
            max_degree: 20,
            schedule: ScheduleChoice::Both,
            theta_max: std::f64::consts::FRAC_PI_4,
            angle_tol: 1e-9,
            crc_tol: 1e-10,
        }
    }
}

struct RoundTrip {
    kind: &'static str,
    d_r: usize,
    d_i: usize,
    angle_err: f64,
    crc_var: f64,
    coeff_err: f64,
    block_ops: u64,
    standard_ops: u64,
}

fn round_trip(cfg: &AnglesConfig, seed: u64, idx: usize) -> mqsp_core::Result<RoundTrip> {
    let mut rng = rng_for(seed, STREAM_ROUND_TRIP, idx as u64);
    let (d_r, d_i) = loop {
        let pair = (rng.random_range(0..=cfg.max_degree), rng.random_range(0..=cfg.max_degree));
        if pair != (0, 0) {
            break pair;
        }
    };
    let interleaved = match cfg.schedule {
        ScheduleChoice::Block => false,
        ScheduleChoice::Interleaved => true,
        ScheduleChoice::Both => idx % 2 == 1,
    };
    let schedule = if interleaved { interleaved_schedule(d_r, d_i) } else { block_schedule(d_r, d_i) };
    let prog = AngleProgram::random(&mut rng, schedule.clone(), (0.0, cfg.theta_max));
    let (p, q) = extract(&prog);
    let (rec, trace) = block_peel(&p, &q, &segments_of(&schedule))?;
    let (rec_std, _) = standard_peel(&p, &q, &schedule)?;
    let truth = canonicalize(&prog);
    let (p2, q2) = extract(&rec);
    Ok(RoundTrip {
        kind: if interleaved { "interleaved" } else { "block" },
        d_r,
        d_i,
        angle_err: angle_error(&rec, &truth).max(angle_error(&rec_std, &truth)),
        crc_var: trace.max_crc_variation(),
        coeff_err: p.max_abs_diff(&p2).max(q.max_abs_diff(&q2)),
        block_ops: block_op_count(&schedule),
        standard_ops: standard_op_count(&schedule),
    })
}

pub fn angles(cfg: &AnglesConfig, seed: u64) -> Result<Artifacts, Failure> {
    if cfg.programs == 0 || cfg.max_degree == 0 {
        return Err(Failure::Usage("programs and max_degree must be positive".into()));
    }
    let runs: Vec<mqsp_core::Result<RoundTrip>> = (0..cfg.programs).into_par_iter().map(|i| round_trip(cfg, seed, i)).collect();
    let mut t = Table::new(["index", "schedule", "d_R", "d_I", "angle_err", "crc_var", "coeff_err", "block_ops", "standard_ops"]);
    let mut bad = 0usize;
    for (i, r) in runs.into_iter().enumerate() {
        let r = r?;
        if r.angle_err > cfg.angle_tol || r.crc_var > cfg.crc_tol {
            bad += 1;
        }
        t.push(vec![
            i.to_string(),
            r.kind.into(),
            r.d_r.to_string(),
            r.d_i.to_string(),
            sig6(r.angle_err),
            sig6(r.crc_var),
            sig6(r.coeff_err),
            r.block_ops.to_string(),
            r.standard_ops.to_string(),
        ]);
    }
    let art = Artifacts::single(t.to_csv());
    if bad > 0 {
        return Err(Failure::Validation(format!("{bad} of {} round trips exceed tolerance", cfg.programs), art));
    }
    Ok(art)
}

// ---------------------------------------------------------------- landscape

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LandscapeConfig {
    One(SurveyConfig),
    Many(Vec<SurveyConfig>),
}

impl LandscapeConfig {
    pub fn into_vec(self) -> Vec<SurveyConfig> {
        match self {
            LandscapeConfig::One(c) => vec![c],
            LandscapeConfig::Many(v) => v,
        }
    }
}

pub fn default_survey() -> SurveyConfig {
    SurveyConfig::new((1, 1), 1.0, 1.0, TargetKind::SingleRow, 300, 1)
}

pub fn parse_target(s: &str) -> Result<TargetKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown target kind '{s}'"))
}

pub fn parse_schedule(s: &str) -> Result<ScheduleKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown schedule '{s}'"))
}

#[derive(Serialize)]
struct LandscapeRecord<'a> {
    config: &'a SurveyConfig,
    result: &'a mqsp_core::landscape::SurveyResult,
}

pub fn landscape(cfgs: &[SurveyConfig]) -> Result<Artifacts, Failure> {
    let mut t = Table::new(["d_R", "d_I", "n_P", "OR", "kappa", "conv", "ci_lo", "ci_hi", "slm"]);
    let mut results = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        results.push(run_survey(cfg)?);
    }
    for (cfg, r) in cfgs.iter().zip(&results) {
        let (dr, di) = cfg.bidegree;
        t.push(vec![
            dr.to_string(),
            di.to_string(),
            (2 * (dr + di + 1)).to_string(),
            sig6(overparameterization_ratio(dr, di)),
            sig6(r.kappa_at_best),
            sig6(r.rate),
            sig6(r.wilson_ci.0),
            sig6(r.wilson_ci.1),
            r.n_spurious.to_string(),
        ]);
    }
    let records: Vec<LandscapeRecord> = cfgs.iter().zip(&results).map(|(config, result)| LandscapeRecord { config, result }).collect();
    Ok(Artifacts { primary: t.to_csv(), companions: vec![(".json", to_json(&records))] })
}

// ---------------------------------------------------------------- barriers

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BarriersConfig {
    pub ensemble: EnsembleKind,
    pub n: usize,
    pub samples: usize,
    #[serde(rename = "betaT")]
    pub beta_t: Vec<f64>,
    pub param: f64,
    pub kreiss: bool,
    pub pseudo_eps: Vec<f64>,
    pub defect: bool,
}

impl Default for BarriersConfig {
    fn default() -> Self {
        BarriersConfig {
            ensemble: EnsembleKind::GueWishart,
            n: 8,
            samples: 200,
            beta_t: vec![5.0, 10.0, 20.0],
            param: SurveyOptions::default().param,
            kreiss: false,
            pseudo_eps: Vec::new(),
            defect: false,
        }
    }
}

#[derive(Serialize)]
struct BarrierCell {
    kind: EnsembleKind,
    n: usize,
    #[serde(rename = "betaT")]
    beta_t: f64,
    ratio: Summary,
    log10_advantage: Summary,
    kreiss: Option<Summary>,
}

#[derive(Serialize)]
struct BarrierSummary<'a> {
    config: &'a BarriersConfig,
    seed: u64,
    cells: Vec<BarrierCell>,
}

pub fn barriers(cfg: &BarriersConfig, seed: u64) -> Result<Artifacts, Failure> {
    if cfg.beta_t.is_empty() {
        return Err(Failure::Usage("at least one betaT value is required".into()));
    }
    let opts = SurveyOptions { param: cfg.param, kreiss: cfg.kreiss, pseudo_eps: cfg.pseudo_eps.clone(), defect: cfg.defect };
    let rep = ensemble_survey(cfg.ensemble, cfg.n, &cfg.beta_t, cfg.samples, seed, &opts)?;
    let mut header: Vec<String> =
        ["sample", "seed", "betaT", "omega", "ratio", "log10_advantage", "log_lambda_restricted", "defect_rank", "min_defect_eig", "kreiss"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend(cfg.pseudo_eps.iter().map(|e| format!("pseudo_abscissa_{}", sig6(*e))));
    header.extend(Predictors::NAMES.iter().map(|s| s.to_string()));
    header.push("degenerate_top".into());
    let mut t = Table::new(header);
    for r in &rep.records {
        let mut row = vec![
            r.sample.to_string(),
            r.seed.to_string(),
            sig6(r.beta_t),
            sig6(r.omega),
            sig6(r.ratio),
            sig6(r.log10_advantage),
            sig6(r.log_lambda_restricted),
            r.defect_rank.map(|v| v.to_string()).unwrap_or_default(),
            opt6(r.min_defect_eig),
            opt6(r.kreiss),
        ];
        row.extend(r.pseudo_abscissa.iter().map(|&(_, v)| sig6(v)));
        row.extend(r.predictors.as_array().iter().map(|&v| sig6(v)));
        row.push(r.predictors.degenerate_top.to_string());
        t.push(row);
    }
    let cells = rep
        .summaries
        .iter()
        .map(|c| {
            let kreiss: Vec<f64> =
                rep.records.iter().filter(|r| r.beta_t == c.beta_t).filter_map(|r| r.kreiss).collect();
            BarrierCell {
                kind: c.kind,
                n: c.n,
                beta_t: c.beta_t,
                ratio: c.ratio.clone(),
                log10_advantage: c.log10_advantage.clone(),
                kreiss: (!kreiss.is_empty()).then(|| Summary::of(&kreiss)),
            }
        })
        .collect();
    let summary = BarrierSummary { config: cfg, seed, cells };
    Ok(Artifacts { primary: t.to_csv(), companions: vec![(".summary.json", to_json(&summary))] })
}

// ---------------------------------------------------------------- tdsim

/// `(T, r)` rows of the time-dependent validation table.
pub const TD_ROWS: [(f64, usize); 4] = [(2.0, 4), (5.0, 8), (10.0, 16), (20.0, 32)];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TdConfig {
    pub rows: Vec<(f64, usize)>,
    pub eps: f64,
    pub j: f64,
    pub h: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl Default for TdConfig {
    fn default() -> Self {
        let b = TDBenchmark::default();
        TdConfig { rows: TD_ROWS.to_vec(), eps: 1e-6, j: b.j, h: b.h, gamma: b.gamma, omega: b.omega }
    }
}

pub fn tdsim(cfg: &TdConfig) -> Result<Artifacts, Failure> {
    let bench = TDBenchmark { j: cfg.j, h: cfg.h, gamma: cfg.gamma, omega: cfg.omega, ..TDBenchmark::default() };
    let rows: Vec<mqsp_core::Result<TDValidation>> =
        cfg.rows.par_iter().map(|&(t, r)| validate(&bench, t, r, cfg.eps)).collect();
    let mut t = Table::new(["T", "r", "d", "crc_var", "angle_err", "circuit_err"]);
    let mut bad = 0;
    for v in rows {
        let v = v?;
        if v.circuit_err.is_nan() || v.circuit_err >= cfg.eps {
            bad += 1;
        }
        t.push(vec![sig6(v.t), v.r.to_string(), v.d.to_string(), sig6(v.crc_var), sig6(v.angle_err), sig6(v.circuit_err)]);
    }
    let art = Artifacts::single(t.to_csv());
    if bad > 0 {
        return Err(Failure::Validation(format!("{bad} rows have circuit error at or above {:e}", cfg.eps), art));
    }
    Ok(art)
}
