use crate::commands::{angles, AnglesConfig, ScheduleChoice};
use crate::output::{sig6, Artifacts, Table};
use mqsp_core::barriers::{ensemble_survey, pade_torus_sup, EnsembleKind, SurveyOptions};
use mqsp_core::degree_bounds::{degree_lower_bound, degree_upper_bound, oracle_min_degree, BoundInputs};
use mqsp_core::landscape::{run_survey, SurveyConfig, TargetKind};
use mqsp_core::qsp_core::{block_schedule, cost, evaluate, extract, gradient, interleaved_schedule, AngleProgram};
use mqsp_core::seeds::rng_for;
use mqsp_core::td_sim::{validate, TDBenchmark};
use num_complex::Complex64 as C64;
use rand::Rng;
use std::f64::consts::PI;

type Check = (&'static str, fn(u64) -> mqsp_core::Result<(bool, f64)>);

const SELFTEST_STREAM: u64 = 99;

fn bounds_bracket(_: u64) -> mqsp_core::Result<(bool, f64)> {
    let inp = BoundInputs::new(2.0, 1e-6)?;
    let (lo, hi, or) = (degree_lower_bound(inp)?, degree_upper_bound(inp)?, oracle_min_degree(inp)?);
    Ok(((lo, hi, or) == (5, 7, 7), or as f64))
}

fn round_trips(seed: u64) -> mqsp_core::Result<(bool, f64)> {
    let cfg = AnglesConfig { programs: 12, max_degree: 8, schedule: ScheduleChoice::Both, ..AnglesConfig::default() };
    Ok((angles(&cfg, seed).is_ok(), cfg.programs as f64))
}

fn unitarity(seed: u64) -> mqsp_core::Result<(bool, f64)> {
    let mut rng = rng_for(seed, SELFTEST_STREAM, 0);
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let (dr, di) = (rng.random_range(0..=30), rng.random_range(0..=30));
        let s = if k % 2 == 0 { block_schedule(dr, di) } else { interleaved_schedule(dr, di) };
        let prog = AngleProgram::random(&mut rng, s, (0.0, PI));
        let v = evaluate(&prog, C64::from_polar(1.0, rng.random_range(-PI..PI)), C64::from_polar(1.0, rng.random_range(-PI..PI)));
        worst = worst.max((v.p().norm_sqr() + v.q().norm_sqr() - 1.0).abs());
    }
    Ok((worst <= 1e-12, worst))
}

fn gradients(seed: u64) -> mqsp_core::Result<(bool, f64)> {
    let mut rng = rng_for(seed, SELFTEST_STREAM, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let s = block_schedule(rng.random_range(1..=4), rng.random_range(1..=4));
        let prog = AngleProgram::random(&mut rng, s.clone(), (0.0, PI));
        let (target, _) = extract(&AngleProgram::random(&mut rng, s.clone(), (0.0, PI)));
        let g = gradient(&prog, &target)?;
        let x = prog.params();
        let h = 1e-6;
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (cost(&AngleProgram::from_params(&xp, s.clone())?, &target)?
                - cost(&AngleProgram::from_params(&xm, s.clone())?, &target)?)
                / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1e-3));
        }
    }
    Ok((worst <= 1e-6, worst))
}

fn survey_determinism(seed: u64) -> mqsp_core::Result<(bool, f64)> {
    let cfg = SurveyConfig::new((1, 1), 1.0, 1.0, TargetKind::SingleRow, 16, seed);
    let (a, b) = (run_survey(&cfg)?, run_survey(&cfg)?);
    Ok((a == b, a.rate))
}

fn abscissa_bound(seed: u64) -> mqsp_core::Result<(bool, f64)> {
    let rep = ensemble_survey(EnsembleKind::GueWishart, 4, &[5.0], 20, seed, &SurveyOptions::default())?;
    let worst = rep.records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok((worst <= 1.0 + 1e-10, worst))
}

fn td_pipeline(_: u64) -> mqsp_core::Result<(bool, f64)> {
    let v = validate(&TDBenchmark::default(), 2.0, 4, 1e-6)?;
    Ok((v.circuit_err < 1e-6 && v.crc_var < 1e-9, v.circuit_err))
}

fn pade_bound(_: u64) -> mqsp_core::Result<(bool, f64)> {
    let r = pade_torus_sup(6, 6, 1.0)?;
    let gap = (r.sup - std::f64::consts::E).abs();
    Ok((gap <= 1e-3 && r.min_pole_modulus > 1.0, gap))
}

const CHECKS: [Check; 8] = [
    ("degree_bracket", bounds_bracket),
    ("angle_round_trip", round_trips),
    ("unitarity", unitarity),
    ("gradient_fd", gradients),
    ("survey_determinism", survey_determinism),
    ("abscissa_below_beta", abscissa_bound),
    ("td_pipeline", td_pipeline),
    ("pade_torus_sup", pade_bound),
];

/// Run the quick invariant checks; returns the report and whether all passed.
pub fn run(seed: u64) -> (Artifacts, bool) {
    let mut t = Table::new(["check", "status", "value"]);
    let mut all = true;
    for (name, f) in CHECKS {
        let (ok, value) = match f(seed) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("{name}: {e}");
                (false, f64::NAN)
            }
        };
        all &= ok;
        t.push(vec![name.into(), if ok { "PASS" } else { "FAIL" }.into(), sig6(value)]);
    }
    (Artifacts::single(t.to_csv()), all)
}
