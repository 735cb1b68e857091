//! Acceptance run: one PASS/FAIL line per criterion. Shortfalls are
//! reported, not asserted, so the run always completes.

use mqsp_core::angle_finding::*;
use mqsp_core::barriers::*;
use mqsp_core::degree_bounds::*;
use mqsp_core::landscape::*;
use mqsp_core::linalg::{hermitian_eigen, CMat};
use mqsp_core::qsp_core::*;
use mqsp_core::seeds::rng_for;
use mqsp_core::td_sim::{segment_degrees, validate, TDBenchmark};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::Rng;
use std::f64::consts::PI;
use std::time::Instant;

const MASTER_SEED: u64 = 2026;
const ACCEPT_STREAM: u64 = 100;

type Outcome = Result<(bool, String), mqsp_core::Error>;

fn c1_degree_bracket() -> Outcome {
    let mut ok = true;
    for c in [0.5, 1.0, 2.0, 5.0] {
        for eps in [1e-3, 1e-5, 1e-7, 1e-10, 1e-12] {
            let inp = BoundInputs::new(c, eps)?;
            let (lo, or, hi) = (
                degree_lower_bound(inp)?,
                oracle_min_degree(inp)?,
                degree_upper_bound(inp)?,
            );
            ok &= lo <= or as i64 && or <= hi;
        }
    }
    let inp = BoundInputs::new(2.0, 1e-6)?;
    let got = (
        degree_lower_bound(inp)?,
        degree_upper_bound(inp)?,
        oracle_min_degree(inp)?,
    );
    ok &= got == (5, 7, 7);
    Ok((
        ok,
        format!("20-point grid bracketed; (c=2, eps=1e-6) -> [lower, upper, oracle] = {got:?}"),
    ))
}

/// The published interval is quoted to two decimals; values are compared
/// after rounding to that precision.
fn c2_eta_range() -> Outcome {
    let eps: Vec<f64> = (0..=120)
        .map(|k| 10f64.powf(-3.0 - 12.0 * k as f64 / 120.0))
        .collect();
    let vals: Vec<f64> = eps.iter().map(|&e| eta_closed_form(e)).collect();
    let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
    let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
    let round2 = |x: f64| (x * 100.0).round() / 100.0;
    let ok = vals.iter().all(|&v| (0.66..=0.78).contains(&round2(v)));
    Ok((
        ok,
        format!(
            "eta* over [1e-15, 1e-3] spans [{lo:.5}, {hi:.5}] (two-decimal [{:.2}, {:.2}])",
            round2(lo),
            round2(hi)
        ),
    ))
}

fn c3_table_three() -> Outcome {
    let rows: Vec<ComparisonRow> = COMPARISON_GRID
        .iter()
        .map(|&(a, b, e)| compare(a, b, e, LCHS_C, LCHS_P))
        .collect::<Result<_, _>>()?;
    let q_ok = ((rows[0].q_mqsp as f64 - 48.0) / 48.0).abs() <= 0.10;
    let published = [2.5, 3.1, 3.5, 3.5, 4.8, 5.8];
    let lcu_ok = rows
        .iter()
        .zip(published)
        .all(|(r, p)| ((r.ratio_lcu - p) / p).abs() <= 0.20);
    let mono_eps = rows[0].ratio_lcu < rows[1].ratio_lcu
        && rows[1].ratio_lcu < rows[2].ratio_lcu
        && rows[3].ratio_lcu < rows[4].ratio_lcu
        && rows[4].ratio_lcu < rows[5].ratio_lcu;
    let mono_beta = (0..3).all(|k| rows[k + 3].ratio_lcu > rows[k].ratio_lcu);
    let argmax = (0..6)
        .max_by(|&i, &j| rows[i].ratio_lchs.total_cmp(&rows[j].ratio_lchs))
        .unwrap();
    let lchs_ok = argmax == 2;
    let lcu: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.ratio_lcu)).collect();
    let lchs: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.1}", r.ratio_lchs))
        .collect();
    Ok((
        q_ok && lcu_ok && mono_eps && mono_beta && lchs_ok,
        format!(
            "Q(10,10,1e-3)={} [{}]; LCU ratios {lcu:?} [{}]; LCU monotone [{}]; LCHS ratios {lchs:?}, max at row {} (want row 2) [{}]",
            rows[0].q_mqsp,
            tag(q_ok),
            tag(lcu_ok),
            tag(mono_eps && mono_beta),
            argmax,
            tag(lchs_ok)
        ),
    ))
}

fn c4_round_trip() -> Outcome {
    let mut worst_angle: f64 = 0.0;
    let mut worst_crc: f64 = 0.0;
    for k in 0..100u64 {
        let mut rng = rng_for(MASTER_SEED, ACCEPT_STREAM, k);
        let (dr, di) = (rng.random_range(0..=20), rng.random_range(0..=20));
        if dr + di == 0 {
            continue;
        }
        let s = if k % 2 == 0 {
            block_schedule(dr, di)
        } else {
            interleaved_schedule(dr, di)
        };
        let prog = AngleProgram::random(&mut rng, s.clone(), (0.0, PI / 4.0));
        let (p, q) = extract(&prog);
        let truth = canonicalize(&prog);
        let (rec, trace) = block_peel(&p, &q, &segments_of(&s))?;
        let (rec_std, trace_std) = standard_peel(&p, &q, &s)?;
        worst_angle = worst_angle
            .max(angle_error(&rec, &truth))
            .max(angle_error(&rec_std, &truth));
        worst_crc = worst_crc
            .max(trace.max_crc_variation())
            .max(trace_std.max_crc_variation());
    }
    Ok((
        worst_angle <= 1e-9 && worst_crc <= 1e-10,
        format!("max angle error {worst_angle:.2e}, max CRC variation {worst_crc:.2e}"),
    ))
}

fn c5_block_cost() -> Outcome {
    let sizes = [
        (10, 10, 100u64),
        (50, 50, 2500),
        (100, 100, 10000),
        (50, 20, 1000),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (dr, di, want) in sizes {
        let s = block_schedule(dr, di);
        let (b, st) = (block_op_count(&s), standard_op_count(&s));
        ok &= b == want && b < st;
        detail.push(format!("({dr},{di}): block {b}, standard {st}"));
    }
    Ok((ok, detail.join("; ")))
}

fn c6_landscape() -> Outcome {
    let cfg = SurveyConfig::new((1, 1), 1.0, 1.0, TargetKind::SingleRow, 300, MASTER_SEED);
    let r = run_survey(&cfg)?;
    let rate_ok = (0.55..=0.80).contains(&r.rate);
    let slm_ok = r.n_spurious >= 1;
    let best_ok = r.best_cost < 1e-10;
    Ok((
        rate_ok && slm_ok && best_ok,
        format!(
            "rate {:.3} (CI {:.3}-{:.3}) [{}]; in-window spurious minima {} [{}]; best cost {:.2e} [{}]",
            r.rate,
            r.wilson_ci.0,
            r.wilson_ci.1,
            tag(rate_ok),
            r.n_spurious,
            tag(slm_ok),
            r.best_cost,
            tag(best_ok)
        ),
    ))
}

fn c7_warm_start() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for h in [2usize, 3] {
        let target = dyson_single_row(h, h, 1.0, 1.0);
        let r = run_survey(&SurveyConfig::new(
            (h, h),
            1.0,
            1.0,
            TargetKind::SingleRow,
            60,
            MASTER_SEED,
        ))?;
        if r.best_cost >= 1e-20 {
            ok = false;
            detail.push(format!(
                "({h},{h}): no zero-residual centre found (best {:.2e})",
                r.best_cost
            ));
            continue;
        }
        let rate = warm_start_survey(&r.best, &target, 0.05, 50, MASTER_SEED, 1e-10)?;
        ok &= rate == 1.0;
        detail.push(format!("({h},{h}): {:.0}% reconverged", 100.0 * rate));
    }
    Ok((ok, detail.join("; ")))
}

fn c8_kappa() -> Outcome {
    let rep = kappa_sweep(&[2, 4, 6, 8, 10], 1.0, 1.0, 400, MASTER_SEED)?;
    let k2 = rep.rows[0].kappa;
    let k_ok = (3.5..=14.0).contains(&k2);
    let e = rep.sigma_min_fit.exponent;
    let e_ok = (-2.5..=-1.5).contains(&e);
    let rows: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("d={}:n={},kappa={:.3}", r.d, r.n_converged, r.kappa))
        .collect();
    Ok((
        k_ok && e_ok,
        format!(
            "median kappa(d=2) {k2:.3} [{}]; sigma_min exponent {e:.2} [{}]; rows {rows:?}",
            tag(k_ok),
            tag(e_ok)
        ),
    ))
}

fn c9_barrier_ensemble() -> Outcome {
    let rep = ensemble_survey(
        EnsembleKind::GueWishart,
        8,
        &[5.0, 10.0, 20.0],
        200,
        MASTER_SEED,
        &SurveyOptions::default(),
    )?;
    let first: Vec<&DiagnosticsRecord> = rep.records.iter().filter(|r| r.beta_t == 5.0).collect();
    let mean = first.iter().map(|r| r.ratio).sum::<f64>() / first.len() as f64;
    let mean_ok = (0.60..=0.82).contains(&mean);
    let bound_ok = rep.records.iter().all(|r| r.ratio <= 1.0 + 1e-10);
    let medians: Vec<f64> = rep
        .summaries
        .iter()
        .map(|s| s.log10_advantage.median)
        .collect();
    let mono_ok = medians.windows(2).all(|w| w[1] > w[0]);
    Ok((
        mean_ok && bound_ok && mono_ok,
        format!(
            "mean omega/beta {mean:.3} [{}]; omega <= beta_I [{}]; median log10 advantage {medians:.3?} [{}]",
            tag(mean_ok),
            tag(bound_ok),
            tag(mono_ok)
        ),
    ))
}

fn c10_defect() -> Outcome {
    let mut rank3 = 0;
    let mut fails_below = 0;
    let mut holds_above = 0;
    let mut ratio_ok = 0;
    let mut ratios = Vec::new();
    for s in 0..50u64 {
        let mut rng = rng_for(MASTER_SEED, ACCEPT_STREAM + 1, s);
        let pair = sample_pair(EnsembleKind::GueWishart, 4, 0.1, &mut rng)?;
        let t = 5.0 / pair.beta_i;
        let lam = 5.0f64.exp();
        rank3 += (defect_check(&pair, t, lam)?.rank == 3) as usize;
        fails_below += (!defect_check(&pair, t, 0.99 * lam)?.is_contraction) as usize;
        holds_above += defect_check(&pair, t, 1.01 * lam)?.is_contraction as usize;
        let ratio = minimal_contraction_ratio(&pair, t, 1e-9)?;
        ratio_ok += ((ratio - 1.0).abs() <= 1e-6) as usize;
        ratios.push(ratio);
    }
    let med = Summary::of(&ratios).median;
    Ok((
        rank3 == 50 && fails_below == 50 && holds_above == 50 && ratio_ok == 50,
        format!(
            "rank 3 at lambda: {rank3}/50; fails at 0.99 lambda: {fails_below}/50; holds at 1.01 lambda: {holds_above}/50; minimal ratio within 1e-6 of 1: {ratio_ok}/50 (median ratio {med:.3})"
        ),
    ))
}

fn commuting_pair(seed: u64) -> Result<HamiltonianPair, mqsp_core::Error> {
    let mut rng = rng_for(MASTER_SEED, ACCEPT_STREAM + 2, seed);
    let base = sample_pair(EnsembleKind::GueWishart, 4, 0.1, &mut rng)?;
    let (_, v) = hermitian_eigen(&base.h_r);
    let dr: Vec<C64> = (0..4)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0))
        .collect();
    let di: Vec<C64> = (0..4)
        .map(|_| C64::new(rng.random_range(0.0..1.0), 0.0))
        .collect();
    let conj =
        |d: Vec<C64>| -> CMat { &v * CMat::from_diagonal(&DVector::from_vec(d)) * v.adjoint() };
    HamiltonianPair::new(conj(dr), conj(di))
}

fn c11_kreiss() -> Outcome {
    let opts = SurveyOptions {
        kreiss: true,
        pseudo_eps: vec![0.1],
        ..SurveyOptions::default()
    };
    let rep = ensemble_survey(EnsembleKind::GueWishart, 4, &[5.0], 100, MASTER_SEED, &opts)?;
    let k: Vec<f64> = rep.records.iter().map(|r| r.kreiss.unwrap()).collect();
    let a: Vec<f64> = rep
        .records
        .iter()
        .map(|r| r.pseudo_abscissa[0].1 * r.ratio / r.omega)
        .collect();
    let (km, am) = (Summary::of(&k).mean, Summary::of(&a).mean);
    let k_ok = (1.1..=1.8).contains(&km);
    let a_ok = (0.84..=0.94).contains(&am);
    let mut worst: f64 = 0.0;
    for s in 0..10 {
        worst = worst.max((kreiss_constant(&commuting_pair(s)?)? - 1.0).abs());
    }
    let c_ok = worst <= 1e-3;
    Ok((
        k_ok && a_ok && c_ok,
        format!(
            "mean Kreiss {km:.3} [{}]; mean alpha_0.1/beta {am:.3} [{}]; commuting |K-1| max {worst:.1e} [{}]",
            tag(k_ok),
            tag(a_ok),
            tag(c_ok)
        ),
    ))
}

fn c12_predictors() -> Outcome {
    let rep = ensemble_survey(
        EnsembleKind::GueWishart,
        8,
        &[5.0],
        1000,
        MASTER_SEED,
        &SurveyOptions::default(),
    )?;
    let ys: Vec<f64> = rep.records.iter().map(|r| r.ratio).collect();
    let mut r2 = [0.0; 5];
    for (i, slot) in r2.iter_mut().enumerate() {
        let xs: Vec<f64> = rep
            .records
            .iter()
            .map(|r| r.predictors.as_array()[i])
            .collect();
        *slot = regression_r2(&xs, &ys)?;
    }
    let best = (0..5).max_by(|&i, &j| r2[i].total_cmp(&r2[j])).unwrap();
    let top_ok = best == 0;
    let proj_ok = (0.30..=0.60).contains(&r2[0]);
    let full_ok = (0.05..=0.30).contains(&r2[2]);
    let named: Vec<String> = Predictors::NAMES
        .iter()
        .zip(r2)
        .map(|(n, v)| format!("{n}={v:.3}"))
        .collect();
    Ok((
        top_ok && proj_ok && full_ok,
        format!(
            "R2 {named:?}; projected highest [{}]; projected in range [{}]; full in range [{}]",
            tag(top_ok),
            tag(proj_ok),
            tag(full_ok)
        ),
    ))
}

fn c13_unitarity_gradients() -> Outcome {
    let mut rng = rng_for(MASTER_SEED, ACCEPT_STREAM + 3, 0);
    let mut worst_u: f64 = 0.0;
    for k in 0..10_000 {
        let d = rng.random_range(0..=60usize);
        let dr = rng.random_range(0..=d);
        let s = if k % 2 == 0 {
            block_schedule(dr, d - dr)
        } else {
            interleaved_schedule(dr, d - dr)
        };
        let prog = AngleProgram::random(&mut rng, s, (0.0, PI));
        let v = evaluate(
            &prog,
            C64::from_polar(1.0, rng.random_range(-PI..PI)),
            C64::from_polar(1.0, rng.random_range(-PI..PI)),
        );
        worst_u = worst_u.max((v.p().norm_sqr() + v.q().norm_sqr() - 1.0).abs());
    }
    let mut worst_g: f64 = 0.0;
    for _ in 0..100 {
        let s = block_schedule(rng.random_range(1..=5), rng.random_range(1..=5));
        let prog = AngleProgram::random(&mut rng, s.clone(), (0.0, PI));
        let (target, _) = extract(&AngleProgram::random(&mut rng, s.clone(), (0.0, PI)));
        let g = gradient(&prog, &target)?;
        let x = prog.params();
        let h = 1e-5;
        let mut fd = vec![0.0; x.len()];
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            fd[i] = (cost(&AngleProgram::from_params(&xp, s.clone())?, &target)?
                - cost(&AngleProgram::from_params(&xm, s.clone())?, &target)?)
                / (2.0 * h);
        }
        let num = fd
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let den = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        worst_g = worst_g.max(num / den);
    }
    Ok((
        worst_u <= 1e-12 && worst_g <= 1e-6,
        format!("max | |P|^2+|Q|^2-1 | {worst_u:.2e}; max relative gradient error {worst_g:.2e}"),
    ))
}

fn c14_time_dependent() -> Outcome {
    let bench = TDBenchmark::default();
    let rows = [(2.0, 4usize), (5.0, 8), (10.0, 16), (20.0, 32)];
    let mut ok = true;
    let mut ts = Vec::new();
    let mut ds = Vec::new();
    let mut detail = Vec::new();
    for (t, r) in rows {
        let v = validate(&bench, t, r, 1e-6)?;
        ok &= v.circuit_err < 1e-6 && v.crc_var < 1e-9 && v.angle_err < 1e-10;
        ts.push(t);
        ds.push(v.d as f64);
        detail.push(format!(
            "T={t}: d={} crc {:.1e} angle {:.1e} circuit {:.1e}",
            v.d, v.crc_var, v.angle_err, v.circuit_err
        ));
    }
    let (a, b) = linear_fit(&ts, &ds);
    let mean = ds.iter().sum::<f64>() / ds.len() as f64;
    let resid = ts
        .iter()
        .zip(&ds)
        .map(|(t, d)| (d - (a + b * t)).abs())
        .fold(0.0, f64::max)
        / mean;
    let affine_ok = resid <= 0.10;
    let d_first: usize = segment_degrees(&bench, 2.0, 4, 1e-6)?
        .iter()
        .map(|s| s.0 + s.1)
        .sum();
    detail.push(format!(
        "affine residual {:.1}% of mean [{}]; d at (2,4) is {d_first} (published 14)",
        100.0 * resid,
        tag(affine_ok)
    ));
    Ok((ok && affine_ok, detail.join("; ")))
}

fn c15_pade() -> Outcome {
    let r = pade_torus_sup(6, 6, 1.0)?;
    let gap = (r.sup - std::f64::consts::E).abs();
    Ok((
        gap <= 1e-3 && r.min_pole_modulus > 1.0,
        format!(
            "|sup - e| {gap:.2e}; min pole modulus {:.3}",
            r.min_pole_modulus
        ),
    ))
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 15] = [
        ("degree bracket", c1_degree_bracket),
        ("eta* range", c2_eta_range),
        ("method comparison table", c3_table_three),
        ("angle round trip", c4_round_trip),
        ("block-peel cost", c5_block_cost),
        ("landscape statistics", c6_landscape),
        ("warm-start basin", c7_warm_start),
        ("kappa scaling", c8_kappa),
        ("barrier ensemble", c9_barrier_ensemble),
        ("defect sharpness", c10_defect),
        ("Kreiss and pseudospectra", c11_kreiss),
        ("gap predictors", c12_predictors),
        ("unitarity and gradients", c13_unitarity_gradients),
        ("time-dependent pipeline", c14_time_dependent),
        ("Pade barrier", c15_pade),
    ];
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        println!(
            "{} {:>2} {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
}
