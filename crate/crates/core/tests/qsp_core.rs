use mqsp_core::qsp_core::*;
use mqsp_core::seeds::rng_for;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::{FRAC_PI_4, PI};

type M = [[C64; 2]; 2];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

// Plain-array oracle for the circuit chain.
fn mm(a: &M, b: &M) -> M {
    let mut o = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

fn rot(t: f64, p: f64) -> M {
    let e = C64::from_polar(1.0, p);
    [[c(t.cos()), -e * t.sin()], [e.conj() * t.sin(), c(t.cos())]]
}

fn chain_oracle(prog: &AngleProgram, z1: C64, z2: C64) -> M {
    let mut g = rot(prog.angles[0].0, prog.angles[0].1);
    for (j, f) in prog.schedule.iter().enumerate() {
        let z = if *f == Family::R { z1 } else { z2 };
        g = mm(&g, &[[z, c(0.0)], [c(0.0), c(1.0)]]);
        g = mm(&g, &rot(prog.angles[j + 1].0, prog.angles[j + 1].1));
    }
    g
}

fn unit<R: Rng>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(-PI..PI))
}

fn random_schedule<R: Rng>(rng: &mut R, dr: usize, di: usize) -> Schedule {
    if rng.random_bool(0.5) {
        block_schedule(dr, di)
    } else {
        interleaved_schedule(dr, di)
    }
}

#[test]
fn rotation_gate_conventions() {
    let id = rotation_gate(0.0, 1.23);
    assert_eq!(id, Mat2::identity());
    let flip = rotation_gate(PI / 2.0, 0.0).0;
    assert!(flip[0][0].norm() < 1e-16 && flip[1][1].norm() < 1e-16);
    assert!((flip[0][1].norm() - 1.0).abs() < 1e-15 && (flip[1][0].norm() - 1.0).abs() < 1e-15);
    let mut rng = rng_for(11, 0, 0);
    for _ in 0..1000 {
        let r = rotation_gate(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        assert!((r.det() - 1.0).norm() < 1e-14);
        let g = r.dagger().mul(&r).sub(&Mat2::identity());
        assert!(g.0.iter().flatten().all(|v| v.norm() < 1e-14));
    }
}

#[test]
fn evaluate_matches_oracle() {
    let mut rng = rng_for(11, 0, 1);
    for _ in 0..200 {
        let (dr, di) = (rng.random_range(0..8), rng.random_range(0..8));
        let s = random_schedule(&mut rng, dr, di);
        let prog = AngleProgram::random(&mut rng, s, (0.0, PI));
        let (z1, z2) = (unit(&mut rng), unit(&mut rng));
        let got = evaluate(&prog, z1, z2).0 .0;
        let want = chain_oracle(&prog, z1, z2);
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[i][j] - want[i][j]).norm() < 1e-13);
            }
        }
    }
}

#[test]
fn evaluate_special_programs() {
    let (z1, z2) = (C64::from_polar(1.0, 0.4), C64::from_polar(1.0, -1.1));
    let zero = AngleProgram::zeros(interleaved_schedule(3, 2));
    let v = evaluate(&zero, z1, z2);
    assert!((v.p() - z1.powu(3) * z2.powu(2)).norm() < 1e-14);
    assert!(v.q().norm() < 1e-15);
    let single = AngleProgram::new(vec![(PI / 3.0, 0.7)], vec![]).unwrap();
    let v = evaluate(&single, z1, z2);
    assert!((v.p().norm() - 0.5).abs() < 1e-15);
    assert!((v.q().norm() - 3f64.sqrt() / 2.0).abs() < 1e-15);
}

#[test]
fn unitarity_over_many_programs() {
    let mut rng = rng_for(11, 0, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let d = rng.random_range(0..=60);
        let dr = rng.random_range(0..=d);
        let s = random_schedule(&mut rng, dr, d - dr);
        let prog = AngleProgram::random(&mut rng, s, (-PI, PI));
        let v = evaluate(&prog, unit(&mut rng), unit(&mut rng));
        worst = worst.max((v.p().norm_sqr() + v.q().norm_sqr() - 1.0).abs());
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn extract_hand_example() {
    // R(π/4,0) diag(z,1) R(π/4,0) = ½ [[z-1, -z-1], [z+1, 1-z]]
    let prog =
        AngleProgram::new(vec![(FRAC_PI_4, 0.0), (FRAC_PI_4, 0.0)], vec![Family::R]).unwrap();
    let (p, q) = extract(&prog);
    let close = |a: C64, b: f64| (a - b).norm() < 1e-15;
    assert!(close(p.get(0, 0), -0.5) && close(p.get(1, 0), 0.5));
    assert!(close(q.get(0, 0), 0.5) && close(q.get(1, 0), 0.5));
}

#[test]
fn extract_zero_angles() {
    let (p, q) = extract(&AngleProgram::zeros(block_schedule(2, 3)));
    for m in 0..=2 {
        for n in 0..=3 {
            let want = if (m, n) == (2, 3) { 1.0 } else { 0.0 };
            assert!((p.get(m, n) - want).norm() < 1e-15);
        }
    }
    assert!(q.norm_sqr() < 1e-30);
}

#[test]
fn extract_round_trip_and_boundedness() {
    let mut rng = rng_for(11, 0, 3);
    for _ in 0..20 {
        let (dr, di) = (rng.random_range(0..10), rng.random_range(0..10));
        let prog = {
            let s = random_schedule(&mut rng, dr, di);
            AngleProgram::random(&mut rng, s, (0.0, PI))
        };
        let (p, q) = extract(&prog);
        for _ in 0..100 {
            let (z1, z2) = (unit(&mut rng), unit(&mut rng));
            let v = evaluate(&prog, z1, z2);
            assert!((p.eval(z1, z2) - v.p()).norm() < 1e-12);
            assert!((q.eval(z1, z2) - v.q()).norm() < 1e-12);
        }
        let sup = (0..1000)
            .map(|_| p.eval(unit(&mut rng), unit(&mut rng)).norm())
            .fold(0.0, f64::max);
        assert!(sup <= 1.0 + 1e-10);
    }
}

#[test]
fn coeff_grid_json_round_trip() {
    let mut rng = rng_for(11, 0, 4);
    let prog = AngleProgram::random(&mut rng, interleaved_schedule(4, 3), (0.0, PI));
    let (p, _) = extract(&prog);
    let back = CoeffGrid::from_json(&p.to_json()).unwrap();
    assert_eq!(back, p);
    let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
    assert_eq!(v["bidegree"], serde_json::json!([4, 3]));
    assert!(CoeffGrid::from_json(r#"{"bidegree":[1,1],"coeffs":[[0,0]]}"#).is_err());
}

#[test]
fn cost_values() {
    let mut rng = rng_for(11, 0, 5);
    let prog = AngleProgram::random(&mut rng, block_schedule(3, 2), (0.0, PI));
    let (p, _) = extract(&prog);
    assert!(cost(&prog, &p).unwrap() < 1e-24);
    let z = cost(&prog, &CoeffGrid::zeros(3, 2)).unwrap();
    assert!((z - p.norm_sqr()).abs() < 1e-14 && z <= 1.0 + 1e-12);
    assert!(cost(&prog, &CoeffGrid::zeros(2, 3)).is_err());
    // quadratic growth away from a global minimum
    let x = prog.params();
    let f = |delta: f64| {
        let mut y = x.clone();
        y[4] += delta;
        cost(
            &AngleProgram::from_params(&y, prog.schedule.clone()).unwrap(),
            &p,
        )
        .unwrap()
    };
    let (a, b) = (f(1e-3), f(2e-3));
    assert!(a > 0.0 && (b / a - 4.0).abs() < 1e-2, "{}", b / a);
}

fn fd_gradient(prog: &AngleProgram, target: &CoeffGrid, h: f64) -> Vec<f64> {
    let x = prog.params();
    (0..x.len())
        .map(|i| {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fp = cost(
                &AngleProgram::from_params(&xp, prog.schedule.clone()).unwrap(),
                target,
            )
            .unwrap();
            let fm = cost(
                &AngleProgram::from_params(&xm, prog.schedule.clone()).unwrap(),
                target,
            )
            .unwrap();
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = rng_for(11, 0, 6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(1..=12);
        let dr = rng.random_range(0..=d);
        let s = random_schedule(&mut rng, dr, d - dr);
        let prog = AngleProgram::random(&mut rng, s.clone(), (0.0, PI));
        let (target, _) = extract(&AngleProgram::random(&mut rng, s, (0.0, PI)));
        let g = gradient(&prog, &target).unwrap();
        let (f, g2) = cost_and_gradient(&prog, &target).unwrap();
        assert!((f - cost(&prog, &target).unwrap()).abs() < 1e-13);
        assert_eq!(g, g2);
        for (a, b) in g.iter().zip(fd_gradient(&prog, &target, 1e-6)) {
            worst = worst.max((a - b).abs() / a.abs().max(1e-3));
        }
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn gradient_vanishes_at_zero_residual() {
    let mut rng = rng_for(11, 0, 7);
    let prog = AngleProgram::random(&mut rng, interleaved_schedule(3, 3), (0.0, PI));
    let (p, _) = extract(&prog);
    let g = gradient(&prog, &p).unwrap();
    assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-10);
}

#[test]
fn phase_of_identity_rotation_is_inert() {
    let prog = AngleProgram::new(
        vec![(0.4, 0.3), (0.0, 1.1), (0.7, -0.2)],
        vec![Family::R, Family::I],
    )
    .unwrap();
    let target = CoeffGrid::zeros(1, 1);
    let g = gradient(&prog, &target).unwrap();
    assert!(g[3].abs() < 1e-15);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = rng_for(11, 0, 8);
    let prog = AngleProgram::random(&mut rng, interleaved_schedule(2, 1), (0.0, PI));
    let j = jacobian(&prog);
    let nc = n_coefficients(2, 1);
    assert_eq!((j.nrows(), j.ncols()), (2 * nc, prog.n_params()));
    let x = prog.params();
    let h = 1e-6;
    for col in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[col] += h;
        xm[col] -= h;
        let (pp, _) = extract(&AngleProgram::from_params(&xp, prog.schedule.clone()).unwrap());
        let (pm, _) = extract(&AngleProgram::from_params(&xm, prog.schedule.clone()).unwrap());
        for r in 0..nc {
            let fd = (pp.coeffs[r] - pm.coeffs[r]) / (2.0 * h);
            assert!((j[(r, col)] - fd.re).abs() < 1e-6);
            assert!((j[(nc + r, col)] - fd.im).abs() < 1e-6);
        }
    }
}

#[test]
fn gauss_newton_identity() {
    let mut rng = rng_for(11, 0, 9);
    let prog = AngleProgram::random(&mut rng, block_schedule(2, 2), (0.2, 1.3));
    let (p, _) = extract(&prog);
    let j = jacobian(&prog);
    let gn = 2.0 * j.transpose() * &j;
    let x = prog.params();
    let n = x.len();
    let h = 1e-4;
    let f = |y: &[f64]| {
        cost(
            &AngleProgram::from_params(y, prog.schedule.clone()).unwrap(),
            &p,
        )
        .unwrap()
    };
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let shift = |sa: f64, sb: f64| {
                let mut y = x.clone();
                y[a] += sa;
                y[b] += sb;
                f(&y)
            };
            hess[(a, b)] =
                (shift(h, h) - shift(h, -h) - shift(-h, h) + shift(-h, -h)) / (4.0 * h * h);
        }
    }
    let rel = (&hess - &gn).norm() / gn.norm();
    assert!(rel < 1e-4, "{rel}");
}

#[test]
fn condition_number_sentinel() {
    assert_eq!(condition_number(&DMatrix::identity(4, 4)), 1.0);
    // The common phase shift is an exact gauge direction, so the raw
    // Jacobian is always singular; only the reduced one carries information.
    let mut rng = rng_for(11, 0, 10);
    let prog = AngleProgram::random(&mut rng, block_schedule(1, 2), (0.2, 1.3));
    assert!(condition_number(&jacobian(&prog)).is_infinite());
    assert!(reduced_condition_number(&prog, 1e-8).is_finite());
}

#[test]
fn multilinear_evaluation() {
    let mut rng = rng_for(11, 0, 11);
    let prog = AngleProgram::random(&mut rng, interleaved_schedule(3, 2), (0.0, PI));
    let (z1, z2) = (unit(&mut rng), unit(&mut rng));
    let collapsed: Vec<C64> = prog
        .schedule
        .iter()
        .map(|f| if *f == Family::R { z1 } else { z2 })
        .collect();
    let a = evaluate_multilinear(&prog, &collapsed).unwrap();
    assert!((a.p() - evaluate(&prog, z1, z2).p()).norm() < 1e-14);

    // affine in each slot: second divided difference vanishes
    let base: Vec<C64> = (0..prog.d()).map(|_| unit(&mut rng)).collect();
    for slot in 0..prog.d() {
        let pts = [unit(&mut rng), unit(&mut rng), unit(&mut rng)];
        let vals: Vec<C64> = pts
            .iter()
            .map(|&z| {
                let mut zs = base.clone();
                zs[slot] = z;
                evaluate_multilinear(&prog, &zs).unwrap().p()
            })
            .collect();
        let d01 = (vals[1] - vals[0]) / (pts[1] - pts[0]);
        let d12 = (vals[2] - vals[1]) / (pts[2] - pts[1]);
        assert!(((d12 - d01) / (pts[2] - pts[0])).norm() <= 1e-12);
    }

    let zero = AngleProgram::zeros(prog.schedule.clone());
    let prod = base.iter().fold(c(1.0), |acc, z| acc * z);
    assert!((evaluate_multilinear(&zero, &base).unwrap().p() - prod).norm() < 1e-14);
    assert!(evaluate_multilinear(&prog, &base[1..]).is_err());
}

#[test]
fn parameter_counts() {
    let prog = AngleProgram::zeros(block_schedule(3, 4));
    assert_eq!(prog.n_params(), 2 * (3 + 4) + 2);
    assert_eq!(prog.angles.len(), prog.schedule.len() + 1);
    assert_eq!(n_constraints(3, 4), 19);
    assert!(AngleProgram::new(vec![(0.0, 0.0)], vec![Family::R]).is_err());
}

proptest! {
    #[test]
    fn unitary_on_torus(seed in any::<u64>(), d in 0usize..=60, a in -PI..PI, b in -PI..PI) {
        let mut rng = rng_for(seed, 0, 0);
        let dr = rng.random_range(0..=d);
        let prog = {
            let s = random_schedule(&mut rng, dr, d - dr);
            AngleProgram::random(&mut rng, s, (-PI, PI))
        };
        let v = evaluate(&prog, C64::from_polar(1.0, a), C64::from_polar(1.0, b));
        prop_assert!((v.p().norm_sqr() + v.q().norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn parseval(seed in any::<u64>(), dr in 0usize..12, di in 0usize..12) {
        let mut rng = rng_for(seed, 0, 1);
        let prog = {
            let s = random_schedule(&mut rng, dr, di);
            AngleProgram::random(&mut rng, s, (-PI, PI))
        };
        let (p, q) = extract(&prog);
        prop_assert!((p.norm_sqr() + q.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rotation_in_su2(t in -10.0_f64..10.0, p in -10.0_f64..10.0) {
        let r = rotation_gate(t, p);
        prop_assert!((r.det() - 1.0).norm() < 1e-14);
        prop_assert!((r.op_norm() - 1.0).abs() < 1e-14);
    }
}
