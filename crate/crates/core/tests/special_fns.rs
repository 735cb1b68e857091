use mqsp_core::special_fns::*;
use proptest::prelude::*;

// Independent references: plain bisection for W, ascending power series for
// the Bessel functions, direct pmf summation for the Poisson tail.

fn w_oracle(x: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0_f64, x.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn series_i(k: usize, a: f64) -> f64 {
    let mut term = (0..k).fold(1.0, |t, j| t * (a / 2.0) / (j + 1) as f64);
    let mut sum = term;
    for m in 1..200 {
        term *= (a / 2.0).powi(2) / (m as f64 * (m + k) as f64);
        sum += term;
    }
    sum
}

fn series_j(k: usize, x: f64) -> f64 {
    let mut term = (0..k).fold(1.0, |t, j| t * (x / 2.0) / (j + 1) as f64);
    let mut sum = term;
    for m in 1..200 {
        term *= -(x / 2.0).powi(2) / (m as f64 * (m + k) as f64);
        sum += term;
    }
    sum
}

fn tail_oracle(m: usize, lam: f64) -> f64 {
    let mut pmf = (-lam).exp();
    let mut cdf = pmf;
    for j in 1..=m {
        pmf *= lam / j as f64;
        cdf += pmf;
    }
    1.0 - cdf
}

#[test]
fn lambert_w_known_values() {
    assert_eq!(lambert_w(0.0).unwrap(), 0.0);
    assert!((lambert_w(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
    assert!((lambert_w(1.0).unwrap() - 0.5671432904097838).abs() < 1e-14);
    assert!((lambert_w(-(-1.0_f64).exp()).unwrap() + 1.0).abs() < 1e-6);
    for x in [0.1, 3.0, 50.0, 1e3] {
        assert!((lambert_w(x).unwrap() - w_oracle(x)).abs() < 1e-12);
    }
}

#[test]
fn lambert_w_rejects_below_branch_point() {
    assert!(lambert_w(-0.5).is_err());
    assert!(lambert_w(f64::NAN).is_err());
}

#[test]
fn bessel_i_against_series() {
    assert!((bessel_i(1, 2.0).unwrap() - 1.590636854637329).abs() < 1e-12);
    assert!((bessel_i(3, 1.0).unwrap() - 0.0221684249243319).abs() < 1e-14);
    for k in [0, 1, 5, 12] {
        for a in [0.3, 2.5, 10.0] {
            let want = series_i(k, a);
            assert!((bessel_i(k, a).unwrap() - want).abs() <= 1e-12 * want);
        }
    }
}

#[test]
fn scaled_bessel_i_matches_unscaled() {
    let all = bessel_i_scaled_all(8, 4.0).unwrap();
    for (k, v) in all.iter().enumerate() {
        assert!((v - (-4.0_f64).exp() * series_i(k, 4.0)).abs() < 1e-14);
        assert!((v - bessel_i_scaled(k, 4.0).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn bessel_j_against_series() {
    assert!((bessel_j(1, 1.0) - 0.4400505857449335).abs() < 1e-14);
    let all = bessel_j_all(15, 7.5);
    for (k, v) in all.iter().enumerate() {
        assert!((v - series_j(k, 7.5)).abs() < 1e-12);
    }
    // J_0^2 + 2 sum J_k^2 = 1
    let js = bessel_j_all(60, 20.0);
    let s = js[0] * js[0] + 2.0 * js[1..].iter().map(|j| j * j).sum::<f64>();
    assert!((s - 1.0).abs() < 1e-12);
}

#[test]
fn poisson_tail_values() {
    assert!((poisson_tail(5, 1.0) - 5.941848175816929e-4).abs() < 1e-15);
    assert_eq!(poisson_tail(0, 0.0), 0.0);
    for (m, lam) in [(3, 0.5), (20, 10.0), (40, 25.0)] {
        assert!((poisson_tail(m, lam) - tail_oracle(m, lam)).abs() < 1e-13);
    }
    // deep tail keeps relative precision where 1 - cdf would cancel
    let deep = poisson_tail(40, 1.0);
    assert!(deep > 0.0 && deep < 1e-45);
}

#[test]
fn cheb_exp_coefficients() {
    let s = cheb_exp_coeffs(1.0, 20).unwrap();
    assert!((s.coeffs[0] - 0.4657596075936404).abs() < 1e-12);
    assert!((s.coeffs[2] - 0.09987755378844708).abs() < 1e-12);
    assert!((s.coeffs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
        assert!((s.eval(x) - (x - 1.0_f64).exp()).abs() < 1e-14);
    }
    assert!(cheb_exp_coeffs(0.0, 5).is_err());
}

/// The sup-norm bound holds but positivity does not: truncations can dip
/// slightly below zero in the interior. Reference value from a 30-digit
/// evaluation of the same truncated sum.
#[test]
fn cheb_partial_sum_can_dip_below_zero() {
    let s = cheb_exp_coeffs(19.127543044668474, 19).unwrap();
    let v = s.eval(0.0);
    assert!((v + 7.943345165139026e-6).abs() < 1e-12, "{v}");
}

proptest! {
    #[test]
    fn lambert_w_inverts(x in -0.3678794411714423_f64..1e3) {
        let w = lambert_w(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn bessel_i_lower_bound(k in 0usize..=20, a in 0.01_f64..10.0) {
        let floor = (0..k).fold(1.0, |t, j| t * (a / 2.0) / (j + 1) as f64);
        prop_assert!(bessel_i(k, a).unwrap() >= floor * (1.0 - 1e-13));
    }

    #[test]
    fn bessel_i_increasing(k in 0usize..=20, a in 0.01_f64..10.0, da in 0.01_f64..1.0) {
        prop_assert!(bessel_i(k, a + da).unwrap() > bessel_i(k, a).unwrap());
    }

    #[test]
    fn poisson_tail_monotone(m in 0usize..60, lam in 0.01_f64..30.0) {
        prop_assert!(poisson_tail(m + 1, lam) <= poisson_tail(m, lam));
        prop_assert!(poisson_tail(m, lam * 1.1) >= poisson_tail(m, lam));
        prop_assert!((poisson_tail(m, lam) + poisson_cdf(m, lam) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cheb_partial_sums_bounded(a in 0.05_f64..30.0, d in 0usize..40, x in -1.0_f64..1.0) {
        let full = cheb_exp_coeffs(a, 80).unwrap();
        let s = full.truncated(d);
        prop_assert!(s.eval(x).abs() <= 1.0 + 1e-12);
        prop_assert!(s.eval(1.0) <= full.truncated(d + 1).eval(1.0) + 1e-15);
        prop_assert!(s.eval(1.0) <= 1.0 + 1e-14);
    }
}
