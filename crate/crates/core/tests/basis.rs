use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use quench_core::hermite::*;
use quench_core::quadrature::{project, quad_rule, quad_rule_2d};

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[test]
fn orthogonality_table() {
    let rule = quad_rule(20).unwrap();
    let w: Vec<f64> = rule.axis_weights().iter().map(|w| w * rule.normalization()).collect();
    for n in 0..=12 {
        for m in 0..=12 {
            let v: f64 = rule
                .axis_nodes()
                .iter()
                .zip(&w)
                .map(|(x, w)| w * eval_hermite(n, *x) * eval_hermite(m, *x))
                .sum();
            let want = if n == m { 2f64.powi(n as i32) * factorial(n as u32) } else { 0.0 };
            let scale = (2f64.powi((n + m) as i32) * factorial(n as u32) * factorial(m as u32)).sqrt();
            assert!((v - want).abs() < 1e-10 * scale, "n={n} m={m} v={v}");
        }
    }
}

#[test]
fn recurrence_exact_on_coefficients() {
    for m in 1..20usize {
        let next = hermite_coeffs(m + 1);
        let cur = hermite_coeffs(m);
        let prev = hermite_coeffs(m - 1);
        let mut built = vec![BigInt::from(0); m + 2];
        for (k, c) in cur.coeffs().iter().enumerate() {
            built[k + 1] += c;
        }
        for (k, c) in prev.coeffs().iter().enumerate() {
            built[k] -= c * BigInt::from(2 * m);
        }
        assert_eq!(next.coeffs(), &built[..], "m = {m}");
    }
}

#[test]
fn eigenvalue_identity() {
    for i in 0..=12usize {
        for j in 0..=12usize {
            let lam = eigenvalue(i, j);
            let want = num_rational::Rational64::new(-7, 2) + num_rational::Rational64::new(9 - (i + j) as i64, 2);
            assert_eq!(lam, want);
            assert!(lam <= num_rational::Rational64::from_integer(1));
        }
    }
}

#[test]
fn mode_counts() {
    assert_eq!(ModeSet::zeros(8).len(), 45);
    assert_eq!(ModeSet::zeros(7).len(), 36);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_relation_pointwise(i in 0usize..=10, j in 0usize..=10, r in 0.0f64..10.0, phi in 0.0f64..6.3) {
        prop_assume!(i + j <= 10);
        let h = TensorEigenfunction::new(i, j);
        let y = [r * phi.cos(), r * phi.sin()];
        prop_assert!(h.eigen_residual(y).abs() < 1e-9);
    }

    #[test]
    fn bessel_inequality(a in -2.0f64..2.0, b in 0.1f64..2.0, c in -1.0f64..1.0) {
        let rule = quad_rule_2d(30).unwrap();
        let f = move |y: [f64; 2]| (a * y[0]).sin() * (-b * y[1] * y[1] / 8.0).exp() + c * y[0] * y[1];
        let (_, rem) = project(f, 8, &rule).unwrap();
        prop_assert!(rem >= -1e-10);
    }

    #[test]
    fn spectral_gap_exact(coeffs in proptest::collection::vec(-100i32..100, 21)) {
        prop_assume!(coeffs.iter().any(|c| *c != 0));
        let mut modes = ModeSet::zeros(10);
        let mut it = coeffs.iter();
        for t in 9..=10usize {
            for j in 0..=t {
                modes.set(t - j, j, f64::from(*it.next().unwrap()) / 8.0);
            }
        }
        prop_assert!(supported_above(&modes, 8));
        let q = rayleigh_quotient(&modes).unwrap();
        prop_assert!(q <= BigRational::new(BigInt::from(-7), BigInt::from(2)));
    }

    #[test]
    fn linear_flow_gap(c9 in -1.0f64..1.0, c10 in -1.0f64..1.0, ds in 0.0f64..6.0) {
        prop_assume!(c9.abs() + c10.abs() > 1e-3);
        let mut modes = ModeSet::zeros(10);
        modes.set(5, 4, c9);
        modes.set(6, 4, c10);
        let n0 = quench_core::selfsim::remainder_norm(&modes, 8);
        let n1 = quench_core::selfsim::remainder_norm(&linear_evolve(&modes, 8.0, 8.0 + ds), 8);
        prop_assert!(n1 / n0 <= (-3.5 * ds).exp() * (1.0 + 1e-10));
    }
}
