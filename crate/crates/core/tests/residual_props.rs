use proptest::prelude::*;
use quench_core::hermite::{eigenvalue, TensorEigenfunction};
use quench_core::profile::{FramePoint, ProfileParams};
use quench_core::residual::*;

fn params() -> ProfileParams {
    ProfileParams::new(0.5).unwrap()
}

#[test]
fn h_grid_matches_shifted_eigenvalue() {
    for (i, j) in [(0, 0), (2, 0), (2, 2), (4, 1), (3, 3)] {
        let f = TensorEigenfunction::new(i, j);
        let lam = quench_core::hermite::rational_to_f64(&num_rational::BigRational::new(
            (*eigenvalue(i, j).numer()).into(),
            (*eigenvalue(i, j).denom()).into(),
        )) - 2.0 / 3.0;
        let err = |h: f64| {
            let n = (2.0 / h).round() as usize + 1;
            let patch = CartesianPatch::from_fn([-1.0, -1.0], h, n, n, |y| f.eval(y));
            let out = apply_h_grid(&patch).unwrap();
            (0..out.ny)
                .flat_map(|iy| (0..out.nx).map(move |ix| (ix, iy)))
                .map(|(ix, iy)| (out.at(ix, iy) - lam * f.eval(out.point(ix, iy))).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e2 <= 0.3 * e1 + 1e-9, "({i},{j}) e1={e1} e2={e2}");
    }
}

#[test]
fn sigma_structure() {
    let t = sigma_expansion();
    assert!(t.is_symmetric());
    for r in &t.rows {
        if r.kind == ModeKind::Secular {
            assert_eq!(r.i + r.j, 6);
        }
    }
    assert_eq!(t.resonant_pairs().iter().filter(|(i, j)| i + j == 6).count(), t.resonant_pairs().len());
}

#[test]
fn decay_ratio_bounded() {
    let p = params();
    let pts = disc_points(2.0, 40, 32);
    let ratios: Vec<f64> = (8..=16)
        .map(|s| {
            let s = s as f64;
            max_residual(&pts, s, &p) / (s * (-3.0 * s).exp())
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    assert!(hi / lo < 10.0, "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nonlinear_strictly_increasing(p in 0.1f64..10.0, a in -0.99f64..5.0, gap in 1e-6f64..1.0) {
        let e1 = a * p;
        let e2 = e1 + gap * p;
        prop_assert!(nonlinear_term(e2, p).unwrap() > nonlinear_term(e1, p).unwrap());
    }

    #[test]
    fn outer_solution_is_exact(z1 in -50.0f64..50.0, z2 in -50.0f64..50.0) {
        prop_assert!(outer_solution_residual([z1, z2]).abs() < 1e-10);
    }

    #[test]
    fn residual_bound_ratio_finite(s in 8.0f64..16.0, y1 in -30.0f64..30.0, y2 in -30.0f64..30.0) {
        let r = residual_e(&FramePoint::new([y1, y2], s), &params());
        prop_assert!(r.ratio.is_finite() && r.bound > 0.0);
    }
}
