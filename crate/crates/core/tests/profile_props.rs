use proptest::prelude::*;
use quench_core::cutoff::CutoffSpec;
use quench_core::profile::*;

fn params() -> ProfileParams {
    ProfileParams::new(0.5).unwrap()
}

#[test]
fn cutoff_bounds_dense() {
    let chi = CutoffSpec::SmoothStep;
    let mut prev = 1.0;
    for k in 0..=30_000 {
        let x = 3.0 * k as f64 / 30_000.0;
        let j = chi.jet(x);
        assert!(j.v <= prev + 1e-15);
        assert!(j.d1.abs() <= 3.0 && j.d2.abs() <= 20.0, "x={x} {j:?}");
        if x <= 1.0 {
            assert_eq!(j.v, 1.0);
        }
        if x >= 2.0 {
            assert_eq!(j.v, 0.0);
        }
        prev = j.v;
    }
}

/// `P − c̄ ≥ −C e^{−s}` on `|y| ≤ 10`, `C` measured as 31.4 and frozen.
#[test]
fn lower_bound_on_inner_region() {
    let p = params();
    let c = cbar();
    let mut worst: f64 = 0.0;
    for s in [8.0f64, 10.0, 12.0, 14.0, 16.0] {
        let edge = 10.0;
        for i in 0..=200 {
            for l in 0..=16 {
                let r = edge * i as f64 / 200.0;
                let a = std::f64::consts::FRAC_PI_2 * l as f64 / 16.0;
                let v = profile_p(&FramePoint::new([r * a.cos(), r * a.sin()], s), &p);
                worst = worst.max((c - v) * s.exp());
                assert!(v >= c - 32.0 * (-s).exp(), "s={s} r={r} v={v}");
            }
        }
    }
    assert!(worst > 30.0, "bound no longer tight: {worst}");
}

/// The dip of `𝒞χ_K` on the diagonal makes `P` negative near `|z| ≈ 4–15`
/// for moderate `s`; pinned so a change in the correction is noticed.
#[test]
fn profile_dips_below_zero_on_diagonal() {
    let p = params();
    let z = 8.0 / 2f64.sqrt();
    assert!(profile_p(&FramePoint::from_z([z, z], 8.0), &p) < 0.0);
    assert!(profile_p(&FramePoint::from_z([z, z], 20.0), &p) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matching_inside(s in 8.0f64..16.0, r in 0.0f64..1.0, a in 0.0f64..6.3) {
        let p = params();
        let y = [r * (s / 4.0).exp() * a.cos(), r * (s / 4.0).exp() * a.sin()];
        let pt = FramePoint::new(y, s);
        let psi = (3.0 + (-s).exp() * y[0].powi(2) * y[1].powi(2)
            + 0.5 * (-2.0 * s).exp() * (y[0].powi(6) + y[1].powi(6))).cbrt();
        let want = psi + correction(y, s, &p);
        prop_assert!((profile_p(&pt, &p) - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn boundary_value(s in 14.8f64..24.0, r in 0.5f64..1.0, a in 0.0f64..6.3) {
        let z = [r * (s / 4.0).exp() * a.cos(), r * (s / 4.0).exp() * a.sin()];
        let v = profile_p(&FramePoint::from_z(z, s), &params());
        prop_assert!((v - (s / 3.0).exp()).abs() <= 1e-12 * v);
    }

    #[test]
    fn dihedral_symmetry(s in 8.0f64..16.0, y1 in -60.0f64..60.0, y2 in -60.0f64..60.0) {
        let p = params();
        let v = profile_p(&FramePoint::new([y1, y2], s), &p);
        for q in [[y2, y1], [-y1, y2], [y1, -y2]] {
            let w = profile_p(&FramePoint::new(q, s), &p);
            prop_assert!((v - w).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn derivatives_second_order(s in 8.0f64..12.0, y1 in -8.0f64..8.0, y2 in -8.0f64..8.0) {
        let p = params();
        let d = profile_derivatives(&FramePoint::new([y1, y2], s), &p);
        let f = |a: f64, b: f64| profile_p(&FramePoint::new([y1 + a, y2 + b], s), &p);
        let err = |h: f64| {
            let gx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
            let gy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
            let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h);
            (gx - d.grad[0]).abs() + (gy - d.grad[1]).abs() + (lap - d.laplacian()).abs()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        // quartic-or-better drop means the O(h²) term dominates or vanishes
        prop_assert!(e2 <= 0.3 * e1 + 1e-7, "e1={e1} e2={e2}");
    }
}

#[test]
fn anisotropy_ratio_small_r() {
    for r in [1e-2f64, 1e-3] {
        let axis = final_profile([r, 0.0], 0.5).unwrap();
        let diag = final_profile([r / 2f64.sqrt(), r / 2f64.sqrt()], 0.5).unwrap();
        let want = 0.5f64.cbrt() * 4f64.cbrt() * r.powf(2.0 / 3.0);
        assert!((axis / diag - want).abs() < 0.01 * want, "r={r}");
    }
}
