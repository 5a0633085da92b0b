//! Generated error of the profile, the nonlinear term, the linearised
//! potential and a finite-difference `ℋ = Δ − ½y·∇ + ⅓`.

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::profile::{profile_parts, FramePoint, ProfileParams};
use rayon::prelude::*;

pub use crate::sigma::{sigma_expansion, ModeKind, SigmaRow, SigmaTable};

/// Uniform Cartesian patch, `data[iy * nx + ix]` at `origin + h·(ix, iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianPatch {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl CartesianPatch {
    pub fn from_fn(origin: [f64; 2], h: f64, nx: usize, ny: usize, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                data.push(f([origin[0] + h * ix as f64, origin[1] + h * iy as f64]));
            }
        }
        Self { origin, h, nx, ny, data }
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.nx + ix]
    }

    pub fn point(&self, ix: usize, iy: usize) -> [f64; 2] {
        [self.origin[0] + self.h * ix as f64, self.origin[1] + self.h * iy as f64]
    }
}

/// Centered-difference `ℋf`; the result drops the one-cell ghost layer.
pub fn apply_h_grid(f: &CartesianPatch) -> Result<CartesianPatch> {
    if f.nx < 3 || f.ny < 3 {
        return Err(Error::Stencil(format!("patch {}x{} too small for a 3-point stencil", f.nx, f.ny)));
    }
    let h = f.h;
    let (nx, ny) = (f.nx - 2, f.ny - 2);
    let mut data = Vec::with_capacity(nx * ny);
    for iy in 1..=ny {
        for ix in 1..=nx {
            let c = f.at(ix, iy);
            let (e, w, n, s) = (f.at(ix + 1, iy), f.at(ix - 1, iy), f.at(ix, iy + 1), f.at(ix, iy - 1));
            let lap = (e + w + n + s - 4.0 * c) / (h * h);
            let y = f.point(ix, iy);
            let adv = y[0] * (e - w) / (2.0 * h) + y[1] * (n - s) / (2.0 * h);
            data.push(lap - 0.5 * adv + c / 3.0);
        }
    }
    Ok(CartesianPatch { origin: f.point(1, 1), h, nx, ny, data })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    Y,
    Z,
}

impl Chart {
    pub fn label(&self) -> &'static str {
        match self {
            Chart::Y => "y",
            Chart::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub chart: Chart,
    pub location: [f64; 2],
    pub s: f64,
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
}

impl ResidualSample {
    fn new(chart: Chart, location: [f64; 2], s: f64, value: f64, bound: f64) -> Self {
        Self { chart, location, s, value, bound, ratio: value.abs() / bound }
    }
}

/// `E` with the transport–reaction part of `Ψ` cancelled analytically.
///
/// `Ψ` solves `−∂_sΨ − ½y·∇Ψ + Ψ/3 = Ψ^{−2}` and the inner cutoff is
/// transported exactly, so only the correction, the outer cutoff and `Δ𝒫`
/// survive.
pub fn residual_value(pt: &FramePoint, params: &ProfileParams) -> f64 {
    let y = pt.y;
    let pp = profile_parts(pt, params);
    let (psi, p) = (pp.psi.v, pp.p.v);
    let c1 = pp.chi_inner.v;
    let diff = pp.corr.v * pp.chi_k.v + (1.0 - c1) * (pp.far - psi);
    let react = if c1 == 0.0 { 0.0 } else { c1 * diff * (p + psi) / (psi * psi * p * p) };
    let t_corr = -pp.corr.ds - 0.5 * pp.corr.radial(y) + pp.corr.v / 3.0;
    react - (1.0 - c1) / (p * p) + t_corr * pp.chi_k.v - 0.25 * pp.xi_k * pp.dchi_k * pp.corr.v
        + pp.p.laplacian()
}

/// `E` straight from its definition; loses digits where `E ≪ e^{−s}`.
pub fn residual_value_naive(pt: &FramePoint, params: &ProfileParams) -> f64 {
    let d = profile_parts(pt, params).p;
    -d.ds + d.laplacian() - 0.5 * d.radial(pt.y) + d.v / 3.0 - 1.0 / (d.v * d.v)
}

/// `E(y,s)` with the bound `s e^{−3s} max(|y|,1)^{10}`.
pub fn residual_e(pt: &FramePoint, params: &ProfileParams) -> ResidualSample {
    let r = pt.y[0].hypot(pt.y[1]).max(1.0);
    let bound = pt.s * (-3.0 * pt.s).exp() * r.powi(10);
    ResidualSample::new(Chart::Y, pt.y, pt.s, residual_value(pt, params), bound)
}

/// `𝓔(z,s)`, equal to `E(z e^{s/4}, s)`, with the bound
/// `min{e^{−s/3}, e^{−s/2}|z|²}`.
pub fn residual_e_z(z: [f64; 2], s: f64, params: &ProfileParams) -> ResidualSample {
    let pt = FramePoint::from_z(z, s);
    let z2 = z[0] * z[0] + z[1] * z[1];
    let bound = (-s / 3.0).exp().min((-s / 2.0).exp() * z2);
    ResidualSample::new(Chart::Z, z, s, residual_value(&pt, params), bound)
}

/// `NL(ε) = 1/P² − 1/(P+ε)²`.
pub fn nonlinear_term(eps: f64, p: f64) -> Result<f64> {
    let q = p + eps;
    if !(q > 0.0) {
        return Err(Error::Touchdown(q));
    }
    // (ε(2P+ε)) / (P²(P+ε)²) avoids cancellation for small ε
    Ok(eps * (2.0 * p + eps) / (p * p * q * q))
}

/// `V̂ = 2/𝒫³ − 2/3` with the bound `e^{−s} max(|y|,1)⁴`.
pub fn potential_v(pt: &FramePoint, params: &ProfileParams) -> ResidualSample {
    let p = profile_parts(pt, params).p.v;
    let v = 2.0 / (p * p * p) - 2.0 / 3.0;
    let r = pt.y[0].hypot(pt.y[1]).max(1.0);
    ResidualSample::new(Chart::Y, pt.y, pt.s, v, (-pt.s).exp() * r.powi(4))
}

/// Polar sample set `{ρ_k (cos φ_l, sin φ_l)}` with `ρ` uniform on `[0, radius]`.
pub fn disc_points(radius: f64, nr: usize, nphi: usize) -> Vec<[f64; 2]> {
    let mut pts = vec![[0.0, 0.0]];
    for k in 1..=nr {
        let r = radius * k as f64 / nr as f64;
        for l in 0..nphi {
            let phi = std::f64::consts::TAU * l as f64 / nphi as f64;
            pts.push([r * phi.cos(), r * phi.sin()]);
        }
    }
    pts
}

/// Points with `|z|` log-spaced on `[r0, r1]`, `nphi` angles on a quarter
/// turn (the profile has the symmetries of the square).
pub fn log_annulus(r0: f64, r1: f64, nr: usize, nphi: usize) -> Vec<[f64; 2]> {
    if !(r0 > 0.0 && r1 >= r0) {
        return Vec::new();
    }
    let mut pts = Vec::with_capacity(nr * nphi);
    for k in 0..nr {
        let t = if nr == 1 { 0.0 } else { k as f64 / (nr - 1) as f64 };
        let r = r0 * (r1 / r0).powf(t);
        for l in 0..nphi {
            let phi = std::f64::consts::FRAC_PI_2 * l as f64 / (nphi - 1).max(1) as f64;
            pts.push([r * phi.cos(), r * phi.sin()]);
        }
    }
    pts
}

/// `max |E(y,s)|` over the given points, parallel over points.
pub fn max_residual(points: &[[f64; 2]], s: f64, params: &ProfileParams) -> f64 {
    points
        .par_iter()
        .map(|&y| residual_value(&FramePoint::new(y, s), params).abs())
        .reduce(|| 0.0, f64::max)
}

/// Fits `ln max_{|y|≤radius}|E|` against `s`.
pub fn residual_decay(s_grid: &[f64], radius: f64, params: &ProfileParams) -> Result<(Vec<f64>, LinearFit)> {
    if s_grid.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 s values, got {}", s_grid.len())));
    }
    let pts = disc_points(radius, 40, 32);
    let maxes: Vec<f64> = s_grid.iter().map(|&s| max_residual(&pts, s, params)).collect();
    let logs: Vec<f64> = maxes.iter().map(|m| m.ln()).collect();
    let fit = linear_fit(s_grid, &logs)?;
    Ok((maxes, fit))
}

/// Largest bound ratio over a sample set.
pub fn max_ratio(samples: &[ResidualSample]) -> f64 {
    samples.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

/// Outer-chart samples at `s` with `|z| ∈ [r0, r1]`.
pub fn outer_scan(s: f64, r0: f64, r1: f64, params: &ProfileParams) -> Vec<ResidualSample> {
    log_annulus(r0, r1, 200, 17)
        .par_iter()
        .map(|&z| residual_e_z(z, s, params))
        .collect()
}

/// `−¼z·∇v + v/3 − v^{−2}` for `v = (3 + z₁²z₂²)^{1/3}`, analytic gradient.
pub fn outer_solution_residual(z: [f64; 2]) -> f64 {
    let (a, b) = (z[0] * z[0], z[1] * z[1]);
    let q = 3.0 + a * b;
    let v = q.cbrt();
    // z·∇Q = 4z₁²z₂²
    let zgrad = 4.0 * a * b / (3.0 * v * v);
    -0.25 * zgrad + v / 3.0 - 1.0 / (v * v)
}

/// `2/3·(3/𝒫³ − 1)` at the origin, the large-`s` form of `V̂(0,s)`.
pub fn potential_at_origin(s: f64, params: &ProfileParams) -> f64 {
    let p = profile_parts(&FramePoint::new([0.0, 0.0], s), params).p.v;
    2.0 / 3.0 * (3.0 / (p * p * p) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::TensorEigenfunction;

    #[test]
    fn h_on_constants_and_modes() {
        let f = CartesianPatch::from_fn([-1.0, -1.0], 0.05, 41, 41, |_| 2.0);
        let g = apply_h_grid(&f).unwrap();
        assert!(g.data.iter().all(|v| (v - 2.0 / 3.0).abs() < 1e-12));
        let h22 = TensorEigenfunction::new(2, 2);
        for h in [0.02, 0.01] {
            let f = CartesianPatch::from_fn([-1.0, -1.0], h, (2.0 / h) as usize + 1, (2.0 / h) as usize + 1, |y| h22.eval(y));
            let g = apply_h_grid(&f).unwrap();
            let err = (0..g.ny)
                .flat_map(|iy| (0..g.nx).map(move |ix| (ix, iy)))
                .map(|(ix, iy)| (g.at(ix, iy) + 5.0 / 3.0 * h22.eval(g.point(ix, iy))).abs())
                .fold(0.0, f64::max);
            // the stencil is exact up to the fourth-derivative term 8h²/12·(y₁²+y₂²−4)·…
            assert!(err < 10.0 * h * h, "h={h} err={err}");
        }
        let tiny = CartesianPatch::from_fn([0.0, 0.0], 0.1, 2, 5, |_| 1.0);
        assert!(apply_h_grid(&tiny).is_err());
    }

    #[test]
    fn nonlinear_values() {
        assert_eq!(nonlinear_term(0.0, 1.3).unwrap(), 0.0);
        assert!((nonlinear_term(1.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(nonlinear_term(-2.0, 1.0), Err(Error::Touchdown(_))));
        let p: f64 = 1.4;
        let e = 1e-4;
        let ratio = (nonlinear_term(e, p).unwrap() - 2.0 * e / p.powi(3)) / (e * e);
        assert!((ratio + 3.0 / p.powi(4)).abs() < 1e-3);
    }

    #[test]
    fn stable_and_naive_agree_where_naive_is_accurate() {
        let p = ProfileParams::new(0.5).unwrap();
        for &(y, s) in &[([1.0, 1.0], 2.0), ([3.0, 0.5], 3.0), ([20.0, 7.0], 6.0), ([60.0, 0.0], 8.0)] {
            let pt = FramePoint::new(y, s);
            let a = residual_value(&pt, &p);
            let b = residual_value_naive(&pt, &p);
            let scale = (s / 3.0).exp() * 1e-13 + 1e-12;
            assert!((a - b).abs() < scale, "{y:?} {s}: {a} vs {b}");
        }
    }

    #[test]
    fn outer_exact_solution() {
        for z in [[0.0, 0.0], [1.0, 2.0], [10.0, -3.0], [100.0, 50.0]] {
            assert!(outer_solution_residual(z).abs() < 1e-10);
        }
    }

    #[test]
    fn far_field_residual() {
        let p = ProfileParams::new(0.5).unwrap();
        let s = 14.0;
        let e = (s / 4.0f64).exp();
        for t in [0.6, 0.8, 1.0] {
            let r = residual_e_z([t * e, 0.0], s, &p);
            assert!((r.value + (-2.0 * s / 3.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_sign() {
        let p = ProfileParams::new(0.5).unwrap();
        let v = potential_v(&FramePoint::new([0.0, 0.0], 12.0), &p);
        let c = crate::profile::correction([0.0, 0.0], 12.0, &p);
        assert!(c > 0.0 && v.value < 0.0);
    }
}
