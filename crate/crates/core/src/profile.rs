//! The quenching profile
//! `𝒫 = Ψ χ_{κ/4}(z) + 𝒞 χ_K(z) + e^{s/3}(1 − χ_{κ/4}(z))`, `κ = e^{s/4}`,
//! with analytic `∂_s`, gradient and Hessian in `y`.

use crate::cutoff::{radial_cutoff, CutoffSpec};
use crate::error::{Error, Result};
use crate::hermite::{hermite_coeffs, ModeSet};
use crate::sigma::{sigma_expansion, ModeKind};
use num_traits::ToPrimitive;

/// `c̄ = 3^{1/3}`.
pub fn cbar() -> f64 {
    3f64.cbrt()
}

/// Value, `∂_s`, gradient and Hessian in `y` of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub v: f64,
    pub ds: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Derivs {
    pub fn constant(v: f64) -> Self {
        Self { v, ..Default::default() }
    }

    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1]
    }

    /// `y·∇f`.
    pub fn radial(&self, y: [f64; 2]) -> f64 {
        y[0] * self.grad[0] + y[1] * self.grad[1]
    }

    pub fn mul(&self, o: &Derivs) -> Derivs {
        let mut h = [[0.0; 2]; 2];
        for p in 0..2 {
            for q in 0..2 {
                h[p][q] = self.hess[p][q] * o.v
                    + self.grad[p] * o.grad[q]
                    + self.grad[q] * o.grad[p]
                    + self.v * o.hess[p][q];
            }
        }
        Derivs {
            v: self.v * o.v,
            ds: self.ds * o.v + self.v * o.ds,
            grad: [
                self.grad[0] * o.v + self.v * o.grad[0],
                self.grad[1] * o.v + self.v * o.grad[1],
            ],
            hess: h,
        }
    }

    pub fn add(&self, o: &Derivs, k: f64) -> Derivs {
        let mut out = *self;
        out.v += k * o.v;
        out.ds += k * o.ds;
        for p in 0..2 {
            out.grad[p] += k * o.grad[p];
            for q in 0..2 {
                out.hess[p][q] += k * o.hess[p][q];
            }
        }
        out
    }
}

/// Dense bivariate polynomial with float coefficients, `c[a][b] y₁ᵃ y₂ᵇ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2f {
    c: Vec<Vec<f64>>,
}

impl Poly2f {
    pub fn zero(deg: usize) -> Self {
        Self { c: vec![vec![0.0; deg + 1]; deg + 1] }
    }

    /// Adds `k·y₁ᵃ y₂ᵇ`.
    pub fn add_monomial(&mut self, a: usize, b: usize, k: f64) {
        self.c[a][b] += k;
    }

    /// Adds `k·h_i(y₁) h_j(y₂)`.
    pub fn add_hermite(&mut self, i: usize, j: usize, k: f64) {
        let hi = hermite_coeffs(i).coeffs_f64();
        let hj = hermite_coeffs(j).coeffs_f64();
        for (a, x) in hi.iter().enumerate() {
            for (b, y) in hj.iter().enumerate() {
                self.c[a][b] += k * x * y;
            }
        }
    }

    pub fn value(&self, y: [f64; 2]) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, row| {
            acc * y[0] + row.iter().rev().fold(0.0, |r, c| r * y[1] + c)
        })
    }

    /// Value, gradient and Hessian (`ds` left at zero).
    pub fn jet(&self, y: [f64; 2]) -> Derivs {
        let n = self.c.len();
        let mut p1 = vec![1.0; n];
        let mut p2 = vec![1.0; n];
        for k in 1..n {
            p1[k] = p1[k - 1] * y[0];
            p2[k] = p2[k - 1] * y[1];
        }
        let pw = |p: &[f64], k: isize| if k < 0 { 0.0 } else { p[k as usize] };
        let mut d = Derivs::default();
        for (a, row) in self.c.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let (ai, bi) = (a as isize, b as isize);
                let (fa, fb) = (a as f64, b as f64);
                d.v += c * p1[a] * p2[b];
                d.grad[0] += c * fa * pw(&p1, ai - 1) * p2[b];
                d.grad[1] += c * fb * p1[a] * pw(&p2, bi - 1);
                d.hess[0][0] += c * fa * (fa - 1.0) * pw(&p1, ai - 2) * p2[b];
                d.hess[1][1] += c * fb * (fb - 1.0) * p1[a] * pw(&p2, bi - 2);
                d.hess[0][1] += c * fa * fb * pw(&p1, ai - 1) * pw(&p2, bi - 1);
            }
        }
        d.hess[1][0] = d.hess[0][1];
        d
    }
}

/// Which amplitude multiplies the `e^{−2s}` Hermite block of `𝒞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaNormalization {
    /// Coefficients `r/c̄` exactly as listed in the closed form of `𝒞`.
    Printed,
    /// Coefficients `r/c̄²`, matching the Taylor expansion of `Ψ`.
    #[default]
    Consistent,
}

/// `𝒞 = e^{−s} P₁ + e^{−2s}(P₂ + s P₃)`.
#[derive(Debug, Clone, PartialEq)]
struct CorrectionPolys {
    p1: Poly2f,
    p2: Poly2f,
    p3: Poly2f,
}

impl CorrectionPolys {
    fn build(delta: f64, norm: SigmaNormalization) -> Self {
        let c = cbar();
        let scale = match norm {
            SigmaNormalization::Printed => 1.0 / c,
            SigmaNormalization::Consistent => 1.0 / (c * c),
        };
        let mut p1 = Poly2f::zero(8);
        p1.add_hermite(2, 2, c / 9.0);
        p1.add_monomial(2, 2, -c / 9.0);
        let mut p2 = Poly2f::zero(8);
        let mut p3 = Poly2f::zero(8);
        for row in sigma_expansion().rows {
            let r = row.coeff.to_f64().unwrap() * scale;
            match row.kind {
                ModeKind::Constant => p2.add_hermite(row.i, row.j, r),
                ModeKind::Secular => p3.add_hermite(row.i, row.j, r),
                ModeKind::Free => {}
            }
            // y₁⁴y₂⁴ already sits inside Ψ
            if row.kind == ModeKind::Constant && (row.i, row.j) == (4, 4) {
                p2.add_monomial(4, 4, -r);
            }
        }
        // (c̄/9)δ (h₆ − ξ⁶) in each variable
        for (a, b) in [(1usize, 0usize), (0, 1)] {
            let mut blk = Poly2f::zero(8);
            blk.add_hermite(6 * a, 6 * b, 1.0);
            blk.add_monomial(6 * a, 6 * b, -1.0);
            for (x, row) in blk.c.iter().enumerate() {
                for (y, v) in row.iter().enumerate() {
                    p2.c[x][y] += c / 9.0 * delta * v;
                }
            }
        }
        Self { p1, p2, p3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParams {
    theta: f64,
    theta_star: f64,
    k: f64,
    delta_corr: f64,
    correction: bool,
    normalization: SigmaNormalization,
    cutoff: CutoffSpec,
    polys: CorrectionPolys,
}

impl ProfileParams {
    /// Defaults: `θ* = 1/2`, `K = 10`, `δ_corr = θ`, correction on.
    pub fn new(theta: f64) -> Result<Self> {
        Self::build(theta, 0.5, 10.0, theta, true, SigmaNormalization::default())
    }

    pub fn build(
        theta: f64,
        theta_star: f64,
        k: f64,
        delta_corr: f64,
        correction: bool,
        normalization: SigmaNormalization,
    ) -> Result<Self> {
        if !(theta > 0.0 && theta <= theta_star) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} must lie in (0, theta_star = {theta_star}]"
            )));
        }
        if !(k >= 10.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("K = {k} must be at least 10")));
        }
        if !delta_corr.is_finite() {
            return Err(Error::InvalidParameter("delta_corr must be finite".into()));
        }
        Ok(Self {
            theta,
            theta_star,
            k,
            delta_corr,
            correction,
            normalization,
            cutoff: CutoffSpec::SmoothStep,
            polys: CorrectionPolys::build(delta_corr, normalization),
        })
    }

    pub fn with_k(self, k: f64) -> Result<Self> {
        Self::build(self.theta, self.theta_star, k, self.delta_corr, self.correction, self.normalization)
    }

    pub fn with_correction(self, on: bool) -> Result<Self> {
        Self::build(self.theta, self.theta_star, self.k, self.delta_corr, on, self.normalization)
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::build(self.theta, self.theta_star, self.k, delta, self.correction, self.normalization)
    }

    pub fn with_normalization(self, n: SigmaNormalization) -> Result<Self> {
        Self::build(self.theta, self.theta_star, self.k, self.delta_corr, self.correction, n)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn delta_corr(&self) -> f64 {
        self.delta_corr
    }
    pub fn correction_enabled(&self) -> bool {
        self.correction
    }
    pub fn normalization(&self) -> SigmaNormalization {
        self.normalization
    }
    pub fn cutoff(&self) -> &CutoffSpec {
        &self.cutoff
    }
    pub fn cbar(&self) -> f64 {
        cbar()
    }
}

/// A point in similarity variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePoint {
    pub y: [f64; 2],
    pub s: f64,
}

impl FramePoint {
    pub fn new(y: [f64; 2], s: f64) -> Self {
        Self { y, s }
    }

    pub fn from_z(z: [f64; 2], s: f64) -> Self {
        let e = (s / 4.0).exp();
        Self { y: [z[0] * e, z[1] * e], s }
    }

    /// `z = y e^{−s/4}`.
    pub fn z(&self) -> [f64; 2] {
        let e = (-self.s / 4.0).exp();
        [self.y[0] * e, self.y[1] * e]
    }
}

/// `Ψ_θ(z, s) = (3 + z₁²z₂² + θe^{−s/2}(z₁⁶+z₂⁶))^{1/3}`.
pub fn psi_theta(p: &FramePoint, params: &ProfileParams) -> f64 {
    psi_z(p.z(), p.s, params.theta)
}

/// `Ψ_θ` directly in `z`.
pub fn psi_z(z: [f64; 2], s: f64, theta: f64) -> f64 {
    let (a, b) = (z[0] * z[0], z[1] * z[1]);
    (3.0 + a * b + theta * (-s / 2.0).exp() * (a * a * a + b * b * b)).cbrt()
}

/// `Ψ_θ` with derivatives in `(y, s)`.
pub fn psi_derivs(p: &FramePoint, params: &ProfileParams) -> Derivs {
    let ez = (-p.s / 4.0).exp();
    let z = p.z();
    let q6 = params.theta * (-p.s / 2.0).exp();
    let (z1, z2) = (z[0], z[1]);
    let (a, b) = (z1 * z1, z2 * z2);
    let q = 3.0 + a * b + q6 * (a * a * a + b * b * b);
    let qs = -a * b - 2.0 * q6 * (a * a * a + b * b * b);
    let gq = [
        ez * (2.0 * z1 * b + 6.0 * q6 * a * a * z1),
        ez * (2.0 * a * z2 + 6.0 * q6 * b * b * z2),
    ];
    let e2 = ez * ez;
    let hq = [
        [e2 * (2.0 * b + 30.0 * q6 * a * a), e2 * 4.0 * z1 * z2],
        [e2 * 4.0 * z1 * z2, e2 * (2.0 * a + 30.0 * q6 * b * b)],
    ];
    let psi = q.cbrt();
    let f1 = 1.0 / (3.0 * psi * psi); // ⅓Q^{−2/3}
    let f2 = 2.0 / (9.0 * q * psi * psi); // (2/9)Q^{−5/3}
    let mut hess = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = f1 * hq[i][j] - f2 * gq[i] * gq[j];
        }
    }
    Derivs {
        v: psi,
        ds: f1 * qs,
        grad: [f1 * gq[0], f1 * gq[1]],
        hess,
    }
}

/// The correction `𝒞(y, s)`; zero when disabled.
pub fn correction(y: [f64; 2], s: f64, params: &ProfileParams) -> f64 {
    if !params.correction {
        return 0.0;
    }
    let polys = &params.polys;
    (-s).exp() * polys.p1.value(y) + (-2.0 * s).exp() * (polys.p2.value(y) + s * polys.p3.value(y))
}

pub fn correction_derivs(y: [f64; 2], s: f64, params: &ProfileParams) -> Derivs {
    if !params.correction {
        return Derivs::default();
    }
    let (e1, e2) = ((-s).exp(), (-2.0 * s).exp());
    let j1 = params.polys.p1.jet(y);
    let j2 = params.polys.p2.jet(y);
    let j3 = params.polys.p3.jet(y);
    let mut d = Derivs::default().add(&j1, e1).add(&j2, e2).add(&j3, s * e2);
    d.ds = -e1 * j1.v + e2 * (-2.0 * j2.v - 2.0 * s * j3.v + j3.v);
    d
}

/// The three pieces entering `𝒫` and its residual.
#[derive(Debug, Clone, Copy)]
pub struct ProfileParts {
    pub psi: Derivs,
    pub corr: Derivs,
    /// `χ(4|y|e^{−s/2})`.
    pub chi_inner: Derivs,
    /// `χ(|y|e^{−s/4}/K)`.
    pub chi_k: Derivs,
    /// `ξ = |z|/K` and `χ'(ξ)` for the `K`-cutoff.
    pub xi_k: f64,
    pub dchi_k: f64,
    pub far: f64,
    pub p: Derivs,
}

pub fn profile_parts(pt: &FramePoint, params: &ProfileParams) -> ProfileParts {
    let s = pt.s;
    let psi = psi_derivs(pt, params);
    let corr = correction_derivs(pt.y, s, params);
    let chi_inner = radial_cutoff(&params.cutoff, pt.y, 4.0 * (-s / 2.0).exp(), -0.5);
    let ak = (-s / 4.0).exp() / params.k;
    let chi_k = radial_cutoff(&params.cutoff, pt.y, ak, -0.25);
    let xi_k = pt.y[0].hypot(pt.y[1]) * ak;
    let dchi_k = params.cutoff.jet(xi_k).d1;
    let far = (s / 3.0).exp();
    let far_d = Derivs { v: far, ds: far / 3.0, ..Default::default() };
    let one_minus = Derivs::constant(1.0).add(&chi_inner, -1.0);
    let p = psi.mul(&chi_inner).add(&corr.mul(&chi_k), 1.0).add(&far_d.mul(&one_minus), 1.0);
    ProfileParts { psi, corr, chi_inner, chi_k, xi_k, dchi_k, far, p }
}

/// `𝒫_θ(y, s)`.
pub fn profile_p(pt: &FramePoint, params: &ProfileParams) -> f64 {
    let (s, r) = (pt.s, pt.y[0].hypot(pt.y[1]));
    let chi = &params.cutoff;
    let chi_inner = chi.value(4.0 * r * (-s / 2.0).exp());
    let chi_k = chi.value(r * (-s / 4.0).exp() / params.k);
    let far = (s / 3.0).exp();
    let mut p = far * (1.0 - chi_inner);
    if chi_inner != 0.0 {
        p += psi_z(pt.z(), s, params.theta) * chi_inner;
    }
    if chi_k != 0.0 {
        p += correction(pt.y, s, params) * chi_k;
    }
    p
}

/// `∂_s𝒫`, `∇𝒫`, `∇²𝒫` (and the value).
pub fn profile_derivatives(pt: &FramePoint, params: &ProfileParams) -> Derivs {
    profile_parts(pt, params).p
}

/// `u*(x) = (x₁²x₂² + θ(x₁⁶+x₂⁶))^{1/3}`.
pub fn final_profile(x: [f64; 2], theta: f64) -> Result<f64> {
    if x[0] == 0.0 && x[1] == 0.0 {
        return Err(Error::OutsideDomain(0.0, 0.0));
    }
    let (a, b) = (x[0] * x[0], x[1] * x[1]);
    Ok((a * b + theta * (a * a * a + b * b * b)).cbrt())
}

/// Coefficients `c_ij`, `i + j ≤ 7`, of the initial perturbation and `s₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSpec {
    c: ModeSet,
    s0: f64,
}

impl InitialDataSpec {
    pub fn new(c: ModeSet, s0: f64) -> Result<Self> {
        if c.cap() != 7 {
            return Err(Error::InvalidParameter(format!("expected cap 7 (36 modes), got cap {}", c.cap())));
        }
        if let Some(((i, j), v)) = c.iter().find(|(_, v)| !(v.abs() < 1.0)) {
            return Err(Error::InvalidParameter(format!("|c_{i}{j}| = {} must be < 1", v.abs())));
        }
        if !(s0 > 0.0) {
            return Err(Error::InvalidParameter("s0 must be positive".into()));
        }
        Ok(Self { c, s0 })
    }

    pub fn zero(s0: f64) -> Self {
        Self { c: ModeSet::zeros(7), s0 }
    }

    pub fn modes(&self) -> &ModeSet {
        &self.c
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }
}

/// `w₀(y) = 𝒫_θ(y, s₀) + e^{−(32/12)s₀}(Σ c_ij H_ij(y)) χ(z)`.
pub fn initial_data_w0(y: [f64; 2], spec: &InitialDataSpec, params: &ProfileParams) -> Result<f64> {
    let s0 = spec.s0;
    if y[0].hypot(y[1]) > (s0 / 2.0).exp() * (1.0 + 1e-14) {
        return Err(Error::OutsideDomain(y[0], y[1]));
    }
    let pt = FramePoint::new(y, s0);
    let z = pt.z();
    let chi = params.cutoff.value(z[0].hypot(z[1]));
    let pert = if chi == 0.0 { 0.0 } else { (-32.0 / 12.0 * s0).exp() * spec.c.eval(y) * chi };
    Ok(profile_p(&pt, params) + pert)
}

fn bump(z: [f64; 2], s: f64) -> f64 {
    let r = z[0].hypot(z[1]) * (-s / 4.0).exp();
    let f = 1.0 - (-(r - 1.0) * (r - 1.0)).exp();
    f * f
}

/// `h(z,s) = ε e^{−s/6}(1−e^{−εs})(1−e^{−(|z|e^{−s/4}−1)²})²|z|²`.
pub fn outer_bound_h(z: [f64; 2], s: f64, eps: f64) -> f64 {
    eps * (-s / 6.0).exp() * (1.0 - (-eps * s).exp()) * bump(z, s) * (z[0] * z[0] + z[1] * z[1])
}

/// `q = ½ D₁ h`.
pub fn comparison_q(z: [f64; 2], s: f64, d1: f64, eps: f64) -> f64 {
    0.5 * d1 * outer_bound_h(z, s, eps)
}

/// Radii where `Ψ_θ(·, s) = level` along the `z₁`-axis and the diagonal,
/// by bisection to relative width `tol`.
pub fn level_intercepts(level: f64, s: f64, theta: f64, tol: f64) -> Result<(f64, f64)> {
    if level <= cbar() {
        return Err(Error::InvalidParameter(format!("level {level} is not above 3^(1/3)")));
    }
    let axis = bisect(|r| psi_z([r, 0.0], s, theta) - level, tol)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let diag = bisect(|r| psi_z([r * h, r * h], s, theta) - level, tol)?;
    Ok((axis, diag))
}

fn bisect(f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Fit("no sign change for bisection".into()));
        }
    }
    for _ in 0..2000 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
