//! Smooth cutoff `χ` with `χ = 1` on `[0,1]`, `χ = 0` on `[2,∞)`.

/// `χ(ξ) = φ(2−ξ) / (φ(2−ξ) + φ(ξ−1))`, `φ(t) = e^{−1/t}` for `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffSpec {
    #[default]
    SmoothStep,
}

/// Value and first two derivatives of a scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet1 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl CutoffSpec {
    pub fn jet(&self, xi: f64) -> Jet1 {
        match self {
            CutoffSpec::SmoothStep => smooth_step(xi),
        }
    }

    pub fn value(&self, xi: f64) -> f64 {
        self.jet(xi).v
    }
}

fn smooth_step(xi: f64) -> Jet1 {
    if xi <= 1.0 {
        return Jet1 { v: 1.0, d1: 0.0, d2: 0.0 };
    }
    if xi >= 2.0 {
        return Jet1 { v: 0.0, d1: 0.0, d2: 0.0 };
    }
    // χ = 1/(1 + e^g), g = 1/(2−ξ) − 1/(ξ−1)
    let (a, b) = (2.0 - xi, xi - 1.0);
    let g = 1.0 / a - 1.0 / b;
    let g1 = 1.0 / (a * a) + 1.0 / (b * b);
    let g2 = 2.0 / (a * a * a) - 2.0 / (b * b * b);
    let e = (-g.abs()).exp();
    let v = if g > 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + e) };
    let vv = e / ((1.0 + e) * (1.0 + e)); // χ(1−χ)
    let d1 = -vv * g1;
    let d2 = -d1 * (1.0 - 2.0 * v) * g1 - vv * g2;
    Jet1 { v, d1, d2 }
}

/// Radial cutoff `χ(|y|·a(s))` with its `s`-derivative, gradient and Hessian
/// in `y`. `a_log_rate` is `a'(s)/a(s)`.
pub fn radial_cutoff(spec: &CutoffSpec, y: [f64; 2], a: f64, a_log_rate: f64) -> crate::profile::Derivs {
    let r = y[0].hypot(y[1]);
    let xi = r * a;
    let j = spec.jet(xi);
    let mut out = crate::profile::Derivs::constant(j.v);
    if j.d1 == 0.0 && j.d2 == 0.0 {
        return out;
    }
    let u = [y[0] / r, y[1] / r];
    out.ds = j.d1 * xi * a_log_rate;
    out.grad = [j.d1 * a * u[0], j.d1 * a * u[1]];
    for p in 0..2 {
        for q in 0..2 {
            let delta = if p == q { 1.0 } else { 0.0 };
            out.hess[p][q] = j.d2 * a * a * u[p] * u[q] + j.d1 * a / r * (delta - u[p] * u[q]);
        }
    }
    out
}
