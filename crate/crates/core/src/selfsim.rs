//! Similarity frame, perturbation extraction and the bootstrap monitor.

use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::hermite::{hermite_table, norm_sq_f64, ModeSet};
use crate::profile::{outer_bound_h, profile_p, FramePoint, ProfileParams};
use crate::quadrature::GaussianQuadrature;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Inner and `♭` decay rate `32/12`.
pub const INNER_RATE: f64 = 32.0 / 12.0;
/// `♮` decay rate `5/12`.
pub const NATURAL_RATE: f64 = 5.0 / 12.0;
/// Exterior cutoff exponent `5/49`.
pub const EXTERIOR_RATE: f64 = 5.0 / 49.0;

/// `y = x/√(T−t)`, `s = −ln(T−t)`, `z = y e^{−s/4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarFrame {
    t_quench: f64,
}

impl SelfSimilarFrame {
    pub fn new(t_quench: f64) -> Result<Self> {
        if !(t_quench > 0.0 && t_quench.is_finite()) {
            return Err(Error::InvalidParameter(format!("quench time {t_quench} must be positive")));
        }
        Ok(Self { t_quench })
    }

    pub fn t_quench(&self) -> f64 {
        self.t_quench
    }

    pub fn to_similarity(&self, x: [f64; 2], t: f64) -> Result<([f64; 2], f64)> {
        let tau = self.t_quench - t;
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("t = {t} is not before T = {}", self.t_quench)));
        }
        let q = tau.sqrt();
        Ok(([x[0] / q, x[1] / q], -tau.ln()))
    }

    pub fn to_physical(&self, y: [f64; 2], s: f64) -> ([f64; 2], f64) {
        let tau = (-s).exp();
        let q = tau.sqrt();
        ([y[0] * q, y[1] * q], self.t_quench - tau)
    }

    pub fn s_of(&self, t: f64) -> Result<f64> {
        Ok(self.to_similarity([0.0, 0.0], t)?.1)
    }
}

pub fn z_of_y(y: [f64; 2], s: f64) -> [f64; 2] {
    let e = (-s / 4.0).exp();
    [y[0] * e, y[1] * e]
}

pub fn y_of_z(z: [f64; 2], s: f64) -> [f64; 2] {
    let e = (s / 4.0).exp();
    [z[0] * e, z[1] * e]
}

/// `w(y,s) = (T−t)^{−1/3} u(√(T−t) y, t)` for a fixed `t`.
pub struct Rescaled<F> {
    u: F,
    tau: f64,
    s: f64,
}

impl<F> std::fmt::Debug for Rescaled<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rescaled").field("tau", &self.tau).field("s", &self.s).finish()
    }
}

impl<F: Fn([f64; 2]) -> Result<f64>> Rescaled<F> {
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Chart radius `e^{s/2}`.
    pub fn radius(&self) -> f64 {
        (self.s / 2.0).exp()
    }

    pub fn eval(&self, y: [f64; 2]) -> Result<f64> {
        let q = self.tau.sqrt();
        let x = [y[0] * q, y[1] * q];
        let r = x[0].hypot(x[1]);
        if r > 1.0 + 1e-12 {
            return Err(Error::OutsideDomain(y[0], y[1]));
        }
        Ok((self.u)(x)? / self.tau.cbrt())
    }
}

pub fn renormalize<F: Fn([f64; 2]) -> Result<f64>>(u: F, t: f64, frame: &SelfSimilarFrame) -> Result<Rescaled<F>> {
    let tau = frame.t_quench - t;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} is not before T = {}", frame.t_quench)));
    }
    Ok(Rescaled { u, tau, s: -tau.ln() })
}

/// Thresholds of the bootstrap regime and the norm exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConstants {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub d1: f64,
    pub k: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eps_small: f64,
    pub s0: f64,
}

impl Default for BootstrapConstants {
    fn default() -> Self {
        Self {
            a: [1.0, 1e1, 1e2],
            b: [1e3, 1e4, 1e5],
            c: [1e6, 1e7, 1e8],
            d1: 1e9,
            k: 10.0,
            alpha: 18.0,
            gamma: 8.01,
            eps_small: 1e-2,
            s0: 8.0,
        }
    }
}

impl BootstrapConstants {
    /// `A₁ < A₂ < A₃ < B₁ < … < C₃ < D₁`, all positive.
    pub fn validate(&self) -> Result<()> {
        let chain = self.chain();
        if !(chain[0] > 0.0) || chain.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(format!("bootstrap constants must increase strictly: {chain:?}")));
        }
        if !(self.k >= 1.0 && self.eps_small > 0.0 && self.alpha > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidParameter("K, eps, alpha and gamma must be positive".into()));
        }
        Ok(())
    }

    pub fn chain(&self) -> [f64; 10] {
        let [a1, a2, a3] = self.a;
        let [b1, b2, b3] = self.b;
        let [c1, c2, c3] = self.c;
        [a1, a2, a3, b1, b2, b3, c1, c2, c3, self.d1]
    }

    pub fn inner_scale(s: f64) -> f64 {
        (-INNER_RATE * s).exp()
    }

    pub fn natural_scale(s: f64) -> f64 {
        (-NATURAL_RATE * s).exp()
    }
}

/// Sampling resolution of the monitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorResolution {
    /// Trapezoid half-width and step for the `L²_ρ` integrals.
    pub half_width: f64,
    pub h: f64,
    /// Difference step for derivatives of `ε̂`.
    pub fd_step: f64,
    /// Log-radial step and angle count of the `♭`/`♮`/outer grids.
    pub drho: f64,
    pub nphi: usize,
}

impl Default for MonitorResolution {
    fn default() -> Self {
        Self { half_width: 24.0, h: 0.1, fd_step: 1e-3, drho: 0.005, nphi: 64 }
    }
}

/// Field on `{e^ρ(cos φ, sin φ)}`, `ρ` uniform from `rho0`, rows in `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPolarField {
    pub rho0: f64,
    pub drho: f64,
    pub nrho: usize,
    pub nphi: usize,
    pub data: Vec<f64>,
}

impl LogPolarField {
    /// Samples `f` for `ρ ∈ [rho0, rho1]` with step at most `drho`; empty
    /// when `rho1 < rho0`.
    pub fn sample<F: Fn([f64; 2]) -> f64 + Sync>(rho0: f64, rho1: f64, drho: f64, nphi: usize, f: F) -> Self {
        if !(rho1 >= rho0) {
            return Self { rho0, drho, nrho: 0, nphi, data: Vec::new() };
        }
        let nrho = (((rho1 - rho0) / drho).ceil() as usize + 1).max(3);
        let step = (rho1 - rho0) / (nrho - 1) as f64;
        let mut field = Self { rho0, drho: step, nrho, nphi, data: vec![0.0; nrho * nphi] };
        let pts: Vec<[f64; 2]> = (0..nrho * nphi).map(|i| field.point(i / nphi, i % nphi)).collect();
        field.data = pts.par_iter().map(|&p| f(p)).collect();
        field
    }

    pub fn is_empty(&self) -> bool {
        self.nrho == 0
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.rho0 + self.drho * i as f64
    }

    pub fn point(&self, i: usize, l: usize) -> [f64; 2] {
        let r = self.rho(i).exp();
        let p = TAU * l as f64 / self.nphi as f64;
        [r * p.cos(), r * p.sin()]
    }

    pub fn at(&self, i: usize, l: usize) -> f64 {
        self.data[i * self.nphi + l]
    }

    /// `(x·∇)^k f = ∂_ρ^k f` by second-order differences.
    pub fn directional_derivative(&self, k: usize) -> Result<Self> {
        match k {
            0 => Ok(self.clone()),
            _ if self.is_empty() => Ok(self.clone()),
            1 => self.diff(1),
            2 => self.diff(2),
            _ => self.diff(2)?.directional_derivative(k - 2),
        }
    }

    fn diff(&self, order: usize) -> Result<Self> {
        let need = order + 2;
        if self.nrho < need {
            return Err(Error::Stencil(format!("{} radial nodes, need {need}", self.nrho)));
        }
        let (n, np, h) = (self.nrho, self.nphi, self.drho);
        let mut out = self.clone();
        for l in 0..np {
            let f = |i: usize| self.data[i * np + l];
            let mut put = |i: usize, v: f64| out.data[i * np + l] = v;
            if order == 1 {
                put(0, (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h));
                put(n - 1, (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h));
                for i in 1..n - 1 {
                    put(i, (f(i + 1) - f(i - 1)) / (2.0 * h));
                }
            } else {
                let h2 = h * h;
                put(0, (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2);
                put(n - 1, (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / h2);
                for i in 1..n - 1 {
                    put(i, (f(i + 1) - 2.0 * f(i) + f(i - 1)) / h2);
                }
            }
        }
        Ok(out)
    }

    /// `(∫∫ |f|² e^{−pρ} dρ dφ)^{1/2}`, the polar form of
    /// `(∫ |f|² |x|^{−p−2} dx)^{1/2}`.
    pub fn weighted_norm(&self, p: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let dphi = TAU / self.nphi as f64;
        let mut sum = 0.0;
        for i in 0..self.nrho {
            let end = if i == 0 || i == self.nrho - 1 { 0.5 } else { 1.0 };
            let w = end * self.drho * dphi * (-p * self.rho(i)).exp();
            let row: f64 = self.data[i * self.nphi..(i + 1) * self.nphi].iter().map(|v| v * v).sum();
            sum += w * row;
        }
        sum.sqrt()
    }

    /// True when the weighted integrand grows across the last decade in
    /// radius, i.e. the truncated integral would not have converged.
    pub fn tail_grows(&self, p: f64) -> bool {
        if self.nrho < 2 {
            return false;
        }
        let row = |i: usize| -> f64 {
            let e: f64 = self.data[i * self.nphi..(i + 1) * self.nphi].iter().map(|v| v * v).sum();
            e * (-p * self.rho(i)).exp()
        };
        let last = self.nrho - 1;
        let back = ((10f64.ln() / self.drho).round() as usize).min(last);
        let end = row(last);
        end > 0.0 && end > row(last - back) * (1.0 + 1e-9)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `‖f‖_♭` with `α` from the constants.
pub fn norm_flat(f: &LogPolarField, consts: &BootstrapConstants) -> f64 {
    f.weighted_norm(consts.alpha)
}

/// `‖η‖_♮` with `γ` from the constants.
pub fn norm_natural(f: &LogPolarField, consts: &BootstrapConstants) -> f64 {
    f.weighted_norm(consts.gamma)
}

/// `(x·∇)^k f` on a log-polar grid.
pub fn directional_derivatives(f: &LogPolarField, k: usize) -> Result<LogPolarField> {
    f.directional_derivative(k)
}

/// `χ_K(z) = χ(|z|/K)`.
pub fn chi_k(z: [f64; 2], k: f64) -> f64 {
    CutoffSpec::SmoothStep.value(z[0].hypot(z[1]) / k)
}

/// `1 − χ_K(z e^{−5s/49})`.
pub fn exterior_cutoff(z: [f64; 2], s: f64, k: f64) -> f64 {
    let e = (-EXTERIOR_RATE * s).exp();
    1.0 - chi_k([z[0] * e, z[1] * e], k)
}

/// `η^{ex}(z,s)` from a value of `η` at `z`.
pub fn eta_ex_at(eta: f64, z: [f64; 2], s: f64, k: f64) -> f64 {
    let c = exterior_cutoff(z, s, k);
    if c == 0.0 {
        0.0
    } else {
        eta * c
    }
}

/// The decomposed perturbation at one `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    pub s: f64,
    pub k: f64,
    /// `ε̂_ij`, `i + j ≤ 8`.
    pub modes: ModeSet,
    /// `‖ε̂‖²_ρ`.
    pub energy: f64,
    /// `‖ε̂_−‖_ρ`.
    pub remainder: f64,
    /// `‖∂_i ε̂_−‖_ρ`.
    pub d1_remainder: [f64; 2],
    /// `‖∂²_ij ε̂_−‖_ρ` for `(1,1), (1,2), (2,2)`.
    pub d2_remainder: [f64; 3],
    /// Largest `|⟨ε̂_−, H_ij⟩_ρ| / (‖ε̂‖_ρ ‖H_ij‖_ρ)`.
    pub orthogonality_defect: f64,
    /// `ε` on `K ≤ |y| ≤ e^{s/2}`.
    pub flat: LogPolarField,
    /// `η` on `K ≤ |z| ≤ e^{s/4}`.
    pub natural: LogPolarField,
    /// `η^{ex}` and `h` on `K e^{5s/49} ≤ |z| ≤ e^{s/4}`.
    pub exterior: LogPolarField,
    pub exterior_h: LogPolarField,
}

impl PerturbationField {
    /// Builds every piece from a sampler of `ε(y)`.
    pub fn from_epsilon<F>(eps: F, s: f64, consts: &BootstrapConstants, res: &MonitorResolution) -> Result<Self>
    where
        F: Fn([f64; 2]) -> f64 + Sync,
    {
        consts.validate()?;
        let k = consts.k;
        let hat = |y: [f64; 2]| {
            let c = chi_k(z_of_y(y, s), k);
            if c == 0.0 {
                0.0
            } else {
                c * eps(y)
            }
        };
        let rule = GaussianQuadrature::truncated_trapezoid_2d(res.half_width, res.h)?;
        let nodes = rule.nodes();
        let d = res.fd_step;
        // value, ∂₁, ∂₂, ∂₁₁, ∂₁₂, ∂₂₂
        let jets: Vec<[f64; 6]> = nodes
            .par_iter()
            .map(|&y| {
                let f = |a: f64, b: f64| hat([y[0] + a * d, y[1] + b * d]);
                let c = f(0.0, 0.0);
                let (e, w, n, so) = (f(1.0, 0.0), f(-1.0, 0.0), f(0.0, 1.0), f(0.0, -1.0));
                let (ne, nw, se, sw) = (f(1.0, 1.0), f(-1.0, 1.0), f(1.0, -1.0), f(-1.0, -1.0));
                [
                    c,
                    (e - w) / (2.0 * d),
                    (n - so) / (2.0 * d),
                    (e - 2.0 * c + w) / (d * d),
                    (ne - nw - se + sw) / (4.0 * d * d),
                    (n - 2.0 * c + so) / (d * d),
                ]
            })
            .collect();
        for (p, j) in nodes.iter().zip(&jets) {
            if let Some(v) = j.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample { y1: p[0], y2: p[1], value: *v });
            }
        }
        let vals: Vec<f64> = jets.iter().map(|j| j[0]).collect();
        let (modes, _) = rule.project_samples(&vals, 8)?;
        let weights = rule.weights();
        let axis = rule.axis_nodes();
        let n = axis.len();
        let tables: Vec<Vec<f64>> = axis.iter().map(|&x| hermite_table(8, x)).collect();
        let mode_list: Vec<((usize, usize), f64)> = modes.iter().filter(|(_, c)| *c != 0.0).collect();
        // Σ c_ij ∂^α H_ij at node (a, b)
        let modal = |a: usize, b: usize| {
            let (ta, tb) = (&tables[a], &tables[b]);
            let h = |t: &Vec<f64>, m: isize| if m < 0 { 0.0 } else { t[m as usize] };
            let mut out = [0.0; 6];
            for &((i, j), c) in &mode_list {
                let (ii, jj) = (i as isize, j as isize);
                let (fi, fj) = (i as f64, j as f64);
                out[0] += c * ta[i] * tb[j];
                out[1] += c * fi * h(ta, ii - 1) * tb[j];
                out[2] += c * fj * ta[i] * h(tb, jj - 1);
                out[3] += c * fi * (fi - 1.0) * h(ta, ii - 2) * tb[j];
                out[4] += c * fi * fj * h(ta, ii - 1) * h(tb, jj - 1);
                out[5] += c * fj * (fj - 1.0) * ta[i] * h(tb, jj - 2);
            }
            out
        };
        let rem: Vec<[f64; 6]> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let m = modal(idx / n, idx % n);
                let j = jets[idx];
                std::array::from_fn(|q| j[q] - m[q])
            })
            .collect();
        let norm_of = |q: usize| -> f64 { weights.iter().zip(&rem).map(|(w, r)| w * r[q] * r[q]).sum::<f64>().sqrt() };
        let energy: f64 = weights.iter().zip(&vals).map(|(w, v)| w * v * v).sum();
        let minus: Vec<f64> = rem.iter().map(|r| r[0]).collect();
        let (leak, _) = rule.project_samples(&minus, 8)?;
        let scale = energy.sqrt();
        let orthogonality_defect = if scale > 0.0 {
            leak.iter()
                .map(|((i, j), c)| c.abs() * norm_sq_f64(i, j).sqrt() / scale)
                .fold(0.0, f64::max)
        } else {
            0.0
        };

        let eta = |z: [f64; 2]| eps(y_of_z(z, s));
        let lnk = k.ln();
        let flat = LogPolarField::sample(lnk, s / 2.0, res.drho, res.nphi, &eps);
        let natural = LogPolarField::sample(lnk, s / 4.0, res.drho, res.nphi, eta);
        let ext0 = lnk + EXTERIOR_RATE * s;
        let exterior = LogPolarField::sample(ext0, s / 4.0, res.drho, res.nphi, |z| {
            let c = exterior_cutoff(z, s, k);
            if c == 0.0 {
                0.0
            } else {
                c * eta(z)
            }
        });
        let exterior_h =
            LogPolarField::sample(ext0, s / 4.0, res.drho, res.nphi, |z| outer_bound_h(z, s, consts.eps_small));
        for f in [&flat, &natural, &exterior] {
            if let Some(i) = f.data.iter().position(|v| !v.is_finite()) {
                let p = f.point(i / f.nphi, i % f.nphi);
                return Err(Error::NonFiniteSample { y1: p[0], y2: p[1], value: f.data[i] });
            }
        }
        Ok(Self {
            s,
            k,
            modes,
            energy,
            remainder: norm_of(0),
            d1_remainder: [norm_of(1), norm_of(2)],
            d2_remainder: [norm_of(3), norm_of(4), norm_of(5)],
            orthogonality_defect,
            flat,
            natural,
            exterior,
            exterior_h,
        })
    }

    pub fn eta_ex(&self) -> &LogPolarField {
        &self.exterior
    }
}

/// `ε = w − 𝒫_θ` from a rescaled solution; points beyond the chart are
/// pulled back onto `|y| = e^{s/2}`.
pub fn perturbation<W>(
    w: W,
    s: f64,
    params: &ProfileParams,
    consts: &BootstrapConstants,
    res: &MonitorResolution,
) -> Result<PerturbationField>
where
    W: Fn([f64; 2]) -> Result<f64> + Sync,
{
    let edge = (s / 2.0).exp();
    PerturbationField::from_epsilon(
        |y| {
            let r = y[0].hypot(y[1]);
            let y = if r > edge { [y[0] * edge / r, y[1] * edge / r] } else { y };
            match w(y) {
                Ok(v) => v - profile_p(&FramePoint::new(y, s), params),
                Err(_) => f64::NAN,
            }
        },
        s,
        consts,
        res,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRecord {
    pub condition: String,
    pub s: f64,
    pub measured: f64,
    pub threshold: f64,
    pub margin: f64,
    pub pass: bool,
}

impl ConditionRecord {
    fn new(condition: impl Into<String>, s: f64, measured: f64, threshold: f64) -> Self {
        Self { condition: condition.into(), s, measured, threshold, margin: threshold - measured, pass: measured <= threshold }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReport {
    pub s: f64,
    pub records: Vec<ConditionRecord>,
    /// `‖(y·∇)³ε‖_♭` and `‖(z·∇)³η‖_♮`, reported without a threshold.
    pub k3: [f64; 2],
    /// Norms whose integrand still grows at the chart edge.
    pub tail_flags: Vec<String>,
}

impl BootstrapReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.records.iter().filter(|r| !r.pass).map(|r| r.condition.as_str()).collect()
    }

    pub fn get(&self, condition: &str) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.condition == condition)
    }
}

/// Names of the twelve records, in report order.
pub const CONDITIONS: [&str; 12] = [
    "in1", "in2", "in3", "in4", "in5", "int1[k=0]", "int1[k=1]", "int1[k=2]", "int2[k=0]", "int2[k=1]", "int2[k=2]",
    "out2",
];

/// One record per condition: in1–in5, int1 and int2 for `k = 0, 1, 2`, out2.
pub fn bootstrap_check(pf: &PerturbationField, consts: &BootstrapConstants) -> Result<BootstrapReport> {
    let s = pf.s;
    let e_in = BootstrapConstants::inner_scale(s);
    let e_nat = BootstrapConstants::natural_scale(s);
    let [a1, a2, a3] = consts.a;
    let mut low = 0.0;
    let mut top: f64 = 0.0;
    for ((i, j), c) in pf.modes.iter() {
        if i + j <= 7 {
            low += c * c;
        } else {
            top = top.max(c.abs());
        }
    }
    let mut records = vec![
        ConditionRecord::new("in1", s, low.sqrt(), a1 * e_in),
        ConditionRecord::new("in2", s, top, a1 * e_in),
        ConditionRecord::new("in3", s, pf.remainder, a1 * e_in),
        ConditionRecord::new("in4", s, pf.d1_remainder[0].max(pf.d1_remainder[1]), a2 * e_in),
        ConditionRecord::new("in5", s, pf.d2_remainder.iter().cloned().fold(0.0, f64::max), a3 * e_in),
    ];
    let mut tail_flags = Vec::new();
    let mut k3 = [0.0; 2];
    for k in 0..4 {
        let d = pf.flat.directional_derivative(k)?;
        let m = norm_flat(&d, consts);
        if k == 3 {
            k3[0] = m;
            break;
        }
        if d.tail_grows(consts.alpha) {
            tail_flags.push(format!("int1[k={k}]"));
        }
        records.push(ConditionRecord::new(format!("int1[k={k}]"), s, m, consts.b[k] * e_in));
    }
    for k in 0..4 {
        let d = pf.natural.directional_derivative(k)?;
        let m = norm_natural(&d, consts);
        if k == 3 {
            k3[1] = m;
            break;
        }
        if d.tail_grows(consts.gamma) {
            tail_flags.push(format!("int2[k={k}]"));
        }
        records.push(ConditionRecord::new(format!("int2[k={k}]"), s, m, consts.c[k] * e_nat));
    }
    let mut worst: f64 = 0.0;
    for (e, h) in pf.exterior.data.iter().zip(&pf.exterior_h.data) {
        if *e == 0.0 {
            continue;
        }
        worst = worst.max(if *h > 0.0 { e.abs() / h } else { f64::INFINITY });
    }
    records.push(ConditionRecord::new("out2", s, worst, consts.d1));
    Ok(BootstrapReport { s, records, k3, tail_flags })
}

/// `‖f_−‖_ρ` for the part of a mode vector above total degree `deg`.
pub fn remainder_norm(modes: &ModeSet, deg: usize) -> f64 {
    modes
        .iter()
        .filter(|((i, j), _)| i + j > deg)
        .map(|((i, j), c)| c * c * norm_sq_f64(i, j))
        .sum::<f64>()
        .sqrt()
}

pub mod synthetic {
    //! Perturbations built to sit inside the regime or to break exactly one
    //! condition at a given `s`.

    use super::*;
    use crate::hermite::eval_hermite;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub type Sampler = Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

    /// The ten constructions, each breaking one condition.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub enum Violation {
        In1,
        In2,
        In3,
        In5,
        Int1K0,
        Int1K1,
        Int1K2,
        Int2K0,
        Int2K2,
        Out2,
    }

    impl Violation {
        pub const ALL: [Violation; 10] = [
            Violation::In1,
            Violation::In2,
            Violation::In3,
            Violation::In5,
            Violation::Int1K0,
            Violation::Int1K1,
            Violation::Int1K2,
            Violation::Int2K0,
            Violation::Int2K2,
            Violation::Out2,
        ];

        /// Condition this construction should fail.
        pub fn target(&self) -> &'static str {
            match self {
                Violation::In1 => "in1",
                Violation::In2 => "in2",
                Violation::In3 => "in3",
                Violation::In5 => "in5",
                Violation::Int1K0 => "int1[k=0]",
                Violation::Int1K1 => "int1[k=1]",
                Violation::Int1K2 => "int1[k=2]",
                Violation::Int2K0 => "int2[k=0]",
                Violation::Int2K2 => "int2[k=2]",
                Violation::Out2 => "out2",
            }
        }

        /// Constants the construction is checked against; the log ramp needs
        /// a larger `K` so the Gaussian weight does not see its kink.
        pub fn constants(&self, base: &BootstrapConstants) -> BootstrapConstants {
            match self {
                Violation::Int1K1 => BootstrapConstants { k: 30.0, ..*base },
                _ => *base,
            }
        }

        /// Sampler of `ε(y)` at `s`. The intended regions are non-empty
        /// for `s ≥ 20` with `K = 10`.
        pub fn build(&self, s: f64, base: &BootstrapConstants) -> Sampler {
            let consts = self.constants(base);
            let k = consts.k;
            let e_a = consts.a[0] * BootstrapConstants::inner_scale(s);
            let e_b = consts.b[0] * BootstrapConstants::inner_scale(s);
            let e_c = consts.c[0] * BootstrapConstants::natural_scale(s);
            let inner_cut = move |y: [f64; 2]| chi_k(z_of_y(y, s), k);
            let rho = |y: [f64; 2]| 0.5 * (y[0] * y[0] + y[1] * y[1]).ln();
            match self {
                Violation::In1 => Box::new(move |y| 2.0 * e_a * inner_cut(y)),
                Violation::In2 => Box::new(move |y| 2.0 * e_a * eval_hermite(8, y[0]) * inner_cut(y)),
                Violation::In3 => {
                    let c = 2.0 * e_a / norm_sq_f64(9, 0).sqrt();
                    Box::new(move |y| c * eval_hermite(9, y[0]) * inner_cut(y))
                }
                Violation::In5 => {
                    // ‖sin(15y₁)‖_ρ = 2^{−1/2} up to e^{−225}
                    let a = 0.55 * e_a * 2f64.sqrt();
                    Box::new(move |y| a * (15.0 * y[0]).sin() * inner_cut(y))
                }
                Violation::Int1K0 | Violation::Int1K2 => {
                    let (lo, hi) = (30f64.ln(), 1300f64.ln());
                    let len = hi - lo;
                    let osc = *self == Violation::Int1K2;
                    // ∫ bump² dρ = 3L/8, halved again by sin²(40ρ)
                    let mass = TAU * 3.0 * len / 8.0 * if osc { 0.5 } else { 1.0 };
                    let c = if osc { 0.2 } else { 1.05 } * e_b / mass.sqrt();
                    Box::new(move |y| {
                        let p = rho(y);
                        let b = bump(p, lo, hi);
                        if b == 0.0 {
                            return 0.0;
                        }
                        let w = if osc { (40.0 * p).sin() } else { 1.0 };
                        c * (9.0 * p).exp() * b * w
                    })
                }
                Violation::Int1K1 => {
                    // ‖(y·∇)ε‖_♭ = 12 B₁e^{−(32/12)s} for ε = b ln(r/K)
                    let b = 12.0 * e_b * k.powf(consts.alpha / 2.0) / (TAU / consts.alpha).sqrt();
                    let lk = k.ln();
                    Box::new(move |y| {
                        let x = rho(y) - lk;
                        if x <= 0.0 {
                            0.0
                        } else {
                            b * x * CutoffSpec::SmoothStep.value(x / 2.0)
                        }
                    })
                }
                Violation::Int2K0 | Violation::Int2K2 => {
                    let lo = k.ln();
                    let hi = (0.95 * k).ln() + EXTERIOR_RATE * s;
                    let len = hi - lo;
                    let osc = *self == Violation::Int2K2;
                    let mass = TAU * 3.0 * len / 8.0 * if osc { 0.5 } else { 1.0 };
                    let c = if osc { 0.2 } else { 1.5 } * e_c / mass.sqrt();
                    let half_gamma = consts.gamma / 2.0;
                    Box::new(move |y| {
                        let p = rho(y) - s / 4.0;
                        let b = bump(p, lo, hi);
                        if b == 0.0 {
                            return 0.0;
                        }
                        let w = if osc { (40.0 * p).sin() } else { 1.0 };
                        c * (half_gamma * p).exp() * b * w
                    })
                }
                Violation::Out2 => {
                    let lo = (1.1 * k).ln() + EXTERIOR_RATE * s;
                    let hi = 0.9f64.ln() + s / 4.0;
                    let amp = 6.0 * consts.d1;
                    let eps = consts.eps_small;
                    Box::new(move |y| {
                        let z = z_of_y(y, s);
                        let b = bump(0.5 * (z[0] * z[0] + z[1] * z[1]).ln(), lo, hi);
                        if b == 0.0 {
                            return 0.0;
                        }
                        amp * outer_bound_h(z, s, eps) * b
                    })
                }
            }
        }
    }

    /// `sin²(π(ρ−a)/(b−a))` on `[a, b]`, zero outside.
    pub fn bump(p: f64, a: f64, b: f64) -> f64 {
        if p <= a || p >= b {
            return 0.0;
        }
        let v = (std::f64::consts::PI * (p - a) / (b - a)).sin();
        v * v
    }

    /// `Σ_{i+j≤10} c_ij H_ij(y) χ(|y|/10)` with seeded uniform `c_ij`,
    /// scaled to `‖·‖_ρ = amplitude`.
    pub fn noise_field(seed: u64, amplitude: f64, res: &MonitorResolution) -> Result<Sampler> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = ModeSet::zeros(10);
        for t in 0..=10 {
            for j in 0..=t {
                modes.set(t - j, j, rng.gen_range(-1.0..1.0));
            }
        }
        let raw = move |y: [f64; 2]| {
            let c = CutoffSpec::SmoothStep.value(y[0].hypot(y[1]) / 10.0);
            if c == 0.0 {
                0.0
            } else {
                modes.eval(y) * c
            }
        };
        let rule = GaussianQuadrature::truncated_trapezoid_2d(res.half_width, res.h)?;
        let norm = rule.integrate(|y| raw(y) * raw(y))?.sqrt();
        let scale = amplitude / norm;
        Ok(Box::new(move |y| scale * raw(y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::TensorEigenfunction;

    #[test]
    fn frame_roundtrip() {
        let f = SelfSimilarFrame::new(0.4).unwrap();
        let (y, s) = f.to_similarity([0.3, -0.1], 0.35).unwrap();
        let (x, t) = f.to_physical(y, s);
        assert!((x[0] - 0.3).abs() < 1e-15 && (x[1] + 0.1).abs() < 1e-15 && (t - 0.35).abs() < 1e-15);
        assert!(f.to_similarity([0.0, 0.0], 0.4).is_err());
        let z = z_of_y([3.0, 4.0], 2.0);
        let back = y_of_z(z, 2.0);
        assert!((back[0] - 3.0).abs() < 1e-14 && (back[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn renormalize_constant_solution() {
        let frame = SelfSimilarFrame::new(0.5).unwrap();
        let t = 0.3;
        let c = 3f64.cbrt();
        let w = renormalize(|_| Ok((0.5f64 - t).cbrt() * c), t, &frame).unwrap();
        assert!((w.eval([1.0, 2.0]).unwrap() - c).abs() < 1e-14);
        let edge = w.radius();
        let wb = renormalize(|_| Ok(1.0), t, &frame).unwrap();
        assert!((wb.eval([edge, 0.0]).unwrap() - (w.s() / 3.0).exp()).abs() < 1e-12);
        assert!(wb.eval([2.0 * edge, 0.0]).is_err());
    }

    #[test]
    fn norm_closed_forms() {
        let consts = BootstrapConstants::default();
        let (k, r) = (10f64, 1e3f64);
        let f = LogPolarField::sample(k.ln(), r.ln(), 0.005, 64, |y| y[0].hypot(y[1]).powi(9));
        let want = (TAU * (r / k).ln()).sqrt();
        assert!((norm_flat(&f, &consts) - want).abs() < 1e-10 * want);
        let g = LogPolarField::sample(k.ln(), r.ln(), 0.005, 64, |z| z[0].hypot(z[1]).powf(4.005));
        assert!((norm_natural(&g, &consts) - want).abs() < 1e-10 * want);
        assert!(!f.tail_grows(consts.alpha));
        let grow = LogPolarField::sample(k.ln(), r.ln(), 0.005, 64, |y| y[0].hypot(y[1]).powi(10));
        assert!(grow.tail_grows(consts.alpha));
        let empty = LogPolarField::sample(3.0, 2.0, 0.005, 64, |_| 1.0);
        assert_eq!(norm_flat(&empty, &consts), 0.0);
    }

    #[test]
    fn euler_identity_on_grid() {
        let f = LogPolarField::sample(0.0, 2.0, 0.005, 16, |y| y[0] * y[0] + y[1] * y[1]);
        let d1 = f.directional_derivative(1).unwrap();
        let d2 = f.directional_derivative(2).unwrap();
        for i in [0, 50, 200, f.nrho - 1] {
            let r2 = (2.0 * f.rho(i)).exp();
            assert!((d1.at(i, 3) - 2.0 * r2).abs() < 1e-3 * r2);
            assert!((d2.at(i, 3) - 4.0 * r2).abs() < 1e-3 * r2);
        }
        let tiny = LogPolarField { rho0: 0.0, drho: 0.1, nrho: 2, nphi: 4, data: vec![0.0; 8] };
        assert!(tiny.directional_derivative(1).is_err());
    }

    #[test]
    fn h22_radial_derivative() {
        let h = TensorEigenfunction::new(2, 2);
        let r0 = 2f64.sqrt().ln();
        let f = LogPolarField::sample(r0 - 0.5, r0 + 0.5, 0.001, 64, |y| h.eval(y));
        let i = ((r0 - f.rho0) / f.drho).round() as usize;
        assert!((f.point(i, 8)[0] - 1.0).abs() < 1e-9);
        // y·∇[(y₁²−2)(y₂²−2)] = 2y₁²(y₂²−2) + 2y₂²(y₁²−2) = −4 at (1,1)
        let d = f.directional_derivative(1).unwrap();
        assert!((d.at(i, 8) + 4.0).abs() < 1e-5);
    }

    #[test]
    fn exterior_cutoff_regions() {
        let (s, k) = (20.0, 10.0);
        let edge = k * (EXTERIOR_RATE * s).exp();
        assert_eq!(eta_ex_at(3.0, [0.5 * edge, 0.0], s, k), 0.0);
        assert_eq!(eta_ex_at(3.0, [2.0 * edge, 0.0], s, k), 3.0);
        let mid = eta_ex_at(3.0, [1.5 * edge, 0.0], s, k);
        assert!(mid > 0.0 && mid < 3.0);
    }

    #[test]
    fn zero_field_passes_with_full_margin() {
        let consts = BootstrapConstants::default();
        let pf = PerturbationField::from_epsilon(|_| 0.0, 16.0, &consts, &MonitorResolution::default()).unwrap();
        let rep = bootstrap_check(&pf, &consts).unwrap();
        assert_eq!(rep.records.len(), 12);
        for r in &rep.records {
            assert!(r.pass && r.margin == r.threshold, "{r:?}");
        }
    }

    #[test]
    fn constant_chain_validation() {
        let mut c = BootstrapConstants::default();
        assert!(c.validate().is_ok());
        c.b[0] = 1.0;
        assert!(c.validate().is_err());
    }
}
