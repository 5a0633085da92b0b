//! `u_t = Δu − u^{−2}` on the unit disc, `u = 1` on the boundary.
//!
//! Finite volumes in `r` on a stretched grid, a discrete Fourier transform
//! in `φ`, backward Euler for diffusion and a per-node reaction update.

use crate::error::{Error, Result};
use crate::fit::{golden_min, linear_fit};
use crate::profile::{initial_data_w0, InitialDataSpec, ProfileParams};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Stretched polar grid, `r_k = a ξ + (1−a) ξ³`, `ξ = k/N_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    nr: usize,
    nphi: usize,
    stretch: f64,
    r: Vec<f64>,
    /// `r_{k+½}` for `k = 0..nr`.
    rmid: Vec<f64>,
}

impl PolarGrid {
    pub fn new(nr: usize, nphi: usize, stretch: f64) -> Result<Self> {
        if nr < 32 {
            return Err(Error::InvalidGrid(format!("nr = {nr} must be at least 32")));
        }
        if nphi < 16 || nphi % 2 != 0 {
            return Err(Error::InvalidGrid(format!("nphi = {nphi} must be even and at least 16")));
        }
        if !(stretch > 0.0 && stretch <= 1.0) {
            return Err(Error::InvalidGrid(format!("stretch = {stretch} must lie in (0, 1]")));
        }
        let r: Vec<f64> = (0..=nr)
            .map(|k| {
                let x = k as f64 / nr as f64;
                stretch * x + (1.0 - stretch) * x * x * x
            })
            .collect();
        let mut rmid: Vec<f64> = r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        // half cell outside the boundary ring, only used with a free boundary
        rmid.push(1.0);
        Ok(Self { nr, nphi, stretch, r, rmid })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }
    pub fn nphi(&self) -> usize {
        self.nphi
    }
    pub fn stretch(&self) -> f64 {
        self.stretch
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn dphi(&self) -> f64 {
        TAU / self.nphi as f64
    }
    pub fn phi(&self, l: usize) -> f64 {
        self.dphi() * l as f64
    }
    pub fn len(&self) -> usize {
        (self.nr + 1) * self.nphi
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn idx(&self, k: usize, l: usize) -> usize {
        k * self.nphi + l
    }

    /// Cartesian position of node `(k, l)`.
    pub fn point(&self, k: usize, l: usize) -> [f64; 2] {
        let (r, p) = (self.r[k], self.phi(l));
        [r * p.cos(), r * p.sin()]
    }

    /// Field sampled from `f`; ring 0 holds the centre value in every slot.
    pub fn sample(&self, mut f: impl FnMut([f64; 2]) -> f64) -> Vec<f64> {
        let mut u = vec![0.0; self.len()];
        let c = f([0.0, 0.0]);
        for k in 0..=self.nr {
            for l in 0..self.nphi {
                u[self.idx(k, l)] = if k == 0 { c } else { f(self.point(k, l)) };
            }
        }
        u
    }

    fn area(&self, k: usize) -> f64 {
        0.5 * (self.rmid[k] * self.rmid[k] - self.rmid[k - 1] * self.rmid[k - 1])
    }

    /// Radial coupling of ring `k` to `k−1` and `k+1`: `(west, east)`.
    fn radial_coeffs(&self, k: usize, free: bool) -> (f64, f64) {
        let a = self.area(k);
        let w = self.rmid[k - 1] / (self.r[k] - self.r[k - 1]) / a;
        let e = if k < self.nr {
            self.rmid[k] / (self.r[k + 1] - self.r[k]) / a
        } else if free {
            0.0
        } else {
            f64::NAN
        };
        (w, e)
    }

    fn pole_coeff(&self) -> f64 {
        // 2/(r_½ r₁) with r_½ = r₁/2
        4.0 / (self.r[1] * self.r[1])
    }

    /// Discrete Laplacian at interior nodes (boundary ring set to zero).
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let (nr, np) = (self.nr, self.nphi);
        let mut out = vec![0.0; self.len()];
        let mean1 = u[self.idx(1, 0)..self.idx(2, 0)].iter().sum::<f64>() / np as f64;
        let c = self.pole_coeff() * (mean1 - u[0]);
        out[..np].fill(c);
        let d2 = self.dphi() * self.dphi();
        for k in 1..nr {
            let (w, e) = self.radial_coeffs(k, false);
            let ir2 = 1.0 / (self.r[k] * self.r[k]);
            for l in 0..np {
                let uc = u[self.idx(k, l)];
                let west = if k == 1 { u[0] } else { u[self.idx(k - 1, l)] };
                let ang = u[self.idx(k, (l + 1) % np)] - 2.0 * uc + u[self.idx(k, (l + np - 1) % np)];
                out[self.idx(k, l)] = w * (west - uc) + e * (u[self.idx(k + 1, l)] - uc) + ir2 * ang / d2;
            }
        }
        out
    }

    /// Bilinear interpolation in `(r, φ)`; linear from the centre inside the first ring.
    pub fn interpolate(&self, u: &[f64], x: [f64; 2]) -> Result<f64> {
        let rr = x[0].hypot(x[1]);
        if rr > 1.0 + 1e-12 {
            return Err(Error::OutsideDomain(x[0], x[1]));
        }
        let rr = rr.min(1.0);
        let np = self.nphi;
        let mut phi = x[1].atan2(x[0]);
        if phi < 0.0 {
            phi += TAU;
        }
        let fl = phi / self.dphi();
        let l0 = (fl.floor() as usize) % np;
        let l1 = (l0 + 1) % np;
        let tphi = fl - fl.floor();
        let ring = |k: usize| (1.0 - tphi) * u[self.idx(k, l0)] + tphi * u[self.idx(k, l1)];
        let k = match self.r.partition_point(|&v| v <= rr) {
            0 => 0,
            p => (p - 1).min(self.nr - 1),
        };
        let t = (rr - self.r[k]) / (self.r[k + 1] - self.r[k]);
        Ok((1.0 - t) * ring(k) + t * ring(k + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReactionScheme {
    /// `u ← (u³ − 3 dt)^{1/3}`, the exact flow of `u' = −u^{−2}`.
    #[default]
    ExactFlow,
    ForwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub c_dt: f64,
    pub dt_max: f64,
    pub u_stop: f64,
    pub horizon: f64,
    pub max_steps: usize,
    pub reaction: bool,
    pub scheme: ReactionScheme,
    /// Dirichlet `u = 1` on `r = 1`; otherwise zero flux.
    pub clamp: bool,
    /// Keep every `n`-th state (0 disables snapshots).
    pub snapshot_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            c_dt: 0.1,
            dt_max: 1e-4,
            u_stop: 5e-3,
            horizon: 10.0,
            max_steps: 10_000_000,
            reaction: true,
            scheme: ReactionScheme::ExactFlow,
            clamp: true,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub u_min: f64,
    pub argmin: (usize, usize),
}

impl SolverState {
    pub fn new(grid: &PolarGrid, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("field length {} != {}", u.len(), grid.len())));
        }
        if let Some(v) = u.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("initial value {v} is not positive")));
        }
        let mut s = Self { u, t: 0.0, dt: 0.0, u_min: 0.0, argmin: (0, 0) };
        s.refresh_min(grid);
        Ok(s)
    }

    fn refresh_min(&mut self, grid: &PolarGrid) {
        let (i, v) = self
            .u
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        self.u_min = v;
        self.argmin = (i / grid.nphi, i % grid.nphi);
    }

    /// `(r, φ)` of the minimum; the centre reports `φ = 0`.
    pub fn min_location(&self, grid: &PolarGrid) -> (f64, f64) {
        let (k, l) = self.argmin;
        if k == 0 {
            (0.0, 0.0)
        } else {
            (grid.r[k], grid.phi(l))
        }
    }
}

/// Reusable FFT plans and scratch for one grid.
pub struct Stepper {
    grid: PolarGrid,
    opts: SolverOptions,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    lam: Vec<f64>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper").field("grid", &self.grid).field("opts", &self.opts).finish()
    }
}

impl Stepper {
    pub fn new(grid: PolarGrid, opts: SolverOptions) -> Self {
        let mut planner = FftPlanner::new();
        let np = grid.nphi;
        let fwd = planner.plan_fft_forward(np);
        let inv = planner.plan_fft_inverse(np);
        let d2 = grid.dphi() * grid.dphi();
        let lam = (0..np).map(|m| (2.0 - 2.0 * (TAU * m as f64 / np as f64).cos()) / d2).collect();
        Self { grid, opts, fwd, inv, lam }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    /// Step size `min(c_dt·u_min³, dt_max)`.
    pub fn next_dt(&self, state: &SolverState) -> f64 {
        (self.opts.c_dt * state.u_min.powi(3)).min(self.opts.dt_max)
    }

    /// One step of length `next_dt`; the reaction is applied first, then
    /// an implicit diffusion solve.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        self.step_by(state, self.next_dt(state))
    }

    /// One step of a prescribed length.
    pub fn step_by(&self, state: &SolverState, dt: f64) -> Result<SolverState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("step {dt} must be positive")));
        }
        let mut u = state.u.clone();
        if self.opts.reaction {
            for v in u.iter_mut() {
                *v = match self.opts.scheme {
                    ReactionScheme::ExactFlow => {
                        let c = *v * *v * *v - 3.0 * dt;
                        if c <= 0.0 {
                            return Err(Error::Touchdown(state.t + dt));
                        }
                        c.cbrt()
                    }
                    ReactionScheme::ForwardEuler => *v - dt / (*v * *v),
                };
                if !(*v > 0.0) {
                    return Err(Error::Touchdown(state.t + dt));
                }
            }
        }
        self.diffuse(&mut u, dt);
        let mut next = SolverState { u, t: state.t + dt, dt, u_min: 0.0, argmin: (0, 0) };
        next.refresh_min(&self.grid);
        if !(next.u_min > 0.0) {
            return Err(Error::Touchdown(next.t));
        }
        Ok(next)
    }

    /// Solves `(I − dt L) u⁺ = u` in place.
    fn diffuse(&self, u: &mut [f64], dt: f64) {
        let g = &self.grid;
        let (nr, np) = (g.nr, g.nphi);
        let free = !self.opts.clamp;
        let last = if free { nr } else { nr - 1 };
        // ring spectra, rows 1..=nr
        let mut spec: Vec<Complex64> = u[np..].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        spec.par_chunks_mut(np).for_each(|row| self.fwd.process(row));
        let center = u[0];
        let inv_np = 1.0 / np as f64;
        let modes: Vec<Vec<Complex64>> = (0..np)
            .into_par_iter()
            .map(|m| {
                // unknowns: index 0 is the centre (m = 0 only), then rings 1..=last
                let n = last + 1;
                let mut lo = vec![0.0; n];
                let mut di = vec![1.0; n];
                let mut up = vec![0.0; n];
                let mut rhs = vec![Complex64::new(0.0, 0.0); n];
                if m == 0 {
                    let c = dt * g.pole_coeff();
                    di[0] = 1.0 + c;
                    up[0] = -c;
                    rhs[0] = Complex64::new(center, 0.0);
                }
                for k in 1..=last {
                    let (w, e) = g.radial_coeffs(k, free);
                    let ang = self.lam[m] / (g.r[k] * g.r[k]);
                    lo[k] = -dt * w;
                    di[k] = 1.0 + dt * (w + e + ang);
                    up[k] = if k < last { -dt * e } else { 0.0 };
                    rhs[k] = spec[(k - 1) * np + m] * inv_np;
                    if k == nr - 1 && !free {
                        let b = if m == 0 { 1.0 } else { 0.0 };
                        rhs[k] += dt * e * b;
                    }
                }
                if m != 0 {
                    lo[1] = 0.0;
                }
                thomas(&lo, &di, &up, &mut rhs);
                rhs
            })
            .collect();
        for k in 1..=last {
            for m in 0..np {
                spec[(k - 1) * np + m] = modes[m][k];
            }
        }
        spec[..last * np].par_chunks_mut(np).for_each(|row| self.inv.process(row));
        let c = modes[0][0].re;
        u[..np].fill(c);
        for k in 1..=last {
            for l in 0..np {
                u[k * np + l] = spec[(k - 1) * np + l].re;
            }
        }
        if !free {
            u[nr * np..].fill(1.0);
        }
    }
}

/// Thomas algorithm with real coefficients and complex right-hand side.
fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &mut [Complex64]) {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut b = di[0];
    c[0] = up[0] / b;
    rhs[0] /= b;
    for i in 1..n {
        b = di[i] - lo[i] * c[i - 1];
        c[i] = up[i] / b;
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - prev * lo[i]) / b;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * c[i];
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub u_min: f64,
    pub r_min: f64,
    pub phi_min: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Quenched,
    Horizon,
    MaxSteps,
    Touchdown,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Quenched => "quenched",
            Termination::Horizon => "horizon",
            Termination::MaxSteps => "max-steps",
            Termination::Touchdown => "touchdown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

impl Snapshot {
    /// Header `nr,nphi,t`, then `(nr+1)` rows of `nphi` values.
    pub fn to_csv(&self, grid: &PolarGrid) -> String {
        let mut s = format!("nr,nphi,t\n{},{},{:.16e}\n", grid.nr, grid.nphi, self.t);
        for row in self.u.chunks(grid.nphi) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<(usize, usize, Snapshot)> {
        let bad = |m: &str| Error::Snapshot(m.to_string());
        let mut lines = text.lines();
        if lines.next() != Some("nr,nphi,t") {
            return Err(bad("missing header"));
        }
        let head: Vec<&str> = lines.next().ok_or_else(|| bad("missing sizes"))?.split(',').collect();
        if head.len() != 3 {
            return Err(bad("size line needs 3 fields"));
        }
        let nr: usize = head[0].parse().map_err(|_| bad("nr"))?;
        let nphi: usize = head[1].parse().map_err(|_| bad("nphi"))?;
        let t: f64 = head[2].parse().map_err(|_| bad("t"))?;
        let mut u = Vec::with_capacity((nr + 1) * nphi);
        for line in lines {
            for v in line.split(',') {
                u.push(v.trim().parse::<f64>().map_err(|_| bad("value"))?);
            }
        }
        if u.len() != (nr + 1) * nphi {
            return Err(bad("wrong number of values"));
        }
        Ok((nr, nphi, Snapshot { t, u }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub reason: Termination,
    pub u_stop: f64,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SolverState,
}

/// Initial data on the disc.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Constant(f64),
    /// `1 − depth·(1−|x|²)·exp(−|x−c|²/width²)`.
    Dip { center: [f64; 2], depth: f64, width: f64 },
    /// `e^{−s₀/3} w₀(x e^{s₀/2})` with `T = e^{−s₀}`.
    Profile { params: ProfileParams, spec: InitialDataSpec },
}

impl InitialCondition {
    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        match self {
            InitialCondition::Constant(a) => Ok(*a),
            InitialCondition::Dip { center, depth, width } => {
                let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                let r2 = x[0] * x[0] + x[1] * x[1];
                Ok(1.0 - depth * (1.0 - r2) * (-d2 / (width * width)).exp())
            }
            InitialCondition::Profile { params, spec } => {
                let s0 = spec.s0();
                let e = (s0 / 2.0).exp();
                let r = x[0].hypot(x[1]);
                // keep boundary nodes inside the chart despite rounding
                let k = if r * e > e { 1.0 / r } else { 1.0 };
                let w = initial_data_w0([x[0] * e * k, x[1] * e * k], spec, params)?;
                Ok((-s0 / 3.0).exp() * w)
            }
        }
    }

    pub fn sample(&self, grid: &PolarGrid) -> Result<Vec<f64>> {
        let mut err = None;
        let u = grid.sample(|x| match self.eval(x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(u),
        }
    }
}

/// Integrates until `u_min ≤ u_stop`, the horizon, or the step cap.
pub fn run_to_quench(u0: &InitialCondition, grid: &PolarGrid, opts: &SolverOptions) -> Result<QuenchTrajectory> {
    let mut u = u0.sample(grid)?;
    if opts.clamp {
        u[grid.nr * grid.nphi..].fill(1.0);
    }
    let stepper = Stepper::new(grid.clone(), *opts);
    let mut state = SolverState::new(grid, u)?;
    let record = |s: &SolverState| {
        let (r_min, phi_min) = s.min_location(grid);
        TrajectorySample { t: s.t, u_min: s.u_min, r_min, phi_min, dt: s.dt }
    };
    let mut samples = vec![record(&state)];
    let mut snapshots = Vec::new();
    if opts.snapshot_every > 0 {
        snapshots.push(Snapshot { t: state.t, u: state.u.clone() });
    }
    let mut steps = 0usize;
    let reason = loop {
        if state.u_min <= opts.u_stop {
            break Termination::Quenched;
        }
        if state.t >= opts.horizon {
            break Termination::Horizon;
        }
        if steps >= opts.max_steps {
            break Termination::MaxSteps;
        }
        match stepper.step(&state) {
            Ok(next) => state = next,
            Err(Error::Touchdown(_)) => break Termination::Touchdown,
            Err(e) => return Err(e),
        }
        steps += 1;
        samples.push(record(&state));
        if opts.snapshot_every > 0 && steps % opts.snapshot_every == 0 {
            snapshots.push(Snapshot { t: state.t, u: state.u.clone() });
        }
    };
    if opts.snapshot_every > 0 && snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(Snapshot { t: state.t, u: state.u.clone() });
    }
    Ok(QuenchTrajectory { samples, reason, u_stop: opts.u_stop, snapshots, final_state: state })
}

/// States at the increasing times `targets`, reached by shortening the
/// step that would overshoot each one.
pub fn run_to_times(u0: &InitialCondition, grid: &PolarGrid, opts: &SolverOptions, targets: &[f64]) -> Result<Vec<SolverState>> {
    if targets.windows(2).any(|w| !(w[1] > w[0])) || targets.first().is_some_and(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("target times must be positive and increasing".into()));
    }
    let mut u = u0.sample(grid)?;
    if opts.clamp {
        u[grid.nr * grid.nphi..].fill(1.0);
    }
    let stepper = Stepper::new(grid.clone(), *opts);
    let mut state = SolverState::new(grid, u)?;
    let mut out = Vec::with_capacity(targets.len());
    let mut steps = 0usize;
    for &target in targets {
        while state.t < target {
            if steps >= opts.max_steps {
                return Err(Error::InvalidParameter(format!("step cap reached before t = {target}")));
            }
            let dt = stepper.next_dt(&state);
            let dt = if state.t + dt >= target { target - state.t } else { dt };
            state = stepper.step_by(&state, dt)?;
            if state.t > target || target - state.t < 1e-15 * target {
                state.t = target;
            }
            steps += 1;
        }
        out.push(state.clone());
    }
    Ok(out)
}

/// Values at Cartesian points at time `t`, linear in time between the
/// bracketing snapshots.
pub fn sample_solution(snapshots: &[Snapshot], grid: &PolarGrid, t: f64, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let (first, last) = match (snapshots.first(), snapshots.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Snapshot("no snapshots stored".into())),
    };
    if t < first.t || t > last.t {
        return Err(Error::Snapshot(format!("t = {t} outside [{}, {}]", first.t, last.t)));
    }
    let j = snapshots.partition_point(|s| s.t < t).min(snapshots.len() - 1);
    let (a, b) = if snapshots[j].t == t || j == 0 { (&snapshots[j], &snapshots[j]) } else { (&snapshots[j - 1], &snapshots[j]) };
    let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
    points
        .iter()
        .map(|&x| {
            let va = grid.interpolate(&a.u, x)?;
            if w == 0.0 {
                return Ok(va);
            }
            Ok((1.0 - w) * va + w * grid.interpolate(&b.u, x)?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchFit {
    /// `−intercept/slope` of the `u_min³` line.
    pub t_est: f64,
    pub slope: f64,
    /// RMS residual of the `u_min³` line.
    pub fit_residual: f64,
    /// Exponent from the free-`T` log-log fit.
    pub p_est: f64,
    /// `T` minimising the log-log residual.
    pub t_loglog: f64,
    /// Exponent of the log-log fit with `T = t_est`.
    pub p_cubic: f64,
    pub n_points: usize,
}

/// Fits the final decade `u_min ≤ 10·u_stop` of `(t, u_min)`.
pub fn estimate_t(t: &[f64], u: &[f64], u_stop: f64) -> Result<QuenchFit> {
    let sel: Vec<(f64, f64)> = t.iter().zip(u).filter(|(_, &v)| v <= 10.0 * u_stop).map(|(&a, &b)| (a, b)).collect();
    if sel.len() < 4 {
        return Err(Error::Fit(format!("{} points in the final decade, need 4", sel.len())));
    }
    let ts: Vec<f64> = sel.iter().map(|p| p.0).collect();
    let cubes: Vec<f64> = sel.iter().map(|p| p.1.powi(3)).collect();
    let logs: Vec<f64> = sel.iter().map(|p| p.1.ln()).collect();
    let line = linear_fit(&ts, &cubes)?;
    if !(line.slope < 0.0) {
        return Err(Error::Fit(format!("u_min^3 is not decreasing (slope {})", line.slope)));
    }
    let t_est = -line.intercept / line.slope;
    let t_last = *ts.last().unwrap();
    let span = t_last - ts[0];
    let loglog = |tt: f64| {
        let x: Vec<f64> = ts.iter().map(|v| (tt - v).ln()).collect();
        linear_fit(&x, &logs)
    };
    let cost = |tt: f64| loglog(tt).map(|f| f.rms).unwrap_or(f64::INFINITY);
    let t_loglog = golden_min(cost, t_last + 1e-9 * span, t_last + 10.0 * span, 1e-15 * span.max(t_last));
    let p_est = loglog(t_loglog)?.slope;
    let p_cubic = if t_est > t_last { loglog(t_est)?.slope } else { f64::NAN };
    Ok(QuenchFit { t_est, slope: line.slope, fit_residual: line.rms, p_est, t_loglog, p_cubic, n_points: sel.len() })
}

impl QuenchTrajectory {
    pub fn fit(&self) -> Result<QuenchFit> {
        let t: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let u: Vec<f64> = self.samples.iter().map(|s| s.u_min).collect();
        estimate_t(&t, &u, self.u_stop)
    }

    /// `(s, u_min (T−t)^{−1/3})` over the final decade.
    pub fn rescaled_minimum(&self, t_quench: f64) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.u_min <= 10.0 * self.u_stop && s.t < t_quench)
            .map(|s| (-(t_quench - s.t).ln(), s.u_min / (t_quench - s.t).cbrt()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PolarGrid {
        PolarGrid::new(64, 32, 0.01).unwrap()
    }

    #[test]
    fn validation() {
        assert!(PolarGrid::new(16, 32, 0.1).is_err());
        assert!(PolarGrid::new(32, 17, 0.1).is_err());
        assert!(PolarGrid::new(32, 16, 0.0).is_err());
        let g = grid();
        assert_eq!(g.r()[0], 0.0);
        assert_eq!(g.r()[64], 1.0);
        assert!(g.r().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn laplacian_patch_tests() {
        let g = grid();
        let one = g.sample(|_| 1.0);
        assert!(g.laplacian(&one).iter().all(|v| v.abs() < 1e-12));
        let q = g.sample(|x| 1.0 - x[0] * x[0] - x[1] * x[1]);
        let lq = g.laplacian(&q);
        for k in 0..g.nr() {
            // cancellation in (u_{k±1} − u_k)/Δr² near the pole
            let tol = 1e-9 + 1e-14 / (g.r()[k.max(1)] * g.r()[k.max(1)]);
            assert!((lq[g.idx(k, 3)] + 4.0).abs() < tol, "k={k} {}", lq[g.idx(k, 3)]);
        }
        let h = g.sample(|x| x[0] * x[0] - x[1] * x[1]);
        let lh = g.laplacian(&h);
        let dphi2 = g.dphi() * g.dphi();
        for k in 1..g.nr() {
            // angular second difference of cos 2φ is off by O(Δφ²)
            assert!(lh[g.idx(k, 0)].abs() < 2.0 * dphi2, "{}", lh[g.idx(k, 0)]);
        }
    }

    #[test]
    fn thomas_solves() {
        let lo = [0.0, -1.0, -1.0];
        let di = [4.0, 4.0, 4.0];
        let up = [-1.0, -1.0, 0.0];
        let x = [1.0, 2.0, 3.0];
        let mut rhs: Vec<Complex64> = (0..3)
            .map(|i| {
                let mut v = di[i] * x[i];
                if i > 0 {
                    v += lo[i] * x[i - 1];
                }
                if i < 2 {
                    v += up[i] * x[i + 1];
                }
                Complex64::new(v, -v)
            })
            .collect();
        thomas(&lo, &di, &up, &mut rhs);
        for i in 0..3 {
            assert!((rhs[i].re - x[i]).abs() < 1e-14 && (rhs[i].im + x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_state_follows_ode() {
        let g = grid();
        let opts = SolverOptions { clamp: false, ..Default::default() };
        let st = Stepper::new(g.clone(), opts);
        let a: f64 = 0.8;
        let s0 = SolverState::new(&g, vec![a; g.len()]).unwrap();
        let s1 = st.step(&s0).unwrap();
        let want = (a.powi(3) - 3.0 * s1.dt).cbrt();
        assert!(s1.u.iter().all(|v| (v - want).abs() < 1e-13));
        let fe = Stepper::new(g.clone(), SolverOptions { scheme: ReactionScheme::ForwardEuler, ..opts });
        let s2 = fe.step(&s0).unwrap();
        assert!((s2.u[0] - want).abs() < 10.0 * s2.dt * s2.dt);
    }

    #[test]
    fn lands_on_targets() {
        let g = grid();
        let opts = SolverOptions { dt_max: 1e-2, ..Default::default() };
        let states = run_to_times(&InitialCondition::Constant(1.0), &g, &opts, &[0.013, 0.05]).unwrap();
        assert_eq!(states[0].t, 0.013);
        assert_eq!(states[1].t, 0.05);
        assert!(run_to_times(&InitialCondition::Constant(1.0), &g, &opts, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn pure_diffusion_equilibrium() {
        let g = grid();
        let st = Stepper::new(g.clone(), SolverOptions { reaction: false, ..Default::default() });
        let s0 = SolverState::new(&g, vec![1.0; g.len()]).unwrap();
        let s1 = st.step(&s0).unwrap();
        assert!(s1.u.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn interpolation_hits_nodes() {
        let g = grid();
        let u = g.sample(|x| 1.0 + x[0] + 0.5 * x[1] * x[1]);
        for &(k, l) in &[(0, 0), (5, 3), (63, 31), (64, 7)] {
            let v = g.interpolate(&u, g.point(k, l)).unwrap();
            assert!((v - u[g.idx(k, l)]).abs() < 1e-12);
        }
        assert!(g.interpolate(&u, [1.0, 0.5]).is_err());
    }

    #[test]
    fn snapshot_roundtrip() {
        let g = grid();
        let snap = Snapshot { t: 0.125, u: g.sample(|x| 1.0 - 0.3 * x[0]) };
        let (nr, nphi, back) = Snapshot::from_csv(&snap.to_csv(&g)).unwrap();
        assert_eq!((nr, nphi), (64, 32));
        assert_eq!(back, snap);
    }

    #[test]
    fn synthetic_fits() {
        let us: Vec<f64> = (0..60).map(|k| 0.1 * (0.005f64 / 0.1).powf(k as f64 / 59.0)).collect();
        let t: Vec<f64> = us.iter().map(|u| 0.4 - u.powi(3) / 3.0).collect();
        let f = estimate_t(&t, &us, 5e-3).unwrap();
        assert!((f.t_est - 0.4).abs() < 1e-6 && (f.slope + 3.0).abs() < 1e-6);
        assert!((f.p_est - 1.0 / 3.0).abs() < 1e-6, "{f:?}");
        let t2: Vec<f64> = us.iter().map(|u| 0.4 - u * u).collect();
        let f2 = estimate_t(&t2, &us, 5e-3).unwrap();
        assert!((f2.p_est - 0.5).abs() < 1e-6, "{f2:?}");
        assert!(estimate_t(&t[..3], &us[..3], 5e-3).is_err());
    }
}
