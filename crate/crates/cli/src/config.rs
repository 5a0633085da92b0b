//! Run configuration. Every section and key is optional; unknown keys are
//! rejected.

use anyhow::{bail, Context, Result};
use quench_core::hermite::ModeSet;
use quench_core::profile::{InitialDataSpec, ProfileParams, SigmaNormalization};
use quench_core::selfsim::{BootstrapConstants, MonitorResolution};
use quench_core::solver::{InitialCondition, PolarGrid, SolverOptions};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for every synthetic noise field.
    pub seed: u64,
    pub out: String,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub basis: BasisConfig,
    pub profile: ProfileConfig,
    pub residual: ResidualConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub ic: IcConfig,
    pub bootstrap: BootstrapConfig,
    pub renormalize: RenormalizeConfig,
    pub contours: ContourConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: "out".into(),
            threads: 0,
            basis: BasisConfig::default(),
            profile: ProfileConfig::default(),
            residual: ResidualConfig::default(),
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            ic: IcConfig::default(),
            bootstrap: BootstrapConfig::default(),
            renormalize: RenormalizeConfig::default(),
            contours: ContourConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    /// Gauss–Hermite order of the orthogonality check.
    pub order: usize,
    /// Largest degree in the orthogonality table.
    pub n_max: usize,
    /// Largest total degree `i + j` in the eigen-relation check.
    pub degree_max: usize,
    pub eigen_radius: f64,
    pub tolerance: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { order: 20, n_max: 12, degree_max: 10, eigen_radius: 10.0, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub theta: f64,
    pub theta_star: f64,
    pub k: f64,
    /// Defaults to `theta` when absent.
    pub delta_corr: Option<f64>,
    pub correction: bool,
    /// `"consistent"` or `"printed"`.
    pub normalization: String,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            theta_star: 0.5,
            k: 10.0,
            delta_corr: None,
            correction: true,
            normalization: "consistent".into(),
        }
    }
}

impl ProfileConfig {
    pub fn params(&self) -> Result<ProfileParams> {
        let norm = match self.normalization.as_str() {
            "consistent" => SigmaNormalization::Consistent,
            "printed" => SigmaNormalization::Printed,
            other => bail!("profile.normalization must be \"consistent\" or \"printed\", got {other:?}"),
        };
        Ok(ProfileParams::build(
            self.theta,
            self.theta_star,
            self.k,
            self.delta_corr.unwrap_or(self.theta),
            self.correction,
            norm,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub s_step: f64,
    /// Inner disc radius for the decay fit.
    pub radius: f64,
    /// Fitted slope must fall in this window.
    pub slope_window: [f64; 2],
    /// `s` at which the outer constant is frozen, and the check `s`.
    pub freeze_s: f64,
    pub outer_s: f64,
    pub outer_nr: usize,
    pub outer_nphi: usize,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self {
            s_min: 8.0,
            s_max: 16.0,
            s_step: 1.0,
            radius: 2.0,
            slope_window: [-3.3, -2.7],
            freeze_s: 10.0,
            outer_s: 14.0,
            outer_nr: 200,
            outer_nphi: 17,
        }
    }
}

impl ResidualConfig {
    pub fn s_grid(&self) -> Result<Vec<f64>> {
        if !(self.s_step > 0.0 && self.s_max >= self.s_min) {
            bail!("residual: need s_step > 0 and s_max >= s_min");
        }
        let n = ((self.s_max - self.s_min) / self.s_step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.s_min + self.s_step * k as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nr: usize,
    pub nphi: usize,
    pub stretch: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nr: 256, nphi: 64, stretch: 0.01 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<PolarGrid> {
        Ok(PolarGrid::new(self.nr, self.nphi, self.stretch)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub cdt: f64,
    pub dt_max: f64,
    pub u_stop: f64,
    pub horizon: f64,
    pub max_steps: usize,
    pub snapshot_every: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            cdt: o.c_dt,
            dt_max: o.dt_max,
            u_stop: o.u_stop,
            horizon: o.horizon,
            max_steps: o.max_steps,
            snapshot_every: 0,
        }
    }
}

impl TimeConfig {
    pub fn options(&self, clamp: bool) -> SolverOptions {
        SolverOptions {
            c_dt: self.cdt,
            dt_max: self.dt_max,
            u_stop: self.u_stop,
            horizon: self.horizon,
            max_steps: self.max_steps,
            clamp,
            snapshot_every: self.snapshot_every,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcConfig {
    /// `"constant"`, `"dip"`, `"profile"` or `"ode"` (insulated constant
    /// data, which follow `u' = −u^{−2}` exactly).
    pub kind: String,
    pub a: f64,
    pub center: [f64; 2],
    pub depth: f64,
    pub width: f64,
    pub theta: f64,
    pub s0: f64,
    /// Unstable-mode amplitudes as `[i, j, c_ij]`, `i + j ≤ 7`.
    pub c: Vec<[f64; 3]>,
}

impl Default for IcConfig {
    fn default() -> Self {
        Self {
            kind: "constant".into(),
            a: 1.0,
            center: [0.0, 0.0],
            depth: 0.5,
            width: 0.3,
            theta: 0.5,
            s0: 8.0,
            c: Vec::new(),
        }
    }
}

impl IcConfig {
    pub fn build(&self, profile: &ProfileConfig) -> Result<InitialCondition> {
        Ok(match self.kind.as_str() {
            "constant" | "ode" => InitialCondition::Constant(self.a),
            "dip" => InitialCondition::Dip { center: self.center, depth: self.depth, width: self.width },
            "profile" => {
                let mut modes = ModeSet::zeros(7);
                for [i, j, c] in &self.c {
                    let (i, j) = (*i as usize, *j as usize);
                    if i + j > 7 {
                        bail!("ic.c: mode ({i},{j}) exceeds total degree 7");
                    }
                    modes.set(i, j, *c);
                }
                let params = ProfileConfig { theta: self.theta, ..profile.clone() }.params()?;
                InitialCondition::Profile { params, spec: InitialDataSpec::new(modes, self.s0)? }
            }
            other => bail!("ic.kind must be constant, dip, profile or ode, got {other:?}"),
        })
    }

    pub fn is_ode(&self) -> bool {
        self.kind == "ode"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub d1: f64,
    pub k: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eps_small: f64,
    pub s0: f64,
    pub half_width: f64,
    pub h: f64,
    pub fd_step: f64,
    pub drho: f64,
    pub nphi: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        let c = BootstrapConstants::default();
        let r = MonitorResolution::default();
        Self {
            a: c.a,
            b: c.b,
            c: c.c,
            d1: c.d1,
            k: c.k,
            alpha: c.alpha,
            gamma: c.gamma,
            eps_small: c.eps_small,
            s0: c.s0,
            half_width: r.half_width,
            h: r.h,
            fd_step: r.fd_step,
            drho: r.drho,
            nphi: r.nphi,
        }
    }
}

impl BootstrapConfig {
    pub fn constants(&self) -> Result<BootstrapConstants> {
        let c = BootstrapConstants {
            a: self.a,
            b: self.b,
            c: self.c,
            d1: self.d1,
            k: self.k,
            alpha: self.alpha,
            gamma: self.gamma,
            eps_small: self.eps_small,
            s0: self.s0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn resolution(&self) -> MonitorResolution {
        MonitorResolution { half_width: self.half_width, h: self.h, fd_step: self.fd_step, drho: self.drho, nphi: self.nphi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenormalizeConfig {
    /// `"exact"`, `"noise"`, `"violation"` or `"simulation"`.
    pub source: String,
    pub s_values: Vec<f64>,
    /// Noise amplitude in units of `A₁e^{−(32/12)s}`.
    pub noise_amplitude: f64,
    /// Condition targeted by the violation source, e.g. `"in2"`.
    pub violation: String,
}

impl Default for RenormalizeConfig {
    fn default() -> Self {
        Self {
            source: "exact".into(),
            s_values: (8..=16).map(f64::from).collect(),
            noise_amplitude: 0.1,
            violation: "in2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourConfig {
    pub theta: f64,
    pub s_values: Vec<f64>,
    pub half_width: f64,
    pub n: usize,
    /// Level for the intercept comparison; `4^{1/3}` when absent.
    pub level: Option<f64>,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { theta: 0.5, s_values: vec![10.0, 100.0, 1000.0], half_width: 4.0, n: 161, level: None }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing configuration")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[grid]\nnr = 64\nfoo = 1").is_err());
        let c = RunConfig::from_toml("[grid]\nnr = 64").unwrap();
        assert_eq!(c.grid.nr, 64);
        assert_eq!(c.grid.nphi, 64);
    }

    #[test]
    fn s_grid_inclusive() {
        let g = ResidualConfig::default().s_grid().unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[8], 16.0);
    }
}
