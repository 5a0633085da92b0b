//! Quadrature against `ρ(y) = (4π)^{-1} e^{−|y|²/4}` and its 1D factor
//! `(4π)^{-1/2} e^{−ξ²/4}`.
//!
//! Gauss–Hermite nodes for `e^{−t²}` come from the `gauss-quad` crate
//! (Golub–Welsch) and are mapped by `ξ = 2t`.

use crate::error::{Error, Result};
use crate::hermite::{hermite_table, norm_sq_f64, ModeSet};
use gauss_quad::hermite::GaussHermite;
use rayon::prelude::*;
use std::num::NonZeroUsize;

pub const MAX_ORDER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianQuadrature {
    dim: usize,
    axis_nodes: Vec<f64>,
    /// Weights against `e^{−ξ²/4} dξ` (un-normalized).
    axis_weights: Vec<f64>,
    /// Per-axis factor `1/√(4π)`; the 2D rule uses its square `1/(4π)`.
    normalization: f64,
    exact_degree: Option<usize>,
}

/// 1D Gauss–Hermite rule in the `ξ` variable.
pub fn quad_rule(order: usize) -> Result<GaussianQuadrature> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(Error::QuadratureOrder(order));
    }
    let gh = GaussHermite::new(NonZeroUsize::new(order).unwrap());
    let mut pairs: Vec<(f64, f64)> = gh
        .iter()
        .map(|(t, w)| (2.0 * t, 2.0 * w))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(GaussianQuadrature {
        dim: 1,
        axis_nodes: pairs.iter().map(|p| p.0).collect(),
        axis_weights: pairs.iter().map(|p| p.1).collect(),
        normalization: 1.0 / (4.0 * std::f64::consts::PI).sqrt(),
        exact_degree: Some(2 * order - 1),
    })
}

/// Tensor-product 2D rule with normalization `1/(4π)`.
pub fn quad_rule_2d(order: usize) -> Result<GaussianQuadrature> {
    let mut q = quad_rule(order)?;
    q.dim = 2;
    Ok(q)
}

impl GaussianQuadrature {
    /// Composite trapezoid on `[−half_width, half_width]` per axis with the
    /// Gaussian weight folded into the weights. Spectrally accurate for
    /// smooth integrands; resolves oscillations a Gauss rule of modest order
    /// cannot.
    pub fn truncated_trapezoid_2d(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && half_width > h) {
            return Err(Error::InvalidParameter(format!(
                "trapezoid rule needs 0 < h < half_width, got h={h}, half_width={half_width}"
            )));
        }
        let n = (half_width / h).round() as i64;
        let h = half_width / n as f64;
        let axis_nodes: Vec<f64> = (-n..=n).map(|k| k as f64 * h).collect();
        let axis_weights = axis_nodes
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let end = if k == 0 || k == 2 * n as usize { 0.5 } else { 1.0 };
                end * h * (-x * x / 4.0).exp()
            })
            .collect();
        Ok(Self {
            dim: 2,
            axis_nodes,
            axis_weights,
            normalization: 1.0 / (4.0 * std::f64::consts::PI).sqrt(),
            exact_degree: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    pub fn normalization(&self) -> f64 {
        self.normalization.powi(self.dim as i32)
    }

    /// Polynomial degree integrated exactly per axis, if any.
    pub fn exact_degree(&self) -> Option<usize> {
        self.exact_degree
    }

    pub fn len(&self) -> usize {
        self.axis_nodes.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.axis_nodes.is_empty()
    }

    /// Normalized per-axis weights (each sums to ≈ 1).
    fn unit_weights(&self) -> Vec<f64> {
        self.axis_weights.iter().map(|w| w * self.normalization).collect()
    }

    /// All nodes, row-major in `(y₁, y₂)`; for 1D rules `y₂ = 0`.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        if self.dim == 1 {
            return self.axis_nodes.iter().map(|&x| [x, 0.0]).collect();
        }
        let mut out = Vec::with_capacity(self.len());
        for &a in &self.axis_nodes {
            for &b in &self.axis_nodes {
                out.push([a, b]);
            }
        }
        out
    }

    /// Normalized weights aligned with [`nodes`](Self::nodes).
    pub fn weights(&self) -> Vec<f64> {
        let w = self.unit_weights();
        if self.dim == 1 {
            return w;
        }
        let mut out = Vec::with_capacity(self.len());
        for &a in &w {
            for &b in &w {
                out.push(a * b);
            }
        }
        out
    }

    /// Evaluates `f` at every node, failing on the first non-finite value.
    pub fn sample<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn([f64; 2]) -> f64 + Sync,
    {
        let nodes = self.nodes();
        let vals: Vec<f64> = nodes.par_iter().map(|&p| f(p)).collect();
        for (p, v) in nodes.iter().zip(&vals) {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { y1: p[0], y2: p[1], value: *v });
            }
        }
        Ok(vals)
    }

    /// `Σ w_k f_k` for samples aligned with the nodes.
    pub fn integrate_samples(&self, vals: &[f64]) -> f64 {
        self.weights().iter().zip(vals).map(|(w, v)| w * v).sum()
    }

    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn([f64; 2]) -> f64 + Sync,
    {
        Ok(self.integrate_samples(&self.sample(f)?))
    }

    /// Projection coefficients `⟨f, H_ij⟩_ρ / ‖H_ij‖²_ρ` from node samples,
    /// together with the remainder energy `⟨f,f⟩_ρ − Σ c²‖H‖²`.
    pub fn project_samples(&self, vals: &[f64], cap: usize) -> Result<(ModeSet, f64)> {
        if cap > 12 {
            return Err(Error::ProjectionCap(cap));
        }
        let w = self.unit_weights();
        let tables: Vec<Vec<f64>> = self.axis_nodes.iter().map(|&x| hermite_table(cap, x)).collect();
        let mut modes = ModeSet::zeros(cap);
        let n = self.axis_nodes.len();
        let energy: f64;
        if self.dim == 1 {
            for i in 0..=cap {
                let ip: f64 = (0..n).map(|a| w[a] * vals[a] * tables[a][i]).sum();
                modes.set(i, 0, ip / norm_sq_f64(i, 0));
            }
            energy = (0..n).map(|a| w[a] * vals[a] * vals[a]).sum();
        } else {
            // contract the second axis first: g[a][j] = Σ_b w_b f(a,b) h_j(b)
            let g: Vec<Vec<f64>> = (0..n)
                .map(|a| {
                    (0..=cap)
                        .map(|j| (0..n).map(|b| w[b] * vals[a * n + b] * tables[b][j]).sum())
                        .collect()
                })
                .collect();
            for t in 0..=cap {
                for j in 0..=t {
                    let i = t - j;
                    let ip: f64 = (0..n).map(|a| w[a] * tables[a][i] * g[a][j]).sum();
                    modes.set(i, j, ip / norm_sq_f64(i, j));
                }
            }
            energy = self.integrate_samples(&vals.iter().map(|v| v * v).collect::<Vec<_>>());
        }
        let rem = energy - modes.energy();
        Ok((modes, rem))
    }
}

/// `⟨f, g⟩_ρ` by quadrature.
pub fn inner_product_rho<F, G>(f: F, g: G, rule: &GaussianQuadrature) -> Result<f64>
where
    F: Fn([f64; 2]) -> f64 + Sync,
    G: Fn([f64; 2]) -> f64 + Sync,
{
    let a = rule.sample(f)?;
    let b = rule.sample(g)?;
    Ok(rule.integrate_samples(&a.iter().zip(&b).map(|(x, y)| x * y).collect::<Vec<_>>()))
}

/// Projects `f` on `H_ij`, `i + j ≤ cap`.
pub fn project<F>(f: F, cap: usize, rule: &GaussianQuadrature) -> Result<(ModeSet, f64)>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    if cap > 12 {
        return Err(Error::ProjectionCap(cap));
    }
    rule.project_samples(&rule.sample(f)?, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::eval_hermite;

    fn h(i: usize, j: usize) -> impl Fn([f64; 2]) -> f64 + Sync {
        move |y| eval_hermite(i, y[0]) * eval_hermite(j, y[1])
    }

    #[test]
    fn weights_normalize() {
        let q = quad_rule_2d(20).unwrap();
        assert!((q.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((q.normalization() - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-16);
    }

    #[test]
    fn second_moment() {
        let q = quad_rule(8).unwrap();
        let v = q.integrate(|y| y[0] * y[0]).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn orthogonal_pairs() {
        let q = quad_rule(10).unwrap();
        let v = q.integrate(|y| eval_hermite(3, y[0]) * eval_hermite(5, y[0])).unwrap();
        assert!(v.abs() < 1e-10);
        let q2 = quad_rule_2d(12).unwrap();
        assert!((inner_product_rho(h(0, 0), h(0, 0), &q2).unwrap() - 1.0).abs() < 1e-13);
        assert!((inner_product_rho(h(2, 2), h(2, 2), &q2).unwrap() - 64.0).abs() < 1e-10);
        assert!(inner_product_rho(h(2, 0), h(0, 2), &q2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn order_bounds() {
        assert_eq!(quad_rule(1), Err(Error::QuadratureOrder(1)));
        assert!(quad_rule(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn non_finite_reports_node() {
        let q = quad_rule_2d(4).unwrap();
        let e = q.integrate(|y| if y[0] > 0.0 { f64::NAN } else { 0.0 }).unwrap_err();
        assert!(matches!(e, Error::NonFiniteSample { y1, .. } if y1 > 0.0));
    }

    #[test]
    fn projections() {
        let q = quad_rule_2d(16).unwrap();
        let (m, r) = project(h(2, 2), 8, &q).unwrap();
        for ((i, j), c) in m.iter() {
            let want = if (i, j) == (2, 2) { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12, "({i},{j}) {c}");
        }
        assert!(r.abs() < 1e-9);
        let (m, r) = project(|y| 3.0 + eval_hermite(4, y[0]) * eval_hermite(4, y[1]), 8, &q).unwrap();
        assert!((m.get(0, 0) - 3.0).abs() < 1e-12);
        assert!((m.get(4, 4) - 1.0).abs() < 1e-12);
        assert!(r.abs() < 1e-8);
        let (m, _) = project(|y| y[0].powi(4), 8, &q).unwrap();
        assert!((m.get(4, 0) - 1.0).abs() < 1e-12);
        assert!((m.get(2, 0) - 12.0).abs() < 1e-11);
        assert!((m.get(0, 0) - 12.0).abs() < 1e-11);
    }

    #[test]
    fn trapezoid_matches_gauss_on_polynomials() {
        let t = GaussianQuadrature::truncated_trapezoid_2d(24.0, 0.25).unwrap();
        assert!((t.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        let v = t.integrate(|y| (eval_hermite(3, y[0]) * eval_hermite(2, y[1])).powi(2)).unwrap();
        assert!((v - 48.0 * 8.0).abs() < 1e-9);
    }
}
