//! Exact re-derivation of the `e^{−2s}` block of the inner expansion
//! `w = c̄ + (c̄/9) e^{−s} H₂₂ + Σ`.
//!
//! `Σ` is driven by a forcing proportional to `H₂₂²`. Each mode obeys
//! `w'_ij = λ_ij w_ij + β_ij e^{−2s}`, solved exactly in rationals.

use crate::hermite::{eigenvalue, hermite_coeffs};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeKind {
    /// Particular solution `β/(−2−λ)`.
    Constant,
    /// Resonant mode; the coefficient multiplies `s e^{−2s}`.
    Secular,
    /// Free constant of a resonant mode, fixed by a choice.
    Free,
}

impl ModeKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModeKind::Constant => "constant-mode",
            ModeKind::Secular => "secular-mode",
            ModeKind::Free => "free-mode",
        }
    }
}

/// One row; the mode coefficient is `coeff / c̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaRow {
    pub i: usize,
    pub j: usize,
    pub kind: ModeKind,
    pub coeff: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaTable {
    pub rows: Vec<SigmaRow>,
    /// Forcing amplitude `A` in `β_ij = A·⟨H₂₂², H_ij⟩/‖H_ij‖²`, times `c̄`.
    pub forcing: BigRational,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Expands an integer polynomial in the basis `h_0, h_1, …` (exact).
pub fn hermite_expand(p: &[BigInt]) -> Vec<BigInt> {
    let mut rem = p.to_vec();
    while rem.len() > 1 && rem.last().is_some_and(|c| c.is_zero()) {
        rem.pop();
    }
    let deg = rem.len() - 1;
    let mut out = vec![BigInt::zero(); deg + 1];
    for m in (0..=deg).rev() {
        let c = rem[m].clone();
        if c.is_zero() {
            continue;
        }
        let h = hermite_coeffs(m);
        for (k, hk) in h.coeffs().iter().enumerate() {
            rem[k] -= &c * hk;
        }
        out[m] = c;
    }
    out
}

fn poly_mul(p: &[BigInt], q: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); p.len() + q.len() - 1];
    for (a, x) in p.iter().enumerate() {
        for (b, y) in q.iter().enumerate() {
            out[a + b] += x * y;
        }
    }
    out
}

/// Builds the table with the forcing amplitude as printed, `A = −2/(54 c̄)`.
pub fn sigma_expansion() -> SigmaTable {
    sigma_expansion_with(rat(-2, 54))
}

/// Same derivation for an arbitrary forcing `A = forcing / c̄`.
pub fn sigma_expansion_with(forcing: BigRational) -> SigmaTable {
    let h2 = hermite_coeffs(2);
    let a = hermite_expand(&poly_mul(h2.coeffs(), h2.coeffs()));
    let minus_two = rat(-2, 1);
    let mut rows = Vec::new();
    for t in 0..=2 * (a.len() - 1) {
        for i in (0..=t).rev() {
            let j = t - i;
            if i >= a.len() || j >= a.len() {
                continue;
            }
            let weight = &a[i] * &a[j];
            let lam = eigenvalue(i, j);
            let lam = rat(*lam.numer(), *lam.denom());
            let beta = &forcing * BigRational::from_integer(weight);
            if lam == minus_two {
                if !beta.is_zero() {
                    rows.push(SigmaRow { i, j, kind: ModeKind::Secular, coeff: beta });
                    rows.push(SigmaRow { i, j, kind: ModeKind::Free, coeff: BigRational::zero() });
                }
            } else if !beta.is_zero() {
                let coeff = beta / (&minus_two - lam);
                rows.push(SigmaRow { i, j, kind: ModeKind::Constant, coeff });
            }
        }
    }
    // the free constant at (0,6)/(6,0) is the θ-direction; the profile fixes it
    for (i, j) in [(6usize, 0usize), (0, 6)] {
        if !rows.iter().any(|r| r.i == i && r.j == j) {
            rows.push(SigmaRow { i, j, kind: ModeKind::Free, coeff: BigRational::zero() });
        }
    }
    rows.sort_by_key(|r| (r.i + r.j, std::cmp::Reverse(r.i), r.kind));
    SigmaTable { rows, forcing }
}

impl SigmaTable {
    pub fn get(&self, i: usize, j: usize, kind: ModeKind) -> Option<&BigRational> {
        self.rows
            .iter()
            .find(|r| r.i == i && r.j == j && r.kind == kind)
            .map(|r| &r.coeff)
    }

    /// Pairs `(i, j)` carrying a secular row.
    pub fn resonant_pairs(&self) -> Vec<(usize, usize)> {
        self.rows
            .iter()
            .filter(|r| r.kind == ModeKind::Secular)
            .map(|r| (r.i, r.j))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .all(|r| self.get(r.j, r.i, r.kind) == Some(&r.coeff))
    }
}

pub fn one_over(n: i64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(n))
}
