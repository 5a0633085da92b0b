//! Rescaled Hermite polynomials `h_m(ξ) = H_m(ξ/2)` (physicists' convention),
//! the tensor eigenfunctions `H_ij(y) = h_i(y₁) h_j(y₂)` of
//! `𝓛 = Δ − ½ y·∇ + 1`, and mode vectors on them.
//!
//! Coefficients are exact big integers; floats only appear at evaluation.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};

/// Largest degree for which the crate promises exact coefficient tables.
pub const MAX_EXACT_DEGREE: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermitePoly {
    degree: usize,
    coeffs: Vec<BigInt>,
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `h_m(ξ) = Σ_{n ≤ m/2} m! / (n! (m−2n)!) (−1)ⁿ ξ^{m−2n}`.
pub fn hermite_coeffs(m: usize) -> HermitePoly {
    let mut coeffs = vec![BigInt::zero(); m + 1];
    let mf = factorial(m);
    for n in 0..=m / 2 {
        let mut c = &mf / (factorial(n) * factorial(m - 2 * n));
        if n % 2 == 1 {
            c = -c;
        }
        coeffs[m - 2 * n] = c;
    }
    HermitePoly { degree: m, coeffs }
}

/// Horner evaluation of `h_m` at `ξ`.
pub fn eval_hermite(m: usize, xi: f64) -> f64 {
    hermite_coeffs(m).eval(xi)
}

/// Values `h_0(ξ), …, h_n(ξ)` from the three-term recurrence
/// `h_{k+1} = ξ h_k − 2k h_{k−1}`. Used on hot paths.
pub fn hermite_table(n: usize, xi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(xi);
    for k in 1..n {
        let next = xi * out[k] - 2.0 * k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

impl HermitePoly {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Monomial coefficients, index = power of ξ.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn eval(&self, xi: f64) -> f64 {
        horner(&self.coeffs_f64(), xi)
    }

    pub fn derivative(&self) -> Vec<BigInt> {
        poly_derivative(&self.coeffs)
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn poly_derivative(p: &[BigInt]) -> Vec<BigInt> {
    if p.len() <= 1 {
        return vec![BigInt::zero()];
    }
    p.iter().enumerate().skip(1).map(|(k, c)| c * k).collect()
}

fn poly_shift(p: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero()];
    out.extend(p.iter().cloned());
    out
}

/// Dense bivariate integer polynomial, `c[a][b]` multiplies `y₁ᵃ y₂ᵇ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub c: Vec<Vec<BigInt>>,
}

impl Poly2 {
    pub fn outer(p: &[BigInt], q: &[BigInt]) -> Self {
        Poly2 {
            c: p.iter().map(|a| q.iter().map(|b| a * b).collect()).collect(),
        }
    }

    fn zero(n1: usize, n2: usize) -> Self {
        Poly2 {
            c: vec![vec![BigInt::zero(); n2]; n1],
        }
    }

    fn add_scaled(&mut self, other: &Poly2, k: &BigInt) {
        let n1 = self.c.len().max(other.c.len());
        let n2 = self
            .c
            .iter()
            .chain(other.c.iter())
            .map(|r| r.len())
            .max()
            .unwrap_or(0);
        self.c.resize(n1, Vec::new());
        for row in self.c.iter_mut() {
            row.resize(n2, BigInt::zero());
        }
        for (a, row) in other.c.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                self.c[a][b] += v * k;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().flatten().all(|v| v.is_zero())
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let rows: Vec<f64> = self
            .c
            .iter()
            .map(|row| horner(&row.iter().map(|v| v.to_f64().unwrap()).collect::<Vec<_>>(), y[1]))
            .collect();
        horner(&rows, y[0])
    }
}

/// The tensor eigenfunction `H_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorEigenfunction {
    pub i: usize,
    pub j: usize,
}

impl TensorEigenfunction {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    /// `λ_ij = 1 − (i+j)/2`.
    pub fn eigenvalue(&self) -> Rational64 {
        eigenvalue(self.i, self.j)
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        eval_hermite(self.i, y[0]) * eval_hermite(self.j, y[1])
    }

    /// `‖H_ij‖²_ρ = 2^i i! 2^j j!`.
    pub fn norm_sq(&self) -> BigInt {
        norm_sq_1d(self.i) * norm_sq_1d(self.j)
    }

    /// `2(𝓛 − λ)H_ij` as an exact integer polynomial.
    ///
    /// Uses `2h_m'' − ξh_m' + m h_m = 0` in each factor; vanishes identically.
    pub fn eigen_defect(&self) -> Poly2 {
        let hi = hermite_coeffs(self.i);
        let hj = hermite_coeffs(self.j);
        let (pi, pj) = (hi.coeffs().to_vec(), hj.coeffs().to_vec());
        let di = poly_derivative(&pi);
        let dj = poly_derivative(&pj);
        let ddi = poly_derivative(&di);
        let ddj = poly_derivative(&dj);
        let one = BigInt::one();
        let mut out = Poly2::zero(1, 1);
        out.add_scaled(&Poly2::outer(&ddi, &pj), &BigInt::from(2));
        out.add_scaled(&Poly2::outer(&pi, &ddj), &BigInt::from(2));
        out.add_scaled(&Poly2::outer(&poly_shift(&di), &pj), &-one.clone());
        out.add_scaled(&Poly2::outer(&pi, &poly_shift(&dj)), &-one);
        let shift = BigInt::from(self.i as i64 + self.j as i64);
        out.add_scaled(&Poly2::outer(&pi, &pj), &shift);
        out
    }

    /// Pointwise `𝓛H_ij − λ_ij H_ij` from the exact defect polynomial.
    pub fn eigen_residual(&self, y: [f64; 2]) -> f64 {
        0.5 * self.eigen_defect().eval(y)
    }

    /// Same residual assembled in floating point from separately evaluated
    /// derivatives. Suffers cancellation for large `|y|`.
    pub fn eigen_residual_float(&self, y: [f64; 2]) -> f64 {
        let f = |p: &[BigInt], x: f64| horner(&p.iter().map(|v| v.to_f64().unwrap()).collect::<Vec<_>>(), x);
        let hi = hermite_coeffs(self.i);
        let hj = hermite_coeffs(self.j);
        let di = hi.derivative();
        let dj = hj.derivative();
        let (a, b) = (hi.eval(y[0]), hj.eval(y[1]));
        let (da, db) = (f(&di, y[0]), f(&dj, y[1]));
        let (dda, ddb) = (f(&poly_derivative(&di), y[0]), f(&poly_derivative(&dj), y[1]));
        let lam = 1.0 - (self.i + self.j) as f64 / 2.0;
        dda * b + a * ddb - 0.5 * (y[0] * da * b + y[1] * a * db) + a * b - lam * a * b
    }
}

pub fn eigenvalue(i: usize, j: usize) -> Rational64 {
    Rational64::new(2 - (i + j) as i64, 2)
}

pub fn norm_sq_1d(n: usize) -> BigInt {
    (BigInt::one() << n) * factorial(n)
}

pub fn norm_sq_f64(i: usize, j: usize) -> f64 {
    TensorEigenfunction::new(i, j).norm_sq().to_f64().unwrap()
}

/// Coefficients `c_ij` for every `i + j ≤ cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    cap: usize,
    coeffs: Vec<f64>,
}

fn pair_index(i: usize, j: usize) -> usize {
    let t = i + j;
    t * (t + 1) / 2 + j
}

impl ModeSet {
    pub fn zeros(cap: usize) -> Self {
        Self {
            cap,
            coeffs: vec![0.0; (cap + 1) * (cap + 2) / 2],
        }
    }

    pub fn from_pairs(cap: usize, pairs: &[((usize, usize), f64)]) -> Self {
        let mut m = Self::zeros(cap);
        for &((i, j), c) in pairs {
            m.set(i, j, c);
        }
        m
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j > self.cap {
            return 0.0;
        }
        self.coeffs[pair_index(i, j)]
    }

    /// Panics if `i + j` exceeds the cap.
    pub fn set(&mut self, i: usize, j: usize, c: f64) {
        assert!(i + j <= self.cap, "mode ({i},{j}) beyond cap {}", self.cap);
        self.coeffs[pair_index(i, j)] = c;
    }

    /// `((i, j), c_ij)` ordered by total degree, then by `j`.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        (0..=self.cap).flat_map(move |t| (0..=t).map(move |j| ((t - j, j), self.get(t - j, j))))
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let a = hermite_table(self.cap, y[0]);
        let b = hermite_table(self.cap, y[1]);
        self.iter().map(|((i, j), c)| c * a[i] * b[j]).sum()
    }

    /// `Σ c_ij² ‖H_ij‖²_ρ`.
    pub fn energy(&self) -> f64 {
        self.iter().map(|((i, j), c)| c * c * norm_sq_f64(i, j)).sum()
    }
}

/// Multiplies each coefficient by its eigenvalue `λ_ij`.
pub fn apply_l_spectral(modes: &ModeSet) -> ModeSet {
    let mut out = modes.clone();
    for ((i, j), c) in modes.iter() {
        let lam = eigenvalue(i, j);
        out.set(i, j, c * (*lam.numer() as f64) / (*lam.denom() as f64));
    }
    out
}

/// Pure linear flow `ε̂'_ij = λ_ij ε̂_ij` from `s0` to `s1`.
pub fn linear_evolve(modes: &ModeSet, s0: f64, s1: f64) -> ModeSet {
    assert!(s1 >= s0, "linear_evolve needs s1 >= s0");
    let mut out = modes.clone();
    for ((i, j), c) in modes.iter() {
        let lam = 1.0 - (i + j) as f64 / 2.0;
        out.set(i, j, c * (lam * (s1 - s0)).exp());
    }
    out
}

/// `⟨𝓛f, f⟩_ρ / ⟨f, f⟩_ρ` in exact rational arithmetic.
///
/// Float coefficients are converted exactly. Returns `None` for `f = 0`.
pub fn rayleigh_quotient(modes: &ModeSet) -> Option<BigRational> {
    let mut num = BigRational::zero();
    let mut den = BigRational::zero();
    for ((i, j), c) in modes.iter() {
        if c == 0.0 {
            continue;
        }
        let c = BigRational::from_float(c)?;
        let w = &c * &c * BigRational::from_integer(norm_sq_1d(i) * norm_sq_1d(j));
        let lam = eigenvalue(i, j);
        let lam = BigRational::new(BigInt::from(*lam.numer()), BigInt::from(*lam.denom()));
        num += &w * lam;
        den += w;
    }
    if den.is_zero() {
        None
    } else {
        Some(num / den)
    }
}

/// `true` when every nonzero coefficient sits on `i + j ≥ deg`.
pub fn supported_above(modes: &ModeSet, deg: usize) -> bool {
    modes.iter().all(|((i, j), c)| c == 0.0 || i + j >= deg)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn low_degree_tables() {
        assert_eq!(hermite_coeffs(0).coeffs(), ints(&[1]).as_slice());
        assert_eq!(hermite_coeffs(2).coeffs(), ints(&[-2, 0, 1]).as_slice());
        assert_eq!(
            hermite_coeffs(6).coeffs(),
            ints(&[-120, 0, 180, 0, -30, 0, 1]).as_slice()
        );
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(eval_hermite(0, 3.7), 1.0);
        assert_eq!(eval_hermite(2, 0.0), -2.0);
        assert_eq!(eval_hermite(4, 0.0), 12.0);
    }

    #[test]
    fn degree_64_is_exact_and_monic() {
        let h = hermite_coeffs(MAX_EXACT_DEGREE);
        assert_eq!(h.coeffs()[64], BigInt::one());
        // constant term: (−1)^32 64!/32!
        assert_eq!(h.coeffs()[0], factorial(64) / factorial(32));
    }

    #[test]
    fn table_matches_closed_form() {
        let t = hermite_table(12, 1.3);
        for (m, v) in t.iter().enumerate() {
            assert!((v - eval_hermite(m, 1.3)).abs() < 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(0, 0), Rational64::new(1, 1));
        assert_eq!(eigenvalue(5, 4), Rational64::new(-7, 2));
        for t in 0..30usize {
            let lam = eigenvalue(t, 0);
            assert_eq!(lam, Rational64::new(-7, 2) + Rational64::new(9 - t as i64, 2));
        }
    }

    #[test]
    fn defect_vanishes() {
        for t in 0..=10 {
            for i in 0..=t {
                assert!(TensorEigenfunction::new(i, t - i).eigen_defect().is_zero());
            }
        }
    }

    #[test]
    fn mode_counts() {
        assert_eq!(ModeSet::zeros(8).len(), 45);
        assert_eq!(ModeSet::zeros(7).len(), 36);
    }

    #[test]
    fn spectral_l() {
        let m = ModeSet::from_pairs(9, &[((2, 2), 5.0), ((5, 4), 1.0), ((0, 0), 1.0)]);
        let l = apply_l_spectral(&m);
        assert_eq!(l.get(2, 2), -5.0);
        assert_eq!(l.get(5, 4), -3.5);
        assert_eq!(l.get(0, 0), 1.0);
    }

    #[test]
    fn evolution() {
        let m = ModeSet::from_pairs(8, &[((2, 2), 1.0), ((8, 0), 1.0)]);
        let e = linear_evolve(&m, 3.0, 3.0);
        assert_eq!(e, m);
        let e = linear_evolve(&m, 0.0, 1.0);
        assert!((e.get(2, 2) - (-1f64).exp()).abs() < 1e-15);
        let e = linear_evolve(&m, 0.0, 2f64.ln());
        assert!((e.get(8, 0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn gap_single_mode() {
        let m = ModeSet::from_pairs(10, &[((5, 4), 0.3)]);
        let q = rayleigh_quotient(&m).unwrap();
        assert_eq!(q, BigRational::new(BigInt::from(-7), BigInt::from(2)));
    }
}
