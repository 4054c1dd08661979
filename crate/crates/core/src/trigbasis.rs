//! Exact algebra on the partitioned basis `tᵏ cos βt`, `tᵏ sin βt` with
//! `t = x − a`.
//!
//! A [`TrigPoly`] stores the coefficients of a finite sum
//!
//! ```text
//! f(x) = Σ_k tᵏ [p_k cos βt + q_k sin βt],   t = x − a
//! ```
//!
//! with a complex frequency β. Classically allowed pieces have real β;
//! tunnelling pieces have purely imaginary β, in which case `cos βt` is a
//! hyperbolic cosine and the sine coefficients are purely imaginary so that
//! every value stays real.
//!
//! On this basis the operator `Ĥ = −d²/dx² − β²` (the unperturbed
//! Hamiltonian minus the energy on a piece of constant potential) lowers the
//! degree by one or two. Its matrix has only two nonzero block diagonals and
//! possesses a closed-form left inverse, which yields particular solutions of
//! resonantly forced equations without any quadrature.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Real, Tolerances};

/// 2×2 complex block acting on coefficient pairs `(p, q)` from the right.
pub type Block<T> = [[Complex<T>; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly<T> {
    anchor: T,
    frequency: Complex<T>,
    cos_coeffs: Vec<Complex<T>>,
    sin_coeffs: Vec<Complex<T>>,
}

fn check_floor<T: Real>(frequency: Complex<T>, tol: &Tolerances<T>) -> Result<()> {
    let magnitude = frequency.norm();
    if magnitude > tol.beta_min {
        Ok(())
    } else {
        Err(Error::DegenerateFrequency {
            magnitude: magnitude.to_f64_lossy(),
            floor: tol.beta_min.to_f64_lossy(),
        })
    }
}

impl<T: Real> TrigPoly<T> {
    pub fn new(
        anchor: T,
        frequency: Complex<T>,
        cos_coeffs: Vec<Complex<T>>,
        sin_coeffs: Vec<Complex<T>>,
    ) -> Result<Self> {
        if cos_coeffs.len() != sin_coeffs.len() {
            return Err(Error::Contract(format!(
                "cosine and sine coefficient sequences differ in length ({} vs {})",
                cos_coeffs.len(),
                sin_coeffs.len()
            )));
        }
        if cos_coeffs.is_empty() {
            return Err(Error::Contract("empty coefficient sequence".into()));
        }
        Ok(Self { anchor, frequency, cos_coeffs, sin_coeffs })
    }

    /// Builds from real cosine and sine coefficient lists (padded to equal length).
    pub fn from_real(anchor: T, frequency: Complex<T>, cos: &[T], sin: &[T]) -> Self {
        let n = cos.len().max(sin.len()).max(1);
        let lift = |c: &[T], k: usize| Complex::new(c.get(k).copied().unwrap_or_else(T::zero), T::zero());
        Self {
            anchor,
            frequency,
            cos_coeffs: (0..n).map(|k| lift(cos, k)).collect(),
            sin_coeffs: (0..n).map(|k| lift(sin, k)).collect(),
        }
    }

    pub fn zero(anchor: T, frequency: Complex<T>) -> Self {
        Self {
            anchor,
            frequency,
            cos_coeffs: vec![Complex::zero()],
            sin_coeffs: vec![Complex::zero()],
        }
    }

    /// Homogeneous solution with the given value and slope at the anchor:
    /// `value·cos βt + slope·sin(βt)/β`.
    pub fn homogeneous(anchor: T, frequency: Complex<T>, value: Complex<T>, slope: Complex<T>) -> Self {
        Self {
            anchor,
            frequency,
            cos_coeffs: vec![value],
            sin_coeffs: vec![slope / frequency],
        }
    }

    pub fn anchor(&self) -> T {
        self.anchor
    }

    pub fn frequency(&self) -> Complex<T> {
        self.frequency
    }

    pub fn cos_coeffs(&self) -> &[Complex<T>] {
        &self.cos_coeffs
    }

    pub fn sin_coeffs(&self) -> &[Complex<T>] {
        &self.sin_coeffs
    }

    /// Highest stored power of t.
    pub fn degree(&self) -> usize {
        self.cos_coeffs.len() - 1
    }

    /// Drops trailing coefficient pairs that are exactly zero.
    pub fn trimmed(mut self) -> Self {
        while self.cos_coeffs.len() > 1
            && self.cos_coeffs.last().is_some_and(|c| c.is_zero())
            && self.sin_coeffs.last().is_some_and(|c| c.is_zero())
        {
            self.cos_coeffs.pop();
            self.sin_coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.cos_coeffs.iter().chain(&self.sin_coeffs).all(|c| c.is_zero())
    }

    fn same_family(&self, other: &Self) -> Result<()> {
        if self.anchor != other.anchor || self.frequency != other.frequency {
            return Err(Error::Contract(format!(
                "incompatible pieces: anchor {} vs {}, frequency {} vs {}",
                self.anchor, other.anchor, self.frequency, other.frequency
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_family(other)?;
        let n = self.cos_coeffs.len().max(other.cos_coeffs.len());
        let pick = |v: &[Complex<T>], k: usize| v.get(k).copied().unwrap_or_else(Complex::zero);
        Ok(Self {
            anchor: self.anchor,
            frequency: self.frequency,
            cos_coeffs: (0..n).map(|k| pick(&self.cos_coeffs, k) + pick(&other.cos_coeffs, k)).collect(),
            sin_coeffs: (0..n).map(|k| pick(&self.sin_coeffs, k) + pick(&other.sin_coeffs, k)).collect(),
        })
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            anchor: self.anchor,
            frequency: self.frequency,
            cos_coeffs: self.cos_coeffs.iter().map(|&c| c * factor).collect(),
            sin_coeffs: self.sin_coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(Complex::new(factor, T::zero()))
    }

    /// Multiplies by a real polynomial given in powers of `t = x − anchor`.
    pub fn mul_polynomial(&self, poly: &[T]) -> Self {
        if poly.is_empty() {
            return Self::zero(self.anchor, self.frequency);
        }
        let n = self.cos_coeffs.len() + poly.len() - 1;
        let mut cos_coeffs = vec![Complex::zero(); n];
        let mut sin_coeffs = vec![Complex::zero(); n];
        for (i, (&p, &q)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            for (l, &w) in poly.iter().enumerate() {
                cos_coeffs[i + l] = cos_coeffs[i + l] + p * w;
                sin_coeffs[i + l] = sin_coeffs[i + l] + q * w;
            }
        }
        Self { anchor: self.anchor, frequency: self.frequency, cos_coeffs, sin_coeffs }
    }

    /// Coefficient-level derivative d/dx; stays in the same family.
    pub fn derivative(&self) -> Self {
        let beta = self.frequency;
        let n = self.cos_coeffs.len();
        let mut cos_coeffs = Vec::with_capacity(n);
        let mut sin_coeffs = Vec::with_capacity(n);
        for k in 0..n {
            let next = |v: &[Complex<T>]| {
                v.get(k + 1)
                    .map(|&c| c * T::from_usize_lossy(k + 1))
                    .unwrap_or_else(Complex::zero)
            };
            cos_coeffs.push(next(&self.cos_coeffs) + beta * self.sin_coeffs[k]);
            sin_coeffs.push(next(&self.sin_coeffs) - beta * self.cos_coeffs[k]);
        }
        Self { anchor: self.anchor, frequency: beta, cos_coeffs, sin_coeffs }
    }

    /// Value at the anchor (t = 0).
    pub fn value_at_anchor(&self) -> Complex<T> {
        self.cos_coeffs[0]
    }

    /// First derivative at the anchor.
    pub fn slope_at_anchor(&self) -> Complex<T> {
        let p1 = self.cos_coeffs.get(1).copied().unwrap_or_else(Complex::zero);
        p1 + self.frequency * self.sin_coeffs[0]
    }

    /// Complex value and the sum of term magnitudes (for reality checks).
    fn eval_with_scale(&self, x: T) -> (Complex<T>, T) {
        let t = x - self.anchor;
        let arg = self.frequency * t;
        let (c, s) = (arg.cos(), arg.sin());
        let (c_abs, s_abs) = (c.norm(), s.norm());
        let mut power = T::one();
        let mut value = Complex::zero();
        let mut scale = T::zero();
        for (&p, &q) in self.cos_coeffs.iter().zip(&self.sin_coeffs) {
            value = value + (p * c + q * s) * power;
            scale = scale + power.abs() * (p.norm() * c_abs + q.norm() * s_abs);
            power = power * t;
        }
        (value, scale)
    }

    pub fn eval_complex(&self, x: T) -> Complex<T> {
        self.eval_with_scale(x).0
    }

    /// Real value at `x`; fails if the imaginary residue exceeds the reality tolerance.
    pub fn eval(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        let (value, scale) = self.eval_with_scale(x);
        if value.im.abs() > tol.reality * scale + T::min_positive_value() {
            return Err(Error::Consistency(format!(
                "non-real value {value} at x = {x} (term scale {scale})"
            )));
        }
        Ok(value.re)
    }

    pub fn eval_deriv(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        self.derivative().eval(x, tol)
    }

    /// Ĥf = −f″ + (V − E) f on a piece where `local_offset = V − E = −β²`.
    pub fn apply_hamiltonian(&self, local_offset: T, tol: &Tolerances<T>) -> Result<Self> {
        check_floor(self.frequency, tol)?;
        let beta = self.frequency;
        let mismatch = (beta * beta + local_offset).norm();
        if mismatch > tol.frequency_match * local_offset.abs().max(T::one()) {
            return Err(Error::Contract(format!(
                "frequency {beta} does not satisfy β² = −(V − E) = {}",
                -local_offset
            )));
        }
        Ok(self.apply_resonant())
    }

    /// Ĥ with the offset implied by the stored frequency.
    pub(crate) fn apply_resonant(&self) -> Self {
        let beta = self.frequency;
        let n = self.cos_coeffs.len();
        let mut cos_coeffs = vec![Complex::zero(); (n - 1).max(1)];
        let mut sin_coeffs = vec![Complex::zero(); (n - 1).max(1)];
        for k in 1..n {
            let kk = T::from_usize_lossy(k);
            let two_k_beta = beta * (kk + kk);
            let (p, q) = (self.cos_coeffs[k], self.sin_coeffs[k]);
            // b_k = 2kβσ lowers the degree by one
            cos_coeffs[k - 1] = cos_coeffs[k - 1] - two_k_beta * q;
            sin_coeffs[k - 1] = sin_coeffs[k - 1] + two_k_beta * p;
            if k >= 2 {
                // c_k = −k(k−1) I lowers it by two
                let ck = kk * (kk - T::one());
                cos_coeffs[k - 2] = cos_coeffs[k - 2] - p * ck;
                sin_coeffs[k - 2] = sin_coeffs[k - 2] - q * ck;
            }
        }
        Self { anchor: self.anchor, frequency: beta, cos_coeffs, sin_coeffs }
    }

    /// Particular solution u of Ĥu = self, from the closed-form left inverse.
    ///
    /// The result has no degree-0 component, so u vanishes at the anchor.
    pub fn particular_solution(&self, tol: &Tolerances<T>) -> Result<Self> {
        check_floor(self.frequency, tol)?;
        let n = self.cos_coeffs.len();
        let mut cos_coeffs = vec![Complex::zero(); n + 1];
        let mut sin_coeffs = vec![Complex::zero(); n + 1];
        let step = -(self.frequency + self.frequency).inv();
        for m in 0..n {
            let (p, q) = (self.cos_coeffs[m], self.sin_coeffs[m]);
            if p.is_zero() && q.is_zero() {
                continue;
            }
            // (Q^L)_{m→s} = (m!/s!) (−σ/(2β))^{m+1−s}, accumulated from s = m+1 down
            let mut cur = times_sigma((p, q), step / T::from_usize_lossy(m + 1));
            cos_coeffs[m + 1] = cos_coeffs[m + 1] + cur.0;
            sin_coeffs[m + 1] = sin_coeffs[m + 1] + cur.1;
            for s in (1..=m).rev() {
                cur = times_sigma(cur, step * T::from_usize_lossy(s + 1));
                cos_coeffs[s] = cos_coeffs[s] + cur.0;
                sin_coeffs[s] = sin_coeffs[s] + cur.1;
            }
        }
        Ok(Self { anchor: self.anchor, frequency: self.frequency, cos_coeffs, sin_coeffs })
    }
}

/// Row vector `(p, q)` times `factor·σ`.
#[inline]
fn times_sigma<T: Real>((p, q): (Complex<T>, Complex<T>), factor: Complex<T>) -> (Complex<T>, Complex<T>) {
    (-q * factor, p * factor)
}

/// Matrix of Ĥ on the basis truncated at degree K, together with its
/// closed-form left inverse.
///
/// Basis element `(k, 0) = tᵏ cos βt` has index `2k`, `(k, 1) = tᵏ sin βt`
/// has index `2k + 1`. Matrices act on coefficient column vectors
/// (`out = Q · in`), so the block `b_k = 2kβσ` appears transposed at block
/// position `(k−1, k)` and `c_k = −k(k−1)I` at `(k−2, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedOperator<T> {
    frequency: Complex<T>,
    truncation: usize,
}

impl<T: Real> BandedOperator<T> {
    pub fn new(frequency: Complex<T>, truncation: usize, tol: &Tolerances<T>) -> Result<Self> {
        check_floor(frequency, tol)?;
        Ok(Self { frequency, truncation })
    }

    pub fn frequency(&self) -> Complex<T> {
        self.frequency
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        2 * (self.truncation + 1)
    }

    pub fn sigma() -> Block<T> {
        let (o, z) = (Complex::one(), Complex::zero());
        [[z, o], [-o, z]]
    }

    pub fn identity() -> Block<T> {
        let (o, z) = (Complex::one(), Complex::zero());
        [[o, z], [z, o]]
    }

    pub fn b_block(&self, k: usize) -> Block<T> {
        block_scale(Self::sigma(), self.frequency * T::from_usize_lossy(2 * k))
    }

    pub fn c_block(&self, k: usize) -> Block<T> {
        let kk = T::from_usize_lossy(k);
        block_scale(Self::identity(), Complex::new(-kk * (kk - T::one()), T::zero()))
    }

    /// Dense Q, `dim × dim`, row-major (`q[row][col]`).
    pub fn matrix(&self) -> Vec<Vec<Complex<T>>> {
        let dim = self.dim();
        let mut q = vec![vec![Complex::zero(); dim]; dim];
        for k in 1..=self.truncation {
            place_transposed(&mut q, k - 1, k, &self.b_block(k));
            if k >= 2 {
                place_transposed(&mut q, k - 2, k, &self.c_block(k));
            }
        }
        q
    }

    /// Block `(Q^L)_{m→s}` mapping right-hand-side degree m to solution degree s
    /// (row-vector convention), zero outside `1 ≤ s ≤ m + 1`.
    pub fn left_inverse_block(&self, m: usize, s: usize) -> Block<T> {
        if s == 0 || s > m + 1 {
            return [[Complex::zero(); 2]; 2];
        }
        let power = m + 2 - s;
        // m!/s! for s ≤ m, 1/(m+1) for s = m + 1
        let ratio = if s == m + 1 {
            T::one() / T::from_usize_lossy(m + 1)
        } else {
            ((s + 1)..=m).fold(T::one(), |acc, i| acc * T::from_usize_lossy(i))
        };
        let step = -(self.frequency + self.frequency).inv();
        let scalar = step.powu(power as u32) * ratio;
        let sigma_power = match power % 4 {
            0 => Self::identity(),
            1 => Self::sigma(),
            2 => block_scale(Self::identity(), -Complex::one()),
            _ => block_scale(Self::sigma(), -Complex::one()),
        };
        block_scale(sigma_power, scalar)
    }

    /// Dense closed-form left inverse on the same truncation as [`Self::matrix`].
    pub fn left_inverse(&self) -> Vec<Vec<Complex<T>>> {
        let dim = self.dim();
        let mut g = vec![vec![Complex::zero(); dim]; dim];
        for m in 0..=self.truncation {
            for s in 1..=(m + 1).min(self.truncation) {
                place_transposed(&mut g, s, m, &self.left_inverse_block(m, s));
            }
        }
        g
    }
}

fn block_scale<T: Real>(b: Block<T>, factor: Complex<T>) -> Block<T> {
    [[b[0][0] * factor, b[0][1] * factor], [b[1][0] * factor, b[1][1] * factor]]
}

fn place_transposed<T: Real>(m: &mut [Vec<Complex<T>>], row_block: usize, col_block: usize, b: &Block<T>) {
    for (i, row) in b.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[2 * row_block + j][2 * col_block + i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    type C = Complex<f64>;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn re(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn close(a: C, b: C, rel: f64) -> bool {
        (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn hamiltonian_of_x_cos_2x() {
        let f = TrigPoly::from_real(0.0, re(2.0), &[0.0, 1.0], &[]);
        let h = f.apply_hamiltonian(-4.0, &tol()).unwrap().trimmed();
        assert_eq!(h.degree(), 0);
        assert!(close(h.sin_coeffs()[0], re(4.0), 1e-15));
        assert!(close(h.cos_coeffs()[0], re(0.0), 1e-15));
    }

    #[test]
    fn hamiltonian_annihilates_homogeneous_solutions() {
        for beta in [re(1.3), C::new(0.0, 0.7)] {
            let f = TrigPoly::new(0.4, beta, vec![re(1.0)], vec![re(-2.0)]).unwrap();
            let h = f.apply_resonant();
            assert!(h.is_zero());
        }
    }

    #[test]
    fn second_listed_identity() {
        // Ĥ(βx² cos βx − x sin βx) = 4β² x sin βx at β = 1
        let f = TrigPoly::from_real(0.0, re(1.0), &[0.0, 0.0, 1.0], &[0.0, -1.0]);
        let h = f.apply_hamiltonian(-1.0, &tol()).unwrap().trimmed();
        let expected = TrigPoly::from_real(0.0, re(1.0), &[0.0, 0.0], &[0.0, 4.0]);
        assert_eq!(h.degree(), 1);
        for k in 0..2 {
            assert!(close(h.cos_coeffs()[k], expected.cos_coeffs()[k], 1e-15));
            assert!(close(h.sin_coeffs()[k], expected.sin_coeffs()[k], 1e-15));
        }
    }

    #[test]
    fn degree_drops_by_one_for_monomials() {
        for k in 1..8 {
            let mut cos = vec![0.0; k + 1];
            cos[k] = 1.0;
            let f = TrigPoly::from_real(0.0, re(1.7), &cos, &[]);
            assert_eq!(f.apply_resonant().trimmed().degree(), k - 1);
        }
    }

    #[test]
    fn offset_mismatch_is_a_contract_error() {
        let f = TrigPoly::from_real(0.0, re(2.0), &[1.0], &[]);
        assert!(matches!(f.apply_hamiltonian(-3.0, &tol()), Err(Error::Contract(_))));
    }

    #[test]
    fn degenerate_frequency_rejected() {
        let f = TrigPoly::from_real(0.0, re(1e-10), &[1.0], &[]);
        assert!(matches!(f.apply_hamiltonian(0.0, &tol()), Err(Error::DegenerateFrequency { .. })));
        assert!(matches!(f.particular_solution(&tol()), Err(Error::DegenerateFrequency { .. })));
        assert!(BandedOperator::new(re(0.0), 3, &tol()).is_err());
    }

    #[test]
    fn particular_solution_of_sin_x() {
        let rhs = TrigPoly::from_real(0.0, re(1.0), &[], &[1.0]);
        let p = rhs.particular_solution(&tol()).unwrap().trimmed();
        // (1/2) x cos x
        assert_eq!(p.degree(), 1);
        assert!(close(p.cos_coeffs()[1], re(0.5), 1e-15));
        assert!(p.cos_coeffs()[0].norm() == 0.0 && p.sin_coeffs()[1].norm() == 0.0);
    }

    #[test]
    fn particular_solution_of_zero_is_zero() {
        let rhs = TrigPoly::zero(0.3, re(1.0));
        assert!(rhs.particular_solution(&tol()).unwrap().is_zero());
    }

    #[test]
    fn particular_solution_of_x_sin() {
        let beta = 1.5;
        let rhs = TrigPoly::from_real(0.0, re(beta), &[], &[0.0, 1.0]);
        let p = rhs.particular_solution(&tol()).unwrap();
        let expected = TrigPoly::from_real(0.0, re(beta), &[0.0, 0.0, beta], &[0.0, -1.0])
            .scale_real(1.0 / (4.0 * beta * beta));
        for i in 0..=20 {
            let x = -2.0 + 0.2 * i as f64;
            assert!(close(p.eval_complex(x), expected.eval_complex(x), 1e-14));
        }
        let back = p.apply_hamiltonian(-beta * beta, &tol()).unwrap();
        for i in 0..=20 {
            let x = -2.0 + 0.2 * i as f64;
            assert!(close(back.eval_complex(x), rhs.eval_complex(x), 1e-13));
        }
        assert_eq!(p.trimmed().degree(), 2);
    }

    #[test]
    fn mul_polynomial_examples() {
        let cos_x = TrigPoly::from_real(0.0, re(1.0), &[1.0], &[]);
        assert_eq!(cos_x.mul_polynomial(&[1.0]), cos_x);
        let sin_x = TrigPoly::from_real(0.0, re(1.0), &[], &[1.0]);
        assert_eq!(sin_x.mul_polynomial(&[0.0, 1.0]), TrigPoly::from_real(0.0, re(1.0), &[0.0, 0.0], &[0.0, 1.0]));
        let x_cos = TrigPoly::from_real(0.0, re(1.0), &[0.0, 1.0], &[]);
        assert_eq!(
            x_cos.mul_polynomial(&[2.0, 3.0]),
            TrigPoly::from_real(0.0, re(1.0), &[0.0, 2.0, 3.0], &[0.0, 0.0, 0.0])
        );
    }

    #[test]
    fn eval_examples() {
        let sin_x = TrigPoly::from_real(0.0, re(1.0), &[], &[1.0]);
        assert!((sin_x.eval(FRAC_PI_2, &tol()).unwrap() - 1.0).abs() < 1e-15);
        let cosh = TrigPoly::from_real(0.0, C::new(0.0, 1.0), &[1.0], &[]);
        assert!((cosh.eval(1.0, &tol()).unwrap() - 1.0f64.cosh()).abs() < 1e-15);
        let p = TrigPoly::from_real(0.0, re(1.0), &[0.0, 0.5], &[]);
        for x in [0.0, 0.7, 2.0, PI] {
            let q = (x.cos() - x * x.sin()) / 2.0;
            assert!((p.eval_deriv(x, &tol()).unwrap() - q).abs() < 1e-15);
        }
    }

    #[test]
    fn hyperbolic_sine_is_real_with_imaginary_coefficient() {
        let beta = C::new(0.0, 2.0);
        let s = TrigPoly::homogeneous(0.0, beta, re(0.0), re(1.0));
        // sin(2ix)/(2i) = sinh(2x)/2
        assert!((s.eval(0.8, &tol()).unwrap() - (1.6f64).sinh() / 2.0).abs() < 1e-14);
        let bad = TrigPoly::from_real(0.0, beta, &[], &[1.0]);
        assert!(matches!(bad.eval(0.8, &tol()), Err(Error::Consistency(_))));
    }

    #[test]
    fn anchor_values() {
        let beta = re(1.4);
        let h = TrigPoly::homogeneous(0.5, beta, re(0.3), re(-2.0));
        assert!(close(h.value_at_anchor(), re(0.3), 1e-15));
        assert!(close(h.slope_at_anchor(), re(-2.0), 1e-15));
        assert!((h.eval_deriv(0.5, &tol()).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_pieces_do_not_add() {
        let a = TrigPoly::from_real(0.0, re(1.0), &[1.0], &[]);
        let b = TrigPoly::from_real(1.0, re(1.0), &[1.0], &[]);
        assert!(matches!(a.add(&b), Err(Error::Contract(_))));
        assert!(TrigPoly::new(0.0, re(1.0), vec![re(1.0)], vec![]).is_err());
    }

    #[test]
    fn sigma_squares_to_minus_identity() {
        let s = BandedOperator::<f64>::sigma();
        for i in 0..2 {
            for j in 0..2 {
                let v = s[i][0] * s[0][j] + s[i][1] * s[1][j];
                let expected = if i == j { -1.0 } else { 0.0 };
                assert_eq!(v, re(expected));
            }
        }
    }

    #[test]
    fn q_has_two_nonzero_block_diagonals() {
        let op = BandedOperator::new(C::new(1.2, 0.0), 6, &tol()).unwrap();
        let q = op.matrix();
        for (r, row) in q.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let (rb, cb) = (r / 2, c / 2);
                if !v.is_zero() {
                    assert!(cb == rb + 1 || cb == rb + 2, "entry at block ({rb},{cb})");
                }
            }
        }
    }

    #[test]
    fn q_matches_coefficient_action() {
        let beta = C::new(0.9, 0.0);
        let op = BandedOperator::new(beta, 5, &tol()).unwrap();
        let q = op.matrix();
        let v: Vec<C> = (0..op.dim()).map(|i| re(0.3 * i as f64 - 1.0)).collect();
        let f = TrigPoly::new(
            0.0,
            beta,
            v.iter().step_by(2).copied().collect(),
            v.iter().skip(1).step_by(2).copied().collect(),
        )
        .unwrap();
        let h = f.apply_resonant();
        for r in 0..op.dim() {
            let from_matrix: C = (0..op.dim()).map(|c| q[r][c] * v[c]).sum();
            let from_algebra = if r % 2 == 0 { h.cos_coeffs().get(r / 2) } else { h.sin_coeffs().get(r / 2) }
                .copied()
                .unwrap_or_default();
            assert!(close(from_matrix, from_algebra, 1e-14));
        }
    }

    #[test]
    fn left_inverse_blocks_match_listed_entries() {
        // listed entries, row-vector convention, with b = β
        let beta = C::new(1.3, 0.0);
        let op = BandedOperator::new(beta, 10, &tol()).unwrap();
        let two_b = beta * 2.0;
        let sigma = BandedOperator::<f64>::sigma();
        let ident = BandedOperator::<f64>::identity();
        for n in 0..5usize {
            let nf = n as f64;
            let cases: [(usize, usize, Block<f64>); 5] = [
                (n, n + 1, block_scale(sigma, -(two_b * (nf + 1.0)).inv())),
                (n + 1, n + 1, block_scale(ident, -two_b.powi(-2))),
                (n + 2, n + 1, block_scale(sigma, two_b.powi(-3) * (nf + 2.0))),
                (n + 3, n + 1, block_scale(ident, two_b.powi(-4) * ((nf + 2.0) * (nf + 3.0)))),
                (n + 4, n + 1, block_scale(sigma, -two_b.powi(-5) * ((nf + 2.0) * (nf + 3.0) * (nf + 4.0)))),
            ];
            for (m, s, expected) in cases {
                let got = op.left_inverse_block(m, s);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(close(got[i][j], expected[i][j], 1e-14), "block ({m},{s})");
                    }
                }
            }
        }
    }

    #[test]
    fn left_inverse_is_identity_on_positive_degrees() {
        for beta in [C::new(0.8, 0.0), C::new(0.0, 1.7)] {
            let op = BandedOperator::new(beta, 20, &tol()).unwrap();
            let (q, g) = (op.matrix(), op.left_inverse());
            let dim = op.dim();
            for col in 2..dim {
                for row in 0..dim {
                    let v: C = (0..dim).map(|l| g[row][l] * q[l][col]).sum();
                    let magnitude: f64 = (0..dim).map(|l| (g[row][l] * q[l][col]).norm()).sum();
                    let expected = if row == col { 1.0 } else { 0.0 };
                    assert!((v - expected).norm() < 1e-12 * magnitude.max(1.0), "({row},{col}) = {v}");
                }
            }
        }
    }

    fn arb_frequency() -> impl Strategy<Value = C> {
        (0.5f64..3.0, any::<bool>()).prop_map(|(m, hyperbolic)| if hyperbolic { C::new(0.0, m) } else { C::new(m, 0.0) })
    }

    fn arb_poly(beta: C, max_degree: usize) -> impl Strategy<Value = TrigPoly<f64>> {
        (
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..=max_degree + 1),
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..=max_degree + 1),
            -1.0f64..1.0,
        )
            .prop_map(move |(cos, sin, anchor)| {
                let n = cos.len().min(sin.len());
                TrigPoly::new(
                    anchor,
                    beta,
                    cos[..n].iter().map(|&(a, b)| C::new(a, b)).collect(),
                    sin[..n].iter().map(|&(a, b)| C::new(a, b)).collect(),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn round_trip_through_left_inverse(
            (beta, f) in arb_frequency().prop_flat_map(|b| (Just(b), arb_poly(b, 6)))
        ) {
            let u = f.particular_solution(&tol()).unwrap();
            let back = u.apply_resonant();
            for i in 0..100 {
                let x = f.anchor() - 1.5 + 3.0 * i as f64 / 99.0;
                let (a, b) = (back.eval_complex(x), f.eval_complex(x));
                let scale = f.eval_with_scale(x).1.max(1.0);
                prop_assert!((a - b).norm() <= 1e-10 * scale, "β={} x={} {} vs {}", beta, x, a, b);
            }
            prop_assert_eq!(u.degree(), f.degree() + 1);
            prop_assert!(u.value_at_anchor().norm() == 0.0);
        }

        #[test]
        fn operators_are_linear(
            (f, g) in arb_frequency().prop_flat_map(|b| (arb_poly(b, 4), arb_poly(b, 4))),
            alpha in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let g = TrigPoly::new(f.anchor(), f.frequency(), g.cos_coeffs().to_vec(), g.sin_coeffs().to_vec()).unwrap();
            let alpha = C::new(alpha.0, alpha.1);
            let combo = f.add(&g.scale(alpha)).unwrap();
            let lhs_h = combo.apply_resonant();
            let rhs_h = f.apply_resonant().add(&g.apply_resonant().scale(alpha)).unwrap();
            let lhs_p = combo.particular_solution(&tol()).unwrap();
            let rhs_p = f.particular_solution(&tol()).unwrap().add(&g.particular_solution(&tol()).unwrap().scale(alpha)).unwrap();
            for x in [-0.7, 0.1, 0.9] {
                prop_assert!(close(lhs_h.eval_complex(x), rhs_h.eval_complex(x), 1e-12));
                prop_assert!(close(lhs_p.eval_complex(x), rhs_p.eval_complex(x), 1e-12));
            }
        }

        #[test]
        fn mul_polynomial_is_pointwise_product(
            f in arb_frequency().prop_flat_map(|b| arb_poly(b, 3)),
            poly in prop::collection::vec(-2.0f64..2.0, 1..5),
        ) {
            let prod = f.mul_polynomial(&poly);
            prop_assert_eq!(prod.degree(), f.degree() + poly.len() - 1);
            for i in 0..100 {
                let x = f.anchor() - 1.0 + 2.0 * i as f64 / 99.0;
                let expected = f.eval_complex(x) * crate::poly::eval(&poly, x - f.anchor());
                let got = prod.eval_complex(x);
                let scale = prod.eval_with_scale(x).1.max(f64::MIN_POSITIVE);
                prop_assert!((got - expected).norm() <= 1e-12 * scale.max(expected.norm()));
            }
        }

        #[test]
        fn derivative_matches_finite_difference(f in arb_frequency().prop_flat_map(|b| arb_poly(b, 4))) {
            let d = f.derivative();
            let x = f.anchor() + 0.37;
            let h = 1e-5;
            let fd = (f.eval_complex(x + h) - f.eval_complex(x - h)) / (2.0 * h);
            prop_assert!(close(d.eval_complex(x), fd, 1e-6));
        }
    }
}
