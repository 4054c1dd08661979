//! Dense real polynomials stored by ascending degree.

use crate::scalar::Real;

/// Horner evaluation of Σ c_k x^k.
pub fn eval<T: Real>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// Re-expands Σ c_k x^k in powers of (x − origin).
pub fn shift<T: Real>(coeffs: &[T], origin: T) -> Vec<T> {
    // repeated synthetic division by (x - origin)
    let mut out = coeffs.to_vec();
    let n = out.len();
    for i in 0..n {
        for k in (i..n.saturating_sub(1)).rev() {
            let carry = out[k + 1] * origin;
            out[k] = out[k] + carry;
        }
    }
    out
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_else(T::zero) + b.get(k).copied().unwrap_or_else(T::zero))
        .collect()
}

pub fn scale<T: Real>(a: &[T], factor: T) -> Vec<T> {
    a.iter().map(|&c| c * factor).collect()
}

/// Degree ignoring trailing zeros; the zero polynomial has degree 0.
pub fn degree<T: Real>(coeffs: &[T]) -> usize {
    coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

/// ∫_a^b Σ c_k x^k dx, evaluated in powers of (x − origin) to limit cancellation
/// on short intervals.
pub fn integral<T: Real>(coeffs: &[T], origin: T, a: T, b: T) -> T {
    let (ta, tb) = (a - origin, b - origin);
    shift(coeffs, origin)
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (tb.powi(k as i32 + 1) - ta.powi(k as i32 + 1)) / T::from_usize_lossy(k + 1))
        .sum()
}

pub fn is_zero<T: Real>(coeffs: &[T]) -> bool {
    coeffs.iter().all(|c| c.is_zero())
}
