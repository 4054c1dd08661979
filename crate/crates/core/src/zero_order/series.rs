//! Power-series local solutions for piecewise-polynomial zero-order potentials.

use crate::error::{Error, Result};
use crate::poly;
use crate::potential::PotentialSpec;
use crate::scalar::{Real, Tolerances};

use super::{DomainBasis, DomainFunction, Piece};

/// Truncated Taylor series Σ h_n (x − anchor)ⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorPiece<T> {
    pub anchor: T,
    pub coeffs: Vec<T>,
}

impl<T: Real> TaylorPiece<T> {
    /// Solves h″ = (W − E) h from the given value and slope at the anchor,
    /// W given in powers of (x − anchor).
    pub fn solve(anchor: T, local_potential: &[T], energy: T, value: T, slope: T, order: usize) -> Self {
        let mut h = vec![T::zero(); order + 1];
        h[0] = value;
        if order >= 1 {
            h[1] = slope;
        }
        for n in 0..order.saturating_sub(1) {
            // (n+2)(n+1) h_{n+2} = Σ_l w_l h_{n−l} − E h_n
            let forcing: T = local_potential
                .iter()
                .enumerate()
                .take(n + 1)
                .map(|(l, &w)| w * h[n - l])
                .sum::<T>()
                - energy * h[n];
            h[n + 2] = forcing / T::from_usize_lossy((n + 2) * (n + 1));
        }
        Self { anchor, coeffs: h }
    }

    pub fn value(&self, x: T) -> T {
        poly::eval(&self.coeffs, x - self.anchor)
    }

    pub fn slope(&self, x: T) -> T {
        let t = x - self.anchor;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(T::zero(), |acc, (n, &c)| acc * t + c * T::from_usize_lossy(n))
    }
}

pub(crate) fn minimum_order<T: Real>(spec: &PotentialSpec<T>, j: usize) -> usize {
    let domains = spec.domains();
    let Some(d) = domains.get(j.wrapping_sub(1)) else { return 4 };
    let p = [d.left_interval, d.right_interval]
        .iter()
        .map(|&i| poly::degree(&spec.local_expansion(i, d.anchor)))
        .max()
        .unwrap_or(0);
    2 * (p + 2)
}

/// Series basis on domain j (1-based) truncated at order M, accepted only if
/// the boundary data agree with order M + 10 to 1e-10.
pub fn series_local_basis<T: Real>(
    spec: &PotentialSpec<T>,
    energy: T,
    j: usize,
    order: usize,
    tol: &Tolerances<T>,
) -> Result<DomainBasis<T>> {
    let domains = spec.domains();
    if j == 0 || j > domains.len() {
        return Err(Error::Contract(format!("domain index {j} outside 1..={}", domains.len())));
    }
    let min = minimum_order(spec, j);
    if order < min {
        return Err(Error::Truncation { order, residual: f64::INFINITY });
    }
    let d = domains[j - 1];
    let w_left = spec.local_expansion(d.left_interval, d.anchor);
    let w_right = spec.local_expansion(d.right_interval, d.anchor);
    let build = |m: usize, value: T, slope: T| DomainFunction {
        domain: d,
        left: Piece::Series(TaylorPiece::solve(d.anchor, &w_left, energy, value, slope, m)),
        right: Piece::Series(TaylorPiece::solve(d.anchor, &w_right, energy, value, slope, m)),
    };
    let (one, zero) = (T::one(), T::zero());
    let coarse = [build(order, one, zero), build(order, zero, one)];
    let fine = [build(order + 10, one, zero), build(order + 10, zero, one)];
    let mut residual = T::zero();
    for (a, b) in coarse.iter().zip(&fine) {
        for x in [d.left_end, d.right_end] {
            for (u, v) in [(a.value(x, tol)?, b.value(x, tol)?), (a.slope(x, tol)?, b.slope(x, tol)?)] {
                residual = residual.max((u - v).abs() / v.abs().max(T::one()));
            }
        }
    }
    if !(residual <= T::lit(1e-10)) {
        return Err(Error::Truncation { order, residual: residual.to_f64_lossy() });
    }
    let [c, s] = fine;
    DomainBasis::assemble(d, c, s, tol)
}

#[cfg(test)]
mod tests {
    use super::super::build_domain_basis;
    use super::*;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    #[test]
    fn constant_pieces_agree_with_closed_form() {
        let spec = PotentialSpec::new(vec![0.0, 1.0, 2.0], vec![0.0, 5.0]).unwrap();
        for e in [2.0, 4.4, 9.0] {
            let closed = build_domain_basis(&spec, e, 1, &tol()).unwrap();
            let series = series_local_basis(&spec, e, 1, 60, &tol()).unwrap();
            let (a, b) = (closed.boundary, series.boundary);
            for (u, v) in [(a.c_left, b.c_left), (a.s_left, b.s_left), (a.c_right, b.c_right), (a.s_right, b.s_right)] {
                assert!((u - v).abs() < 1e-10, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn linear_potential_matches_airy_values() {
        // V = x on (0, 1), E = 0: C = π(Bi'(0)Ai(x) − Ai'(0)Bi(x)), S = π(Bi(0)Ai(x) − Ai(0)Bi(x)) up to sign
        let spec = PotentialSpec::new(vec![0.0, 1.0], vec![0.0])
            .unwrap()
            .with_zero_order_polys(vec![vec![0.0, 1.0]])
            .unwrap();
        let b = series_local_basis(&spec, 0.0, 1, 40, &tol()).unwrap();
        // Ai(0), Ai'(0), Bi(0), Bi'(0), Ai(1), Bi(1)
        let (ai0, aip0, bi0, bip0) = (0.355_028_053_887_817_2, -0.258_819_403_792_806_8, 0.614_926_627_446_000_7, 0.448_288_357_353_826_4);
        let (ai1, bi1) = (0.135_292_416_312_881_4, 1.207_423_594_952_871_3);
        let w = ai0 * bip0 - aip0 * bi0;
        let c1 = (bip0 * ai1 - aip0 * bi1) / w;
        let s1 = (ai0 * bi1 - bi0 * ai1) / w;
        assert!((b.boundary.c_right - c1).abs() < 1e-12, "{} vs {c1}", b.boundary.c_right);
        assert!((b.boundary.s_right - s1).abs() < 1e-12, "{} vs {s1}", b.boundary.s_right);
    }

    #[test]
    fn order_below_minimum_is_truncation() {
        let spec = PotentialSpec::new(vec![0.0, 1.0], vec![0.0])
            .unwrap()
            .with_zero_order_polys(vec![vec![0.0, 0.0, 1.0]])
            .unwrap();
        assert!(matches!(series_local_basis(&spec, 1.0, 1, 5, &tol()), Err(Error::Truncation { .. })));
    }

    #[test]
    fn unconverged_order_is_truncation() {
        let spec = PotentialSpec::new(vec![0.0, 10.0], vec![0.0]).unwrap();
        assert!(matches!(series_local_basis(&spec, 50.0, 1, 10, &tol()), Err(Error::Truncation { .. })));
    }

    #[test]
    fn wronskian_is_one() {
        let spec = PotentialSpec::new(vec![-1.0, 0.5, 2.0], vec![1.0, -2.0])
            .unwrap()
            .with_zero_order_polys(vec![vec![0.0, 0.5, 0.2], vec![1.0, -1.0]])
            .unwrap();
        let b = series_local_basis(&spec, 3.0, 1, 80, &tol()).unwrap();
        for i in 0..20 {
            let x = -1.0 + 3.0 * i as f64 / 19.0;
            assert!((b.wronskian(x, &tol()).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
