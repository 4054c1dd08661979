//! Brute-force reference values: finite-difference spectra, a Taylor
//! shooting solver and first-order quadrature integrals.

use crate::error::{Error, Result};
use crate::poly;
use crate::potential::{PerturbationSpec, PotentialSpec};
use crate::quad;
use crate::scalar::Real;
use crate::zero_order::MatchedState;

/// Full potential V⁽⁰⁾ + λV⁽¹⁾ on interval i, in powers of global x.
fn total_poly<T: Real>(spec: &PotentialSpec<T>, pert: Option<&PerturbationSpec<T>>, lambda: T, i: usize) -> Vec<T> {
    let mut p = spec.zero_order_polys().map_or_else(Vec::new, |ps| ps[i].clone());
    if p.is_empty() {
        p.push(T::zero());
    }
    p[0] = p[0] + spec.heights()[i];
    if let Some(pert) = pert {
        p = poly::add(&p, &poly::scale(&pert.interval_polys()[i], lambda * pert.coupling()));
    }
    p
}

/// Three-point finite-difference Hamiltonian with Dirichlet walls.
#[derive(Clone, Debug, PartialEq)]
pub struct GridHamiltonian<T> {
    /// Number of interior nodes M.
    pub size: usize,
    pub spacing: T,
    pub diagonal: Vec<T>,
    pub off_diagonal: T,
}

impl<T: Real> GridHamiltonian<T> {
    /// Nodes x_n = L_0 + n h, n = 1..M. Each node carries the mean of the
    /// potential over its cell [x_n − h/2, x_n + h/2], so a discontinuity
    /// anywhere inside a cell still gives O(h²) convergence; a node on a
    /// breakpoint of a step gets the average of the two heights.
    pub fn new(spec: &PotentialSpec<T>, pert: Option<&PerturbationSpec<T>>, lambda: T, size: usize) -> Self {
        let h = spec.width() / T::from_usize_lossy(size + 1);
        let polys: Vec<Vec<T>> = (0..spec.interval_count()).map(|i| total_poly(spec, pert, lambda, i)).collect();
        let bps = spec.breakpoints();
        let half = h * T::lit(0.5);
        let inv_h2 = (h * h).recip();
        let diagonal = (1..=size)
            .map(|n| {
                let x = spec.left_wall() + h * T::from_usize_lossy(n);
                let (lo, hi) = (x - half, x + half);
                let first = spec.interval_of(lo.max(spec.left_wall()));
                let mut integral = T::zero();
                for (i, p) in polys.iter().enumerate().skip(first) {
                    let (a, b) = (lo.max(bps[i]), hi.min(bps[i + 1]));
                    if a >= hi {
                        break;
                    }
                    if b > a {
                        integral = integral + poly::integral(p, x, a, b);
                    }
                }
                inv_h2 + inv_h2 + integral / h
            })
            .collect();
        Self { size, spacing: h, diagonal, off_diagonal: -inv_h2 }
    }

    /// Number of eigenvalues strictly below `energy` (Sturm sequence).
    pub fn count_below(&self, energy: T) -> usize {
        let b2 = self.off_diagonal * self.off_diagonal;
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut d = T::one();
        for (i, &a) in self.diagonal.iter().enumerate() {
            d = if i == 0 { a - energy } else { a - energy - b2 / d };
            if d.is_zero() {
                d = -tiny;
            }
            if d < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// The n-th eigenvalue (0-based) by bisection to machine precision.
    pub fn eigenvalue(&self, n: usize) -> T {
        let spread = self.off_diagonal.abs() * T::lit(2.0);
        let (min_d, max_d) = self
            .diagonal
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        let (mut lo, mut hi) = (min_d - spread, max_d + spread);
        for _ in 0..200 {
            let mid = lo + (hi - lo) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > n {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo + (hi - lo) * T::lit(0.5)
    }

    /// Eigenvector at a converged eigenvalue by inverse iteration, unit
    /// discrete L² norm (Σ v² h = 1).
    pub fn eigenvector(&self, energy: T) -> Vec<T> {
        let n = self.size;
        let shift = energy - energy.abs().max(T::one()) * T::epsilon() * T::lit(64.0);
        let mut v = vec![T::one(); n];
        for _ in 0..3 {
            // Thomas algorithm for (H − shift) w = v
            let b = self.off_diagonal;
            let mut c = vec![T::zero(); n];
            let mut d = vec![T::zero(); n];
            let mut denom = self.diagonal[0] - shift;
            c[0] = b / denom;
            d[0] = v[0] / denom;
            for i in 1..n {
                denom = self.diagonal[i] - shift - b * c[i - 1];
                c[i] = b / denom;
                d[i] = (v[i] - b * d[i - 1]) / denom;
            }
            for i in (0..n - 1).rev() {
                d[i] = d[i] - c[i] * d[i + 1];
            }
            let norm = (d.iter().map(|&x| x * x).sum::<T>() * self.spacing).sqrt();
            v = d.into_iter().map(|x| x / norm).collect();
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdLevel<T> {
    pub coarse: T,
    pub fine: T,
    /// (4 E_fine − E_coarse) / 3.
    pub extrapolated: T,
    /// |E_coarse − E_fine| / 3.
    pub error_estimate: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdSpectrum<T> {
    pub levels: Vec<FdLevel<T>>,
    /// False when some requested levels were not resolved by the grid.
    pub complete: bool,
    pub coarse_size: usize,
    pub fine_size: usize,
}

/// Lowest `count` eigenvalues of V⁽⁰⁾ + λV⁽¹⁾ on grids M and 2(M+1)−1,
/// with Richardson extrapolation.
///
/// Levels whose local wavelength is not resolved (k·h > 1/2 on the coarse
/// grid) are omitted and the result is marked incomplete.
pub fn fd_eigenvalues<T: Real>(
    spec: &PotentialSpec<T>,
    pert: Option<&PerturbationSpec<T>>,
    lambda: T,
    size: usize,
    count: usize,
) -> Result<FdSpectrum<T>> {
    if size < 1000 {
        return Err(Error::Contract(format!("grid size {size} below the minimum of 1000")));
    }
    let fine_size = 2 * (size + 1) - 1;
    let coarse = GridHamiltonian::new(spec, pert, lambda, size);
    let fine = GridHamiltonian::new(spec, pert, lambda, fine_size);
    let floor = coarse.diagonal.iter().copied().fold(T::infinity(), T::min) + coarse.off_diagonal * T::lit(2.0);
    let mut levels = Vec::with_capacity(count);
    for n in 0..count {
        let ec = coarse.eigenvalue(n);
        if (ec - floor).max(T::zero()).sqrt() * coarse.spacing > T::lit(0.5) {
            break;
        }
        let ef = fine.eigenvalue(n);
        let three = T::lit(3.0);
        levels.push(FdLevel {
            coarse: ec,
            fine: ef,
            extrapolated: (T::lit(4.0) * ef - ec) / three,
            error_estimate: (ec - ef).abs() / three,
        });
    }
    Ok(FdSpectrum { complete: levels.len() == count, levels, coarse_size: size, fine_size })
}

/// Largest distance of a breakpoint from its nearest node on the grid with
/// `size` interior points, in units of the spacing.
pub fn grid_misalignment<T: Real>(spec: &PotentialSpec<T>, size: usize) -> T {
    let h = spec.width() / T::from_usize_lossy(size + 1);
    spec.breakpoints()
        .iter()
        .map(|&b| {
            let r = (b - spec.left_wall()) / h;
            (r - r.round()).abs()
        })
        .fold(T::zero(), T::max)
}

/// Smallest M ≥ `minimum` (searching up to 4·minimum) that places every
/// breakpoint closest to a grid node.
pub fn aligned_grid_size<T: Real>(spec: &PotentialSpec<T>, minimum: usize) -> usize {
    let misalignment = |m: usize| grid_misalignment(spec, m);
    let mut best = (minimum, misalignment(minimum));
    for m in minimum..=4 * minimum {
        let mis = misalignment(m);
        if mis < T::lit(1e-9) {
            return m;
        }
        if mis < best.1 {
            best = (m, mis);
        }
    }
    best.0
}

/// ψ(R) and ψ′(R) for ψ(L_0) = 0, ψ′(L_0) = 1 by Taylor stepping.
fn shoot<T: Real>(polys: &[Vec<T>], spec: &PotentialSpec<T>, energy: T) -> (T, T) {
    let bps = spec.breakpoints();
    let (mut psi, mut dpsi) = (T::zero(), T::one());
    let order = 40;
    for (i, p) in polys.iter().enumerate() {
        let (a, b) = (bps[i], bps[i + 1]);
        let vmax = poly::eval(p, a).abs().max(poly::eval(p, b).abs()) + energy.abs();
        let h_max = T::lit(0.5) / (vmax.sqrt() + T::one());
        let steps = ((b - a) / h_max).ceil().to_usize().unwrap_or(1).max(1);
        let h = (b - a) / T::from_usize_lossy(steps);
        for s in 0..steps {
            let x0 = a + h * T::from_usize_lossy(s);
            let w = poly::shift(p, x0);
            let mut c = vec![T::zero(); order + 1];
            c[0] = psi;
            c[1] = dpsi;
            for n in 0..order - 1 {
                let forcing: T = w.iter().enumerate().take(n + 1).map(|(l, &wl)| wl * c[n - l]).sum::<T>() - energy * c[n];
                c[n + 2] = forcing / T::from_usize_lossy((n + 2) * (n + 1));
            }
            psi = poly::eval(&c, h);
            dpsi = c.iter().enumerate().skip(1).rev().fold(T::zero(), |acc, (n, &cn)| acc * h + cn * T::from_usize_lossy(n));
        }
    }
    (psi, dpsi)
}

/// Eigenvalue of V⁽⁰⁾ + λV⁽¹⁾ near `seed` by Taylor shooting, refined to
/// machine precision. The bracket grows from `seed ± width` until ψ(R)
/// changes sign.
pub fn shooting_eigenvalue<T: Real>(
    spec: &PotentialSpec<T>,
    pert: Option<&PerturbationSpec<T>>,
    lambda: T,
    seed: T,
    width: T,
) -> Result<T> {
    let polys: Vec<Vec<T>> = (0..spec.interval_count()).map(|i| total_poly(spec, pert, lambda, i)).collect();
    let f = |e: T| shoot(&polys, spec, e).0;
    let mut half = width;
    let (mut lo, mut hi) = (seed - half, seed + half);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    let mut tries = 0;
    while f_lo.signum() == f_hi.signum() {
        tries += 1;
        if tries > 20 {
            return Err(Error::NoRoot(format!("no shooting bracket around {seed}")));
        }
        half = half * T::lit(2.0);
        (lo, hi) = (seed - half, seed + half);
        (f_lo, f_hi) = (f(lo), f(hi));
    }
    for _ in 0..300 {
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.is_zero() {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) * T::lit(0.5))
}

/// ⟨ψ⁽⁰⁾|V⁽¹⁾|ψ⁽⁰⁾⟩ / ⟨ψ⁽⁰⁾|ψ⁽⁰⁾⟩ by adaptive quadrature, interval by interval.
pub fn rs_first_order<T: Real>(state: &MatchedState<T>, pert: &PerturbationSpec<T>) -> Result<T> {
    let spec = state.spec();
    pert.check_against(spec)?;
    let tol = crate::scalar::Tolerances::default();
    let bps = spec.breakpoints();
    let qtol = T::lit(1e-13).max(T::epsilon() * T::lit(100.0));
    let mut num = T::zero();
    let mut den = T::zero();
    for i in 0..spec.interval_count() {
        let k = state.covering_domain(i);
        let (c, d) = state.coeffs[k];
        let basis = &state.bases[k];
        let psi = |x: T| basis.combine(c, d, x, &tol).unwrap_or_else(|_| T::nan());
        num = num + quad::integrate(|x| psi(x) * psi(x) * pert.value_on(i, x), bps[i], bps[i + 1], qtol);
        den = den + quad::integrate(|x| psi(x) * psi(x), bps[i], bps[i + 1], qtol);
    }
    let value = num / den;
    if !value.is_finite() {
        return Err(Error::Consistency("non-finite first-order integral".into()));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zero_order::{match_coefficients, ZeroOrderOptions};
    use std::f64::consts::PI;

    fn box_spec() -> PotentialSpec<f64> {
        PotentialSpec::new(vec![0.0, PI], vec![0.0]).unwrap()
    }

    #[test]
    fn box_ground_state_within_estimate() {
        let fd = fd_eigenvalues(&box_spec(), None, 0.0, 4000, 3).unwrap();
        for (n, l) in fd.levels.iter().enumerate() {
            let exact = ((n + 1) * (n + 1)) as f64;
            assert!((l.extrapolated - exact).abs() <= l.error_estimate.max(1e-9), "{l:?}");
        }
    }

    #[test]
    fn constant_shift_is_exact_on_grid() {
        let spec = box_spec();
        let pert = PerturbationSpec::global(vec![0.7], &spec).unwrap();
        let a = fd_eigenvalues(&spec, None, 0.0, 2000, 1).unwrap();
        let b = fd_eigenvalues(&spec, Some(&pert), 0.3, 2000, 1).unwrap();
        let diff = b.levels[0].extrapolated - a.levels[0].extrapolated;
        assert!((diff - 0.21).abs() <= 1e-9 + b.levels[0].error_estimate);
    }

    #[test]
    fn grid_convergence_is_second_order() {
        let spec = box_spec();
        let e1 = |m| -> f64 { GridHamiltonian::new(&spec, None, 0.0, m).eigenvalue(0) - 1.0 };
        let (a, b) = (e1(1999), e1(3999));
        assert!((a / b - 4.0).abs() < 0.01, "{}", a / b);
        let fd = fd_eigenvalues(&spec, None, 0.0, 1999, 1).unwrap();
        assert!((fd.levels[0].extrapolated - 1.0).abs() < 1e-3 * a.abs());
    }

    #[test]
    fn small_grids_are_rejected() {
        assert!(fd_eigenvalues(&box_spec(), None, 0.0, 500, 1).is_err());
    }

    #[test]
    fn unresolved_levels_make_partial_result() {
        let fd = fd_eigenvalues(&box_spec(), None, 0.0, 1000, 2000).unwrap();
        assert!(!fd.complete);
        assert!(!fd.levels.is_empty());
    }

    #[test]
    fn alignment_finds_multiples() {
        let spec = PotentialSpec::new(vec![0.0, 1.0, 2.5], vec![0.0, 1.0]).unwrap();
        let m = aligned_grid_size(&spec, 1000);
        assert_eq!((m + 1) % 5, 0);
    }

    #[test]
    fn shooting_reproduces_step_root() {
        let spec = PotentialSpec::<f64>::new(vec![0.0, 1.0, 2.0], vec![0.0, 5.0]).unwrap();
        let e = shooting_eigenvalue(&spec, None, 0.0, 4.37, 0.05).unwrap();
        assert!((e - 4.375151245875668).abs() < 1e-12, "{e}");
    }

    #[test]
    fn shooting_on_box() {
        let e = shooting_eigenvalue(&box_spec(), None, 0.0, 4.1, 0.2).unwrap();
        assert!((e - 4.0).abs() < 1e-13);
    }

    #[test]
    fn first_order_integrals_on_the_box() {
        let spec = box_spec();
        let st = match_coefficients(&spec, 1.0, &ZeroOrderOptions::default()).unwrap();
        let omega = PerturbationSpec::global(vec![0.3], &spec).unwrap();
        assert!((rs_first_order(&st, &omega).unwrap() - 0.3).abs() < 1e-12);
        let linear = PerturbationSpec::global(vec![0.0, 1.0], &spec).unwrap();
        assert!((rs_first_order(&st, &linear).unwrap() - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvector_is_box_sine() {
        let g = GridHamiltonian::new(&box_spec(), None, 0.0, 1999);
        let e = g.eigenvalue(0);
        let v = g.eigenvector(e);
        let sign = v[1000].signum();
        let amp = (2.0 / PI).sqrt();
        for n in [100, 700, 1500] {
            let x = g.spacing * (n + 1) as f64;
            assert!((sign * v[n] - amp * x.sin()).abs() < 1e-5);
        }
    }
}
