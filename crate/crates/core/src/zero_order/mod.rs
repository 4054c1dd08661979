//! Zero-order problem: local cosine/sine-like bases on overlapping domains,
//! the homogeneous matching system and its null vectors.

mod roots;
mod series;

pub use roots::{find_eigenvalues, RootScan, SkippedEnergy};
pub use series::{series_local_basis, TaylorPiece};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::potential::{Domain, PotentialSpec};
use crate::quad;
use crate::scalar::{Real, Tolerances};
use crate::trigbasis::TrigPoly;

/// How local solutions are represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Closed form when the zero-order potential is piecewise constant,
    /// power series otherwise.
    Auto,
    ClosedForm,
    Series { initial_order: usize, max_order: usize },
}

impl Backend {
    pub const DEFAULT_SERIES: Backend = Backend::Series { initial_order: 60, max_order: 600 };

    fn resolve<T: Real>(self, spec: &PotentialSpec<T>) -> Backend {
        match self {
            Backend::Auto if spec.has_polynomial_zero_order() => Self::DEFAULT_SERIES,
            Backend::Auto => Backend::ClosedForm,
            other => other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroOrderOptions<T> {
    pub backend: Backend,
    pub tol: Tolerances<T>,
    /// Root-scan step as a fraction of the k window.
    pub scan_step: T,
    /// Pivot ratio below which a matching pivot counts as zero.
    pub rank_tol: T,
}

impl<T: Real> Default for ZeroOrderOptions<T> {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            tol: Tolerances::default(),
            scan_step: T::lit(0.002),
            rank_tol: T::lit(1e-7).max(T::epsilon() * T::lit(1e3)),
        }
    }
}

/// One side of a local solution.
#[derive(Clone, Debug, PartialEq)]
pub enum Piece<T> {
    Trig(TrigPoly<T>),
    Series(TaylorPiece<T>),
}

impl<T: Real> Piece<T> {
    pub fn value(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        match self {
            Piece::Trig(p) => p.eval(x, tol),
            Piece::Series(p) => Ok(p.value(x)),
        }
    }

    pub fn slope(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        match self {
            Piece::Trig(p) => p.eval_deriv(x, tol),
            Piece::Series(p) => Ok(p.slope(x)),
        }
    }

    pub fn as_trig(&self) -> Option<&TrigPoly<T>> {
        match self {
            Piece::Trig(p) => Some(p),
            Piece::Series(_) => None,
        }
    }
}

/// Function on a domain given by a left and a right piece joined at the anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainFunction<T> {
    pub domain: Domain<T>,
    pub left: Piece<T>,
    pub right: Piece<T>,
}

impl<T: Real> DomainFunction<T> {
    fn piece(&self, x: T) -> &Piece<T> {
        if x < self.domain.anchor {
            &self.left
        } else {
            &self.right
        }
    }

    pub fn value(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        self.piece(x).value(x, tol)
    }

    pub fn slope(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        self.piece(x).slope(x, tol)
    }

    /// Value and slope of the left piece evaluated at the anchor.
    pub fn left_limit(&self, tol: &Tolerances<T>) -> Result<(T, T)> {
        let a = self.domain.anchor;
        Ok((self.left.value(a, tol)?, self.left.slope(a, tol)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryValues<T> {
    pub c_left: T,
    pub s_left: T,
    pub c_right: T,
    pub s_right: T,
}

/// Cosine-like C_j and sine-like S_j solutions on domain J_j.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBasis<T> {
    pub domain: Domain<T>,
    pub c: DomainFunction<T>,
    pub s: DomainFunction<T>,
    pub boundary: BoundaryValues<T>,
}

impl<T: Real> DomainBasis<T> {
    fn assemble(domain: Domain<T>, c: DomainFunction<T>, s: DomainFunction<T>, tol: &Tolerances<T>) -> Result<Self> {
        let boundary = BoundaryValues {
            c_left: c.value(domain.left_end, tol)?,
            s_left: s.value(domain.left_end, tol)?,
            c_right: c.value(domain.right_end, tol)?,
            s_right: s.value(domain.right_end, tol)?,
        };
        Ok(Self { domain, c, s, boundary })
    }

    pub fn index(&self) -> usize {
        self.domain.index
    }

    /// C S′ − C′ S at x.
    pub fn wronskian(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        Ok(self.c.value(x, tol)? * self.s.slope(x, tol)? - self.c.slope(x, tol)? * self.s.value(x, tol)?)
    }

    /// c·C + d·S at x.
    pub fn combine(&self, c: T, d: T, x: T, tol: &Tolerances<T>) -> Result<T> {
        Ok(c * self.c.value(x, tol)? + d * self.s.value(x, tol)?)
    }

    pub fn combine_slope(&self, c: T, d: T, x: T, tol: &Tolerances<T>) -> Result<T> {
        Ok(c * self.c.slope(x, tol)? + d * self.s.slope(x, tol)?)
    }
}

fn domain(spec_domains: &[Domain<impl Real>], j: usize) -> Result<usize> {
    if j == 0 || j > spec_domains.len() {
        return Err(Error::Contract(format!("domain index {j} outside 1..={}", spec_domains.len())));
    }
    Ok(j - 1)
}

/// Closed-form basis on domain j (1-based) for a piecewise-constant potential.
pub fn build_domain_basis<T: Real>(spec: &PotentialSpec<T>, energy: T, j: usize, tol: &Tolerances<T>) -> Result<DomainBasis<T>> {
    if spec.has_polynomial_zero_order() {
        return Err(Error::Contract(
            "closed-form basis needs a piecewise-constant potential; use the series backend".into(),
        ));
    }
    let domains = spec.domains();
    let d = domains[domain(&domains, j)?];
    let beta_left = spec.local_offset(d.left_interval, energy, tol)?;
    let beta_right = spec.local_offset(d.right_interval, energy, tol)?;
    let (one, zero) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
    let make = |value, slope| DomainFunction {
        domain: d,
        left: Piece::Trig(TrigPoly::homogeneous(d.anchor, beta_left, value, slope)),
        right: Piece::Trig(TrigPoly::homogeneous(d.anchor, beta_right, value, slope)),
    };
    DomainBasis::assemble(d, make(one, zero), make(zero, one), tol)
}

fn basis_with<T: Real>(spec: &PotentialSpec<T>, energy: T, j: usize, opts: &ZeroOrderOptions<T>) -> Result<DomainBasis<T>> {
    match opts.backend.resolve(spec) {
        Backend::ClosedForm | Backend::Auto => build_domain_basis(spec, energy, j, &opts.tol),
        Backend::Series { initial_order, max_order } => {
            let mut order = initial_order.max(series::minimum_order(spec, j));
            loop {
                match series_local_basis(spec, energy, j, order, &opts.tol) {
                    Err(Error::Truncation { .. }) if order + 10 <= max_order => order += 10,
                    other => return other,
                }
            }
        }
    }
}

/// Bases for all domains at the given energy.
pub fn domain_bases<T: Real>(spec: &PotentialSpec<T>, energy: T, opts: &ZeroOrderOptions<T>) -> Result<Vec<DomainBasis<T>>> {
    (1..=spec.domains().len()).map(|j| basis_with(spec, energy, j, opts)).collect()
}

fn matrix_from_bases<T: Real>(bases: &[DomainBasis<T>]) -> Matrix<T> {
    let n = bases.len();
    let mut a = Matrix::zeros(2 * n, 2 * n);
    for (idx, b) in bases.iter().enumerate() {
        let (row_l, row_r) = (2 * idx, 2 * idx + 1);
        a[(row_l, 2 * idx)] = b.boundary.c_left;
        a[(row_l, 2 * idx + 1)] = b.boundary.s_left;
        a[(row_r, 2 * idx)] = b.boundary.c_right;
        a[(row_r, 2 * idx + 1)] = b.boundary.s_right;
        if idx > 0 {
            a[(row_l, 2 * (idx - 1))] = -T::one();
        }
        if idx + 1 < n {
            a[(row_r, 2 * (idx + 1))] = -T::one();
        }
    }
    a
}

/// The 2N×2N matching matrix; unknowns (c1, d1, …, cN, dN), rows (domain 1 left, domain 1 right, …).
pub fn matching_matrix<T: Real>(spec: &PotentialSpec<T>, energy: T, opts: &ZeroOrderOptions<T>) -> Result<Matrix<T>> {
    if spec.interior_count() == 0 {
        return Err(Error::Contract("matching matrix needs at least one interior breakpoint".into()));
    }
    Ok(matrix_from_bases(&domain_bases(spec, energy, opts)?))
}

/// Determinant of the matching matrix, or S(L_1) from the left wall when N = 0.
pub fn secular_determinant<T: Real>(spec: &PotentialSpec<T>, energy: T, opts: &ZeroOrderOptions<T>) -> Result<T> {
    let bases = domain_bases(spec, energy, opts)?;
    if spec.interior_count() == 0 {
        return Ok(bases[0].boundary.s_right);
    }
    matrix_from_bases(&bases).determinant()
}

/// Matched zero-order eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchedState<T> {
    pub energy: T,
    /// (c(j), d(j)) for j = 1..N; a single (0, 1) pair when N = 0.
    pub coeffs: Vec<(T, T)>,
    pub bases: Vec<DomainBasis<T>>,
    /// L² norm of ψ⁽⁰⁾ over the box for the unit coefficient vector.
    pub l2_norm: T,
    /// Largest relative matching-row residual.
    pub residual: T,
    spec: PotentialSpec<T>,
}

impl<T: Real> MatchedState<T> {
    pub fn spec(&self) -> &PotentialSpec<T> {
        &self.spec
    }

    /// Domain (0-based) whose representation covers the given interval.
    pub fn covering_domain(&self, interval: usize) -> usize {
        interval.saturating_sub(1).min(self.bases.len() - 1)
    }

    pub fn value(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        let k = self.covering_domain(self.spec.interval_of(x));
        let (c, d) = self.coeffs[k];
        self.bases[k].combine(c, d, x, tol)
    }

    pub fn slope(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        let k = self.covering_domain(self.spec.interval_of(x));
        let (c, d) = self.coeffs[k];
        self.bases[k].combine_slope(c, d, x, tol)
    }

    /// Largest disagreement of value and slope between adjacent domains at
    /// the breakpoints they share, relative to the state's scale.
    pub fn overlap_mismatch(&self, tol: &Tolerances<T>) -> Result<T> {
        let scale = self.derivative_scale();
        let mut worst = T::zero();
        for k in 0..self.bases.len().saturating_sub(1) {
            let (a, b) = (&self.bases[k], &self.bases[k + 1]);
            let (ca, da) = self.coeffs[k];
            let (cb, db) = self.coeffs[k + 1];
            for x in [a.domain.anchor, b.domain.anchor] {
                let dv = a.combine(ca, da, x, tol)? - b.combine(cb, db, x, tol)?;
                let ds = a.combine_slope(ca, da, x, tol)? - b.combine_slope(cb, db, x, tol)?;
                worst = worst.max(dv.abs().max(ds.abs()) / scale);
            }
        }
        Ok(worst)
    }

    fn derivative_scale(&self) -> T {
        let k = (self.energy - self.spec.min_height()).abs().sqrt() + T::one();
        self.coeffs.iter().fold(T::zero(), |acc, &(c, d)| acc.max((c * k).abs()).max(d.abs())).max(T::min_positive_value())
    }
}

fn l2_norm<T: Real>(spec: &PotentialSpec<T>, bases: &[DomainBasis<T>], coeffs: &[(T, T)], tol: &Tolerances<T>) -> T {
    let bps = spec.breakpoints();
    let mut total = T::zero();
    for i in 0..spec.interval_count() {
        let k = i.saturating_sub(1).min(bases.len() - 1);
        let (c, d) = coeffs[k];
        total = total
            + quad::integrate(
                |x| bases[k].combine(c, d, x, tol).map_or(T::nan(), |v| v * v),
                bps[i],
                bps[i + 1],
                T::lit(1e-12).max(T::epsilon() * T::lit(100.0)),
            );
    }
    total.sqrt()
}

/// Null vector of the matching system at an eigenvalue.
pub fn match_coefficients<T: Real>(spec: &PotentialSpec<T>, energy: T, opts: &ZeroOrderOptions<T>) -> Result<MatchedState<T>> {
    let tol = &opts.tol;
    let bases = domain_bases(spec, energy, opts)?;
    let (coeffs, residual) = if spec.interior_count() == 0 {
        let b = &bases[0];
        let scale = (b.boundary.s_right.abs() + b.s.slope(b.domain.right_end, tol)?.abs() * spec.width())
            .max(T::min_positive_value());
        (vec![(T::zero(), T::one())], b.boundary.s_right.abs() / scale)
    } else {
        let a = matrix_from_bases(&bases);
        let nv = a.null_vector(opts.rank_tol).map_err(|e| match e {
            Error::NullSpace { dimension, .. } => Error::NullSpace { dimension, energy: energy.to_f64_lossy() },
            other => other,
        })?;
        let x = nv.vector;
        let mut residual = T::zero();
        for i in 0..a.rows() {
            let row = a.row(i);
            let r: T = row.iter().zip(&x).map(|(&u, &v)| u * v).sum();
            let xmax = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let s = row.iter().fold(T::zero(), |m, u| m.max(u.abs())) * xmax;
            residual = residual.max(r.abs() / s.max(T::min_positive_value()));
        }
        (x.chunks(2).map(|p| (p[0], p[1])).collect::<Vec<_>>(), residual)
    };
    if residual > tol.matching_residual {
        return Err(Error::Contract(format!(
            "E = {energy} is not a matching root (relative residual {residual:e})"
        )));
    }
    for (j, &(c, d)) in coeffs.iter().enumerate() {
        let size = c.abs().max(d.abs());
        if (c + d).abs() <= tol.matching_residual * size {
            return Err(Error::NormalizationObstruction { domain: j + 1, sum: (c + d).to_f64_lossy() });
        }
    }
    let l2 = l2_norm(spec, &bases, &coeffs, tol);
    Ok(MatchedState { energy, coeffs, bases, l2_norm: l2, residual, spec: spec.clone() })
}

/// Global pieces of ψ⁽⁰⁾ = c·C + d·S, one TrigPoly per interval, for closed-form bases.
pub fn psi0_pieces<T: Real>(state: &MatchedState<T>) -> Result<Vec<TrigPoly<T>>> {
    (0..state.spec.interval_count())
        .map(|i| {
            let k = state.covering_domain(i);
            let b = &state.bases[k];
            let (c, d) = state.coeffs[k];
            let use_left = state.spec.interior_count() > 0 && i == 0;
            let (pc, ps) = if use_left { (&b.c.left, &b.s.left) } else { (&b.c.right, &b.s.right) };
            match (pc.as_trig(), ps.as_trig()) {
                (Some(pc), Some(ps)) => pc.scale_real(c).add(&ps.scale_real(d)),
                _ => Err(Error::Contract("closed-form pieces required".into())),
            }
        })
        .collect()
}
