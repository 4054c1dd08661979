//! Rayleigh–Schrödinger corrections by order-by-order matching.
//!
//! At order k the correction solves, piece by piece,
//!
//! ```text
//! −ψ⁽ᵏ⁾″ + (V⁽⁰⁾ − E⁽⁰⁾) ψ⁽ᵏ⁾ = τ⁽ᵏ⁻¹⁾ + E⁽ᵏ⁾ ψ⁽⁰⁾,
//! τ⁽ᵏ⁻¹⁾ = −V⁽¹⁾ψ⁽ᵏ⁻¹⁾ + Σ_{i=1}^{k−1} E⁽ⁱ⁾ ψ⁽ᵏ⁻ⁱ⁾.
//! ```
//!
//! On each domain J_j the correction is written as
//! `X_j C⁽ᵏ⁾_j + (1 − X_j) S⁽ᵏ⁾_j + ε ω_j + ξ_j ψ⁽⁰⁾`, where C⁽ᵏ⁾, S⁽ᵏ⁾
//! solve the τ-forced equation with cosine/sine initial data at L_j and ω_j
//! solves `Ĥω = ψ⁽⁰⁾` with zero initial data. Value matching on the overlaps
//! and at the walls gives a 2N×2N linear system in (ε, X_1..X_N, Z_2..Z_N)
//! with ξ_1 = 0 and ξ_{j+1} = ξ_j + Z_{j+1}.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly;
use crate::potential::{Domain, PerturbationSpec, PotentialSpec};
use crate::quad;
use crate::scalar::{Real, Tolerances};
use crate::trigbasis::TrigPoly;
use crate::zero_order::{find_eigenvalues, match_coefficients, psi0_pieces, MatchedState, ZeroOrderOptions};

/// A function on a domain as two trigonometric pieces anchored at L_j.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainPoly<T> {
    pub domain: Domain<T>,
    pub left: TrigPoly<T>,
    pub right: TrigPoly<T>,
}

impl<T: Real> DomainPoly<T> {
    fn piece(&self, x: T) -> &TrigPoly<T> {
        if x < self.domain.anchor {
            &self.left
        } else {
            &self.right
        }
    }

    pub fn value(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        self.piece(x).eval(x, tol)
    }

    pub fn slope(&self, x: T, tol: &Tolerances<T>) -> Result<T> {
        self.piece(x).eval_deriv(x, tol)
    }

    fn map(&self, f: impl Fn(&TrigPoly<T>) -> Result<TrigPoly<T>>) -> Result<Self> {
        Ok(Self { domain: self.domain, left: f(&self.left)?, right: f(&self.right)? })
    }

    fn zip(&self, other: &Self, f: impl Fn(&TrigPoly<T>, &TrigPoly<T>) -> Result<TrigPoly<T>>) -> Result<Self> {
        Ok(Self { domain: self.domain, left: f(&self.left, &other.left)?, right: f(&self.right, &other.right)? })
    }

    fn scaled(&self, factor: T) -> Self {
        Self { domain: self.domain, left: self.left.scale_real(factor), right: self.right.scale_real(factor) }
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.add(b))
    }

    fn ends(&self, tol: &Tolerances<T>) -> Result<(T, T)> {
        Ok((self.value(self.domain.left_end, tol)?, self.value(self.domain.right_end, tol)?))
    }
}

fn homogeneous<T: Real>(p: &TrigPoly<T>, value: Complex<T>, slope: Complex<T>) -> TrigPoly<T> {
    TrigPoly::homogeneous(p.anchor(), p.frequency(), value, slope)
}

fn check_trig_state<T: Real>(state: &MatchedState<T>) -> Result<Vec<DomainPoly<T>>> {
    state
        .bases
        .iter()
        .zip(&state.coeffs)
        .map(|(b, &(c, d))| {
            let pick = |p: &crate::zero_order::Piece<T>| {
                p.as_trig().cloned().ok_or_else(|| {
                    Error::Contract("corrections need a piecewise-constant zero-order potential".into())
                })
            };
            let (cl, cr, sl, sr) = (pick(&b.c.left)?, pick(&b.c.right)?, pick(&b.s.left)?, pick(&b.s.right)?);
            Ok(DomainPoly {
                domain: b.domain,
                left: cl.scale_real(c).add(&sl.scale_real(d))?,
                right: cr.scale_real(c).add(&sr.scale_real(d))?,
            })
        })
        .collect()
}

/// ω_j with Ĥω_j = ψ⁽⁰⁾ and ω_j(L_j) = ω_j′(L_j) = 0, for every domain.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSet<T> {
    pub omegas: Vec<DomainPoly<T>>,
    /// ω_j(L_{j−1}), ω_j(L_{j+1}).
    pub boundary: Vec<(T, T)>,
}

fn zero_data_solution<T: Real>(forcing: &TrigPoly<T>, tol: &Tolerances<T>) -> Result<TrigPoly<T>> {
    let u = forcing.particular_solution(tol)?;
    let fix = homogeneous(&u, Complex::new(T::zero(), T::zero()), -u.slope_at_anchor());
    u.add(&fix)
}

pub fn build_omega<T: Real>(state: &MatchedState<T>, tol: &Tolerances<T>) -> Result<OmegaSet<T>> {
    let psi0 = check_trig_state(state)?;
    let omegas = psi0
        .iter()
        .map(|p| p.map(|piece| zero_data_solution(piece, tol)))
        .collect::<Result<Vec<_>>>()?;
    let boundary = omegas.iter().map(|w| w.ends(tol)).collect::<Result<Vec<_>>>()?;
    Ok(OmegaSet { omegas, boundary })
}

/// τ-forced solutions C⁽ᵏ⁾_j and S⁽ᵏ⁾_j for one order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderBasis<T> {
    pub order: usize,
    pub tau: Vec<DomainPoly<T>>,
    pub c: Vec<DomainPoly<T>>,
    pub s: Vec<DomainPoly<T>>,
    /// (C(L_{j−1}), S(L_{j−1}), C(L_{j+1}), S(L_{j+1})) per domain.
    pub boundary: Vec<[T; 4]>,
}

pub fn build_order_basis<T: Real>(order: usize, tau: Vec<DomainPoly<T>>, tol: &Tolerances<T>) -> Result<OrderBasis<T>> {
    let (one, zero) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
    let mut c = Vec::with_capacity(tau.len());
    let mut s = Vec::with_capacity(tau.len());
    let mut boundary = Vec::with_capacity(tau.len());
    for t in &tau {
        let u = t.map(|p| p.particular_solution(tol))?;
        let cj = u.map(|p| p.add(&homogeneous(p, one, -p.slope_at_anchor())))?;
        let sj = u.map(|p| p.add(&homogeneous(p, zero, one - p.slope_at_anchor())))?;
        let (cl, cr) = cj.ends(tol)?;
        let (sl, sr) = sj.ends(tol)?;
        boundary.push([cl, sl, cr, sr]);
        c.push(cj);
        s.push(sj);
    }
    Ok(OrderBasis { order, tau, c, s, boundary })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderResult<T> {
    pub order: usize,
    /// E⁽ᵏ⁾.
    pub energy: T,
    /// X_j = c⁽ᵏ⁾(j); d⁽ᵏ⁾(j) = 1 − X_j.
    pub x: Vec<T>,
    /// Z_2..Z_N.
    pub z: Vec<T>,
    /// ξ_1..ξ_N with ξ_1 = 0.
    pub xi: Vec<T>,
    /// ψ⁽ᵏ⁾ as represented on each domain.
    pub domain_reps: Vec<DomainPoly<T>>,
    /// ψ⁽ᵏ⁾ on the non-overlapping cover, one piece per interval.
    pub global: Vec<TrigPoly<T>>,
    /// Row-equilibrated 1-norm condition estimate of the correction system.
    pub condition: T,
}

/// Solves the correction system of one order.
pub fn solve_order<T: Real>(
    state: &MatchedState<T>,
    omega: &OmegaSet<T>,
    basis: &OrderBasis<T>,
    tol: &Tolerances<T>,
) -> Result<OrderResult<T>> {
    let psi0 = check_trig_state(state)?;
    let nd = psi0.len();
    let dim = 2 * nd;
    let c0 = |j: usize| state.coeffs[j].0;
    let x_col = |j: usize| 1 + j;
    let z_col = |j: usize| nd + j; // Z for 0-based domain j ≥ 1
    let mut a = Matrix::zeros(dim, dim);
    let mut rhs = vec![T::zero(); dim];
    for j in 0..nd {
        let [cl, sl, cr, sr] = basis.boundary[j];
        let (wl, wr) = omega.boundary[j];
        let (left, right) = (2 * j, 2 * j + 1);
        a[(left, x_col(j))] = cl - sl;
        a[(left, 0)] = wl;
        rhs[left] = -sl;
        if j > 0 {
            a[(left, x_col(j - 1))] = -T::one();
            a[(left, z_col(j))] = c0(j - 1);
        }
        a[(right, x_col(j))] = cr - sr;
        a[(right, 0)] = wr;
        rhs[right] = -sr;
        if j + 1 < nd {
            a[(right, x_col(j + 1))] = -T::one();
            a[(right, z_col(j + 1))] = -c0(j + 1);
        }
    }
    let (sol, condition) = a.solve(&rhs)?;
    if !(condition <= tol.condition_max) {
        return Err(Error::DegeneracyParadox { order: basis.order, condition: condition.to_f64_lossy() });
    }
    let energy = sol[0];
    let x: Vec<T> = (0..nd).map(|j| sol[x_col(j)]).collect();
    let z: Vec<T> = (1..nd).map(|j| sol[z_col(j)]).collect();
    let mut xi = vec![T::zero(); nd];
    for j in 1..nd {
        xi[j] = xi[j - 1] + z[j - 1];
    }
    let domain_reps = (0..nd)
        .map(|j| {
            basis.c[j]
                .scaled(x[j])
                .plus(&basis.s[j].scaled(T::one() - x[j]))?
                .plus(&omega.omegas[j].scaled(energy))?
                .plus(&psi0[j].scaled(xi[j]))
        })
        .collect::<Result<Vec<_>>>()?;
    let global = global_cover(state.spec(), &domain_reps);
    Ok(OrderResult { order: basis.order, energy, x, z, xi, domain_reps, global, condition })
}

fn global_cover<T: Real>(spec: &PotentialSpec<T>, reps: &[DomainPoly<T>]) -> Vec<TrigPoly<T>> {
    (0..spec.interval_count())
        .map(|i| {
            if i == 0 && spec.interior_count() > 0 {
                reps[0].left.clone()
            } else {
                reps[i.max(1) - 1].right.clone()
            }
        })
        .collect()
}

/// Orders computed so far for one level.
#[derive(Clone, Debug)]
pub struct History<T> {
    pub state: MatchedState<T>,
    pub psi0: Vec<DomainPoly<T>>,
    pub omega: OmegaSet<T>,
    pub orders: Vec<OrderResult<T>>,
}

impl<T: Real> History<T> {
    pub fn new(state: MatchedState<T>, tol: &Tolerances<T>) -> Result<Self> {
        let psi0 = check_trig_state(&state)?;
        let omega = build_omega(&state, tol).map_err(|e| e.at_stage("build_omega"))?;
        Ok(Self { state, psi0, omega, orders: Vec::new() })
    }

    /// ψ⁽ᵐ⁾ on every domain (m = 0 is the zero-order state).
    pub fn psi(&self, m: usize) -> Option<&[DomainPoly<T>]> {
        if m == 0 {
            Some(&self.psi0)
        } else {
            self.orders.get(m - 1).map(|o| o.domain_reps.as_slice())
        }
    }

    /// E⁽ᵐ⁾ (m = 0 gives the zero-order energy).
    pub fn energy(&self, m: usize) -> Option<T> {
        if m == 0 {
            Some(self.state.energy)
        } else {
            self.orders.get(m - 1).map(|o| o.energy)
        }
    }

    pub fn energies(&self) -> Vec<T> {
        (0..=self.orders.len()).filter_map(|m| self.energy(m)).collect()
    }

    /// Computes the next order and appends it.
    pub fn advance(&mut self, pert: &PerturbationSpec<T>, tol: &Tolerances<T>) -> Result<&OrderResult<T>> {
        let k = self.orders.len() + 1;
        let tau = build_tau(k, self, pert).map_err(|e| e.at_stage("build_tau"))?;
        let basis = build_order_basis(k, tau, tol).map_err(|e| e.at_stage("build_order_basis"))?;
        let result = solve_order(&self.state, &self.omega, &basis, tol).map_err(|e| e.at_stage("solve_order"))?;
        self.orders.push(result);
        Ok(self.orders.last().expect("just pushed"))
    }
}

/// τ⁽ᵏ⁻¹⁾ on every domain, with V⁽¹⁾ re-expanded around each anchor.
pub fn build_tau<T: Real>(
    k: usize,
    history: &History<T>,
    pert: &PerturbationSpec<T>,
) -> Result<Vec<DomainPoly<T>>> {
    if k == 0 || k > history.orders.len() + 1 {
        return Err(Error::Sequencing { requested: k, available: history.orders.len() });
    }
    pert.check_against(history.state.spec())?;
    let prev = history.psi(k - 1).expect("checked above");
    let mut tau = Vec::with_capacity(prev.len());
    for (j, p) in prev.iter().enumerate() {
        let d = p.domain;
        let v_left = pert.local_expansion(d.left_interval, d.anchor);
        let v_right = pert.local_expansion(d.right_interval, d.anchor);
        let mut t = DomainPoly {
            domain: d,
            left: p.left.mul_polynomial(&poly::scale(&v_left, -T::one())),
            right: p.right.mul_polynomial(&poly::scale(&v_right, -T::one())),
        };
        for i in 1..k {
            let e = history.energy(i).expect("checked above");
            let psi = &history.psi(k - i).expect("checked above")[j];
            t = t.plus(&psi.scaled(e))?;
        }
        tau.push(t.map(|p| Ok(p.clone().trimmed()))?);
    }
    Ok(tau)
}

/// Checks of one order's correction, all relative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderDiagnostics<T> {
    pub order: usize,
    /// Max residual of the corrected equation at 50 points per piece.
    pub equation_residual: T,
    /// |ψ⁽ᵏ⁾| at the two walls.
    pub wall_residual: T,
    /// Value and slope jumps of the global cover at interior breakpoints.
    pub continuity: T,
    /// Disagreement of adjacent domain representations on their overlap.
    pub overlap: T,
    pub condition: T,
    /// ⟨ψ⁽⁰⁾|ψ⁽ᵏ⁾⟩ / ⟨ψ⁽⁰⁾|ψ⁽⁰⁾⟩.
    pub projection: T,
}

fn sample_points<T: Real>(a: T, b: T, n: usize) -> impl Iterator<Item = T> {
    (0..n).map(move |i| a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
}

/// Evaluates the diagnostics of order k directly on the global cover.
pub fn diagnose<T: Real>(
    history: &History<T>,
    pert: &PerturbationSpec<T>,
    k: usize,
    tol: &Tolerances<T>,
) -> Result<OrderDiagnostics<T>> {
    let spec = history.state.spec();
    let order = history
        .orders
        .get(k.wrapping_sub(1))
        .ok_or(Error::Sequencing { requested: k, available: history.orders.len() })?;
    let psi0_global = psi0_pieces(&history.state)?;
    let global = |m: usize| -> &[TrigPoly<T>] {
        if m == 0 {
            &psi0_global
        } else {
            &history.orders[m - 1].global
        }
    };
    let bps = spec.breakpoints();
    let e0 = history.state.energy;
    let mut equation_residual = T::zero();
    let mut amplitude = T::zero();
    for i in 0..spec.interval_count() {
        let psi = &global(k)[i];
        let second = psi.derivative().derivative();
        let mut worst = T::zero();
        let mut scale = T::zero();
        for x in sample_points(bps[i], bps[i + 1], 50) {
            let v = psi.eval(x, tol)?;
            let mut tau = -pert.value_on(i, x) * global(k - 1)[i].eval(x, tol)?;
            let mut tau_scale = tau.abs();
            for m in 1..k {
                let term = history.energy(m).expect("order exists") * global(k - m)[i].eval(x, tol)?;
                tau = tau + term;
                tau_scale = tau_scale + term.abs();
            }
            let source = order.energy * global(0)[i].eval(x, tol)?;
            let kinetic = -second.eval(x, tol)?;
            let potential = (spec.value_on(i, x) - e0) * v;
            let r = kinetic + potential - tau - source;
            worst = worst.max(r.abs());
            scale = scale.max(kinetic.abs() + potential.abs() + tau_scale + source.abs());
            amplitude = amplitude.max(v.abs());
        }
        equation_residual = equation_residual.max(worst / scale.max(T::min_positive_value()));
    }
    let amplitude = amplitude.max(T::min_positive_value());
    let n = spec.interval_count();
    let wall = global(k)[0].eval(bps[0], tol)?.abs().max(global(k)[n - 1].eval(bps[n], tol)?.abs()) / amplitude;
    let slope_scale = amplitude * ((e0 - spec.min_height()).abs().sqrt() + T::one());
    let mut continuity = T::zero();
    for i in 1..n {
        let x = bps[i];
        let (a, b) = (&global(k)[i - 1], &global(k)[i]);
        continuity = continuity
            .max((a.eval(x, tol)? - b.eval(x, tol)?).abs() / amplitude)
            .max((a.eval_deriv(x, tol)? - b.eval_deriv(x, tol)?).abs() / slope_scale);
    }
    let mut overlap = T::zero();
    for w in order.domain_reps.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for x in sample_points(b.domain.left_end, a.domain.right_end, 20) {
            overlap = overlap.max((a.value(x, tol)? - b.value(x, tol)?).abs() / amplitude);
        }
    }
    let mut num = T::zero();
    let mut den = T::zero();
    let qtol = T::lit(1e-12).max(T::epsilon() * T::lit(100.0));
    for i in 0..n {
        let (p0, pk) = (&global(0)[i], &global(k)[i]);
        num = num + quad::integrate(|x| p0.eval_complex(x).re * pk.eval_complex(x).re, bps[i], bps[i + 1], qtol);
        den = den + quad::integrate(|x| p0.eval_complex(x).re.powi(2), bps[i], bps[i + 1], qtol);
    }
    Ok(OrderDiagnostics {
        order: k,
        equation_residual,
        wall_residual: wall,
        continuity,
        overlap,
        condition: order.condition,
        projection: num / den,
    })
}

/// Everything produced for one level.
#[derive(Clone, Debug)]
pub struct SeriesReport<T> {
    pub history: History<T>,
    /// E⁽⁰⁾..E⁽ᵏ⁾.
    pub energies: Vec<T>,
    pub diagnostics: Vec<OrderDiagnostics<T>>,
}

impl<T: Real> SeriesReport<T> {
    /// Σ λᵏ E⁽ᵏ⁾ with the given coupling.
    pub fn partial_sum(&self, lambda: T) -> T {
        self.energies.iter().rev().fold(T::zero(), |acc, &e| acc * lambda + e)
    }
}

/// Runs the whole pipeline for the `level`-th eigenvalue (0-based) in the window.
pub fn run_series<T: Real>(
    spec: &PotentialSpec<T>,
    pert: &PerturbationSpec<T>,
    window: (T, T),
    level: usize,
    order_max: usize,
    opts: &ZeroOrderOptions<T>,
) -> Result<SeriesReport<T>> {
    pert.check_against(spec)?;
    if spec.has_polynomial_zero_order() {
        return Err(Error::Contract("corrections need a piecewise-constant zero-order potential".into()));
    }
    let scan = find_eigenvalues(spec, window.0, window.1, level + 1, opts).map_err(|e| e.at_stage("find_eigenvalues"))?;
    let e0 = *scan.roots.get(level).ok_or_else(|| {
        Error::NoRoot(format!("level {level} not found in [{}, {}] ({} roots)", window.0, window.1, scan.roots.len()))
            .at_stage("find_eigenvalues")
    })?;
    let state = match_coefficients(spec, e0, opts).map_err(|e| e.at_stage("match_coefficients"))?;
    run_series_from_state(state, pert, order_max, &opts.tol)
}

pub fn run_series_from_state<T: Real>(
    state: MatchedState<T>,
    pert: &PerturbationSpec<T>,
    order_max: usize,
    tol: &Tolerances<T>,
) -> Result<SeriesReport<T>> {
    let mut history = History::new(state, tol)?;
    let mut diagnostics = Vec::with_capacity(order_max);
    for k in 1..=order_max {
        history.advance(pert, tol)?;
        diagnostics.push(diagnose(&history, pert, k, tol).map_err(|e| e.at_stage("diagnostics"))?);
    }
    Ok(SeriesReport { energies: history.energies(), history, diagnostics })
}
