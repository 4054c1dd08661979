//! Piecewise-constant potentials in a Dirichlet box, polynomial
//! perturbations, and the JSON input document.
//!
//! Units are ℏ = 2m = 1, so the Schrödinger operator is `−d²/dx² + V(x)`.
//! The box is `(L_0, L_{N+1})` with `N` interior breakpoints; interval `i`
//! is `(L_i, L_{i+1})` with height `H_i`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;
use crate::scalar::{Real, Tolerances};

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec<T> {
    breakpoints: Vec<T>,
    heights: Vec<T>,
    zero_order_polys: Option<Vec<Vec<T>>>,
}

/// Double interval `(L_{j−1}, L_{j+1})` anchored at `L_j`.
///
/// With no interior breakpoint the single domain is anchored at the left
/// wall and its left part has zero width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain<T> {
    /// 1-based domain index j.
    pub index: usize,
    pub anchor: T,
    pub left_end: T,
    pub right_end: T,
    pub left_interval: usize,
    pub right_interval: usize,
}

fn check_finite<T: Real>(values: &[T], path: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::schema(format!("{path}[{i}]"), "value is not finite")),
        None => Ok(()),
    }
}

impl<T: Real> PotentialSpec<T> {
    pub fn new(breakpoints: Vec<T>, heights: Vec<T>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::schema("breakpoints", "need at least the two outer walls"));
        }
        check_finite(&breakpoints, "breakpoints")?;
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::schema(format!("breakpoints[{}]", i + 1), "breakpoints must be strictly increasing"));
        }
        if heights.len() != breakpoints.len() - 1 {
            return Err(Error::schema(
                "heights",
                format!(
                    "expected {} entries (one per interval), found {}",
                    breakpoints.len() - 1,
                    heights.len()
                ),
            ));
        }
        check_finite(&heights, "heights")?;
        Ok(Self { breakpoints, heights, zero_order_polys: None })
    }

    /// Adds per-interval polynomials (powers of global x) on top of the heights.
    pub fn with_zero_order_polys(mut self, polys: Vec<Vec<T>>) -> Result<Self> {
        if polys.len() != self.heights.len() {
            return Err(Error::schema(
                "zero_order_polys",
                format!("expected {} entries, found {}", self.heights.len(), polys.len()),
            ));
        }
        for (i, p) in polys.iter().enumerate() {
            check_finite(p, &format!("zero_order_polys[{i}]"))?;
        }
        self.zero_order_polys = Some(polys);
        Ok(self)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn heights(&self) -> &[T] {
        &self.heights
    }

    pub fn zero_order_polys(&self) -> Option<&[Vec<T>]> {
        self.zero_order_polys.as_deref()
    }

    /// Number of interior breakpoints N.
    pub fn interior_count(&self) -> usize {
        self.breakpoints.len() - 2
    }

    pub fn interval_count(&self) -> usize {
        self.heights.len()
    }

    pub fn left_wall(&self) -> T {
        self.breakpoints[0]
    }

    pub fn right_wall(&self) -> T {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    pub fn width(&self) -> T {
        self.right_wall() - self.left_wall()
    }

    pub fn min_height(&self) -> T {
        self.heights.iter().copied().fold(T::infinity(), T::min)
    }

    /// True when some interval carries a non-constant zero-order polynomial.
    pub fn has_polynomial_zero_order(&self) -> bool {
        self.zero_order_polys
            .as_ref()
            .is_some_and(|ps| ps.iter().any(|p| p.iter().skip(1).any(|c| !c.is_zero())))
    }

    /// Interval containing x; breakpoints belong to the interval on their right.
    pub fn interval_of(&self, x: T) -> usize {
        let n = self.heights.len();
        self.breakpoints[1..n].iter().take_while(|&&b| x >= b).count()
    }

    /// Zero-order potential on interval i expanded in powers of (x − origin).
    pub fn local_expansion(&self, interval: usize, origin: T) -> Vec<T> {
        let mut coeffs = match &self.zero_order_polys {
            Some(ps) => poly::shift(&ps[interval], origin),
            None => Vec::new(),
        };
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        coeffs[0] = coeffs[0] + self.heights[interval];
        coeffs
    }

    /// Zero-order potential value on a given interval.
    pub fn value_on(&self, interval: usize, x: T) -> T {
        let extra = self
            .zero_order_polys
            .as_ref()
            .map_or(T::zero(), |ps| poly::eval(&ps[interval], x));
        self.heights[interval] + extra
    }

    /// Local frequency β_i = √(E − H_i), principal branch.
    pub fn local_offset(&self, interval: usize, energy: T, tol: &Tolerances<T>) -> Result<Complex<T>> {
        let height = self.heights[interval];
        let d = energy - height;
        if d.abs() <= tol.beta_min * tol.beta_min {
            return Err(Error::DegenerateEnergy {
                interval,
                energy: energy.to_f64_lossy(),
                height: height.to_f64_lossy(),
            });
        }
        Ok(if d > T::zero() {
            Complex::new(d.sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), (-d).sqrt())
        })
    }

    /// Overlapping domains J_1..J_N (or the single wall-anchored domain when N = 0).
    pub fn domains(&self) -> Vec<Domain<T>> {
        let n = self.interior_count();
        let b = &self.breakpoints;
        if n == 0 {
            return vec![Domain {
                index: 1,
                anchor: b[0],
                left_end: b[0],
                right_end: b[1],
                left_interval: 0,
                right_interval: 0,
            }];
        }
        (1..=n)
            .map(|j| Domain {
                index: j,
                anchor: b[j],
                left_end: b[j - 1],
                right_end: b[j + 1],
                left_interval: j - 1,
                right_interval: j,
            })
            .collect()
    }

    /// Same potential with every height shifted by `shift`.
    pub fn gauge_shifted(&self, shift: T) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            heights: self.heights.iter().map(|&h| h + shift).collect(),
            zero_order_polys: self.zero_order_polys.clone(),
        }
    }

    /// Splits the interval containing `x` at `x` without changing the potential.
    pub fn with_fictitious_breakpoint(&self, x: T) -> Result<Self> {
        if x <= self.left_wall() || x >= self.right_wall() || self.breakpoints.contains(&x) {
            return Err(Error::Contract(format!("fictitious breakpoint {x} must be interior and new")));
        }
        let i = self.interval_of(x);
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.insert(i + 1, x);
        let mut heights = self.heights.clone();
        heights.insert(i, heights[i]);
        let zero_order_polys = self.zero_order_polys.clone().map(|mut ps| {
            ps.insert(i, ps[i].clone());
            ps
        });
        Ok(Self { breakpoints, heights, zero_order_polys })
    }
}

/// Polynomial perturbation V¹ given per interval in powers of global x.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec<T> {
    interval_polys: Vec<Vec<T>>,
    coupling: T,
}

impl<T: Real> PerturbationSpec<T> {
    pub fn per_interval(interval_polys: Vec<Vec<T>>) -> Result<Self> {
        for (i, p) in interval_polys.iter().enumerate() {
            check_finite(p, &format!("perturbation.interval_polys[{i}]"))?;
        }
        if interval_polys.iter().all(|p| poly::is_zero(p)) {
            return Err(Error::schema("perturbation", "perturbation is identically zero"));
        }
        Ok(Self { interval_polys, coupling: T::one() })
    }

    /// One polynomial broadcast to every interval of `spec`.
    pub fn global(poly: Vec<T>, spec: &PotentialSpec<T>) -> Result<Self> {
        Self::per_interval(vec![poly; spec.interval_count()])
    }

    pub fn with_coupling(mut self, coupling: T) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn interval_polys(&self) -> &[Vec<T>] {
        &self.interval_polys
    }

    pub fn check_against(&self, spec: &PotentialSpec<T>) -> Result<()> {
        if self.interval_polys.len() != spec.interval_count() {
            return Err(Error::schema(
                "perturbation.interval_polys",
                format!(
                    "expected {} entries (one per interval), found {}",
                    spec.interval_count(),
                    self.interval_polys.len()
                ),
            ));
        }
        Ok(())
    }

    /// V¹ on interval i in powers of (x − origin).
    pub fn local_expansion(&self, interval: usize, origin: T) -> Vec<T> {
        poly::shift(&self.interval_polys[interval], origin)
    }

    pub fn value_on(&self, interval: usize, x: T) -> T {
        poly::eval(&self.interval_polys[interval], x)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            interval_polys: self.interval_polys.iter().map(|p| poly::scale(p, factor)).collect(),
            coupling: self.coupling,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.interval_polys.iter().map(|p| poly::degree(p)).max().unwrap_or(0)
    }
}

/// Serialized form of the input document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub breakpoints: Vec<f64>,
    pub heights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_order_polys: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_poly: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_polys: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
}

fn convert<T: Real>(values: &[f64]) -> Vec<T> {
    values.iter().map(|&v| T::lit(v)).collect()
}

/// Parses and validates an input document.
pub fn parse_spec<T: Real>(document: &str) -> Result<(PotentialSpec<T>, Option<PerturbationSpec<T>>)> {
    let mut de = serde_json::Deserializer::from_str(document);
    let doc: SpecDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(if path == "." { "document".to_string() } else { path }, e.into_inner().to_string())
    })?;
    from_document(&doc)
}

pub fn from_document<T: Real>(doc: &SpecDocument) -> Result<(PotentialSpec<T>, Option<PerturbationSpec<T>>)> {
    if let Some(boundary) = &doc.boundary {
        if boundary != "dirichlet" {
            return Err(Error::schema("boundary", format!("unsupported boundary `{boundary}`; only `dirichlet`")));
        }
    }
    let mut spec = PotentialSpec::new(convert(&doc.breakpoints), convert(&doc.heights))?;
    if let Some(polys) = &doc.zero_order_polys {
        spec = spec.with_zero_order_polys(polys.iter().map(|p| convert(p)).collect())?;
    }
    let pert = match &doc.perturbation {
        None => None,
        Some(p) => {
            let mut pert = match (&p.global_poly, &p.interval_polys) {
                (Some(g), None) => {
                    check_finite(&convert::<T>(g), "perturbation.global_poly")?;
                    PerturbationSpec::global(convert(g), &spec)?
                }
                (None, Some(list)) => PerturbationSpec::per_interval(list.iter().map(|p| convert(p)).collect())?,
                _ => {
                    return Err(Error::schema(
                        "perturbation",
                        "give exactly one of `global_poly` or `interval_polys`",
                    ))
                }
            };
            pert.check_against(&spec)?;
            if let Some(c) = p.coupling {
                if !c.is_finite() {
                    return Err(Error::schema("perturbation.coupling", "value is not finite"));
                }
                pert = pert.with_coupling(T::lit(c));
            }
            Some(pert)
        }
    };
    Ok((spec, pert))
}

/// Document form of a validated spec (perturbations written per interval).
pub fn to_document<T: Real>(spec: &PotentialSpec<T>, pert: Option<&PerturbationSpec<T>>) -> SpecDocument {
    let back = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
    SpecDocument {
        breakpoints: back(&spec.breakpoints),
        heights: back(&spec.heights),
        boundary: Some("dirichlet".into()),
        zero_order_polys: spec.zero_order_polys.as_ref().map(|ps| ps.iter().map(|p| back(p)).collect()),
        perturbation: pert.map(|p| PerturbationDocument {
            global_poly: None,
            interval_polys: Some(p.interval_polys.iter().map(|q| back(q)).collect()),
            coupling: Some(p.coupling.to_f64_lossy()),
        }),
    }
}

pub fn serialize_spec<T: Real>(spec: &PotentialSpec<T>, pert: Option<&PerturbationSpec<T>>) -> String {
    serde_json::to_string_pretty(&to_document(spec, pert)).expect("document serializes")
}
