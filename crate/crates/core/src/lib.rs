//! Bound states of piecewise-constant potentials by overlapping-domain
//! matching, with Rayleigh–Schrödinger corrections for polynomial
//! perturbations and independent numerical oracles.

pub mod error;
pub mod linalg;
pub mod oracle;
pub mod perturbation;
pub mod poly;
pub mod potential;
pub mod quad;
pub mod scalar;
pub mod trigbasis;
pub mod zero_order;

pub use error::{Error, Result};
pub use perturbation::{run_series, History, OrderResult, SeriesReport};
pub use potential::{parse_spec, serialize_spec, Domain, PerturbationSpec, PotentialSpec};
pub use scalar::{Real, Tolerances};
pub use trigbasis::{BandedOperator, TrigPoly};
pub use zero_order::{
    find_eigenvalues, match_coefficients, matching_matrix, secular_determinant, Backend, DomainBasis, MatchedState,
    ZeroOrderOptions,
};

pub type TrigPoly64 = TrigPoly<f64>;
pub type PotentialSpec64 = PotentialSpec<f64>;
pub type PerturbationSpec64 = PerturbationSpec<f64>;
