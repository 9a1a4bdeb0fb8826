//! Composite bosons (quasibosons) built from two fermions or two bosons,
//! realized as deformed oscillators, and the bipartite entanglement between
//! their constituents.
//!
//! A quasiboson mode is created by `A†_α = Σ_{μν} Φ_α^{μν} a†_μ b†_ν` with a
//! coefficient matrix family of block form `U_1·diag{…, √(1/m)·U_α(m), …}·U_2†`.
//! On such families the mode operators close a deformed oscillator algebra
//! with the quadratic structure function `φ(n) = (1+ε/m)·n − (ε/m)·n²`, and
//! every entanglement characteristic of single- and multi-quasiboson states
//! is a function of the block size m alone.
//!
//! The crate computes those characteristics along two fully independent
//! routes — closed-form expressions in exact rational arithmetic or
//! convergent series, and brute-force construction of the states in explicit
//! constituent Fock spaces followed by a singular value decomposition — and
//! cross-validates one against the other.
//!
//! Module map:
//!
//! - [`fock`]: occupation-number bases, sparse creation/annihilation
//!   operators, bipartite reshaping.
//! - [`phi`]: construction and validation of the coefficient-matrix families.
//! - [`algebra`]: structure function, φ-factorials, quasiboson operators and
//!   the realization verifier.
//! - [`entanglement`]: Schmidt decomposition and single-state measures, with
//!   a reduced-density-matrix cross-check.
//! - [`multi`]: multi-quasiboson wavefunctions (Fock, distinct-mode,
//!   coherent), their closed-form K and S, and the explicit-space oracle.
//! - [`special`]: series evaluation of I_ν and ₀F₃.

pub mod algebra;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod multi;
pub mod phi;
pub mod special;

pub use algebra::{DeformationSpec, QuasibosonSystem, RealizationReport};
pub use entanglement::{
    reduced_density_check, schmidt_decompose, schmidt_spectrum, EntanglementReport,
    SchmidtSpectrum,
};
pub use error::{Error, Result};
pub use fock::{FockSpace, ProductSpace, SparseOperator, StateVector, Statistics};
pub use multi::{
    coherent_entropy, coherent_k, coherent_normalization, coherent_wavefunction,
    distinct_modes_measures, fock_state_measures, general_state_measures, multiplicity,
    oracle_measures, CoherentParams, OccupationConfig, Wavefunction,
};
pub use phi::{PhiFamily, PhiMatrix, UnitarySpec, ValidationReport};
