//! Schmidt decomposition of bipartite pure states and the entanglement
//! measures derived from the Schmidt spectrum: rank, Schmidt number K,
//! subsystem purity P = 1/K, von Neumann entropy S and concurrence C.
//!
//! Two independent routes are provided and cross-checked: singular values of
//! the amplitude matrix, and eigenvalues of the reduced density matrices
//! ρ_a = M M† and ρ_b = M† M.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::StateVector;

/// Relative threshold below which a Schmidt coefficient counts as zero.
pub const RANK_RELATIVE_THRESHOLD: f64 = 1e-12;

/// Frobenius-norm deviation from 1 beyond which an input matrix is flagged
/// and renormalized before decomposition.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// Nonincreasing list of Schmidt coefficients λ_k ≥ 0 of a bipartite vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    values: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Sorts into nonincreasing order; negative inputs are clamped to zero.
    pub fn new(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
        SchmidtSpectrum { values }
    }

    /// Uniform spectrum of `m` coefficients 1/√m, the spectrum of a single
    /// quasiboson mode with an m-dimensional block.
    pub fn uniform(m: usize) -> Self {
        SchmidtSpectrum {
            values: vec![1.0 / (m as f64).sqrt(); m],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|l| l * l).sum()
    }

    /// Number of coefficients above `RANK_RELATIVE_THRESHOLD · λ_max`.
    pub fn rank(&self) -> usize {
        let max = self.values.first().copied().unwrap_or(0.0);
        if max == 0.0 {
            return 0;
        }
        self.values
            .iter()
            .filter(|&&l| l > RANK_RELATIVE_THRESHOLD * max)
            .count()
    }

    /// Σ λ⁴, the purity of either reduced state.
    pub fn purity(&self) -> f64 {
        self.values.iter().map(|l| l.powi(4)).sum()
    }

    /// K = 1/Σλ⁴.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.purity()
    }

    /// −Σ λ² ln λ² in nats, with 0·ln 0 = 0.
    pub fn entropy_nats(&self) -> f64 {
        -self
            .values
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| {
                let p = l * l;
                p * p.ln()
            })
            .sum::<f64>()
    }

    /// √(r/(r−1)·(1 − Σλ⁴)) with r the Schmidt rank; 0 for rank ≤ 1.
    pub fn concurrence(&self) -> f64 {
        let r = self.rank();
        if r <= 1 {
            return 0.0;
        }
        let inner = (r as f64) / (r as f64 - 1.0) * (1.0 - self.purity());
        inner.max(0.0).sqrt()
    }

    pub fn report(&self) -> EntanglementReport {
        EntanglementReport {
            rank: self.rank(),
            schmidt_number: self.schmidt_number(),
            purity: self.purity(),
            entropy_nats: self.entropy_nats(),
            concurrence: self.concurrence(),
        }
    }
}

/// Scalar entanglement measures of one bipartite pure state.
#[derive(Debug, Clone, Serialize)]
pub struct EntanglementReport {
    pub rank: usize,
    pub schmidt_number: f64,
    pub purity: f64,
    pub entropy_nats: f64,
    pub concurrence: f64,
}

/// Full Schmidt decomposition M = Σ_k λ_k · left_k · right_kᵀ (plain
/// transpose: `right` rows are the kets of the second factor).
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub spectrum: SchmidtSpectrum,
    /// Columns are the left Schmidt vectors |v_k⟩.
    pub left: DMatrix<Complex64>,
    /// Rows are the right Schmidt vectors |w_k⟩ (unconjugated).
    pub right: DMatrix<Complex64>,
    /// Frobenius norm of the input matrix.
    pub input_norm: f64,
    /// Set when the input deviated from unit norm by more than
    /// [`NORMALIZATION_TOLERANCE`] and was renormalized.
    pub renormalized: bool,
}

fn checked_normalize(matrix: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, f64, bool)> {
    let norm = matrix.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    let renormalized = (norm - 1.0).abs() > NORMALIZATION_TOLERANCE;
    let scaled = matrix.map(|v| v / norm);
    Ok((scaled, norm, renormalized))
}

/// Singular values of the amplitude matrix, nonincreasing.
pub fn schmidt_spectrum(matrix: &DMatrix<Complex64>) -> Result<SchmidtSpectrum> {
    let (m, _, _) = checked_normalize(matrix)?;
    let svd = m.svd(false, false);
    Ok(SchmidtSpectrum::new(
        svd.singular_values.iter().copied().collect(),
    ))
}

/// Schmidt decomposition with left/right vectors.
pub fn schmidt_decompose(matrix: &DMatrix<Complex64>) -> Result<SchmidtDecomposition> {
    let (m, input_norm, renormalized) = checked_normalize(matrix)?;
    let svd = m.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let spectrum = SchmidtSpectrum::new(svd.singular_values.iter().copied().collect());
    Ok(SchmidtDecomposition {
        spectrum,
        left: u,
        right: v_t,
        input_norm,
        renormalized,
    })
}

/// K and S of one reduced density matrix, from its eigenvalues.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedMeasures {
    pub schmidt_number: f64,
    pub purity: f64,
    pub entropy_nats: f64,
}

fn reduced_measures(rho: &DMatrix<Complex64>) -> ReducedMeasures {
    let eig = rho.clone().symmetric_eigen();
    let probs: Vec<f64> = eig.eigenvalues.iter().map(|&p| p.max(0.0)).collect();
    let purity: f64 = probs.iter().map(|p| p * p).sum();
    let entropy = -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>();
    ReducedMeasures {
        schmidt_number: 1.0 / purity,
        purity,
        entropy_nats: entropy,
    }
}

/// Cross-validation of the spectrum route against the reduced-density-matrix
/// route on one product-space state.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedDensityReport {
    pub spectrum_route: EntanglementReport,
    pub rho_a_route: ReducedMeasures,
    pub rho_b_route: ReducedMeasures,
    /// Largest disagreement in K across the three routes.
    pub schmidt_number_deviation: f64,
    /// Largest disagreement in S across the three routes.
    pub entropy_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compute ρ_a = Tr_b ρ and ρ_b = Tr_a ρ for a normalized product-space
/// state, derive K and S from each, and compare with the spectrum route.
pub fn reduced_density_check(state: &StateVector) -> Result<ReducedDensityReport> {
    reduced_density_check_with_tolerance(state, 1e-10)
}

pub fn reduced_density_check_with_tolerance(
    state: &StateVector,
    tolerance: f64,
) -> Result<ReducedDensityReport> {
    let matrix = state.bipartite_reshape()?;
    let (m, _, _) = checked_normalize(&matrix)?;
    let spectrum = schmidt_spectrum(&m)?;
    let spectrum_route = spectrum.report();

    // ρ_a[i, i'] = Σ_j M[i, j] conj(M[i', j]) = (M M†)[i, i']
    let rho_a = &m * m.adjoint();
    let rho_b = m.adjoint() * &m;
    let a = reduced_measures(&rho_a);
    let b = reduced_measures(&rho_b);

    let k_dev = (a.schmidt_number - spectrum_route.schmidt_number)
        .abs()
        .max((b.schmidt_number - spectrum_route.schmidt_number).abs())
        .max((a.schmidt_number - b.schmidt_number).abs());
    let s_dev = (a.entropy_nats - spectrum_route.entropy_nats)
        .abs()
        .max((b.entropy_nats - spectrum_route.entropy_nats).abs())
        .max((a.entropy_nats - b.entropy_nats).abs());

    let pass = k_dev <= tolerance && s_dev <= tolerance;
    Ok(ReducedDensityReport {
        spectrum_route,
        rho_a_route: a,
        rho_b_route: b,
        schmidt_number_deviation: k_dev,
        entropy_deviation: s_dev,
        tolerance,
        pass,
    })
}
