//! Families of coefficient matrices Φ_α that realize quasiboson modes as
//! deformed oscillators.
//!
//! Every valid family has the block form
//! `Φ_α = U_1 · diag{0, …, √(1/m) U_α(m), …, 0} · U_2†` with the m×m block of
//! mode α at offset α·m, arbitrary fixed unitaries U_1(d_a), U_2(d_b) and
//! per-mode block unitaries U_α(m). Such a family satisfies, to machine
//! precision,
//!
//! - orthonormality Tr(Φ_α Φ_β†) = δ_{αβ},
//! - the cross-mode condition Φ_β Φ_α† Φ_γ + Φ_γ Φ_α† Φ_β = 0 for α ≠ β,
//! - the cubic condition Φ_α Φ_α† Φ_α = (f/2) Φ_α with f = 2/m,
//!
//! and every Φ_α has exactly m singular values 1/√m (the Schmidt coefficients
//! of the one-quasiboson state), the rest zero. [`PhiFamily::validate`]
//! measures the residuals of all three conditions and extracts
//! f̂ = 2·Tr((Φ†Φ)²) per mode.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;

use crate::entanglement::{schmidt_spectrum, SchmidtSpectrum};
use crate::error::{Error, Result};

/// Residual above which a family check is reported as failed.
pub const VALIDATION_TOLERANCE: f64 = 1e-10;

/// How a unitary factor of the block construction is obtained.
#[derive(Debug, Clone)]
pub enum UnitarySpec {
    Identity,
    /// Haar-distributed via QR of a seeded complex Gaussian matrix with
    /// phase-fixed diagonal; reproducible across runs.
    Seeded(u64),
    /// Caller-supplied matrix, rejected if it deviates from unitarity by
    /// more than 1e-10.
    Explicit(DMatrix<Complex64>),
}

impl UnitarySpec {
    pub fn label(&self) -> String {
        match self {
            UnitarySpec::Identity => "identity".into(),
            UnitarySpec::Seeded(s) => format!("seeded:{s}"),
            UnitarySpec::Explicit(_) => "explicit".into(),
        }
    }
}

/// Haar-distributed unitary from a seeded RNG stream.
pub fn haar_unitary(dim: usize, rng: &mut ChaCha20Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // fix the phase of the R diagonal so the draw is Haar and reproducible
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn unitarity_residual(u: &DMatrix<Complex64>) -> f64 {
    let dim = u.nrows();
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(expect, 0.0)).norm());
        }
    }
    worst
}

/// Materialize a unitary of the given dimension from its spec.
pub fn unitary_from_spec(spec: &UnitarySpec, dim: usize) -> Result<DMatrix<Complex64>> {
    match spec {
        UnitarySpec::Identity => Ok(DMatrix::identity(dim, dim)),
        UnitarySpec::Seeded(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            Ok(haar_unitary(dim, &mut rng))
        }
        UnitarySpec::Explicit(u) => {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::Parameter(format!(
                    "explicit unitary is {}x{}, expected {dim}x{dim}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            let res = unitarity_residual(u);
            if res > VALIDATION_TOLERANCE {
                return Err(Error::Validation(format!(
                    "explicit matrix deviates from unitarity by {res:.3e}"
                )));
            }
            Ok(u.clone())
        }
    }
}

/// One coefficient matrix of the family, with the offset of its m×m block.
#[derive(Debug, Clone)]
pub struct PhiMatrix {
    pub mode: usize,
    pub block_start: usize,
    pub matrix: DMatrix<Complex64>,
}

impl PhiMatrix {
    /// Singular values; for a valid family exactly m of them equal 1/√m.
    pub fn schmidt(&self) -> Result<SchmidtSpectrum> {
        schmidt_spectrum(&self.matrix)
    }
}

/// Singular values of one coefficient matrix, nonincreasing.
pub fn schmidt_of_phi(phi: &PhiMatrix) -> Result<SchmidtSpectrum> {
    phi.schmidt()
}

/// A full set of mode matrices Φ_α sharing ε, m and the deformation
/// strength f = 2/m.
#[derive(Debug, Clone)]
pub struct PhiFamily {
    epsilon: i32,
    m: usize,
    matrices: Vec<PhiMatrix>,
    provenance: FamilyProvenance,
}

/// Where the matrices came from; kept for JSON round-trips and reports.
#[derive(Debug, Clone)]
pub enum FamilyProvenance {
    Constructed {
        u1: String,
        u2: String,
        blocks: String,
    },
    Explicit,
}

impl PhiFamily {
    /// Build the block-diagonal family: `Φ_α = U_1 · D_α · U_2†` with
    /// `D_α` zero except for a √(1/m)·U_α(m) block at rows/cols
    /// `[α·m, (α+1)·m)`. Requires `n_modes·m ≤ min(d_a, d_b)`.
    ///
    /// A `Seeded(s)` block spec draws the `U_α(m)` sequentially from one
    /// ChaCha20 stream seeded with `s`.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        d_a: usize,
        d_b: usize,
        m: usize,
        n_modes: usize,
        epsilon: i32,
        u1_spec: &UnitarySpec,
        u2_spec: &UnitarySpec,
        block_spec: &UnitarySpec,
    ) -> Result<Self> {
        if m == 0 || n_modes == 0 {
            return Err(Error::Parameter("m and n_modes must be at least 1".into()));
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::Parameter(format!("epsilon must be ±1, got {epsilon}")));
        }
        if n_modes * m > d_a.min(d_b) {
            return Err(Error::Parameter(format!(
                "{n_modes} blocks of size {m} do not fit in min(d_a, d_b) = {}",
                d_a.min(d_b)
            )));
        }
        let u1 = unitary_from_spec(u1_spec, d_a)?;
        let u2 = unitary_from_spec(u2_spec, d_b)?;
        let blocks: Vec<DMatrix<Complex64>> = match block_spec {
            UnitarySpec::Identity => vec![DMatrix::identity(m, m); n_modes],
            UnitarySpec::Seeded(seed) => {
                let mut rng = ChaCha20Rng::seed_from_u64(*seed);
                (0..n_modes).map(|_| haar_unitary(m, &mut rng)).collect()
            }
            UnitarySpec::Explicit(u) => {
                let u = unitary_from_spec(&UnitarySpec::Explicit(u.clone()), m)?;
                vec![u; n_modes]
            }
        };

        let scale = Complex64::new((1.0 / m as f64).sqrt(), 0.0);
        let u2h = u2.adjoint();
        let matrices = (0..n_modes)
            .map(|alpha| {
                let start = alpha * m;
                let mut d = DMatrix::from_element(d_a, d_b, Complex64::new(0.0, 0.0));
                for i in 0..m {
                    for j in 0..m {
                        d[(start + i, start + j)] = scale * blocks[alpha][(i, j)];
                    }
                }
                PhiMatrix {
                    mode: alpha,
                    block_start: start,
                    matrix: &u1 * d * &u2h,
                }
            })
            .collect();

        Ok(PhiFamily {
            epsilon,
            m,
            matrices,
            provenance: FamilyProvenance::Constructed {
                u1: u1_spec.label(),
                u2: u2_spec.label(),
                blocks: block_spec.label(),
            },
        })
    }

    /// Wrap explicit matrices without checking the family conditions;
    /// [`PhiFamily::validate`] reports how far they are from a realization.
    pub fn from_matrices(epsilon: i32, m: usize, matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::Parameter(format!("epsilon must be ±1, got {epsilon}")));
        }
        if m == 0 || matrices.is_empty() {
            return Err(Error::Parameter("need m ≥ 1 and at least one matrix".into()));
        }
        let shape = matrices[0].shape();
        if matrices.iter().any(|mat| mat.shape() != shape) {
            return Err(Error::Parameter("all mode matrices must share one shape".into()));
        }
        let matrices = matrices
            .into_iter()
            .enumerate()
            .map(|(mode, matrix)| PhiMatrix {
                mode,
                block_start: mode * m,
                matrix,
            })
            .collect();
        Ok(PhiFamily {
            epsilon,
            m,
            matrices,
            provenance: FamilyProvenance::Explicit,
        })
    }

    pub fn epsilon(&self) -> i32 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Deformation strength f = 2/m as an exact fraction.
    pub fn f(&self) -> (u64, u64) {
        (2, self.m as u64)
    }

    pub fn n_modes(&self) -> usize {
        self.matrices.len()
    }

    pub fn d_a(&self) -> usize {
        self.matrices[0].matrix.nrows()
    }

    pub fn d_b(&self) -> usize {
        self.matrices[0].matrix.ncols()
    }

    pub fn matrices(&self) -> &[PhiMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, mode: usize) -> Result<&PhiMatrix> {
        self.matrices.get(mode).ok_or_else(|| {
            Error::Parameter(format!("mode {mode} out of range for {} modes", self.n_modes()))
        })
    }

    pub fn provenance(&self) -> &FamilyProvenance {
        self.provenance_labels()
    }

    fn provenance_labels(&self) -> &FamilyProvenance {
        &self.provenance
    }

    /// Measure the residuals of orthonormality, the cross-mode condition and
    /// the cubic condition, and extract f̂ = 2·Tr((Φ†Φ)²) per mode.
    pub fn validate(&self) -> ValidationReport {
        self.validate_with_tolerance(VALIDATION_TOLERANCE)
    }

    pub fn validate_with_tolerance(&self, tolerance: f64) -> ValidationReport {
        let n = self.n_modes();
        let f_half = 1.0 / self.m as f64;

        let mut orthonormality = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let tr = (&self.matrices[a].matrix * self.matrices[b].matrix.adjoint()).trace();
                let expect = if a == b { 1.0 } else { 0.0 };
                orthonormality = orthonormality.max((tr - Complex64::new(expect, 0.0)).norm());
            }
        }

        let mut cross_mode = 0.0f64;
        for alpha in 0..n {
            for beta in 0..n {
                if alpha == beta {
                    continue;
                }
                for gamma in 0..n {
                    let pa = self.matrices[alpha].matrix.adjoint();
                    let lhs = &self.matrices[beta].matrix * &pa * &self.matrices[gamma].matrix
                        + &self.matrices[gamma].matrix * &pa * &self.matrices[beta].matrix;
                    cross_mode = cross_mode.max(lhs.iter().map(|v| v.norm()).fold(0.0, f64::max));
                }
            }
        }

        let mut cubic = 0.0f64;
        let mut f_extracted = Vec::with_capacity(n);
        for alpha in 0..n {
            let phi = &self.matrices[alpha].matrix;
            let cube = phi * phi.adjoint() * phi;
            let res = (&cube - phi.map(|v| v * Complex64::new(f_half, 0.0)))
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            cubic = cubic.max(res);
            let gram = phi.adjoint() * phi;
            let f_hat = 2.0 * (&gram * &gram).trace().re;
            f_extracted.push(f_hat);
        }
        let f_target = 2.0 * f_half;
        let f_deviation = f_extracted
            .iter()
            .map(|f| (f - f_target).abs())
            .fold(0.0, f64::max);

        let mut failed_checks = Vec::new();
        if orthonormality > tolerance {
            failed_checks.push("orthonormality".to_string());
        }
        if cross_mode > tolerance {
            failed_checks.push("cross_mode".to_string());
        }
        if cubic > tolerance {
            failed_checks.push("cubic".to_string());
        }
        if f_deviation > tolerance {
            failed_checks.push("deformation_parameter".to_string());
        }

        ValidationReport {
            orthonormality_residual: orthonormality,
            cross_mode_residual: cross_mode,
            cubic_residual: cubic,
            f_extracted,
            f_target,
            f_deviation,
            tolerance,
            pass: failed_checks.is_empty(),
            failed_checks,
        }
    }

    /// JSON form: dimensions, ε, m, provenance and the matrices themselves.
    pub fn to_json(&self) -> serde_json::Value {
        let unitaries = match &self.provenance {
            FamilyProvenance::Constructed { u1, u2, blocks } => json!({
                "u1": u1, "u2": u2, "blocks": blocks,
            }),
            FamilyProvenance::Explicit => json!("explicit"),
        };
        json!({
            "epsilon": self.epsilon,
            "m": self.m,
            "d_a": self.d_a(),
            "d_b": self.d_b(),
            "n_modes": self.n_modes(),
            "unitaries": unitaries,
            "matrices": self.matrices.iter().map(|p| json!({
                "mode": p.mode,
                "block_start": p.block_start,
                "re": (0..p.matrix.nrows()).map(|i| {
                    (0..p.matrix.ncols()).map(|j| p.matrix[(i, j)].re).collect::<Vec<_>>()
                }).collect::<Vec<_>>(),
                "im": (0..p.matrix.nrows()).map(|i| {
                    (0..p.matrix.ncols()).map(|j| p.matrix[(i, j)].im).collect::<Vec<_>>()
                }).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    /// Parse the [`PhiFamily::to_json`] format; only ε, m and the matrices
    /// are required.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let epsilon = value
            .get("epsilon")
            .and_then(|v| v.as_i64())
            .ok_or_else(|| Error::Json("missing integer field `epsilon`".into()))?
            as i32;
        let m = value
            .get("m")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Json("missing integer field `m`".into()))? as usize;
        let mats = value
            .get("matrices")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Json("missing array field `matrices`".into()))?;
        let mut matrices = Vec::with_capacity(mats.len());
        for entry in mats {
            let re = parse_grid(entry.get("re"))?;
            let im = parse_grid(entry.get("im"))?;
            if re.len() != im.len() || re.is_empty() {
                return Err(Error::Json("re/im grids must be non-empty and equal-shaped".into()));
            }
            let rows = re.len();
            let cols = re[0].len();
            if re.iter().chain(im.iter()).any(|row| row.len() != cols) {
                return Err(Error::Json("ragged matrix rows".into()));
            }
            matrices.push(DMatrix::from_fn(rows, cols, |i, j| {
                Complex64::new(re[i][j], im[i][j])
            }));
        }
        PhiFamily::from_matrices(epsilon, m, matrices)
    }
}

fn parse_grid(value: Option<&serde_json::Value>) -> Result<Vec<Vec<f64>>> {
    let rows = value
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::Json("matrix grid must be an array of arrays".into()))?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::Json("matrix row must be an array".into()))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::Json("matrix entry must be a number".into()))
                })
                .collect()
        })
        .collect()
}

/// Residuals of the family conditions, with pass/fail per check.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub orthonormality_residual: f64,
    pub cross_mode_residual: f64,
    pub cubic_residual: f64,
    /// f̂ = 2·Tr((Φ†Φ)²) per mode.
    pub f_extracted: Vec<f64>,
    pub f_target: f64,
    pub f_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub failed_checks: Vec<String>,
}
