//! The deformed-oscillator side of the realization: the quadratic structure
//! function φ, φ-factorials, quasiboson mode operators A†_α on explicit
//! two-species Fock spaces, deviation operators Δ_{αβ}, and the verifier
//! that the deformed-oscillator relations hold on the span of quasiboson
//! states.
//!
//! The structure function is
//!
//! ```text
//! φ(n) = (1 + ε·f/2)·n − (ε·f/2)·n²,   f = 2/m,
//! ```
//!
//! kept in exact rational arithmetic; floating point enters only at the
//! operator boundary. On the linear span of monomials
//! `(A†_{γ1})^{m1}···(A†_{γD})^{mD}|0⟩` the mode operators obey
//!
//! - `[A_α, A†_β] = 0` for α ≠ β,
//! - `[N_α, A†_α] = A†_α`, `[N_α, A_α] = −A_α`,
//! - `[A_α, A†_α] = φ(N_α+1) − φ(N_α)`,
//!
//! where N_α is the degree operator of mode α on that span. For fermionic
//! constituents A†_α is nilpotent of order m+1.

use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, ProductSpace, SparseOperator, StateVector, Statistics};
use crate::phi::PhiFamily;

/// Residual norm below which a candidate span vector counts as zero and is
/// dropped during orthonormalization.
pub const SPAN_DROP_THRESHOLD: f64 = 1e-10;

/// Norm below which a repeated-creation state counts as vanished when the
/// nilpotency order is measured.
pub const NILPOTENCY_THRESHOLD: f64 = 1e-12;

/// Deformation data: constituent statistics sign ε = ±1 and the block size m,
/// with strength f = 2/m held exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeformationSpec {
    pub epsilon: i32,
    pub m: u32,
}

impl DeformationSpec {
    pub fn new(epsilon: i32, m: u32) -> Result<Self> {
        Statistics::from_epsilon(epsilon)?;
        if m == 0 {
            return Err(Error::Parameter("m must be at least 1".into()));
        }
        Ok(DeformationSpec { epsilon, m })
    }

    pub fn statistics(&self) -> Statistics {
        Statistics::from_epsilon(self.epsilon).expect("validated at construction")
    }

    /// f = 2/m as an exact rational.
    pub fn f(&self) -> BigRational {
        BigRational::new(BigInt::from(2), BigInt::from(self.m))
    }

    /// φ(n) = (1 + ε/m)·n − (ε/m)·n² = n·(m + ε·(1 − n))/m, exactly.
    pub fn structure_function(&self, n: u64) -> BigRational {
        let n = BigInt::from(n);
        let m = BigInt::from(self.m);
        let eps = BigInt::from(self.epsilon);
        let numerator = &n * (&m + eps * (BigInt::one() - &n));
        BigRational::new(numerator, m)
    }

    /// φ(n)! = φ(1)·…·φ(n), with the empty product equal to 1.
    pub fn phi_factorial(&self, n: u64) -> BigRational {
        let mut acc = BigRational::one();
        for k in 1..=n {
            acc *= self.structure_function(k);
        }
        acc
    }

    /// χ_{N+1}/χ_N = φ(N+1)/(N+1) for χ_N = φ(N)!/N!, exactly.
    pub fn chi_ratio(&self, n: u64) -> Result<BigRational> {
        if n == 0 {
            return Err(Error::Parameter("chi ratio needs N ≥ 1".into()));
        }
        Ok(self.structure_function(n + 1) / BigRational::from(BigInt::from(n + 1)))
    }

    /// Exact check of the alternating-sum recurrence
    /// `φ(n+1) = Σ_{k=0}^{n} (−1)^{n−k} C(n+1, k) φ(k)` for all 2 ≤ n ≤ n_max.
    pub fn check_recurrence(&self, n_max: u64) -> bool {
        recurrence_holds(|k| self.structure_function(k), n_max)
    }
}

/// The same recurrence check against an arbitrary φ table, used to confirm
/// the check rejects tampered structure functions.
pub fn recurrence_holds(phi: impl Fn(u64) -> BigRational, n_max: u64) -> bool {
    for n in 2..=n_max {
        let mut sum = BigRational::zero();
        for k in 0..=n {
            let sign = if (n - k) % 2 == 0 {
                BigInt::one()
            } else {
                -BigInt::one()
            };
            let choose = num::integer::binomial(BigInt::from(n + 1), BigInt::from(k));
            sum += BigRational::from(sign * choose) * phi(k);
        }
        if sum != phi(n + 1) {
            return false;
        }
    }
    true
}

/// Sparse quasiboson creation operator `A† = Σ_{μν} Φ^{μν} a†_μ b†_ν` on a
/// product space. Fermionic signs act factor-wise.
pub fn quasiboson_creation(
    product: &ProductSpace,
    phi: &DMatrix<Complex64>,
) -> Result<SparseOperator> {
    if phi.nrows() != product.space_a().n_modes() || phi.ncols() != product.space_b().n_modes() {
        return Err(Error::Parameter(format!(
            "coefficient matrix is {}x{} but spaces have {} and {} modes",
            phi.nrows(),
            phi.ncols(),
            product.space_a().n_modes(),
            product.space_b().n_modes()
        )));
    }
    let nonzero: Vec<(usize, usize, Complex64)> = (0..phi.nrows())
        .flat_map(|mu| (0..phi.ncols()).map(move |nu| (mu, nu)))
        .filter_map(|(mu, nu)| {
            let v = phi[(mu, nu)];
            (v != Complex64::new(0.0, 0.0)).then_some((mu, nu, v))
        })
        .collect();
    let dim_b = product.space_b().dim();
    let mut entries = Vec::new();
    for i_a in 0..product.space_a().dim() {
        for i_b in 0..dim_b {
            let source = product.fuse(i_a, i_b);
            for &(mu, nu, v) in &nonzero {
                if let (Some((j_a, s_a)), Some((j_b, s_b))) = (
                    product.space_a().raise(i_a, mu),
                    product.space_b().raise(i_b, nu),
                ) {
                    entries.push((product.fuse(j_a, j_b), source, v * s_a * s_b));
                }
            }
        }
    }
    SparseOperator::new(product.dim(), product.dim(), entries)
}

/// Normal-ordered single-species bilinear `Σ_{ij} C[i][j] c†_i c_j`.
/// Number-conserving, hence exact under any total-quanta cutoff.
fn bilinear(space: &FockSpace, coeff: &DMatrix<Complex64>) -> Result<SparseOperator> {
    let n = space.n_modes();
    if coeff.nrows() != n || coeff.ncols() != n {
        return Err(Error::Parameter("bilinear coefficient shape mismatch".into()));
    }
    let mut entries = Vec::new();
    for s in 0..space.dim() {
        for j in 0..n {
            let Some((mid, amp_low)) = space.lower(s, j) else {
                continue;
            };
            for i in 0..n {
                let c = coeff[(i, j)];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((t, amp_raise)) = space.raise(mid, i) {
                    entries.push((t, s, c * amp_low * amp_raise));
                }
            }
        }
    }
    SparseOperator::new(space.dim(), space.dim(), entries)
}

/// A Φ family together with explicit constituent Fock spaces and the sparse
/// mode operators A†_α acting on their product.
#[derive(Debug, Clone)]
pub struct QuasibosonSystem {
    spec: DeformationSpec,
    family: PhiFamily,
    product: ProductSpace,
    creators: Vec<SparseOperator>,
}

impl QuasibosonSystem {
    /// Build constituent spaces with the given total-quanta cutoffs (the
    /// statistics follow the family's ε) and assemble every A†_α.
    pub fn new(family: PhiFamily, cutoff_a: u32, cutoff_b: u32) -> Result<Self> {
        let spec = DeformationSpec::new(family.epsilon(), family.m() as u32)?;
        let statistics = spec.statistics();
        let space_a = FockSpace::new(statistics, family.d_a(), cutoff_a)?;
        let space_b = FockSpace::new(statistics, family.d_b(), cutoff_b)?;
        let product = ProductSpace::new(space_a, space_b);
        let creators = family
            .matrices()
            .iter()
            .map(|p| quasiboson_creation(&product, &p.matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(QuasibosonSystem {
            spec,
            family,
            product,
            creators,
        })
    }

    pub fn spec(&self) -> DeformationSpec {
        self.spec
    }

    pub fn family(&self) -> &PhiFamily {
        &self.family
    }

    pub fn product(&self) -> &ProductSpace {
        &self.product
    }

    pub fn n_modes(&self) -> usize {
        self.creators.len()
    }

    pub fn creation(&self, mode: usize) -> Result<&SparseOperator> {
        self.creators.get(mode).ok_or_else(|| {
            Error::Parameter(format!("mode {mode} out of range for {} modes", self.n_modes()))
        })
    }

    pub fn annihilation(&self, mode: usize) -> Result<SparseOperator> {
        Ok(self.creation(mode)?.dagger())
    }

    /// Deviation from bosonic commutation,
    /// `Δ_{αβ} = Σ (Φ_β Φ_α†)^{μ'μ} a†_{μ'} a_μ + Σ (Φ_α† Φ_β)^{νν'} b†_{ν'} b_ν`,
    /// satisfying `[A_α, A†_β] = δ_{αβ} − ε·Δ_{αβ}` on cutoff-safe grades.
    pub fn deviation(&self, alpha: usize, beta: usize) -> Result<SparseOperator> {
        let phi_a = &self.family.matrix(alpha)?.matrix;
        let phi_b = &self.family.matrix(beta)?.matrix;
        let p = phi_b * phi_a.adjoint();
        let q = phi_a.adjoint() * phi_b;
        let part_a = self.product.lift_a(&bilinear(self.product.space_a(), &p)?)?;
        // coefficient (Φ_α†Φ_β)^{νν'} multiplies b†_{ν'} b_ν, so the
        // creation index is the second index: transpose, not adjoint
        let part_b = self.product.lift_b(&bilinear(self.product.space_b(), &q.transpose())?)?;
        part_a.add(&part_b)
    }

    /// `(A†_mode)^n |0⟩`, unnormalized.
    pub fn creation_power_vacuum(&self, mode: usize, n: u32) -> Result<StateVector> {
        let op = self.creation(mode)?;
        let mut amps = self.product.vacuum().amps().to_vec();
        for _ in 0..n {
            amps = op.apply(&amps)?;
        }
        StateVector::new_product(
            self.product.space_a().dim(),
            self.product.space_b().dim(),
            amps,
        )
    }

    /// `⟨0| A^n (A†)^n |0⟩ = ‖(A†)^n|0⟩‖²`, the φ-factorial norm measured on
    /// the explicit spaces. Exact when the cutoffs admit n quanta per species.
    pub fn vacuum_moment(&self, mode: usize, n: u32) -> Result<f64> {
        Ok(self.creation_power_vacuum(mode, n)?.norm().powi(2))
    }

    /// Monomial state `Π_γ (A†_γ)^{degrees[γ]} |0⟩` (modes commute, so the
    /// application order is immaterial).
    pub fn monomial_state(&self, degrees: &[u32]) -> Result<StateVector> {
        if degrees.len() != self.n_modes() {
            return Err(Error::Parameter(format!(
                "degree vector length {} does not match {} modes",
                degrees.len(),
                self.n_modes()
            )));
        }
        let mut amps = self.product.vacuum().amps().to_vec();
        for (mode, &power) in degrees.iter().enumerate() {
            let op = self.creation(mode)?;
            for _ in 0..power {
                amps = op.apply(&amps)?;
            }
        }
        StateVector::new_product(
            self.product.space_a().dim(),
            self.product.space_b().dim(),
            amps,
        )
    }

    /// Orthonormal basis of the span of all creation monomials of total
    /// degree ≤ `max_degree`, via modified Gram–Schmidt with
    /// re-orthogonalization. Vanished monomials (nilpotency) are dropped.
    pub fn span(&self, max_degree: u32) -> Result<QuasibosonSpan> {
        let cutoff_a = self.product.space_a().max_quanta();
        let cutoff_b = self.product.space_b().max_quanta();
        if max_degree > cutoff_a || max_degree > cutoff_b {
            return Err(Error::Parameter(format!(
                "span degree {max_degree} exceeds cutoffs ({cutoff_a}, {cutoff_b})"
            )));
        }
        let mut vectors: Vec<SpanVector> = Vec::new();
        let mut dropped = 0usize;
        for degrees in monomial_degrees(self.n_modes(), max_degree) {
            let state = self.monomial_state(&degrees)?;
            let mut amps = state.amps().to_vec();
            // two rounds of projection removal
            for _ in 0..2 {
                for prev in &vectors {
                    let overlap: Complex64 = prev
                        .state
                        .amps()
                        .iter()
                        .zip(&amps)
                        .map(|(p, a)| p.conj() * a)
                        .sum();
                    for (slot, p) in amps.iter_mut().zip(prev.state.amps()) {
                        *slot -= overlap * p;
                    }
                }
            }
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < SPAN_DROP_THRESHOLD {
                dropped += 1;
                continue;
            }
            let inv = Complex64::new(1.0 / norm, 0.0);
            for a in &mut amps {
                *a *= inv;
            }
            vectors.push(SpanVector {
                degrees,
                state: StateVector::new_product(
                    self.product.space_a().dim(),
                    self.product.space_b().dim(),
                    amps,
                )?,
            });
        }
        Ok(QuasibosonSpan {
            max_degree,
            dropped,
            vectors,
        })
    }

    /// Smallest p with ‖(A†)^p|0⟩‖ below [`NILPOTENCY_THRESHOLD`], probed up
    /// to the cutoffs; `None` means no vanishing was seen in that range.
    pub fn nilpotency_order(&self, mode: usize) -> Result<Option<u32>> {
        let cap = self
            .product
            .space_a()
            .max_quanta()
            .min(self.product.space_b().max_quanta());
        let op = self.creation(mode)?;
        let mut amps = self.product.vacuum().amps().to_vec();
        for p in 1..=cap {
            amps = op.apply(&amps)?;
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < NILPOTENCY_THRESHOLD {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    /// Verify the deformed-oscillator relations on the quasiboson span of
    /// total degree ≤ `max_degree`, at the default tolerance.
    pub fn verify(&self, max_degree: u32) -> Result<RealizationReport> {
        self.verify_with_tolerance(max_degree, 1e-10)
    }

    pub fn verify_with_tolerance(
        &self,
        max_degree: u32,
        tolerance: f64,
    ) -> Result<RealizationReport> {
        let space_a = self.product.space_a();
        let space_b = self.product.space_b();
        match self.spec.statistics() {
            Statistics::Fermionic => {
                // fermionic verification runs on untruncated spaces
                if space_a.max_quanta() as usize != space_a.n_modes()
                    || space_b.max_quanta() as usize != space_b.n_modes()
                {
                    return Err(Error::Parameter(
                        "fermionic verification requires max_quanta = n_modes on both species"
                            .into(),
                    ));
                }
            }
            Statistics::Bosonic => {
                // headroom of one quantum keeps every checked commutator
                // below the cutoff
                if space_a.max_quanta() < max_degree + 1 || space_b.max_quanta() < max_degree + 1 {
                    return Err(Error::Parameter(format!(
                        "bosonic verification at degree {max_degree} needs cutoffs ≥ {}",
                        max_degree + 1
                    )));
                }
            }
        }

        let span = self.span(max_degree)?;
        let annihilators: Vec<SparseOperator> = (0..self.n_modes())
            .map(|mode| self.annihilation(mode))
            .collect::<Result<_>>()?;

        let mut cross_mode = 0.0f64;
        let mut structure = 0.0f64;
        let mut ladder = 0.0f64;

        for v in &span.vectors {
            let total: u32 = v.degrees.iter().sum();
            let amps = v.state.amps();
            for (alpha, a) in annihilators.iter().enumerate() {
                let a_dag = &self.creators[alpha];

                if total < max_degree {
                    for (beta, b_dag) in self.creators.iter().enumerate() {
                        let raised = b_dag.apply(amps)?;
                        let lowered = a.apply(amps)?;
                        let comm: Vec<Complex64> = a
                            .apply(&raised)?
                            .iter()
                            .zip(&b_dag.apply(&lowered)?)
                            .map(|(x, y)| x - y)
                            .collect();
                        if alpha == beta {
                            let d = v.degrees[alpha] as u64;
                            let gap = (self.spec.structure_function(d + 1)
                                - self.spec.structure_function(d))
                            .to_f64()
                            .expect("small rational");
                            let res = comm
                                .iter()
                                .zip(amps)
                                .map(|(c, x)| (c - Complex64::new(gap, 0.0) * x).norm_sqr())
                                .sum::<f64>()
                                .sqrt();
                            structure = structure.max(res);
                        } else {
                            let res = comm.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                            cross_mode = cross_mode.max(res);
                        }
                    }
                }

                // ladder relations against the degree operator of mode α
                if total < max_degree {
                    let up = a_dag.apply(amps)?;
                    let res = self.degree_ladder_residual(&span, alpha, &up, v.degrees[alpha] as i64 + 1);
                    ladder = ladder.max(res);
                }
                let down = a.apply(amps)?;
                let res = self.degree_ladder_residual(&span, alpha, &down, v.degrees[alpha] as i64 - 1);
                ladder = ladder.max(res);
            }
        }

        let nilpotency_order = (0..self.n_modes())
            .map(|mode| self.nilpotency_order(mode))
            .collect::<Result<Vec<_>>>()?;

        let pass = cross_mode <= tolerance && structure <= tolerance && ladder <= tolerance;
        Ok(RealizationReport {
            epsilon: self.spec.epsilon,
            m: self.spec.m,
            n_modes: self.n_modes(),
            d_a: self.family.d_a(),
            d_b: self.family.d_b(),
            cutoff_a: space_a.max_quanta(),
            cutoff_b: space_b.max_quanta(),
            span_degree: max_degree,
            span_dim: span.vectors.len(),
            dropped_monomials: span.dropped,
            cross_mode_residual: cross_mode,
            structure_residual: structure,
            ladder_residual: ladder,
            nilpotency_order,
            tolerance,
            pass,
        })
    }

    /// ‖N̂_α u − expected·u‖ where N̂_α = Σ_w degree_α(w) |w⟩⟨w| over the span.
    fn degree_ladder_residual(
        &self,
        span: &QuasibosonSpan,
        alpha: usize,
        u: &[Complex64],
        expected: i64,
    ) -> f64 {
        let mut n_of_u = vec![Complex64::new(0.0, 0.0); u.len()];
        for w in &span.vectors {
            let overlap: Complex64 = w
                .state
                .amps()
                .iter()
                .zip(u)
                .map(|(p, a)| p.conj() * a)
                .sum();
            let weight = overlap * Complex64::new(w.degrees[alpha] as f64, 0.0);
            for (slot, p) in n_of_u.iter_mut().zip(w.state.amps()) {
                *slot += weight * p;
            }
        }
        let scale = Complex64::new(expected as f64, 0.0);
        n_of_u
            .iter()
            .zip(u)
            .map(|(n, x)| (n - scale * x).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One orthonormal span vector with its per-mode creation degrees.
#[derive(Debug, Clone)]
pub struct SpanVector {
    pub degrees: Vec<u32>,
    pub state: StateVector,
}

/// Orthonormalized span of creation monomials up to a total degree.
#[derive(Debug, Clone)]
pub struct QuasibosonSpan {
    pub max_degree: u32,
    /// Monomials that vanished (nilpotency) and were dropped.
    pub dropped: usize,
    pub vectors: Vec<SpanVector>,
}

/// All degree vectors over `n_modes` modes with total ≤ `max_degree`, graded
/// by total then descending lexicographic, matching the Fock basis order.
fn monomial_degrees(n_modes: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn fill(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, modes_left: usize, grade: u32) {
        if modes_left == 1 {
            let mut v = prefix.clone();
            v.push(grade);
            out.push(v);
            return;
        }
        for n in (0..=grade).rev() {
            prefix.push(n);
            fill(out, prefix, modes_left - 1, grade - n);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for grade in 0..=max_degree {
        let mut prefix = Vec::with_capacity(n_modes);
        fill(&mut out, &mut prefix, n_modes, grade);
    }
    out
}

/// Residuals of the deformed-oscillator relations measured on the quasiboson
/// span, plus the observed nilpotency order per mode (`None` = no vanishing
/// up to the cutoff).
#[derive(Debug, Clone, Serialize)]
pub struct RealizationReport {
    pub epsilon: i32,
    pub m: u32,
    pub n_modes: usize,
    pub d_a: usize,
    pub d_b: usize,
    pub cutoff_a: u32,
    pub cutoff_b: u32,
    pub span_degree: u32,
    pub span_dim: usize,
    pub dropped_monomials: usize,
    pub cross_mode_residual: f64,
    pub structure_residual: f64,
    pub ladder_residual: f64,
    pub nilpotency_order: Vec<Option<u32>>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Closed form of the φ-factorial: `(n!)²·C(m, n)/mⁿ` for ε = +1 and
/// `(n!)²·C(m+n−1, n)/mⁿ` for ε = −1. Used as the independent oracle for
/// [`DeformationSpec::phi_factorial`] and the explicit-matrix vacuum moments.
pub fn phi_factorial_closed_form(spec: DeformationSpec, n: u64) -> BigRational {
    let m = u64::from(spec.m);
    let mut fact_sq = BigInt::one();
    for k in 1..=n {
        fact_sq *= BigInt::from(k) * BigInt::from(k);
    }
    let choose = if spec.epsilon == 1 {
        num::integer::binomial(BigInt::from(m), BigInt::from(n))
    } else {
        num::integer::binomial(BigInt::from(m + n - 1), BigInt::from(n))
    };
    BigRational::new(fact_sq * choose, BigInt::from(m).pow(n as u32))
}

/// Convert an exact rational to f64 (all values in range here).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::UnitarySpec;
    use approx::assert_abs_diff_eq;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn family(
        d: usize,
        m: usize,
        n_modes: usize,
        epsilon: i32,
        seed: Option<u64>,
    ) -> PhiFamily {
        let (u1, u2, blocks) = match seed {
            Some(s) => (
                UnitarySpec::Seeded(s),
                UnitarySpec::Seeded(s + 1),
                UnitarySpec::Seeded(s + 2),
            ),
            None => (
                UnitarySpec::Identity,
                UnitarySpec::Identity,
                UnitarySpec::Identity,
            ),
        };
        PhiFamily::build(d, d, m, n_modes, epsilon, &u1, &u2, &blocks).unwrap()
    }

    #[test]
    fn structure_function_values() {
        let s = DeformationSpec::new(1, 2).unwrap();
        assert_eq!(s.structure_function(0), rat(0, 1));
        assert_eq!(s.structure_function(1), rat(1, 1));
        assert_eq!(s.structure_function(2), rat(1, 1)); // 2 − εf
        assert_eq!(s.structure_function(3), rat(0, 1));

        let b = DeformationSpec::new(-1, 1).unwrap();
        assert_eq!(b.structure_function(2), rat(4, 1)); // φ(n) = n² at m = 1

        for &(eps, m) in &[(1, 2), (1, 5), (-1, 1), (-1, 3)] {
            let s = DeformationSpec::new(eps, m).unwrap();
            assert_eq!(s.structure_function(1), rat(1, 1));
            let expect = rat(2, 1) - BigRational::from(BigInt::from(eps)) * s.f();
            assert_eq!(s.structure_function(2), expect);
        }
    }

    #[test]
    fn phi_factorial_matches_closed_forms() {
        for &eps in &[1i32, -1] {
            for m in 1..=6u32 {
                let spec = DeformationSpec::new(eps, m).unwrap();
                for n in 0..=12u64 {
                    assert_eq!(
                        spec.phi_factorial(n),
                        phi_factorial_closed_form(spec, n),
                        "eps={eps} m={m} n={n}"
                    );
                }
            }
        }
        // spelled-out spot checks
        let s = DeformationSpec::new(1, 3).unwrap();
        assert_eq!(s.phi_factorial(2), rat(4, 3));
        let b = DeformationSpec::new(-1, 2).unwrap();
        assert_eq!(b.phi_factorial(2), rat(3, 1));
        let z = DeformationSpec::new(1, 2).unwrap();
        assert_eq!(z.phi_factorial(3), rat(0, 1));
    }

    #[test]
    fn recurrence_holds_exactly() {
        for &eps in &[1i32, -1] {
            for m in 1..=10u32 {
                let spec = DeformationSpec::new(eps, m).unwrap();
                assert!(spec.check_recurrence(10), "eps={eps} m={m}");
            }
        }
    }

    #[test]
    fn recurrence_rejects_tampered_phi() {
        let spec = DeformationSpec::new(-1, 3).unwrap();
        let tampered = move |k: u64| {
            let mut v = spec.structure_function(k);
            if k == 3 {
                v += BigRational::one();
            }
            v
        };
        assert!(!recurrence_holds(tampered, 10));
    }

    #[test]
    fn chi_ratio_saturates_lower_bound_for_fermions() {
        for m in 2..=10u32 {
            let spec = DeformationSpec::new(1, m).unwrap();
            for n in 1..=u64::from(m) {
                let ratio = spec.chi_ratio(n).unwrap();
                let lower = BigRational::one() - rat(n as i64, m as i64);
                let upper = BigRational::one() - rat(1, m as i64);
                assert_eq!(ratio, lower, "m={m} N={n}");
                assert!(ratio <= upper || n as i64 == m as i64);
            }
        }
        // spelled-out values
        let s3 = DeformationSpec::new(1, 3).unwrap();
        assert_eq!(s3.chi_ratio(1).unwrap(), rat(2, 3));
        assert_eq!(s3.chi_ratio(2).unwrap(), rat(1, 3));
        let s2 = DeformationSpec::new(1, 2).unwrap();
        assert_eq!(s2.chi_ratio(2).unwrap(), rat(0, 1));
    }

    #[test]
    fn single_creation_reproduces_coefficients() {
        let fam = family(2, 2, 1, 1, None);
        let system = QuasibosonSystem::new(fam, 2, 2).unwrap();
        let state = system.creation_power_vacuum(0, 1).unwrap();
        let matrix = state.bipartite_reshape().unwrap();
        // |Ψ⟩ = (|a_0 b_0⟩ + |a_1 b_1⟩)/√2 in the one-quantum sector
        let space = system.product().space_a();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let idx = |occ: &[u8]| space.index_of(occ).unwrap();
        assert_abs_diff_eq!(matrix[(idx(&[1, 0]), idx(&[1, 0]))].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(matrix[(idx(&[0, 1]), idx(&[0, 1]))].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_moments_match_phi_factorials() {
        // ⟨0|Aⁿ(A†)ⁿ|0⟩ = φ(n)! wherever the cutoff is non-binding
        for &(eps, m) in &[(1i32, 2usize), (1, 3), (-1, 2), (-1, 3)] {
            let spec = DeformationSpec::new(eps, m as u32).unwrap();
            let cutoff = if eps == 1 { m as u32 } else { 5 };
            let fam = family(m, m, 1, eps, Some(40 + m as u64));
            let system = QuasibosonSystem::new(fam, cutoff, cutoff).unwrap();
            let top = if eps == 1 { m as u32 } else { 4 };
            for n in 0..=top {
                let measured = system.vacuum_moment(0, n).unwrap();
                let expect = rational_to_f64(&spec.phi_factorial(u64::from(n)));
                assert_abs_diff_eq!(measured, expect, epsilon = 1e-10);
            }
        }
        // ε = +1, m = 2: ⟨0|A²(A†)²|0⟩ = φ(2)! = 1
        let fam = family(2, 2, 1, 1, None);
        let system = QuasibosonSystem::new(fam, 2, 2).unwrap();
        assert_abs_diff_eq!(system.vacuum_moment(0, 2).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(system.vacuum_moment(0, 1).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn deviation_operator_properties() {
        let fam = family(4, 2, 2, 1, Some(17));
        let system = QuasibosonSystem::new(fam, 4, 4).unwrap();
        let delta = system.deviation(0, 0).unwrap();

        // normal-ordered bilinears annihilate the vacuum
        let vac = system.product().vacuum();
        let out = delta.apply(vac.amps()).unwrap();
        assert!(out.iter().all(|x| x.norm() < 1e-15));

        // Δ_{αα} on A†_α|0⟩ = (2/m)·A†_α|0⟩
        let one = system.creation_power_vacuum(0, 1).unwrap();
        let lhs = delta.apply(one.amps()).unwrap();
        for (l, x) in lhs.iter().zip(one.amps()) {
            assert_abs_diff_eq!((l - x * Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }

        // [A_α, A†_β] = δ_{αβ} − ε·Δ_{αβ} as an operator identity on the
        // untruncated fermionic space
        for alpha in 0..2 {
            for beta in 0..2 {
                let a = system.annihilation(alpha).unwrap();
                let b_dag = system.creation(beta).unwrap();
                let comm = SparseOperator::commutator(&a, b_dag, false).unwrap();
                let mut expect = system.deviation(alpha, beta).unwrap().scale(Complex64::new(-1.0, 0.0));
                if alpha == beta {
                    expect = expect
                        .add(&SparseOperator::identity(system.product().dim()))
                        .unwrap();
                }
                assert!(
                    comm.sub(&expect).unwrap().norm_max() < 1e-12,
                    "alpha={alpha} beta={beta}"
                );
            }
        }
    }

    #[test]
    fn cross_mode_commutator_vanishes_on_three_quanta_span() {
        let fam = family(4, 2, 2, 1, Some(23));
        let system = QuasibosonSystem::new(fam, 4, 4).unwrap();
        let span = system.span(3).unwrap();
        let a0 = system.annihilation(0).unwrap();
        let c1 = system.creation(1).unwrap();
        for v in &span.vectors {
            if v.degrees.iter().sum::<u32>() > 2 {
                continue;
            }
            let up = c1.apply(v.state.amps()).unwrap();
            let down = a0.apply(v.state.amps()).unwrap();
            let comm: Vec<Complex64> = a0
                .apply(&up)
                .unwrap()
                .iter()
                .zip(&c1.apply(&down).unwrap())
                .map(|(x, y)| x - y)
                .collect();
            let norm = comm.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert!(norm < 1e-12, "degrees {:?}: {norm}", v.degrees);
        }
    }

    #[test]
    fn span_dimensions() {
        // degree 0 → just the vacuum
        let fam = family(2, 2, 1, 1, None);
        let system = QuasibosonSystem::new(fam, 2, 2).unwrap();
        let span0 = system.span(0).unwrap();
        assert_eq!(span0.vectors.len(), 1);
        assert_eq!(span0.vectors[0].degrees, vec![0]);

        // one fermionic mode, m = 2: the degree-3 monomial vanishes
        let fam = family(3, 2, 1, 1, Some(31));
        let system = QuasibosonSystem::new(fam, 3, 3).unwrap();
        let span = system.span(3).unwrap();
        assert_eq!(span.vectors.len(), 3);
        assert_eq!(span.dropped, 1);

        // two fermionic modes, m = 2, degree ≤ 2: all six monomials survive
        let fam = family(4, 2, 2, 1, Some(32));
        let system = QuasibosonSystem::new(fam, 4, 4).unwrap();
        let span = system.span(2).unwrap();
        assert_eq!(span.vectors.len(), 6);
        assert_eq!(span.dropped, 0);
        for (i, v) in span.vectors.iter().enumerate() {
            for (j, w) in span.vectors.iter().enumerate() {
                let overlap = v.state.inner(&w.state).norm();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(overlap, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn span_rejects_undersized_cutoff() {
        let fam = family(2, 2, 1, -1, None);
        let system = QuasibosonSystem::new(fam, 2, 2).unwrap();
        assert!(system.span(3).is_err());
    }

    #[test]
    fn verify_fermionic_realization() {
        let fam = family(4, 2, 2, 1, Some(7));
        let system = QuasibosonSystem::new(fam, 4, 4).unwrap();
        let report = system.verify(3).unwrap();
        assert!(report.pass, "residuals: {report:?}");
        assert!(report.cross_mode_residual < 1e-10);
        assert!(report.structure_residual < 1e-10);
        assert!(report.ladder_residual < 1e-10);
        assert_eq!(report.nilpotency_order, vec![Some(3), Some(3)]);
        assert_eq!(report.span_dim, 8);
    }

    #[test]
    fn verify_bosonic_realization() {
        let fam = family(4, 2, 2, -1, Some(8));
        let system = QuasibosonSystem::new(fam, 6, 6).unwrap();
        let report = system.verify(3).unwrap();
        assert!(report.pass, "residuals: {report:?}");
        assert_eq!(report.nilpotency_order, vec![None, None]);
        assert_eq!(report.span_dim, 10);
    }

    #[test]
    fn verify_flags_broken_family() {
        // matrices violating the cubic condition give a structure-function
        // residual well above tolerance
        let s1 = 0.9f64;
        let s2 = (1.0 - s1 * s1).sqrt();
        let mat = DMatrix::from_fn(4, 4, |i, j| {
            if i == j && i < 2 {
                Complex64::new(if i == 0 { s1 } else { s2 }, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let fam = PhiFamily::from_matrices(1, 2, vec![mat]).unwrap();
        let system = QuasibosonSystem::new(fam, 4, 4).unwrap();
        let report = system.verify(2).unwrap();
        assert!(!report.pass);
        assert!(report.structure_residual > 1e-3);
    }

    #[test]
    fn structure_function_approaches_pure_boson_at_large_m() {
        // φ(N)/N → 1 as m grows at fixed N, deviation bounded by N²/m
        for &n in &[2u64, 3, 4] {
            let mut last = f64::INFINITY;
            for &m in &[10u32, 100, 1000] {
                let spec = DeformationSpec::new(1, m).unwrap();
                let phi = rational_to_f64(&spec.structure_function(n));
                let dev = (phi - n as f64).abs();
                assert!(dev <= (n * n) as f64 / m as f64);
                assert!(dev < last);
                last = dev;
            }
        }
    }
}
