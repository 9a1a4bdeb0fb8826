//! Occupation-number Fock spaces for a single constituent species and sparse
//! second-quantized operators on them.
//!
//! A [`FockSpace`] enumerates every occupation vector of `n_modes` modes with
//! total quanta ≤ `max_quanta`, graded by total quanta and ordered within a
//! grade by descending lexicographic occupation, so the vacuum is always basis
//! element 0. Fermionic creation operators carry Jordan–Wigner signs counting
//! occupied modes of smaller index; bosonic ones carry the usual √(n+1)
//! factors and are cut off at the total-quanta bound.
//!
//! Two species combine into a [`ProductSpace`] with row-major index fusing
//! `(i_a, i_b) ↦ i_a·dim_b + i_b`. Operators of one species act factor-wise:
//! b-operators carry no sign across the a-factor.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Exchange statistics of one constituent species.
///
/// The unified sign convention is ε = +1 for fermions and ε = −1 for bosons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistics {
    Fermionic,
    Bosonic,
}

impl Statistics {
    pub fn epsilon(self) -> i32 {
        match self {
            Statistics::Fermionic => 1,
            Statistics::Bosonic => -1,
        }
    }

    pub fn from_epsilon(epsilon: i32) -> Result<Self> {
        match epsilon {
            1 => Ok(Statistics::Fermionic),
            -1 => Ok(Statistics::Bosonic),
            other => Err(Error::Parameter(format!(
                "epsilon must be +1 (fermionic) or -1 (bosonic), got {other}"
            ))),
        }
    }

    /// Largest occupation a single mode may carry under a total cutoff.
    fn mode_cap(self, max_quanta: u32) -> u32 {
        match self {
            Statistics::Fermionic => 1,
            Statistics::Bosonic => max_quanta,
        }
    }
}

/// Truncated Fock space of one species: ordered occupation-number basis with a
/// hard total-quanta cutoff and an exact config → index lookup.
#[derive(Debug, Clone)]
pub struct FockSpace {
    statistics: Statistics,
    n_modes: usize,
    max_quanta: u32,
    basis: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockSpace {
    /// Enumerate the basis, graded by total quanta then descending
    /// lexicographic within a grade. Fermionic spaces require
    /// `max_quanta ≤ n_modes`.
    pub fn new(statistics: Statistics, n_modes: usize, max_quanta: u32) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Parameter("n_modes must be at least 1".into()));
        }
        if statistics == Statistics::Fermionic && max_quanta as usize > n_modes {
            return Err(Error::Parameter(format!(
                "fermionic cutoff {max_quanta} exceeds mode count {n_modes}"
            )));
        }
        let mut basis = Vec::new();
        let cap = statistics.mode_cap(max_quanta);
        for grade in 0..=max_quanta {
            let mut prefix = Vec::with_capacity(n_modes);
            push_grade(&mut basis, &mut prefix, n_modes, grade, cap);
        }
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, occ)| (occ.clone(), i))
            .collect();
        Ok(FockSpace {
            statistics,
            n_modes,
            max_quanta,
            basis,
            index,
        })
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_quanta(&self) -> u32 {
        self.max_quanta
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u8>] {
        &self.basis
    }

    pub fn occupation(&self, state: usize) -> &[u8] {
        &self.basis[state]
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn total_quanta(&self, state: usize) -> u32 {
        self.basis[state].iter().map(|&n| n as u32).sum()
    }

    /// Action of the creation operator for `mode` on basis state `state`:
    /// target index and real amplitude, or `None` when the result vanishes
    /// (Pauli exclusion or total-quanta cutoff).
    pub fn raise(&self, state: usize, mode: usize) -> Option<(usize, f64)> {
        let occ = &self.basis[state];
        if self.total_quanta(state) + 1 > self.max_quanta {
            return None;
        }
        match self.statistics {
            Statistics::Fermionic => {
                if occ[mode] == 1 {
                    return None;
                }
                let below = occ[..mode].iter().filter(|&&n| n == 1).count();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                let mut new = occ.clone();
                new[mode] = 1;
                Some((self.index[&new], sign))
            }
            Statistics::Bosonic => {
                let mut new = occ.clone();
                new[mode] += 1;
                Some((self.index[&new], f64::from(occ[mode] as u32 + 1).sqrt()))
            }
        }
    }

    /// Action of the annihilation operator for `mode` on basis state `state`
    /// (conjugate of [`FockSpace::raise`]).
    pub fn lower(&self, state: usize, mode: usize) -> Option<(usize, f64)> {
        let occ = &self.basis[state];
        if occ[mode] == 0 {
            return None;
        }
        match self.statistics {
            Statistics::Fermionic => {
                let below = occ[..mode].iter().filter(|&&n| n == 1).count();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                let mut new = occ.clone();
                new[mode] = 0;
                Some((self.index[&new], sign))
            }
            Statistics::Bosonic => {
                let mut new = occ.clone();
                new[mode] -= 1;
                Some((self.index[&new], f64::from(occ[mode] as u32).sqrt()))
            }
        }
    }

    /// Sparse creation operator a†_mode on this space.
    pub fn creation(&self, mode: usize) -> Result<SparseOperator> {
        if mode >= self.n_modes {
            return Err(Error::Parameter(format!(
                "mode {mode} out of range for {} modes",
                self.n_modes
            )));
        }
        let entries = (0..self.dim())
            .filter_map(|s| {
                self.raise(s, mode)
                    .map(|(t, amp)| (t, s, Complex64::new(amp, 0.0)))
            })
            .collect();
        SparseOperator::new(self.dim(), self.dim(), entries)
    }

    /// Sparse annihilation operator a_mode, the conjugate transpose of
    /// [`FockSpace::creation`].
    pub fn annihilation(&self, mode: usize) -> Result<SparseOperator> {
        Ok(self.creation(mode)?.dagger())
    }

    /// Debug dump: statistics, dimensions and the ordered basis.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "statistics": match self.statistics {
                Statistics::Fermionic => "fermionic",
                Statistics::Bosonic => "bosonic",
            },
            "n_modes": self.n_modes,
            "max_quanta": self.max_quanta,
            "dim": self.dim(),
            "basis": self.basis,
        })
    }
}

/// Append all occupation vectors of exactly `grade` quanta over `modes_left`
/// modes, per-mode occupation ≤ `cap`, in descending lexicographic order.
fn push_grade(out: &mut Vec<Vec<u8>>, prefix: &mut Vec<u8>, modes_left: usize, grade: u32, cap: u32) {
    if modes_left == 1 {
        if grade <= cap {
            let mut occ = prefix.clone();
            occ.push(grade as u8);
            out.push(occ);
        }
        return;
    }
    let top = grade.min(cap);
    for n in (0..=top).rev() {
        prefix.push(n as u8);
        push_grade(out, prefix, modes_left - 1, grade - n, cap);
        prefix.pop();
    }
}

/// Linear operator stored as canonicalized `(row, col, value)` triplets,
/// sorted row-major with no duplicates and no explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim_out: usize,
    dim_in: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    pub fn new(
        dim_out: usize,
        dim_in: usize,
        entries: Vec<(usize, usize, Complex64)>,
    ) -> Result<Self> {
        if dim_out == 0 || dim_in == 0 {
            return Err(Error::Parameter("operator dimensions must be positive".into()));
        }
        for &(r, c, _) in &entries {
            if r >= dim_out || c >= dim_in {
                return Err(Error::Parameter(format!(
                    "entry ({r}, {c}) out of bounds for {dim_out}x{dim_in} operator"
                )));
            }
        }
        let mut op = SparseOperator {
            dim_out,
            dim_in,
            entries,
        };
        op.canonicalize();
        Ok(op)
    }

    pub fn zero(dim_out: usize, dim_in: usize) -> Self {
        SparseOperator {
            dim_out,
            dim_in,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseOperator {
            dim_out: dim,
            dim_in: dim,
            entries: (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect(),
        }
    }

    fn canonicalize(&mut self) {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != Complex64::new(0.0, 0.0));
        self.entries = merged;
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        SparseOperator::new(self.dim_in, self.dim_out, entries).expect("transposed bounds")
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, v * factor))
            .collect();
        SparseOperator::new(self.dim_out, self.dim_in, entries).expect("same bounds")
    }

    pub fn add(&self, other: &SparseOperator) -> Result<Self> {
        if self.dim_out != other.dim_out || self.dim_in != other.dim_in {
            return Err(Error::Parameter("operator shape mismatch in add".into()));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        SparseOperator::new(self.dim_out, self.dim_in, entries)
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &SparseOperator) -> Result<Self> {
        if self.dim_in != rhs.dim_out {
            return Err(Error::Parameter(format!(
                "cannot multiply {}x{} by {}x{}",
                self.dim_out, self.dim_in, rhs.dim_out, rhs.dim_in
            )));
        }
        let row_start = rhs.row_offsets();
        let mut acc: HashMap<(usize, usize), Complex64> = HashMap::new();
        for &(i, k, v) in &self.entries {
            for &(_, j, w) in &rhs.entries[row_start[k]..row_start[k + 1]] {
                *acc.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += v * w;
            }
        }
        let entries = acc.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        SparseOperator::new(self.dim_out, rhs.dim_in, entries)
    }

    /// Offsets of each row's entry range (entries are sorted row-major).
    fn row_offsets(&self) -> Vec<usize> {
        let mut offsets = vec![0usize; self.dim_out + 1];
        for &(r, _, _) in &self.entries {
            offsets[r + 1] += 1;
        }
        for r in 0..self.dim_out {
            offsets[r + 1] += offsets[r];
        }
        offsets
    }

    /// Apply to a dense vector.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim_in {
            return Err(Error::Parameter(format!(
                "vector length {} does not match operator input dimension {}",
                v.len(),
                self.dim_in
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim_out];
        for &(r, c, w) in &self.entries {
            out[r] += w * v[c];
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other` with row-major index fusion.
    pub fn kron(&self, other: &SparseOperator) -> Self {
        let mut entries = Vec::with_capacity(self.nnz() * other.nnz());
        for &(ra, ca, va) in &self.entries {
            for &(rb, cb, vb) in &other.entries {
                entries.push((ra * other.dim_out + rb, ca * other.dim_in + cb, va * vb));
            }
        }
        SparseOperator::new(self.dim_out * other.dim_out, self.dim_in * other.dim_in, entries)
            .expect("kron bounds")
    }

    /// Commutator `xy − yx` (`anti = false`) or anticommutator `xy + yx`
    /// (`anti = true`).
    pub fn commutator(x: &SparseOperator, y: &SparseOperator, anti: bool) -> Result<Self> {
        if x.dim_out != x.dim_in || y.dim_out != y.dim_in || x.dim_out != y.dim_out {
            return Err(Error::Parameter(
                "commutator requires square operators of equal dimension".into(),
            ));
        }
        let xy = x.matmul(y)?;
        let yx = y.matmul(x)?;
        if anti {
            xy.add(&yx)
        } else {
            xy.sub(&yx)
        }
    }

    /// Largest entry magnitude.
    pub fn norm_max(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, _, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim_out, self.dim_in);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Debug dump: dimensions plus `[row, col, re, im]` quadruplets.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "dim_out": self.dim_out,
            "dim_in": self.dim_in,
            "entries": self.entries.iter()
                .map(|&(r, c, v)| json!([r, c, v.re, v.im]))
                .collect::<Vec<_>>(),
        })
    }
}

/// Tensor product of two constituent Fock spaces with row-major index fusion.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    a: FockSpace,
    b: FockSpace,
}

impl ProductSpace {
    pub fn new(a: FockSpace, b: FockSpace) -> Self {
        ProductSpace { a, b }
    }

    pub fn space_a(&self) -> &FockSpace {
        &self.a
    }

    pub fn space_b(&self) -> &FockSpace {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.dim() * self.b.dim()
    }

    pub fn fuse(&self, i_a: usize, i_b: usize) -> usize {
        i_a * self.b.dim() + i_b
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.b.dim(), index % self.b.dim())
    }

    /// |0⟩ ⊗ |0⟩ as a product-space state vector.
    pub fn vacuum(&self) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.dim()];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector::new_product(self.a.dim(), self.b.dim(), amps).expect("vacuum length")
    }

    /// Lift an a-species operator to the product space (`op ⊗ 1`).
    pub fn lift_a(&self, op: &SparseOperator) -> Result<SparseOperator> {
        if op.dim_out() != self.a.dim() || op.dim_in() != self.a.dim() {
            return Err(Error::Parameter("operator does not act on species a".into()));
        }
        Ok(op.kron(&SparseOperator::identity(self.b.dim())))
    }

    /// Lift a b-species operator to the product space (`1 ⊗ op`); no sign is
    /// carried across the a-factor.
    pub fn lift_b(&self, op: &SparseOperator) -> Result<SparseOperator> {
        if op.dim_out() != self.b.dim() || op.dim_in() != self.b.dim() {
            return Err(Error::Parameter("operator does not act on species b".into()));
        }
        Ok(SparseOperator::identity(self.a.dim()).kron(op))
    }
}

/// Shape tag of a state vector: a single space or a declared bipartite product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateShape {
    Single { dim: usize },
    Product { dim_a: usize, dim_b: usize },
}

impl StateShape {
    pub fn dim(&self) -> usize {
        match *self {
            StateShape::Single { dim } => dim,
            StateShape::Product { dim_a, dim_b } => dim_a * dim_b,
        }
    }
}

/// Dense complex amplitude vector over a declared space.
#[derive(Debug, Clone)]
pub struct StateVector {
    shape: StateShape,
    amps: Vec<Complex64>,
    normalized: bool,
}

impl StateVector {
    pub fn new_single(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Parameter("state vector must be non-empty".into()));
        }
        let shape = StateShape::Single { dim: amps.len() };
        Ok(Self::with_shape(shape, amps))
    }

    pub fn new_product(dim_a: usize, dim_b: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != dim_a * dim_b {
            return Err(Error::Parameter(format!(
                "amplitude length {} does not match product dimension {}x{}",
                amps.len(),
                dim_a,
                dim_b
            )));
        }
        let shape = StateShape::Product { dim_a, dim_b };
        Ok(Self::with_shape(shape, amps))
    }

    fn with_shape(shape: StateShape, amps: Vec<Complex64>) -> Self {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector {
            shape,
            amps,
            normalized: (norm - 1.0).abs() <= 1e-12,
        }
    }

    pub fn shape(&self) -> StateShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::with_shape(self.shape, self.amps.iter().map(|a| a * factor).collect())
    }

    /// Rescale to unit norm. Errors on the zero vector.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Amplitudes of a product-space state as a dim_a × dim_b matrix,
    /// `M[i][j] = ⟨i_a, j_b | ψ⟩`. Errors on non-product shapes.
    pub fn bipartite_reshape(&self) -> Result<DMatrix<Complex64>> {
        match self.shape {
            StateShape::Single { .. } => Err(Error::Parameter(
                "bipartite reshape requires a product-space state".into(),
            )),
            StateShape::Product { dim_a, dim_b } => Ok(DMatrix::from_fn(dim_a, dim_b, |i, j| {
                self.amps[i * dim_b + j]
            })),
        }
    }

    /// Inverse of [`StateVector::bipartite_reshape`].
    pub fn from_bipartite_matrix(m: &DMatrix<Complex64>) -> Result<Self> {
        let (dim_a, dim_b) = m.shape();
        let mut amps = Vec::with_capacity(dim_a * dim_b);
        for i in 0..dim_a {
            for j in 0..dim_b {
                amps.push(m[(i, j)]);
            }
        }
        StateVector::new_product(dim_a, dim_b, amps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fermionic_two_modes_basis_order() {
        let space = FockSpace::new(Statistics::Fermionic, 2, 2).unwrap();
        let expected: Vec<Vec<u8>> = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]];
        assert_eq!(space.basis(), expected.as_slice());
        assert_eq!(space.dim(), 4);
    }

    #[test]
    fn bosonic_single_mode_ladder() {
        let space = FockSpace::new(Statistics::Bosonic, 1, 3).unwrap();
        assert_eq!(space.dim(), 4);
        let adag = space.creation(0).unwrap();
        // a† on |2⟩ = √3 |3⟩
        let mut v = vec![c(0.0); 4];
        v[2] = c(1.0);
        let out = adag.apply(&v).unwrap();
        assert_abs_diff_eq!(out[3].re, 3f64.sqrt(), epsilon = 1e-15);
        // cutoff: a† annihilates |3⟩
        let mut top = vec![c(0.0); 4];
        top[3] = c(1.0);
        assert!(adag.apply(&top).unwrap().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn bosonic_two_modes_dimension() {
        let space = FockSpace::new(Statistics::Bosonic, 2, 2).unwrap();
        // vacuum + 2 singles + 3 doubles
        assert_eq!(space.dim(), 6);
        assert_eq!(space.occupation(0), &[0, 0]);
    }

    #[test]
    fn index_round_trips() {
        let space = FockSpace::new(Statistics::Bosonic, 3, 3).unwrap();
        for i in 0..space.dim() {
            assert_eq!(space.index_of(space.occupation(i)), Some(i));
        }
    }

    #[test]
    fn fermionic_sign_rule() {
        let space = FockSpace::new(Statistics::Fermionic, 2, 2).unwrap();
        let i10 = space.index_of(&[1, 0]).unwrap();
        let i11 = space.index_of(&[1, 1]).unwrap();
        // a†_1 |10⟩ = −|11⟩: one occupied mode below
        assert_eq!(space.raise(i10, 1), Some((i11, -1.0)));
        // Pauli exclusion: a†_0 |10⟩ = 0
        assert_eq!(space.raise(i10, 0), None);
    }

    #[test]
    fn invalid_dimensions_rejected() {
        assert!(FockSpace::new(Statistics::Fermionic, 2, 3).is_err());
        assert!(FockSpace::new(Statistics::Bosonic, 0, 2).is_err());
        let space = FockSpace::new(Statistics::Bosonic, 2, 2).unwrap();
        assert!(space.creation(2).is_err());
    }

    #[test]
    fn car_holds_on_untruncated_fermionic_space() {
        let space = FockSpace::new(Statistics::Fermionic, 3, 3).unwrap();
        let id = SparseOperator::identity(space.dim());
        for mu in 0..3 {
            for nu in 0..3 {
                let a = space.annihilation(mu).unwrap();
                let adag = space.creation(nu).unwrap();
                let anti = SparseOperator::commutator(&a, &adag, true).unwrap();
                let expect = if mu == nu {
                    id.clone()
                } else {
                    SparseOperator::zero(space.dim(), space.dim())
                };
                assert!(anti.sub(&expect).unwrap().norm_max() < 1e-14);
                // {a†_μ, a†_ν} = 0
                let cdag = space.creation(mu).unwrap();
                let anti2 = SparseOperator::commutator(&cdag, &adag, true).unwrap();
                assert!(anti2.norm_max() < 1e-14);
            }
        }
    }

    #[test]
    fn ccr_holds_below_cutoff_grade() {
        let space = FockSpace::new(Statistics::Bosonic, 2, 4).unwrap();
        for mu in 0..2 {
            for nu in 0..2 {
                let a = space.annihilation(mu).unwrap();
                let adag = space.creation(nu).unwrap();
                let comm = SparseOperator::commutator(&a, &adag, false).unwrap();
                let delta = if mu == nu { 1.0 } else { 0.0 };
                for s in 0..space.dim() {
                    if space.total_quanta(s) + 1 > space.max_quanta() {
                        continue;
                    }
                    let mut v = vec![c(0.0); space.dim()];
                    v[s] = c(1.0);
                    let out = comm.apply(&v).unwrap();
                    for (t, x) in out.iter().enumerate() {
                        let expect = if t == s { delta } else { 0.0 };
                        assert_abs_diff_eq!(x.re, expect, epsilon = 1e-14);
                        assert_abs_diff_eq!(x.im, 0.0, epsilon = 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn creation_is_adjoint_of_annihilation() {
        let space = FockSpace::new(Statistics::Bosonic, 2, 3).unwrap();
        for mode in 0..2 {
            let adag = space.creation(mode).unwrap();
            let a = space.annihilation(mode).unwrap();
            assert!(adag.sub(&a.dagger()).unwrap().norm_max() == 0.0);
        }
    }

    #[test]
    fn reshape_round_trip_and_examples() {
        // |0⟩⊗|0⟩ → single 1 at (0, 0)
        let mut amps = vec![c(0.0); 4];
        amps[0] = c(1.0);
        let sv = StateVector::new_product(2, 2, amps).unwrap();
        let m = sv.bipartite_reshape().unwrap();
        assert_eq!(m[(0, 0)], c(1.0));

        // (|0⟩⊗|1⟩ + |1⟩⊗|0⟩)/√2 → antidiagonal entries 1/√2
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new_product(2, 2, vec![c(0.0), c(r), c(r), c(0.0)]).unwrap();
        let m = bell.bipartite_reshape().unwrap();
        assert_abs_diff_eq!(m[(0, 1)].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 0)].re, r, epsilon = 1e-15);
        assert_eq!(m[(0, 0)], c(0.0));

        let back = StateVector::from_bipartite_matrix(&m).unwrap();
        assert_eq!(back.amps(), bell.amps());
        assert!(bell.is_normalized());
    }

    #[test]
    fn single_shape_rejects_reshape() {
        let sv = StateVector::new_single(vec![c(1.0), c(0.0)]).unwrap();
        assert!(sv.bipartite_reshape().is_err());
    }

    #[test]
    fn sparse_operator_canonicalization() {
        let op = SparseOperator::new(
            2,
            2,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(0.0))],
        )
        .unwrap();
        assert_eq!(op.entries(), &[(0, 1, c(3.0))]);
        assert!(SparseOperator::new(2, 2, vec![(2, 0, c(1.0))]).is_err());
    }

    #[test]
    fn debug_json_dumps() {
        let space = FockSpace::new(Statistics::Fermionic, 2, 2).unwrap();
        let dump = space.to_json();
        assert_eq!(dump["statistics"], "fermionic");
        assert_eq!(dump["dim"], 4);
        assert_eq!(dump["basis"][1], serde_json::json!([1, 0]));

        let op = space.creation(1).unwrap();
        let dump = op.to_json();
        assert_eq!(dump["dim_out"], 4);
        assert_eq!(dump["entries"].as_array().unwrap().len(), op.nnz());
    }

    #[test]
    fn kron_matches_dense() {
        let x = SparseOperator::new(2, 2, vec![(0, 1, c(1.0)), (1, 0, c(2.0))]).unwrap();
        let y = SparseOperator::new(2, 2, vec![(0, 0, c(3.0)), (1, 1, c(-1.0))]).unwrap();
        let k = x.kron(&y).to_dense();
        let xd = x.to_dense();
        let yd = y.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                let expect = xd[(i / 2, j / 2)] * yd[(i % 2, j % 2)];
                assert_eq!(k[(i, j)], expect);
            }
        }
    }
}
