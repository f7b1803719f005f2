//! Dense complex operator algebra.
//!
//! Everything here works on small dense matrices: the 4×4 two-qubit space,
//! its 16×16 superoperators, and the occasional larger operator used by the
//! reaction-coordinate backend. Operators are stored row-major.
//!
//! Vectorization convention: an operator `X` is flattened by stacking its
//! columns, so element `(i, j)` lands at position `j * dim + i`. Under this
//! convention `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. The HEOM backend stores its
//! auxiliary density operators in the same column-stacked layout.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity tolerance used when validating density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance used when validating density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Slack allowed below zero for the smallest eigenvalue of a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-6;
/// Default eigenvalue floor of [`hermitian_log`].
pub const LOG_FLOOR: f64 = 1e-14;

/// A square complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexOperator {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexOperator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexOperator {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                op.data[i * dim + j] = f(i, j);
            }
        }
        op
    }

    /// Builds an operator from row-major entries.
    pub fn from_row_major(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::arg(format!(
                "expected {} entries for a {dim}x{dim} operator, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::arg("operator entries must be finite"));
        }
        Ok(Self { dim, data: entries })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { ZERO })
    }

    /// Reassembles an operator from its column-stacked vectorization.
    pub fn from_column_stacked(dim: usize, v: &[C64]) -> Self {
        assert_eq!(v.len(), dim * dim);
        Self::from_fn(dim, |i, j| v[j * dim + i])
    }

    pub fn column_stacked(&self) -> Vec<C64> {
        let d = self.dim;
        let mut v = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                v[j * d + i] = self[(i, j)];
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matmul");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * d..(k + 1) * d];
                let dst = &mut out.data[i * d..(i + 1) * d];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `[self, rhs]`
    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// `{self, rhs}`
    pub fn anticommutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) + &rhs.matmul(self)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * rhs[(i % b, j % b)])
    }

    /// `Tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C64 {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.data[i * d + k] * rhs.data[k * d + i];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `(A + A†) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn to_faer(&self) -> Mat<C64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, C64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexOperator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexOperator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: Self) -> ComplexOperator {
        assert_eq!(self.dim, rhs.dim);
        ComplexOperator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: Self) -> ComplexOperator {
        assert_eq!(self.dim, rhs.dim);
        ComplexOperator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: Self) -> ComplexOperator {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexOperator {
    type Output = ComplexOperator;
    fn neg(self) -> ComplexOperator {
        self.scale(-ONE)
    }
}

impl AddAssign<&ComplexOperator> for ComplexOperator {
    fn add_assign(&mut self, rhs: &ComplexOperator) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

fn pauli_2x2(axis: Axis) -> ComplexOperator {
    match axis {
        Axis::X => ComplexOperator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        Axis::Y => ComplexOperator::from_fn(2, |i, j| match (i, j) {
            (0, 1) => -I,
            (1, 0) => I,
            _ => ZERO,
        }),
        Axis::Z => ComplexOperator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
    }
}

/// Pauli matrix on `site` (1-based) of an `n_sites`-qubit register, with
/// identities elsewhere. Site 1 is the most significant tensor factor, so
/// `|00⟩` is basis index 0 and `|11⟩` is the last.
pub fn pauli(axis: Axis, site: usize, n_sites: usize) -> Result<ComplexOperator> {
    if n_sites == 0 || site == 0 || site > n_sites {
        return Err(Error::arg(format!(
            "pauli site {site} out of range for {n_sites} site(s)"
        )));
    }
    let id = ComplexOperator::identity(2);
    let mut op: Option<ComplexOperator> = None;
    for s in 1..=n_sites {
        let factor = if s == site { pauli_2x2(axis) } else { id.clone() };
        op = Some(match op {
            None => factor,
            Some(acc) => acc.kron(&factor),
        });
    }
    Ok(op.expect("n_sites >= 1"))
}

/// Two-qubit Pauli helper for internal use where the arguments are known
/// to be in range.
pub(crate) fn sigma(axis: Axis, site: usize) -> ComplexOperator {
    pauli(axis, site, 2).expect("site is 1 or 2")
}

/// Eigen-decomposition of a Hermitian operator. Eigenvalues are returned in
/// nondecreasing order; eigenvectors are the columns of the second value.
pub fn hermitian_eigen(op: &ComplexOperator) -> Result<(Vec<f64>, ComplexOperator)> {
    let tol = HERMITIAN_TOL * op.max_abs().max(1.0);
    if !op.is_hermitian(tol) {
        return Err(Error::arg(format!(
            "operator is not Hermitian (deviation {:e})",
            op.hermiticity_error()
        )));
    }
    let m = op.hermitian_part().to_faer();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let values: Vec<f64> = (0..op.dim()).map(|i| s[i].re).collect();
    Ok((values, ComplexOperator::from_faer(evd.U())))
}

/// Eigenvalues of a Hermitian operator in nondecreasing order.
pub fn hermitian_eigenvalues(op: &ComplexOperator) -> Result<Vec<f64>> {
    hermitian_eigen(op).map(|(v, _)| v)
}

/// Applies a real function to the spectrum of a Hermitian operator.
pub fn hermitian_function(op: &ComplexOperator, f: impl Fn(f64) -> f64) -> Result<ComplexOperator> {
    let (vals, vecs) = hermitian_eigen(op)?;
    let d = op.dim();
    Ok(ComplexOperator::from_fn(d, |i, j| {
        (0..d)
            .map(|k| vecs[(i, k)] * f(vals[k]) * vecs[(j, k)].conj())
            .sum()
    }))
}

/// `e^{−iHt} ρ e^{iHt}` at each time, through the eigen-decomposition of `H`.
pub fn unitary_evolution(h: &ComplexOperator, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    if h.dim() != rho0.dim() {
        return Err(Error::arg("Hamiltonian and state differ in dimension"));
    }
    let (vals, vecs) = hermitian_eigen(h)?;
    let d = h.dim();
    let r = vecs.dagger().matmul(&rho0.as_op().matmul(&vecs));
    times
        .iter()
        .map(|&t| {
            let rt = ComplexOperator::from_fn(d, |k, l| r[(k, l)] * C64::from_polar(1.0, -(vals[k] - vals[l]) * t));
            DensityMatrix::from_dynamics(&vecs.matmul(&rt.matmul(&vecs.dagger())))
        })
        .collect()
}

/// Matrix logarithm of a Hermitian operator, with eigenvalues clamped from
/// below at `floor` so that pure states have a finite logarithm.
pub fn hermitian_log(rho: &DensityMatrix, floor: f64) -> Result<ComplexOperator> {
    hermitian_log_op(rho.as_op(), floor)
}

pub(crate) fn hermitian_log_op(op: &ComplexOperator, floor: f64) -> Result<ComplexOperator> {
    if !(floor > 0.0) {
        return Err(Error::arg("log floor must be positive"));
    }
    hermitian_function(op, |x| x.max(floor).ln())
}

/// A validated density matrix: Hermitian, unit trace, and positive up to
/// [`POSITIVITY_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    op: ComplexOperator,
}

impl DensityMatrix {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        if !op.is_finite() {
            return Err(Error::arg("density matrix has non-finite entries"));
        }
        let herm = op.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::arg(format!(
                "density matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::arg(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&op)?[0];
        if min < -POSITIVITY_TOL {
            return Err(Error::arg(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { op })
    }

    /// Wraps a propagated state after symmetrizing it. Hermiticity and trace
    /// are still enforced; positivity is left to the caller to diagnose
    /// because truncated or perturbative dynamics may dip slightly below zero.
    pub(crate) fn from_dynamics(op: &ComplexOperator) -> Result<Self> {
        let op = op.hermitian_part();
        if !op.is_finite() {
            return Err(Error::Numeric("propagated state is not finite".into()));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > 1e-6 {
            return Err(Error::Numeric(format!(
                "propagated state lost normalization: trace {tr}"
            )));
        }
        Ok(Self { op })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || !(norm2 > 0.0) {
            return Err(Error::arg("state vector must be nonzero"));
        }
        let d = psi.len();
        let op = ComplexOperator::from_fn(d, |i, j| psi[i] * psi[j].conj() / norm2);
        Ok(Self { op: op.hermitian_part() })
    }

    /// Computational basis projector `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::arg(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut psi = vec![ZERO; dim];
        psi[index] = ONE;
        Self::pure(&psi)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: ComplexOperator::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        Self {
            op: a.op.kron(&b.op).hermitian_part(),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_op(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn into_op(self) -> ComplexOperator {
        self.op
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.op[(i, j)]
    }

    /// `Tr(ρ O)`
    pub fn expectation(&self, observable: &ComplexOperator) -> C64 {
        self.op.trace_product(observable)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.op).expect("density matrices are Hermitian")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Traces out every factor except the leading `keep_dim`-dimensional one of
/// an operator on `keep_dim ⊗ rest`.
pub fn trace_out_trailing(op: &ComplexOperator, keep_dim: usize) -> Result<ComplexOperator> {
    let d = op.dim();
    if keep_dim == 0 || d % keep_dim != 0 {
        return Err(Error::arg(format!(
            "cannot split dimension {d} into a {keep_dim}-dimensional leading factor"
        )));
    }
    let rest = d / keep_dim;
    Ok(ComplexOperator::from_fn(keep_dim, |i, j| {
        (0..rest).map(|a| op[(i * rest + a, j * rest + a)]).sum()
    }))
}

/// Reduced state of one qubit of a two-qubit density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep_site: usize) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::arg(format!(
            "partial_trace expects a 4x4 two-qubit state, got {0}x{0}",
            rho.dim()
        )));
    }
    let r = rho.as_op();
    let reduced = match keep_site {
        1 => ComplexOperator::from_fn(2, |i, j| (0..2).map(|b| r[(2 * i + b, 2 * j + b)]).sum()),
        2 => ComplexOperator::from_fn(2, |i, j| (0..2).map(|a| r[(2 * a + i, 2 * a + j)]).sum()),
        _ => return Err(Error::arg(format!("keep_site must be 1 or 2, got {keep_site}"))),
    };
    Ok(DensityMatrix {
        op: reduced.hermitian_part(),
    })
}

/// A linear map on `d×d` operators represented as a dense `d²×d²` matrix
/// acting on column-stacked vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    d: usize,
    matrix: Vec<C64>,
}

impl SuperOperator {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            matrix: vec![ZERO; d * d * d * d],
        }
    }

    /// Operator dimension `d` (the matrix is `d² × d²`).
    pub fn operator_dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let n = self.d * self.d;
        self.matrix[row * n + col]
    }

    fn kron_into(&mut self, a: &ComplexOperator, b: &ComplexOperator, coeff: C64) {
        // adds coeff * (a ⊗ b)
        let d = self.d;
        let n = d * d;
        for i in 0..n {
            for j in 0..n {
                let v = a[(i / d, j / d)] * b[(i % d, j % d)];
                if v != ZERO {
                    self.matrix[i * n + j] += coeff * v;
                }
            }
        }
    }

    /// `X ↦ A X`
    pub fn left(a: &ComplexOperator) -> Self {
        let mut s = Self::zeros(a.dim());
        s.kron_into(&ComplexOperator::identity(a.dim()), a, ONE);
        s
    }

    /// `X ↦ X B`
    pub fn right(b: &ComplexOperator) -> Self {
        let mut s = Self::zeros(b.dim());
        s.kron_into(&b.transpose(), &ComplexOperator::identity(b.dim()), ONE);
        s
    }

    /// `X ↦ -i [H, X]`
    pub fn commutator(h: &ComplexOperator) -> Self {
        let d = h.dim();
        let mut s = Self::zeros(d);
        s.kron_into(&ComplexOperator::identity(d), h, -I);
        s.kron_into(&h.transpose(), &ComplexOperator::identity(d), I);
        s
    }

    pub fn add_scaled(&mut self, other: &SuperOperator, coeff: C64) {
        assert_eq!(self.d, other.d);
        for (a, b) in self.matrix.iter_mut().zip(&other.matrix) {
            *a += coeff * b;
        }
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.d * self.d;
        assert_eq!(v.len(), n);
        (0..n)
            .map(|i| {
                self.matrix[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, x: &ComplexOperator) -> ComplexOperator {
        assert_eq!(x.dim(), self.d);
        ComplexOperator::from_column_stacked(self.d, &self.apply_vec(&x.column_stacked()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn pauli_z_single_site() {
        let z = pauli(Axis::Z, 1, 1).unwrap();
        assert_eq!(z, ComplexOperator::diagonal(&[c(1.0), c(-1.0)]));
    }

    #[test]
    fn pauli_z_site1_fixes_00() {
        let z = pauli(Axis::Z, 1, 2).unwrap();
        // |00> is basis 0
        for i in 0..4 {
            let expected = if i == 0 { c(1.0) } else { ZERO };
            assert_eq!(z[(i, 0)], expected);
        }
    }

    #[test]
    fn pauli_x_is_involution() {
        let x = pauli(Axis::X, 2, 2).unwrap();
        assert_eq!(x.matmul(&x), ComplexOperator::identity(4));
    }

    #[test]
    fn pauli_site_out_of_range() {
        assert!(matches!(pauli(Axis::X, 3, 2), Err(Error::Argument(_))));
        assert!(pauli(Axis::X, 0, 2).is_err());
    }

    #[test]
    fn pauli_algebra_xy_is_iz() {
        let x = sigma(Axis::X, 1);
        let y = sigma(Axis::Y, 1);
        let z = sigma(Axis::Z, 1);
        let xy = x.matmul(&y);
        assert!((&xy - &z.scale(I)).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_basis_state() {
        let rho = DensityMatrix::basis(4, 0).unwrap();
        let r1 = partial_trace(&rho, 1).unwrap();
        assert_eq!(r1, DensityMatrix::basis(2, 0).unwrap());
    }

    #[test]
    fn partial_trace_of_bell_state_is_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(s), ZERO, ZERO, c(s)]).unwrap();
        let r1 = partial_trace(&bell, 1).unwrap();
        let half = DensityMatrix::maximally_mixed(2);
        assert!((r1.as_op() - half.as_op()).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_wrong_dimension() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(partial_trace(&rho, 1).is_err());
        let rho4 = DensityMatrix::maximally_mixed(4);
        assert!(partial_trace(&rho4, 3).is_err());
    }

    #[test]
    fn log_of_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(4);
        let l = hermitian_log(&rho, LOG_FLOOR).unwrap();
        let expected = ComplexOperator::identity(4).scale(c(0.25f64.ln()));
        assert!((&l - &expected).max_abs() < 1e-13);
    }

    #[test]
    fn log_of_pure_state_is_floored() {
        let rho = DensityMatrix::basis(4, 0).unwrap();
        let l = hermitian_log(&rho, LOG_FLOOR).unwrap();
        assert!(l[(0, 0)].re.abs() < 1e-12);
        assert!((l[(1, 1)].re - LOG_FLOOR.ln()).abs() < 1e-9);
        // 0 log 0 = 0
        assert!(rho.as_op().trace_product(&l).norm() < 1e-12);
    }

    #[test]
    fn log_entropy_of_half_mixed() {
        let rho = DensityMatrix::new(ComplexOperator::diagonal(&[c(0.5), c(0.5), ZERO, ZERO])).unwrap();
        let l = hermitian_log(&rho, LOG_FLOOR).unwrap();
        let s = -rho.as_op().trace_product(&l).re;
        assert!((s - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_rejects_non_hermitian() {
        let op = ComplexOperator::from_real_rows(&[&[0.5, 1.0], &[0.0, 0.5]]);
        assert!(hermitian_log_op(&op, LOG_FLOOR).is_err());
        assert!(hermitian_log_op(&ComplexOperator::identity(2), 0.0).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexOperator::identity(2)).is_err());
        let neg = ComplexOperator::diagonal(&[c(1.5), c(-0.5)]);
        assert!(DensityMatrix::new(neg).is_err());
        let nonherm = ComplexOperator::from_fn(2, |i, j| if i == j { c(0.5) } else if i == 0 { c(0.1) } else { ZERO });
        assert!(DensityMatrix::new(nonherm).is_err());
    }

    #[test]
    fn superoperator_conventions() {
        let a = ComplexOperator::from_fn(3, |i, j| C64::new(i as f64 + 0.5, j as f64 - 1.0));
        let x = ComplexOperator::from_fn(3, |i, j| C64::new((i * j) as f64, 1.0 + i as f64));
        assert!((&SuperOperator::left(&a).apply(&x) - &a.matmul(&x)).max_abs() < 1e-12);
        assert!((&SuperOperator::right(&a).apply(&x) - &x.matmul(&a)).max_abs() < 1e-12);
        let v = x.column_stacked();
        assert_eq!(v[1], x[(1, 0)]);
        assert_eq!(ComplexOperator::from_column_stacked(3, &v), x);
    }

    #[test]
    fn unitary_evolution_precesses_a_spin() {
        let h = pauli(Axis::Z, 1, 1).unwrap().scale(C64::new(0.5, 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let x = pauli(Axis::X, 1, 1).unwrap();
        let y = pauli(Axis::Y, 1, 1).unwrap();
        let times = [0.0, 0.3, 1.7, 12.0];
        for (t, r) in times.iter().zip(unitary_evolution(&h, &plus, &times).unwrap()) {
            assert!((r.expectation(&x).re - t.cos()).abs() < 1e-14);
            assert!((r.expectation(&y).re - t.sin()).abs() < 1e-14);
        }
    }
}
