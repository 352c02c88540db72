//! Dense complex operators, canonical spectral decomposition and POVMs.
//!
//! Everything here works on small matrices (d ≤ 16) in double precision.
//! The eigensolver is nalgebra's Hermitian `SymmetricEigen`; on top of it
//! [`spectral_decompose`] imposes a canonical, reproducible choice of
//! eigenbasis so that degenerate POVM elements always fine-grain the same way.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, PovmDefect, Result};

/// Max-abs-entry tolerance for the Hermitian predicate.
pub const TOL_HERM: f64 = 1e-9;
/// Max-abs-entry tolerance for POVM completeness.
pub const TOL_COMPLETE: f64 = 1e-9;
/// Eigenvalues above `-TOL_EIG` count as non-negative.
pub const TOL_EIG: f64 = 1e-9;
/// Allowed reconstruction error of a spectral decomposition.
pub const TOL_RECON: f64 = 1e-8;
/// Norm tolerance for unit vectors; also the phase-pivot threshold.
pub const TOL_NORM: f64 = 1e-10;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-8;

pub type Ket = DVector<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::dim(matrix.nrows(), matrix.ncols()));
        }
        if matrix.nrows() == 0 {
            return Err(Error::Domain("operator dimension must be positive".into()));
        }
        Ok(Operator(matrix))
    }

    /// Builds from row-major entries; panics if the length is not `dim²`.
    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Self {
        Operator(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Operator(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                c(diag[i], 0.0)
            } else {
                Complex64::default()
            }
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &Ket) -> Self {
        Operator(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Operator(self.0.map(|z| z * factor))
    }

    pub fn tensor(&self, other: &Operator) -> Self {
        Operator(self.0.kronecker(&other.0))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::dim(self.dim(), other.dim()));
        }
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= TOL_HERM
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.0 + self.0.adjoint()).map(|z| z * 0.5);
        let mut values: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or(f64::NAN)
    }

    pub fn is_psd(&self) -> bool {
        self.is_hermitian() && self.min_eigenvalue() >= -TOL_EIG
    }

    /// `⟨u|A|v⟩`.
    pub fn sandwich(&self, u: &Ket, v: &Ket) -> Complex64 {
        u.dotc(&(&self.0 * v))
    }

    /// `A^{-1/2}` for a positive definite Hermitian operator.
    pub fn inverse_sqrt(&self) -> Result<Self> {
        let decomposition = spectral_decompose(self)?;
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (value, v) in decomposition {
            if value <= TOL_EIG {
                return Err(Error::Domain("inverse square root of a singular operator".into()));
            }
            out += (&v * v.adjoint()).map(|z| z / value.sqrt());
        }
        Ok(Operator(out))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    a.tensor(b)
}

pub fn trace(op: &Operator) -> Complex64 {
    op.trace()
}

pub fn dagger(op: &Operator) -> Operator {
    op.dagger()
}

/// `⟨u|v⟩`.
pub fn overlap(u: &Ket, v: &Ket) -> Result<Complex64> {
    if u.len() != v.len() {
        return Err(Error::dim(u.len(), v.len()));
    }
    Ok(u.dotc(v))
}

/// `|⟨u|v⟩|²` on raw slices, for inner loops.
#[inline]
pub fn overlap_sq(u: &[Complex64], v: &[Complex64]) -> f64 {
    let mut acc = Complex64::default();
    for (a, b) in u.iter().zip(v) {
        acc += a.conj() * b;
    }
    acc.norm_sqr()
}

pub fn basis_ket(dim: usize, index: usize) -> Ket {
    let mut v = Ket::zeros(dim);
    v[index] = c(1.0, 0.0);
    v
}

/// Rotates `v` so that its first component of magnitude above `TOL_NORM`
/// is real and positive.
fn canonical_phase(v: &mut Ket) {
    if let Some(pivot) = v.iter().find(|z| z.norm() > TOL_NORM).copied() {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

fn lexicographic_desc(a: &Ket, b: &Ket) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Eigen-decomposition of a Hermitian operator with a canonical basis.
///
/// Eigenvalues come out descending. Every eigenvector has its leading
/// significant component real and positive. Inside a degenerate cluster the
/// solver's vectors are re-orthonormalised by Gram–Schmidt (in solver order,
/// after phasing) and then sorted in descending lexicographic order of their
/// `(re, im)` component tuples; cluster members share the cluster's mean
/// eigenvalue. Equal inputs therefore always give bit-identical outputs.
pub fn spectral_decompose(op: &Operator) -> Result<Vec<(f64, Ket)>> {
    let max_deviation = op.hermitian_deviation();
    if max_deviation > TOL_HERM {
        return Err(Error::NotHermitian { max_deviation });
    }
    let d = op.dim();
    let herm = (&op.0 + op.0.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(herm);

    let mut pairs: Vec<(f64, Ket)> = (0..d)
        .map(|k| {
            let mut v: Ket = eig.eigenvectors.column(k).into_owned();
            let norm = v.norm();
            v.iter_mut().for_each(|z| *z /= norm);
            canonical_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    // stable: ties keep solver order
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut out = Vec::with_capacity(d);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && pairs[end - 1].0 - pairs[end].0 <= DEGENERACY_GAP {
            end += 1;
        }
        if end - start == 1 {
            out.push(pairs[start].clone());
        } else {
            let mean = pairs[start..end].iter().map(|p| p.0).sum::<f64>() / (end - start) as f64;
            let mut basis: Vec<Ket> = Vec::with_capacity(end - start);
            for (_, v) in &pairs[start..end] {
                let mut w = v.clone();
                for b in &basis {
                    let proj = b.dotc(&w);
                    w -= b * proj;
                }
                let norm = w.norm();
                w.iter_mut().for_each(|z| *z /= norm);
                canonical_phase(&mut w);
                basis.push(w);
            }
            basis.sort_by(lexicographic_desc);
            out.extend(basis.into_iter().map(|v| (mean, v)));
        }
        start = end;
    }
    Ok(out)
}

/// A weighted rank-one POVM piece `weight · |direction⟩⟨direction|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneElement {
    pub weight: f64,
    pub direction: Ket,
}

impl RankOneElement {
    pub fn new(weight: f64, direction: Ket) -> Result<Self> {
        if !(-TOL_EIG..=1.0 + TOL_EIG).contains(&weight) {
            return Err(Error::Domain(format!("rank-one weight {weight} outside [0, 1]")));
        }
        let norm = direction.norm();
        if (norm - 1.0).abs() > TOL_NORM {
            return Err(Error::Domain(format!("direction norm {norm} is not 1")));
        }
        Ok(RankOneElement {
            weight: weight.clamp(0.0, 1.0),
            direction,
        })
    }

    pub fn to_operator(&self) -> Operator {
        Operator::projector(&self.direction).scale(self.weight)
    }
}

/// One child of a fine-grained POVM together with its raw outcome index.
#[derive(Debug, Clone, PartialEq)]
pub struct FineGrained {
    pub outcome: usize,
    pub element: RankOneElement,
}

/// A validated POVM with its fixed rank-one refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<Operator>,
    fine_grained: Vec<FineGrained>,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn fine_grained(&self) -> &[FineGrained] {
        &self.fine_grained
    }

    /// A POVM whose outcomes are the rank-one children of this one.
    pub fn refined(&self) -> Result<Povm> {
        validate_povm(
            self.fine_grained
                .iter()
                .map(|f| f.element.to_operator())
                .collect(),
        )
    }

    /// `{|v⟩⟨v|}` for an orthonormal basis given as columns of `basis`.
    pub fn projective(basis: &DMatrix<Complex64>) -> Result<Povm> {
        validate_povm(
            basis
                .column_iter()
                .map(|col| Operator::projector(&col.into_owned()))
                .collect(),
        )
    }

    /// The two-outcome measurement `{|v⟩⟨v|, I - |v⟩⟨v|}`.
    pub fn binary(v: &Ket) -> Result<Povm> {
        let p = Operator::projector(v);
        let q = &Operator::identity(v.len()) - &p;
        validate_povm(vec![p, q])
    }
}

fn decompose_element(index: usize, element: &Operator) -> Result<Vec<FineGrained>> {
    let mut children = Vec::new();
    for (value, direction) in spectral_decompose(element)? {
        if !(-TOL_EIG..=1.0 + TOL_EIG).contains(&value) {
            return Err(Error::invalid_povm(PovmDefect::NotPsd, Some(index), value));
        }
        if value <= TOL_EIG {
            continue;
        }
        children.push(FineGrained {
            outcome: index,
            element: RankOneElement {
                weight: value.min(1.0),
                direction,
            },
        });
    }
    Ok(children)
}

/// Recomputes the fixed rank-one refinement of every element of `povm`.
pub fn fine_grain(povm: &Povm) -> Result<Povm> {
    let mut fine_grained = Vec::new();
    for (i, element) in povm.elements.iter().enumerate() {
        fine_grained.extend(decompose_element(i, element)?);
    }
    Ok(Povm {
        dim: povm.dim,
        elements: povm.elements.clone(),
        fine_grained,
    })
}

/// Checks that `elements` are Hermitian, positive and complete, then
/// fine-grains them.
pub fn validate_povm(elements: Vec<Operator>) -> Result<Povm> {
    let Some(first) = elements.first() else {
        return Err(Error::invalid_povm(PovmDefect::Empty, None, 0.0));
    };
    let dim = first.dim();
    for e in &elements {
        if e.dim() != dim {
            return Err(Error::dim(dim, e.dim()));
        }
    }
    for (i, e) in elements.iter().enumerate() {
        let dev = e.hermitian_deviation();
        if dev > TOL_HERM {
            return Err(Error::invalid_povm(PovmDefect::NotHermitian, Some(i), dev));
        }
    }
    for (i, e) in elements.iter().enumerate() {
        let min = e.min_eigenvalue();
        if min < -TOL_EIG {
            return Err(Error::invalid_povm(PovmDefect::NotPsd, Some(i), min));
        }
    }
    let total = elements
        .iter()
        .fold(Operator::zeros(dim), |acc, e| &acc + e);
    let dev = total.max_abs_diff(&Operator::identity(dim))?;
    if dev > TOL_COMPLETE {
        return Err(Error::invalid_povm(PovmDefect::NotComplete, None, dev));
    }
    fine_grain(&Povm {
        dim,
        elements,
        fine_grained: Vec::new(),
    })
}
