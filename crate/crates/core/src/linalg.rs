//! Spectral helpers on dense complex matrices.

use nalgebra::{Schur, SymmetricEigen};

use crate::fock::{matmul, norm_bound};
use crate::{CMatrix, Error, Result, C64};

/// Relative Hermiticity slack accepted before decomposing.
const HERMITIAN_SLACK: f64 = 1e-12;

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let defect = norm_bound(&(m - m.adjoint()));
    if defect > HERMITIAN_SLACK * m.norm().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(m)?;
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `e^{-itH}` for Hermitian `H`.
pub fn exp_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (values, v) = eigh(h)?;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let ph = C64::new(0.0, -t * values[j]).exp();
        col *= ph;
    }
    Ok(matmul(&scaled, &v.adjoint()))
}

/// Eigenphases in `(-π, π]` and eigenvectors of a unitary matrix.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

impl UnitaryEigen {
    /// The Schur form of a normal matrix is diagonal, so the Schur vectors
    /// are eigenvectors.
    pub fn new(u: &CMatrix) -> Self {
        let (q, t) = Schur::new(u.clone()).unpack();
        let phases = (0..t.nrows()).map(|i| t[(i, i)].arg()).collect();
        UnitaryEigen { phases, vectors: q }
    }

    /// Largest deviation of an eigenvalue from the unit circle, read off the
    /// triangular factor (also catches non-normal input through `off`).
    pub fn moduli(u: &CMatrix) -> Vec<f64> {
        let (_, t) = Schur::new(u.clone()).unpack();
        (0..t.nrows()).map(|i| t[(i, i)].norm()).collect()
    }
}

/// Eigenvalues of a general square matrix, from its complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let (_, t) = Schur::new(m.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}
