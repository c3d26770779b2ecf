//! Quantum states and generalized Bloch vectors.

use crate::basis::OperatorBasis;
use crate::error::{check_dim, invalid, QinvError, Result};
use crate::linalg::{c64, hermiticity_defect, identity, min_eigenvalue, trace, CMat, CVec};

pub const STATE_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive semidefinite `d x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        Self::with_tolerance(mat, STATE_TOL)
    }

    /// Validates with a caller-chosen tolerance on all three invariants.
    pub fn with_tolerance(mat: CMat, tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return invalid(format!("density matrix must be square, got {:?}", mat.shape()));
        }
        if mat.nrows() < 2 {
            return invalid("density matrix dimension must be >= 2");
        }
        let herm = hermiticity_defect(&mat);
        if herm > tol {
            return invalid(format!("density matrix not Hermitian (defect {herm:e})"));
        }
        let tr = trace(&mat);
        if (tr - c64(1.0, 0.0)).norm() > tol {
            return invalid(format!("density matrix trace {tr} != 1"));
        }
        let min_eig = min_eigenvalue(&mat);
        if min_eig < -tol {
            return Err(QinvError::NotAState { min_eig });
        }
        Ok(Self { mat })
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return invalid("zero state vector");
        }
        let v = psi.unscale(n);
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: identity(d).unscale(d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.mat * &self.mat)).re
    }
}

/// Real coefficient vector `r` with `rho = (I + r . Gamma) / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    pub dim: usize,
    pub r: Vec<f64>,
}

impl BlochVector {
    pub fn new(dim: usize, r: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return invalid("Bloch vector dimension must be >= 2");
        }
        check_dim(dim * dim - 1, r.len())?;
        Ok(Self { dim, r })
    }

    pub fn norm_sq(&self) -> f64 {
        self.r.iter().map(|x| x * x).sum()
    }
}

pub fn bloch_from_state(rho: &DensityMatrix, basis: &OperatorBasis) -> Result<BlochVector> {
    check_dim(basis.dim(), rho.dim())?;
    let scale = (rho.dim() - 1) as f64;
    let r = basis
        .coefficients(rho.matrix())
        .into_iter()
        .map(|z| z.re / scale)
        .collect();
    BlochVector::new(rho.dim(), r)
}

/// `(I + r . Gamma) / d`; fails with `NotAState` outside the state space,
/// which for `d > 2` is a proper subset of the unit ball.
pub fn state_from_bloch(r: &BlochVector, basis: &OperatorBasis) -> Result<DensityMatrix> {
    check_dim(basis.dim(), r.dim)?;
    let d = r.dim as f64;
    let mat = (identity(r.dim) + basis.combine(&r.r)).unscale(d);
    DensityMatrix::new(mat)
}
