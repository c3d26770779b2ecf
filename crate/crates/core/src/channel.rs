//! The four interconvertible channel representations and channel algebra.
//!
//! Conventions: `Phi = sum_a K_a (x) conj(K_a)` acts on row-major vectorized
//! density matrices, and the Choi matrix is the reshuffle
//! `C[(i, j), (k, l)] = Phi[(i, k), (j, l)]`, i.e.
//! `C = sum_{jl} E(|j><l|) (x) |j><l|` with the output on the first factor.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::basis::OperatorBasis;
use crate::error::{check_dim, invalid, QinvError, Result};
use crate::linalg::{
    c64, hermitian_eigen, identity, kron, max_abs_diff, min_eigenvalue, partial_trace_first,
    reshuffle, trace, unvectorize, vectorize, CMat, RMat,
};
use crate::state::DensityMatrix;

/// Tolerance for complete positivity and trace preservation checks.
pub const CPTP_TOL: f64 = 1e-8;
/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    dim: usize,
    ops: Vec<CMat>,
}

impl KrausSet {
    /// Validates shapes, `1 <= r <= d^2`, and `sum K^dagger K = 1` within 1e-8.
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return invalid("empty Kraus set");
        };
        let d = first.nrows();
        if d < 2 {
            return invalid("Kraus operators must act on dimension >= 2");
        }
        if ops.len() > d * d {
            return invalid(format!("{} Kraus operators exceed d^2 = {}", ops.len(), d * d));
        }
        let mut acc = CMat::zeros(d, d);
        for k in &ops {
            if k.shape() != (d, d) {
                return invalid(format!("Kraus operator of shape {:?}, expected {d}x{d}", k.shape()));
            }
            acc += k.adjoint() * k;
        }
        let residual = max_abs_diff(&acc, &identity(d));
        if residual > CPTP_TOL {
            return Err(QinvError::NotTp { residual });
        }
        Ok(Self { dim: d, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn rank(&self) -> usize {
        self.ops.len()
    }

    pub fn to_superop(&self) -> Superoperator {
        kraus_to_superop(self)
    }
}

/// `d^2 x d^2` matrix acting on row-major vectorized operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    mat: CMat,
}

impl Superoperator {
    pub fn new(dim: usize, mat: CMat) -> Result<Self> {
        if dim < 2 {
            return invalid("channel dimension must be >= 2");
        }
        if mat.shape() != (dim * dim, dim * dim) {
            return invalid(format!("superoperator shape {:?}, expected {}^2", mat.shape(), dim * dim));
        }
        Ok(Self { dim, mat })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim: d,
            mat: identity(d * d),
        }
    }

    /// Conjugation `rho -> U rho U^dagger`.
    pub fn unitary(u: &CMat) -> Self {
        Self {
            dim: u.nrows(),
            mat: kron(u, &u.map(|z| z.conj())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn trace(&self) -> Complex64 {
        trace(&self.mat)
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        superop_to_choi(self)
    }

    /// Image of an arbitrary operator.
    pub fn map_operator(&self, x: &CMat) -> CMat {
        unvectorize(&(&self.mat * vectorize(x)), self.dim)
    }

    /// Hermitian adjoint, the dual map for the Hilbert-Schmidt inner product.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            mat: self.mat.adjoint(),
        }
    }
}

/// `d^2 x d^2` Choi matrix, trace `d` for trace-preserving maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    mat: CMat,
}

impl ChoiMatrix {
    pub fn new(dim: usize, mat: CMat) -> Result<Self> {
        if dim < 2 {
            return invalid("channel dimension must be >= 2");
        }
        if mat.shape() != (dim * dim, dim * dim) {
            return invalid(format!("Choi matrix shape {:?}, expected {}^2", mat.shape(), dim * dim));
        }
        Ok(Self { dim, mat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn to_superop(&self) -> Superoperator {
        choi_to_superop(self)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_channel(self)
    }
}

/// Affine action `r -> M r + t` on generalized Bloch vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    pub dim: usize,
    pub m: RMat,
    pub t: DVector<f64>,
}

impl AffinePair {
    pub fn new(dim: usize, m: RMat, t: DVector<f64>) -> Result<Self> {
        if dim < 2 {
            return invalid("channel dimension must be >= 2");
        }
        let n = dim * dim - 1;
        if m.shape() != (n, n) {
            return invalid(format!("distortion matrix shape {:?}, expected {n}x{n}", m.shape()));
        }
        check_dim(n, t.len())?;
        Ok(Self { dim, m, t })
    }

    /// Concatenation `self o first`: `(M' M, M' t + t')`.
    pub fn after(&self, first: &AffinePair) -> Result<AffinePair> {
        check_dim(self.dim, first.dim)?;
        Ok(AffinePair {
            dim: self.dim,
            m: &self.m * &first.m,
            t: &self.m * &first.t + &self.t,
        })
    }
}

/// A channel in any of its four forms.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelRep {
    Kraus(KrausSet),
    Superop(Superoperator),
    Choi(ChoiMatrix),
    Affine(AffinePair),
}

impl ChannelRep {
    pub fn dim(&self) -> usize {
        match self {
            ChannelRep::Kraus(k) => k.dim(),
            ChannelRep::Superop(s) => s.dim(),
            ChannelRep::Choi(c) => c.dim(),
            ChannelRep::Affine(a) => a.dim,
        }
    }

    pub fn to_superop(&self) -> Result<Superoperator> {
        Ok(match self {
            ChannelRep::Kraus(k) => kraus_to_superop(k),
            ChannelRep::Superop(s) => s.clone(),
            ChannelRep::Choi(c) => choi_to_superop(c),
            ChannelRep::Affine(a) => affine_to_superop(a, &OperatorBasis::gell_mann(a.dim)?)?,
        })
    }

    pub fn to_choi(&self) -> Result<ChoiMatrix> {
        Ok(match self {
            ChannelRep::Choi(c) => c.clone(),
            other => superop_to_choi(&other.to_superop()?),
        })
    }

    pub fn form_name(&self) -> &'static str {
        match self {
            ChannelRep::Kraus(_) => "kraus",
            ChannelRep::Superop(_) => "superop",
            ChannelRep::Choi(_) => "choi",
            ChannelRep::Affine(_) => "affine",
        }
    }
}

pub fn kraus_to_superop(k: &KrausSet) -> Superoperator {
    let d = k.dim();
    let mut mat = CMat::zeros(d * d, d * d);
    for op in k.ops() {
        mat += kron(op, &op.map(|z| z.conj()));
    }
    Superoperator { dim: d, mat }
}

pub fn superop_to_choi(phi: &Superoperator) -> ChoiMatrix {
    ChoiMatrix {
        dim: phi.dim,
        mat: reshuffle(&phi.mat, phi.dim),
    }
}

pub fn choi_to_superop(c: &ChoiMatrix) -> Superoperator {
    Superoperator {
        dim: c.dim,
        mat: reshuffle(&c.mat, c.dim),
    }
}

/// Kraus operators `sqrt(lambda) unvec(v)` from the Choi eigenpairs.
pub fn choi_to_kraus(c: &ChoiMatrix) -> Result<KrausSet> {
    let d = c.dim;
    let (vals, vecs) = hermitian_eigen(&c.mat);
    if vals[0] < -CPTP_TOL {
        return Err(QinvError::NotCp { min_eig: vals[0] });
    }
    let mut ops = Vec::new();
    for (k, &lam) in vals.iter().enumerate().rev() {
        if lam <= KRAUS_CUTOFF {
            continue;
        }
        let v = vecs.column(k).into_owned() * c64(lam.sqrt(), 0.0);
        ops.push(unvectorize(&v, d));
    }
    if ops.is_empty() {
        return invalid("Choi matrix has no eigenvalue above the Kraus cutoff");
    }
    KrausSet::new(ops)
}

/// Orthonormal frame `{I/sqrt(d), Gamma_i/sqrt(d(d-1))}` as columns of a
/// unitary `d^2 x d^2` matrix of vectorized operators.
pub fn bloch_frame(basis: &OperatorBasis) -> CMat {
    let d = basis.dim();
    let mut frame = CMat::zeros(d * d, d * d);
    frame.set_column(0, &vectorize(&identity(d).unscale((d as f64).sqrt())));
    let s = basis.norm().sqrt();
    for (i, g) in basis.gammas().iter().enumerate() {
        frame.set_column(i + 1, &vectorize(&g.unscale(s)));
    }
    frame
}

/// Liouville form: `M_ij = Tr(G_i E(G_j)) / (d(d-1))`, `t_i = Tr(G_i E(I)) / (d(d-1))`.
pub fn superop_to_affine(phi: &Superoperator, basis: &OperatorBasis) -> Result<AffinePair> {
    check_dim(basis.dim(), phi.dim)?;
    let d = phi.dim;
    let frame = bloch_frame(basis);
    let liou = frame.adjoint() * &phi.mat * &frame;
    let mut residual = (liou[(0, 0)] - c64(1.0, 0.0)).norm();
    for j in 1..d * d {
        residual = residual.max(liou[(0, j)].norm());
    }
    if residual > CPTP_TOL {
        return Err(QinvError::NotTp { residual });
    }
    let n = d * d - 1;
    let imag = liou.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > CPTP_TOL {
        return invalid(format!(
            "map is not Hermiticity preserving (imaginary Liouville entry {imag:e})"
        ));
    }
    let sq = ((d - 1) as f64).sqrt();
    let m = RMat::from_fn(n, n, |i, j| liou[(i + 1, j + 1)].re);
    let t = DVector::from_fn(n, |i, _| liou[(i + 1, 0)].re / sq);
    AffinePair::new(d, m, t)
}

pub fn affine_to_superop(a: &AffinePair, basis: &OperatorBasis) -> Result<Superoperator> {
    check_dim(basis.dim(), a.dim)?;
    let d = a.dim;
    let n = d * d - 1;
    let sq = ((d - 1) as f64).sqrt();
    let mut liou = CMat::zeros(n + 1, n + 1);
    liou[(0, 0)] = c64(1.0, 0.0);
    for i in 0..n {
        liou[(i + 1, 0)] = c64(sq * a.t[i], 0.0);
        for j in 0..n {
            liou[(i + 1, j + 1)] = c64(a.m[(i, j)], 0.0);
        }
    }
    let frame = bloch_frame(basis);
    Superoperator::new(d, &frame * liou * frame.adjoint())
}

/// `phi2 o phi1` (apply `phi1` first).
pub fn compose(phi2: &Superoperator, phi1: &Superoperator) -> Result<Superoperator> {
    check_dim(phi2.dim, phi1.dim)?;
    Ok(Superoperator {
        dim: phi1.dim,
        mat: &phi2.mat * &phi1.mat,
    })
}

/// Superoperator of `E1 (x) E2` on `C^{d1 d2}`, where a product index `(a1, a2)`
/// maps to `a1 * d2 + a2` so that partial traces keep their meaning.
pub fn tensor(phi1: &Superoperator, phi2: &Superoperator) -> Superoperator {
    let (d1, d2) = (phi1.dim, phi2.dim);
    let big = d1 * d2;
    let idx = |i1: usize, i2: usize, j1: usize, j2: usize| (i1 * d2 + i2) * big + (j1 * d2 + j2);
    let mut mat = CMat::zeros(big * big, big * big);
    for i1 in 0..d1 {
        for j1 in 0..d1 {
            let row1 = i1 * d1 + j1;
            for k1 in 0..d1 {
                for l1 in 0..d1 {
                    let a = phi1.mat[(row1, k1 * d1 + l1)];
                    if a == c64(0.0, 0.0) {
                        continue;
                    }
                    for i2 in 0..d2 {
                        for j2 in 0..d2 {
                            let row2 = i2 * d2 + j2;
                            let r = idx(i1, i2, j1, j2);
                            for k2 in 0..d2 {
                                for l2 in 0..d2 {
                                    let b = phi2.mat[(row2, k2 * d2 + l2)];
                                    mat[(r, idx(k1, k2, l1, l2))] = a * b;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Superoperator { dim: big, mat }
}

/// `unvec(Phi vec(rho))`; a non-positive output means `Phi` was not CP.
pub fn apply_channel(phi: &Superoperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_dim(phi.dim, rho.dim())?;
    let out = phi.map_operator(rho.matrix());
    let out = crate::linalg::hermitian_part(&out);
    match DensityMatrix::with_tolerance(out.clone(), CPTP_TOL) {
        Ok(s) => Ok(s),
        Err(QinvError::NotAState { min_eig }) => Err(QinvError::NotCp { min_eig }),
        Err(e) => Err(e),
    }
}

/// Diagnostics of a candidate channel's Choi matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ValidationReport {
    pub min_eig: f64,
    pub tp_residual: f64,
    pub trace: f64,
    pub cp: bool,
    pub tp: bool,
}

impl ValidationReport {
    pub fn is_channel(&self) -> bool {
        self.cp && self.tp
    }

    /// CP check at a caller-chosen tolerance.
    pub fn cp_within(&self, tol: f64) -> bool {
        self.min_eig >= -tol
    }
}

pub fn validate_channel(c: &ChoiMatrix) -> ValidationReport {
    let d = c.dim;
    let min_eig = min_eigenvalue(&c.mat);
    let tp_residual = max_abs_diff(&partial_trace_first(&c.mat, d), &identity(d));
    ValidationReport {
        min_eig,
        tp_residual,
        trace: trace(&c.mat).re,
        cp: min_eig >= -CPTP_TOL,
        tp: tp_residual <= CPTP_TOL,
    }
}
