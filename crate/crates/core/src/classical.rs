//! Classical channels: column-stochastic matrices and their quasi-inverses.

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::basis::OperatorBasis;
use crate::channel::Superoperator;
use crate::error::{invalid, QinvError, Result};
use crate::linalg::RMat;

/// Tolerance on column sums of a stochastic matrix.
pub const COLUMN_TOL: f64 = 1e-10;
/// Largest column-sum deviation repaired by [`StochasticMatrix::renormalized`].
pub const RENORM_TOL: f64 = 1e-8;
/// Relative tolerance deciding that two row entries tie.
pub const TIE_TOL: f64 = 1e-12;

/// Column-stochastic matrix: column `j` is the output distribution for input `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    mat: RMat,
}

impl StochasticMatrix {
    pub fn new(mat: RMat) -> Result<Self> {
        let d = Self::check_shape(&mat)?;
        for j in 0..d {
            let col = mat.column(j);
            if let Some(x) = col.iter().find(|&&x| !(x >= -1e-12)) {
                return invalid(format!("entry {x} in column {j} is negative"));
            }
            let s = col.sum();
            if (s - 1.0).abs() > COLUMN_TOL {
                return invalid(format!("column {j} sums to {s}, expected 1"));
            }
        }
        Ok(Self { mat })
    }

    /// Accepts column sums off by at most 1e-8 and rescales them; clamps
    /// negative entries above -1e-12 to zero.
    pub fn renormalized(mut mat: RMat) -> Result<Self> {
        let d = Self::check_shape(&mat)?;
        for j in 0..d {
            let mut col = mat.column_mut(j);
            if let Some(x) = col.iter().find(|&&x| !(x >= -1e-12)) {
                return invalid(format!("entry {x} in column {j} is negative"));
            }
            col.iter_mut().for_each(|x| *x = x.max(0.0));
            let s = col.sum();
            if (s - 1.0).abs() > RENORM_TOL {
                return invalid(format!("column {j} sums to {s}, deviation exceeds {RENORM_TOL:e}"));
            }
            col /= s;
        }
        Ok(Self { mat })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return invalid("stochastic matrix rows must all have length d");
        }
        Self::new(RMat::from_fn(d, d, |i, j| rows[i][j]))
    }

    fn check_shape(mat: &RMat) -> Result<usize> {
        let d = mat.nrows();
        if mat.ncols() != d {
            return invalid(format!("stochastic matrix must be square, got {:?}", mat.shape()));
        }
        if d < 2 {
            return invalid("dimension must be >= 2");
        }
        Ok(d)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mat: RMat::identity(d, d),
        }
    }

    /// The flat matrix `T_*` with all entries `1/d`.
    pub fn flat(d: usize) -> Self {
        Self {
            mat: RMat::from_element(d, d, 1.0 / d as f64),
        }
    }

    /// Permutation sending `|j>` to `|perm[j]>`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || seen[p] {
                return invalid(format!("{perm:?} is not a permutation"));
            }
            seen[p] = true;
        }
        let mut mat = RMat::zeros(d, d);
        for (j, &p) in perm.iter().enumerate() {
            mat[(p, j)] = 1.0;
        }
        Self::new(mat)
    }

    /// Convex combination `sum_k w_k T_k`.
    pub fn mixture(weights: &[f64], parts: &[StochasticMatrix]) -> Result<Self> {
        if weights.len() != parts.len() || parts.is_empty() {
            return invalid("mixture needs one weight per matrix");
        }
        let d = parts[0].dim();
        let mut mat = RMat::zeros(d, d);
        for (w, t) in weights.iter().zip(parts) {
            if t.dim() != d {
                return Err(QinvError::DimensionMismatch {
                    expected: d,
                    found: t.dim(),
                });
            }
            mat += &t.mat * *w;
        }
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &RMat {
        &self.mat
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.mat.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `T' o T`.
    pub fn after(&self, first: &StochasticMatrix) -> Result<StochasticMatrix> {
        if self.dim() != first.dim() {
            return Err(QinvError::DimensionMismatch {
                expected: self.dim(),
                found: first.dim(),
            });
        }
        Ok(Self {
            mat: &self.mat * &first.mat,
        })
    }

    pub fn transpose(&self) -> Result<StochasticMatrix> {
        Self::new(self.mat.transpose())
    }

    pub fn is_bistochastic(&self, tol: f64) -> bool {
        self.mat.row_iter().all(|r| (r.sum() - 1.0).abs() <= tol)
    }

    pub fn is_permutation(&self) -> bool {
        self.mat.iter().all(|&x| x == 0.0 || x == 1.0)
            && self.mat.row_iter().all(|r| r.sum() == 1.0)
    }
}

/// `Tr(T)/d`.
pub fn classical_avg_fidelity(t: &StochasticMatrix) -> f64 {
    t.mat.trace() / t.dim() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalQiResult {
    #[serde(with = "rows_serde")]
    pub qi: StochasticMatrix,
    /// Maximizing column indices of each row of `T` (0-based); the canonical
    /// `qi` uses the first.
    pub ties: Vec<Vec<usize>>,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
}

impl ClassicalQiResult {
    pub fn is_unique(&self) -> bool {
        self.ties.iter().all(|t| t.len() == 1)
    }

    /// Deterministic quasi-inverse using tie choice `choice[i]` in row `i`.
    pub fn realize(&self, choice: &[usize]) -> Result<StochasticMatrix> {
        let d = self.qi.dim();
        if choice.len() != d {
            return invalid("one choice per row required");
        }
        let mut mat = RMat::zeros(d, d);
        for (i, (&c, ts)) in choice.iter().zip(&self.ties).enumerate() {
            if !ts.contains(&c) {
                return invalid(format!("column {c} is not a maximizer of row {i}"));
            }
            mat[(c, i)] = 1.0;
        }
        StochasticMatrix::new(mat)
    }
}

/// Row-wise argmax: for every row `i` of `T` put a 1 at `(j*, i)` of the
/// quasi-inverse, where `T_{i j*}` is the row maximum.
pub fn classical_quasi_inverse(t: &StochasticMatrix) -> ClassicalQiResult {
    let d = t.dim();
    let mut mat = RMat::zeros(d, d);
    let mut ties = Vec::with_capacity(d);
    let mut total = 0.0;
    for i in 0..d {
        let row = t.mat.row(i);
        let max = row.max();
        let cut = max - TIE_TOL * max.abs().max(f64::MIN_POSITIVE);
        let set: Vec<usize> = (0..d).filter(|&j| row[j] >= cut).collect();
        mat[(set[0], i)] = 1.0;
        total += max;
        ties.push(set);
    }
    ClassicalQiResult {
        qi: StochasticMatrix { mat },
        ties,
        fidelity_before: classical_avg_fidelity(t),
        fidelity_after: total / d as f64,
    }
}

/// Exhaustive search over all `d^d` deterministic maps, `d <= 6`.
pub fn classical_qi_brute(t: &StochasticMatrix) -> Result<(StochasticMatrix, f64)> {
    let d = t.dim();
    if d > 6 {
        return invalid(format!("brute force limited to d <= 6, got {d}"));
    }
    let mut f = vec![0usize; d];
    let mut best = (f64::NEG_INFINITY, f.clone());
    loop {
        let obj: f64 = (0..d).map(|b| t.mat[(b, f[b])]).sum();
        if obj > best.0 {
            best = (obj, f.clone());
        }
        let mut k = 0;
        while k < d {
            f[k] += 1;
            if f[k] < d {
                break;
            }
            f[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    let mut mat = RMat::zeros(d, d);
    for (b, &a) in best.1.iter().enumerate() {
        mat[(a, b)] = 1.0;
    }
    Ok((StochasticMatrix { mat }, best.0 / d as f64))
}

/// `T_ij = <i|E(|j><j|)|i>`, the diagonal of the Choi matrix.
pub fn superdecohere(phi: &Superoperator) -> Result<StochasticMatrix> {
    let d = phi.dim();
    let m = phi.matrix();
    let mat = RMat::from_fn(d, d, |i, j| m[(i * d + i, j * d + j)].re);
    StochasticMatrix::renormalized(mat)
}

/// Affine form of `T` on the diagonal generators `H_1..H_{d-1}`:
/// `M_kl = h_k^T T h_l / (d(d-1))`, `t_k = h_k^T T 1 / (d(d-1))`.
pub fn classical_affine(t: &StochasticMatrix) -> (RMat, DVector<f64>) {
    let d = t.dim();
    let basis = OperatorBasis::gell_mann(d).expect("d >= 2");
    let h: Vec<DVector<f64>> = (0..d - 1)
        .map(|k| DVector::from_fn(d, |i, _| basis.gamma(k)[(i, i)].re))
        .collect();
    let norm = basis.norm();
    let ones = DVector::from_element(d, 1.0);
    let m = RMat::from_fn(d - 1, d - 1, |k, l| h[k].dot(&(&t.mat * &h[l])) / norm);
    let tv = DVector::from_fn(d - 1, |k, _| h[k].dot(&(&t.mat * &ones)) / norm);
    (m, tv)
}

/// Exact ensemble moments over column-wise uniform stochastic matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTheory {
    pub mean_before: BigRational,
    pub var_before: BigRational,
    pub mean_after: BigRational,
}

impl EnsembleTheory {
    pub fn mean_before_f64(&self) -> f64 {
        self.mean_before.to_f64().unwrap_or(f64::NAN)
    }

    pub fn var_before_f64(&self) -> f64 {
        self.var_before.to_f64().unwrap_or(f64::NAN)
    }

    pub fn mean_after_f64(&self) -> f64 {
        self.mean_after.to_f64().unwrap_or(f64::NAN)
    }
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `<F> = 1/d`, `Var F = (d-1)/(d^3 (d+1))` and
/// `<F_after> = 1 + sum_{n=1}^d (-1)^n C(d,n) (d-1)n/((d-1)n+1)`.
pub fn classical_ensemble_theory(d: usize) -> Result<EnsembleTheory> {
    if d < 2 {
        return invalid("dimension must be >= 2");
    }
    let dd = d as u64;
    let di = BigInt::from(dd);
    let mean_before = BigRational::new(BigInt::one(), di.clone());
    let var_before = BigRational::new(
        di.clone() - 1,
        di.clone() * &di * &di * (di.clone() + 1),
    );
    let mut mean_after = BigRational::one();
    for n in 1..=dd {
        let a = BigInt::from((dd - 1) * n);
        let term = BigRational::new(a.clone(), a + 1) * BigRational::from_integer(binomial(dd, n));
        if n % 2 == 1 {
            mean_after -= term;
        } else {
            mean_after += term;
        }
    }
    debug_assert!(mean_after > BigRational::zero());
    Ok(EnsembleTheory {
        mean_before,
        var_before,
        mean_after,
    })
}

/// JSON encoding `{"dim": d, "mat": [[...]]}` with rows of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticFile {
    pub dim: usize,
    pub mat: Vec<Vec<f64>>,
}

impl From<&StochasticMatrix> for StochasticFile {
    fn from(t: &StochasticMatrix) -> Self {
        Self {
            dim: t.dim(),
            mat: t.rows(),
        }
    }
}

impl StochasticFile {
    pub fn to_matrix(&self) -> Result<StochasticMatrix> {
        let d = self.dim;
        if self.mat.len() != d || self.mat.iter().any(|r| r.len() != d) {
            return Err(QinvError::Format(format!("field \"mat\" must be a {d}x{d} array")));
        }
        StochasticMatrix::renormalized(RMat::from_fn(d, d, |i, j| self.mat[i][j]))
    }
}

mod rows_serde {
    use super::{StochasticFile, StochasticMatrix};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &StochasticMatrix, s: S) -> Result<S::Ok, S::Error> {
        t.rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<StochasticMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        StochasticFile { dim: rows.len(), mat: rows }
            .to_matrix()
            .map_err(serde::de::Error::custom)
    }
}
