//! Dense complex linear-algebra helpers shared by every module.
//!
//! Vectorization is row-major throughout: `vec(|i><j|) = |i, j>`, so entry
//! `A[(i, j)]` of a `d x d` matrix lands at index `i * d + j`. Bipartite
//! indices `(a, b)` on `C^d (x) C^d` likewise map to `a * d + b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Kronecker product with row index `i * b.nrows() + k`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Largest entry modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `||A - A^dagger||_max`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Approximate equality in the max norm.
pub fn approx_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Only the Hermitian part of `a` is used.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(hermitian_part(a))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigenvalues(a)[0]
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    *hermitian_eigenvalues(a).last().unwrap()
}

/// Row-major vectorization of a matrix.
pub fn vectorize(a: &CMat) -> CVec {
    let (r, c) = a.shape();
    CVec::from_fn(r * c, |k, _| a[(k / c, k % c)])
}

/// Inverse of [`vectorize`] for a square `d x d` result.
pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d);
    CMat::from_fn(d, d, |i, j| v[i * d + j])
}

/// Trace over the first tensor factor of a `(d*d) x (d*d)` matrix:
/// `Y[j, l] = sum_i A[(i, j), (i, l)]`.
pub fn partial_trace_first(a: &CMat, d: usize) -> CMat {
    assert_eq!(a.nrows(), d * d);
    CMat::from_fn(d, d, |j, l| (0..d).map(|i| a[(i * d + j, i * d + l)]).sum())
}

/// Trace over the second tensor factor: `Y[i, k] = sum_j A[(i, j), (k, j)]`.
pub fn partial_trace_second(a: &CMat, d: usize) -> CMat {
    assert_eq!(a.nrows(), d * d);
    CMat::from_fn(d, d, |i, k| (0..d).map(|j| a[(i * d + j, k * d + j)]).sum())
}

/// Swap operator `S|i, j> = |j, i>`.
pub fn swap_operator(d: usize) -> CMat {
    let mut s = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// Reshuffle `A^R[(i, j), (k, l)] = A[(i, k), (j, l)]`. An involution.
pub fn reshuffle(a: &CMat, d: usize) -> CMat {
    assert_eq!(a.nrows(), d * d);
    assert_eq!(a.ncols(), d * d);
    let mut r = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    r[(i * d + j, k * d + l)] = a[(i * d + k, j * d + l)];
                }
            }
        }
    }
    r
}

/// `exp(iH)` for Hermitian `H`.
pub fn expm_i_hermitian(h: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&x| Complex64::from_polar(1.0, x)),
    ));
    &vecs * phases * vecs.adjoint()
}

/// Unitary maximizing `Re Tr(U A)`: with `A = W S V^dagger`, `U = V W^dagger`.
pub fn polar_maximizer(a: &CMat) -> CMat {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors");
    let v_t = svd.v_t.expect("right singular vectors");
    v_t.adjoint() * u.adjoint()
}

/// `||U^dagger U - 1||_max`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// `H^{-1/2}` for a positive definite Hermitian matrix.
pub fn inverse_sqrt_hermitian(h: &CMat) -> Option<CMat> {
    let (vals, vecs) = hermitian_eigen(h);
    if vals[0] <= 0.0 {
        return None;
    }
    let diag = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&x| c64(1.0 / x.sqrt(), 0.0)),
    ));
    Some(&vecs * diag * vecs.adjoint())
}

/// Matrix of i.i.d. standard complex Gaussians (`E|z|^2 = 1`).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(s * re, s * im)
    })
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with
/// the phases of `R`'s diagonal absorbed.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for k in 0..d {
        let z = r[(k, k)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { ONE };
        let mut col = q.column_mut(k);
        col *= ph;
    }
    q
}

/// Diagonal matrix with the given real entries.
pub fn real_diag(entries: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(
        entries.len(),
        entries.iter().map(|&x| c64(x, 0.0)),
    ))
}

/// Pauli matrices `I, X, Y, Z`.
pub fn paulis() -> [CMat; 4] {
    let i2 = identity(2);
    let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let y = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let z = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [i2, x, y, z]
}
