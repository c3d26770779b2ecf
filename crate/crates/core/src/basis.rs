//! Traceless Hermitian operator basis normalized to `Tr(G_i G_j) = d(d-1) delta_ij`.

use crate::error::{invalid, Result};
use crate::linalg::{c64, CMat, ZERO};
use num_complex::Complex64;

/// Generalized Gell-Mann matrices scaled to `Tr(G_i G_j) = d(d-1) delta_ij`.
///
/// Ordering: the `d-1` diagonal generators `H_1..H_{d-1}` first, then the
/// pairs `X_ij, Y_ij` for `i < j` in lexicographic order. With this ordering
/// the leading `(d-1) x (d-1)` block of a distortion matrix acts on diagonal
/// (classical) states only.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    gammas: Vec<CMat>,
}

impl OperatorBasis {
    pub fn gell_mann(d: usize) -> Result<Self> {
        if d < 2 {
            return invalid(format!("basis dimension must be >= 2, got {d}"));
        }
        let df = d as f64;
        let norm = df * (df - 1.0);
        let mut gammas = Vec::with_capacity(d * d - 1);
        for k in 1..d {
            let kf = k as f64;
            let scale = (norm / (kf * (kf + 1.0))).sqrt();
            let mut h = CMat::zeros(d, d);
            for i in 0..k {
                h[(i, i)] = c64(scale, 0.0);
            }
            h[(k, k)] = c64(-kf * scale, 0.0);
            gammas.push(h);
        }
        let off = (norm / 2.0).sqrt();
        for i in 0..d {
            for j in (i + 1)..d {
                let mut x = CMat::zeros(d, d);
                x[(i, j)] = c64(off, 0.0);
                x[(j, i)] = c64(off, 0.0);
                let mut y = CMat::zeros(d, d);
                y[(i, j)] = c64(0.0, -off);
                y[(j, i)] = c64(0.0, off);
                gammas.push(x);
                gammas.push(y);
            }
        }
        Ok(Self { dim: d, gammas })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of traceless generators, `d^2 - 1`.
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas(&self) -> &[CMat] {
        &self.gammas
    }

    pub fn gamma(&self, i: usize) -> &CMat {
        &self.gammas[i]
    }

    /// `r . Gamma`.
    pub fn combine(&self, coeffs: &[f64]) -> CMat {
        assert_eq!(coeffs.len(), self.len());
        let mut out = CMat::zeros(self.dim, self.dim);
        for (g, &r) in self.gammas.iter().zip(coeffs) {
            if r != 0.0 {
                out += g * c64(r, 0.0);
            }
        }
        out
    }

    /// `Tr(Gamma_i A)` for every generator.
    pub fn coefficients(&self, a: &CMat) -> Vec<Complex64> {
        self.gammas
            .iter()
            .map(|g| {
                // Tr(G A) = sum_ij G_ij A_ji
                let mut s = ZERO;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s += g[(i, j)] * a[(j, i)];
                    }
                }
                s
            })
            .collect()
    }

    /// The normalization constant `d(d-1)`.
    pub fn norm(&self) -> f64 {
        let d = self.dim as f64;
        d * (d - 1.0)
    }
}
