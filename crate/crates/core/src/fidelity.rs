//! Average and entanglement fidelities, corrected fidelity and spectral bounds.

use serde::{Deserialize, Serialize};

use crate::channel::{AffinePair, ChoiMatrix, Superoperator};
use crate::error::{check_dim, invalid, QinvError, Result};
use crate::io::EncodedMatrix;
use crate::linalg::{max_eigenvalue, CMat};
use crate::unitary_opt::{choi_factors, maximize_overlap, UnitaryOptions};

/// Imaginary parts up to this size are dropped from quantities that must be real.
pub const IMAG_TOL: f64 = 1e-9;

fn real_part(z: num_complex::Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL {
        return Err(QinvError::ComplexResidue(z.im));
    }
    Ok(z.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub avg_fidelity: f64,
    pub ent_fidelity: f64,
    pub trace_phi: f64,
}

/// `(d + Tr Phi) / (d (d+1))`.
pub fn avg_fidelity(phi: &Superoperator) -> Result<f64> {
    let d = phi.dim() as f64;
    Ok((d + real_part(phi.trace())?) / (d * (d + 1.0)))
}

/// `Tr Phi / d^2`.
pub fn entanglement_fidelity(phi: &Superoperator) -> Result<f64> {
    let d = phi.dim() as f64;
    Ok(real_part(phi.trace())? / (d * d))
}

pub fn fidelity_report(phi: &Superoperator) -> Result<FidelityReport> {
    Ok(FidelityReport {
        avg_fidelity: avg_fidelity(phi)?,
        ent_fidelity: entanglement_fidelity(phi)?,
        trace_phi: real_part(phi.trace())?,
    })
}

/// `Tr(A B)` summed so that swapping the arguments gives the identical float.
pub fn trace_product(a: &CMat, b: &CMat) -> num_complex::Complex64 {
    let n = a.nrows();
    let mut s1 = num_complex::Complex64::new(0.0, 0.0);
    let mut s2 = s1;
    for i in 0..n {
        for j in 0..n {
            s1 += a[(i, j)] * b[(j, i)];
            s2 += b[(i, j)] * a[(j, i)];
        }
    }
    (s1 + s2) * 0.5
}

/// Average fidelity of `E' o E`: `(1 + Re Tr(Phi' Phi)/d) / (d+1)`.
pub fn corrected_fidelity(phi_prime: &Superoperator, phi: &Superoperator) -> Result<f64> {
    check_dim(phi.dim(), phi_prime.dim())?;
    let d = phi.dim() as f64;
    let t = real_part(trace_product(phi_prime.matrix(), phi.matrix()))?;
    Ok((1.0 + t / d) / (d + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub lower: f64,
    pub upper: f64,
    pub p_max: f64,
    pub fef: f64,
    /// Unitary `W` with `sum_a |Tr(W K_a)|^2 / d = fef`; conjugation by `W`
    /// attains the lower bound.
    pub fef_witness: EncodedMatrix,
}

/// Lower bound `max_W sum_a |Tr(W K_a)|^2 / d` on the fully entangled
/// fraction `max_beta <beta|C|beta>`, with the maximizing unitary.
pub fn fully_entangled_fraction(c: &ChoiMatrix, opts: &UnitaryOptions) -> (f64, CMat) {
    let d = c.dim();
    let ops = choi_factors(c.matrix(), d);
    if ops.is_empty() {
        return (0.0, crate::linalg::identity(d));
    }
    let (w, v) = maximize_overlap(&ops, opts);
    (v / d as f64, w)
}

/// `(f+1)/(d+1) <= F(E^qi o E) <= (p_max+1)/(d+1)`.
pub fn fidelity_bounds(c: &ChoiMatrix, opts: &UnitaryOptions) -> BoundCertificate {
    let d = c.dim() as f64;
    let p_max = max_eigenvalue(c.matrix());
    let (fef, w) = fully_entangled_fraction(c, opts);
    BoundCertificate {
        lower: (fef + 1.0) / (d + 1.0),
        upper: (p_max + 1.0) / (d + 1.0),
        p_max,
        fef,
        fef_witness: EncodedMatrix::from_matrix(&w),
    }
}

/// `-log2(d F_E)` for the optimally corrected entanglement fidelity `F_E`.
pub fn min_entropy_of_channel(fe_corrected: f64, d: usize) -> Result<f64> {
    if !(fe_corrected > 0.0 && fe_corrected <= 1.0 + 1e-12) {
        return invalid(format!("entanglement fidelity must lie in (0, 1], got {fe_corrected}"));
    }
    Ok(-(d as f64 * fe_corrected).log2())
}

/// `Tr((C/d)^2)`, equal to 1 exactly for unitary channels.
pub fn jamiolkowski_purity(c: &ChoiMatrix) -> f64 {
    let d = c.dim() as f64;
    c.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>() / (d * d)
}

/// `1 - |t|^2`.
pub fn unitality(a: &AffinePair) -> f64 {
    1.0 - a.t.norm_squared()
}
