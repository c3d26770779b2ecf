//! Named channel families.

use serde::{Deserialize, Serialize};

use crate::channel::{kraus_to_superop, ChannelRep, KrausSet, Superoperator};
use crate::error::{invalid, Result};
use crate::io::EncodedMatrix;
use crate::linalg::{c64, identity, max_abs_diff, paulis, swap_operator, trace, unitarity_defect, CMat, CVec};

const PARAM_TOL: f64 = 1e-12;
const STRUCT_TOL: f64 = 1e-8;

/// `|phi+><phi+|` with `|phi+> = sum_i |ii> / sqrt(d)`.
pub fn phi_plus_projector(d: usize) -> CMat {
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = c64(1.0 / (d as f64).sqrt(), 0.0);
    }
    &v * v.adjoint()
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return invalid("empty probability vector");
    }
    if let Some(x) = p.iter().find(|&&x| !(x >= -PARAM_TOL)) {
        return invalid(format!("weight {x} is negative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return invalid(format!("weights sum to {s}, expected 1"));
    }
    Ok(())
}

/// `rho -> (1-q) rho + q Tr(rho) I/d`, requires `0 <= q <= 1`.
pub fn depolarizing(d: usize, q: f64) -> Result<Superoperator> {
    if d < 2 {
        return invalid("dimension must be >= 2");
    }
    if !(-PARAM_TOL..=1.0 + PARAM_TOL).contains(&q) {
        return invalid(format!("depolarizing requires 0 <= q <= 1, got q = {q}"));
    }
    let mat = identity(d * d) * c64(1.0 - q, 0.0) + phi_plus_projector(d) * c64(q, 0.0);
    Superoperator::new(d, mat)
}

/// `rho -> (1-w) rho^T + w Tr(rho) I/d`, CP for `d/(d+1) <= w <= d/(d-1)`.
pub fn transverse_depolarizing(d: usize, w: f64) -> Result<Superoperator> {
    if d < 2 {
        return invalid("dimension must be >= 2");
    }
    let df = d as f64;
    let (lo, hi) = (df / (df + 1.0), df / (df - 1.0));
    if w < lo - PARAM_TOL || w > hi + PARAM_TOL {
        return invalid(format!(
            "transverse depolarizing requires d/(d+1) <= w <= d/(d-1), i.e. {lo} <= w <= {hi}, got w = {w}"
        ));
    }
    let mat = swap_operator(d) * c64(1.0 - w, 0.0) + phi_plus_projector(d) * c64(w, 0.0);
    Superoperator::new(d, mat)
}

/// `E_+ (rho) = (Tr(rho) I + rho^T)/(d+1)`.
pub fn e_plus(d: usize) -> Result<Superoperator> {
    transverse_depolarizing(d, d as f64 / (d as f64 + 1.0))
}

/// Werner-Holevo channel `E_- (rho) = (Tr(rho) I - rho^T)/(d-1)`.
pub fn werner_holevo(d: usize) -> Result<Superoperator> {
    transverse_depolarizing(d, d as f64 / (d as f64 - 1.0))
}

/// Qubit Pauli channel with weights on `I, X, Y, Z`.
pub fn pauli(p: [f64; 4]) -> Result<KrausSet> {
    check_probabilities(&p)?;
    let ops = paulis()
        .iter()
        .zip(p)
        .filter(|(_, w)| *w > 0.0)
        .map(|(s, w)| s * c64(w.sqrt(), 0.0))
        .collect();
    KrausSet::new(ops)
}

/// `rho -> sum_k p_k U_k rho U_k^dagger`.
pub fn mixed_unitary(weights: &[f64], unitaries: &[CMat]) -> Result<Superoperator> {
    check_probabilities(weights)?;
    if weights.len() != unitaries.len() {
        return invalid(format!("{} weights for {} unitaries", weights.len(), unitaries.len()));
    }
    let d = unitaries[0].nrows();
    let mut mat = CMat::zeros(d * d, d * d);
    for (u, &p) in unitaries.iter().zip(weights) {
        if u.shape() != (d, d) {
            return invalid(format!("unitary of shape {:?}, expected {d}x{d}", u.shape()));
        }
        let defect = unitarity_defect(u);
        if defect > STRUCT_TOL {
            return invalid(format!("matrix is not unitary (defect {defect:e})"));
        }
        mat += Superoperator::unitary(u).into_matrix() * c64(p, 0.0);
    }
    Superoperator::new(d, mat)
}

/// `J_x, J_y, J_z` of the spin-`j` irrep in the basis `m = j, j-1, ..., -j`.
pub fn su2_generators(j: f64) -> Result<[CMat; 3]> {
    let two_j = (2.0 * j).round();
    if j <= 0.0 || (2.0 * j - two_j).abs() > PARAM_TOL {
        return invalid(format!("spin must be a positive half-integer, got {j}"));
    }
    let d = two_j as usize + 1;
    let m = |k: usize| j - k as f64;
    let mut jp = CMat::zeros(d, d);
    for k in 1..d {
        // <m+1|J_+|m> with m = m(k)
        let mk = m(k);
        jp[(k - 1, k)] = c64((j * (j + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c64(0.5, 0.0);
    let jy = (&jp - &jm) * c64(0.0, -0.5);
    let jz = CMat::from_fn(d, d, |a, b| if a == b { c64(m(a), 0.0) } else { c64(0.0, 0.0) });
    Ok([jx, jy, jz])
}

/// Landau-Streater channel on `d = 2j+1` with Kraus operators `J_i / sqrt(j(j+1))`.
pub fn landau_streater(j: f64) -> Result<KrausSet> {
    let s = 1.0 / (j * (j + 1.0)).sqrt();
    let ops = su2_generators(j)?.into_iter().map(|g| g * c64(s, 0.0)).collect();
    KrausSet::new(ops)
}

/// Checks `sum X^dagger X = sum X X^dagger = I` and `Tr(X_a^dagger X_b) = (d/q) delta_ab`.
pub fn check_orthogonal_conjugations(xs: &[CMat]) -> Result<()> {
    let Some(first) = xs.first() else {
        return invalid("empty operator list");
    };
    let d = first.nrows();
    let q = xs.len() as f64;
    let mut left = CMat::zeros(d, d);
    let mut right = CMat::zeros(d, d);
    for x in xs {
        if x.shape() != (d, d) {
            return invalid(format!("operator of shape {:?}, expected {d}x{d}", x.shape()));
        }
        left += x.adjoint() * x;
        right += x * x.adjoint();
    }
    let id = identity(d);
    if max_abs_diff(&left, &id) > STRUCT_TOL {
        return invalid("sum X^dagger X != I");
    }
    if max_abs_diff(&right, &id) > STRUCT_TOL {
        return invalid("sum X X^dagger != I (channel is not unital)");
    }
    for (a, xa) in xs.iter().enumerate() {
        for (b, xb) in xs.iter().enumerate() {
            let g = trace(&(xa.adjoint() * xb));
            let want = if a == b { d as f64 / q } else { 0.0 };
            if (g - c64(want, 0.0)).norm() > STRUCT_TOL {
                return invalid(format!(
                    "Tr(X_{a}^dagger X_{b}) = {g}, expected {want} (operators must be orthogonal with norm d/q)"
                ));
            }
        }
    }
    Ok(())
}

/// Uniform conjugation channel `rho -> sum X_a rho X_a^dagger`.
pub fn orthogonal_conjugations(xs: Vec<CMat>) -> Result<KrausSet> {
    check_orthogonal_conjugations(&xs)?;
    KrausSet::new(xs)
}

/// Fixed rotated basis used for the measurement projectors of the stretch
/// channel: the discrete Fourier matrix `F_jk = exp(2 pi i jk/d)/sqrt(d)`.
pub fn fourier_matrix(d: usize) -> CMat {
    let s = 1.0 / (d as f64).sqrt();
    CMat::from_fn(d, d, |j, k| {
        let ang = 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64;
        num_complex::Complex64::from_polar(s, ang)
    })
}

fn stretch_check(d1: usize, d2: usize, m1: usize, m2: usize) -> Result<usize> {
    if d1 == 0 || d2 == 0 || m1 == 0 || m2 == 0 {
        return invalid("all ranks d1, d2, m1, m2 must be positive");
    }
    if d1 + d2 != m1 + m2 {
        return invalid(format!("requires d1 + d2 = m1 + m2, got {d1}+{d2} != {m1}+{m2}"));
    }
    Ok(d1 + d2)
}

/// Measure-and-prepare channel `rho -> Tr(Q1 rho) P1/d1 + Tr(Q2 rho) P2/d2`.
///
/// `P1` projects on the first `d1` computational states, `Q1` on the first `m1`
/// columns of [`fourier_matrix`].
pub fn stretch_channel(d1: usize, d2: usize, m1: usize, m2: usize) -> Result<KrausSet> {
    let d = stretch_check(d1, d2, m1, m2)?;
    let f = fourier_matrix(d);
    let mut ops = Vec::with_capacity(d1 * m1 + d2 * m2);
    let blocks = [(0..d1, 0..m1, d1), (d1..d, m1..d, d2)];
    for (outs, ins, rank) in blocks {
        let s = c64(1.0 / (rank as f64).sqrt(), 0.0);
        for i in outs {
            for a in ins.clone() {
                let mut k = CMat::zeros(d, d);
                for c in 0..d {
                    k[(i, c)] = f[(c, a)].conj() * s;
                }
                ops.push(k);
            }
        }
    }
    KrausSet::new(ops)
}

/// The traceless unit axes `(A, B)` of the stretch channel, `Tr A^2 = Tr B^2 = d`:
/// a state `(I + x A)/d` is mapped to `(I + x' B)/d`.
pub fn stretch_axes(d1: usize, d2: usize, m1: usize, m2: usize) -> Result<(CMat, CMat)> {
    let d = stretch_check(d1, d2, m1, m2)?;
    let f = fourier_matrix(d);
    let mut q1 = CMat::zeros(d, d);
    for a in 0..m1 {
        let col = f.column(a);
        q1 += &col * col.adjoint();
    }
    let q2 = identity(d) - &q1;
    let mut p1 = CMat::zeros(d, d);
    for i in 0..d1 {
        p1[(i, i)] = c64(1.0, 0.0);
    }
    let p2 = identity(d) - &p1;
    let (m1f, m2f, d1f, d2f) = (m1 as f64, m2 as f64, d1 as f64, d2 as f64);
    let a = (q1 * c64(m2f, 0.0) - q2 * c64(m1f, 0.0)) / c64((m1f * m2f).sqrt(), 0.0);
    let b = (p1 * c64(d2f, 0.0) - p2 * c64(d1f, 0.0)) / c64((d1f * d2f).sqrt(), 0.0);
    Ok((a, b))
}

/// Closed-form image coordinate `x' = sqrt(m1 m2/(d1 d2)) x + (m1 d2 - m2 d1)/(d sqrt(d1 d2))`.
pub fn stretch_image(d1: usize, d2: usize, m1: usize, m2: usize, x: f64) -> f64 {
    let (m1, m2, d1, d2) = (m1 as f64, m2 as f64, d1 as f64, d2 as f64);
    let d = d1 + d2;
    (m1 * m2 / (d1 * d2)).sqrt() * x + (m1 * d2 - m2 * d1) / (d * (d1 * d2).sqrt())
}

/// Superoperator `sum_ij w_ij |ij><ij|` of a mixture of diagonal unitaries
/// `diag(exp(i theta^(k)))` with `w_ij = sum_k p_k exp(i(theta_i - theta_j))`.
pub fn commuting_unitary_mixture(weights: &[f64], phases: &[Vec<f64>]) -> Result<Superoperator> {
    let w = dephasing_matrix(weights, phases)?;
    let d = w.nrows();
    let mut mat = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            mat[(i * d + j, i * d + j)] = w[(i, j)];
        }
    }
    Superoperator::new(d, mat)
}

/// The Hermitian matrix `W` with `w_ij = sum_k p_k exp(i(theta_i^(k) - theta_j^(k)))`.
pub fn dephasing_matrix(weights: &[f64], phases: &[Vec<f64>]) -> Result<CMat> {
    check_probabilities(weights)?;
    if weights.len() != phases.len() {
        return invalid(format!("{} weights for {} phase vectors", weights.len(), phases.len()));
    }
    let d = phases[0].len();
    if d < 2 {
        return invalid("phase vectors must have length >= 2");
    }
    if phases.iter().any(|t| t.len() != d) {
        return invalid("phase vectors of unequal length");
    }
    let mut w = CMat::zeros(d, d);
    for (theta, &p) in phases.iter().zip(weights) {
        for i in 0..d {
            for j in 0..d {
                w[(i, j)] += num_complex::Complex64::from_polar(p, theta[i] - theta[j]);
            }
        }
    }
    Ok(w)
}

/// Phase vectors `(tau, 0, -tau)` of the spin-1 rotation `diag(e^{i tau}, 1, e^{-i tau})`.
pub fn spin1_phases(tau: f64) -> Vec<f64> {
    vec![tau, 0.0, -tau]
}

/// Spin-1 random rotation about `z` for a discrete distribution `{(tau_k, p_k)}`.
pub fn spin1_dephasing(dist: &[(f64, f64)]) -> Result<Superoperator> {
    let (weights, phases): (Vec<f64>, Vec<Vec<f64>>) =
        dist.iter().map(|&(tau, p)| (p, spin1_phases(tau))).unzip();
    commuting_unitary_mixture(&weights, &phases)
}

/// A named constructor together with its parameters, stored alongside a channel
/// so that analytic solvers can be selected later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Constructor {
    Depolarizing { dim: usize, q: f64 },
    TransverseDepolarizing { dim: usize, w: f64 },
    Pauli { p: [f64; 4] },
    MixedUnitary { weights: Vec<f64>, unitaries: Vec<EncodedMatrix> },
    LandauStreater { j: f64 },
    OrthogonalConjugations { ops: Vec<EncodedMatrix> },
    Stretch { d1: usize, d2: usize, m1: usize, m2: usize },
    Spin1Dephasing { taus: Vec<f64>, probs: Vec<f64> },
    CommutingUnitary { weights: Vec<f64>, phases: Vec<Vec<f64>> },
}

impl Constructor {
    pub fn build(&self) -> Result<ChannelRep> {
        Ok(match self {
            Constructor::Depolarizing { dim, q } => ChannelRep::Superop(depolarizing(*dim, *q)?),
            Constructor::TransverseDepolarizing { dim, w } => {
                ChannelRep::Superop(transverse_depolarizing(*dim, *w)?)
            }
            Constructor::Pauli { p } => ChannelRep::Kraus(pauli(*p)?),
            Constructor::MixedUnitary { weights, unitaries } => {
                let us = decode_all(unitaries)?;
                ChannelRep::Superop(mixed_unitary(weights, &us)?)
            }
            Constructor::LandauStreater { j } => ChannelRep::Kraus(landau_streater(*j)?),
            Constructor::OrthogonalConjugations { ops } => {
                ChannelRep::Kraus(orthogonal_conjugations(decode_all(ops)?)?)
            }
            Constructor::Stretch { d1, d2, m1, m2 } => {
                ChannelRep::Kraus(stretch_channel(*d1, *d2, *m1, *m2)?)
            }
            Constructor::Spin1Dephasing { taus, probs } => {
                if taus.len() != probs.len() {
                    return invalid("taus and probs differ in length");
                }
                let dist: Vec<(f64, f64)> = taus.iter().copied().zip(probs.iter().copied()).collect();
                ChannelRep::Superop(spin1_dephasing(&dist)?)
            }
            Constructor::CommutingUnitary { weights, phases } => {
                ChannelRep::Superop(commuting_unitary_mixture(weights, phases)?)
            }
        })
    }
}

fn decode_all(ms: &[EncodedMatrix]) -> Result<Vec<CMat>> {
    ms.iter().map(EncodedMatrix::to_matrix).collect()
}

/// Superoperator of any constructor output.
pub fn build_superop(c: &Constructor) -> Result<Superoperator> {
    match c.build()? {
        ChannelRep::Kraus(k) => Ok(kraus_to_superop(&k)),
        other => other.to_superop(),
    }
}
