//! Maximization of `sum_a |Tr(W K_a)|^2` over unitaries `W`.
//!
//! The objective is convex in `W`, so maximizing its linearization
//! `Re Tr(W A)`, `A = sum_a conj(Tr(W0 K_a)) K_a`, never decreases it. The
//! linearized problem is solved exactly by the polar factor of `A`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{c64, expm_i_hermitian, ginibre, hermitian_eigen, identity, polar_maximizer, trace, unvectorize, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitaryOptions {
    pub restarts: usize,
    pub iters: usize,
    /// Stop a run once an iteration gains less than this (absolute).
    pub tol: f64,
    pub seed: u64,
}

impl Default for UnitaryOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            iters: 500,
            tol: 1e-9,
            seed: 0,
        }
    }
}

/// Kraus-like factors `sqrt(lambda) unvec(v)` of a Hermitian Choi matrix,
/// keeping eigenvalues above `1e-14`.
pub fn choi_factors(choi: &CMat, d: usize) -> Vec<CMat> {
    let (vals, vecs) = hermitian_eigen(choi);
    vals.iter()
        .enumerate()
        .rev()
        .filter(|(_, &l)| l > 1e-14)
        .map(|(k, &l)| unvectorize(&(vecs.column(k).into_owned() * c64(l.sqrt(), 0.0)), d))
        .collect()
}

pub fn overlap(w: &CMat, ops: &[CMat]) -> f64 {
    ops.iter().map(|k| trace(&(w * k)).norm_sqr()).sum()
}

fn refine(mut w: CMat, ops: &[CMat], iters: usize, tol: f64) -> (CMat, f64) {
    let d = w.nrows();
    let mut val = overlap(&w, ops);
    for _ in 0..iters {
        let mut a = CMat::zeros(d, d);
        for k in ops {
            a += k * trace(&(&w * k)).conj();
        }
        let next = polar_maximizer(&a);
        let nv = overlap(&next, ops);
        if nv < val {
            break;
        }
        let gain = nv - val;
        w = next;
        val = nv;
        if gain < tol {
            break;
        }
    }
    (w, val)
}

/// Start number `k` of a run: the identity, then the polar factor of the
/// dominant operator, then `exp(iH)` for Gaussian Hermitian `H` drawn from
/// substream `k` of `seed`.
fn start(k: usize, ops: &[CMat], seed: u64) -> CMat {
    let d = ops[0].nrows();
    match k {
        0 => identity(d),
        1 => polar_maximizer(&ops[0].adjoint()),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let g = ginibre(d, d, &mut rng);
            let h = (&g + g.adjoint()) * c64(std::f64::consts::PI / 2.0, 0.0);
            expm_i_hermitian(&h)
        }
    }
}

/// Best unitary `W` and the value `sum_a |Tr(W K_a)|^2` over `2 + restarts`
/// runs. Restarts are independent of each other, so adding restarts can only
/// increase the returned value.
pub fn maximize_overlap(ops: &[CMat], opts: &UnitaryOptions) -> (CMat, f64) {
    let mut best: Option<(CMat, f64)> = None;
    for k in 0..opts.restarts + 2 {
        let (w, v) = refine(start(k, ops, opts.seed), ops, opts.iters, opts.tol);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((w, v));
        }
    }
    best.expect("at least one run")
}
