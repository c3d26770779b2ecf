//! Seeded random samplers and Monte Carlo runners.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::OperatorBasis;
use crate::channel::{superop_to_affine, ChoiMatrix};
use crate::classical::{classical_avg_fidelity, classical_ensemble_theory, classical_quasi_inverse, StochasticMatrix};
use crate::error::{invalid, QinvError, Result};
use crate::fidelity::{jamiolkowski_purity, unitality};
use crate::qinvert::{qi_commuting_unitary, quasi_inverse_lp, LpOptions};
use crate::linalg::{c64, ginibre, identity, inverse_sqrt_hermitian, kron, partial_trace_first, CVec, RMat};

/// Generator for sample `index` of a run: stream `index` of the ChaCha8
/// generator keyed by `seed`, so samples can be drawn in any order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Hilbert-Schmidt random channel: `W = G G^dagger` normalized by
/// `(I (x) Y^{-1/2}) W (I (x) Y^{-1/2})`, `Y = Tr_out W`.
pub fn random_channel<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ChoiMatrix> {
    if d < 2 {
        return invalid("dimension must be >= 2");
    }
    loop {
        let g = ginibre(d * d, d * d, rng);
        let w = &g * g.adjoint();
        let y = partial_trace_first(&w, d);
        let Some(ys) = inverse_sqrt_hermitian(&y) else {
            continue;
        };
        let n = kron(&identity(d), &ys);
        let c = &n * w * &n;
        let c = (&c + c.adjoint()) * c64(0.5, 0.0);
        return ChoiMatrix::new(d, c);
    }
}

/// Column-stochastic matrix with independent uniform (Dirichlet(1,...,1)) columns.
pub fn random_stochastic<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<StochasticMatrix> {
    if d < 2 {
        return invalid("dimension must be >= 2");
    }
    let mut m = RMat::zeros(d, d);
    for j in 0..d {
        let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        for (i, x) in e.iter().enumerate() {
            m[(i, j)] = x / s;
        }
    }
    StochasticMatrix::renormalized(m)
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CVec> {
    if d < 2 {
        return invalid("dimension must be >= 2");
    }
    let g = ginibre(d, 1, rng);
    let v = CVec::from_iterator(d, g.iter().copied());
    let n = v.norm();
    Ok(v / c64(n, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub mode: Mode,
    pub lp: LpOptions,
    /// Worker threads; 0 uses the global rayon pool.
    pub jobs: usize,
}

impl EnsembleConfig {
    pub fn new(mode: Mode, dim: usize, samples: usize, seed: u64) -> Self {
        Self {
            dim,
            samples,
            seed,
            mode,
            lp: LpOptions::default(),
            jobs: 0,
        }
    }

    /// Default sample count: 500 quantum samples up to `d = 3`, 200 above,
    /// and 10^5 classical samples.
    pub fn default_samples(mode: Mode, dim: usize) -> usize {
        match mode {
            Mode::Quantum if dim <= 3 => 500,
            Mode::Quantum => 200,
            Mode::Classical => 100_000,
        }
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return invalid("sample count must be >= 1");
        }
        if self.dim < 2 {
            return invalid("dimension must be >= 2");
        }
        Ok(())
    }
}

/// One CSV row. Quantum-only columns are empty for classical runs, where
/// `f_qi` holds the classical corrected fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub index: u64,
    pub d: usize,
    pub f_before: f64,
    pub f_unitary: Option<f64>,
    pub f_qi: f64,
    pub jam_purity: Option<f64>,
    pub unitality: Option<f64>,
    pub lp_iters: Option<usize>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub se: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTheory {
    pub mean_before: f64,
    pub var_before: f64,
    pub mean_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mode: Mode,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub mean_before: Estimate,
    /// Sample variance of the per-sample fidelity, with its standard error.
    pub var_before: Estimate,
    pub mean_after_unitary: Option<Estimate>,
    pub mean_after_qi: Estimate,
    pub mean_jam_purity: Option<Estimate>,
    pub mean_unitality: Option<Estimate>,
    /// Samples whose LP did not converge; left out of the qi averages.
    pub excluded: usize,
    pub theory: Option<ClassicalTheory>,
}

/// Pairwise summation, so the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { mean: f64::NAN, se: f64::NAN, n };
    }
    let nf = n as f64;
    let mean = pairwise_sum(xs) / nf;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = if n > 1 { pairwise_sum(&dev) / (nf - 1.0) } else { 0.0 };
    Estimate { mean, se: (var / nf).sqrt(), n }
}

/// Sample variance with the standard error `sqrt((m4 - s^4)/n)`.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let nf = n as f64;
    if n < 2 {
        return Estimate { mean: f64::NAN, se: f64::NAN, n };
    }
    let mean = pairwise_sum(xs) / nf;
    let d2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let d4: Vec<f64> = d2.iter().map(|x| x * x).collect();
    let m2 = pairwise_sum(&d2) / nf;
    let m4 = pairwise_sum(&d4) / nf;
    Estimate {
        mean: m2 * nf / (nf - 1.0),
        se: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
        n,
    }
}

fn run_parallel<T: Send>(jobs: usize, n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let work = || (0..n as u64).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    if jobs == 0 {
        return work();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| QinvError::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(work)
}

/// Per-sample pipeline on one Hilbert-Schmidt random channel.
pub fn quantum_sample(d: usize, seed: u64, index: u64, lp: &LpOptions) -> Result<SampleRow> {
    let mut rng = sample_rng(seed, index);
    let c = random_channel(d, &mut rng)?;
    let mut opts = *lp;
    opts.seed = rng.next_u64();
    opts.unitary.seed = rng.next_u64();
    let phi = c.to_superop();
    let r = quasi_inverse_lp(&phi, &opts)?;
    let qi = r.qi_choi()?;
    let affine = superop_to_affine(&qi.to_superop(), &OperatorBasis::gell_mann(d)?)?;
    Ok(SampleRow {
        index,
        d,
        f_before: r.fidelity_before,
        f_unitary: Some(r.bound.lower),
        f_qi: r.fidelity_after,
        jam_purity: Some(jamiolkowski_purity(&qi)),
        unitality: Some(unitality(&affine)),
        lp_iters: Some(r.solver.iterations),
        converged: r.solver.converged,
    })
}

pub fn classical_sample(d: usize, seed: u64, index: u64) -> Result<SampleRow> {
    let mut rng = sample_rng(seed, index);
    let t = random_stochastic(d, &mut rng)?;
    let r = classical_quasi_inverse(&t);
    Ok(SampleRow {
        index,
        d,
        f_before: classical_avg_fidelity(&t),
        f_unitary: None,
        f_qi: r.fidelity_after,
        jam_purity: None,
        unitality: None,
        lp_iters: None,
        converged: true,
    })
}

pub fn run_samples(cfg: &EnsembleConfig) -> Result<Vec<SampleRow>> {
    cfg.check()?;
    let (d, seed) = (cfg.dim, cfg.seed);
    match cfg.mode {
        Mode::Quantum => run_parallel(cfg.jobs, cfg.samples, |k| quantum_sample(d, seed, k, &cfg.lp)),
        Mode::Classical => run_parallel(cfg.jobs, cfg.samples, |k| classical_sample(d, seed, k)),
    }
}

pub fn summarize(cfg: &EnsembleConfig, rows: &[SampleRow]) -> Result<EnsembleStats> {
    let col = |f: &dyn Fn(&SampleRow) -> Option<f64>, only_converged: bool| -> Vec<f64> {
        rows.iter().filter(|r| !only_converged || r.converged).filter_map(f).collect()
    };
    let quantum = cfg.mode == Mode::Quantum;
    let opt = |xs: Vec<f64>| if quantum { Some(estimate(&xs)) } else { None };
    let before = col(&|r| Some(r.f_before), false);
    Ok(EnsembleStats {
        mode: cfg.mode,
        dim: cfg.dim,
        samples: rows.len(),
        seed: cfg.seed,
        mean_before: estimate(&before),
        var_before: variance_estimate(&before),
        mean_after_unitary: opt(col(&|r| r.f_unitary, false)),
        mean_after_qi: estimate(&col(&|r| Some(r.f_qi), true)),
        mean_jam_purity: opt(col(&|r| r.jam_purity, true)),
        mean_unitality: opt(col(&|r| r.unitality, true)),
        excluded: rows.iter().filter(|r| !r.converged).count(),
        theory: if quantum {
            None
        } else {
            let t = classical_ensemble_theory(cfg.dim)?;
            Some(ClassicalTheory {
                mean_before: t.mean_before_f64(),
                var_before: t.var_before_f64(),
                mean_after: t.mean_after_f64(),
            })
        },
    })
}

pub fn run_quantum_ensemble(cfg: &EnsembleConfig) -> Result<(EnsembleStats, Vec<SampleRow>)> {
    if cfg.mode != Mode::Quantum {
        return invalid("configuration is not in quantum mode");
    }
    let rows = run_samples(cfg)?;
    Ok((summarize(cfg, &rows)?, rows))
}

pub fn run_classical_ensemble(cfg: &EnsembleConfig) -> Result<(EnsembleStats, Vec<SampleRow>)> {
    if cfg.mode != Mode::Classical {
        return invalid("configuration is not in classical mode");
    }
    let rows = run_samples(cfg)?;
    Ok((summarize(cfg, &rows)?, rows))
}

pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| QinvError::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| QinvError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| QinvError::Format(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    /// `y = c d^exponent`
    pub c: f64,
    pub exponent: f64,
    pub exponent_se: f64,
}

/// Least-squares fit of `log y = log c + x log d`.
pub fn fit_power_law(ds: &[f64], ys: &[f64]) -> Result<PowerLaw> {
    if ds.len() != ys.len() || ds.len() < 3 {
        return invalid("power-law fit needs at least three matching points");
    }
    if ds.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return invalid("power-law fit needs positive data");
    }
    let lx: Vec<f64> = ds.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    Ok(PowerLaw {
        c: icpt.exp(),
        exponent: slope,
        exponent_se: (rss / (n - 2.0) / sxx).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spin1Row {
    pub p: f64,
    pub tau0: f64,
    pub f_before: f64,
    pub f_after: f64,
    pub delta_f: f64,
    /// Phase of the correcting rotation `diag(e^{i tau_m}, 1, e^{-i tau_m})^dagger`.
    pub tau_m: f64,
}

/// Spin-1 dephasing with `P(tau = 0) = 1 - p`, `P(tau = tau0) = p`, corrected
/// by its quasi-inverse, for every grid pair.
pub fn spin1_sweep(p_grid: &[f64], tau0_grid: &[f64]) -> Result<Vec<Spin1Row>> {
    if p_grid.is_empty() || tau0_grid.is_empty() {
        return invalid("grids must be nonempty");
    }
    let mut out = Vec::with_capacity(p_grid.len() * tau0_grid.len());
    for &p in p_grid {
        for &tau0 in tau0_grid {
            let phases = [crate::constructors::spin1_phases(0.0), crate::constructors::spin1_phases(tau0)];
            let r = qi_commuting_unitary(&[1.0 - p, p], &phases)?;
            let phi = qi_phases(&r)?;
            let tau_m = (phi[0] / phi[1]).arg();
            out.push(Spin1Row {
                p,
                tau0,
                f_before: r.fidelity_before,
                f_after: r.fidelity_after,
                delta_f: r.gain(),
                tau_m,
            });
        }
    }
    Ok(out)
}

/// Diagonal phases `phi` of a diagonal unitary quasi-inverse `diag(phi)^dagger`,
/// read from its Choi matrix `C[(i,i),(j,j)] = conj(phi_i) phi_j`.
fn qi_phases(r: &crate::qinvert::QiResult) -> Result<Vec<num_complex::Complex64>> {
    let c = r.qi_choi()?;
    let d = c.dim();
    let m = c.matrix();
    // row 0: C[(0,0),(j,j)] = conj(phi_0) phi_j
    Ok((0..d).map(|j| m[(0, j * d + j)]).collect())
}
