//! Quantum quasi-inversion: cutting-plane LP over Choi matrices, the best
//! unitary correction, and closed forms for special channel families.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    choi_to_superop, kraus_to_superop, superop_to_choi, tensor, validate_channel, ChannelRep, ChoiMatrix, KrausSet,
    Superoperator,
};
use crate::constructors::{
    check_orthogonal_conjugations, dephasing_matrix, e_plus, landau_streater, werner_holevo,
    Constructor,
};
use crate::error::{invalid, QinvError, Result};
use crate::fidelity::{avg_fidelity, corrected_fidelity, fidelity_bounds, BoundCertificate};
use crate::io::ChannelFile;
use crate::linalg::{c64, ginibre, hermitian_eigen, identity, min_eigenvalue, trace, unitarity_defect, CMat, CVec};
use crate::lp::{DualSimplex, LpStatus};
use crate::unitary_opt::{choi_factors, maximize_overlap, UnitaryOptions};

/// How the LP inequality pool is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutMode {
    /// Cuts on the dual problem, each one a new Choi column; `tol_psd` bounds
    /// the dual infeasibility at termination.
    DualCuts,
    /// Cuts `<v|C'|v> >= 0` on the Choi candidate, adding eigenvectors of
    /// negative eigenvalues until it is `tol_psd`-positive.
    ChoiCuts,
    /// A single LP over `count` random cuts, no separation rounds.
    RandomSample { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub tol_psd: f64,
    /// Limit on cuts added by separation (seed cuts are not counted).
    pub max_cuts: usize,
    pub seed: u64,
    pub mode: CutMode,
    pub max_pivots: usize,
    pub unitary: UnitaryOptions,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            tol_psd: 1e-8,
            max_cuts: 5000,
            seed: 0,
            mode: CutMode::DualCuts,
            max_pivots: 1_000_000,
            unitary: UnitaryOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub method: String,
    /// LP solves (cutting-plane rounds).
    pub iterations: usize,
    pub pivots: usize,
    pub constraints_added: usize,
    /// Smallest Choi eigenvalue of the last LP candidate, before repair.
    pub final_min_eig: f64,
    /// Corrected fidelity of the LP relaxation minus the returned value; an
    /// upper bound on the suboptimality when the LP solved to optimality.
    pub objective_gap: f64,
    pub converged: bool,
    pub degenerate: bool,
    /// The result is not guaranteed optimal (closed form outside its proven range).
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QiResult {
    /// Choi form.
    pub qi: ChannelRep,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
    pub bound: BoundCertificate,
    pub solver: SolverDiagnostics,
}

#[derive(Serialize)]
struct Bounds<'a> {
    lower: f64,
    upper: f64,
    p_max: f64,
    fef: f64,
    fef_witness: &'a crate::io::EncodedMatrix,
}

#[derive(Serialize)]
struct QiJson<'a> {
    qi: ChannelFile,
    fidelity_before: f64,
    fidelity_after: f64,
    bounds: Bounds<'a>,
    solver: &'a SolverDiagnostics,
}

impl QiResult {
    pub fn qi_superop(&self) -> Result<Superoperator> {
        self.qi.to_superop()
    }

    pub fn qi_choi(&self) -> Result<ChoiMatrix> {
        self.qi.to_choi()
    }

    pub fn gain(&self) -> f64 {
        self.fidelity_after - self.fidelity_before
    }

    pub fn to_json(&self) -> String {
        let b = &self.bound;
        let out = QiJson {
            qi: ChannelFile::from_rep(&self.qi, None),
            fidelity_before: self.fidelity_before,
            fidelity_after: self.fidelity_after,
            bounds: Bounds {
                lower: b.lower,
                upper: b.upper,
                p_max: b.p_max,
                fef: b.fef,
                fef_witness: &b.fef_witness,
            },
            solver: &self.solver,
        };
        serde_json::to_string_pretty(&out).expect("qi result serializes")
    }
}

fn finish(phi: &Superoperator, qi: Superoperator, unitary: &UnitaryOptions, solver: SolverDiagnostics) -> Result<QiResult> {
    let bound = fidelity_bounds(&superop_to_choi(phi), unitary);
    finish_with(phi, qi, bound, solver)
}

fn finish_with(phi: &Superoperator, qi: Superoperator, bound: BoundCertificate, solver: SolverDiagnostics) -> Result<QiResult> {
    Ok(QiResult {
        fidelity_before: avg_fidelity(phi)?,
        fidelity_after: corrected_fidelity(&qi, phi)?,
        bound,
        qi: ChannelRep::Choi(superop_to_choi(&qi)),
        solver,
    })
}

fn analytic(method: &str, qi: &Superoperator) -> SolverDiagnostics {
    SolverDiagnostics {
        method: method.into(),
        final_min_eig: min_eigenvalue(superop_to_choi(qi).matrix()),
        converged: true,
        ..Default::default()
    }
}

fn check_channel(phi: &Superoperator) -> Result<()> {
    let report = validate_channel(&superop_to_choi(phi));
    if !report.cp {
        return Err(QinvError::NotCp { min_eig: report.min_eig });
    }
    if !report.tp {
        return Err(QinvError::NotTp { residual: report.tp_residual });
    }
    Ok(())
}

/// Real parameterization of a Hermitian `n x n` matrix: the `n` diagonal
/// entries, then `(Re, Im)` of each upper entry `(a, b)`, `a < b`, row by row.
struct HermitianParams {
    n: usize,
}

impl HermitianParams {
    fn len(&self) -> usize {
        self.n * self.n
    }

    fn pair(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b);
        let p = a * self.n - a * (a + 1) / 2 + (b - a - 1);
        self.n + 2 * p
    }

    /// Coefficients `g` with `g . x = Re sum_ab M_ab C_ab` for Hermitian `C(x)`
    /// and any complex `M`.
    fn linear_form(&self, m: &CMat) -> Vec<f64> {
        let mut g = vec![0.0; self.len()];
        for a in 0..self.n {
            g[a] = m[(a, a)].re;
            for b in a + 1..self.n {
                let k = self.pair(a, b);
                let s = m[(a, b)] + m[(b, a)].conj();
                g[k] = s.re;
                g[k + 1] = -s.im;
            }
        }
        g
    }

    /// Cut `<v|C|v> >= 0`.
    fn quadratic_form(&self, v: &CVec) -> Vec<f64> {
        let mut g = vec![0.0; self.len()];
        for a in 0..self.n {
            g[a] = v[a].norm_sqr();
            for b in a + 1..self.n {
                let z = v[a].conj() * v[b];
                let k = self.pair(a, b);
                g[k] = 2.0 * z.re;
                g[k + 1] = -2.0 * z.im;
            }
        }
        g
    }

    fn assemble(&self, x: &[f64]) -> CMat {
        let mut c = CMat::zeros(self.n, self.n);
        for a in 0..self.n {
            c[(a, a)] = c64(x[a], 0.0);
            for b in a + 1..self.n {
                let k = self.pair(a, b);
                c[(a, b)] = c64(x[k], x[k + 1]);
                c[(b, a)] = c64(x[k], -x[k + 1]);
            }
        }
        c
    }
}

/// `D = S C S` with `S` the swap, so that `Tr(Phi' Phi) = sum_ab C'_ab D_ab`.
fn objective_matrix(phi: &Superoperator) -> CMat {
    let d = phi.dim();
    let c = superop_to_choi(phi).into_matrix();
    CMat::from_fn(d * d, d * d, |r, s| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (s / d, s % d);
        c[(j * d + i, l * d + k)]
    })
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    let g = ginibre(n, 1, rng);
    let v = CVec::from_iterator(n, g.iter().copied());
    let norm = v.norm();
    v / c64(norm, 0.0)
}

/// Choi matrix of the channel `(1 - eps) C + eps I/d` with `eps` chosen so the
/// result is positive semidefinite.
fn repair(c: &CMat, d: usize) -> CMat {
    let h = (c + c.adjoint()) * c64(0.5, 0.0);
    let lam = min_eigenvalue(&h);
    if lam >= 0.0 {
        return h;
    }
    let floor = 1.0 / d as f64;
    let eps = -lam / (-lam + floor) * (1.0 + 1e-9);
    h * c64(1.0 - eps, 0.0) + identity(d * d) * c64(eps * floor, 0.0)
}

/// Outcome of one of the LP loops, before repair and fallbacks.
struct LpOutcome {
    candidate: CMat,
    /// Upper bound on the optimal `Tr(Phi' Phi)` when one was certified.
    upper: Option<f64>,
    diag: SolverDiagnostics,
    /// Dual matrix `Y` with `I (x) Y >= E` (dual cuts only).
    dual: Option<CMat>,
}

/// Outer approximation: the Choi candidate `C'` is the LP variable and the
/// pool holds cuts `<v|C'|v> >= 0`.
fn choi_cuts(phi: &Superoperator, opts: &LpOptions, random_only: Option<usize>) -> Result<LpOutcome> {
    let d = phi.dim();
    let n = d * d;
    let params = HermitianParams { n };

    let cost = params.linear_form(&objective_matrix(phi));
    let mut lower = vec![-1.0; params.len()];
    let upper = vec![1.0; params.len()];
    lower[..n].fill(0.0);
    let mut lp = DualSimplex::new(cost, lower, upper)?;

    // Tr_out C' = I
    for j in 0..d {
        for l in j..d {
            let mut re = vec![0.0; params.len()];
            let mut im = vec![0.0; params.len()];
            for i in 0..d {
                let (a, b) = (i * d + j, i * d + l);
                if j == l {
                    re[a] = 1.0;
                } else {
                    let k = params.pair(a, b);
                    re[k] = 1.0;
                    im[k + 1] = 1.0;
                }
            }
            if j == l {
                lp.add_row(re, 1.0, 1.0)?;
            } else {
                lp.add_row(re, 0.0, 0.0)?;
                lp.add_row(im, 0.0, 0.0)?;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..random_only.unwrap_or(4 * n) {
        let v = random_unit(n, &mut rng);
        lp.add_row(params.quadratic_form(&v), 0.0, f64::INFINITY)?;
    }

    let mut diag = SolverDiagnostics {
        method: if random_only.is_some() { "lp-random-sample" } else { "lp-choi-cuts" }.into(),
        ..Default::default()
    };
    let mut complete = true;
    let (candidate, min_eig) = loop {
        let status = lp.solve(opts.max_pivots.saturating_sub(lp.pivots()))?;
        diag.iterations += 1;
        diag.objective_history.push(lp.objective());
        let c = params.assemble(lp.solution());
        let (vals, vecs) = hermitian_eigen(&c);
        if status == LpStatus::IterationLimit {
            complete = false;
            break (c, vals[0]);
        }
        if vals[0] >= -opts.tol_psd || random_only.is_some() || diag.constraints_added >= opts.max_cuts {
            break (c, vals[0]);
        }
        for (k, &lam) in vals.iter().enumerate() {
            if lam >= -opts.tol_psd || diag.constraints_added >= opts.max_cuts {
                break;
            }
            let v = vecs.column(k).into_owned();
            lp.add_row(params.quadratic_form(&v), 0.0, f64::INFINITY)?;
            diag.constraints_added += 1;
        }
    };
    diag.final_min_eig = min_eig;
    diag.pivots = lp.pivots();
    diag.converged = complete && min_eig >= -opts.tol_psd;
    diag.degenerate = complete && lp.has_alternative_optimum(1e-9, 1e-6);
    Ok(LpOutcome {
        candidate,
        upper: complete.then(|| lp.objective()),
        diag,
        dual: None,
    })
}

/// Coefficients of `Tr_out(v v^dagger) = I` in the real parameters of a
/// Hermitian `d x d` matrix, and the matching right-hand side.
fn reduced_params(v: &CVec, d: usize) -> Vec<f64> {
    let rho = crate::linalg::partial_trace_first(&(v * v.adjoint()), d);
    let mut a = Vec::with_capacity(d * d);
    for j in 0..d {
        a.push(rho[(j, j)].re);
    }
    for j in 0..d {
        for l in j + 1..d {
            a.push(rho[(j, l)].re);
            a.push(rho[(j, l)].im);
        }
    }
    a
}

/// Dual matrix `Y` from the row duals, so that `pi . a(v) = Tr(Y rho_v)`.
fn dual_matrix(pi: &[f64], d: usize) -> CMat {
    let mut y = CMat::zeros(d, d);
    for j in 0..d {
        y[(j, j)] = c64(pi[j], 0.0);
    }
    let mut k = d;
    for j in 0..d {
        for l in j + 1..d {
            y[(j, l)] = c64(pi[k] / 2.0, pi[k + 1] / 2.0);
            y[(l, j)] = y[(j, l)].conj();
            k += 2;
        }
    }
    y
}

/// Cutting planes on the dual problem `min Tr Y` s.t. `I (x) Y >= E`, where
/// `Tr(C' E) = Tr(Phi' Phi)`. Each cut `<v|I (x) Y - E|v> >= 0` is a column
/// `v v^dagger` of the LP over Choi matrices `C' = sum_k mu_k v_k v_k^dagger`,
/// so every iterate is an exactly positive, trace preserving candidate and
/// `Tr Y + d max(0, lambda_max(E - I (x) Y))` bounds the optimum from above.
fn dual_cuts(phi: &Superoperator, opts: &LpOptions) -> Result<LpOutcome> {
    let d = phi.dim();
    let n = d * d;
    let df = d as f64;
    let e = objective_matrix(phi).transpose();
    let gen_cost = |v: &CVec| (v.adjoint() * &e * v)[(0, 0)].re;

    let mut gens: Vec<CVec> = Vec::new();
    let mut omega = CVec::zeros(n);
    for j in 0..d {
        omega[j * d + j] = c64(1.0 / df.sqrt(), 0.0);
    }
    gens.push(omega);
    for a in 0..n {
        let mut v = CVec::zeros(n);
        v[a] = c64(1.0, 0.0);
        gens.push(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..4 * n {
        gens.push(random_unit(n, &mut rng));
    }

    let cols: Vec<Vec<f64>> = gens.iter().map(|v| reduced_params(v, d)).collect();
    let costs: Vec<f64> = gens.iter().map(gen_cost).collect();
    let mut lp = DualSimplex::new(costs, vec![0.0; gens.len()], vec![df; gens.len()])?;
    for r in 0..n {
        let rhs = if r < d { 1.0 } else { 0.0 };
        lp.add_row(cols.iter().map(|c| c[r]).collect(), rhs, rhs)?;
    }

    let mut diag = SolverDiagnostics {
        method: "lp-dual-cuts".into(),
        ..Default::default()
    };
    let mut complete = true;
    let mut upper = f64::INFINITY;
    let mut best_y = None;
    let top = loop {
        let status = lp.solve(opts.max_pivots.saturating_sub(lp.pivots()))?;
        diag.iterations += 1;
        diag.objective_history.push(lp.objective());
        let y = dual_matrix(&lp.duals(), d);
        let z = &e - crate::linalg::kron(&identity(d), &y);
        let (vals, vecs) = hermitian_eigen(&z);
        let top = vals[n - 1];
        let bound = trace(&y).re + df * top.max(0.0);
        if bound < upper {
            upper = bound;
            best_y = Some(y.clone() + identity(d) * c64(top.max(0.0), 0.0));
        }
        if status == LpStatus::IterationLimit {
            complete = false;
            break top;
        }
        if top <= opts.tol_psd || diag.constraints_added >= opts.max_cuts {
            break top;
        }
        for k in (0..n).rev() {
            if vals[k] <= opts.tol_psd || diag.constraints_added >= opts.max_cuts {
                break;
            }
            let v = vecs.column(k).into_owned();
            lp.add_column(&reduced_params(&v, d), gen_cost(&v), 0.0, df)?;
            gens.push(v);
            diag.constraints_added += 1;
        }
    };
    let mut candidate = CMat::zeros(n, n);
    for (v, &mu) in gens.iter().zip(lp.solution()) {
        if mu != 0.0 {
            candidate += v * v.adjoint() * c64(mu, 0.0);
        }
    }
    diag.final_min_eig = min_eigenvalue(&candidate);
    diag.pivots = lp.pivots();
    diag.converged = complete && top <= opts.tol_psd;
    Ok(LpOutcome {
        candidate,
        upper: Some(upper),
        diag,
        dual: best_y,
    })
}

/// Whether the optimal face `{C >= 0, Tr_out C = I, range C in ker Z}` of the
/// dual slack `Z = I (x) Y - E` has positive dimension, i.e. several optimal
/// channels exist.
fn face_is_degenerate(y: &CMat, e: &CMat, d: usize, tol: f64) -> bool {
    let n = d * d;
    let z = crate::linalg::kron(&identity(d), y) - e;
    let (vals, vecs) = hermitian_eigen(&z);
    let scale = vals[n - 1].abs().max(1.0);
    let k = vals.iter().take_while(|&&l| l <= tol * scale).count();
    if k == 0 {
        return false;
    }
    let w = vecs.columns(0, k).into_owned();
    // image of the k^2 real basis matrices of Hermitian k x k under X -> Tr_out(W X W^dagger)
    let mut images = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in a..k {
            let mut xs = Vec::new();
            let mut x = CMat::zeros(k, k);
            x[(a, b)] = c64(1.0, 0.0);
            x[(b, a)] = c64(1.0, 0.0);
            xs.push(x.clone());
            if a != b {
                x[(a, b)] = c64(0.0, 1.0);
                x[(b, a)] = c64(0.0, -1.0);
                xs.push(x);
            }
            for x in xs {
                let img = crate::linalg::partial_trace_first(&(&w * x * w.adjoint()), d);
                images.push(img.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>());
            }
        }
    }
    let m = nalgebra::DMatrix::from_fn(2 * n, images.len(), |i, j| images[j][i]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let rank = sv.iter().filter(|&&s| s > 1e-8 * smax).count();
    images.len() > rank
}

/// Quasi-inverse by cutting-plane linear programming over Choi matrices.
/// Practical up to `d = 6`.
pub fn quasi_inverse_lp(phi: &Superoperator, opts: &LpOptions) -> Result<QiResult> {
    check_channel(phi)?;
    let d = phi.dim();
    let df = d as f64;
    let fid = |t: f64| (1.0 + t / df) / (df + 1.0);

    let out = match opts.mode {
        CutMode::DualCuts => dual_cuts(phi, opts)?,
        CutMode::ChoiCuts => choi_cuts(phi, opts, None)?,
        CutMode::RandomSample { count } => choi_cuts(phi, opts, Some(count))?,
    };
    let mut diag = out.diag;
    diag.objective_history.iter_mut().for_each(|t| *t = fid(*t));
    if let Some(y) = &out.dual {
        let e = objective_matrix(phi).transpose();
        diag.degenerate = diag.converged && face_is_degenerate(y, &e, d, 1e-6);
    }

    let choi = ChoiMatrix::new(d, repair(&out.candidate, d))?;
    let mut best = choi_to_superop(&choi);
    let mut best_f = corrected_fidelity(&best, phi)?;

    // the identity and the best unitary are feasible; never return less
    let bound = fidelity_bounds(&superop_to_choi(phi), &opts.unitary);
    let w = bound.fef_witness.to_matrix()?;
    let f_unitary = corrected_fidelity(&Superoperator::unitary(&w), phi)?;
    if f_unitary > best_f {
        best = Superoperator::unitary(&w);
        best_f = f_unitary;
        diag.method.push_str("+unitary");
    }
    let f_id = avg_fidelity(phi)?;
    if f_id > best_f {
        best = Superoperator::identity(d);
        best_f = f_id;
        diag.method.push_str("+identity");
    }
    diag.objective_gap = out.upper.map_or(f64::NAN, |u| (fid(u) - best_f).max(0.0));
    finish_with(phi, best, bound, diag)
}

/// Best unitary correction `U` and the corrected fidelity of `Phi_U o Phi`.
pub fn best_unitary_correction(phi: &Superoperator, opts: &UnitaryOptions) -> Result<(CMat, f64)> {
    let d = phi.dim();
    let ops = choi_factors(superop_to_choi(phi).matrix(), d);
    let (w, _) = maximize_overlap(&ops, opts);
    let f = corrected_fidelity(&Superoperator::unitary(&w), phi)?;
    Ok((w, f))
}

fn argmax_with_tie(weights: &[f64]) -> (usize, bool) {
    let mut m = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > weights[m] {
            m = k;
        }
    }
    let top = weights[m];
    let ties = weights.iter().filter(|&&w| (top - w).abs() <= 1e-12 * top.abs().max(1.0)).count();
    (m, ties > 1)
}

/// Mixture of trace-orthogonal unitaries `sum q_a V_a . V_a^dagger`: the
/// quasi-inverse is conjugation by `V_m^dagger`, `m = argmax q`.
pub fn qi_orthogonal_mixed_unitary(weights: &[f64], unitaries: &[CMat]) -> Result<QiResult> {
    if weights.len() != unitaries.len() || weights.is_empty() {
        return invalid("need one weight per unitary");
    }
    let d = unitaries[0].nrows();
    for (a, va) in unitaries.iter().enumerate() {
        if va.shape() != (d, d) || unitarity_defect(va) > 1e-8 {
            return invalid(format!("operator {a} is not a {d}x{d} unitary"));
        }
        for (b, vb) in unitaries.iter().enumerate().skip(a + 1) {
            let g = trace(&(va.adjoint() * vb)).norm();
            if g > 1e-8 {
                return invalid(format!(
                    "|Tr(V_{a}^dagger V_{b})| = {g:e}; unitaries are not trace-orthogonal, use quasi_inverse_lp"
                ));
            }
        }
    }
    let phi = crate::constructors::mixed_unitary(weights, unitaries)?;
    let (m, tie) = argmax_with_tie(weights);
    let qi = Superoperator::unitary(&unitaries[m].adjoint());
    let mut diag = analytic("orthogonal-mixed-unitary", &qi);
    diag.degenerate = tie;
    finish(&phi, qi, &UnitaryOptions::default(), diag)
}

/// Uniform conjugation channel with orthogonal `X_a`: the quasi-inverse is the
/// dual channel with Kraus operators `X_a^dagger`.
pub fn qi_orthogonal_conjugations(xs: &[CMat]) -> Result<QiResult> {
    check_orthogonal_conjugations(xs)?;
    let phi = kraus_to_superop(&KrausSet::new(xs.to_vec())?);
    let qi = kraus_to_superop(&KrausSet::new(xs.iter().map(|x| x.adjoint()).collect())?);
    let diag = analytic("orthogonal-conjugations", &qi);
    finish(&phi, qi, &UnitaryOptions::default(), diag)
}

/// Transverse depolarizing channel: `E_+` for `w < 1`, `E_-` (Werner-Holevo)
/// for `w >= 1`, with a tie flagged at `w = 1`.
pub fn qi_transverse_depolarizing(d: usize, w: f64) -> Result<QiResult> {
    let phi = crate::constructors::transverse_depolarizing(d, w)?;
    let qi = if w < 1.0 { e_plus(d)? } else { werner_holevo(d)? };
    let mut diag = analytic("transverse-depolarizing", &qi);
    diag.degenerate = (w - 1.0).abs() <= 1e-12;
    finish(&phi, qi, &UnitaryOptions::default(), diag)
}

/// The depolarizing channel cannot be improved: the quasi-inverse is the identity.
pub fn qi_depolarizing(d: usize, q: f64) -> Result<QiResult> {
    let phi = crate::constructors::depolarizing(d, q)?;
    let qi = Superoperator::identity(d);
    let diag = analytic("depolarizing", &qi);
    finish(&phi, qi, &UnitaryOptions::default(), diag)
}

const PHASE_GRID: usize = 64;
const GRID_BUDGET: usize = 1 << 22;

fn phase_vector(angles: &[f64]) -> CVec {
    CVec::from_iterator(
        angles.len() + 1,
        std::iter::once(c64(1.0, 0.0)).chain(angles.iter().map(|&a| num_complex::Complex64::from_polar(1.0, a))),
    )
}

fn quadratic(w: &CMat, phi: &CVec) -> f64 {
    (phi.adjoint() * w * phi)[(0, 0)].re
}

/// Maximizer of `<phi|W|phi>` over vectors with unimodular entries and
/// `phi_0 = 1`: grid search over the free phases, then the monotone fixed
/// point `phi_i <- phase((W phi)_i)` (W is positive semidefinite).
pub fn maximize_phase_form(w: &CMat) -> (CVec, f64) {
    let d = w.nrows();
    let free = d - 1;
    let mut per = PHASE_GRID;
    while free > 0 && per > 2 && per.checked_pow(free as u32).is_none_or(|t| t > GRID_BUDGET) {
        per /= 2;
    }
    let step = 2.0 * std::f64::consts::PI / per as f64;
    let total = per.pow(free as u32);
    let mut best = (phase_vector(&vec![0.0; free]), f64::NEG_INFINITY);
    let mut angles = vec![0.0; free];
    for idx in 0..total {
        let mut r = idx;
        for a in angles.iter_mut() {
            *a = (r % per) as f64 * step;
            r /= per;
        }
        let v = phase_vector(&angles);
        let q = quadratic(w, &v);
        if q > best.1 {
            best = (v, q);
        }
    }
    let (mut v, mut val) = best;
    for _ in 0..10_000 {
        let wv = w * &v;
        let next = CVec::from_iterator(
            d,
            wv.iter().map(|z| if z.norm() > 0.0 { z / z.norm() } else { c64(1.0, 0.0) }),
        );
        let gauge = next[0].conj();
        let next = next * gauge;
        let q = quadratic(w, &next);
        if q <= val + 1e-15 {
            if q > val {
                v = next;
                val = q;
            }
            break;
        }
        v = next;
        val = q;
    }
    (v, val)
}

/// Mixture of commuting (diagonal) unitaries `diag(exp(i theta^(k)))`: the
/// quasi-inverse is conjugation by `diag(phi)^dagger` for the maximizer `phi`
/// of `<phi|W|phi>`. Proven optimal for `d <= 3`; flagged heuristic above.
pub fn qi_commuting_unitary(weights: &[f64], phases: &[Vec<f64>]) -> Result<QiResult> {
    let w = dephasing_matrix(weights, phases)?;
    let d = w.nrows();
    let phi = crate::constructors::commuting_unitary_mixture(weights, phases)?;
    let (v, _) = maximize_phase_form(&w);
    let u = CMat::from_diagonal(&v.map(|z| z.conj()));
    let qi = Superoperator::unitary(&u);
    let mut diag = analytic("commuting-unitary", &qi);
    diag.heuristic = d > 3;
    finish(&phi, qi, &UnitaryOptions::default(), diag)
}

/// Quasi-inverse candidate for `E_1 (x) E_2`: the tensor product of the two
/// quasi-inverses.
pub fn qi_tensor(qi1: &QiResult, qi2: &QiResult) -> Result<ChannelRep> {
    if !qi1.solver.converged || !qi2.solver.converged {
        return invalid("both quasi-inverses must be converged");
    }
    Ok(ChannelRep::Superop(tensor(&qi1.qi_superop()?, &qi2.qi_superop()?)))
}

/// Closed-form solver for a constructor tag, if its family has one.
pub fn analytic_qi(c: &Constructor) -> Option<Result<QiResult>> {
    let decode = |ms: &[crate::io::EncodedMatrix]| -> Result<Vec<CMat>> { ms.iter().map(|m| m.to_matrix()).collect() };
    Some(match c {
        Constructor::Depolarizing { dim, q } => qi_depolarizing(*dim, *q),
        Constructor::TransverseDepolarizing { dim, w } => qi_transverse_depolarizing(*dim, *w),
        Constructor::Pauli { p } => qi_orthogonal_mixed_unitary(p, &crate::linalg::paulis()),
        Constructor::MixedUnitary { weights, unitaries } => {
            decode(unitaries).and_then(|us| qi_orthogonal_mixed_unitary(weights, &us))
        }
        Constructor::LandauStreater { j } => {
            landau_streater(*j).and_then(|k| qi_orthogonal_conjugations(k.ops()))
        }
        Constructor::OrthogonalConjugations { ops } => decode(ops).and_then(|xs| qi_orthogonal_conjugations(&xs)),
        Constructor::Spin1Dephasing { taus, probs } => {
            if taus.len() != probs.len() {
                return Some(invalid("taus and probs differ in length"));
            }
            let phases: Vec<Vec<f64>> = taus.iter().map(|&t| crate::constructors::spin1_phases(t)).collect();
            qi_commuting_unitary(probs, &phases)
        }
        Constructor::CommutingUnitary { weights, phases } => qi_commuting_unitary(weights, phases),
        Constructor::Stretch { .. } => return None,
    })
}
