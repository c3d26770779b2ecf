//! `qinv`: quasi-inverses of channels from the command line.
//!
//! Data goes to stdout (or `-o`), diagnostics to stderr. Exit codes: 0 on
//! success, 1 on input or validation errors, 2 when a solver did not converge.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qinv_core::basis::OperatorBasis;
use qinv_core::channel::{choi_to_kraus, superop_to_affine, validate_channel};
use qinv_core::classical::{classical_quasi_inverse, superdecohere};
use qinv_core::constructors::Constructor;
use qinv_core::ensembles::{
    fit_power_law, rows_to_csv, run_classical_ensemble, run_quantum_ensemble, spin1_sweep,
    EnsembleConfig, EnsembleStats, Mode, PowerLaw,
};
use qinv_core::fidelity::{corrected_fidelity, fidelity_bounds, fidelity_report, BoundCertificate};
use qinv_core::io::{parse_stochastic, read_channel, stochastic_to_csv, stochastic_to_json, ChannelFile, EncodedMatrix};
use qinv_core::qinvert::{analytic_qi, quasi_inverse_lp, CutMode, LpOptions, QiResult};
use qinv_core::unitary_opt::UnitaryOptions;
use qinv_core::{ChannelRep, QinvError, Superoperator};

#[derive(Parser)]
#[command(name = "qinv", version, about = "Quasi-inverses of quantum and classical channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the quasi-inverse of a channel file.
    Qi(QiArgs),
    /// Fidelity report and bounds of one channel, or the fidelity of `second` after `first`.
    Fidelity(FidelityArgs),
    /// Write a named channel family to a channel file.
    Construct(ConstructArgs),
    /// Random-ensemble experiments and the spin-1 sweep.
    Ensemble(EnsembleArgs),
    /// Classical stochastic matrix `|i><i| -> diag E(|i><i|)` of a quantum channel.
    Superdecohere(SuperdecohereArgs),
    /// Check complete positivity and trace preservation.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Quantum,
    Classical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    DualCuts,
    ChoiCuts,
    RandomSample,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Cut generation strategy.
    #[arg(long, value_enum, default_value = "dual-cuts")]
    method: Method,
    /// Number of random cuts for `--method random-sample`.
    #[arg(long, default_value_t = 500)]
    cuts: usize,
    #[arg(long, default_value_t = LpOptions::default().tol_psd)]
    tol_psd: f64,
    #[arg(long, default_value_t = LpOptions::default().max_cuts)]
    max_cuts: usize,
    #[arg(long, default_value_t = LpOptions::default().max_pivots)]
    max_pivots: usize,
    /// Seed of the solver's random cuts and unitary restarts.
    #[arg(long = "solver-seed", default_value_t = 0)]
    solver_seed: u64,
    /// Random restarts of the unitary search.
    #[arg(long, default_value_t = UnitaryOptions::default().restarts)]
    restarts: usize,
}

impl SolverArgs {
    fn options(&self) -> LpOptions {
        LpOptions {
            tol_psd: self.tol_psd,
            max_cuts: self.max_cuts,
            seed: self.solver_seed,
            mode: match self.method {
                Method::DualCuts => CutMode::DualCuts,
                Method::ChoiCuts => CutMode::ChoiCuts,
                Method::RandomSample => CutMode::RandomSample { count: self.cuts },
            },
            max_pivots: self.max_pivots,
            unitary: UnitaryOptions {
                restarts: self.restarts,
                seed: self.solver_seed,
                ..UnitaryOptions::default()
            },
        }
    }
}

#[derive(Args)]
struct QiArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "quantum")]
    kind: Kind,
    /// Use a closed form when the file carries a constructor tag that has one.
    #[arg(long)]
    analytic: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FidelityArgs {
    first: PathBuf,
    second: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Kraus,
    Choi,
    Superop,
    Affine,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(subcommand)]
    family: Family,
    /// Representation to write; defaults to the family's natural form.
    #[arg(long, value_enum, global = true)]
    form: Option<Form>,
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Family {
    /// Identity channel (no constructor tag).
    Identity {
        #[arg(long)]
        dim: usize,
    },
    /// `(1-q) rho + q Tr(rho) I/d`.
    Depolarizing {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        q: f64,
    },
    /// `(1-w) rho^T + w Tr(rho) I/d`.
    TransverseDepolarizing {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        w: f64,
    },
    /// Qubit Pauli channel with weights on I, X, Y, Z.
    Pauli {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
    },
    LandauStreater {
        #[arg(long)]
        j: f64,
    },
    Stretch {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long)]
        m1: usize,
        #[arg(long)]
        m2: usize,
    },
    /// Spin-1 dephasing over the discrete distribution `(taus[k], probs[k])`.
    Spin1Dephasing {
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
    },
    /// Mixture of diagonal unitaries; phase rows separated by `;`.
    CommutingUnitary {
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long)]
        phases: String,
    },
    /// Mixture of unitaries read from a JSON list of `[re, im]` matrices.
    MixedUnitary {
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long)]
        unitaries: PathBuf,
    },
    /// Kraus operators `X_k` (JSON list of matrices) with `X_k^dagger X_k` orthogonal projectors.
    OrthogonalConjugations {
        #[arg(long)]
        ops: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleMode {
    Quantum,
    Classical,
    Spin1,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum)]
    mode: EnsembleMode,
    #[arg(long)]
    seed: u64,
    #[arg(long, conflicts_with = "sweep")]
    dim: Option<usize>,
    /// Dimension range `dmin..dmax`, inclusive.
    #[arg(long)]
    sweep: Option<String>,
    /// Samples per dimension; defaults depend on the mode and dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Power-law fit of the classical corrected fidelity over the sweep.
    #[arg(long)]
    fit: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "QINV_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Grid points in p on [0, 1] (spin1 mode).
    #[arg(long, default_value_t = 21)]
    p_steps: usize,
    /// Grid points in tau0 on [0, tau_max] (spin1 mode).
    #[arg(long, default_value_t = 37)]
    tau_steps: usize,
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
    tau_max: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SuperdecohereArgs {
    input: PathBuf,
    /// Also quasi-invert: compare the classical quasi-inverse of the decohered
    /// matrix with the decohered quantum quasi-inverse.
    #[arg(long)]
    then_qi: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: TableFormat,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    input: PathBuf,
}

enum Failure {
    Input(String),
    NotConverged(String),
}

impl From<QinvError> for Failure {
    fn from(e: QinvError) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn load_superop(path: &Path) -> std::result::Result<(ChannelFile, Superoperator), Failure> {
    let file = read_channel(path)?;
    let rep = file
        .to_rep()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let report = validate_channel(&rep.to_choi()?);
    if !report.is_channel() {
        return Err(Failure::Input(format!(
            "{}: not a channel (min Choi eigenvalue {:e}, trace-preservation residual {:e})",
            path.display(),
            report.min_eig,
            report.tp_residual
        )));
    }
    Ok((file, rep.to_superop()?))
}

fn check_converged(r: &QiResult) -> Outcome {
    if r.solver.converged {
        return Ok(());
    }
    Err(Failure::NotConverged(format!(
        "solver did not converge ({}: {} rounds, objective gap {:e})",
        r.solver.method, r.solver.iterations, r.solver.objective_gap
    )))
}

fn cmd_qi(a: &QiArgs) -> Outcome {
    match a.kind {
        Kind::Classical => {
            let text = fs::read_to_string(&a.input)
                .map_err(|e| Failure::Input(format!("{}: {e}", a.input.display())))?;
            let t = parse_stochastic(&text).map_err(|e| Failure::Input(format!("{}: {e}", a.input.display())))?;
            emit(a.output.as_deref(), &to_json(&classical_quasi_inverse(&t)))
        }
        Kind::Quantum => {
            let (file, phi) = load_superop(&a.input)?;
            let analytic = match (&file.constructor, a.analytic) {
                (Some(c), true) => analytic_qi(c),
                _ => None,
            };
            let r = match analytic {
                Some(r) => r?,
                None => {
                    if a.analytic {
                        eprintln!("no closed form for this input; solving the linear program");
                    }
                    quasi_inverse_lp(&phi, &a.solver.options())?
                }
            };
            emit(a.output.as_deref(), &r.to_json())?;
            check_converged(&r)
        }
    }
}

#[derive(Serialize)]
struct SingleFidelity {
    avg_fidelity: f64,
    ent_fidelity: f64,
    trace_phi: f64,
    bounds: BoundCertificate,
}

#[derive(Serialize)]
struct PairFidelity {
    corrected_fidelity: f64,
}

fn cmd_fidelity(a: &FidelityArgs) -> Outcome {
    let (_, first) = load_superop(&a.first)?;
    let text = match &a.second {
        None => {
            let r = fidelity_report(&first)?;
            to_json(&SingleFidelity {
                avg_fidelity: r.avg_fidelity,
                ent_fidelity: r.ent_fidelity,
                trace_phi: r.trace_phi,
                bounds: fidelity_bounds(&first.to_choi(), &UnitaryOptions::default()),
            })
        }
        Some(p) => {
            let (_, second) = load_superop(p)?;
            to_json(&PairFidelity {
                corrected_fidelity: corrected_fidelity(&second, &first)?,
            })
        }
    };
    emit(a.output.as_deref(), &text)
}

fn parse_phase_rows(s: &str) -> std::result::Result<Vec<Vec<f64>>, Failure> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| Failure::Input(format!("--phases: \"{}\": {e}", x.trim())))
                })
                .collect()
        })
        .collect()
}

fn read_matrices(path: &Path) -> std::result::Result<Vec<EncodedMatrix>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_construct(a: &ConstructArgs) -> Outcome {
    let tag = match &a.family {
        Family::Identity { dim } => {
            if *dim < 1 {
                return Err(Failure::Input("identity requires dim >= 1".into()));
            }
            None
        }
        Family::Depolarizing { dim, q } => Some(Constructor::Depolarizing { dim: *dim, q: *q }),
        Family::TransverseDepolarizing { dim, w } => {
            Some(Constructor::TransverseDepolarizing { dim: *dim, w: *w })
        }
        Family::Pauli { p } => Some(Constructor::Pauli {
            p: p.as_slice()
                .try_into()
                .map_err(|_| Failure::Input("--p needs four weights".into()))?,
        }),
        Family::LandauStreater { j } => Some(Constructor::LandauStreater { j: *j }),
        Family::Stretch { d1, d2, m1, m2 } => Some(Constructor::Stretch {
            d1: *d1,
            d2: *d2,
            m1: *m1,
            m2: *m2,
        }),
        Family::Spin1Dephasing { taus, probs } => Some(Constructor::Spin1Dephasing {
            taus: taus.clone(),
            probs: probs.clone(),
        }),
        Family::CommutingUnitary { weights, phases } => Some(Constructor::CommutingUnitary {
            weights: weights.clone(),
            phases: parse_phase_rows(phases)?,
        }),
        Family::MixedUnitary { weights, unitaries } => Some(Constructor::MixedUnitary {
            weights: weights.clone(),
            unitaries: read_matrices(unitaries)?,
        }),
        Family::OrthogonalConjugations { ops } => Some(Constructor::OrthogonalConjugations {
            ops: read_matrices(ops)?,
        }),
    };
    let natural = match (&tag, &a.family) {
        (Some(c), _) => c.build()?,
        (None, Family::Identity { dim }) => ChannelRep::Superop(Superoperator::identity(*dim)),
        (None, _) => unreachable!("only the identity is untagged"),
    };
    let rep = match a.form {
        None => natural,
        Some(Form::Superop) => ChannelRep::Superop(natural.to_superop()?),
        Some(Form::Choi) => ChannelRep::Choi(natural.to_choi()?),
        Some(Form::Kraus) => ChannelRep::Kraus(choi_to_kraus(&natural.to_choi()?)?),
        Some(Form::Affine) => {
            let basis = OperatorBasis::gell_mann(natural.dim())?;
            ChannelRep::Affine(superop_to_affine(&natural.to_superop()?, &basis)?)
        }
    };
    emit(a.output.as_deref(), &ChannelFile::from_rep(&rep, tag).to_json())
}

fn parse_sweep(s: &str) -> std::result::Result<(usize, usize), Failure> {
    let bad = || Failure::Input(format!("--sweep expects dmin..dmax, got \"{s}\""));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo < 2 || hi < lo {
        return Err(Failure::Input(format!("--sweep requires 2 <= dmin <= dmax, got {lo}..{hi}")));
    }
    Ok((lo, hi))
}

fn grid(n: usize, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| hi * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Serialize)]
struct SweepRow {
    d: usize,
    mean_before: f64,
    mean_before_se: f64,
    mean_after: f64,
    mean_after_se: f64,
    theory_after: Option<f64>,
}

#[derive(Serialize)]
struct FitJson {
    dmin: usize,
    dmax: usize,
    monte_carlo: PowerLaw,
    theory: PowerLaw,
}

fn write_file(dir: &Path, name: &str, text: &str) -> Outcome {
    emit(Some(&dir.join(name)), text)
}

fn cmd_ensemble(a: &EnsembleArgs) -> Outcome {
    fs::create_dir_all(&a.output).map_err(|e| Failure::Input(format!("{}: {e}", a.output.display())))?;
    let mode = match a.mode {
        EnsembleMode::Spin1 => {
            if a.p_steps == 0 || a.tau_steps == 0 {
                return Err(Failure::Input("grids need at least one point".into()));
            }
            let rows = spin1_sweep(&grid(a.p_steps, 1.0), &grid(a.tau_steps, a.tau_max))?;
            return write_file(&a.output, "spin1.csv", &rows_to_csv(&rows)?);
        }
        EnsembleMode::Quantum => Mode::Quantum,
        EnsembleMode::Classical => Mode::Classical,
    };
    let (lo, hi) = match (&a.sweep, a.dim) {
        (Some(s), _) => parse_sweep(s)?,
        (None, Some(d)) => (d, d),
        (None, None) => return Err(Failure::Input("either --dim or --sweep is required".into())),
    };
    if a.fit && (mode != Mode::Classical || hi - lo < 2) {
        return Err(Failure::Input("--fit needs classical mode and a sweep over at least three dimensions".into()));
    }
    let mut summaries: Vec<EnsembleStats> = Vec::new();
    let mut excluded = 0;
    for d in lo..=hi {
        let n = a.n.unwrap_or_else(|| EnsembleConfig::default_samples(mode, d));
        let mut cfg = EnsembleConfig::new(mode, d, n, a.seed);
        cfg.jobs = a.jobs;
        cfg.lp = a.solver.options();
        let (stats, rows) = match mode {
            Mode::Quantum => run_quantum_ensemble(&cfg)?,
            Mode::Classical => run_classical_ensemble(&cfg)?,
        };
        write_file(&a.output, &format!("samples_d{d}.csv"), &rows_to_csv(&rows)?)?;
        write_file(&a.output, &format!("summary_d{d}.json"), &to_json(&stats))?;
        eprintln!(
            "d = {d}: mean before {:.6}, mean after {:.6} +- {:.1e}",
            stats.mean_before.mean, stats.mean_after_qi.mean, stats.mean_after_qi.se
        );
        excluded += stats.excluded;
        summaries.push(stats);
    }
    if lo < hi {
        let rows: Vec<SweepRow> = summaries
            .iter()
            .map(|s| SweepRow {
                d: s.dim,
                mean_before: s.mean_before.mean,
                mean_before_se: s.mean_before.se,
                mean_after: s.mean_after_qi.mean,
                mean_after_se: s.mean_after_qi.se,
                theory_after: s.theory.map(|t| t.mean_after),
            })
            .collect();
        write_file(&a.output, "sweep.csv", &rows_to_csv(&rows)?)?;
    }
    if a.fit {
        let ds: Vec<f64> = summaries.iter().map(|s| s.dim as f64).collect();
        let ys: Vec<f64> = summaries.iter().map(|s| s.mean_after_qi.mean).collect();
        let ts: Vec<f64> = summaries
            .iter()
            .map(|s| s.theory.map_or(f64::NAN, |t| t.mean_after))
            .collect();
        let fit = FitJson {
            dmin: lo,
            dmax: hi,
            monte_carlo: fit_power_law(&ds, &ys)?,
            theory: fit_power_law(&ds, &ts)?,
        };
        write_file(&a.output, "fit.json", &to_json(&fit))?;
        eprintln!("fit: c = {:.4}, exponent = {:.4}", fit.monte_carlo.c, fit.monte_carlo.exponent);
    }
    if excluded > 0 {
        return Err(Failure::NotConverged(format!("{excluded} samples did not converge")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ThenQi {
    decohered: qinv_core::classical::StochasticFile,
    classical_qi: qinv_core::ClassicalQiResult,
    decohered_quantum_qi: qinv_core::classical::StochasticFile,
    quantum_qi_fidelity: f64,
    /// Max entrywise difference between the two routes.
    difference: f64,
}

fn cmd_superdecohere(a: &SuperdecohereArgs) -> Outcome {
    let (_, phi) = load_superop(&a.input)?;
    let t = superdecohere(&phi)?;
    if !a.then_qi {
        let text = match a.format {
            TableFormat::Json => stochastic_to_json(&t),
            TableFormat::Csv => stochastic_to_csv(&t),
        };
        return emit(a.output.as_deref(), &text);
    }
    let classical = classical_quasi_inverse(&t);
    let r = quasi_inverse_lp(&phi, &a.solver.options())?;
    let dq = superdecohere(&r.qi_superop()?)?;
    let difference = (classical.qi.matrix() - dq.matrix()).abs().max();
    let out = ThenQi {
        decohered: (&t).into(),
        classical_qi: classical,
        decohered_quantum_qi: (&dq).into(),
        quantum_qi_fidelity: r.fidelity_after,
        difference,
    };
    emit(a.output.as_deref(), &to_json(&out))?;
    check_converged(&r)
}

fn cmd_validate(a: &ValidateArgs) -> Outcome {
    let file = read_channel(&a.input)?;
    let rep = file
        .to_rep()
        .map_err(|e| Failure::Input(format!("{}: {e}", a.input.display())))?;
    let report = validate_channel(&rep.to_choi()?);
    emit(None, &to_json(&report))?;
    if report.is_channel() {
        Ok(())
    } else {
        Err(Failure::Input(format!(
            "{}: not a channel (cp: {}, tp: {})",
            a.input.display(),
            report.cp,
            report.tp
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Qi(a) => cmd_qi(a),
        Command::Fidelity(a) => cmd_fidelity(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Superdecohere(a) => cmd_superdecohere(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
