mod report;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ame_core::generator::{search_with, FrameOrder, SearchOptions};
use ame_core::golden::{build_phase_system, exact_rank, nullspace_basis, u36_theta, Frame};
use ame_core::invariants::{contract_with, moment, p16_theta, ContractOptions, Method, PermTuple};
use ame_core::io::{parse_latin_pair, parse_operator, parse_perm_tuple, write_latin_pair, write_operator, write_state};
use ame_core::latin::{construct_odls, construct_ols, enphase, gate_from_ols, OlsPair};
use ame_core::reduction::{p9_operator, reduce_with, verify_factorization, CubeRootBranch, ReductionOptions};
use ame_core::state::vectorize;
use ame_core::{BipartiteOperator, Bipartition, ReductionError, C64};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use report::{complex, matrix, CommandReport, Status};

const DEFAULT_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "ame", version, about = "Verify, classify and construct 2-unitary operators")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unitarity of U, its realignment and its partial transpose.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Local-unitary invariant for a permutation tuple.
    Invariant {
        file: PathBuf,
        /// `builtin:n4` or a file with four permutation lines.
        #[arg(long, default_value = "builtin:n4")]
        perms: String,
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Replace this tuple row (1-based) by the identity.
        #[arg(long)]
        identity_row: Option<usize>,
        /// Expected real value; adds a verdict.
        #[arg(long)]
        expect: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
    },
    /// `Tr L^k[U]`.
    Moment {
        file: PathBuf,
        #[arg(short, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long)]
        expect: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
    },
    /// Local unitaries taking a two-qutrit 2-unitary to P9.
    Reduce {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = BranchArg::Consistent)]
        branch: BranchArg,
    },
    /// Build a known operator and write it.
    Construct {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(short, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        /// Operator output (sparse format); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Latin pair output for `odls` and `ols`.
        #[arg(long)]
        pair_out: Option<PathBuf>,
    },
    /// Permutation gate of a Latin pair with phases on its rows.
    Enphase {
        pair: PathBuf,
        /// One angle per row `(i, j)` in lexicographic order, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phases: Vec<f64>,
        /// Phase `e^{iθ}` on row (1,1) only.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Phase-difference system of the support: counts, exact rank and nullity.
    Phases {
        file: PathBuf,
        /// Write the integer kernel basis, one vector per line.
        #[arg(long)]
        basis_out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        support_tol: f64,
    },
    /// Alternating-projection search from a seeded Haar start.
    Generate {
        #[arg(short, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        shuffled: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Marginal spectra of the state vectorizing U.
    State {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ThetaArg {
    /// Family parameter: `D(θ)` on rows 1, 4, 7, 10 when d = 6, otherwise
    /// `e^{iθ}` on row (1,1).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Sparse,
    Network,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Consistent,
    Principal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    P9,
    P16,
    Swap,
    Identity,
    Odls,
    Ols,
}

/// Input problems exit with 2, failed verdicts with 1.
enum Failure {
    Input(String),
    Verdict(String),
}

type Outcome = Result<(), Failure>;

/// Operator text a command prints to stdout instead of writing a file.
type Payload = Option<String>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read_input(report: &mut CommandReport, path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    report.input(path, &bytes);
    String::from_utf8(bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_operator(report: &mut CommandReport, path: &Path) -> Result<BipartiteOperator, Failure> {
    let text = read_input(report, path)?;
    parse_operator(&text).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn apply_theta(u: BipartiteOperator, theta: Option<f64>) -> BipartiteOperator {
    let Some(t) = theta else { return u };
    if u.dim() == 6 {
        return u36_theta(&u, t);
    }
    let mut out = u.clone();
    let z = C64::from_polar(1.0, t);
    let d = u.dim();
    for k in 1..=d {
        for l in 1..=d {
            out.set(1, 1, k, l, u.get(1, 1, k, l) * z);
        }
    }
    out
}

fn check_expect(report: &mut CommandReport, value: C64, expect: Option<f64>, rel_tol: f64) {
    if let Some(e) = expect {
        report.tol("rel_tol", rel_tol);
        let rel = (value - C64::new(e, 0.0)).norm() / e.abs().max(1.0);
        report.result("relative_error", rel);
        report.verdict("matches_expected", rel < rel_tol);
    }
}

fn load_perms(report: &mut CommandReport, spec: &str) -> Result<PermTuple, Failure> {
    if spec == "builtin:n4" {
        return Ok(PermTuple::canonical_n4());
    }
    let path = PathBuf::from(spec);
    let text = read_input(report, &path)?;
    parse_perm_tuple(&text).map_err(|e| Failure::Input(format!("{spec}:{e}")))
}

fn run(cli: Cli, report: &mut CommandReport) -> Result<Payload, Failure> {
    let mut payload = None;
    match cli.command {
        Command::Verify { file, tol } => {
            let u = read_operator(report, &file)?;
            let r = u.classify(tol);
            report.tol("tol", tol);
            report.result("d", u.dim());
            report.result("deficit_u", r.deficit_u);
            report.result("deficit_r", r.deficit_r);
            report.result("deficit_gamma", r.deficit_g);
            report.result("nonzeros", u.nnz(0.0));
            let class = if r.is_two_unitary {
                "2-unitary"
            } else if r.is_dual {
                "dual"
            } else if r.is_unitary && r.deficit_g < tol {
                "t-dual"
            } else if r.is_unitary {
                "unitary"
            } else {
                "not unitary"
            };
            report.result("class", class);
            report.verdict("two_unitary", r.is_two_unitary);
        }
        Command::Invariant { file, perms, theta, method, identity_row, expect, rel_tol } => {
            let u = apply_theta(read_operator(report, &file)?, theta.theta);
            let mut p = load_perms(report, &perms)?;
            if let Some(row) = identity_row {
                if !(1..=4).contains(&row) {
                    return Err(Failure::Input(format!("--identity-row must be in 1..=4, got {row}")));
                }
                p = p.with_identity_row(row);
            }
            let method = match method {
                MethodArg::Auto => Method::Auto,
                MethodArg::Sparse => Method::Sparse,
                MethodArg::Network => Method::Network,
                MethodArg::Dense => Method::Dense,
            };
            let opts = ContractOptions { method, ..ContractOptions::default() };
            let v = contract_with(&u, &p, &opts).map_err(input)?;
            report.result("n", p.n());
            report.result("value", complex(v));
            check_expect(report, v, expect, rel_tol);
        }
        Command::Moment { file, k, theta, expect, rel_tol } => {
            if k == 0 {
                return Err(Failure::Input("k must be at least 1".into()));
            }
            let u = apply_theta(read_operator(report, &file)?, theta.theta);
            let v = moment(&u, k);
            report.result("k", k);
            report.result("value", complex(v));
            check_expect(report, v, expect, rel_tol);
        }
        Command::Reduce { file, seed, tol, branch } => {
            let u = read_operator(report, &file)?;
            let opts = ReductionOptions {
                branch: match branch {
                    BranchArg::Consistent => CubeRootBranch::Consistent,
                    BranchArg::Principal => CubeRootBranch::Principal,
                },
                input_tol: tol,
                ..ReductionOptions::default()
            };
            report.tol("input_tol", tol);
            report.tol("stage_tol", opts.stage_tol);
            let f = match reduce_with(&u, seed, &opts) {
                Ok(f) => f,
                Err(e @ ReductionError::Dimension(_)) => return Err(input(e)),
                Err(e) => return Err(Failure::Verdict(e.to_string())),
            };
            report.result("left1", matrix(&f.left1));
            report.result("left2", matrix(&f.left2));
            report.result("right1", matrix(&f.right1));
            report.result("right2", matrix(&f.right2));
            report.result("residual", f.residual);
            let log: Vec<_> = f.stage_log.iter().map(|s| json!({"stage": s.stage, "violation": s.violation})).collect();
            report.result("stage_log", log);
            report.verdict("reduces_to_p9", verify_factorization(&u, &f, tol));
        }
        Command::Construct { kind, d, theta, out, pair_out } => {
            let (op, pair): (BipartiteOperator, Option<OlsPair>) = match kind {
                Kind::P9 => (p9_operator(), None),
                Kind::P16 => (p16_theta(theta), None),
                Kind::Swap => (BipartiteOperator::swap(d), None),
                Kind::Identity => (BipartiteOperator::identity(d), None),
                Kind::Odls | Kind::Ols => {
                    let pair =
                        if matches!(kind, Kind::Odls) { construct_odls(d) } else { construct_ols(d) }.map_err(input)?;
                    (gate_from_ols(&pair).operator(), Some(pair))
                }
            };
            let text = write_operator(&op);
            report.result("d", op.dim());
            report.result("nonzeros", op.nnz(0.0));
            let r = op.classify(DEFAULT_TOL);
            report.result("two_unitary", r.is_two_unitary);
            if let (Some(pair), Some(path)) = (&pair, &pair_out) {
                write_output(path, &write_latin_pair(pair))?;
                report.result("pair_out", path.display().to_string());
            }
            if let Some(pair) = &pair {
                report.result("diagonal", pair.is_diagonal());
            }
            match out {
                Some(path) => {
                    write_output(&path, &text)?;
                    report.result("out", path.display().to_string());
                }
                None => payload = Some(text),
            }
        }
        Command::Enphase { pair, phases, theta, out, tol } => {
            let text = read_input(report, &pair)?;
            let (k, l) = parse_latin_pair(&text).map_err(|e| Failure::Input(format!("{}:{e}", pair.display())))?;
            let pair = OlsPair::new(k, l).map_err(input)?;
            let d = pair.order();
            let mut table: HashMap<(usize, usize), C64> = HashMap::new();
            if !phases.is_empty() {
                if phases.len() != d * d {
                    return Err(Failure::Input(format!("--phases needs {} angles, got {}", d * d, phases.len())));
                }
                for (idx, &t) in phases.iter().enumerate() {
                    table.insert((idx / d + 1, idx % d + 1), C64::from_polar(1.0, t));
                }
            }
            if let Some(t) = theta {
                let z = table.get(&(1, 1)).copied().unwrap_or(C64::new(1.0, 0.0));
                table.insert((1, 1), z * C64::from_polar(1.0, t));
            }
            let op = enphase(&gate_from_ols(&pair), &table).map_err(input)?;
            let r = op.classify(tol);
            report.tol("tol", tol);
            report.result("d", d);
            report.result("max_deficit", r.max_deficit());
            report.verdict("two_unitary", r.is_two_unitary);
            match out {
                Some(path) => {
                    write_output(&path, &write_operator(&op))?;
                    report.result("out", path.display().to_string());
                }
                None => payload = Some(write_operator(&op)),
            }
        }
        Command::Phases { file, basis_out, support_tol } => {
            let u = read_operator(report, &file)?;
            let sys = build_phase_system(&u, support_tol);
            let rank = exact_rank(&sys);
            report.tol("support_tol", support_tol);
            report.result("variables", sys.nvars());
            report.result("equations", sys.rows.len());
            report.result("equations_u", sys.count(Frame::Plain));
            report.result("equations_gamma", sys.count(Frame::Transposed));
            report.result("equations_r", sys.count(Frame::Realigned));
            report.result("rank", rank);
            report.result("nullity", sys.nvars() - rank);
            if let Some(path) = basis_out {
                let basis = nullspace_basis(&sys);
                let lines: Vec<String> = basis
                    .iter()
                    .map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ") + "\n")
                    .collect();
                write_output(&path, &lines.concat())?;
                report.result("basis_out", path.display().to_string());
            }
        }
        Command::Generate { d, seed, max_iter, tol, shuffled, out } => {
            if d < 2 {
                return Err(Failure::Input(format!("-d must be at least 2, got {d}")));
            }
            let opts = SearchOptions {
                max_iter,
                tol,
                order: if shuffled { FrameOrder::Shuffled } else { FrameOrder::Fixed },
                ..SearchOptions::default()
            };
            let r = search_with(d, seed, &opts);
            let fd = r.final_deficits();
            report.tol("tol", tol);
            report.result("d", d);
            report.result("seed", seed);
            report.result("iterations", r.iterations);
            report.result("stalled", r.stalled);
            report.result("deficit_u", fd.u);
            report.result("deficit_r", fd.r);
            report.result("deficit_gamma", fd.g);
            report.result("best_combined", r.best_combined());
            if let Some(path) = out {
                write_output(&path, &write_operator(&r.u))?;
                report.result("out", path.display().to_string());
            }
            report.verdict("converged", r.converged);
        }
        Command::State { file, tol, out } => {
            let u = read_operator(report, &file)?;
            let psi = vectorize(&u);
            report.tol("tol", tol);
            report.result("nonzero_amplitudes", psi.nonzero_count(tol));
            for split in Bipartition::ALL {
                report.result(&format!("spectrum_{}", split.label().replace('|', "_")), psi.marginal_spectrum(split));
            }
            let dev = psi.ame_deviation();
            report.result("ame_deviation", dev);
            report.verdict("ame", dev < tol);
            if let Some(path) = out {
                write_output(&path, &write_state(&psi))?;
                report.result("out", path.display().to_string());
            }
        }
    }
    Ok(payload)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("AME_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("AME_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("AME_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let json = cli.json;
    let mut report = CommandReport::new(&argv);
    let mut payload = None;
    match configure_threads().map_err(Failure::Input).and_then(|_| run(cli, &mut report)) {
        Ok(p) => payload = p,
        Err(Failure::Input(msg)) => report.input_error(msg),
        Err(Failure::Verdict(msg)) => report.fail_with(msg),
    }
    report.finish();
    let text = if json { report.to_json() + "\n" } else { report.to_text() };
    match payload {
        Some(op) => {
            print!("{op}");
            eprint!("{text}");
        }
        None if report.status == Status::Error => eprint!("{text}"),
        None => print!("{text}"),
    }
    ExitCode::from(report.status.exit_code() as u8)
}
