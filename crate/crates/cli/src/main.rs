use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use rcscale::drw::{drw_run, DrwConfig, DrwReport};
use rcscale::engine::{
    predict_asymptotics, run_scaling_with, verify_limit_class, LimitReport, RunConfig, RunReport,
    Schedule, PRNG_NAME,
};
use rcscale::io::{parse_kspec, parse_matrix_csv, parse_trace, table_to_csv, to_json, Cell};
use rcscale::ot::{
    default_eps_grid, density_table, epsilon_support_threshold, gibbs_kernel, mixture_problem_cost,
    quantile_table, sinkhorn_ot, uniform_marginal, OtSummary, SweepRow,
};
use rcscale::support::{
    birkhoff_decompose, find_k_diagonal, has_support, has_total_support, k_positive_part,
    minimal_blocking_subset, positive_part, BirkhoffDecomposition, KDiagonal, KSpec,
};
use rcscale::{Error, NonNegMatrix, Result, SquareMatrix};

#[derive(Parser)]
#[command(
    name = "rcscale",
    about = "Row/column normalization, support analysis, random walks and entropic OT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a normalized sequence on a CSV matrix.
    Scale(ScaleArgs),
    /// Support, positive part and K-diagonal analysis of a CSV matrix.
    Support(SupportArgs),
    /// Simulate the decentralized random walk.
    Drw(DrwArgs),
    /// Entropic optimal transport between the two Beta mixtures.
    #[command(subcommand)]
    Ot(OtCommand),
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long)]
    input: PathBuf,
    /// cyclic, random, greedy, or trace:FILE (JSON lines with axis and 1-based index).
    #[arg(long, default_value = "cyclic")]
    schedule: String,
    /// Required for the random schedule.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_steps: usize,
    /// Recurrent set of the random schedule: "full" or a JSON file {"rows":[..],"cols":[..]}.
    #[arg(long, default_value = "full")]
    k: String,
    /// Entries of the final matrix below this count as zero in the limit-class check,
    /// which also requires d_B below it when the recurrent set is full.
    #[arg(long, default_value_t = 1e-6)]
    limit_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-step JSON-lines trace.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct SupportArgs {
    #[arg(long)]
    input: PathBuf,
    /// "full" or a JSON file {"rows":[..],"cols":[..]} with 1-based indices.
    #[arg(long, default_value = "full")]
    k: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DrwArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    /// 1-based start vertex.
    #[arg(long, default_value_t = 1)]
    start: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of per-vertex visit counts.
    #[arg(long)]
    dump_counts: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OtCommand {
    /// Density, cdf and quantile tables of both mixtures.
    Densities {
        #[arg(long)]
        out: PathBuf,
        /// Evenly spaced abscissae in [0, 1].
        #[arg(long, default_value_t = 1001)]
        points: usize,
        /// Quantile levels in the companion *_quantiles.csv.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Support diagnostics of the Gibbs kernel along a descending epsilon grid.
    Sweep {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Comma-separated, strictly descending; default is 60 log-spaced values from 1 to 1e-6.
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sinkhorn iterations with uniform marginals on the quantized problem.
    Solve {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn emit(out: Option<&Path>, json: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, &format!("{json}\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<SquareMatrix> {
    parse_matrix_csv(&read_text(path)?)
}

fn read_k(arg: &str, n: usize) -> Result<KSpec> {
    let k = if arg == "full" {
        KSpec::full(n)
    } else {
        parse_kspec(&read_text(Path::new(arg))?)?
    };
    k.validate(n)?;
    Ok(k)
}

fn rows_of(m: &SquareMatrix) -> Vec<Vec<f64>> {
    m.rows().map(|r| r.to_vec()).collect()
}

#[derive(Serialize)]
struct ScaleOutput {
    schedule: &'static str,
    seed: Option<u64>,
    tol: f64,
    max_steps: usize,
    recurrent_set: KSpec,
    predicted_convergent: Option<bool>,
    #[serde(flatten)]
    run: RunReport,
    limit: Option<LimitReport>,
}

fn cmd_scale(a: &ScaleArgs) -> Result<()> {
    let w0 = NonNegMatrix::try_from(read_matrix(&a.input)?)?;
    let n = w0.n();
    let schedule = match a.schedule.as_str() {
        "cyclic" => Schedule::cyclic(n),
        "greedy" => Schedule::greedy(n),
        "random" => {
            let seed = a
                .seed
                .ok_or_else(|| Error::arg("the random schedule requires --seed"))?;
            Schedule::uniform_random(seed, read_k(&a.k, n)?)?
        }
        s => match s.strip_prefix("trace:") {
            Some(file) => Schedule::trace(parse_trace(&read_text(Path::new(file))?)?),
            None => {
                return Err(Error::arg(format!(
                    "unknown schedule {s:?}; use cyclic, random, greedy or trace:FILE"
                )))
            }
        },
    };
    let record = a.trace_out.is_some();
    let mut cfg = RunConfig::new(a.max_steps, a.tol);
    cfg.record_trace = record;
    let res = run_scaling_with(&w0, &schedule, cfg)?;

    if let Some(path) = &a.trace_out {
        let mut text = String::new();
        for rec in res.trace_records() {
            text.push_str(&to_json(&rec)?);
            text.push('\n');
        }
        write_atomic(path, &text)?;
    }

    let k = schedule.recurrent_set().clone();
    let (predicted, limit) = if k.is_empty() {
        (None, None)
    } else {
        (
            Some(predict_asymptotics(&w0, &k)?),
            Some(verify_limit_class(&w0, &k, &res.final_matrix, a.limit_tol)?),
        )
    };
    let out = ScaleOutput {
        schedule: schedule.name(),
        seed: a.seed.filter(|_| schedule.name() == "random"),
        tol: a.tol,
        max_steps: a.max_steps,
        recurrent_set: k,
        predicted_convergent: predicted,
        run: res.report(),
        limit,
    };
    emit(a.out.as_deref(), &to_json(&out)?)
}

#[derive(Serialize)]
struct SupportOutput {
    n: usize,
    has_support: bool,
    has_total_support: bool,
    positive_part_null: bool,
    positive_part: Vec<Vec<f64>>,
    k: KSpec,
    has_k_diagonal: bool,
    k_diagonal: Option<KDiagonal>,
    k_positive_part: Vec<Vec<f64>>,
    minimal_blocking_subset: Option<KSpec>,
    /// Present when every K line sums to 1.
    birkhoff: Option<BirkhoffDecomposition>,
}

fn cmd_support(a: &SupportArgs) -> Result<()> {
    let w = read_matrix(&a.input)?;
    let n = w.n();
    let k = read_k(&a.k, n)?;
    let plus = positive_part(&w);
    let diag = find_k_diagonal(&w, &k)?;
    let blocker = if diag.is_none() {
        Some(minimal_blocking_subset(&w, &k)?)
    } else {
        None
    };
    let birkhoff = match birkhoff_decompose(&w, &k) {
        Ok(d) => Some(d),
        Err(Error::Argument(_)) => None,
        Err(e) => return Err(e),
    };
    let out = SupportOutput {
        n,
        has_support: has_support(&w),
        has_total_support: has_total_support(&w),
        positive_part_null: plus.is_null(),
        positive_part: rows_of(&plus),
        has_k_diagonal: diag.is_some(),
        k_diagonal: diag,
        k_positive_part: rows_of(&k_positive_part(&w, &k)?),
        k,
        minimal_blocking_subset: blocker,
        birkhoff,
    };
    emit(a.out.as_deref(), &to_json(&out)?)
}

#[derive(Serialize)]
struct DrwOutput {
    seed: u64,
    start: usize,
    #[serde(flatten)]
    report: DrwReport,
}

fn cmd_drw(a: &DrwArgs) -> Result<()> {
    let w0 = NonNegMatrix::try_from(read_matrix(&a.matrix)?)?;
    if a.start == 0 {
        return Err(Error::arg("--start is 1-based"));
    }
    let cfg = DrwConfig::new(w0, a.start - 1, a.steps, a.seed)?;
    let res = drw_run(&cfg)?;
    if let Some(path) = &a.dump_counts {
        let rows = res
            .visit_counts
            .iter()
            .enumerate()
            .map(|(i, &c)| vec![Cell::Int(i as u64 + 1), Cell::Int(c)]);
        write_atomic(path, &table_to_csv(&["vertex", "visits"], rows))?;
    }
    let out = DrwOutput {
        seed: a.seed,
        start: a.start,
        report: res.report(),
    };
    emit(a.out.as_deref(), &to_json(&out)?)
}

fn companion_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}{ext}"))
}

#[derive(Serialize)]
struct SweepSummary {
    n: usize,
    grid_len: usize,
    /// Smallest grid epsilon where support still held, just above the first failure.
    epsilon_ok: Option<f64>,
    epsilon_fail: Option<f64>,
    monotone: bool,
    out: String,
}

fn sweep_cells(r: &SweepRow) -> Vec<Cell> {
    vec![
        Cell::Num(r.epsilon),
        Cell::Int(r.zero_count as u64),
        Cell::Bool(r.has_support),
        Cell::Bool(r.has_total_support),
        r.log10_min_positive_entry.map_or(Cell::Missing, Cell::Num),
        Cell::Bool(r.positive_part_null),
    ]
}

#[derive(Serialize)]
struct SolveOutput {
    has_support: bool,
    has_total_support: bool,
    zero_count: usize,
    #[serde(flatten)]
    solution: OtSummary,
}

fn cmd_ot(c: &OtCommand) -> Result<()> {
    match c {
        OtCommand::Densities { out, points, n } => {
            let rows = density_table(*points)?.into_iter().map(|r| {
                vec![
                    Cell::Num(r.x),
                    Cell::Num(r.source_pdf),
                    Cell::Num(r.target_pdf),
                    Cell::Num(r.source_cdf),
                    Cell::Num(r.target_cdf),
                ]
            });
            write_atomic(
                out,
                &table_to_csv(
                    &["x", "source_pdf", "target_pdf", "source_cdf", "target_cdf"],
                    rows,
                ),
            )?;
            let q = quantile_table(*n)?.into_iter().map(|r| {
                vec![
                    Cell::Int(r.n as u64),
                    Cell::Num(r.level),
                    Cell::Num(r.source_quantile),
                    Cell::Num(r.target_quantile),
                ]
            });
            write_atomic(
                &companion_path(out, "_quantiles"),
                &table_to_csv(&["n", "level", "source_quantile", "target_quantile"], q),
            )
        }
        OtCommand::Sweep {
            n,
            eps_grid,
            jobs,
            out,
        } => {
            let grid = eps_grid.clone().unwrap_or_else(default_eps_grid);
            let cost = mixture_problem_cost(*n)?;
            let rep = epsilon_support_threshold(&cost, &grid, *jobs)?;
            let header = [
                "epsilon",
                "zero_count",
                "has_support",
                "has_total_support",
                "log10_min_positive_entry",
                "positive_part_null",
            ];
            write_atomic(
                out,
                &table_to_csv(&header, rep.rows.iter().map(sweep_cells)),
            )?;
            let summary = SweepSummary {
                n: *n,
                grid_len: grid.len(),
                epsilon_ok: rep.last_supported,
                epsilon_fail: rep.first_failure,
                monotone: rep.monotone,
                out: out.display().to_string(),
            };
            emit(None, &to_json(&summary)?)
        }
        OtCommand::Solve {
            epsilon,
            tol,
            n,
            max_iter,
            out,
        } => {
            let cost = mixture_problem_cost(*n)?;
            let k = gibbs_kernel(&cost, *epsilon)?;
            let a = uniform_marginal(*n);
            let sol = sinkhorn_ot(&k, &a, &a, *tol, *max_iter)?;
            let res = SolveOutput {
                has_support: k.has_support,
                has_total_support: k.has_total_support,
                zero_count: k.zero_count,
                solution: sol.summary(*epsilon),
            };
            emit(out.as_deref(), &to_json(&res)?)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Scale(a) => cmd_scale(a),
        Command::Support(a) => cmd_support(a),
        Command::Drw(a) => cmd_drw(a),
        Command::Ot(c) => cmd_ot(c),
    }
}

fn main() -> ExitCode {
    let version: &'static str =
        Box::leak(format!("{} (PRNG: {PRNG_NAME})", env!("CARGO_PKG_VERSION")).into_boxed_str());
    let parsed = Cli::command()
        .version(version)
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rcscale: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
