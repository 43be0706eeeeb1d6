//! Command-line interface: solve instance files, generate random instances,
//! and run benchmark experiments.
//!
//! Exit codes: 0 solved/completed, 1 unsatisfiable (solve), 2 timeout,
//! 64 usage error, 65 malformed instance document, 66 unreadable input,
//! 70 internal error.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;
use voisolve::bench::{run_benchmark, sweep_gamma, write_csv, write_jsonl, write_sweep_csv, NamedInstance};
use voisolve::format::{parse_instance, serialize_instance};
use voisolve::generators::{generate_generalized_sudoku, generate_model_rb, RBParams, SudokuParams};
use voisolve::search::{search, Heuristic, RunConfig};
use voisolve::Error;

#[derive(Parser)]
#[command(name = "voisolve", version, about = "Binary CSP solver with cost-aware solution-count value ordering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file to the first solution.
    Solve(SolveArgs),
    /// Generate a random instance file.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Compare heuristics over a set of instance files.
    Bench(BenchArgs),
    /// Sweep the estimation cost factor gamma over a set of instance files.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    file: PathBuf,
    /// Value-ordering heuristic: lex | mc | sc | vsc | rand-sc.
    #[arg(long, default_value = "vsc")]
    heuristic: String,
    /// Estimation cost factor (vsc).
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timeout in seconds (0 = no timeout).
    #[arg(long, default_value_t = 1800.0)]
    timeout: f64,
    /// rand-sc: per-value probability of estimating a count.
    #[arg(long, default_value_t = 0.5)]
    sc_prob: f64,
    /// Do not print the assignment, just the verdict and stats.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Random binary CSP: fixed constraint and nogood counts.
    Rb(GenerateRbArgs),
    /// Generalized Sudoku with punched holes.
    Sudoku(GenerateSudokuArgs),
}

#[derive(Args)]
struct GenerateRbArgs {
    /// Parameter preset: rb30 (30 vars, 30 values, 280 constraints, 220
    /// nogoods) or rb40 (40 vars, 19 values, 410 constraints, 90 nogoods).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    vars: Option<usize>,
    #[arg(long)]
    values: Option<usize>,
    #[arg(long)]
    constraints: Option<usize>,
    /// Forbidden value pairs per constraint.
    #[arg(long)]
    nogoods: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateSudokuArgs {
    #[arg(long, default_value_t = 3)]
    tile_rows: usize,
    #[arg(long, default_value_t = 3)]
    tile_cols: usize,
    #[arg(long)]
    holes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files.
    files: Vec<PathBuf>,
    /// Comma-separated heuristics, e.g. `lex,mc,sc,vsc`.
    #[arg(long, default_value = "sc,vsc")]
    heuristics: String,
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timeout per run, seconds (0 = no timeout).
    #[arg(long, default_value_t = 1800.0)]
    timeout: f64,
    /// rand-sc: per-value probability of estimating a count.
    #[arg(long, default_value_t = 0.5)]
    sc_prob: f64,
    /// Write raw per-run records as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write raw per-run records as JSON lines.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Instance files.
    files: Vec<PathBuf>,
    /// Comma-separated gamma values, e.g. `0,1e-7,1e-6,1e-5`.
    #[arg(long)]
    gammas: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timeout per run, seconds (0 = no timeout).
    #[arg(long, default_value_t = 1800.0)]
    timeout: f64,
    /// Write the per-gamma table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Usage(_) | Error::Domain(_) => 64,
        Error::Parse { .. } | Error::InvalidInstance(_) => 65,
        Error::Io(_) => 66,
        Error::Internal(_) => 70,
    }
}

fn load_instance(path: &Path) -> Result<NamedInstance, Error> {
    let text = std::fs::read_to_string(path)?;
    let instance = parse_instance(&text).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        Error::InvalidInstance(msg) => Error::InvalidInstance(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(NamedInstance::new(id, instance))
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<NamedInstance>, Error> {
    if paths.is_empty() {
        return Err(Error::Usage("no instance files given".into()));
    }
    paths.iter().map(|p| load_instance(p)).collect()
}

fn parse_timeout(seconds: f64) -> Result<Option<Duration>, Error> {
    if !(seconds >= 0.0) {
        return Err(Error::Usage(format!("timeout must be nonnegative, got {seconds}")));
    }
    Ok(if seconds == 0.0 {
        None
    } else {
        Some(Duration::from_secs_f64(seconds))
    })
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Error> {
    let heuristic: Heuristic = args.heuristic.parse()?;
    if args.gamma < 0.0 {
        return Err(Error::Usage(format!("gamma must be nonnegative, got {}", args.gamma)));
    }
    if !(0.0..=1.0).contains(&args.sc_prob) {
        return Err(Error::Usage(format!(
            "sc-prob must lie in [0, 1], got {}",
            args.sc_prob
        )));
    }
    let named = load_instance(&args.file)?;
    let config = RunConfig {
        heuristic,
        gamma: args.gamma,
        seed: args.seed,
        timeout: parse_timeout(args.timeout)?,
        sc_deploy_prob: args.sc_prob,
        ..RunConfig::default()
    };
    let result = search(&named.instance, &config);
    eprintln!(
        "{}: heuristic={} time={:.6}s heuristic_time={:.6}s nodes={} backtracks={} checks={} estimations={}",
        named.id,
        config.label(),
        result.stats.search_time.as_secs_f64(),
        result.stats.heuristic_time.as_secs_f64(),
        result.stats.nodes,
        result.stats.backtracks,
        result.stats.constraint_checks,
        result.stats.sc_estimations,
    );
    if result.timed_out {
        println!("TIMEOUT");
        return Ok(2);
    }
    match result.solution {
        Some(solution) => {
            println!("SAT");
            if !args.quiet {
                for (var, val) in solution.iter() {
                    println!("{var} {val}");
                }
            }
            Ok(0)
        }
        None => {
            println!("UNSAT");
            Ok(1)
        }
    }
}

fn cmd_generate(cmd: GenerateCommand) -> Result<u8, Error> {
    let (out, text) = match cmd {
        GenerateCommand::Rb(args) => {
            let preset = match args.preset.as_deref() {
                None => None,
                Some("rb30") => Some((30, 30, 280, 220)),
                Some("rb40") => Some((40, 19, 410, 90)),
                Some(other) => {
                    return Err(Error::Usage(format!(
                        "unknown preset `{other}` (expected rb30 or rb40)"
                    )))
                }
            };
            let pick = |explicit: Option<usize>, preset_val: Option<usize>, name: &str| {
                explicit.or(preset_val).ok_or_else(|| {
                    Error::Usage(format!("--{name} is required unless --preset is given"))
                })
            };
            let params = RBParams {
                n_vars: pick(args.vars, preset.map(|p| p.0), "vars")?,
                domain_size: pick(args.values, preset.map(|p| p.1), "values")?,
                n_constraints: pick(args.constraints, preset.map(|p| p.2), "constraints")?,
                n_nogoods: pick(args.nogoods, preset.map(|p| p.3), "nogoods")?,
                seed: args.seed,
            };
            let instance = generate_model_rb(&params)?;
            (args.out, serialize_instance(&instance))
        }
        GenerateCommand::Sudoku(args) => {
            let params = SudokuParams {
                tile_rows: args.tile_rows,
                tile_cols: args.tile_cols,
                holes: args.holes,
                seed: args.seed,
            };
            let instance = generate_generalized_sudoku(&params)?;
            (args.out, serialize_instance(&instance))
        }
    };
    std::fs::write(&out, text)?;
    eprintln!("wrote {}", out.display());
    Ok(0)
}

fn parse_heuristics(list: &str, gamma: f64, seed: u64, timeout: Option<Duration>, repeat: usize, sc_prob: f64) -> Result<Vec<RunConfig>, Error> {
    let mut configs = Vec::new();
    for tok in list.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let heuristic: Heuristic = tok.parse()?;
        configs.push(RunConfig {
            heuristic,
            gamma,
            seed,
            timeout,
            repeat,
            sc_deploy_prob: sc_prob,
            ..RunConfig::default()
        });
    }
    if configs.is_empty() {
        return Err(Error::Usage("no heuristics given".into()));
    }
    Ok(configs)
}

fn print_group_table(report: &voisolve::bench::BenchReport) {
    println!(
        "{:<18} {:>5} {:>6} {:>8} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "config", "runs", "solved", "timeout", "mean_time", "median_time", "sd_time", "mean_bt", "mean_est"
    );
    for g in &report.groups {
        println!(
            "{:<18} {:>5} {:>6} {:>8} {:>12.6} {:>12.6} {:>12.6} {:>12.1} {:>12.1}",
            g.label,
            g.runs,
            g.solved,
            g.timed_out,
            g.search_time.mean,
            g.search_time.median,
            g.search_time.sd,
            g.backtracks.mean,
            g.sc_estimations.mean,
        );
    }
    if !report.ratios.is_empty() {
        println!();
        println!(
            "{:<18} {:<18} {:>12} {:>12} {:>12}",
            "numerator", "denominator", "time_ratio", "bt_ratio", "est_ratio"
        );
        for r in &report.ratios {
            println!(
                "{:<18} {:<18} {:>12.4} {:>12.4} {:>12.4}",
                r.numerator, r.denominator, r.search_time, r.backtracks, r.sc_estimations
            );
        }
    }
}

fn cmd_bench(args: BenchArgs) -> Result<u8, Error> {
    let instances = load_all(&args.files)?;
    if args.repeat == 0 {
        return Err(Error::Usage("repeat must be at least 1".into()));
    }
    let configs = parse_heuristics(
        &args.heuristics,
        args.gamma,
        args.seed,
        parse_timeout(args.timeout)?,
        args.repeat,
        args.sc_prob,
    )?;
    let report = run_benchmark(&instances, &configs);
    print_group_table(&report);
    if let Some(path) = args.csv {
        write_csv(&report.records, std::fs::File::create(path)?)?;
    }
    if let Some(path) = args.jsonl {
        write_jsonl(&report.records, std::fs::File::create(path)?)?;
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, Error> {
    let instances = load_all(&args.files)?;
    let mut gammas = Vec::new();
    for tok in args.gammas.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let g: f64 = tok
            .parse()
            .map_err(|_| Error::Usage(format!("invalid gamma `{tok}`")))?;
        if g < 0.0 {
            return Err(Error::Usage(format!("gamma must be nonnegative, got {g}")));
        }
        gammas.push(g);
    }
    if gammas.is_empty() {
        return Err(Error::Usage("no gamma values given".into()));
    }
    let base = RunConfig {
        seed: args.seed,
        timeout: parse_timeout(args.timeout)?,
        ..RunConfig::default()
    };
    let report = sweep_gamma(&instances, &gammas, &base);
    println!(
        "{:<10} {:>10} {:>12} {:>10} {:>12} {:>10} {:>12} {:>10}",
        "heuristic", "gamma", "mean_time", "norm_time", "mean_est", "norm_est", "mean_bt", "norm_bt"
    );
    for row in &report.rows {
        println!(
            "{:<10} {:>10.1e} {:>12.6} {:>10.4} {:>12.1} {:>10.4} {:>12.1} {:>10.4}",
            row.heuristic,
            row.gamma,
            row.mean_search_time,
            row.norm_search_time,
            row.mean_sc_estimations,
            row.norm_sc_estimations,
            row.mean_backtracks,
            row.norm_backtracks,
        );
    }
    if let Some(path) = args.csv {
        write_sweep_csv(&report.rows, std::fs::File::create(path)?)?;
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Generate(cmd) => cmd_generate(cmd),
        Command::Bench(args) => cmd_bench(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let _ = err.print();
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
