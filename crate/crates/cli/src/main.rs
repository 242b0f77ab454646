use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use gkk_core::baselines::{
    check_simple, oracle_solve, value_iteration_en_minus_counted, value_iteration_en_plus_counted, OracleError,
    DEFAULT_N_LIMIT, SIMPLE_CHECK_N_LIMIT,
};
use gkk_core::gen::{generate, generate_simple, Family, GenSpec, DEFAULT_SEED};
use gkk_core::io::{parse, serialize, ResultDoc};
use gkk_core::layers::{energy_step_bound, generic_step_bound, verify_trace};
use gkk_core::{check_certificate, lift_to_simple, solve, ExtendedInt, GameGraph, Mode, MpSign};

#[derive(Parser)]
#[command(name = "gkk", version, about = "Mean-payoff and energy games by potential reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a game and print the result document
    Solve {
        file: PathBuf,
        /// Accept games with zero cycles; only the N* side is certified
        #[arg(long)]
        general: bool,
        /// Also write the result with a per-iteration trace to this file
        #[arg(long, value_name = "OUT.json")]
        trace: Option<PathBuf>,
        /// Lift the game to a simple one before solving
        #[arg(long)]
        lift: bool,
    },
    /// Cross-check the solver against value iteration and, on small games, the brute-force oracle
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        lift: bool,
    },
    /// Print brute-force values of a small game
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_N_LIMIT)]
        n_limit: usize,
    },
    /// Generate a seeded game
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        maxw: i64,
        #[arg(long, env = "GKK_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "RANDOM")]
        family: Family,
        /// Probability that a vertex belongs to Max
        #[arg(long, default_value_t = 0.5)]
        owner_ratio: f64,
        /// Lift the output to a simple game
        #[arg(long)]
        simple: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve every .game file of a directory and write one CSV row per instance
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lift: bool,
    },
    /// Write the simple lift of a game
    Lift {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Re-check every bound and invariant recorded in a trace
    Verify {
        #[arg(long, value_name = "TRACE.json")]
        trace: PathBuf,
        /// Recompute E+ and E- by value iteration on this game instead of trusting the document
        #[arg(long)]
        game: Option<PathBuf>,
    },
}

fn read_game(path: &Path) -> Result<GameGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn maybe_lift(g: GameGraph, lift: bool) -> Result<GameGraph> {
    Ok(if lift { lift_to_simple(&g)? } else { g })
}

fn run_solve(file: &Path, general: bool, trace: Option<&Path>, lift: bool) -> Result<ExitCode> {
    let g = maybe_lift(read_game(file)?, lift)?;
    let mode = if general { Mode::General } else { Mode::Simple };
    let result = solve(&g, mode, trace.is_some())?;
    let mut doc = ResultDoc::new(&g, &result);
    if let Some(path) = trace {
        write_file(path, &doc.to_json())?;
        doc.trace = None;
    }
    println!("{}", doc.to_json());
    Ok(ExitCode::SUCCESS)
}

fn finite_energies(en_plus: &[ExtendedInt], en_minus: &[ExtendedInt]) -> (i64, i64) {
    let e_plus = en_plus.iter().filter_map(|x| x.finite()).max().unwrap_or(0);
    let e_minus = en_minus.iter().filter_map(|x| x.finite()).min().map_or(0, |x| -x);
    (e_plus, e_minus)
}

/// Diagnostics for one instance; empty when every engine agrees.
fn check_one(g: &GameGraph) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    if g.n() <= SIMPLE_CHECK_N_LIMIT && !check_simple(g)? {
        problems.push("game has a zero-sum simple cycle; rerun with --lift".to_string());
        return Ok(problems);
    }
    let result = solve(g, Mode::Simple, false)?;
    let values = &result.values;
    let en_minus = values.en_minus.as_ref().expect("simple mode has dual energies");

    let (vi_plus, _) = value_iteration_en_plus_counted(g);
    let (vi_minus, _) = value_iteration_en_minus_counted(g);
    for v in g.vertices() {
        if values.en_plus[v] != vi_plus[v] {
            problems.push(format!("vertex {v}: En+ {} but value iteration gives {}", values.en_plus[v], vi_plus[v]));
        }
        if en_minus[v] != vi_minus[v] {
            problems.push(format!("vertex {v}: En- {} but value iteration gives {}", en_minus[v], vi_minus[v]));
        }
    }

    let (e_plus, e_minus) = finite_energies(&vi_plus, &vi_minus);
    let bound = energy_step_bound(g.max_abs_weight(), e_plus, e_minus);
    if result.iterations as i128 > bound {
        problems.push(format!("{} iterations exceed N+E++E-+1 = {bound}", result.iterations));
    }
    if let Err(e) = check_certificate(g, &result.potential, &result.final_partition) {
        problems.push(format!("certificate rejected: {e}"));
    }

    match oracle_solve(g, DEFAULT_N_LIMIT) {
        Ok(sol) => {
            for v in g.vertices() {
                let sign = if sol.mean_payoff[v].sum < 0 { MpSign::Neg } else { MpSign::Pos };
                if values.en_plus[v] != sol.en_plus[v]
                    || en_minus[v] != sol.en_minus[v]
                    || values.mp_sign[v] != sign
                {
                    problems.push(format!(
                        "vertex {v}: solver ({}, {}, {:?}) but oracle ({}, {}, {}/{})",
                        values.en_plus[v],
                        en_minus[v],
                        values.mp_sign[v],
                        sol.en_plus[v],
                        sol.en_minus[v],
                        sol.mean_payoff[v].sum,
                        sol.mean_payoff[v].len
                    ));
                }
            }
        }
        Err(OracleError::TooLarge { .. } | OracleError::TooManyStrategies { .. }) => {}
        Err(e) => problems.push(format!("oracle: {e}")),
    }
    Ok(problems)
}

fn run_check(files: &[PathBuf], lift: bool) -> Result<ExitCode> {
    let mut failed = 0;
    for file in files {
        let problems = match read_game(file).and_then(|g| maybe_lift(g, lift)).and_then(|g| check_one(&g)) {
            Ok(p) => p,
            Err(e) => vec![format!("{e:#}")],
        };
        if problems.is_empty() {
            println!("ok {}", file.display());
        } else {
            failed += 1;
            for p in problems {
                println!("FAIL {}: {p}", file.display());
            }
        }
    }
    println!("{} of {} instances agree", files.len() - failed, files.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_oracle(file: &Path, n_limit: usize) -> Result<ExitCode> {
    let g = read_game(file)?;
    let sol = oracle_solve(&g, n_limit)?;
    let vertices: Vec<_> = g
        .vertices()
        .map(|v| {
            let mp = sol.mean_payoff[v];
            json!({
                "id": v,
                "mean_payoff": { "sum": mp.sum, "len": mp.len },
                "en_plus": sol.en_plus[v],
                "en_minus": sol.en_minus[v],
                "strategy_edge": sol.en_plus_strategy.edge(v),
            })
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&json!({ "vertices": vertices }))?);
    Ok(ExitCode::SUCCESS)
}

fn run_gen(spec: GenSpec, simple: bool, output: &Path) -> Result<ExitCode> {
    let g = if simple { generate_simple(&spec)? } else { generate(&spec)? };
    let header = format!(
        "# gkk gen --n {} --m {} --maxw {} --seed {} --family {} --owner-ratio {}{}\n",
        spec.n,
        spec.m,
        spec.max_abs_weight,
        spec.seed,
        spec.family,
        spec.owner_ratio,
        if simple { " --simple" } else { "" }
    );
    write_file(output, &(header + &serialize(&g)))?;
    Ok(ExitCode::SUCCESS)
}

const BENCH_COLUMNS: &str = "file,n,m,N,iterations,E_plus,E_minus,bound_thm3,bound_nN,wall_ms,vi_lifts";

fn bench_row(path: &Path, lift: bool) -> Result<String> {
    let g = maybe_lift(read_game(path)?, lift)?;
    let start = Instant::now();
    let result = solve(&g, Mode::Simple, false)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (_, plus_lifts) = value_iteration_en_plus_counted(&g);
    let (_, minus_lifts) = value_iteration_en_minus_counted(&g);
    let (e_plus, e_minus) = (result.e_plus(), result.e_minus());
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{:.3},{}",
        path.file_name().unwrap_or_default().to_string_lossy(),
        g.n(),
        g.m(),
        g.max_abs_weight(),
        result.iterations,
        e_plus,
        e_minus,
        energy_step_bound(g.max_abs_weight(), e_plus, e_minus),
        generic_step_bound(g.n(), g.max_abs_weight()),
        wall_ms,
        plus_lifts + minus_lifts
    ))
}

fn run_bench(dir: &Path, out: &Path, lift: bool) -> Result<ExitCode> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|x| x == "game"));
    files.sort();
    if files.is_empty() {
        bail!("no .game files in {}", dir.display());
    }

    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let writer = Mutex::new(std::io::BufWriter::new(file));
    writeln!(writer.lock().unwrap(), "{BENCH_COLUMNS}")?;
    let failures: Vec<String> = files
        .par_iter()
        .filter_map(|path| match bench_row(path, lift) {
            Ok(row) => writeln!(writer.lock().unwrap(), "{row}")
                .err()
                .map(|e| format!("{}: {e}", path.display())),
            Err(e) => Some(format!("{}: {e:#}", path.display())),
        })
        .collect();
    writer.into_inner().unwrap().flush()?;
    for f in &failures {
        eprintln!("error: {f}");
    }
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_lift(file: &Path, output: &Path) -> Result<ExitCode> {
    let g = lift_to_simple(&read_game(file)?)?;
    write_file(output, &serialize(&g))?;
    Ok(ExitCode::SUCCESS)
}

fn run_verify(trace: &Path, game: Option<&Path>) -> Result<ExitCode> {
    let text = fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let doc = ResultDoc::from_json(&text).with_context(|| format!("parsing {}", trace.display()))?;
    let Some(records) = &doc.trace else {
        bail!("{} has no trace; produce it with `gkk solve --trace`", trace.display());
    };
    let energies = match game {
        Some(path) => {
            let g = read_game(path)?;
            let (plus, _) = value_iteration_en_plus_counted(&g);
            let (minus, _) = value_iteration_en_minus_counted(&g);
            finite_energies(&plus, &minus)
        }
        None => (doc.metadata.e_plus, doc.metadata.e_minus),
    };
    let report = verify_trace(records, doc.run_facts(), energies);
    print!("{report}");
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            file,
            general,
            trace,
            lift,
        } => run_solve(&file, general, trace.as_deref(), lift),
        Command::Check { files, lift } => run_check(&files, lift),
        Command::Oracle { file, n_limit } => run_oracle(&file, n_limit),
        Command::Gen {
            n,
            m,
            maxw,
            seed,
            family,
            owner_ratio,
            simple,
            output,
        } => {
            let spec = GenSpec::new(n, m, maxw, seed).family(family).owner_ratio(owner_ratio);
            run_gen(spec, simple, &output)
        }
        Command::Bench { dir, out, lift } => run_bench(&dir, &out, lift),
        Command::Lift { file, output } => run_lift(&file, &output),
        Command::Verify { trace, game } => run_verify(&trace, game.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
