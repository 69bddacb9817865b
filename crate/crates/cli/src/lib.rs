//! Command-line front end: argument parsing, file loading and report formatting.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use sparsefo::corpus;
use sparsefo::dp::{brute_force, solve_exact, DpOptions, DEFAULT_STATE_CAP};
use sparsefo::driver::{
    bench, check_suite, default_cover, solve_approx, ApproxOptions, BenchConfig, Family,
    Monotonicity, SolveReport, Suite,
};
use sparsefo::graph::{load_graph, load_weights, Graph, WeightAssignment};
use sparsefo::logic::{parse_formula, parse_sentence, Formula, ITuple};
use sparsefo::qelim::{eliminate_all_with, ElimOptions};
use sparsefo::sparsity::{load_cover, measure_genericity, Cover};

/// Environment variable read when `--state-cap` is absent.
pub const STATE_CAP_ENV: &str = "SPARSEFO_STATE_CAP";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: sparsefo::Error,
    },
    #[error("{0}")]
    Core(#[from] sparsefo::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(sparsefo::Error::Infeasible) => EXIT_INFEASIBLE,
            CliError::Core(sparsefo::Error::ResourceLimit(_)) => EXIT_RESOURCE,
            _ => EXIT_INPUT,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "sparsefo", version, about = "Weighted first-order optimization on sparse graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Instance {
    /// Graph file: "n m" then one "u v" line per edge.
    #[arg(long)]
    graph: PathBuf,
    /// Sentence file in the s-expression grammar.
    #[arg(long)]
    formula: PathBuf,
    /// Weight file with lines "v {i,...} w"; unit weights when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Best tuple over the members of a cover.
    SolveApprox {
        #[command(flatten)]
        instance: Instance,
        /// Cover file: "s num den" then one member per line.
        #[arg(long)]
        cover: Option<PathBuf>,
        /// Set size for the generated cover; defaults to the largest shroud set.
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 4)]
        depth_cap: usize,
        #[arg(long)]
        state_cap: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append per-stage timings, which differ between runs.
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Exact optimum over all tuples; weights may be negative.
    SolveExact {
        #[command(flatten)]
        instance: Instance,
        #[arg(long, default_value_t = 4)]
        depth_cap: usize,
        #[arg(long)]
        state_cap: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Compile the sentence into counters and print signature, sentence and tables.
    Eliminate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        formula: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth_cap: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Build a coloring cover, or load and re-measure a cover file.
    Cover {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, default_value_t = 4)]
        depth_cap: usize,
        /// Existing cover to measure instead of building one.
        #[arg(long)]
        cover: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Brute-force optimum, for small instances.
    Oracle {
        #[command(flatten)]
        instance: Instance,
        /// Largest number of membership bits to enumerate.
        #[arg(long, default_value_t = sparsefo::dp::BRUTE_FORCE_CAP)]
        cap: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run a self-check suite on the built-in corpus.
    Check {
        /// One of qelim, dp, exact.
        #[arg(long, default_value = "qelim")]
        suite: String,
        #[arg(long, default_value_t = 5)]
        max_n: usize,
        /// Additional seeded random graphs.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Approximation against brute force on a graph family.
    Bench {
        /// path, cycle, grid, random-planarish or bounded-degree-random.
        #[arg(long, default_value = "path")]
        family: String,
        /// Sizes as "4..8" (inclusive) or "4,6,9".
        #[arg(long, default_value = "4..8")]
        sizes: String,
        /// Sentence file; defaults to the corpus sentence named by --corpus.
        #[arg(long)]
        formula: Option<PathBuf>,
        #[arg(long, default_value = "independent-set")]
        corpus: String,
        #[arg(long, default_value_t = 4)]
        depth_cap: usize,
        #[arg(long)]
        state_cap: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit comma-separated records instead of the aligned table.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        output: Output,
    },
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file<T>(path: &Path, r: sparsefo::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a sentence whose index set is whatever indices it mentions, `{1}` when none.
fn load_sentence(path: &Path) -> CliResult<(Formula, Vec<u32>)> {
    let text = read(path)?;
    let loose = in_file(path, parse_formula(&text, None))?;
    let mut indices: Vec<u32> = loose.set_indices().into_iter().collect();
    if indices.is_empty() {
        indices.push(1);
    }
    let phi = in_file(path, parse_sentence(&text, &indices))?;
    Ok((phi, indices))
}

fn load_instance(inst: &Instance) -> CliResult<(Graph, Formula, WeightAssignment)> {
    let g = in_file(&inst.graph, load_graph(&read(&inst.graph)?))?;
    let (phi, indices) = load_sentence(&inst.formula)?;
    let w = match &inst.weights {
        Some(p) => in_file(p, load_weights(&read(p)?, &g, &indices))?,
        None => WeightAssignment::uniform(g.n(), &indices, 1),
    };
    Ok((g, phi, w))
}

fn state_cap(flag: Option<usize>) -> CliResult<DpOptions> {
    let cap = match flag {
        Some(c) => c,
        None => match std::env::var(STATE_CAP_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                CliError::Usage(format!("{STATE_CAP_ENV} must be a positive integer, got `{v}`"))
            })?,
            Err(_) => DEFAULT_STATE_CAP,
        },
    };
    if cap == 0 {
        return Err(CliError::Usage("the state cap must be positive".into()));
    }
    Ok(DpOptions { state_cap: cap })
}

fn elim_options(depth_cap: usize) -> CliResult<ElimOptions> {
    if depth_cap == 0 {
        return Err(CliError::Usage("--depth-cap must be positive".into()));
    }
    Ok(ElimOptions {
        depth_cap,
        ..ElimOptions::default()
    })
}

fn parse_sizes(text: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad size list `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// Solution dump: one line per index, then value and status.
fn solution_text(t: &ITuple, value: i64, status: &str) -> String {
    format!("{t}value={value}\nstatus={status}\n")
}

fn report_text(r: &SolveReport, timings: bool) -> String {
    let mut s = solution_text(&r.tuple, r.value, "approx");
    let _ = writeln!(s, "delta={}", r.delta);
    let _ = writeln!(
        s,
        "cover={} members={} s={}",
        r.cover.provenance,
        r.cover.members.len(),
        r.cover.s
    );
    let elements: Vec<String> = r
        .element_values
        .iter()
        .map(|v| v.map_or("-".to_string(), |v| v.to_string()))
        .collect();
    let _ = writeln!(s, "elements={}", elements.join(" "));
    let _ = writeln!(s, "best-element={}", r.best_element);
    let _ = writeln!(s, "shroud={} counters={}", r.shroud_size, r.counters);
    let _ = writeln!(s, "monotonicity={}", r.monotonicity);
    if timings {
        for (stage, d) in &r.timings {
            let _ = writeln!(s, "time.{stage}={:.3}ms", d.as_secs_f64() * 1000.0);
        }
    }
    s
}

fn emit(output: &Output, text: &str) -> CliResult<()> {
    match &output.out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Prints the infeasible dump before handing the error back for the exit code.
fn infeasible(output: &Output, e: sparsefo::Error) -> CliResult<i32> {
    if e == sparsefo::Error::Infeasible {
        emit(output, "status=infeasible\n")?;
        return Ok(EXIT_INFEASIBLE);
    }
    Err(e.into())
}

fn cover_text(c: &Cover) -> String {
    let mut s = c.to_text();
    let _ = writeln!(s, "# provenance={}", c.provenance);
    if let Some(v) = c.verified_delta {
        let _ = writeln!(s, "# verified-delta={v}");
    }
    s
}

fn execute(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::SolveApprox {
            instance,
            cover,
            s,
            depth_cap,
            state_cap: cap,
            seed,
            timings,
            output,
        } => {
            let (g, phi, w) = load_instance(&instance)?;
            let options = ApproxOptions {
                elim: elim_options(depth_cap)?,
                dp: state_cap(cap)?,
                seed,
                ..ApproxOptions::default()
            };
            let cover = match (cover, s) {
                (Some(p), _) => Some(in_file(&p, load_cover(&read(&p)?, &g))?),
                (None, Some(s)) => Some(default_cover(&g, s.max(1), depth_cap)?),
                (None, None) => None,
            };
            match solve_approx(&g, &w, &phi, cover, depth_cap, &options) {
                Ok(r) => {
                    if r.monotonicity == Monotonicity::Violated {
                        eprintln!("warning: the sentence is not monotone; the guarantee does not apply");
                    }
                    emit(&output, &report_text(&r, timings))?;
                    Ok(EXIT_OK)
                }
                Err(e) => infeasible(&output, e),
            }
        }
        Command::SolveExact {
            instance,
            depth_cap,
            state_cap: cap,
            output,
        } => {
            let (g, phi, w) = load_instance(&instance)?;
            match solve_exact(&g, &w, &phi, &elim_options(depth_cap)?, &state_cap(cap)?) {
                Ok(d) => {
                    emit(&output, &solution_text(&d.solution.tuple, d.solution.value, "optimal"))?;
                    Ok(EXIT_OK)
                }
                Err(e) => infeasible(&output, e),
            }
        }
        Command::Eliminate {
            graph,
            formula,
            depth_cap,
            output,
        } => {
            let g = in_file(&graph, load_graph(&read(&graph)?))?;
            let (phi, _) = load_sentence(&formula)?;
            let e = eliminate_all_with(&g, &phi, &elim_options(depth_cap)?)?;
            emit(&output, &e.to_text())?;
            Ok(EXIT_OK)
        }
        Command::Cover {
            graph,
            s,
            depth_cap,
            cover,
            output,
        } => {
            let g = in_file(&graph, load_graph(&read(&graph)?))?;
            let c = match cover {
                Some(p) => in_file(&p, load_cover(&read(&p)?, &g))?,
                None => {
                    let mut c = default_cover(&g, s.max(1), depth_cap)?;
                    if s <= 3 {
                        c.verified_delta = Some(measure_genericity(g.n(), &c.members, s));
                    }
                    c
                }
            };
            emit(&output, &cover_text(&c))?;
            Ok(EXIT_OK)
        }
        Command::Oracle {
            instance,
            cap,
            output,
        } => {
            let (g, phi, w) = load_instance(&instance)?;
            let all: BTreeSet<usize> = (0..g.n()).collect();
            match brute_force(&g, &w, &phi, &all, cap) {
                Ok(sol) => {
                    emit(&output, &solution_text(&sol.tuple, sol.value, "optimal"))?;
                    Ok(EXIT_OK)
                }
                Err(e) => infeasible(&output, e),
            }
        }
        Command::Check {
            suite,
            max_n,
            random,
            seed,
        } => {
            let suite: Suite = suite.parse()?;
            let report = check_suite(suite, max_n, random, seed)?;
            for f in &report.failures {
                println!("FAIL {f}");
            }
            println!(
                "suite={} cases={} failures={}",
                report.suite,
                report.cases,
                report.failures.len()
            );
            Ok(if report.passed() { EXIT_OK } else { EXIT_INPUT })
        }
        Command::Bench {
            family,
            sizes,
            formula,
            corpus: name,
            depth_cap,
            state_cap: cap,
            seed,
            csv,
            timings,
            output,
        } => {
            let family: Family = family.parse()?;
            let phi = match formula {
                Some(p) => load_sentence(&p)?.0,
                None => corpus::formulas()
                    .into_iter()
                    .chain(corpus::local_formulas())
                    .find(|f| f.name == name)
                    .ok_or_else(|| CliError::Usage(format!("unknown corpus sentence `{name}`")))?
                    .parse()?,
            };
            let mut config = BenchConfig::new(family, parse_sizes(&sizes)?, seed);
            config.depth_cap = depth_cap;
            config.approx.elim = elim_options(depth_cap)?;
            config.approx.dp = state_cap(cap)?;
            let table = bench(&config, &phi)?;
            let text = if csv {
                table.to_csv(timings)
            } else {
                table.to_text(timings)
            };
            emit(&output, &text)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
