//! `icp`: solve, evaluate and propagate inequality systems from the command
//! line.

mod plot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use icp_core::propagate::{eval_by_propagation, gpa, psi, Init, Options, Order, PropagationStats};
use icp_core::search::{box_json, lower_bound_minimum, solve_system, BcMethod, CompiledSystem, SolveConfig, Strategy};
use icp_core::{eval_term, parse_system, parse_term, Interval, IntervalBox, System, Term};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "icp", version, about = "Interval constraint propagation for nonlinear inequality systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a cover of the solution set by branch and prune.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Write the cover of a two-variable system as SVG.
        #[arg(long, value_name = "FILE")]
        plot: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate a term over the declared box.
    Eval {
        file: PathBuf,
        /// 1-based formula index, or an expression over the declared variables.
        #[arg(long)]
        term: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Propagate the system to a fixpoint over the declared box.
    Propagate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::Psi)]
        engine: Engine,
        /// Print every DRO application.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare the work done by GPA and PSI on the same input.
    Bench {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Lower bound on the minimum of an objective over the solutions.
    Minlb {
        file: PathBuf,
        #[arg(long)]
        objective: String,
        #[arg(long, default_value_t = 1e-3)]
        precision: f64,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    json: bool,
    /// Include propagation or search statistics.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    min_width: Option<f64>,
    #[arg(long)]
    max_boxes: Option<usize>,
    /// Box consistency tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Gpa,
    Psi,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Greedy,
    Bc,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Functional,
    Relational,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: icp_core::ParseError },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Search(#[from] icp_core::SearchError),
    #[error(transparent)]
    Eval(#[from] icp_core::EvalError),
    #[error(transparent)]
    Propagate(#[from] icp_core::PropagateError),
}

/// What a command produced: text or JSON for standard output, and whether
/// the input was proven to have no solution.
struct Report {
    text: String,
    json: Value,
    infeasible: bool,
}

impl SearchArgs {
    fn config(&self, base: SolveConfig) -> SolveConfig {
        SolveConfig {
            min_width: self.min_width.unwrap_or(base.min_width),
            max_boxes: self.max_boxes.unwrap_or(base.max_boxes),
            strategy: match self.strategy {
                Some(StrategyArg::Greedy) => Strategy::Greedy,
                Some(StrategyArg::Bc) => Strategy::BoxConsistencyFirst,
                None => base.strategy,
            },
            bc_tolerance: self.tolerance.unwrap_or(base.bc_tolerance),
            bc_method: match self.method {
                Some(MethodArg::Functional) => BcMethod::Functional,
                Some(MethodArg::Relational) => BcMethod::Relational,
                None => base.bc_method,
            },
            threads: self.threads,
        }
    }
}

fn read_system(path: &Path) -> Result<System, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system(&text).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn stats_json(stats: &PropagationStats) -> Value {
    json!({
        "dro_calls": stats.total_dro_calls,
        "changed_domain_events": stats.changed_domain_events,
        "initial_active": stats.initial_active,
        "max_activations": stats.max_activations(),
        "budget_exhausted": stats.budget_exhausted,
    })
}

fn render_box(bx: &IntervalBox) -> String {
    bx.iter().map(|(name, d)| format!("{name} in {d}\n")).collect()
}

fn solve(file: &Path, search: &SearchArgs, plot: Option<&Path>, out: &OutputArgs) -> Result<Report, CliError> {
    let system = read_system(file)?;
    let cfg = search.config(SolveConfig::default());
    let cover = solve_system(&system, &cfg)?;
    if let Some(path) = plot {
        let svg = plot::render(&system.declarations, &cover).map_err(CliError::Input)?;
        std::fs::write(path, svg).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let mut text = format!(
        "proven boxes: {} (volume {})\nindeterminate boxes: {} (volume {})\ninfeasible boxes: {}\n",
        cover.proven.len(),
        cover.proven_volume(),
        cover.indeterminate.len(),
        cover.indeterminate_volume(),
        cover.infeasible_count
    );
    if cover.stats.budget_exhausted {
        text.push_str("box budget exhausted; remaining boxes reported as indeterminate\n");
    }
    for (kind, boxes) in [("proven", &cover.proven), ("indeterminate", &cover.indeterminate)] {
        for b in boxes {
            text.push_str(&format!("{kind} {b}\n"));
        }
    }
    if out.stats {
        let s = &cover.stats;
        text.push_str(&format!("nodes {} splits {} dro calls {}\n", s.nodes, s.splits, s.dro_calls));
    }
    Ok(Report {
        infeasible: cover.proven.is_empty() && cover.indeterminate.is_empty(),
        json: cover.to_json(),
        text,
    })
}

fn select_term(system: &System, selector: &str) -> Result<Term, CliError> {
    if let Ok(k) = selector.parse::<usize>() {
        return system
            .formulas
            .get(k.wrapping_sub(1))
            .map(|f| f.lhs.clone())
            .ok_or_else(|| CliError::Input(format!("no formula {k}; the file has {}", system.formulas.len())));
    }
    parse_term(selector).map_err(|e| CliError::Input(format!("--term: {e}")))
}

fn eval(file: &Path, term: &str) -> Result<Report, CliError> {
    let system = read_system(file)?;
    let t = select_term(&system, term)?;
    let by_eval = eval_term(&t, &system.declarations)?;
    let by_prop = eval_by_propagation(&t, &system.declarations)?;
    Ok(Report {
        text: format!("{t}\nevaluation  {by_eval}\npropagation {by_prop}\n"),
        json: json!({
            "term": t.to_string(),
            "evaluation": interval_json(by_eval),
            "propagation": interval_json(by_prop),
        }),
        infeasible: false,
    })
}

fn interval_json(d: Interval) -> Value {
    let bx: IntervalBox = [("d", d)].into_iter().collect();
    box_json(&bx)["d"].clone()
}

fn propagate(file: &Path, engine: Engine, trace: bool, out: &OutputArgs) -> Result<Report, CliError> {
    let system = read_system(file)?;
    let compiled = CompiledSystem::new(&system);
    let start = compiled.domains_for(&compiled.initial_box());
    let opts = Options {
        trace,
        ..Options::default()
    };
    let outcome = match engine {
        Engine::Psi => psi(&compiled.icsp, &start, &opts),
        Engine::Gpa => gpa(&compiled.icsp, &start, &Init::All, &Options { order: Order::Fifo, ..opts }),
    };
    let stats = outcome.stats();
    let mut text = String::new();
    if trace {
        text.push_str(&stats.render_trace(&compiled.icsp));
    }
    let (bx, infeasible) = match outcome.domains() {
        Some(d) => (Some(compiled.read_box(&compiled.initial_box(), d)), false),
        None => (None, true),
    };
    text.push_str(&format!("{outcome}\n"));
    if let Some(bx) = &bx {
        text.push_str(&render_box(bx));
    }
    if stats.budget_exhausted {
        text.push_str("activation budget exhausted before a fixpoint was reached\n");
    }
    if out.stats {
        text.push_str(&format!(
            "dro calls {}, initial active set {}, max activations per constraint {}\n",
            stats.total_dro_calls,
            stats.initial_active,
            stats.max_activations()
        ));
        text.push_str(&stats.render(&compiled.icsp));
    }
    let mut json = json!({
        "outcome": outcome.to_string(),
        "box": bx.as_ref().map(box_json),
    });
    if out.stats {
        json["stats"] = stats_json(stats);
    }
    Ok(Report { text, json, infeasible })
}

fn bench(file: &Path) -> Result<Report, CliError> {
    let system = read_system(file)?;
    let compiled = CompiledSystem::new(&system);
    let start = compiled.domains_for(&compiled.initial_box());
    let full = gpa(&compiled.icsp, &start, &Init::All, &Options::with_order(Order::Fifo));
    let selective = psi(&compiled.icsp, &start, &Options::default());
    let (g, p) = (full.stats(), selective.stats());
    let same = full.domains() == selective.domains();
    let mut text = format!("constraints {}\n", compiled.icsp.constraints().len());
    text.push_str(&format!("{:<28}{:>12}{:>12}\n", "", "GPA", "PSI"));
    for (label, a, b) in [
        ("initial active set", g.initial_active as u64, p.initial_active as u64),
        ("DRO calls", g.total_dro_calls, p.total_dro_calls),
        ("max activations", g.max_activations(), p.max_activations()),
        ("changed-domain events", g.changed_domain_events, p.changed_domain_events),
    ] {
        text.push_str(&format!("{label:<28}{a:>12}{b:>12}\n"));
    }
    text.push_str(&format!("same result: {same} ({full})\n"));
    Ok(Report {
        text,
        json: json!({
            "constraints": compiled.icsp.constraints().len(),
            "gpa": stats_json(g),
            "psi": stats_json(p),
            "same_result": same,
            "outcome": full.to_string(),
        }),
        infeasible: false,
    })
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
fn minlb(file: &Path, objective: &str, precision: f64, search: &SearchArgs) -> Result<Report, CliError> {
    let system = read_system(file)?;
    let objective = parse_term(objective).map_err(|e| CliError::Input(format!("--objective: {e}")))?;
    if !(precision > 0.0) {
        return Err(CliError::Input(format!("--precision must be positive, got {precision}")));
    }
    let cfg = search.config(SolveConfig::for_lower_bound(precision));
    let lb = lower_bound_minimum(&objective, &system, precision, &cfg)?;
    let value = if lb.is_finite() { json!(lb) } else { json!(lb.to_string()) };
    Ok(Report {
        text: if lb == f64::INFINITY {
            "infeasible: no solutions, so no finite lower bound\n".into()
        } else {
            format!("lower bound {lb}\n")
        },
        json: json!({ "objective": objective.to_string(), "lower_bound": value }),
        infeasible: lb == f64::INFINITY,
    })
}

fn run(cli: &Cli) -> Result<(Report, bool), CliError> {
    Ok(match &cli.command {
        Command::Solve {
            file,
            search,
            plot,
            out,
        } => (solve(file, search, plot.as_deref(), out)?, out.json),
        Command::Eval { file, term, out } => (eval(file, term)?, out.json),
        Command::Propagate {
            file,
            engine,
            trace,
            out,
        } => (propagate(file, *engine, *trace, out)?, out.json),
        Command::Bench { file, out } => (bench(file)?, out.json),
        Command::Minlb {
            file,
            objective,
            precision,
            search,
            out,
        } => (minlb(file, objective, *precision, search)?, out.json),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, as_json)) => {
            let text = if as_json {
                serde_json::to_string_pretty(&report.json).expect("plain values") + "\n"
            } else {
                report.text
            };
            // a closed pipe (e.g. `| head`) is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if report.infeasible {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
