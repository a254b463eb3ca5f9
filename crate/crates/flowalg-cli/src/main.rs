//! Batch front end: load a program file, then validate, run, unfold,
//! render or mutate it.
//!
//! Exit codes: 0 on success, 1 when diagnostics were reported (bad
//! program files, validation or type findings, a failing baseline),
//! 2 when execution itself failed at runtime.

use std::collections::BTreeMap;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flowalg::dataflow::{
    execute, load_program, save_program_str, to_dot, typecheck_program, unfold, validate,
    ExecOptions, NodeId, ProgramGraph,
};
use flowalg::dataset::{parse_dataset, write_dataset};
use flowalg::mutation::{generate_mutants, load_test_suite, run_analysis, AnalysisOptions};
use flowalg::{Error, Value};

#[derive(Parser)]
#[command(name = "flowalg", version, about = "Executable data-flow program model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and type check a program file
    Check { program: PathBuf },
    /// Execute a program on bound input datasets
    Run {
        program: PathBuf,
        /// Bind an input dataset: PLACE=FILE (repeatable)
        #[arg(long = "input", value_name = "PLACE=FILE")]
        inputs: Vec<String>,
        /// Override a loop's iteration count: LOOP=N (repeatable)
        #[arg(long = "n", value_name = "LOOP=N")]
        loops: Vec<String>,
        /// Shuffle the firing schedule with this seed
        #[arg(long)]
        seed: Option<u64>,
        /// Directory receiving one JSON file per output dataset
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the firing trace to trace.txt
        #[arg(long)]
        trace: bool,
    },
    /// Replace loops by iteration-indexed body copies
    Unfold {
        program: PathBuf,
        /// Override a loop's iteration count: LOOP=N (repeatable)
        #[arg(long = "n", value_name = "LOOP=N")]
        loops: Vec<String>,
        /// Directory receiving the unfolded program and its DOT rendering
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Render the program as Graphviz DOT
    Dot {
        program: PathBuf,
        /// Write here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the mutants of a program
    Mutants {
        program: PathBuf,
        /// Machine-readable listing
        #[arg(long)]
        json: bool,
        /// Also write each mutant as a program file into this directory
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Mutation analysis: run a test suite against every mutant
    Mtest {
        program: PathBuf,
        /// Test-suite file (JSON list of cases)
        #[arg(long)]
        tests: PathBuf,
        /// Absolute tolerance for float comparison when deciding kills
        #[arg(long, default_value_t = 0.0)]
        float_tol: f64,
        /// Worker threads
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        /// Override a loop's iteration count: LOOP=N (repeatable)
        #[arg(long = "n", value_name = "LOOP=N")]
        loops: Vec<String>,
        /// Write the JSON report here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            match e.root() {
                // malformed files, invalid programs and failing
                // baselines are diagnostics; the rest is runtime
                Error::Decode(_)
                | Error::Syntax { .. }
                | Error::Type(_)
                | Error::Arity(_)
                | Error::Unbound(_)
                | Error::InvalidProgram(_)
                | Error::BaselineFailure(_)
                | Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn use_color() -> bool {
    std::env::var("FLOWALG_COLOR").map(|v| v != "0").unwrap_or(true)
        && std::io::stdout().is_terminal()
}

fn report_error(e: &Error) {
    if use_color() {
        eprintln!("\x1b[31merror\x1b[0m: {e}");
    } else {
        eprintln!("error: {e}");
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Check { program } => check(&program),
        Command::Run {
            program,
            inputs,
            loops,
            seed,
            out,
            trace,
        } => run(&program, &inputs, &loops, seed, &out, trace),
        Command::Unfold { program, loops, out } => unfold_cmd(&program, &loops, &out),
        Command::Dot { program, output } => dot_cmd(&program, output.as_deref()),
        Command::Mutants { program, json, emit } => mutants_cmd(&program, json, emit.as_deref()),
        Command::Mtest {
            program,
            tests,
            float_tol,
            jobs,
            loops,
            out,
        } => mtest(&program, &tests, float_tol, jobs, &loops, out.as_deref()),
    }
}

/// Loads, validates and type checks; prints findings when dirty.
fn load_checked(path: &Path) -> Result<(ProgramGraph, bool), Error> {
    let g = load_program(path)?;
    let mut clean = true;
    let diags = validate(&g);
    for d in &diags {
        println!("finding: {d}");
    }
    clean &= diags.is_empty();
    if diags.is_empty() {
        if let Err(diags) = typecheck_program(&g) {
            for d in &diags {
                println!("finding: {d}");
            }
            clean = false;
        }
    }
    Ok((g, clean))
}

fn check(path: &Path) -> Result<ExitCode, Error> {
    let (g, clean) = load_checked(path)?;
    println!(
        "{}: {} places, {} transitions, {} edges",
        g.name,
        g.places.len(),
        g.transitions.len(),
        g.edges().len()
    );
    if clean {
        println!("ok");
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn parse_bindings(g: &ProgramGraph, specs: &[String]) -> Result<BTreeMap<NodeId, Value>, Error> {
    let mut out = BTreeMap::new();
    for spec in specs {
        let Some((place, file)) = spec.split_once('=') else {
            return Err(Error::Decode(format!(
                "input binding `{spec}` must look like PLACE=FILE"
            )));
        };
        let id = NodeId::from(place);
        let ty = g
            .places
            .get(&id)
            .map(|p| p.ty.clone())
            .ok_or_else(|| Error::Decode(format!("program has no dataset `{place}`")))?;
        let text =
            std::fs::read_to_string(file).map_err(|e| Error::Decode(format!("{file}: {e}")))?;
        let value = parse_dataset(&text, &ty).map_err(|e| e.with_context(format!("in {file}")))?;
        out.insert(id, value);
    }
    Ok(out)
}

fn parse_loop_overrides(specs: &[String]) -> Result<BTreeMap<NodeId, i64>, Error> {
    let mut out = BTreeMap::new();
    for spec in specs {
        let Some((loop_id, n)) = spec.split_once('=') else {
            return Err(Error::Decode(format!(
                "loop override `{spec}` must look like LOOP=N"
            )));
        };
        let n: i64 = n
            .parse()
            .map_err(|_| Error::Decode(format!("`{n}` is not an iteration count")))?;
        out.insert(NodeId::from(loop_id), n);
    }
    Ok(out)
}

fn run(
    path: &Path,
    inputs: &[String],
    loops: &[String],
    seed: Option<u64>,
    out_dir: &Path,
    trace: bool,
) -> Result<ExitCode, Error> {
    let (g, clean) = load_checked(path)?;
    if !clean {
        return Ok(ExitCode::from(1));
    }
    let bindings = parse_bindings(&g, inputs)?;
    let options = ExecOptions {
        seed,
        loop_overrides: parse_loop_overrides(loops)?,
    };
    let outcome = execute(&g, &bindings, &options)?;
    std::fs::create_dir_all(out_dir)?;
    for w in &outcome.warnings {
        println!("warning: {w}");
    }
    for (place, value) in &outcome.outputs {
        let file = out_dir.join(format!("{place}.json"));
        std::fs::write(&file, write_dataset(value)?)?;
        println!("wrote {}", file.display());
    }
    if trace {
        let mut text = String::new();
        for event in &outcome.trace {
            text.push_str(&event.to_string());
            text.push('\n');
        }
        text.push_str(&format!("final marking: {}\n", outcome.final_marking));
        let file = out_dir.join("trace.txt");
        std::fs::write(&file, text)?;
        println!("wrote {}", file.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn unfold_cmd(path: &Path, loops: &[String], out_dir: &Path) -> Result<ExitCode, Error> {
    let (g, clean) = load_checked(path)?;
    if !clean {
        return Ok(ExitCode::from(1));
    }
    let overrides = parse_loop_overrides(loops)?;
    let unfolded = unfold(&g, &overrides)?;
    std::fs::create_dir_all(out_dir)?;
    let flow = out_dir.join(format!("{}_unfolded.flow", g.name));
    std::fs::write(&flow, save_program_str(&unfolded)?)?;
    println!("wrote {}", flow.display());
    let dot = out_dir.join(format!("{}_unfolded.dot", g.name));
    std::fs::write(&dot, to_dot(&unfolded))?;
    println!("wrote {}", dot.display());
    println!(
        "unfolded: {} places, {} transitions, {} edges",
        unfolded.places.len(),
        unfolded.transitions.len(),
        unfolded.edges().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn dot_cmd(path: &Path, output: Option<&Path>) -> Result<ExitCode, Error> {
    let (g, clean) = load_checked(path)?;
    if !clean {
        return Ok(ExitCode::from(1));
    }
    let dot = to_dot(&g);
    match output {
        Some(file) => {
            std::fs::write(file, dot)?;
            println!("wrote {}", file.display());
        }
        None => print!("{dot}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn mutants_cmd(path: &Path, json: bool, emit: Option<&Path>) -> Result<ExitCode, Error> {
    let (g, clean) = load_checked(path)?;
    if !clean {
        return Ok(ExitCode::from(1));
    }
    let mutants = generate_mutants(&g)?;
    if json {
        let listing: Vec<serde_json::Value> = mutants
            .iter()
            .enumerate()
            .map(|(i, m)| {
                serde_json::json!({
                    "index": i + 1,
                    "operator": m.family.name(),
                    "extended": m.family.is_extended(),
                    "sites": m.sites.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                    "description": m.description,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&listing).expect("json"));
    } else {
        for (i, m) in mutants.iter().enumerate() {
            let extended = if m.family.is_extended() {
                " [extended operator]"
            } else {
                ""
            };
            println!(
                "#{:<3} {:<34} {}{}",
                i + 1,
                m.family.name(),
                m.description,
                extended
            );
        }
        println!("{} mutants", mutants.len());
    }
    if let Some(dir) = emit {
        std::fs::create_dir_all(dir)?;
        for (i, m) in mutants.iter().enumerate() {
            let file = dir.join(format!("mutant_{:03}.flow", i + 1));
            std::fs::write(&file, save_program_str(&m.graph)?)?;
        }
        println!("wrote {} mutant files to {}", mutants.len(), dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn mtest(
    path: &Path,
    tests_path: &Path,
    float_tol: f64,
    jobs: usize,
    loops: &[String],
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let (g, clean) = load_checked(path)?;
    if !clean {
        return Ok(ExitCode::from(1));
    }
    let tests = load_test_suite(&g, tests_path)?;
    let mutants = generate_mutants(&g)?;
    let options = AnalysisOptions {
        float_tol,
        workers: jobs,
        loop_overrides: parse_loop_overrides(loops)?,
    };
    let report = run_analysis(&g, &mutants, &tests, &options)?;
    print!("{}", report.render_table(use_color()));
    if let Some(file) = out {
        std::fs::write(file, report.to_json())?;
        println!("wrote {}", file.display());
    }
    Ok(ExitCode::SUCCESS)
}
