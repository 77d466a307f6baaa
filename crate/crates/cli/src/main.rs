use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use effprob::zoo::registry;
use effprob_cli::bench::bench;
use effprob_cli::config::{parse_inputs, read_env};
use effprob_cli::output::OUTPUT_SCHEMA;
use effprob_cli::{load_manifest, run, Algo, CliError, Format, RunConfig};
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Simulate,
    Lw,
    Mh,
    /// Time the algorithms at several iteration counts.
    Bench,
    /// List registered models with their inputs and environments.
    Models,
    /// Print the JSON Schema of `--format json` output.
    Schema,
}

/// Run probabilistic models under simulation, likelihood weighting or
/// Metropolis-Hastings.
#[derive(Parser, Debug)]
#[command(name = "effprob", version)]
struct Cli {
    command: Option<Command>,

    /// Algorithm, for use instead of a command.
    #[arg(long, value_enum)]
    algo: Option<Algo>,

    /// Registry model; for bench, a comma-separated list.
    #[arg(long)]
    model: Option<String>,

    #[arg(long, default_value_t = 1)]
    iterations: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Environment JSON: `[{"name", "kind", "values"}]`.
    #[arg(long)]
    env: Option<PathBuf>,

    /// Model inputs as a JSON object, overriding the defaults.
    #[arg(long)]
    input: Option<String>,

    /// Output file; also writes `<out>.manifest.json`. Without it the table
    /// goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Also write every iteration's traces to `<out>.traces.jsonl`.
    #[arg(long)]
    dump_traces: bool,

    /// Same as the bench command.
    #[arg(long)]
    bench: bool,

    /// Re-run the configuration recorded in a manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Bench iteration counts.
    #[arg(long, value_delimiter = ',', default_values_t = [200, 400, 600, 800, 1000])]
    sizes: Vec<usize>,

    /// Bench algorithms.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Simulate, Algo::Lw, Algo::Mh])]
    algos: Vec<Algo>,

    /// Bench repetitions per point; the fastest is kept.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| dispatch(&cli));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        // the panic message has already been printed
        Err(_) => CliError::Internal(String::new()).exit_code(),
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if let Some(path) = &cli.manifest {
        let mut cfg = load_manifest(path)?;
        if cli.out.is_some() {
            cfg.out.clone_from(&cli.out);
        }
        return execute(&cfg);
    }
    let command = match (cli.command, cli.algo) {
        (Some(c), None) => c,
        (None, Some(a)) => algo_command(a),
        (Some(c), Some(a)) if c == algo_command(a) => c,
        (Some(c), Some(a)) => {
            return Err(CliError::Config(format!(
                "command {c:?} conflicts with --algo {}",
                a.name()
            )))
        }
        (None, None) if cli.bench => Command::Bench,
        (None, None) => {
            return Err(CliError::Config(
                "give a command (simulate, lw, mh, bench, models, schema) or --algo".into(),
            ))
        }
    };
    match command {
        Command::Models => {
            let list: Vec<_> = registry::registry()
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "description": e.description,
                        "inputs": (e.default_inputs)(),
                        "env_schema": e.env_schema(),
                        "default_env": (e.default_env)(),
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&list).expect("json"));
            Ok(())
        }
        Command::Schema => {
            print!("{OUTPUT_SCHEMA}");
            Ok(())
        }
        Command::Bench => run_bench(cli),
        Command::Simulate | Command::Lw | Command::Mh => {
            let algorithm = match command {
                Command::Simulate => Algo::Simulate,
                Command::Lw => Algo::Lw,
                _ => Algo::Mh,
            };
            let model = cli
                .model
                .clone()
                .ok_or_else(|| CliError::Config("--model is required".into()))?;
            let cfg = RunConfig {
                model,
                algorithm,
                iterations: cli.iterations,
                seed: cli.seed,
                env: cli.env.as_deref().map(read_env).transpose()?,
                inputs: cli.input.as_deref().map(parse_inputs).transpose()?,
                out: cli.out.clone(),
                format: cli.format,
                dump_traces: cli.dump_traces,
            };
            execute(&cfg)
        }
    }
}

fn algo_command(a: Algo) -> Command {
    match a {
        Algo::Simulate => Command::Simulate,
        Algo::Lw => Command::Lw,
        Algo::Mh => Command::Mh,
    }
}

fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let (out, table) = run(cfg)?;
    if let Some(table) = table {
        print!("{table}");
    }
    for (name, left) in &out.report.unconsumed {
        eprintln!("warning: `{name}` has {left} unconsumed value(s)");
    }
    for name in &out.report.exhausted {
        eprintln!("warning: `{name}` ran out of values; later occurrences were sampled");
    }
    Ok(())
}

fn run_bench(cli: &Cli) -> Result<(), CliError> {
    let models: Vec<&str> = match &cli.model {
        Some(m) => m.split(',').map(str::trim).collect(),
        None => vec!["linregr", "hmm"],
    };
    let report = bench(&models, &cli.algos, &cli.sizes, cli.seed, cli.repeats)?;
    let text = match cli.format {
        Format::Csv => report.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("json");
            s.push('\n');
            s
        }
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    for s in &report.series {
        eprintln!(
            "{} {}: {:.3e} s/iteration, R² {:.4}{}",
            s.model,
            s.algorithm.name(),
            s.fit.slope,
            s.fit.r2,
            if s.monotone { "" } else { ", not monotone" }
        );
    }
    Ok(())
}
