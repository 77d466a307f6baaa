use std::fs;
use std::path::{Path, PathBuf};

use effprob::inference::{mh_with, reify, run_mh};
use effprob::rng::stream;
use effprob::{Env, Error, STrace};
use serde_json::{json, Value};

use crate::config::{Algo, Format, Resolved, RunConfig};
use crate::error::{config, CliError};
use crate::output::{trace_json, Record, RunOutput};

/// Runs the configured algorithm in memory.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let r = cfg.resolve()?;
    let mut out = RunOutput {
        config: r.config.clone(),
        records: Vec::with_capacity(cfg.iterations),
        traces: Vec::new(),
        report: Default::default(),
        accepted: None,
    };
    match cfg.algorithm {
        Algo::Simulate => simulate(&r, &mut out)?,
        Algo::Lw => lw(&r, &mut out)?,
        Algo::Mh => mh(&r, &mut out)?,
    }
    Ok(out)
}

fn simulate(r: &Resolved, out: &mut RunOutput) -> Result<(), CliError> {
    let cfg = &r.config;
    for i in 0..cfg.iterations {
        let mut rng = stream(cfg.seed, i as u64);
        let sim = effprob::simulate(|()| (r.model)(), &r.env, (), &mut rng)?;
        if i == 0 {
            out.report = sim.report.clone();
        }
        if cfg.dump_traces {
            out.traces.push(replay_trace(r, i, None)?);
        }
        out.records.push(Record {
            iter: i,
            log_weight: None,
            accepted: None,
            result: Some(sim.value),
            values: sim.env,
        });
    }
    Ok(())
}

fn lw(r: &Resolved, out: &mut RunOutput) -> Result<(), CliError> {
    let cfg = &r.config;
    let res = effprob::lw(cfg.iterations, |()| (r.model)(), (), &r.env, cfg.seed)?;
    out.report = res.report;
    for (i, w) in res.samples.into_iter().enumerate() {
        if cfg.dump_traces {
            out.traces.push(replay_trace(r, i, Some(w.log_weight))?);
        }
        out.records.push(Record {
            iter: i,
            log_weight: Some(w.log_weight),
            accepted: None,
            result: Some(w.value),
            values: w.env,
        });
    }
    Ok(())
}

/// Simulation and likelihood weighting do not keep log probabilities, so a
/// dump re-runs the iteration's stream under the tracing stack, which draws
/// the identical trace.
fn replay_trace(r: &Resolved, i: usize, log_weight: Option<f64>) -> Result<Value, CliError> {
    let cfg = &r.config;
    let run = run_mh(
        &r.env,
        &STrace::new(),
        None,
        (r.model)(),
        &mut stream(cfg.seed, i as u64),
    )?;
    Ok(trace_json(
        i,
        true,
        None,
        &run.run.strace,
        &run.lptrace,
        log_weight,
    ))
}

fn mh(r: &Resolved, out: &mut RunOutput) -> Result<(), CliError> {
    let cfg = &r.config;
    let mut failure: Option<Error> = None;
    let records = &mut out.records;
    let traces = &mut out.traces;
    let res = mh_with(cfg.iterations, |()| (r.model)(), (), &r.env, cfg.seed, |step| {
        if failure.is_some() {
            return;
        }
        let values: Env = match reify(&r.env, step.strace) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        if cfg.dump_traces {
            traces.push(trace_json(
                step.iteration,
                step.accepted,
                step.proposal,
                step.strace,
                step.lptrace,
                None,
            ));
        }
        records.push(Record {
            iter: step.iteration,
            log_weight: None,
            accepted: Some(step.accepted),
            result: None,
            values,
        });
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    out.report = res.report;
    out.accepted = Some(res.accepted);
    Ok(())
}

pub fn render(out: &RunOutput) -> String {
    match out.config.format {
        Format::Csv => out.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.to_json()).expect("json output");
            s.push('\n');
            s
        }
    }
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `<out>.traces.jsonl`
pub fn traces_path(out: &Path) -> PathBuf {
    sibling(out, "traces.jsonl")
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}

pub fn manifest(out: &RunOutput) -> Value {
    let table = out.config.out.as_deref();
    json!({
        "tool": "effprob",
        "version": env!("CARGO_PKG_VERSION"),
        "config": out.config,
        "files": {
            "table": table,
            "traces": table.filter(|_| out.config.dump_traces).map(traces_path),
        },
        "rows": out.records.len(),
        "accepted": out.accepted,
        "env_report": out.report,
    })
}

/// Runs and writes the table (to `out`, or returns it for stdout when no
/// path is configured), the manifest and any trace dump.
pub fn run(cfg: &RunConfig) -> Result<(RunOutput, Option<String>), CliError> {
    let out = execute(cfg)?;
    let table = render(&out);
    let Some(path) = &cfg.out else {
        return Ok((out, Some(table)));
    };
    write(path, &table)?;
    if cfg.dump_traces {
        let mut lines = String::new();
        for t in &out.traces {
            lines.push_str(&t.to_string());
            lines.push('\n');
        }
        write(&traces_path(path), &lines)?;
    }
    let mut m = serde_json::to_string_pretty(&manifest(&out)).expect("manifest json");
    m.push('\n');
    write(&manifest_path(path), &m)?;
    Ok((out, None))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| config(format!("cannot write {}: {e}", path.display())))
}

/// The configuration recorded in a manifest.
pub fn load_manifest(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config(format!("--manifest {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| config(format!("--manifest {}: {e}", path.display())))?;
    serde_json::from_value(v["config"].clone())
        .map_err(|e| config(format!("--manifest {}: config: {e}", path.display())))
}
