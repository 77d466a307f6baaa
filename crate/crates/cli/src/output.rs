//! Result tables and trace dumps.
//!
//! CSV columns, in order: `iter`, then `log_weight` (lw), `accepted` (mh) or
//! `result` (simulate), then one column per environment variable that was
//! sampled in at least one iteration, in environment order. A cell holding
//! one value is that value as JSON; several values form a JSON array.

use effprob::{Addr, Env, EnvReport, LPTrace, PrimVal, STrace};
use serde_json::{json, Map, Value};

use crate::config::{Algo, RunConfig};

/// One iteration's row.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub iter: usize,
    pub log_weight: Option<f64>,
    pub accepted: Option<bool>,
    pub result: Option<Value>,
    /// Values sampled this iteration, per variable of the input environment.
    pub values: Env,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// The resolved configuration.
    pub config: RunConfig,
    pub records: Vec<Record>,
    /// One JSON object per iteration when traces were requested.
    pub traces: Vec<Value>,
    pub report: EnvReport,
    pub accepted: Option<usize>,
}

impl RunOutput {
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["iter".to_string()];
        match self.config.algorithm {
            Algo::Simulate => cols.push("result".into()),
            Algo::Lw => cols.push("log_weight".into()),
            Algo::Mh => cols.push("accepted".into()),
        }
        cols.extend(self.sampled_names());
        cols
    }

    fn sampled_names(&self) -> Vec<String> {
        let Some(first) = self.records.first() else {
            return Vec::new();
        };
        first
            .values
            .names()
            .map(|n| n.as_str())
            .filter(|n| {
                self.records
                    .iter()
                    .any(|r| r.values.get(n).is_ok_and(|vs| !vs.is_empty()))
            })
            .map(str::to_string)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let names = self.sampled_names();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns()).expect("in-memory write");
        for r in &self.records {
            let mut row = vec![r.iter.to_string()];
            row.push(match self.config.algorithm {
                Algo::Simulate => r.result.as_ref().map_or_else(String::new, Value::to_string),
                Algo::Lw => r.log_weight.map_or_else(String::new, float_cell),
                Algo::Mh => r.accepted.map_or_else(String::new, |a| a.to_string()),
            });
            for n in &names {
                row.push(values_cell(r.values.get(n).unwrap_or(&[])));
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> Value {
        let names = self.sampled_names();
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|r| {
                let mut o = Map::new();
                o.insert("iter".into(), json!(r.iter));
                if let Some(lw) = r.log_weight {
                    o.insert("log_weight".into(), json!(lw));
                }
                if let Some(a) = r.accepted {
                    o.insert("accepted".into(), json!(a));
                }
                if let Some(v) = &r.result {
                    o.insert("result".into(), v.clone());
                }
                let values: Map<String, Value> = names
                    .iter()
                    .map(|n| (n.clone(), json!(r.values.get(n).unwrap_or(&[]))))
                    .collect();
                o.insert("values".into(), Value::Object(values));
                Value::Object(o)
            })
            .collect();
        let samples: Map<String, Value> = names
            .iter()
            .map(|n| {
                let all: Vec<&PrimVal> = self
                    .records
                    .iter()
                    .flat_map(|r| r.values.get(n).unwrap_or(&[]))
                    .collect();
                (n.clone(), json!(all))
            })
            .collect();
        json!({
            "model": self.config.model,
            "algorithm": self.config.algorithm,
            "iterations": self.config.iterations,
            "seed": self.config.seed,
            "columns": self.columns(),
            "records": records,
            "samples": samples,
            "accepted": self.accepted,
            "env_report": self.report,
        })
    }
}

/// Shortest round-tripping decimal, with `inf`, `-inf` and `NaN` spelled out.
fn float_cell(x: f64) -> String {
    if x.is_finite() {
        json!(x).to_string()
    } else {
        x.to_string()
    }
}

fn values_cell(vs: &[PrimVal]) -> String {
    match vs {
        [] => String::new(),
        [v] => json!(v).to_string(),
        vs => json!(vs).to_string(),
    }
}

/// `{iteration, accepted, proposal_addr, strace, lptrace, log_weight?}`;
/// a log probability of minus infinity is written as `null`.
pub fn trace_json(
    iteration: usize,
    accepted: bool,
    proposal: Option<&Addr>,
    strace: &STrace,
    lptrace: &LPTrace,
    log_weight: Option<f64>,
) -> Value {
    let strace: Vec<Value> = strace
        .iter()
        .map(|(a, v)| json!({ "tag": a.tag(), "occurrence": a.occurrence(), "value": v }))
        .collect();
    let lptrace: Vec<Value> = lptrace
        .iter()
        .map(|(a, lp)| json!({ "tag": a.tag(), "occurrence": a.occurrence(), "lp": lp }))
        .collect();
    let mut o = json!({
        "iteration": iteration,
        "accepted": accepted,
        "proposal_addr": proposal.map(ToString::to_string),
        "strace": strace,
        "lptrace": lptrace,
    });
    if let Some(lw) = log_weight {
        o["log_weight"] = json!(lw);
    }
    o
}

/// The JSON Schema that [`RunOutput::to_json`] documents conform to.
pub const OUTPUT_SCHEMA: &str = include_str!("../schema/output.schema.json");
