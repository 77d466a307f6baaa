use std::path::PathBuf;

use clap::ValueEnum;
use effprob::zoo::registry::{self, Entry, ModelFn};
use effprob::Env;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{config, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Simulate,
    Lw,
    Mh,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Simulate => "simulate",
            Algo::Lw => "lw",
            Algo::Mh => "mh",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything one run depends on. A manifest stores the resolved form, with
/// the environment and inputs spelled out in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: String,
    pub algorithm: Algo,
    pub iterations: usize,
    pub seed: u64,
    /// `None` runs under the model's default environment.
    pub env: Option<Env>,
    /// Fields overriding the model's default inputs.
    pub inputs: Option<Value>,
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(default)]
    pub dump_traces: bool,
}

impl RunConfig {
    pub fn new(model: &str, algorithm: Algo) -> Self {
        RunConfig {
            model: model.to_string(),
            algorithm,
            iterations: 1,
            seed: 0,
            env: None,
            inputs: None,
            out: None,
            format: Format::Csv,
            dump_traces: false,
        }
    }
}

/// A validated configuration, ready to run.
pub struct Resolved {
    pub config: RunConfig,
    pub entry: Entry,
    pub model: ModelFn,
    pub env: Env,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let entry = registry::lookup(&self.model).ok_or_else(|| {
            let known: Vec<_> = registry::registry().iter().map(|e| e.name).collect();
            config(format!("unknown model `{}`; known models: {}", self.model, known.join(", ")))
        })?;
        if self.iterations == 0 {
            return Err(config("--iterations must be at least 1"));
        }
        if self.dump_traces && self.out.is_none() {
            return Err(config("--dump-traces needs --out"));
        }
        let inputs = entry
            .resolve_inputs(self.inputs.as_ref())
            .map_err(|e| config(format!("--input: {e}")))?;
        let model = entry.build(Some(&inputs)).map_err(|e| config(format!("--input: {e}")))?;
        let env = match &self.env {
            Some(env) => env.clone(),
            None => (entry.default_env)(),
        };
        check_env(&entry, &env)?;
        let config = RunConfig {
            env: Some(env.clone()),
            inputs: Some(inputs),
            ..self.clone()
        };
        Ok(Resolved {
            config,
            entry,
            model,
            env,
        })
    }
}

/// Every variable the model reads must be present with the right kind.
fn check_env(entry: &Entry, env: &Env) -> Result<(), CliError> {
    let expected = (entry.default_env)();
    for e in expected.entries() {
        let name = e.name().as_str();
        match env.kind_of(name) {
            Err(_) => {
                return Err(config(format!(
                    "environment lacks variable `{name}` ({} values) used by model `{}`",
                    e.kind(),
                    entry.name
                )))
            }
            Ok(k) if k != e.kind() => {
                return Err(config(format!(
                    "environment variable `{name}` holds {k} values but model `{}` expects {}",
                    entry.name,
                    e.kind()
                )))
            }
            Ok(_) => {}
        }
    }
    Ok(())
}

pub fn read_env(path: &std::path::Path) -> Result<Env, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config(format!("--env {}: {e}", path.display())))?;
    Env::from_json(&text).map_err(|e| config(format!("--env {}: {e}", path.display())))
}

pub fn parse_inputs(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| config(format!("--input: {e}")))
}
