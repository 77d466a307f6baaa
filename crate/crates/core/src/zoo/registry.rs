//! Named models for the command line: each with its inputs, a default
//! environment and the environment's schema.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{coin_flip, hmm_sir, hmm_sir_logged, lda, lin_regr_batch, simple_hmm, Popl, Variant};
use crate::dist::Kind;
use crate::env::Env;
use crate::model::Model;

/// Builds a fresh copy of a configured model; results are JSON.
pub type ModelFn = Box<dyn Fn() -> Model<Value> + Send + Sync>;

pub struct Entry {
    pub name: &'static str,
    pub description: &'static str,
    /// Default inputs; also documents every accepted input field.
    pub default_inputs: fn() -> Value,
    pub default_env: fn() -> Env,
    build: fn(Value) -> Result<ModelFn, String>,
}

impl Entry {
    /// The defaults with `inputs`' fields laid over them; unknown fields
    /// are rejected.
    pub fn resolve_inputs(&self, inputs: Option<&Value>) -> Result<Value, String> {
        let mut merged = (self.default_inputs)();
        if let Some(given) = inputs {
            let Value::Object(given) = given else {
                return Err(format!("inputs for `{}` must be a JSON object", self.name));
            };
            let defaults = merged.as_object_mut().expect("defaults are objects");
            for (k, v) in given {
                if !defaults.contains_key(k) {
                    return Err(format!(
                        "unknown input `{k}` for model `{}`; expected one of {:?}",
                        self.name,
                        defaults.keys().collect::<Vec<_>>()
                    ));
                }
                defaults.insert(k.clone(), v.clone());
            }
        }
        Ok(merged)
    }

    /// Builds the model from `inputs`, whose fields override the defaults.
    pub fn build(&self, inputs: Option<&Value>) -> Result<ModelFn, String> {
        (self.build)(self.resolve_inputs(inputs)?)
    }

    /// `[{name, kind}]` for every variable of the default environment.
    pub fn env_schema(&self) -> Value {
        let env = (self.default_env)();
        Value::Array(
            env.entries()
                .iter()
                .map(|e| json!({ "name": e.name().as_str(), "kind": e.kind() }))
                .collect(),
        )
    }
}

fn parse<T: DeserializeOwned>(model: &str, v: Value) -> Result<T, String> {
    serde_json::from_value(v).map_err(|e| format!("inputs for `{model}`: {e}"))
}

fn to_json<T: Serialize>(t: T) -> Value {
    serde_json::to_value(t).expect("model results serialize")
}

#[derive(Deserialize)]
struct LinInputs {
    xs: Vec<f64>,
}

#[derive(Deserialize)]
struct HmmInputs {
    n: usize,
    x0: i64,
}

#[derive(Deserialize)]
struct SirInputs {
    days: usize,
    s: i64,
    i: i64,
    r: i64,
    #[serde(default)]
    v: i64,
}

impl SirInputs {
    fn popl(&self) -> Result<Popl, String> {
        if [self.s, self.i, self.r, self.v].iter().any(|&c| c < 0) {
            return Err("population counts must be non-negative".into());
        }
        Ok(Popl {
            s: self.s,
            i: self.i,
            r: self.r,
            v: self.v,
        })
    }
}

#[derive(Deserialize)]
struct LdaInputs {
    vocab: Vec<String>,
    topics: usize,
    doc_length: usize,
}

fn default_xs() -> Vec<f64> {
    (0..=100).map(f64::from).collect()
}

fn sir_env(extra: &[(&str, f64)]) -> Env {
    let mut b = Env::builder()
        .real("beta", [0.7])
        .real("gamma", [0.009])
        .real("rho", [0.3]);
    for &(name, v) in extra {
        b = b.real(name, [v]);
    }
    b.int("xi", []).build().expect("valid default")
}

fn sir_entry(name: &'static str, description: &'static str, variant: Variant) -> Entry {
    let (default_env, build): (fn() -> Env, fn(Value) -> Result<ModelFn, String>) = match variant {
        Variant::Sir => (|| sir_env(&[]), |v| build_sir(Variant::Sir, v)),
        Variant::Sirs => (|| sir_env(&[("eta", 0.05)]), |v| build_sir(Variant::Sirs, v)),
        Variant::Sirsv => (
            || sir_env(&[("eta", 0.05), ("omega", 0.02)]),
            |v| build_sir(Variant::Sirsv, v),
        ),
    };
    Entry {
        name,
        description,
        default_inputs: || json!({ "days": 100, "s": 762, "i": 1, "r": 0, "v": 0 }),
        default_env,
        build,
    }
}

fn build_sir(variant: Variant, v: Value) -> Result<ModelFn, String> {
    let inputs: SirInputs = parse("sir", v)?;
    let sir0 = inputs.popl()?;
    let days = inputs.days;
    Ok(Box::new(move || hmm_sir(variant, days, sir0).map(to_json)))
}

/// Every registered model.
pub fn registry() -> Vec<Entry> {
    vec![
        Entry {
            name: "linregr",
            description: "linear regression, one y per input x with shared mu, c, sigma",
            default_inputs: || json!({ "xs": default_xs() }),
            default_env: || {
                Env::builder()
                    .real("mu", [])
                    .real("c", [])
                    .real("sigma", [])
                    .real("y", default_xs().into_iter().map(|x| 3.0 * x))
                    .build()
                    .expect("valid default")
            },
            build: |v| {
                let LinInputs { xs } = parse("linregr", v)?;
                Ok(Box::new(move || lin_regr_batch(xs.clone()).map(to_json)))
            },
        },
        Entry {
            name: "hmm",
            description: "integer random-walk hidden Markov model with binomial observations",
            default_inputs: || json!({ "n": 10, "x0": 0 }),
            default_env: || {
                Env::builder()
                    .real("trans_p", [])
                    .real("obs_p", [])
                    .int("y", [0, 1, 1, 3, 4, 5, 5, 5, 6, 5])
                    .build()
                    .expect("valid default")
            },
            build: |v| {
                let HmmInputs { n, x0 } = parse("hmm", v)?;
                Ok(Box::new(move || simple_hmm(n, x0).map(to_json)))
            },
        },
        sir_entry("sir", "SIR epidemic over `days` days; returns the final population", Variant::Sir),
        sir_entry("sirs", "SIR with recovered individuals becoming susceptible again", Variant::Sirs),
        sir_entry("sirsv", "SIRS with vaccination of susceptibles", Variant::Sirsv),
        Entry {
            name: "sir-logged",
            description: "SIR returning every day's population alongside the final one",
            default_inputs: || json!({ "days": 100, "s": 762, "i": 1, "r": 0 }),
            default_env: || sir_env(&[]),
            build: |v| {
                let inputs: SirInputs = parse("sir-logged", v)?;
                let (sir0, days) = (inputs.popl()?, inputs.days);
                Ok(Box::new(move || {
                    hmm_sir_logged(Variant::Sir, days, sir0)
                        .map(|(last, days)| json!({ "final": last, "trajectory": days }))
                }))
            },
        },
        Entry {
            name: "coinflip",
            description: "p ~ Uniform(0, 1), y ~ Bernoulli(p)",
            default_inputs: || json!({}),
            default_env: || {
                Env::builder()
                    .real("p", [])
                    .boolean("y", [true])
                    .build()
                    .expect("valid default")
            },
            build: |_| Ok(Box::new(|| coin_flip().map(to_json))),
        },
        Entry {
            name: "lda",
            description: "latent Dirichlet allocation for one document",
            default_inputs: || {
                json!({
                    "vocab": ["DNA", "evolution", "parsing", "phonology"],
                    "topics": 2,
                    "doc_length": 10
                })
            },
            default_env: || {
                Env::builder()
                    .entry("theta", Kind::Vec, vec![])
                    .entry("phi", Kind::Vec, vec![])
                    .int("w", [])
                    .build()
                    .expect("valid default")
            },
            build: |v| {
                let LdaInputs {
                    vocab,
                    topics,
                    doc_length,
                } = parse("lda", v)?;
                if vocab.is_empty() || topics == 0 {
                    return Err("lda needs a non-empty vocabulary and at least one topic".into());
                }
                Ok(Box::new(move || lda(vocab.clone(), topics, doc_length).map(to_json)))
            },
        },
    ]
}

pub fn lookup(name: &str) -> Option<Entry> {
    registry().into_iter().find(|e| e.name == name)
}
