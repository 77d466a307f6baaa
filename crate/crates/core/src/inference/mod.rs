//! Execution semantics as handler stacks.
//!
//! Simulation, likelihood weighting and Metropolis-Hastings share everything
//! up to the handlers for `Observe` and `Sample`:
//!
//! * simulate: `handle_samp . handle_obs . handle_state . trace_samples . handle_core`
//! * lw: `handle_samp . handle_obs_lw . handle_state . trace_samples . handle_core`
//! * mh: `handle_samp_mh . handle_obs . handle_state . handle_state . trace_lps . trace_samples . handle_core`

mod mh;
mod trace;

use std::collections::BTreeSet;

use either::Either;
use rand::Rng;

use crate::dist::{Dist, PrimVal};
use crate::effects::handle_state;
use crate::env::{Env, EnvReport};
use crate::error::{Error, Result};
use crate::model::{handle_core, Addr, Model};
use crate::prog::{discharge, mismatched, EffectId, Operation, Prog, Reply, Signature};
use crate::rng;

pub use mh::{accept_log_ratio, mh, mh_with, MhOutput, MhStep};
pub use trace::{reify, total, trace_lps, trace_samples, LPTrace, STrace};

/// Passes each observed value to its continuation.
pub fn handle_obs<A: 'static>(prog: Prog<A>) -> Prog<A> {
    let mut prog = prog;
    loop {
        match prog {
            Prog::Val(a) => return Prog::Val(a),
            Prog::Fail(e) => return Prog::Fail(e),
            Prog::Op(req, k) => match discharge(req) {
                Either::Right(Operation::Observe(o)) => prog = k(Reply::Value(o.value)),
                Either::Right(op) => return mismatched("Observe", &op),
                Either::Left(req) => {
                    return Prog::Op(req, Box::new(move |r| handle_obs(k(r))));
                }
            },
        }
    }
}

/// Like [`handle_obs`], also summing the log probability of every observed
/// value, starting from `lp`.
pub fn handle_obs_lw<A: 'static>(lp: f64, prog: Prog<A>) -> Prog<(A, f64)> {
    let mut lp = lp;
    let mut prog = prog;
    loop {
        match prog {
            Prog::Val(a) => return Prog::Val((a, lp)),
            Prog::Fail(e) => return Prog::Fail(e),
            Prog::Op(req, k) => match discharge(req) {
                Either::Right(Operation::Observe(o)) => match o.dist.log_prob(&o.value) {
                    Ok(x) => {
                        lp += x;
                        prog = k(Reply::Value(o.value));
                    }
                    Err(e) => return Prog::Fail(e),
                },
                Either::Right(op) => return mismatched("Observe", &op),
                Either::Left(req) => {
                    return Prog::Op(req, Box::new(move |r| handle_obs_lw(lp, k(r))));
                }
            },
        }
    }
}

/// The last handler of a stack: draws every `Sample` from `rng`.
pub fn handle_samp<A: 'static, R: Rng + ?Sized>(rng: &mut R, prog: Prog<A>) -> Result<A> {
    let mut prog = prog;
    loop {
        match prog {
            Prog::Val(a) => return Ok(a),
            Prog::Fail(e) => return Err(e),
            Prog::Op(req, k) => match discharge(req) {
                Either::Right(Operation::Sample(s)) => {
                    let v = s.dist.sample(rng);
                    prog = k(Reply::Value(v));
                }
                Either::Right(op) => return Err(unhandled(&op)),
                Either::Left(req) => return Err(unhandled(req.operation())),
            },
        }
    }
}

fn unhandled(op: &Operation) -> Error {
    Error::Unhandled(format!("{op:?} reached the sample handler"))
}

/// The stored value at `addr`, unless `addr` is the proposal site, has no
/// stored value, or stores a value of the wrong kind; then a fresh draw.
/// The flag is true for fresh draws.
pub fn lookup_sample<R: Rng + ?Sized>(
    strace: &STrace,
    d: &Dist,
    addr: &Addr,
    proposal: Option<&Addr>,
    rng: &mut R,
) -> (PrimVal, bool) {
    if proposal != Some(addr) {
        if let Some(v) = strace.get(addr) {
            if v.kind() == d.base_kind() {
                return (v.clone(), false);
            }
        }
    }
    (d.sample(rng), true)
}

/// The last handler of the MH stack: resolves every `Sample` through
/// [`lookup_sample`]. Also returns the addresses that were drawn afresh.
pub fn handle_samp_mh<A: 'static, R: Rng + ?Sized>(
    strace: &STrace,
    proposal: Option<&Addr>,
    rng: &mut R,
    prog: Prog<A>,
) -> Result<(A, BTreeSet<Addr>)> {
    let mut fresh = BTreeSet::new();
    let mut prog = prog;
    loop {
        match prog {
            Prog::Val(a) => return Ok((a, fresh)),
            Prog::Fail(e) => return Err(e),
            Prog::Op(req, k) => match discharge(req) {
                Either::Right(Operation::Sample(s)) => {
                    let (v, drawn) = lookup_sample(strace, &s.dist, &s.addr, proposal, rng);
                    if drawn {
                        fresh.insert(s.addr);
                    }
                    prog = k(Reply::Value(v));
                }
                Either::Right(op) => return Err(unhandled(&op)),
                Either::Left(req) => return Err(unhandled(req.operation())),
            },
        }
    }
}

/// One execution: result, what was left of the environment, and the samples.
#[derive(Clone, Debug)]
pub struct Run<A> {
    pub value: A,
    pub residual: Env,
    pub strace: STrace,
}

fn signature(effects: impl IntoIterator<Item = EffectId>) -> Signature {
    Signature::new(effects).expect("fixed stacks have distinct effects")
}

fn sim_stack() -> Signature {
    signature([
        EffectId::state::<STrace>(),
        EffectId::Observe,
        EffectId::Sample,
    ])
}

pub fn run_simulate<A, R>(env: &Env, model: Model<A>, rng: &mut R) -> Result<Run<A>>
where
    A: Send + 'static,
    R: Rng + ?Sized,
{
    let sig = sim_stack();
    let prog = trace_samples(&sig, handle_core(env.clone(), model, &sig));
    let prog = handle_obs(handle_state(STrace::new(), prog));
    let ((value, residual), strace) = handle_samp(rng, prog)?;
    Ok(Run {
        value,
        residual,
        strace,
    })
}

/// Simulation with `Observe` scoring instead of ignoring; returns the log
/// weight alongside the run.
pub fn run_lw<A, R>(env: &Env, model: Model<A>, rng: &mut R) -> Result<(Run<A>, f64)>
where
    A: Send + 'static,
    R: Rng + ?Sized,
{
    let sig = sim_stack();
    let prog = trace_samples(&sig, handle_core(env.clone(), model, &sig));
    let prog = handle_obs_lw(0.0, handle_state(STrace::new(), prog));
    let (((value, residual), strace), lw) = handle_samp(rng, prog)?;
    Ok((
        Run {
            value,
            residual,
            strace,
        },
        lw,
    ))
}

/// One MH execution against the previous sample trace.
#[derive(Clone, Debug)]
pub struct MhRun<A> {
    pub run: Run<A>,
    pub lptrace: LPTrace,
    /// Addresses drawn afresh rather than reused.
    pub fresh: BTreeSet<Addr>,
}

pub fn run_mh<A, R>(
    env: &Env,
    strace: &STrace,
    proposal: Option<&Addr>,
    model: Model<A>,
    rng: &mut R,
) -> Result<MhRun<A>>
where
    A: Send + 'static,
    R: Rng + ?Sized,
{
    let sig = signature([
        EffectId::state::<STrace>(),
        EffectId::state::<LPTrace>(),
        EffectId::Observe,
        EffectId::Sample,
    ]);
    let prog = handle_core(env.clone(), model, &sig);
    let prog = trace_lps(&sig, trace_samples(&sig, prog));
    let prog = handle_state(LPTrace::new(), handle_state(STrace::new(), prog));
    let prog = handle_obs(prog);
    let ((((value, residual), new_strace), lptrace), fresh) =
        handle_samp_mh(strace, proposal, rng, prog)?;
    Ok(MhRun {
        run: Run {
            value,
            residual,
            strace: new_strace,
        },
        lptrace,
        fresh,
    })
}

/// A simulation reified into an output environment.
#[derive(Clone, Debug)]
pub struct Simulated<A> {
    pub value: A,
    /// Sampled values per variable of the input environment.
    pub env: Env,
    pub strace: STrace,
    pub report: EnvReport,
}

fn report(input: &Env, residual: &Env, strace: &STrace) -> EnvReport {
    EnvReport::new(input, residual, |name| {
        strace.keys().any(|a| a.tag() == name)
    })
}

pub fn simulate<X, A, R>(
    model: impl FnOnce(X) -> Model<A>,
    env: &Env,
    x: X,
    rng: &mut R,
) -> Result<Simulated<A>>
where
    A: Send + 'static,
    R: Rng + ?Sized,
{
    let run = run_simulate(env, model(x), rng)?;
    Ok(Simulated {
        env: reify(env, &run.strace)?,
        report: report(env, &run.residual, &run.strace),
        value: run.value,
        strace: run.strace,
    })
}

#[derive(Clone, Debug)]
pub struct Weighted<A> {
    pub value: A,
    pub env: Env,
    pub strace: STrace,
    pub log_weight: f64,
}

#[derive(Clone, Debug)]
pub struct LwOutput<A> {
    pub samples: Vec<Weighted<A>>,
    /// Environment usage of the first iteration.
    pub report: EnvReport,
}

/// `iterations` independent likelihood-weighted runs; iteration `i` draws
/// from stream `i` of `seed`.
pub fn lw<X, A>(
    iterations: usize,
    model: impl Fn(X) -> Model<A>,
    x: X,
    env: &Env,
    seed: u64,
) -> Result<LwOutput<A>>
where
    X: Clone,
    A: Send + 'static,
{
    let mut samples = Vec::with_capacity(iterations);
    let mut env_report = EnvReport::default();
    for i in 0..iterations {
        let mut rng = rng::stream(seed, i as u64);
        let (run, log_weight) = run_lw(env, model(x.clone()), &mut rng)?;
        if i == 0 {
            env_report = report(env, &run.residual, &run.strace);
        }
        samples.push(Weighted {
            env: reify(env, &run.strace)?,
            value: run.value,
            strace: run.strace,
            log_weight,
        });
    }
    Ok(LwOutput {
        samples,
        report: env_report,
    })
}
