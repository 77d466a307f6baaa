//! Single-site Metropolis-Hastings over whole-program traces.

use rand::Rng;

use super::trace::{append_samples, total, LPTrace, STrace};
use super::{report, run_mh, MhRun};
use crate::env::{Env, EnvReport};
use crate::error::{Error, Result};
use crate::model::{Addr, Model};
use crate::rng;

/// Log acceptance ratio for moving from `cur` to `new` after redrawing
/// `proposal` from its prior.
///
/// `ℓ' − ℓ + LP(α₀) − LP'(α₀) + Σ_stale LP − Σ_fresh LP' + ln|S| − ln|S'|`,
/// where fresh sites are those drawn afresh other than the proposal and
/// stale sites are old sites that were neither reused nor the proposal.
pub fn accept_log_ratio<A>(cur: &MhRun<A>, new: &MhRun<A>, proposal: &Addr) -> f64 {
    let old_total = total(&cur.lptrace);
    let new_total = total(&new.lptrace);
    if old_total == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    if new_total == f64::NEG_INFINITY || new.run.strace.is_empty() {
        return f64::NEG_INFINITY;
    }
    let reused = |a: &Addr| new.run.strace.contains_key(a) && !new.fresh.contains(a);
    let stale: f64 = cur
        .run
        .strace
        .keys()
        .filter(|a| *a != proposal && !reused(a))
        .map(|a| lp_at(&cur.lptrace, a))
        .sum();
    let fresh: f64 = new
        .fresh
        .iter()
        .filter(|a| *a != proposal)
        .map(|a| lp_at(&new.lptrace, a))
        .sum();
    let reverse = lp_at(&cur.lptrace, proposal);
    let forward = new.lptrace.get(proposal).copied().unwrap_or(0.0);
    let sizes = (cur.run.strace.len() as f64).ln() - (new.run.strace.len() as f64).ln();
    let r = new_total - old_total + reverse - forward + stale - fresh + sizes;
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

fn lp_at(lps: &LPTrace, a: &Addr) -> f64 {
    lps.get(a)
        .copied()
        .expect("internal: every sampled address has a log probability")
}

/// What an observer sees after each MH iteration.
pub struct MhStep<'a> {
    pub iteration: usize,
    /// Whether the proposed trace was taken; always true for iteration 0.
    pub accepted: bool,
    pub proposal: Option<&'a Addr>,
    /// The chain's current state after the accept/reject decision.
    pub strace: &'a STrace,
    pub lptrace: &'a LPTrace,
}

#[derive(Clone, Debug)]
pub struct MhOutput {
    /// The current trace's samples per variable, appended once per iteration.
    pub env: Env,
    pub accepted: usize,
    pub iterations: usize,
    /// Environment usage of the first iteration.
    pub report: EnvReport,
}

pub fn mh<X, A>(
    iterations: usize,
    model: impl Fn(X) -> Model<A>,
    x: X,
    env: &Env,
    seed: u64,
) -> Result<MhOutput>
where
    X: Clone,
    A: Send + 'static,
{
    mh_with(iterations, model, x, env, seed, |_| {})
}

/// [`mh`] with a callback after every iteration.
///
/// Iteration 0 runs with an empty trace and is accepted unconditionally;
/// iteration `i` picks the proposal site uniformly from the current trace
/// and draws everything from stream `i` of `seed`.
pub fn mh_with<X, A>(
    iterations: usize,
    model: impl Fn(X) -> Model<A>,
    x: X,
    env: &Env,
    seed: u64,
    mut observe: impl FnMut(&MhStep<'_>),
) -> Result<MhOutput>
where
    X: Clone,
    A: Send + 'static,
{
    let mut out = MhOutput {
        env: env.emptied(),
        accepted: 0,
        iterations,
        report: EnvReport::default(),
    };
    if iterations == 0 {
        return Ok(out);
    }
    let mut cur = run_mh(env, &STrace::new(), None, model(x.clone()), &mut rng::stream(seed, 0))?;
    if cur.run.strace.is_empty() {
        return Err(Error::NothingToInfer);
    }
    out.report = report(env, &cur.run.residual, &cur.run.strace);
    out.accepted = 1;
    append_samples(&mut out.env, &cur.run.strace)?;
    observe(&MhStep {
        iteration: 0,
        accepted: true,
        proposal: None,
        strace: &cur.run.strace,
        lptrace: &cur.lptrace,
    });
    for i in 1..iterations {
        let mut rng = rng::stream(seed, i as u64);
        let pick = rng.random_range(0..cur.run.strace.len());
        let proposal = cur
            .run
            .strace
            .keys()
            .nth(pick)
            .cloned()
            .expect("index within trace");
        let accepted = match run_mh(env, &cur.run.strace, Some(&proposal), model(x.clone()), &mut rng) {
            Ok(new) => {
                let log_alpha = accept_log_ratio(&cur, &new, &proposal);
                let accepted = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
                if accepted {
                    cur = new;
                }
                accepted
            }
            // A reused value outside its new support can drive later
            // parameters out of range (a negative binomial count, say); such
            // a trace has zero density and is rejected like any other.
            Err(Error::InvalidParameter { .. }) => false,
            Err(e) => return Err(e),
        };
        out.accepted += usize::from(accepted);
        append_samples(&mut out.env, &cur.run.strace)?;
        observe(&MhStep {
            iteration: i,
            accepted,
            proposal: Some(&proposal),
            strace: &cur.run.strace,
            lptrace: &cur.lptrace,
        });
    }
    Ok(out)
}
