//! Sample and log-probability traces, and the transformations that record
//! them as the program runs.

use std::collections::BTreeMap;

use crate::dist::PrimVal;
use crate::effects::modify;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::model::Addr;
use crate::prog::{project, EffectId, Operation, Prog, Signature};

/// Values drawn at each `Sample` of one run.
pub type STrace = BTreeMap<Addr, PrimVal>;

/// Natural-log probability contributed at each `Sample` and `Observe`.
pub type LPTrace = BTreeMap<Addr, f64>;

/// Follows every `Sample` with a `Modify` recording the value it produced.
/// `sig` is the program's signature and must contain `State<STrace>`.
pub fn trace_samples<A: 'static>(sig: &Signature, prog: Prog<A>) -> Prog<A> {
    match prog {
        Prog::Val(a) => Prog::Val(a),
        Prog::Fail(e) => Prog::Fail(e),
        Prog::Op(req, k) => {
            let sig = sig.clone();
            match project(&req, &EffectId::Sample) {
                Some(Operation::Sample(s)) => {
                    let addr = s.addr.clone();
                    Prog::Op(
                        req,
                        Box::new(move |r| {
                            let v = r.clone().into_value();
                            modify::<STrace, _>(&sig, move |mut t| {
                                t.insert(addr, v);
                                t
                            })
                            .bind(move |()| trace_samples(&sig, k(r)))
                        }),
                    )
                }
                _ => Prog::Op(req, Box::new(move |r| trace_samples(&sig, k(r)))),
            }
        }
    }
}

/// Follows every `Sample` and `Observe` with a `Modify` recording the log
/// probability of the value involved. `sig` must contain `State<LPTrace>`.
pub fn trace_lps<A: 'static>(sig: &Signature, prog: Prog<A>) -> Prog<A> {
    match prog {
        Prog::Val(a) => Prog::Val(a),
        Prog::Fail(e) => Prog::Fail(e),
        Prog::Op(req, k) => {
            let sig = sig.clone();
            let recorded = match req.operation() {
                Operation::Sample(s) => Some((s.addr.clone(), Err(s.dist.clone()))),
                Operation::Observe(o) => Some((o.addr.clone(), Ok(o.dist.log_prob(&o.value)))),
                _ => None,
            };
            match recorded {
                None => Prog::Op(req, Box::new(move |r| trace_lps(&sig, k(r)))),
                Some((addr, lp)) => Prog::Op(
                    req,
                    Box::new(move |r| {
                        // a sample's log probability is only known once it is drawn
                        let lp = lp.unwrap_or_else(|d| d.log_prob(&r.clone().into_value()));
                        match lp {
                            Ok(lp) => modify::<LPTrace, _>(&sig, move |mut t| {
                                t.insert(addr, lp);
                                t
                            })
                            .bind(move |()| trace_lps(&sig, k(r))),
                            Err(e) => Prog::Fail(e),
                        }
                    }),
                ),
            }
        }
    }
}

/// Groups sampled values by tag, in occurrence order, into an environment
/// with the same variables as `input`. Untagged sites are dropped.
pub fn reify(input: &Env, strace: &STrace) -> Result<Env> {
    let mut out = input.emptied();
    append_samples(&mut out, strace)?;
    Ok(out)
}

pub(crate) fn append_samples(out: &mut Env, strace: &STrace) -> Result<()> {
    for (addr, v) in strace {
        match out.push_value(addr.tag(), v.clone()) {
            Ok(()) | Err(Error::UnknownVariable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Sum of a trace's log probabilities.
pub fn total(lps: &LPTrace) -> f64 {
    lps.values().sum()
}
