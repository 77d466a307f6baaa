//! Multimodal models and their specialisation.
//!
//! A [`Model`] is a program over `ObsReader`, `Dist` and whatever extra
//! effects the caller adds. Smart constructors pair an `Ask` of the
//! observable variable with a distribution request whose observed slot holds
//! the answer. [`handle_read`] answers the `Ask`s from an environment and
//! [`handle_dist`] turns each distribution into an explicit `Sample` or
//! `Observe` with a runtime address.

use std::collections::HashMap;
use std::fmt;
use std::panic::Location;
use std::sync::Arc;

use either::Either;

use crate::dist::{get_obs, Dist, Family, PrimVal};
use crate::env::{Env, IntoObsVar, ObsVar};
use crate::error::{Error, Result};
use crate::prog::{
    call, discharge, forward, inject, mismatched, EffectId, Operation, Prog, Reply, Signature,
};

type Build<A> = Box<dyn FnOnce(&Signature) -> Prog<A> + Send>;

/// A program that is built once it is told the signature it runs under.
pub struct Model<A>(Build<A>);

impl<A: Send + 'static> Model<A> {
    pub fn new(build: impl FnOnce(&Signature) -> Prog<A> + Send + 'static) -> Self {
        Model(Box::new(build))
    }

    pub fn run(self, sig: &Signature) -> Prog<A> {
        (self.0)(sig)
    }

    pub fn pure(a: A) -> Self {
        Model::new(move |_| Prog::Val(a))
    }

    pub fn fail(e: Error) -> Self {
        Model::new(move |_| Prog::Fail(e))
    }

    pub fn bind<B: Send + 'static>(
        self,
        f: impl FnOnce(A) -> Model<B> + Send + 'static,
    ) -> Model<B> {
        Model::new(move |sig| {
            let sig2 = sig.clone();
            self.run(sig).bind(move |a| f(a).run(&sig2))
        })
    }

    pub fn map<B: Send + 'static>(self, f: impl FnOnce(A) -> B + Send + 'static) -> Model<B> {
        Model::new(move |sig| self.run(sig).map(f))
    }
}

/// Runtime address of a probabilistic operation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Addr {
    tag: Arc<str>,
    occurrence: usize,
}

impl Addr {
    pub fn new(tag: &str, occurrence: usize) -> Self {
        Addr {
            tag: tag.into(),
            occurrence,
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn occurrence(&self) -> usize {
        self.occurrence
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.tag, self.occurrence)
    }
}

impl fmt::Debug for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A `Dist` request: the distribution plus the source location of the smart
/// constructor that made it, which names untagged sites.
pub struct DistCall {
    pub dist: Dist,
    site: Option<&'static Location<'static>>,
}

impl DistCall {
    pub fn new(dist: Dist, site: Option<&'static Location<'static>>) -> Self {
        DistCall { dist, site }
    }
}

pub struct SampleOp {
    pub dist: Dist,
    pub addr: Addr,
}

pub struct ObserveOp {
    pub dist: Dist,
    pub value: PrimVal,
    pub addr: Addr,
}

fn dist_request(
    family: Result<Family>,
    tag: Option<Result<ObsVar>>,
    site: &'static Location<'static>,
) -> Model<PrimVal> {
    Model::new(move |sig| {
        let family = match family {
            Ok(f) => f,
            Err(e) => return Prog::Fail(e),
        };
        let emit = move |sig: &Signature, obs: Option<PrimVal>, tag: Option<ObsVar>| {
            match Dist::new(family, obs, tag) {
                Ok(d) => call(Operation::Dist(DistCall::new(d, Some(site))), sig)
                    .map(Reply::into_value),
                Err(e) => Prog::Fail(e),
            }
        };
        match tag {
            None => emit(sig, None, None),
            Some(Err(e)) => Prog::Fail(e),
            Some(Ok(x)) => {
                let sig2 = sig.clone();
                call(Operation::Ask(x.clone()), sig)
                    .bind(move |r| emit(&sig2, r.into_maybe(), Some(x)))
            }
        }
    })
}

fn retag<T: Send + 'static>(
    m: Model<PrimVal>,
    f: fn(&PrimVal) -> Option<T>,
    what: &'static str,
) -> Model<T> {
    m.map(move |v| match f(&v) {
        Some(t) => t,
        None => panic!("internal: expected a {what} value, got {v:?}"),
    })
}

fn into_vec(v: &PrimVal) -> Option<Vec<f64>> {
    v.as_vec().map(<[f64]>::to_vec)
}

macro_rules! smart {
    ($(#[$doc:meta])* $tagged:ident, $primed:ident, ($($p:ident : $t:ty),*) => $ctor:ident, $out:ty, $proj:expr, $what:literal) => {
        $(#[$doc])*
        #[track_caller]
        pub fn $tagged($($p: $t,)* x: impl IntoObsVar) -> Model<$out> {
            let site = Location::caller();
            retag(dist_request(Family::$ctor($($p),*), Some(x.into_obs_var()), site), $proj, $what)
        }

        /// Untagged form: always sampled, never conditionable.
        #[track_caller]
        pub fn $primed($($p: $t),*) -> Model<$out> {
            let site = Location::caller();
            retag(dist_request(Family::$ctor($($p),*), None, site), $proj, $what)
        }
    };
}

smart!(normal, normal_, (mu: f64, sigma: f64) => normal, f64, PrimVal::as_real, "real");
smart!(uniform, uniform_, (lo: f64, hi: f64) => uniform, f64, PrimVal::as_real, "real");
smart!(bernoulli, bernoulli_, (p: f64) => bernoulli, bool, PrimVal::as_bool, "bool");
smart!(binomial, binomial_, (n: i64, p: f64) => binomial, i64, PrimVal::as_int, "int");
smart!(beta, beta_, (a: f64, b: f64) => beta, f64, PrimVal::as_real, "real");
smart!(
    /// Shape/scale parameterisation.
    gamma, gamma_, (shape: f64, scale: f64) => gamma, f64, PrimVal::as_real, "real"
);
smart!(poisson, poisson_, (rate: f64) => poisson, i64, PrimVal::as_int, "int");
smart!(dirichlet, dirichlet_, (alphas: Vec<f64>) => dirichlet, Vec<f64>, into_vec, "vec");
smart!(
    /// Weighted choice among arbitrary values of one kind.
    discrete, discrete_, (choices: Vec<(PrimVal, f64)>) => discrete, PrimVal, |v: &PrimVal| Some(v.clone()), "primitive"
);

/// A discrete distribution over the indices `0..weights.len()`.
#[track_caller]
pub fn categorical(weights: &[f64], x: impl IntoObsVar) -> Model<i64> {
    let site = Location::caller();
    retag(
        dist_request(Family::categorical(weights), Some(x.into_obs_var()), site),
        PrimVal::as_int,
        "int",
    )
}

#[track_caller]
pub fn categorical_(weights: &[f64]) -> Model<i64> {
    let site = Location::caller();
    retag(
        dist_request(Family::categorical(weights), None, site),
        PrimVal::as_int,
        "int",
    )
}

/// Answers every `Ask` from `env`, consuming values front to back, and
/// returns what is left of the environment alongside the result.
pub fn handle_read<A: 'static>(env: Env, prog: Prog<A>) -> Prog<(A, Env)> {
    let offsets = vec![0; env.len()];
    go_read(Cursor { env, offsets }, prog)
}

struct Cursor {
    env: Env,
    offsets: Vec<usize>,
}

impl Cursor {
    fn ask(&mut self, x: &ObsVar) -> Result<Option<PrimVal>> {
        let i = self
            .env
            .entries()
            .iter()
            .position(|e| e.name() == x)
            .ok_or_else(|| Error::UnknownVariable(x.to_string()))?;
        let values = self.env.entries()[i].values();
        Ok(values.get(self.offsets[i]).cloned().inspect(|_| {
            self.offsets[i] += 1;
        }))
    }

    fn residual(self) -> Env {
        let mut env = self.env.clone();
        for (e, &off) in self.env.entries().iter().zip(&self.offsets) {
            if off > 0 {
                env = env
                    .set(e.name().as_str(), e.values()[off..].to_vec())
                    .expect("residual of a valid entry");
            }
        }
        env
    }
}

fn go_read<A: 'static>(mut cur: Cursor, mut prog: Prog<A>) -> Prog<(A, Env)> {
    loop {
        match prog {
            Prog::Val(a) => return Prog::Val((a, cur.residual())),
            Prog::Fail(e) => return Prog::Fail(e),
            Prog::Op(req, k) => match discharge(req) {
                Either::Right(Operation::Ask(x)) => match cur.ask(&x) {
                    Ok(v) => prog = k(Reply::Maybe(v)),
                    Err(e) => return Prog::Fail(e),
                },
                Either::Right(op) => return mismatched("ObsReader", &op),
                Either::Left(req) => return forward(req, k, move |p| go_read(cur, p)),
            },
        }
    }
}

type SiteKey = (&'static str, Option<(&'static str, u32, u32)>);

/// Assigns `(tag, occurrence)` addresses in execution order.
#[derive(Default)]
struct Addresser {
    hits: HashMap<Arc<str>, usize>,
    sites: HashMap<SiteKey, Arc<str>>,
    per_family: HashMap<&'static str, usize>,
}

impl Addresser {
    fn assign(&mut self, c: &DistCall) -> Addr {
        let tag = match c.dist.tag() {
            Some(x) => x.shared(),
            None => {
                let family = c.dist.family().name();
                let key = (family, c.site.map(|l| (l.file(), l.line(), l.column())));
                let per_family = &mut self.per_family;
                self.sites
                    .entry(key)
                    .or_insert_with(|| {
                        let k = per_family.entry(family).or_insert(0);
                        let tag: Arc<str> = format!("{family}!{k}").into();
                        *k += 1;
                        tag
                    })
                    .clone()
            }
        };
        let n = self.hits.entry(tag.clone()).or_insert(0);
        let addr = Addr { tag, occurrence: *n };
        *n += 1;
        addr
    }
}

/// Rewrites every distribution request into `Observe` (when it carries an
/// observed value) or `Sample`, injected into `rest`.
pub fn handle_dist<A: 'static>(rest: &Signature, prog: Prog<A>) -> Prog<A> {
    go_dist(rest.clone(), Addresser::default(), prog)
}

fn go_dist<A: 'static>(rest: Signature, mut addrs: Addresser, prog: Prog<A>) -> Prog<A> {
    match prog {
        Prog::Val(a) => Prog::Val(a),
        Prog::Fail(e) => Prog::Fail(e),
        Prog::Op(req, k) => match discharge(req) {
            Either::Right(Operation::Dist(c)) => {
                let addr = addrs.assign(&c);
                let op = match get_obs(&c.dist) {
                    Some(value) => Operation::Observe(ObserveOp {
                        dist: c.dist,
                        value,
                        addr,
                    }),
                    None => Operation::Sample(SampleOp { dist: c.dist, addr }),
                };
                match inject(op, &rest) {
                    Ok(req) => Prog::Op(req, Box::new(move |r| go_dist(rest, addrs, k(r)))),
                    Err(e) => Prog::Fail(e),
                }
            }
            Either::Right(op) => mismatched("Dist", &op),
            Either::Left(req) => forward(req, k, move |p| go_dist(rest, addrs, p)),
        },
    }
}

/// `handle_dist . handle_read env . run` against `ObsReader : Dist : rest`.
pub fn handle_core<A: Send + 'static>(
    env: Env,
    model: Model<A>,
    rest: &Signature,
) -> Prog<(A, Env)> {
    let sig = match Signature::new([EffectId::ObsReader, EffectId::Dist]).and_then(|s| s.concat(rest))
    {
        Ok(s) => s,
        Err(e) => return Prog::Fail(e),
    };
    handle_dist(rest, handle_read(env, model.run(&sig)))
}

/// The signature [`handle_core`] leaves for plain execution.
pub fn observe_sample() -> Signature {
    Signature::new([EffectId::Observe, EffectId::Sample]).expect("distinct effects")
}

/// A shareable model-valued step, the unit of Kleisli chaining.
pub type Step<A, B> = Arc<dyn Fn(A) -> Model<B> + Send + Sync>;

/// `f >=> g`
pub fn kleisli<A, B, C>(f: Step<A, B>, g: Step<B, C>) -> Step<A, C>
where
    A: Send + 'static,
    B: Send + 'static,
    C: Send + 'static,
{
    Arc::new(move |a| {
        let g = g.clone();
        f(a).bind(move |b| g(b))
    })
}

/// Left fold of `>=>` over `steps`, starting from `pure`. Built right-nested,
/// which is the same function by associativity and keeps each step's
/// continuation shallow.
pub fn fold_kleisli<A: Send + 'static>(steps: Vec<Step<A, A>>) -> Step<A, A> {
    let steps: Arc<[Step<A, A>]> = steps.into();
    Arc::new(move |a| chain(steps.clone(), 0, a))
}

fn chain<A: Send + 'static>(steps: Arc<[Step<A, A>]>, i: usize, a: A) -> Model<A> {
    match steps.get(i) {
        None => Model::pure(a),
        Some(f) => f(a).bind(move |b| chain(steps, i + 1, b)),
    }
}

/// `n` copies of `f` chained with `>=>`.
pub fn replicate_kleisli<A: Send + 'static>(n: usize, f: Step<A, A>) -> Step<A, A> {
    fold_kleisli(vec![f; n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Observe,
    Sample,
}

/// One node of a specialised program, as seen by [`describe`].
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub addr: Addr,
    pub kind: NodeKind,
    pub dist: Dist,
    pub value: PrimVal,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obs = self
            .dist
            .obs()
            .map_or_else(|| "None".to_string(), |v| format!("Some({v})"));
        match self.kind {
            NodeKind::Observe => write!(
                f,
                "{} observe {} obs={} value={}",
                self.addr, self.dist, obs, self.value
            ),
            NodeKind::Sample => write!(
                f,
                "{} sample {} obs={} value={}",
                self.addr, self.dist, obs, self.value
            ),
        }
    }
}

/// Walks a specialised program, feeding each `Observe` its observed value
/// and each `Sample` whatever `supply` returns, and lists the nodes visited.
pub fn describe<A: 'static>(
    prog: Prog<A>,
    mut supply: impl FnMut(&SampleOp) -> PrimVal,
) -> Result<(Vec<Node>, A)> {
    let mut nodes = Vec::new();
    let mut prog = prog;
    loop {
        match prog {
            Prog::Val(a) => return Ok((nodes, a)),
            Prog::Fail(e) => return Err(e),
            Prog::Op(req, k) => match req.into_operation() {
                Operation::Observe(o) => {
                    nodes.push(Node {
                        addr: o.addr,
                        kind: NodeKind::Observe,
                        dist: o.dist,
                        value: o.value.clone(),
                    });
                    prog = k(Reply::Value(o.value));
                }
                Operation::Sample(s) => {
                    let v = supply(&s);
                    nodes.push(Node {
                        addr: s.addr,
                        kind: NodeKind::Sample,
                        dist: s.dist,
                        value: v.clone(),
                    });
                    prog = k(Reply::Value(v));
                }
                op => {
                    return Err(Error::Unhandled(format!(
                        "describe expects only Observe and Sample, found {op:?}"
                    )))
                }
            },
        }
    }
}
