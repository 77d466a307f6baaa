//! Programs as trees of effect requests.
//!
//! A [`Prog`] is either a finished value, a failure, or a pending operation
//! together with the continuation that builds the rest of the tree once the
//! operation's result is known. Handlers walk these trees, interpret the
//! requests belonging to one effect and forward everything else.
//!
//! Effect signatures are ordered lists of [`EffectId`]s. A request records
//! the position of its effect inside the signature it was injected into, so
//! a handler for the head effect only ever has to look at index zero
//! ([`discharge`]), while transformations that leave the signature alone use
//! [`project`].

use std::any::TypeId;
use std::fmt;
use std::sync::Arc;

use either::Either;

use crate::dist::PrimVal;
use crate::effects::{StateOp, WriterOp};
use crate::env::ObsVar;
use crate::error::{Error, Result};
use crate::model::{DistCall, ObserveOp, SampleOp};

/// Runtime identity of a Rust type, used to tell `State<S>` effects apart.
#[derive(Clone, Copy)]
pub struct TypeTag {
    id: TypeId,
    name: &'static str,
}

impl TypeTag {
    pub fn of<T: 'static>() -> Self {
        TypeTag {
            id: TypeId::of::<T>(),
            name: std::any::type_name::<T>(),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }
}

impl PartialEq for TypeTag {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for TypeTag {}

impl fmt::Debug for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(short_type_name(self.name))
    }
}

fn short_type_name(name: &str) -> &str {
    // keep the outermost path segment readable: "alloc::vec::Vec<..>" -> "Vec<..>"
    let head = name.split('<').next().unwrap_or(name);
    match head.rfind("::") {
        Some(i) => &name[i + 2..],
        None => name,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EffectId {
    ObsReader,
    Dist,
    Sample,
    Observe,
    State(TypeTag),
    Writer(TypeTag),
}

impl EffectId {
    pub fn state<S: 'static>() -> Self {
        EffectId::State(TypeTag::of::<S>())
    }

    pub fn writer<W: 'static>() -> Self {
        EffectId::Writer(TypeTag::of::<W>())
    }
}

impl fmt::Display for EffectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectId::ObsReader => f.write_str("ObsReader"),
            EffectId::Dist => f.write_str("Dist"),
            EffectId::Sample => f.write_str("Sample"),
            EffectId::Observe => f.write_str("Observe"),
            EffectId::State(t) => write!(f, "State<{t:?}>"),
            EffectId::Writer(t) => write!(f, "Writer<{t:?}>"),
        }
    }
}

/// An ordered effect signature without duplicates.
#[derive(Clone, PartialEq, Eq)]
pub struct Signature(Arc<[EffectId]>);

impl Signature {
    pub fn new(effects: impl IntoIterator<Item = EffectId>) -> Result<Self> {
        let effects: Vec<EffectId> = effects.into_iter().collect();
        for (i, e) in effects.iter().enumerate() {
            if effects[..i].contains(e) {
                return Err(Error::DuplicateEffect(e.to_string()));
            }
        }
        Ok(Signature(effects.into()))
    }

    pub fn empty() -> Self {
        Signature(Arc::from(Vec::new()))
    }

    /// `head : self`
    pub fn cons(&self, head: EffectId) -> Result<Self> {
        Signature::new(std::iter::once(head).chain(self.0.iter().copied()))
    }

    /// `self ++ rest`
    pub fn concat(&self, rest: &Signature) -> Result<Self> {
        Signature::new(self.0.iter().chain(rest.0.iter()).copied())
    }

    pub fn head(&self) -> Option<EffectId> {
        self.0.first().copied()
    }

    pub fn tail(&self) -> Signature {
        Signature(self.0.get(1..).unwrap_or(&[]).into())
    }

    pub fn position(&self, effect: &EffectId) -> Option<usize> {
        self.0.iter().position(|e| e == effect)
    }

    pub fn contains(&self, effect: &EffectId) -> bool {
        self.position(effect).is_some()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn effects(&self) -> &[EffectId] {
        &self.0
    }

    pub fn require(&self, effect: &EffectId) -> Result<usize> {
        self.position(effect).ok_or_else(|| Error::NotAMember {
            effect: effect.to_string(),
            signature: self.to_string(),
        })
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The payload of a request: one operation of one effect.
pub enum Operation {
    /// `Ask x` yields `Reply::Maybe`.
    Ask(ObsVar),
    /// A primitive distribution yields `Reply::Value`.
    Dist(DistCall),
    Sample(SampleOp),
    Observe(ObserveOp),
    /// `Modify f` yields `Reply::Unit`.
    Modify(StateOp),
    /// `Tell w` yields `Reply::Unit`.
    Tell(WriterOp),
}

impl Operation {
    pub fn effect(&self) -> EffectId {
        match self {
            Operation::Ask(_) => EffectId::ObsReader,
            Operation::Dist(_) => EffectId::Dist,
            Operation::Sample(_) => EffectId::Sample,
            Operation::Observe(_) => EffectId::Observe,
            Operation::Modify(op) => EffectId::State(op.tag()),
            Operation::Tell(op) => EffectId::Writer(op.tag()),
        }
    }
}

impl fmt::Debug for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Ask(x) => write!(f, "Ask({x})"),
            Operation::Dist(c) => write!(f, "{}", c.dist),
            Operation::Sample(s) => write!(f, "Sample({}, {})", s.dist, s.addr),
            Operation::Observe(o) => {
                write!(f, "Observe({}, {}, {})", o.dist, o.value, o.addr)
            }
            Operation::Modify(op) => write!(f, "Modify<{:?}>", op.tag()),
            Operation::Tell(op) => write!(f, "Tell<{:?}>", op.tag()),
        }
    }
}

/// The value a handler feeds back into a continuation.
///
/// Values cross node boundaries untyped; the code that emitted a request
/// knows which variant to expect and treats any other as a handler bug.
#[derive(Clone, Debug, PartialEq)]
pub enum Reply {
    Unit,
    Value(PrimVal),
    Maybe(Option<PrimVal>),
}

impl Reply {
    pub fn into_value(self) -> PrimVal {
        match self {
            Reply::Value(v) => v,
            other => panic!("internal: expected a primitive value reply, got {other:?}"),
        }
    }

    pub fn into_maybe(self) -> Option<PrimVal> {
        match self {
            Reply::Maybe(v) => v,
            other => panic!("internal: expected an optional value reply, got {other:?}"),
        }
    }

    pub fn into_unit(self) {
        match self {
            Reply::Unit => {}
            other => panic!("internal: expected a unit reply, got {other:?}"),
        }
    }
}

/// An operation tagged with the position of its effect in a signature.
#[derive(Debug)]
pub struct EffectRequest {
    index: usize,
    op: Operation,
}

impl EffectRequest {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn operation(&self) -> &Operation {
        &self.op
    }

    pub fn into_operation(self) -> Operation {
        self.op
    }
}

/// Injects `op` into `sig`. Fails if the operation's effect is not a member.
pub fn inject(op: Operation, sig: &Signature) -> Result<EffectRequest> {
    let index = sig.require(&op.effect())?;
    Ok(EffectRequest { index, op })
}

/// Returns the operation if the request belongs to `target`.
pub fn project<'a>(req: &'a EffectRequest, target: &EffectId) -> Option<&'a Operation> {
    (req.op.effect() == *target).then_some(&req.op)
}

/// Splits a request over `E : rest` into the head effect's operation
/// (`Right`) or the same request reindexed into `rest` (`Left`).
pub fn discharge(req: EffectRequest) -> Either<EffectRequest, Operation> {
    if req.index == 0 {
        Either::Right(req.op)
    } else {
        Either::Left(EffectRequest {
            index: req.index - 1,
            op: req.op,
        })
    }
}

pub type Cont<A> = Box<dyn FnOnce(Reply) -> Prog<A> + Send>;

pub enum Prog<A> {
    Val(A),
    Op(EffectRequest, Cont<A>),
    /// Aborted run. Every handler passes this through unchanged.
    Fail(Error),
}

impl<A> fmt::Debug for Prog<A>
where
    A: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prog::Val(a) => f.debug_tuple("Val").field(a).finish(),
            Prog::Op(req, _) => f.debug_tuple("Op").field(req).finish_non_exhaustive(),
            Prog::Fail(e) => f.debug_tuple("Fail").field(e).finish(),
        }
    }
}

/// A one-node program: `Op (inj op) Val`.
pub fn call(op: Operation, sig: &Signature) -> Prog<Reply> {
    match inject(op, sig) {
        Ok(req) => Prog::Op(req, Box::new(Prog::Val)),
        Err(e) => Prog::Fail(e),
    }
}

impl<A: 'static> Prog<A> {
    pub fn pure(a: A) -> Self {
        Prog::Val(a)
    }

    pub fn bind<B: 'static>(self, f: impl FnOnce(A) -> Prog<B> + Send + 'static) -> Prog<B> {
        match self {
            Prog::Val(a) => f(a),
            Prog::Op(req, k) => Prog::Op(req, Box::new(move |x| k(x).bind(f))),
            Prog::Fail(e) => Prog::Fail(e),
        }
    }

    pub fn map<B: 'static>(self, f: impl FnOnce(A) -> B + Send + 'static) -> Prog<B> {
        self.bind(move |a| Prog::Val(f(a)))
    }

    pub fn is_val(&self) -> bool {
        matches!(self, Prog::Val(_))
    }
}

/// Re-emits a request the current handler does not own; the rest of the
/// tree is handled by `go` once the outer handler resumes it.
pub(crate) fn forward<A, B>(
    req: EffectRequest,
    k: Cont<A>,
    go: impl FnOnce(Prog<A>) -> Prog<B> + Send + 'static,
) -> Prog<B>
where
    A: 'static,
    B: 'static,
{
    Prog::Op(req, Box::new(move |x| go(k(x))))
}

/// Internal error for a request whose payload does not match the effect its
/// index names.
pub(crate) fn mismatched<B>(expected: &str, op: &Operation) -> Prog<B> {
    Prog::Fail(Error::Unhandled(format!(
        "expected a {expected} operation at the head of the signature, found {op:?}"
    )))
}
