//! Generic `State` and `Writer` effects.
//!
//! Both are keyed by the Rust type they carry, so `State<STrace>` and
//! `State<LPTrace>` can sit in one signature as distinct effects.

use std::any::Any;

use either::Either;

use crate::model::Model;
use crate::prog::{
    call, discharge, forward, mismatched, EffectId, Operation, Prog, Reply, Signature, TypeTag,
};

type Update = Box<dyn FnOnce(&mut dyn Any) + Send>;

/// `Modify f`: replace the state `s` with `f(s)`.
pub struct StateOp {
    tag: TypeTag,
    update: Update,
}

impl StateOp {
    pub fn modify<S, F>(f: F) -> Self
    where
        S: Send + 'static,
        F: FnOnce(S) -> S + Send + 'static,
    {
        let update = move |slot: &mut dyn Any| {
            let slot = slot
                .downcast_mut::<Option<S>>()
                .expect("internal: state slot has the wrong type");
            let s = slot.take().expect("internal: state slot is empty");
            *slot = Some(f(s));
        };
        StateOp {
            tag: TypeTag::of::<S>(),
            update: Box::new(update),
        }
    }

    pub fn tag(&self) -> TypeTag {
        self.tag
    }

    fn apply<S: 'static>(self, state: S) -> S {
        let mut slot = Some(state);
        (self.update)(&mut slot);
        slot.expect("internal: state update dropped the state")
    }
}

/// Associative combine with an identity element.
pub trait Monoid: Sized {
    fn empty() -> Self;
    fn combine(self, other: Self) -> Self;
}

impl<T> Monoid for Vec<T> {
    fn empty() -> Self {
        Vec::new()
    }

    fn combine(mut self, mut other: Self) -> Self {
        self.append(&mut other);
        self
    }
}

impl Monoid for String {
    fn empty() -> Self {
        String::new()
    }

    fn combine(mut self, other: Self) -> Self {
        self.push_str(&other);
        self
    }
}

/// `Tell w`: append a chunk to the writer's output.
pub struct WriterOp {
    tag: TypeTag,
    chunk: Box<dyn Any + Send>,
}

impl WriterOp {
    pub fn tell<W: Send + 'static>(chunk: W) -> Self {
        WriterOp {
            tag: TypeTag::of::<W>(),
            chunk: Box::new(chunk),
        }
    }

    pub fn tag(&self) -> TypeTag {
        self.tag
    }

    fn into_chunk<W: 'static>(self) -> W {
        *self
            .chunk
            .downcast::<W>()
            .expect("internal: writer chunk has the wrong type")
    }
}

/// Emits `Modify f` for `State<S>` in `sig`.
pub fn modify<S, F>(sig: &Signature, f: F) -> Prog<()>
where
    S: Send + 'static,
    F: FnOnce(S) -> S + Send + 'static,
{
    call(Operation::Modify(StateOp::modify(f)), sig).map(Reply::into_unit)
}

/// Threads `initial` through every `Modify` of the head `State<S>` effect
/// and pairs the result with the final state.
pub fn handle_state<S, A>(initial: S, prog: Prog<A>) -> Prog<(A, S)>
where
    S: Send + 'static,
    A: 'static,
{
    let mut state = initial;
    let mut prog = prog;
    loop {
        match prog {
            Prog::Val(a) => return Prog::Val((a, state)),
            Prog::Fail(e) => return Prog::Fail(e),
            Prog::Op(req, k) => match discharge(req) {
                Either::Right(Operation::Modify(op)) if op.tag() == TypeTag::of::<S>() => {
                    state = op.apply(state);
                    prog = k(Reply::Unit);
                }
                Either::Right(op) => return mismatched("State", &op),
                Either::Left(req) => {
                    return forward(req, k, move |rest| handle_state(state, rest))
                }
            },
        }
    }
}

/// Collects every `Tell` of the head `Writer<W>` effect, combined in program
/// order starting from the identity.
pub fn handle_writer<W, A>(prog: Prog<A>) -> Prog<(A, W)>
where
    W: Monoid + Send + 'static,
    A: 'static,
{
    go_writer(W::empty(), prog)
}

fn go_writer<W, A>(acc: W, prog: Prog<A>) -> Prog<(A, W)>
where
    W: Monoid + Send + 'static,
    A: 'static,
{
    let mut acc = acc;
    let mut prog = prog;
    loop {
        match prog {
            Prog::Val(a) => return Prog::Val((a, acc)),
            Prog::Fail(e) => return Prog::Fail(e),
            Prog::Op(req, k) => match discharge(req) {
                Either::Right(Operation::Tell(op)) if op.tag() == TypeTag::of::<W>() => {
                    acc = acc.combine(op.into_chunk::<W>());
                    prog = k(Reply::Unit);
                }
                Either::Right(op) => return mismatched("Writer", &op),
                Either::Left(req) => return forward(req, k, move |rest| go_writer(acc, rest)),
            },
        }
    }
}

/// `tell w` inside a model. The ambient signature must contain `Writer<W>`.
pub fn tell<W: Send + 'static>(chunk: W) -> Model<()> {
    Model::new(move |sig| call(Operation::Tell(WriterOp::tell(chunk)), sig).map(Reply::into_unit))
}

impl<A: Send + 'static> Model<A> {
    /// Handles the model's `Writer<W>` effect, returning the told output
    /// alongside the result.
    pub fn handle_writer<W>(self) -> Model<(A, W)>
    where
        W: Monoid + Send + 'static,
    {
        Model::new(move |sig| match sig.cons(EffectId::writer::<W>()) {
            Ok(inner) => handle_writer::<W, A>(self.run(&inner)),
            Err(e) => Prog::Fail(e),
        })
    }
}
