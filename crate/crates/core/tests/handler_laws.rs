use std::collections::BTreeSet;
use std::sync::Arc;

use effprob::inference::{mh, run_lw, run_mh, run_simulate};
use effprob::model::{describe, handle_core, observe_sample, Node, NodeKind, SampleOp};
use effprob::prog::{call, EffectId, Operation, Prog, Reply, Signature};
use effprob::effects::{StateOp, WriterOp};
use effprob::rng::stream;
use effprob::zoo::{coin_flip, hmm_sir, lin_regr_batch, simple_hmm, Popl, Variant};
use effprob::{
    bernoulli_, handle_state, handle_writer, normal, normal_, poisson, uniform_, Env, Model,
    PrimVal, STrace,
};
use proptest::prelude::*;

const OPS: u8 = 6;

fn step(op: u8, x: f64) -> Model<f64> {
    match op {
        0 => normal_(x * 0.5, 1.0),
        1 => bernoulli_(0.3).map(move |b| if b { x + 1.0 } else { x }),
        2 => Model::pure(x * 2.0 - 1.0),
        3 => normal(x, 1.0, "y"),
        4 => poisson(x.abs().min(20.0), "k").map(|k| k as f64),
        _ => uniform_(0.0, 1.0).map(move |u| u + x),
    }
}

fn left_nested(ops: &[u8]) -> Model<f64> {
    ops.iter()
        .fold(Model::pure(0.0), |m, &op| m.bind(move |x| step(op, x)))
}

fn right_from(ops: Arc<[u8]>, i: usize, x: f64) -> Model<f64> {
    match ops.get(i) {
        None => Model::pure(x),
        Some(&op) => step(op, x).bind(move |y| right_from(ops, i + 1, y)),
    }
}

fn right_nested(ops: &[u8]) -> Model<f64> {
    right_from(ops.into(), 0, 0.0)
}

/// The first `k` steps left-nested, then the rest right-nested.
fn split_nested(ops: &[u8], k: usize) -> Model<f64> {
    let k = k.min(ops.len());
    let rest: Arc<[u8]> = ops[k..].into();
    left_nested(&ops[..k]).bind(move |x| right_from(rest, 0, x))
}

fn test_env(ys: Vec<f64>, ks: Vec<i64>) -> Env {
    Env::builder().real("y", ys).int("k", ks).build().unwrap()
}

fn same_sim(a: Model<f64>, b: Model<f64>, env: &Env, seed: u64) -> Result<(), TestCaseError> {
    let ra = run_simulate(env, a, &mut stream(seed, 0)).unwrap();
    let rb = run_simulate(env, b, &mut stream(seed, 0)).unwrap();
    prop_assert_eq!(ra.value.to_bits(), rb.value.to_bits());
    prop_assert_eq!(ra.strace, rb.strace);
    prop_assert_eq!(ra.residual, rb.residual);
    Ok(())
}

fn same_lw(a: Model<f64>, b: Model<f64>, env: &Env, seed: u64) -> Result<(), TestCaseError> {
    let (ra, wa) = run_lw(env, a, &mut stream(seed, 0)).unwrap();
    let (rb, wb) = run_lw(env, b, &mut stream(seed, 0)).unwrap();
    prop_assert_eq!(ra.value.to_bits(), rb.value.to_bits());
    prop_assert_eq!(ra.strace, rb.strace);
    prop_assert_eq!(wa.to_bits(), wb.to_bits());
    Ok(())
}

fn arb_program() -> impl Strategy<Value = (Vec<u8>, Vec<f64>, Vec<i64>, u64)> {
    (
        prop::collection::vec(0..OPS, 0..12),
        prop::collection::vec(-5.0f64..5.0, 0..4),
        prop::collection::vec(0i64..10, 0..3),
        any::<u64>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn bind_is_associative_under_simulation((ops, ys, ks, seed) in arb_program(), k in 0usize..12) {
        let env = test_env(ys, ks);
        same_sim(left_nested(&ops), right_nested(&ops), &env, seed)?;
        same_sim(left_nested(&ops), split_nested(&ops, k), &env, seed)?;
    }

    #[test]
    fn bind_is_associative_under_lw((ops, ys, ks, seed) in arb_program(), k in 0usize..12) {
        let env = test_env(ys, ks);
        same_lw(left_nested(&ops), right_nested(&ops), &env, seed)?;
        same_lw(split_nested(&ops, k), right_nested(&ops), &env, seed)?;
    }

    #[test]
    fn bind_is_associative_under_mh((ops, ys, ks, seed) in arb_program()) {
        let env = test_env(ys, ks);
        let ops: Arc<[u8]> = ops.into();
        let o2 = ops.clone();
        let a = mh(20, move |()| left_nested(&ops), (), &env, seed);
        let b = mh(20, move |()| right_nested(&o2), (), &env, seed);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.env, b.env);
                prop_assert_eq!(a.accepted, b.accepted);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn identity_laws_under_handlers((ops, ys, ks, seed) in arb_program(), op in 0..OPS, x in -3.0f64..3.0) {
        let env = test_env(ys, ks);
        // left identity
        same_sim(Model::pure(x).bind(move |x| step(op, x)), step(op, x), &env, seed)?;
        same_lw(Model::pure(x).bind(move |x| step(op, x)), step(op, x), &env, seed)?;
        // right identity
        same_sim(left_nested(&ops).bind(Model::pure), left_nested(&ops), &env, seed)?;
        same_lw(left_nested(&ops).bind(Model::pure), left_nested(&ops), &env, seed)?;
    }

    #[test]
    fn mh_stack_agrees_on_associativity((ops, ys, ks, seed) in arb_program()) {
        let env = test_env(ys, ks);
        let a = run_mh(&env, &STrace::new(), None, left_nested(&ops), &mut stream(seed, 0)).unwrap();
        let b = run_mh(&env, &STrace::new(), None, right_nested(&ops), &mut stream(seed, 0)).unwrap();
        prop_assert_eq!(a.run.strace, b.run.strace);
        prop_assert_eq!(a.lptrace, b.lptrace);
    }
}

/// A deterministic supply: each address gets its own stream.
fn addr_seed(tag: &str, seed: u64) -> u64 {
    tag.bytes().fold(seed, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)))
}

fn by_address(seed: u64) -> impl FnMut(&SampleOp) -> PrimVal {
    move |s| {
        let mut rng = stream(addr_seed(s.addr.tag(), seed), s.addr.occurrence() as u64);
        s.dist.family().sample(&mut rng)
    }
}

type Case = (&'static str, fn() -> Model<()>, &'static [&'static str]);

fn cases() -> Vec<Case> {
    vec![
        (
            "linregr",
            || lin_regr_batch(vec![0.0, 1.0, 2.0, 3.0]).map(|_| ()),
            &["mu", "c", "sigma", "y"],
        ),
        ("coinflip", || coin_flip().map(|_| ()), &["p", "y"]),
        ("hmm", || simple_hmm(5, 0).map(|_| ()), &["trans_p", "obs_p", "y"]),
        (
            "sirs",
            || hmm_sir(Variant::Sirs, 6, Popl::new(60, 3, 0)).map(|_| ()),
            &["beta", "gamma", "eta", "rho", "xi"],
        ),
    ]
}

/// Every variable of the case, with the values one simulation produced.
fn full_env(case: &Case, seed: u64) -> Env {
    let empty = cases_env(case, &[]);
    let out = effprob::simulate(|()| (case.1)(), &empty, (), &mut stream(seed, 0)).unwrap();
    out.env
}

fn cases_env(case: &Case, observed: &[(&str, Vec<PrimVal>)]) -> Env {
    let kinds = [
        ("mu", effprob::Kind::Real),
        ("c", effprob::Kind::Real),
        ("sigma", effprob::Kind::Real),
        ("p", effprob::Kind::Real),
        ("trans_p", effprob::Kind::Real),
        ("obs_p", effprob::Kind::Real),
        ("beta", effprob::Kind::Real),
        ("gamma", effprob::Kind::Real),
        ("eta", effprob::Kind::Real),
        ("rho", effprob::Kind::Real),
        ("xi", effprob::Kind::Int),
    ];
    let y_kind = match case.0 {
        "linregr" => effprob::Kind::Real,
        "coinflip" => effprob::Kind::Bool,
        _ => effprob::Kind::Int,
    };
    case.2
        .iter()
        .fold(Env::builder(), |b, &name| {
            let kind = kinds
                .iter()
                .find(|(n, _)| *n == name)
                .map_or(y_kind, |(_, k)| *k);
            let vs = observed
                .iter()
                .find(|(n, _)| *n == name)
                .map_or_else(Vec::new, |(_, vs)| vs.clone());
            b.entry(name, kind, vs)
        })
        .build()
        .unwrap()
}

fn nodes(case: &Case, env: &Env, seed: u64) -> (Vec<Node>, Env) {
    let (nodes, ((), residual)) =
        describe(handle_core(env.clone(), (case.1)(), &observe_sample()), by_address(seed)).unwrap();
    (nodes, residual)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn addresses_are_unique_and_deterministic(which in 0usize..4, mask in any::<u8>(), seed in any::<u64>()) {
        let case = &cases()[which];
        let full = full_env(case, seed);
        let observed: Vec<_> = case.2.iter().enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &n)| (n, full.get(n).unwrap().to_vec()))
            .collect();
        let env = cases_env(case, &observed);
        let (a, _) = nodes(case, &env, seed);
        let (b, _) = nodes(case, &env, seed);
        let addrs: Vec<_> = a.iter().map(|n| n.addr.clone()).collect();
        prop_assert_eq!(&addrs, &b.iter().map(|n| n.addr.clone()).collect::<Vec<_>>());
        let unique: BTreeSet<_> = addrs.iter().collect();
        prop_assert_eq!(unique.len(), addrs.len());
        // occurrences count up from zero per tag
        for addr in &addrs {
            let earlier = addrs.iter().take_while(|a| *a != addr).filter(|a| a.tag() == addr.tag()).count();
            prop_assert_eq!(addr.occurrence(), earlier);
        }
    }

    #[test]
    fn observing_one_variable_changes_only_its_nodes(
        which in 0usize..4, var in 0usize..5, mask in any::<u8>(), seed in any::<u64>(),
    ) {
        let case = &cases()[which];
        let x = case.2[var % case.2.len()];
        let full = full_env(case, seed);
        let others: Vec<_> = case.2.iter().enumerate()
            .filter(|(i, n)| mask & (1 << i) != 0 && **n != x)
            .map(|(_, &n)| (n, full.get(n).unwrap().to_vec()))
            .collect();
        let mut with_x = others.clone();
        with_x.push((x, full.get(x).unwrap().to_vec()));
        let observed_x = full.get(x).unwrap().to_vec();

        let (a, _) = nodes(case, &cases_env(case, &with_x), seed);
        // feed x's sample sites the values the other run observed
        let mut base = by_address(seed);
        let supply = |s: &SampleOp| {
            if s.addr.tag() == x {
                if let Some(v) = observed_x.get(s.addr.occurrence()) {
                    return v.clone();
                }
            }
            base(s)
        };
        let (b, _) = describe(
            handle_core(cases_env(case, &others), (case.1)(), &observe_sample()),
            supply,
        ).unwrap();

        prop_assert_eq!(a.len(), b.len());
        for (na, nb) in a.iter().zip(&b) {
            if na.addr.tag() == x {
                prop_assert_eq!(&na.addr, &nb.addr);
                prop_assert_eq!(na.kind, NodeKind::Observe);
                prop_assert_eq!(nb.kind, NodeKind::Sample);
                prop_assert_eq!(na.dist.family(), nb.dist.family());
                prop_assert!(na.value.bit_eq(&nb.value));
            } else {
                prop_assert_eq!(na, nb);
            }
        }
    }

    #[test]
    fn consumed_plus_residual_is_the_input(
        which in 0usize..4, counts in prop::collection::vec(0usize..12, 5), seed in any::<u64>(),
    ) {
        let case = &cases()[which];
        let full = full_env(case, seed);
        // pad with the last value so some entries carry surplus
        let observed: Vec<_> = case.2.iter().zip(&counts)
            .map(|(&n, &c)| {
                let vs = full.get(n).unwrap();
                let padded: Vec<_> = (0..c).filter_map(|i| vs.get(i).or(vs.last()).cloned()).collect();
                (n, padded)
            })
            .collect();
        let env = cases_env(case, &observed);
        let (ns, residual) = nodes(case, &env, seed);
        for e in env.entries() {
            let name = e.name().as_str();
            let consumed = ns.iter().filter(|n| n.addr.tag() == name && n.kind == NodeKind::Observe).count();
            prop_assert_eq!(consumed + residual.get(name).unwrap().len(), e.values().len(), "{}", name);
        }
    }
}

fn state_sig() -> Signature {
    Signature::new([
        EffectId::state::<i64>(),
        EffectId::ObsReader,
        EffectId::writer::<Vec<u8>>(),
    ])
    .unwrap()
}

/// 0: modify (+k), 1: ask, 2: tell.
fn mixed(sig: Signature, ops: Arc<[(u8, i64)]>, i: usize) -> Prog<usize> {
    let Some(&(op, k)) = ops.get(i) else {
        return Prog::pure(i);
    };
    let request = match op {
        0 => Operation::Modify(StateOp::modify::<i64, _>(move |s| s.wrapping_mul(3).wrapping_add(k))),
        1 => Operation::Ask(effprob::ObsVar::new("v").unwrap()),
        _ => Operation::Tell(WriterOp::tell(vec![k as u8])),
    };
    let s2 = sig.clone();
    call(request, &sig).bind(move |_| mixed(s2, ops, i + 1))
}

/// Answers everything left over, counting each request.
fn drain<A: 'static>(mut p: Prog<A>) -> (A, usize, usize, usize) {
    let (mut asks, mut tells, mut modifies) = (0, 0, 0);
    loop {
        match p {
            Prog::Val(a) => return (a, asks, tells, modifies),
            Prog::Fail(e) => panic!("{e}"),
            Prog::Op(req, k) => match req.operation() {
                Operation::Ask(_) => {
                    asks += 1;
                    p = k(Reply::Maybe(None));
                }
                Operation::Tell(_) => {
                    tells += 1;
                    p = k(Reply::Unit);
                }
                Operation::Modify(_) => {
                    modifies += 1;
                    p = k(Reply::Unit);
                }
                other => panic!("unexpected {other:?}"),
            },
        }
    }
}

proptest! {
    #[test]
    fn state_forwards_foreign_requests_untouched(ops in prop::collection::vec((0u8..3, -5i64..5), 0..20)) {
        let ops: Arc<[(u8, i64)]> = ops.into();
        let (_, asks, tells, modifies) = drain(mixed(state_sig(), ops.clone(), 0));
        prop_assert_eq!(asks + tells + modifies, ops.len());

        let ((n, s), asks2, tells2, modifies2) = drain(handle_state(1i64, mixed(state_sig(), ops.clone(), 0)));
        prop_assert_eq!((asks2, tells2, modifies2), (asks, tells, 0));
        prop_assert_eq!(n, ops.len());
        let expected = ops.iter().filter(|(op, _)| *op == 0)
            .fold(1i64, |s, &(_, k)| s.wrapping_mul(3).wrapping_add(k));
        prop_assert_eq!(s, expected);
    }

    #[test]
    fn state_is_identity_without_its_requests(ops in prop::collection::vec((1u8..3, -5i64..5), 0..20), s0 in any::<i64>()) {
        let ops: Arc<[(u8, i64)]> = ops.into();
        let plain = drain(mixed(state_sig(), ops.clone(), 0));
        let ((n, s), asks, tells, _) = drain(handle_state(s0, mixed(state_sig(), ops.clone(), 0)));
        prop_assert_eq!(s, s0);
        prop_assert_eq!((n, asks, tells), (plain.0, plain.1, plain.2));
    }

    #[test]
    fn writer_output_ignores_association(chunks in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..3), 0..10), k in 0usize..10) {
        let sig = Signature::new([EffectId::writer::<Vec<u8>>()]).unwrap();
        let tell = |sig: &Signature, c: Vec<u8>| call(Operation::Tell(WriterOp::tell(c)), sig).map(|_| ());
        let left = chunks.iter().cloned().fold(Prog::pure(()), |p, c| {
            let s = sig.clone();
            p.bind(move |()| tell(&s, c))
        });
        fn right(sig: Signature, cs: Vec<Vec<u8>>) -> Prog<()> {
            let mut cs = cs.into_iter();
            match cs.next() {
                None => Prog::pure(()),
                Some(c) => {
                    let s = sig.clone();
                    let rest: Vec<_> = cs.collect();
                    call(Operation::Tell(WriterOp::tell(c)), &sig).bind(move |_| right(s, rest))
                }
            }
        }
        let k = k.min(chunks.len());
        let s = sig.clone();
        let tail = chunks[k..].to_vec();
        let mixed = chunks[..k].iter().cloned().fold(Prog::pure(()), |p, c| {
            let s = sig.clone();
            p.bind(move |()| tell(&s, c))
        }).bind(move |()| right(s, tail));
        let flat: Vec<u8> = chunks.concat();
        let run = |p: Prog<()>| match handle_writer::<Vec<u8>, _>(p) {
            Prog::Val(((), w)) => w,
            other => panic!("{other:?}"),
        };
        prop_assert_eq!(run(left), flat.clone());
        prop_assert_eq!(run(right(sig.clone(), chunks.clone())), flat.clone());
        prop_assert_eq!(run(mixed), flat);
    }
}
