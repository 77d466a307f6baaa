use effprob::{Env, Kind, PrimVal};
use proptest::prelude::*;

const NAMES: [&str; 5] = ["a", "b", "c", "d", "e"];

fn value(kind: Kind) -> BoxedStrategy<PrimVal> {
    match kind {
        Kind::Real => (-1e6f64..1e6).prop_map(PrimVal::Real).boxed(),
        Kind::Int => any::<i64>().prop_map(PrimVal::Int).boxed(),
        Kind::Bool => any::<bool>().prop_map(PrimVal::Bool).boxed(),
        Kind::Vec => prop::collection::vec(0.0f64..1.0, 0..4)
            .prop_map(PrimVal::Vec)
            .boxed(),
    }
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![Just(Kind::Real), Just(Kind::Int), Just(Kind::Bool), Just(Kind::Vec)]
}

fn values(kind: Kind) -> impl Strategy<Value = Vec<PrimVal>> {
    prop::collection::vec(value(kind), 0..5)
}

/// An environment over a prefix of `NAMES` with random kinds and values.
fn env() -> impl Strategy<Value = Env> {
    prop::collection::vec(kind(), 1..=NAMES.len())
        .prop_flat_map(|kinds| {
            kinds
                .into_iter()
                .map(|k| values(k).prop_map(move |vs| (k, vs)))
                .collect::<Vec<_>>()
        })
        .prop_map(|entries| {
            entries
                .into_iter()
                .zip(NAMES)
                .fold(Env::builder(), |b, ((k, vs), name)| b.entry(name, k, vs))
                .build()
                .unwrap()
        })
}

/// An environment, one of its names, and fresh values of that name's kind.
fn env_and_update() -> impl Strategy<Value = (Env, String, Vec<PrimVal>)> {
    env().prop_flat_map(|e| {
        let n = e.len();
        (Just(e), 0..n).prop_flat_map(|(e, i)| {
            let name = NAMES[i].to_string();
            let k = e.kind_of(&name).unwrap();
            (Just(e), Just(name), values(k))
        })
    })
}

proptest! {
    #[test]
    fn get_after_set((e, x, vs) in env_and_update()) {
        let e2 = e.set(&x, vs.clone()).unwrap();
        prop_assert_eq!(e2.get(&x).unwrap(), vs.as_slice());
    }

    #[test]
    fn set_what_was_got((e, x, _vs) in env_and_update()) {
        let current = e.get(&x).unwrap().to_vec();
        prop_assert_eq!(e.set(&x, current).unwrap(), e);
    }

    #[test]
    fn set_leaves_other_names_alone((e, x, vs) in env_and_update()) {
        let e2 = e.set(&x, vs).unwrap();
        for y in e.names().filter(|y| y.as_str() != x) {
            prop_assert_eq!(e2.get(y.as_str()).unwrap(), e.get(y.as_str()).unwrap());
        }
    }

    #[test]
    fn set_keeps_order_length_and_kinds((e, x, vs) in env_and_update()) {
        let e2 = e.set(&x, vs).unwrap();
        prop_assert_eq!(e2.len(), e.len());
        let before: Vec<_> = e.entries().iter().map(|en| (en.name().clone(), en.kind())).collect();
        let after: Vec<_> = e2.entries().iter().map(|en| (en.name().clone(), en.kind())).collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn set_twice_keeps_the_last((e, x, vs) in env_and_update()) {
        let first = e.set(&x, Vec::new()).unwrap().set(&x, vs.clone()).unwrap();
        prop_assert_eq!(first, e.set(&x, vs).unwrap());
    }

    #[test]
    fn set_rejects_wrong_kinds((e, x, _vs) in env_and_update()) {
        let wrong = match e.kind_of(&x).unwrap() {
            Kind::Bool => PrimVal::Int(1),
            _ => PrimVal::Bool(true),
        };
        prop_assert!(e.set(&x, vec![wrong]).is_err());
    }

    #[test]
    fn json_roundtrip(e in env()) {
        prop_assert_eq!(Env::from_json(&e.to_json()).unwrap(), e);
    }
}

#[test]
fn set_on_unknown_name_fails() {
    let e = Env::builder().real("a", [1.0]).build().unwrap();
    assert!(e.set("z", vec![]).is_err());
    assert!(e.get("z").is_err());
}
