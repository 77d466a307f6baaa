//! Model environments: ordered, kind-checked lists of observed values per
//! observable variable.
//!
//! An environment is both the input that decides which distributions are
//! observed and the output format that sampled values are reified into.

use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{Kind, PrimVal};
use crate::error::{Error, Result};

/// The name of an observable variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObsVar(Arc<str>);

impl ObsVar {
    pub fn new(name: &str) -> Result<Self> {
        if name.is_empty() {
            return Err(Error::EmptyVariableName);
        }
        Ok(ObsVar(name.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn shared(&self) -> Arc<str> {
        self.0.clone()
    }
}

impl fmt::Display for ObsVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ObsVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl AsRef<str> for ObsVar {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for ObsVar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ObsVar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        ObsVar::new(&name).map_err(D::Error::custom)
    }
}

/// Anything that names an observable variable.
pub trait IntoObsVar {
    fn into_obs_var(self) -> Result<ObsVar>;
}

impl IntoObsVar for ObsVar {
    fn into_obs_var(self) -> Result<ObsVar> {
        Ok(self)
    }
}

impl IntoObsVar for &ObsVar {
    fn into_obs_var(self) -> Result<ObsVar> {
        Ok(self.clone())
    }
}

impl IntoObsVar for &str {
    fn into_obs_var(self) -> Result<ObsVar> {
        ObsVar::new(self)
    }
}

impl IntoObsVar for String {
    fn into_obs_var(self) -> Result<ObsVar> {
        ObsVar::new(&self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    name: ObsVar,
    kind: Kind,
    values: Vec<PrimVal>,
}

impl Entry {
    pub fn new(name: ObsVar, kind: Kind, values: Vec<PrimVal>) -> Result<Self> {
        check_kinds(&name, kind, &values)?;
        Ok(Entry { name, kind, values })
    }

    pub fn name(&self) -> &ObsVar {
        &self.name
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn values(&self) -> &[PrimVal] {
        &self.values
    }
}

fn check_kinds(name: &ObsVar, kind: Kind, values: &[PrimVal]) -> Result<()> {
    match values.iter().find(|v| v.kind() != kind) {
        Some(v) => Err(Error::KindMismatch {
            name: name.to_string(),
            expected: kind,
            found: v.kind(),
        }),
        None => Ok(()),
    }
}

#[derive(Deserialize)]
struct RawEntry {
    name: ObsVar,
    kind: Kind,
    values: Vec<serde_json::Value>,
}

fn decode_value(kind: Kind, v: &serde_json::Value) -> Option<PrimVal> {
    use serde_json::Value as J;
    match (kind, v) {
        (Kind::Real, J::Number(n)) => n.as_f64().map(PrimVal::Real),
        (Kind::Int, J::Number(n)) => n.as_i64().map(PrimVal::Int),
        (Kind::Bool, J::Bool(b)) => Some(PrimVal::Bool(*b)),
        (Kind::Vec, J::Array(xs)) => xs
            .iter()
            .map(J::as_f64)
            .collect::<Option<Vec<f64>>>()
            .map(PrimVal::Vec),
        _ => None,
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawEntry::deserialize(d)?;
        let values = raw
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                decode_value(raw.kind, v).ok_or_else(|| {
                    D::Error::custom(format!(
                        "variable `{}`: value {i} ({v}) is not a {} value",
                        raw.name, raw.kind
                    ))
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Entry {
            name: raw.name,
            kind: raw.kind,
            values,
        })
    }
}

/// An ordered record of observable variables with unique names.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Env {
    entries: Vec<Entry>,
}

impl Env {
    pub fn nil() -> Self {
        Env::default()
    }

    pub fn builder() -> EnvBuilder {
        EnvBuilder::default()
    }

    /// Prepends an entry.
    pub fn cons(
        self,
        name: impl IntoObsVar,
        kind: Kind,
        values: Vec<PrimVal>,
    ) -> Result<Self> {
        let entry = Entry::new(name.into_obs_var()?, kind, values)?;
        if self.position(entry.name.as_str()).is_some() {
            return Err(Error::DuplicateVariable(entry.name.to_string()));
        }
        let mut entries = Vec::with_capacity(self.entries.len() + 1);
        entries.push(entry);
        entries.extend(self.entries);
        Ok(Env { entries })
    }

    pub fn from_entries(entries: Vec<Entry>) -> Result<Self> {
        entries
            .into_iter()
            .rev()
            .try_fold(Env::nil(), |env, e| env.cons(e.name, e.kind, e.values))
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name.as_str() == name)
    }

    fn entry(&self, name: &str) -> Result<&Entry> {
        self.position(name)
            .map(|i| &self.entries[i])
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&[PrimVal]> {
        self.entry(name).map(|e| e.values.as_slice())
    }

    pub fn kind_of(&self, name: &str) -> Result<Kind> {
        self.entry(name).map(|e| e.kind)
    }

    /// `get` projected to reals; fails on any other kind.
    pub fn get_reals(&self, name: &str) -> Result<Vec<f64>> {
        self.typed(name, Kind::Real, PrimVal::as_real)
    }

    pub fn get_ints(&self, name: &str) -> Result<Vec<i64>> {
        self.typed(name, Kind::Int, PrimVal::as_int)
    }

    fn typed<T>(&self, name: &str, kind: Kind, f: impl Fn(&PrimVal) -> Option<T>) -> Result<Vec<T>> {
        let e = self.entry(name)?;
        if e.kind != kind {
            return Err(Error::KindMismatch {
                name: name.to_string(),
                expected: kind,
                found: e.kind,
            });
        }
        Ok(e.values.iter().filter_map(f).collect())
    }

    /// Replaces the values of an existing entry, keeping its position.
    pub fn set(&self, name: &str, values: Vec<PrimVal>) -> Result<Self> {
        let i = self
            .position(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        check_kinds(&self.entries[i].name, self.entries[i].kind, &values)?;
        let mut out = self.clone();
        out.entries[i].values = values;
        Ok(out)
    }

    pub(crate) fn push_value(&mut self, name: &str, v: PrimVal) -> Result<()> {
        let i = self
            .position(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        let e = &mut self.entries[i];
        if v.kind() != e.kind {
            return Err(Error::KindMismatch {
                name: name.to_string(),
                expected: e.kind,
                found: v.kind(),
            });
        }
        e.values.push(v);
        Ok(())
    }

    /// Same names and kinds, no values.
    pub fn emptied(&self) -> Self {
        Env {
            entries: self
                .entries
                .iter()
                .map(|e| Entry {
                    name: e.name.clone(),
                    kind: e.kind,
                    values: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &ObsVar> {
        self.entries.iter().map(|e| &e.name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("environments always serialize")
    }
}

impl Serialize for Env {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Env {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Env::from_entries(entries).map_err(D::Error::custom)
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" <: ")?;
            }
            write!(f, "(#{} := [", e.name)?;
            for (j, v) in e.values.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("])")?;
        }
        if self.entries.is_empty() {
            f.write_str("nil")?;
        }
        Ok(())
    }
}

/// Builds an [`Env`] in reading order, reporting the first error at
/// [`build`](EnvBuilder::build).
#[derive(Default)]
pub struct EnvBuilder {
    entries: Vec<(String, Kind, Vec<PrimVal>)>,
}

impl EnvBuilder {
    pub fn entry(mut self, name: &str, kind: Kind, values: Vec<PrimVal>) -> Self {
        self.entries.push((name.to_string(), kind, values));
        self
    }

    pub fn real(self, name: &str, values: impl IntoIterator<Item = f64>) -> Self {
        let vs = values.into_iter().map(PrimVal::Real).collect();
        self.entry(name, Kind::Real, vs)
    }

    pub fn int(self, name: &str, values: impl IntoIterator<Item = i64>) -> Self {
        let vs = values.into_iter().map(PrimVal::Int).collect();
        self.entry(name, Kind::Int, vs)
    }

    pub fn boolean(self, name: &str, values: impl IntoIterator<Item = bool>) -> Self {
        let vs = values.into_iter().map(PrimVal::Bool).collect();
        self.entry(name, Kind::Bool, vs)
    }

    pub fn vector(self, name: &str, values: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let vs = values.into_iter().map(PrimVal::Vec).collect();
        self.entry(name, Kind::Vec, vs)
    }

    pub fn build(self) -> Result<Env> {
        self.entries
            .into_iter()
            .rev()
            .try_fold(Env::nil(), |env, (name, kind, values)| {
                env.cons(name.as_str(), kind, values)
            })
    }
}

/// Per-run report on how the environment was used.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnvReport {
    /// Variables with values left over after the run, and how many.
    pub unconsumed: Vec<(String, usize)>,
    /// Variables whose values ran out while the model still hit them, so the
    /// remaining hits were sampled.
    pub exhausted: Vec<String>,
}

impl EnvReport {
    /// Compares the input environment with what was left of it, given which
    /// variables ended up being sampled.
    pub fn new(input: &Env, residual: &Env, sampled: impl Fn(&str) -> bool) -> Self {
        let mut report = EnvReport::default();
        for e in &input.entries {
            let name = e.name.as_str();
            let left = residual.get(name).map_or(0, <[PrimVal]>::len);
            if left > 0 {
                report.unconsumed.push((name.to_string(), left));
            } else if !e.values.is_empty() && sampled(name) {
                report.exhausted.push(name.to_string());
            }
        }
        report
    }

    pub fn is_clean(&self) -> bool {
        self.unconsumed.is_empty() && self.exhausted.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_env() -> Env {
        Env::builder().real("p", [0.5]).boolean("y", []).build().unwrap()
    }

    #[test]
    fn cons_then_get() {
        let env = Env::nil()
            .cons("p", Kind::Real, vec![PrimVal::Real(0.5)])
            .unwrap();
        assert_eq!(env.get("p").unwrap(), &[PrimVal::Real(0.5)]);
        assert!(Env::nil().get("p").is_err());
        assert!(Env::nil().is_empty());
    }

    #[test]
    fn duplicate_and_mixed_kinds_rejected() {
        let err = coin_env().cons("p", Kind::Real, vec![]).unwrap_err();
        assert_eq!(err, Error::DuplicateVariable("p".into()));
        let err = Env::nil()
            .cons("q", Kind::Real, vec![PrimVal::Real(1.0), PrimVal::Int(1)])
            .unwrap_err();
        assert!(matches!(err, Error::KindMismatch { ref name, .. } if name == "q"));
        assert_eq!(ObsVar::new(""), Err(Error::EmptyVariableName));
    }

    #[test]
    fn set_keeps_order_and_length() {
        let env = coin_env();
        let env2 = env.set("p", vec![]).unwrap();
        assert_eq!(env2.len(), env.len());
        assert_eq!(env2.get("p").unwrap(), &[]);
        assert_eq!(
            env2.names().map(ObsVar::as_str).collect::<Vec<_>>(),
            ["p", "y"]
        );
        assert!(env.set("missing", vec![]).is_err());
        assert!(env.set("y", vec![PrimVal::Real(1.0)]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let env = Env::builder()
            .real("mu", [3.0])
            .int("xi", [1, 2])
            .boolean("b", [true])
            .vector("theta", [vec![0.25, 0.75]])
            .build()
            .unwrap();
        let json = env.to_json();
        assert_eq!(
            json,
            r#"[{"name":"mu","kind":"real","values":[3.0]},{"name":"xi","kind":"int","values":[1,2]},{"name":"b","kind":"bool","values":[true]},{"name":"theta","kind":"vec","values":[[0.25,0.75]]}]"#
        );
        assert_eq!(Env::from_json(&json).unwrap(), env);
    }

    #[test]
    fn json_errors_name_the_variable() {
        let err = Env::from_json(r#"[{"name":"xi","kind":"int","values":[1.5]}]"#).unwrap_err();
        assert!(err.to_string().contains("xi"), "{err}");
        let err = Env::from_json(
            r#"[{"name":"a","kind":"real","values":[]},{"name":"a","kind":"real","values":[]}]"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("`a`"), "{err}");
        assert!(Env::from_json(r#"[{"name":"a","kind":"complex","values":[]}]"#).is_err());
    }

    #[test]
    fn integers_are_accepted_as_reals() {
        let env = Env::from_json(r#"[{"name":"mu","kind":"real","values":[3]}]"#).unwrap();
        assert_eq!(env.get("mu").unwrap(), &[PrimVal::Real(3.0)]);
    }

    #[test]
    fn report_lists_surplus_and_exhaustion() {
        let input = Env::builder()
            .real("a", [1.0, 2.0])
            .real("b", [1.0])
            .real("c", [])
            .build()
            .unwrap();
        let residual = input
            .set("a", vec![PrimVal::Real(2.0)])
            .unwrap()
            .set("b", vec![])
            .unwrap();
        let report = EnvReport::new(&input, &residual, |n| n == "b" || n == "c");
        assert_eq!(report.unconsumed, vec![("a".to_string(), 1)]);
        assert_eq!(report.exhausted, vec!["b".to_string()]);
        assert!(!report.is_clean());
    }

    #[test]
    fn display_form() {
        let env = coin_env().set("p", vec![]).unwrap();
        assert_eq!(env.to_string(), "(#p := []) <: (#y := [])");
    }
}
