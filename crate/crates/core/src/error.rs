use thiserror::Error;

use crate::dist::Kind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("observable variable `{0}` is not in the environment")]
    UnknownVariable(String),

    #[error("observable variable `{0}` appears twice in the environment")]
    DuplicateVariable(String),

    #[error("observable variable name must be non-empty")]
    EmptyVariableName,

    #[error("observable variable `{name}`: expected {expected} values, found {found}")]
    KindMismatch {
        name: String,
        expected: Kind,
        found: Kind,
    },

    #[error("{family}: {reason}")]
    InvalidParameter { family: &'static str, reason: String },

    #[error("{family} cannot score a {found} value")]
    ValueKind { family: &'static str, found: Kind },

    #[error("model has no sample sites under this environment: nothing to infer")]
    NothingToInfer,

    #[error("effect {effect} is not a member of signature {signature}")]
    NotAMember { effect: String, signature: String },

    #[error("duplicate effect {0} in signature")]
    DuplicateEffect(String),

    #[error("handler stack misassembled: {0}")]
    Unhandled(String),
}

impl Error {
    /// Errors that indicate a bug in a handler stack rather than a bad model
    /// or environment.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::NotAMember { .. } | Error::DuplicateEffect(_) | Error::Unhandled(_)
        )
    }
}
