//! Example models built only from the public model API.

pub mod coinflip;
pub mod hmm;
pub mod lda;
pub mod linregr;
pub mod registry;
pub mod sir;

pub use coinflip::coin_flip;
pub use hmm::{hmm, hmm_monolithic, hmm_node, simple_hmm, ObsModel, TransModel};
pub use lda::lda;
pub use linregr::{lin_regr, lin_regr_batch};
pub use registry::{registry, Entry as RegistryEntry, ModelFn};
pub use sir::{hmm_sir, hmm_sir_logged, Popl, TransParams, Variant};
