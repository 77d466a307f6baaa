//! Command-line front end for `effprob`: runs registry models under
//! simulation, likelihood weighting or Metropolis-Hastings and writes
//! result tables, manifests and trace dumps.

pub mod bench;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{Algo, Format, RunConfig};
pub use error::CliError;
pub use output::{Record, RunOutput};
pub use run::{execute, load_manifest, run};
