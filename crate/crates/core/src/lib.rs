//! Probabilistic programming with effect handlers.
//!
//! Models are built from smart constructors such as [`normal`] and
//! [`bernoulli`] and run under an [`Env`] that decides which observable
//! variables are observed and which are sampled. The same model can then be
//! simulated, weighted with likelihood weighting, or sampled with
//! Metropolis-Hastings, each of which is just a different stack of handlers.
//!
//! ```
//! use effprob::{bernoulli, uniform, Env, Model, rng};
//!
//! fn coin_flip() -> Model<bool> {
//!     uniform(0.0, 1.0, "p").bind(|p| bernoulli(p, "y"))
//! }
//!
//! let env = Env::builder().real("p", [0.5]).boolean("y", []).build().unwrap();
//! let out = effprob::simulate(|()| coin_flip(), &env, (), &mut rng::stream(1, 0)).unwrap();
//! assert_eq!(out.env.get("y").unwrap().len(), 1);
//! ```

pub mod dist;
pub mod effects;
pub mod env;
pub mod error;
pub mod inference;
pub mod model;
pub mod prog;
pub mod rng;
pub mod zoo;

pub use dist::{get_obs, Dist, Family, Kind, PrimVal};
pub use effects::{handle_state, handle_writer, modify, tell, Monoid};
pub use env::{Entry, Env, EnvBuilder, EnvReport, ObsVar};
pub use error::{Error, Result};
pub use inference::{lw, mh, simulate, LPTrace, STrace};
pub use model::{
    bernoulli, bernoulli_, beta, beta_, binomial, binomial_, categorical, categorical_,
    dirichlet, dirichlet_, discrete, discrete_, fold_kleisli, gamma, gamma_, kleisli, normal,
    normal_, poisson, poisson_, replicate_kleisli, uniform, uniform_, Addr, Model, Step,
};
