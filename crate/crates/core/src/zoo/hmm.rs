use std::sync::Arc;

use crate::model::{bernoulli_, binomial, replicate_kleisli, uniform, Model, Step};

/// `θ -> x_{i-1} -> x_i`
pub type TransModel<P, L> = Arc<dyn Fn(&P, L) -> Model<L> + Send + Sync>;
/// `φ -> x_i -> y_i`
pub type ObsModel<P, L, O> = Arc<dyn Fn(&P, &L) -> Model<O> + Send + Sync>;

/// One step: transition, then observe the new latent state.
pub fn hmm_node<P1, P2, L, O>(
    trans: TransModel<P1, L>,
    obs: ObsModel<P2, L, O>,
    theta: Arc<P1>,
    phi: Arc<P2>,
) -> Step<L, L>
where
    P1: Send + Sync + 'static,
    P2: Send + Sync + 'static,
    L: Send + 'static,
    O: Send + 'static,
{
    Arc::new(move |x| {
        let obs = obs.clone();
        let phi = phi.clone();
        trans(&theta, x).bind(move |x1| obs(&phi, &x1).map(move |_| x1))
    })
}

/// A hidden Markov model of length `n` from `x0`, with parameters drawn
/// once from the two priors.
pub fn hmm<P1, P2, L, O>(
    trans_prior: Model<P1>,
    obs_prior: Model<P2>,
    trans: TransModel<P1, L>,
    obs: ObsModel<P2, L, O>,
    n: usize,
    x0: L,
) -> Model<L>
where
    P1: Send + Sync + 'static,
    P2: Send + Sync + 'static,
    L: Send + 'static,
    O: Send + 'static,
{
    trans_prior.bind(move |theta| {
        obs_prior.bind(move |phi| {
            let node = hmm_node(trans, obs, Arc::new(theta), Arc::new(phi));
            replicate_kleisli(n, node)(x0)
        })
    })
}

/// The integer-walk HMM built from [`hmm`]: `x_i = x_{i-1} + Bernoulli(trans_p)`
/// and `y_i ~ Binomial(x_i, obs_p)`.
pub fn simple_hmm(n: usize, x0: i64) -> Model<i64> {
    let trans: TransModel<f64, i64> = Arc::new(|&p, x| bernoulli_(p).map(move |dx| x + i64::from(dx)));
    let obs: ObsModel<f64, i64, i64> = Arc::new(|&q, &x| binomial(x, q, "y"));
    hmm(
        uniform(0.0, 1.0, "trans_p"),
        uniform(0.0, 1.0, "obs_p"),
        trans,
        obs,
        n,
        x0,
    )
}

/// The same model written as one explicit loop.
pub fn hmm_monolithic(n: usize, x0: i64) -> Model<i64> {
    uniform(0.0, 1.0, "trans_p").bind(move |tp| {
        uniform(0.0, 1.0, "obs_p").bind(move |op| walk(0, n, x0, tp, op))
    })
}

fn walk(i: usize, n: usize, x: i64, tp: f64, op: f64) -> Model<i64> {
    if i >= n {
        return Model::pure(x);
    }
    bernoulli_(tp).bind(move |dx| {
        let x1 = x + i64::from(dx);
        binomial(x1, op, "y").bind(move |_| walk(i + 1, n, x1, tp, op))
    })
}
