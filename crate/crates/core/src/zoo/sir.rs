//! The SIR epidemic model and its resusceptible and vaccination variants,
//! as a hidden Markov model over daily population counts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::hmm::{hmm, ObsModel, TransModel};
use crate::effects::tell;
use crate::model::{beta, binomial_, fold_kleisli, gamma, poisson, Model, Step};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Popl {
    pub s: i64,
    pub i: i64,
    pub r: i64,
    /// Vaccinated; stays zero outside the vaccination variant.
    #[serde(default)]
    pub v: i64,
}

impl Popl {
    pub fn new(s: i64, i: i64, r: i64) -> Self {
        Popl { s, i, r, v: 0 }
    }

    pub fn total(&self) -> i64 {
        self.s + self.i + self.r + self.v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransParams {
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Susceptible, infected, recovered.
    Sir,
    /// Recovered individuals become susceptible again at rate `eta`.
    Sirs,
    /// As `Sirs`, and susceptibles are vaccinated at rate `omega`.
    Sirsv,
}

fn rate_p(rate: f64) -> f64 {
    1.0 - (-rate).exp()
}

/// Susceptible to infected, with contact rate `beta`.
pub fn trans_si(beta: f64, p: Popl) -> Model<Popl> {
    let n = p.total();
    let prob = if n > 0 {
        rate_p(beta * p.i as f64 / n as f64)
    } else {
        0.0
    };
    binomial_(p.s, prob).map(move |d| Popl {
        s: p.s - d,
        i: p.i + d,
        ..p
    })
}

/// Infected to recovered, with recovery rate `gamma`.
pub fn trans_ir(gamma: f64, p: Popl) -> Model<Popl> {
    binomial_(p.i, rate_p(gamma)).map(move |d| Popl {
        i: p.i - d,
        r: p.r + d,
        ..p
    })
}

/// Recovered to susceptible, with rate `eta`.
pub fn trans_rs(eta: f64, p: Popl) -> Model<Popl> {
    binomial_(p.r, rate_p(eta)).map(move |d| Popl {
        r: p.r - d,
        s: p.s + d,
        ..p
    })
}

/// Susceptible to vaccinated, with rate `omega`.
pub fn trans_sv(omega: f64, p: Popl) -> Model<Popl> {
    binomial_(p.s, rate_p(omega)).map(move |d| Popl {
        s: p.s - d,
        v: p.v + d,
        ..p
    })
}

/// One day of the chosen variant: `si >=> ir (>=> rs (>=> sv))`.
pub fn trans_sir(variant: Variant, t: &TransParams) -> Step<Popl, Popl> {
    let TransParams {
        beta,
        gamma,
        eta,
        omega,
    } = *t;
    let mut steps: Vec<Step<Popl, Popl>> = vec![
        Arc::new(move |p| trans_si(beta, p)),
        Arc::new(move |p| trans_ir(gamma, p)),
    ];
    if matches!(variant, Variant::Sirs | Variant::Sirsv) {
        steps.push(Arc::new(move |p| trans_rs(eta, p)));
    }
    if variant == Variant::Sirsv {
        steps.push(Arc::new(move |p| trans_sv(omega, p)));
    }
    fold_kleisli(steps)
}

/// Reported infections `xi ~ Poisson(rho * i)`.
pub fn obs_sir(rho: f64, p: &Popl) -> Model<i64> {
    poisson(rho * p.i as f64, "xi")
}

pub fn trans_prior(variant: Variant) -> Model<TransParams> {
    gamma(2.0, 1.0, "beta").bind(move |beta| {
        gamma(1.0, 1.0 / 8.0, "gamma").bind(move |gamma_| {
            let t = TransParams {
                beta,
                gamma: gamma_,
                eta: 0.0,
                omega: 0.0,
            };
            match variant {
                Variant::Sir => Model::pure(t),
                Variant::Sirs => extra_rate("eta").map(move |eta| TransParams { eta, ..t }),
                Variant::Sirsv => extra_rate("eta").bind(move |eta| {
                    extra_rate("omega").map(move |omega| TransParams { eta, omega, ..t })
                }),
            }
        })
    })
}

fn extra_rate(name: &'static str) -> Model<f64> {
    gamma(1.0, 1.0 / 8.0, name)
}

pub fn obs_prior() -> Model<f64> {
    beta(2.0, 7.0, "rho")
}

/// `n` days of the epidemic from `sir0`, returning the final population.
pub fn hmm_sir(variant: Variant, n: usize, sir0: Popl) -> Model<Popl> {
    let trans: TransModel<TransParams, Popl> = Arc::new(move |t, p| trans_sir(variant, t)(p));
    let obs: ObsModel<f64, Popl, i64> = Arc::new(|&rho, p| obs_sir(rho, p));
    hmm(trans_prior(variant), obs_prior(), trans, obs, n, sir0)
}

/// As [`hmm_sir`], also returning every day's population, recorded with a
/// `Writer` effect from inside the transition model.
pub fn hmm_sir_logged(variant: Variant, n: usize, sir0: Popl) -> Model<(Popl, Vec<Popl>)> {
    let trans: TransModel<TransParams, Popl> = Arc::new(move |t, p| {
        trans_sir(variant, t)(p).bind(|p1| tell(vec![p1]).map(move |()| p1))
    });
    let obs: ObsModel<f64, Popl, i64> = Arc::new(|&rho, p| obs_sir(rho, p));
    hmm(trans_prior(variant), obs_prior(), trans, obs, n, sir0).handle_writer::<Vec<Popl>>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Env;
    use crate::inference::simulate;
    use crate::rng::stream;

    fn run<A: Send + 'static>(m: Model<A>, seed: u64) -> A {
        let env = Env::builder().int("xi", []).build().unwrap();
        simulate(|()| m, &env, (), &mut stream(seed, 0)).unwrap().value
    }

    #[test]
    fn zero_contact_rate_infects_nobody() {
        let p = Popl::new(500, 10, 3);
        for seed in 0..20 {
            assert_eq!(run(trans_si(0.0, p), seed).s, 500);
        }
    }

    #[test]
    fn no_infected_means_no_change() {
        let p = Popl::new(500, 0, 3);
        for seed in 0..20 {
            let q = run(trans_si(0.7, p).bind(|q| trans_ir(0.5, q)), seed);
            assert_eq!(q, p);
            assert_eq!(run(obs_sir(0.3, &q), seed), 0);
        }
    }

    #[test]
    fn infections_match_binomial_mean() {
        let p = Popl::new(762, 1, 0);
        let reps = 10_000;
        let prob = 1.0 - (-0.7f64 / 763.0).exp();
        let (mean, var) = (762.0 * prob, 762.0 * prob * (1.0 - prob));
        let total: i64 = (0..reps)
            .map(|s| run(trans_si(0.7, p), s as u64).i - 1)
            .sum();
        let got = total as f64 / reps as f64;
        let se = (var / reps as f64).sqrt();
        assert!((got - mean).abs() < 4.0 * se, "{got} vs {mean}");
    }

    #[test]
    fn transitions_conserve_population() {
        let t = TransParams { beta: 1.3, gamma: 0.4, eta: 0.3, omega: 0.2 };
        let p = Popl { s: 50, i: 20, r: 10, v: 5 };
        for variant in [Variant::Sir, Variant::Sirs, Variant::Sirsv] {
            for seed in 0..50 {
                let q = run(trans_sir(variant, &t)(p), seed);
                assert_eq!(q.total(), p.total());
                assert!(q.s >= 0 && q.i >= 0 && q.r >= 0 && q.v >= 0);
            }
        }
    }
}
