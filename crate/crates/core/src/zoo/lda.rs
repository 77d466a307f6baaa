//! Latent Dirichlet allocation for a single document.
//!
//! `theta ~ Dirichlet(1)` over topics, one `phi ~ Dirichlet(1)` over the
//! vocabulary per topic, then for each word a topic `z ~ Categorical(theta)`
//! and a word index `w ~ Categorical(phi[z])`.

use std::sync::Arc;

use crate::model::{categorical, categorical_, dirichlet, Model};

pub fn lda(vocab: Vec<String>, topics: usize, doc_length: usize) -> Model<Vec<String>> {
    let v = vocab.len();
    dirichlet(vec![1.0; topics], "theta").bind(move |theta| {
        topic_words(topics, v, Vec::new()).bind(move |phis| {
            words(Arc::new(theta), Arc::new(phis), doc_length, Vec::new()).map(move |ws| {
                ws.into_iter()
                    .map(|w| vocab.get(w as usize).cloned().unwrap_or_else(|| format!("<{w}>")))
                    .collect()
            })
        })
    })
}

fn topic_words(k: usize, v: usize, mut acc: Vec<Vec<f64>>) -> Model<Vec<Vec<f64>>> {
    if acc.len() == k {
        return Model::pure(acc);
    }
    dirichlet(vec![1.0; v], "phi").bind(move |phi| {
        acc.push(phi);
        topic_words(k, v, acc)
    })
}

fn words(
    theta: Arc<Vec<f64>>,
    phis: Arc<Vec<Vec<f64>>>,
    left: usize,
    mut acc: Vec<i64>,
) -> Model<Vec<i64>> {
    if left == 0 {
        return Model::pure(acc);
    }
    categorical_(&theta).bind(move |z| {
        categorical(&phis[z as usize], "w").bind(move |w| {
            acc.push(w);
            words(theta, phis, left - 1, acc)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::PrimVal;
    use crate::env::Env;
    use crate::inference::simulate;
    use crate::rng::stream;

    fn vocab() -> Vec<String> {
        ["a", "b", "c"].iter().map(|s| s.to_string()).collect()
    }

    fn env(theta: Vec<Vec<f64>>, phi: Vec<Vec<f64>>) -> Env {
        Env::builder()
            .vector("theta", theta)
            .vector("phi", phi)
            .int("w", [])
            .build()
            .unwrap()
    }

    #[test]
    fn one_hot_topics_give_a_fixed_document() {
        let e = env(vec![vec![1.0]], vec![vec![0.0, 1.0, 0.0]]);
        for seed in 0..10 {
            let out = simulate(|()| lda(vocab(), 1, 6), &e, (), &mut stream(seed, 0)).unwrap();
            assert_eq!(out.value, vec!["b"; 6]);
        }
    }

    #[test]
    fn single_topic_words_follow_its_distribution() {
        let e = env(vec![vec![1.0]], vec![vec![0.2, 0.5, 0.3]]);
        let out = simulate(|()| lda(vocab(), 1, 20_000), &e, (), &mut stream(3, 0)).unwrap();
        let ws = out.env.get_ints("w").unwrap();
        for (k, p) in [0.2, 0.5, 0.3].into_iter().enumerate() {
            let f = ws.iter().filter(|&&w| w == k as i64).count() as f64 / ws.len() as f64;
            let se = (p * (1.0 - p) / ws.len() as f64).sqrt();
            assert!((f - p).abs() < 4.0 * se, "word {k}: {f} vs {p}");
        }
    }

    #[test]
    fn dirichlet_draws_are_simplex_points() {
        let e = env(vec![], vec![]);
        let out = simulate(|()| lda(vocab(), 3, 5), &e, (), &mut stream(5, 0)).unwrap();
        let draws: Vec<&PrimVal> = out.env.get("theta").unwrap().iter().chain(out.env.get("phi").unwrap()).collect();
        assert_eq!(draws.len(), 4);
        for d in draws {
            let xs = d.as_vec().unwrap();
            assert!(xs.iter().all(|&x| x >= 0.0));
            assert!((xs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
