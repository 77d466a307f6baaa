use crate::model::{normal, uniform, Model};

/// One output of a linear model with parameters `mu`, `c` and `sigma`.
pub fn lin_regr(x: f64) -> Model<f64> {
    normal(0.0, 3.0, "mu").bind(move |mu| {
        normal(0.0, 2.0, "c").bind(move |c| {
            uniform(1.0, 3.0, "sigma").bind(move |sigma| normal(mu * x + c, sigma, "y"))
        })
    })
}

/// One output per input, all sharing a single draw of the parameters.
pub fn lin_regr_batch(xs: Vec<f64>) -> Model<Vec<f64>> {
    normal(0.0, 3.0, "mu").bind(move |mu| {
        normal(0.0, 2.0, "c").bind(move |c| {
            uniform(1.0, 3.0, "sigma").bind(move |sigma| outputs(xs, 0, Vec::new(), mu, c, sigma))
        })
    })
}

fn outputs(xs: Vec<f64>, i: usize, mut ys: Vec<f64>, mu: f64, c: f64, sigma: f64) -> Model<Vec<f64>> {
    match xs.get(i) {
        None => Model::pure(ys),
        Some(&x) => normal(mu * x + c, sigma, "y").bind(move |y| {
            ys.push(y);
            outputs(xs, i + 1, ys, mu, c, sigma)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Env;
    use crate::inference::simulate;
    use crate::rng::stream;

    #[test]
    fn fully_observed_output_is_the_observation() {
        let env = Env::builder()
            .real("mu", [3.0])
            .real("c", [0.0])
            .real("sigma", [1.0])
            .real("y", [7.5])
            .build()
            .unwrap();
        let out = simulate(lin_regr, &env, 2.0, &mut stream(1, 0)).unwrap();
        assert_eq!(out.value, 7.5);
        assert!(out.strace.is_empty());
    }

    #[test]
    fn batch_shares_parameters() {
        let env = Env::builder()
            .real("mu", [])
            .real("c", [])
            .real("sigma", [])
            .real("y", [])
            .build()
            .unwrap();
        let out = simulate(lin_regr_batch, &env, vec![0.0, 1.0, 2.0], &mut stream(1, 0)).unwrap();
        assert_eq!(out.env.get("mu").unwrap().len(), 1);
        assert_eq!(out.env.get("y").unwrap().len(), 3);
    }
}
