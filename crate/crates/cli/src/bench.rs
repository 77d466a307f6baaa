//! Wall-clock scaling of the inference algorithms in the iteration count.

use std::time::Instant;

use effprob::rng::stream;
use effprob::zoo::registry;
use serde::Serialize;

use crate::config::Algo;
use crate::error::{config, CliError};

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub model: String,
    pub algorithm: Algo,
    pub iterations: usize,
    pub seconds: f64,
}

/// Least-squares line `seconds = slope * iterations + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Series {
    pub model: String,
    pub algorithm: Algo,
    pub fit: Fit,
    /// Whether time never decreased as the iteration count grew.
    pub monotone: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub series: Vec<Series>,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Fit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Fit {
        slope,
        intercept,
        r2,
    }
}

/// Seconds for one run of `algo` on a registry model with its default
/// inputs and environment.
pub fn time_run(model: &str, algo: Algo, iterations: usize, seed: u64) -> Result<f64, CliError> {
    let entry = registry::lookup(model).ok_or_else(|| config(format!("unknown model `{model}`")))?;
    let f = entry.build(None).map_err(config)?;
    let env = (entry.default_env)();
    let start = Instant::now();
    match algo {
        Algo::Simulate => {
            for i in 0..iterations {
                effprob::simulate(|()| f(), &env, (), &mut stream(seed, i as u64))?;
            }
        }
        Algo::Lw => {
            effprob::lw(iterations, |()| f(), (), &env, seed)?;
        }
        Algo::Mh => {
            effprob::mh(iterations, |()| f(), (), &env, seed)?;
        }
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Times every model and algorithm at every size, keeping the fastest of
/// `repeats` runs per point, and fits a line to each series.
pub fn bench(
    models: &[&str],
    algos: &[Algo],
    sizes: &[usize],
    seed: u64,
    repeats: usize,
) -> Result<BenchReport, CliError> {
    if sizes.len() < 2 {
        return Err(config("bench needs at least two sizes"));
    }
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &model in models {
        for &algo in algos {
            // warm caches and the allocator before measuring
            time_run(model, algo, sizes[0], seed)?;
            let mut secs = Vec::with_capacity(sizes.len());
            for &n in sizes {
                let mut best = f64::INFINITY;
                for _ in 0..repeats.max(1) {
                    best = best.min(time_run(model, algo, n, seed)?);
                }
                secs.push(best);
                rows.push(BenchRow {
                    model: model.to_string(),
                    algorithm: algo,
                    iterations: n,
                    seconds: best,
                });
            }
            let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
            series.push(Series {
                model: model.to_string(),
                algorithm: algo,
                fit: linear_fit(&xs, &secs),
                monotone: secs.windows(2).all(|w| w[0] <= w[1]),
            });
        }
    }
    Ok(BenchReport { rows, series })
}

impl BenchReport {
    /// `model,algorithm,iterations,seconds` followed by the series' fit.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "algorithm", "iterations", "seconds", "slope", "intercept", "r2"])
            .expect("in-memory write");
        for row in &self.rows {
            let s = self
                .series
                .iter()
                .find(|s| s.model == row.model && s.algorithm == row.algorithm)
                .expect("every row belongs to a series");
            w.write_record([
                row.model.clone(),
                row.algorithm.name().to_string(),
                row.iterations.to_string(),
                row.seconds.to_string(),
                s.fit.slope.to_string(),
                s.fit.intercept.to_string(),
                s.fit.r2.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}
