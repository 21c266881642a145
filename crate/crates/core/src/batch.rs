//! Seeded batches of randomized runs and the growth-exponent fit.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::RingError;
use crate::executor::{run, ExecError, Outcome, RunOptions};
use crate::ring::{self, Configuration};
use crate::scheduler::RandomFair;

/// Random tower-free, non-periodic placement drawn from `seed`. Uses its
/// own generator stream, so the same seed can also drive the scheduler.
pub fn random_initial(n: usize, k: usize, seed: u64) -> Result<Configuration, RingError> {
    ring::check_instance_size(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    loop {
        let mut nodes = sample(&mut rng, n, k).into_vec();
        nodes.sort_unstable();
        let c = Configuration::from_occupied(n, &nodes)?;
        if !ring::is_periodic(&c) {
            return Ok(c);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub n: usize,
    pub k: usize,
    pub runs: usize,
    pub gathered: usize,
    pub mean_rounds: f64,
    pub max_rounds: u64,
    /// Seeds whose run did not gather, with the outcome.
    pub failures: Vec<(u64, String)>,
}

/// Runs seeds `0..seeds`, each from `random_initial(n, k, seed)` under
/// `random_fair(seed, fairness)` with the `10·n²` round limit.
pub fn run_batch(n: usize, k: usize, seeds: u64, fairness: u64) -> Result<BatchRow, ExecError> {
    ring::check_instance_size(n, k)?;
    let results: Vec<(u64, Outcome, u64)> = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let initial = random_initial(n, k, seed)?;
            let options = RunOptions { fairness, record_trace: false, ..RunOptions::for_instance(n, k) };
            let r = run(&initial, &mut RandomFair::new(seed, fairness), options)?;
            Ok((seed, r.outcome, r.rounds))
        })
        .collect::<Result<_, ExecError>>()?;
    let runs = results.len();
    let mut row = BatchRow { n, k, runs, gathered: 0, mean_rounds: 0.0, max_rounds: 0, failures: Vec::new() };
    for (seed, outcome, rounds) in results {
        row.mean_rounds += rounds as f64 / runs.max(1) as f64;
        row.max_rounds = row.max_rounds.max(rounds);
        match outcome {
            Outcome::Gathered => row.gathered += 1,
            other => row.failures.push((seed, format!("{other:?}"))),
        }
    }
    Ok(row)
}

/// Least-squares slope of `ln y` against `ln x`. Needs two distinct `x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 1e-12).then(|| sxy / sxx)
}

/// Plot-ready table, one row per batch.
pub fn to_csv(rows: &[BatchRow]) -> String {
    let mut out = String::from("n,k,runs,gathered,mean_rounds,max_rounds\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{:.3},{}\n", r.n, r.k, r.runs, r.gathered, r.mean_rounds, r.max_rounds));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_power_law() {
        let pts: Vec<(f64, f64)> = [12.0, 24.0, 48.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(1.7))).collect();
        assert!((fit_exponent(&pts).unwrap() - 1.7).abs() < 1e-9);
        assert_eq!(fit_exponent(&[(12.0, 5.0), (12.0, 7.0)]), None);
    }

    #[test]
    fn random_initials_are_valid_and_seeded() {
        for seed in 0..50 {
            let c = random_initial(12, 5, seed).unwrap();
            assert!(ring::check_initial(&c).is_ok());
            assert_eq!(c, random_initial(12, 5, seed).unwrap());
        }
        assert!(random_initial(8, 4, 0).is_err());
    }

    #[test]
    fn small_batch_gathers() {
        let row = run_batch(12, 5, 10, 15).unwrap();
        assert_eq!(row.gathered, 10, "{row:?}");
        assert!(row.max_rounds < 10 * 144);
    }
}
