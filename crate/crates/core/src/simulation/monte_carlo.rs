use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::UserPose;
use crate::error::{Error, Result};

use super::schemes::{run_scheme, SchemeResult};
use super::{generate_users, ScenarioConfig, Scheme};

/// Independent random stream for one trial, derived from the master seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// One user drop evaluated under every configured scheme.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    pub users: Vec<UserPose>,
    /// One entry per `config.schemes`, in order.
    pub results: Vec<Result<SchemeResult>>,
}

/// Drops users for trial `trial` and runs every configured scheme on them.
pub fn run_trial(config: &ScenarioConfig, trial: usize) -> TrialOutcome {
    let mut rng = trial_rng(config.seed, trial);
    let users = generate_users(config, &mut rng);
    let vuc_seed: u64 = rng.gen();
    let results = config
        .schemes
        .iter()
        .map(|&scheme| run_scheme(&users, config, scheme, vuc_seed))
        .collect();
    TrialOutcome {
        trial,
        users,
        results,
    }
}

/// Monte-Carlo summary of one scheme at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub scheme: String,
    pub users: usize,
    pub beams: usize,
    pub seed: u64,
    /// Trials requested.
    pub trials: usize,
    /// Trials excluded because some user could not be served.
    pub infeasible: usize,
    pub mean_sum_rate: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_sum_rate: f64,
    pub mean_objective: f64,
    /// Sum rate of every feasible trial, in trial order.
    pub sum_rates: Vec<f64>,
    /// Every user's delivered rate across feasible trials.
    pub user_rates: Vec<f64>,
}

impl AggregateResult {
    pub fn feasible(&self) -> usize {
        self.trials - self.infeasible
    }

    /// Per-user rates in dB, `20·log10(R)`.
    pub fn user_rates_db(&self) -> Vec<f64> {
        self.user_rates.iter().map(|r| 20.0 * r.log10()).collect()
    }

    /// Empirical CDF of per-user rates in dB as `(rate_db, P(X <= rate_db))`.
    pub fn rate_cdf_db(&self) -> Vec<(f64, f64)> {
        let mut db = self.user_rates_db();
        db.sort_by(f64::total_cmp);
        let n = db.len() as f64;
        db.into_iter()
            .enumerate()
            .map(|(i, x)| (x, (i + 1) as f64 / n))
            .collect()
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn is_trial_failure(e: &Error) -> bool {
    matches!(e, Error::Infeasible | Error::Clustering(_))
}

/// Runs `config.trials` seeded drops and aggregates every configured scheme.
///
/// Trials are evaluated in parallel; aggregation walks them in trial order
/// so results are bit-identical regardless of thread count.
pub fn monte_carlo(config: &ScenarioConfig) -> Result<Vec<AggregateResult>> {
    config.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect();

    config
        .schemes
        .iter()
        .enumerate()
        .map(|(s, scheme)| aggregate(config, *scheme, outcomes.iter().map(|o| &o.results[s])))
        .collect()
}

fn aggregate<'a>(
    config: &ScenarioConfig,
    scheme: Scheme,
    results: impl Iterator<Item = &'a Result<SchemeResult>>,
) -> Result<AggregateResult> {
    let mut sum_rates = Vec::new();
    let mut user_rates = Vec::new();
    let mut objectives = Vec::new();
    let mut infeasible = 0;
    for r in results {
        match r {
            Ok(r) => {
                sum_rates.push(r.sum_rate);
                objectives.push(r.objective);
                user_rates.extend_from_slice(&r.rates);
            }
            Err(e) if is_trial_failure(e) => infeasible += 1,
            Err(e) => return Err(e.clone()),
        }
    }
    if infeasible > 0 {
        log::warn!("{scheme}: {infeasible} of {} trials infeasible", config.trials);
    }
    let (mean_sum_rate, std_sum_rate) = mean_std(&sum_rates);
    let (mean_objective, _) = mean_std(&objectives);
    Ok(AggregateResult {
        scheme: scheme.to_string(),
        users: config.users,
        beams: config.beams,
        seed: config.seed,
        trials: config.trials,
        infeasible,
        mean_sum_rate,
        std_sum_rate,
        mean_objective,
        sum_rates,
        user_rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::GridSpec;

    fn quick(users: usize, trials: usize) -> ScenarioConfig {
        ScenarioConfig {
            users,
            trials,
            grid: GridSpec {
                alpha_step: 5.0,
                beta_step: 6.0,
                gamma_step: 2.0,
                ..GridSpec::default()
            },
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn single_trial_matches_scheme_result() {
        let config = quick(3, 1);
        let agg = monte_carlo(&config).unwrap();
        let trial = run_trial(&config, 0);
        for (a, r) in agg.iter().zip(&trial.results) {
            let r = r.as_ref().unwrap();
            assert_eq!(a.mean_sum_rate, r.sum_rate);
            assert_eq!(a.std_sum_rate, 0.0);
            assert_eq!(a.user_rates, r.rates);
            assert_eq!(a.mean_objective, r.objective);
        }
    }

    #[test]
    fn same_seed_same_aggregate() {
        let config = quick(2, 4);
        assert_eq!(monte_carlo(&config).unwrap(), monte_carlo(&config).unwrap());
        let other = ScenarioConfig { seed: 2, ..config.clone() };
        assert_ne!(monte_carlo(&config).unwrap(), monte_carlo(&other).unwrap());
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let agg = &monte_carlo(&quick(3, 3)).unwrap()[0];
        let cdf = agg.rate_cdf_db();
        assert_eq!(cdf.len(), 9);
        assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert_eq!(cdf.last().unwrap().1, 1.0);
    }

    #[test]
    fn trial_streams_differ() {
        let a: u64 = trial_rng(5, 0).gen();
        let b: u64 = trial_rng(5, 1).gen();
        assert_ne!(a, b);
    }
}
