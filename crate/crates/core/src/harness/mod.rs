//! Seeded Monte Carlo runs over many sessions, with aggregation into
//! [`RunStats`].

mod oracle;
mod report;
mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{run_session, Mode, ProtocolParams, Transcript};
use crate::states::FamilyTag;

pub use oracle::{
    accuracy_for_probabilities, analytic_accuracy, binomial_sigma, prime_posterior_given_one,
    prime_posterior_given_zero, wilson_interval, MAX_ORACLE_SET_SIZE,
};
pub use report::{emit_report, write_report, ConfigEcho, OracleInputs, RateEntry, Report, CSV_HEADER};
pub use verify::{verify_identities, IdentityCheck, VerificationReport};

/// z-value of the reported 95% intervals.
pub const Z_95: f64 = 1.959963984540054;

/// A trial is abandoned after this many insufficient-pool reruns.
pub const MAX_RETRIES: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ProtocolParams,
    pub trials: u64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(params: ProtocolParams, trials: u64) -> Self {
        ExperimentConfig {
            params,
            trials,
            output_format: OutputFormat::Json,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be at least 1".into()));
        }
        self.params.validate()
    }
}

/// A proportion with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub successes: u64,
    pub samples: u64,
    pub value: f64,
    pub ci: (f64, f64),
}

impl Estimate {
    pub fn from_counts(successes: u64, samples: u64) -> Option<Self> {
        if samples == 0 {
            return None;
        }
        Some(Estimate {
            successes,
            samples,
            value: successes as f64 / samples as f64,
            ci: wilson_interval(successes, samples, Z_95),
        })
    }

    /// `|value - expected|` in units of the binomial standard deviation at
    /// `expected`.
    pub fn sigmas_from(&self, expected: f64) -> f64 {
        (self.value - expected).abs() / binomial_sigma(expected, self.samples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub trials_completed: u64,
    pub retried_sessions: u64,
    pub abort_rate: Estimate,
    /// Over non-aborted sessions. In honest mode Alice never guesses, so a
    /// blind coin-flip probe is scored instead.
    pub guess_accuracy: Option<Estimate>,
    pub e1_frequency_by_family: BTreeMap<FamilyTag, Estimate>,
    pub mean_prime_fraction_rc: Option<f64>,
    pub mean_prime_fraction_other: Option<f64>,
    /// Pass frequency over every test Bob ran.
    pub test_pass_rate: Option<Estimate>,
    pub config_echo: ExperimentConfig,
    pub seed_echo: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for one attempt of one trial. Depends only on its three
/// arguments, so results do not depend on scheduling.
pub fn session_rng(master_seed: u64, trial: u64, retry: u32) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(splitmix64(master_seed) ^ trial) ^ u64::from(retry));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Per-trial contribution to [`RunStats`].
#[derive(Debug, Clone, Default, PartialEq)]
struct TrialSummary {
    retries: u64,
    aborted: bool,
    guess_correct: Option<bool>,
    tests_run: u64,
    tests_passed: u64,
    e1_counts: BTreeMap<FamilyTag, (u64, u64)>,
    prime_fraction_rc: Option<f64>,
    prime_fraction_other: Option<f64>,
}

fn prime_fraction(t: &Transcript, set: &[usize]) -> Option<f64> {
    let mut prime = 0usize;
    for &i in set {
        prime += usize::from(t.records[i].known_family()?.tag() == FamilyTag::Prime);
    }
    Some(prime as f64 / set.len() as f64)
}

fn summarize(t: &Transcript, retries: u64, rng: &mut ChaCha8Rng, mode: Mode) -> TrialSummary {
    let mut summary = TrialSummary {
        retries,
        aborted: t.aborted,
        tests_run: t.tests_run() as u64,
        tests_passed: t.tests_passed() as u64,
        ..TrialSummary::default()
    };
    for r in &t.records {
        if let (Some(e), Some(f)) = (r.e_outcome, r.known_family()) {
            let slot = summary.e1_counts.entry(f.tag()).or_default();
            slot.0 += u64::from(e);
            slot.1 += 1;
        }
    }
    if let (Some(choice), Some((rc, other))) = (t.bob_choice, t.chosen_and_other()) {
        let guess = match (t.alice_guess, mode) {
            (Some(g), _) => Some(g),
            (None, Mode::HonestAlice) => Some(rng.random_bool(0.5) as u8),
            (None, _) => None,
        };
        summary.guess_correct = guess.map(|g| g == choice);
        summary.prime_fraction_rc = prime_fraction(t, rc);
        summary.prime_fraction_other = prime_fraction(t, other);
    }
    summary
}

fn run_trial(params: &ProtocolParams, trial: u64) -> Result<TrialSummary> {
    for retry in 0..=MAX_RETRIES {
        let mut rng = session_rng(params.seed, trial, retry);
        let transcript = run_session(params, &mut rng)?;
        if !transcript.insufficient_pool {
            return Ok(summarize(&transcript, u64::from(retry), &mut rng, params.mode));
        }
    }
    Err(Error::RetriesExhausted {
        trial,
        retries: MAX_RETRIES,
    })
}

fn mean(sum: f64, count: u64) -> Option<f64> {
    (count > 0).then(|| sum / count as f64)
}

/// Runs `config.trials` independent sessions (in parallel) and aggregates
/// them in trial order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunStats> {
    config.validate()?;
    let params = config.params;
    let summaries = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(&params, trial))
        .collect::<Result<Vec<_>>>()?;

    let mut retried = 0;
    let mut aborted = 0;
    let (mut correct, mut guessed) = (0, 0);
    let (mut tests_passed, mut tests_run) = (0, 0);
    let mut e1: BTreeMap<FamilyTag, (u64, u64)> = BTreeMap::new();
    let (mut rc_sum, mut rc_n, mut other_sum, mut other_n) = (0.0, 0, 0.0, 0);
    for s in &summaries {
        retried += s.retries;
        aborted += u64::from(s.aborted);
        if let Some(ok) = s.guess_correct {
            guessed += 1;
            correct += u64::from(ok);
        }
        tests_run += s.tests_run;
        tests_passed += s.tests_passed;
        for (tag, (ones, total)) in &s.e1_counts {
            let slot = e1.entry(*tag).or_default();
            slot.0 += ones;
            slot.1 += total;
        }
        if let Some(f) = s.prime_fraction_rc {
            rc_sum += f;
            rc_n += 1;
        }
        if let Some(f) = s.prime_fraction_other {
            other_sum += f;
            other_n += 1;
        }
    }

    let trials = summaries.len() as u64;
    Ok(RunStats {
        trials_completed: trials,
        retried_sessions: retried,
        abort_rate: Estimate::from_counts(aborted, trials).expect("trials >= 1"),
        guess_accuracy: Estimate::from_counts(correct, guessed),
        e1_frequency_by_family: e1
            .into_iter()
            .filter_map(|(tag, (ones, total))| Some((tag, Estimate::from_counts(ones, total)?)))
            .collect(),
        mean_prime_fraction_rc: mean(rc_sum, rc_n),
        mean_prime_fraction_other: mean(other_sum, other_n),
        test_pass_rate: Estimate::from_counts(tests_passed, tests_run),
        config_echo: config.clone(),
        seed_echo: params.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::Beta;

    fn config(mode: Mode, trials: u64) -> ExperimentConfig {
        ExperimentConfig::new(
            ProtocolParams {
                beta: Beta::new(0.5).unwrap(),
                n_states: 120,
                test_fraction: 0.25,
                set_size: 5,
                mode,
                seed: 99,
            },
            trials,
        )
    }

    #[test]
    fn streams_depend_on_every_coordinate() {
        let draw = |s, t, r| session_rng(s, t, r).random::<u64>();
        let base = draw(1, 2, 3);
        assert_eq!(base, draw(1, 2, 3));
        assert_ne!(base, draw(0, 2, 3));
        assert_ne!(base, draw(1, 0, 3));
        assert_ne!(base, draw(1, 2, 0));
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_experiment(&config(Mode::EprAlice, 0)).is_err());
    }

    #[test]
    fn honest_runs_never_abort() {
        let stats = run_experiment(&config(Mode::HonestAlice, 40)).unwrap();
        assert_eq!(stats.abort_rate.value, 0.0);
        assert_eq!(stats.trials_completed, 40);
        assert!(stats.guess_accuracy.is_some());
        assert!(stats.e1_frequency_by_family.contains_key(&FamilyTag::Honest));
    }

    #[test]
    fn intervals_contain_estimates() {
        let stats = run_experiment(&config(Mode::EprAlice, 40)).unwrap();
        let mut all = vec![stats.abort_rate, stats.guess_accuracy.unwrap()];
        all.extend(stats.e1_frequency_by_family.values().copied());
        for e in all {
            assert!(e.ci.0 <= e.value && e.value <= e.ci.1, "{e:?}");
            assert!((0.0..=1.0).contains(&e.value));
        }
        assert_eq!(stats.seed_echo, 99);
    }

    #[test]
    fn parallel_schedule_does_not_matter() {
        let cfg = config(Mode::EprAlice, 30);
        let a = run_experiment(&cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
    }
}
