//! JSON and CSV serialization of [`RunStats`].
//!
//! Floats are rounded to 12 significant digits before serialization, so a
//! parsed report reproduces the printed values exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{analytic_accuracy, prime_posterior_given_one, prime_posterior_given_zero};
use super::{Estimate, OutputFormat, RunStats};
use crate::error::{Error, Result};
use crate::states::FamilyTag;

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 34] = [
    "mode",
    "beta",
    "n_states",
    "test_fraction",
    "set_size",
    "trials",
    "seed",
    "trials_completed",
    "retried_sessions",
    "abort_rate",
    "abort_rate_ci_lo",
    "abort_rate_ci_hi",
    "guess_accuracy",
    "guess_accuracy_ci_lo",
    "guess_accuracy_ci_hi",
    "e1_freq_honest",
    "e1_freq_honest_ci_lo",
    "e1_freq_honest_ci_hi",
    "e1_freq_honest_samples",
    "e1_freq_prime",
    "e1_freq_prime_ci_lo",
    "e1_freq_prime_ci_hi",
    "e1_freq_prime_samples",
    "e1_freq_double_prime",
    "e1_freq_double_prime_ci_lo",
    "e1_freq_double_prime_ci_hi",
    "e1_freq_double_prime_samples",
    "prime_fraction_rc",
    "prime_fraction_other",
    "oracle_p1",
    "oracle_p0",
    "oracle_accuracy",
    "format",
    "out",
];

/// Rounds to 12 significant digits.
fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInputs {
    /// `P(ψ′ | e = 1)`.
    pub p1: f64,
    /// `P(ψ′ | e = 0)`.
    pub p0: f64,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: String,
    pub beta: f64,
    pub n_states: usize,
    pub test_fraction: f64,
    pub set_size: usize,
    pub seed: u64,
    pub trials: u64,
    pub format: String,
    pub out: Option<String>,
    pub oracle: OracleInputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub value: f64,
    pub ci: [f64; 2],
    pub samples: u64,
}

/// Serialized form of [`RunStats`]; field names are the report schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub config: ConfigEcho,
    pub seed: u64,
    pub trials_completed: u64,
    pub retried_sessions: u64,
    pub abort_rate: f64,
    pub abort_rate_ci: [f64; 2],
    pub guess_accuracy: Option<f64>,
    pub guess_accuracy_ci: Option<[f64; 2]>,
    pub e1_freq_honest: Option<RateEntry>,
    pub e1_freq_prime: Option<RateEntry>,
    pub e1_freq_double_prime: Option<RateEntry>,
    pub prime_fraction_rc: Option<f64>,
    pub prime_fraction_other: Option<f64>,
}

fn ci(e: &Estimate) -> [f64; 2] {
    [sig12(e.ci.0), sig12(e.ci.1)]
}

fn rate_entry(e: &Estimate) -> RateEntry {
    RateEntry {
        value: sig12(e.value),
        ci: ci(e),
        samples: e.samples,
    }
}

impl Report {
    pub fn from_stats(stats: &RunStats) -> Self {
        let cfg = &stats.config_echo;
        let p = &cfg.params;
        let e1 = |tag| stats.e1_frequency_by_family.get(&tag).map(rate_entry);
        Report {
            config: ConfigEcho {
                mode: p.mode.as_str().to_string(),
                beta: sig12(p.beta.value()),
                n_states: p.n_states,
                test_fraction: sig12(p.test_fraction),
                set_size: p.set_size,
                seed: p.seed,
                trials: cfg.trials,
                format: match cfg.output_format {
                    OutputFormat::Json => "json".into(),
                    OutputFormat::Csv => "csv".into(),
                },
                out: cfg.output_path.as_ref().map(|o| o.display().to_string()),
                oracle: OracleInputs {
                    p1: sig12(prime_posterior_given_one(p.beta)),
                    p0: sig12(prime_posterior_given_zero(p.beta)),
                    accuracy: analytic_accuracy(p.beta, p.set_size).ok().map(sig12),
                },
            },
            seed: stats.seed_echo,
            trials_completed: stats.trials_completed,
            retried_sessions: stats.retried_sessions,
            abort_rate: sig12(stats.abort_rate.value),
            abort_rate_ci: ci(&stats.abort_rate),
            guess_accuracy: stats.guess_accuracy.map(|e| sig12(e.value)),
            guess_accuracy_ci: stats.guess_accuracy.as_ref().map(ci),
            e1_freq_honest: e1(FamilyTag::Honest),
            e1_freq_prime: e1(FamilyTag::Prime),
            e1_freq_double_prime: e1(FamilyTag::DoublePrime),
            prime_fraction_rc: stats.mean_prime_fraction_rc.map(sig12),
            prime_fraction_other: stats.mean_prime_fraction_other.map(sig12),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParams(format!("bad report: {e}")))
    }

    fn csv_row(&self) -> Vec<String> {
        fn num(x: Option<f64>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        fn entry(e: &Option<RateEntry>) -> [String; 4] {
            match e {
                Some(e) => [
                    e.value.to_string(),
                    e.ci[0].to_string(),
                    e.ci[1].to_string(),
                    e.samples.to_string(),
                ],
                None => Default::default(),
            }
        }
        let c = &self.config;
        let mut row = vec![
            c.mode.clone(),
            c.beta.to_string(),
            c.n_states.to_string(),
            c.test_fraction.to_string(),
            c.set_size.to_string(),
            c.trials.to_string(),
            self.seed.to_string(),
            self.trials_completed.to_string(),
            self.retried_sessions.to_string(),
            self.abort_rate.to_string(),
            self.abort_rate_ci[0].to_string(),
            self.abort_rate_ci[1].to_string(),
            num(self.guess_accuracy),
            num(self.guess_accuracy_ci.map(|c| c[0])),
            num(self.guess_accuracy_ci.map(|c| c[1])),
        ];
        row.extend(entry(&self.e1_freq_honest));
        row.extend(entry(&self.e1_freq_prime));
        row.extend(entry(&self.e1_freq_double_prime));
        row.extend([
            num(self.prime_fraction_rc),
            num(self.prime_fraction_other),
            c.oracle.p1.to_string(),
            c.oracle.p0.to_string(),
            num(c.oracle.accuracy),
            c.format.clone(),
            c.out.clone().unwrap_or_default(),
        ]);
        row
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER).expect("in-memory write");
        writer.write_record(self.csv_row()).expect("in-memory write");
        let bytes = writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }
}

/// Serializes stats in the requested format.
pub fn emit_report(stats: &RunStats, format: OutputFormat) -> String {
    let report = Report::from_stats(stats);
    match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    }
}

pub fn write_report(text: &str, path: &Path) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
