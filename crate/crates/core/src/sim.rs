//! Trial-level Monte Carlo of a two-station polarization Bell experiment.
//!
//! Each trial emits one pair. Both stations pick a setting uniformly at
//! random, the configured source model assigns each photon to its `+` or
//! `−` detector (or to nothing), the photon survives its arm and detector
//! with probability `transmission × efficiency`, and each of the four
//! detectors may dark-fire independently.
//!
//! Trials are generated in fixed-size chunks; chunk `k` draws from
//! substreams keyed by `(seed, k)`, so the log is identical for any number
//! of worker threads.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::ConfigError;
use crate::eventlog::{EventLog, LogHeader, TrialRecord, Validity};
use crate::lhv::{
    sample_deterministic_trial, sample_lhv_trial, DetectionLoopholeModel, DeterministicStrategy,
    LhvTrialOutcome,
};
use crate::model::{singlet_joint_probabilities, Angle, SettingsPair, Visibility};
use crate::outcome::{Outcome, Sign};
use crate::rng::{substream, StreamRole, TrialStreams};

/// Trials per parallel work unit. Part of the reproducibility contract:
/// changing it changes every simulated log.
pub const CHUNK_TRIALS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceModel {
    Quantum(Visibility),
    DetectionLoophole(DetectionLoopholeModel),
    Deterministic(DeterministicStrategy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Analyzer angles in degrees, `[alpha, alpha', beta, beta']`,
    /// normalized to `[0, 180)`.
    pub angles_degrees: [f64; 4],
    pub model: SourceModel,
    pub arm_transmission: [f64; 2],
    pub detector_efficiency: [f64; 2],
    pub dark_count_prob: f64,
    pub n_trials: u64,
    pub seed: u64,
    /// Free-text description carried into logs and reports.
    pub label: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            angles_degrees: [0.0, 45.0, 22.5, 67.5],
            model: SourceModel::Quantum(Visibility::PERFECT),
            arm_transmission: [1.0, 1.0],
            detector_efficiency: [1.0, 1.0],
            dark_count_prob: 0.0,
            n_trials: 1_000_000,
            seed: 0,
            label: String::new(),
        }
    }
}

fn check_probability(field: &str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::field(field, format!("must be a probability in [0, 1], got {p}")))
    }
}

impl ExperimentConfig {
    pub fn settings(&self) -> SettingsPair {
        let [a0, a1, b0, b1] = self.angles_degrees;
        SettingsPair::from_degrees(a0, a1, b0, b1).expect("angles validated on construction")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        const ANGLE_KEYS: [&str; 4] = ["alpha", "alpha_prime", "beta", "beta_prime"];
        for (key, a) in ANGLE_KEYS.iter().zip(self.angles_degrees) {
            if !a.is_finite() {
                return Err(ConfigError::field(key, format!("angle must be finite, got {a}")));
            }
        }
        if let SourceModel::Quantum(v) = self.model {
            check_probability("visibility", v.value())?;
        }
        check_probability("arm_transmission_a", self.arm_transmission[0])?;
        check_probability("arm_transmission_b", self.arm_transmission[1])?;
        check_probability("detector_efficiency_a", self.detector_efficiency[0])?;
        check_probability("detector_efficiency_b", self.detector_efficiency[1])?;
        check_probability("dark_count_prob", self.dark_count_prob)?;
        if self.n_trials == 0 {
            return Err(ConfigError::field("n_trials", "must be at least 1"));
        }
        Ok(())
    }

    /// Probability that a photon routed to a station reaches a detector and
    /// registers: independent arm and detector survival.
    pub fn survival(&self) -> [f64; 2] {
        [
            self.arm_transmission[0] * self.detector_efficiency[0],
            self.arm_transmission[1] * self.detector_efficiency[1],
        ]
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

/// What one station's pair of detectors reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    Click(Sign),
    NoClick,
    DoubleFire,
}

/// Resolve one station's two detectors for a photon routed to `channel`.
///
/// The routed detector fires if the photon survives or on a dark count;
/// the other detector fires only on a dark count. Draws exactly three
/// uniforms regardless of outcome.
pub fn resolve_detection<R: Rng + ?Sized>(
    channel: Sign,
    survival: f64,
    dark_prob: f64,
    rng: &mut R,
) -> Detection {
    let survived = rng.gen::<f64>() < survival;
    let dark_routed = rng.gen::<f64>() < dark_prob;
    let dark_other = rng.gen::<f64>() < dark_prob;
    match (survived || dark_routed, dark_other) {
        (true, true) => Detection::DoubleFire,
        (true, false) => Detection::Click(channel),
        (false, true) => Detection::Click(channel.flip()),
        (false, false) => Detection::NoClick,
    }
}

fn resolve_side<R: Rng + ?Sized>(ideal: Outcome, survival: f64, dark: f64, rng: &mut R) -> Detection {
    match ideal.sign() {
        Some(channel) => resolve_detection(channel, survival, dark, rng),
        // Nothing arrives; only dark counts can fire.
        None => resolve_detection(Sign::Plus, 0.0, dark, rng),
    }
}

fn sample_singlet<R: Rng + ?Sized>(alpha: Angle, beta: Angle, v: Visibility, rng: &mut R) -> LhvTrialOutcome {
    let d = singlet_joint_probabilities(alpha, beta, v);
    let u: f64 = rng.gen();
    let (alice, bob) = if u < d.p_pp {
        (Sign::Plus, Sign::Plus)
    } else if u < d.p_pp + d.p_pm {
        (Sign::Plus, Sign::Minus)
    } else if u < d.p_pp + d.p_pm + d.p_mp {
        (Sign::Minus, Sign::Plus)
    } else {
        (Sign::Minus, Sign::Minus)
    };
    LhvTrialOutcome {
        alice: alice.into(),
        bob: bob.into(),
    }
}

fn run_chunk(config: &ExperimentConfig, settings: &SettingsPair, chunk: u64) -> Vec<TrialRecord> {
    let start = chunk * CHUNK_TRIALS;
    let end = (start + CHUNK_TRIALS).min(config.n_trials);
    let mut alice_setting = substream(config.seed, chunk, StreamRole::AliceSetting);
    let mut bob_setting = substream(config.seed, chunk, StreamRole::BobSetting);
    let mut streams = TrialStreams::for_chunk(config.seed, chunk);
    let survival = config.survival();
    let dark = config.dark_count_prob;

    (start..end)
        .map(|trial_id| {
            let a_set = usize::from(alice_setting.gen::<bool>());
            let b_set = usize::from(bob_setting.gen::<bool>());
            let (alpha, beta) = settings.angles(a_set, b_set);
            let ideal = match &config.model {
                SourceModel::Quantum(v) => sample_singlet(alpha, beta, *v, &mut streams.source),
                SourceModel::DetectionLoophole(m) => sample_lhv_trial(m, alpha, beta, &mut streams),
                SourceModel::Deterministic(s) => sample_deterministic_trial(s, a_set, b_set),
            };
            let alice = resolve_side(ideal.alice, survival[0], dark, &mut streams.alice);
            let bob = resolve_side(ideal.bob, survival[1], dark, &mut streams.bob);

            let as_outcome = |d: Detection| match d {
                Detection::Click(s) => Outcome::from(s),
                Detection::NoClick | Detection::DoubleFire => Outcome::None,
            };
            let validity = if alice == Detection::DoubleFire || bob == Detection::DoubleFire {
                Validity::DoubleFire
            } else {
                Validity::Ok
            };
            TrialRecord {
                trial_id,
                alice_setting: a_set as u8,
                bob_setting: b_set as u8,
                alice_outcome: as_outcome(alice),
                bob_outcome: as_outcome(bob),
                validity,
            }
        })
        .collect()
}

/// Simulate `config.n_trials` trials on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EventLog, SimError> {
    config.validate()?;
    let settings = config.settings();
    let n_chunks = config.n_trials.div_ceil(CHUNK_TRIALS);
    let chunks: Vec<Vec<TrialRecord>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| run_chunk(config, &settings, chunk))
        .collect();
    let mut records = Vec::with_capacity(config.n_trials as usize);
    for chunk in chunks {
        records.extend(chunk);
    }
    Ok(EventLog {
        header: LogHeader::for_config(config),
        records,
    })
}

/// As [`run_experiment`], on a dedicated pool of `threads` workers
/// (`0` = rayon's default). The log does not depend on `threads`.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<EventLog, SimError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    pool.install(|| run_experiment(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(model: SourceModel, n: u64) -> ExperimentConfig {
        ExperimentConfig {
            model,
            n_trials: n,
            seed: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn resolve_detection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert_eq!(resolve_detection(Sign::Plus, 1.0, 0.0, &mut rng), Detection::Click(Sign::Plus));
            assert_eq!(resolve_detection(Sign::Plus, 0.0, 0.0, &mut rng), Detection::NoClick);
            assert_eq!(resolve_detection(Sign::Minus, 0.0, 1.0, &mut rng), Detection::DoubleFire);
            assert_eq!(resolve_detection(Sign::Minus, 1.0, 1.0, &mut rng), Detection::DoubleFire);
        }
    }

    #[test]
    fn dark_only_fires_the_other_channel_half_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mut other = 0;
        for _ in 0..n {
            if resolve_detection(Sign::Plus, 0.0, 0.5, &mut rng) == Detection::Click(Sign::Minus) {
                other += 1;
            }
        }
        // P(other only) = 0.5 · 0.5
        let p = other as f64 / n as f64;
        assert!((p - 0.25).abs() < 5.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }

    #[test]
    fn rejects_invalid_configs_before_running() {
        let mut c = small(SourceModel::Quantum(Visibility::PERFECT), 10);
        c.detector_efficiency[1] = 1.2;
        let err = run_experiment(&c).unwrap_err().to_string();
        assert!(err.contains("detector_efficiency_b"), "{err}");

        let mut c = small(SourceModel::Quantum(Visibility::PERFECT), 0);
        assert!(run_experiment(&c).unwrap_err().to_string().contains("n_trials"));
        c.n_trials = 5;
        c.dark_count_prob = f64::NAN;
        assert!(run_experiment(&c).is_err());
        c.dark_count_prob = 0.0;
        c.angles_degrees[2] = f64::INFINITY;
        assert!(run_experiment(&c).unwrap_err().to_string().contains("beta"));
    }

    #[test]
    fn equal_angles_perfectly_anticorrelate() {
        let mut c = small(SourceModel::Quantum(Visibility::PERFECT), 50_000);
        c.angles_degrees = [30.0; 4];
        let log = run_experiment(&c).unwrap();
        assert_eq!(log.records.len(), 50_000);
        for r in &log.records {
            assert!(r.alice_outcome.is_detected());
            assert_eq!(r.alice_outcome.value(), -r.bob_outcome.value());
        }
    }

    #[test]
    fn trial_ids_are_sequential_across_chunks() {
        let log = run_experiment(&small(SourceModel::Quantum(Visibility::PERFECT), 3 * CHUNK_TRIALS + 17)).unwrap();
        for (i, r) in log.records.iter().enumerate() {
            assert_eq!(r.trial_id, i as u64);
        }
    }

    #[test]
    fn same_seed_same_log_and_thread_count_is_irrelevant() {
        let c = small(
            SourceModel::DetectionLoophole(DetectionLoopholeModel::ONE_SIDED),
            2 * CHUNK_TRIALS + 5,
        );
        let one = run_experiment_with_threads(&c, 1).unwrap();
        let four = run_experiment_with_threads(&c, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, run_experiment(&c).unwrap());
        let mut other = c.clone();
        other.seed += 1;
        assert_ne!(one.records, run_experiment(&other).unwrap().records);
    }

    #[test]
    fn double_fires_are_marked() {
        let mut c = small(SourceModel::Quantum(Visibility::PERFECT), 1000);
        c.dark_count_prob = 1.0;
        let log = run_experiment(&c).unwrap();
        assert!(log.records.iter().all(|r| r.validity == Validity::DoubleFire));
    }

    #[test]
    fn deterministic_model_reads_its_table() {
        let strategy: DeterministicStrategy = "+--+".parse().unwrap();
        let log = run_experiment(&small(SourceModel::Deterministic(strategy), 1000)).unwrap();
        for r in &log.records {
            assert_eq!(Some(r.alice_outcome.sign().unwrap()), Some(strategy.alice[r.alice_setting as usize]));
            assert_eq!(Some(r.bob_outcome.sign().unwrap()), Some(strategy.bob[r.bob_setting as usize]));
        }
    }
}
