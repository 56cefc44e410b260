//! Counts tables, correlator estimates and CHSH significance reports.
//!
//! Two correlator estimators are provided. The fair-sampling estimator
//! normalizes by coincidences only, which is what photon experiments
//! report. The inclusive estimator keeps every valid trial, scoring a
//! non-detection as `0` in the product `j_A·j_B`; it is the one whose CHSH
//! value is bounded by 2 for any local model.
//!
//! Standard errors are binomial per correlator and combine into `S` by
//! root-sum-square.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::eventlog::{EventLog, TrialRecord, Validity};
use crate::model::{chsh_all_groupings, chsh_max_grouping, chsh_printed_form, ChshGrouping};
use crate::outcome::Outcome;
use crate::report::{fmt_fixed, KvDocument};

/// A pair of setting indices `(alice, bob)`, each 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SettingChoice {
    pub alice: u8,
    pub bob: u8,
}

impl SettingChoice {
    pub const ALL: [SettingChoice; 4] = [
        SettingChoice { alice: 0, bob: 0 },
        SettingChoice { alice: 0, bob: 1 },
        SettingChoice { alice: 1, bob: 0 },
        SettingChoice { alice: 1, bob: 1 },
    ];

    pub fn index(self) -> usize {
        2 * self.alice as usize + self.bob as usize
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }
}

impl fmt::Display for SettingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}b{}", self.alice, self.bob)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    FairSampling,
    Inclusive,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FairSampling => "fair_sampling",
            Mode::Inclusive => "inclusive",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fair" | "fair_sampling" => Ok(Mode::FairSampling),
            "inclusive" => Ok(Mode::Inclusive),
            other => Err(format!("unknown mode {other:?}, expected fair or inclusive")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimateError {
    #[error("no {what} for setting pair {pair}")]
    NoData { pair: SettingChoice, what: &'static str },
}

/// Outcome counts per setting pair.
///
/// `cells[pair][a][b]` counts valid trials with Alice's outcome index `a`
/// and Bob's `b` (see [`Outcome::index`]). Double-fire trials are counted
/// only in `double_fire`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountsTable {
    pub cells: [[[u64; 3]; 3]; 4],
    pub double_fire: [u64; 4],
}

impl CountsTable {
    pub fn add_record(&mut self, r: &TrialRecord) {
        let pair = r.setting_pair();
        match r.validity {
            Validity::Ok => self.cells[pair][r.alice_outcome.index()][r.bob_outcome.index()] += 1,
            Validity::DoubleFire => self.double_fire[pair] += 1,
        }
    }

    pub fn add(&mut self, pair: SettingChoice, alice: Outcome, bob: Outcome, count: u64) {
        self.cells[pair.index()][alice.index()][bob.index()] += count;
    }

    /// Table for one setting pair holding the four coincidence counts
    /// `(N++, N+−, N−+, N−−)`.
    pub fn with_coincidences(pair: SettingChoice, counts: [u64; 4]) -> Self {
        let mut t = CountsTable::default();
        t.add(pair, Outcome::Plus, Outcome::Plus, counts[0]);
        t.add(pair, Outcome::Plus, Outcome::Minus, counts[1]);
        t.add(pair, Outcome::Minus, Outcome::Plus, counts[2]);
        t.add(pair, Outcome::Minus, Outcome::Minus, counts[3]);
        t
    }

    pub fn count(&self, pair: SettingChoice, alice: Outcome, bob: Outcome) -> u64 {
        self.cells[pair.index()][alice.index()][bob.index()]
    }

    pub fn merge(&mut self, other: &CountsTable) {
        for p in 0..4 {
            for a in 0..3 {
                for b in 0..3 {
                    self.cells[p][a][b] += other.cells[p][a][b];
                }
            }
            self.double_fire[p] += other.double_fire[p];
        }
    }

    pub fn valid_trials(&self, pair: SettingChoice) -> u64 {
        self.cells[pair.index()].iter().flatten().sum()
    }

    /// Trials where both stations registered a ±1 outcome.
    pub fn coincidences(&self, pair: SettingChoice) -> u64 {
        let c = &self.cells[pair.index()];
        c[0][0] + c[0][1] + c[1][0] + c[1][1]
    }

    pub fn trials(&self, pair: SettingChoice) -> u64 {
        self.valid_trials(pair) + self.double_fire[pair.index()]
    }

    pub fn total_trials(&self) -> u64 {
        SettingChoice::ALL.iter().map(|&p| self.trials(p)).sum()
    }

    /// `N++ + N−− − N+− − N−+`
    fn product_sum(&self, pair: SettingChoice) -> i64 {
        let c = &self.cells[pair.index()];
        (c[0][0] + c[1][1]) as i64 - (c[0][1] + c[1][0]) as i64
    }
}

const TABULATE_CHUNK: usize = 1 << 16;

/// Count every trial of `log`. Double fires go to the exclusion column.
pub fn tabulate(log: &EventLog) -> CountsTable {
    log.records
        .par_chunks(TABULATE_CHUNK)
        .map(|chunk| {
            let mut t = CountsTable::default();
            chunk.iter().for_each(|r| t.add_record(r));
            t
        })
        .reduce(CountsTable::default, |mut a, b| {
            a.merge(&b);
            a
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_effective: u64,
}

/// Coincidence-normalized correlator
/// `(N++ + N−− − N+− − N−+) / (N++ + N−− + N+− + N−+)`.
pub fn fair_sampling_correlator(
    table: &CountsTable,
    pair: SettingChoice,
) -> Result<CorrelatorEstimate, EstimateError> {
    let n = table.coincidences(pair);
    if n == 0 {
        return Err(EstimateError::NoData { pair, what: "coincidences" });
    }
    let n_f = n as f64;
    let value = table.product_sum(pair) as f64 / n_f;
    Ok(CorrelatorEstimate {
        value,
        stderr: ((1.0 - value * value).max(0.0) / n_f).sqrt(),
        n_effective: n,
    })
}

/// Mean of `j_A·j_B` over all valid trials, non-detections scoring 0.
pub fn inclusive_correlator(
    table: &CountsTable,
    pair: SettingChoice,
) -> Result<CorrelatorEstimate, EstimateError> {
    let n = table.valid_trials(pair);
    if n == 0 {
        return Err(EstimateError::NoData { pair, what: "valid trials" });
    }
    let n_f = n as f64;
    let value = table.product_sum(pair) as f64 / n_f;
    // Var(j_A·j_B) = P(coincidence) − E²
    let second_moment = table.coincidences(pair) as f64 / n_f;
    Ok(CorrelatorEstimate {
        value,
        stderr: ((second_moment - value * value).max(0.0) / n_f).sqrt(),
        n_effective: n,
    })
}

pub fn correlator(
    table: &CountsTable,
    pair: SettingChoice,
    mode: Mode,
) -> Result<CorrelatorEstimate, EstimateError> {
    match mode {
        Mode::FairSampling => fair_sampling_correlator(table, pair),
        Mode::Inclusive => inclusive_correlator(table, pair),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshReport {
    pub mode: Mode,
    /// Ordered `a0b0, a0b1, a1b0, a1b1`.
    pub correlators: [CorrelatorEstimate; 4],
    /// S for each minus-sign position.
    pub groupings: [f64; 4],
    /// `|E(a0,b0) − E(a1,b1)| + |E(a0,b1) + E(a1,b0)|`.
    pub printed_form: f64,
    pub s_max: f64,
    pub max_grouping: ChshGrouping,
    pub stderr_s: f64,
    /// `(S_max − 2) / stderr_s`; `None` when the standard error is zero.
    pub sigma_excess: Option<f64>,
    pub trials: [u64; 4],
    pub coincidences: [u64; 4],
    pub double_fire: [u64; 4],
}

pub fn chsh_report(table: &CountsTable, mode: Mode) -> Result<ChshReport, EstimateError> {
    let mut correlators = [CorrelatorEstimate {
        value: 0.0,
        stderr: 0.0,
        n_effective: 0,
    }; 4];
    for pair in SettingChoice::ALL {
        correlators[pair.index()] = correlator(table, pair, mode)?;
    }
    let e = correlators.map(|c| c.value);
    // Estimates are ratios with |numerator| ≤ denominator, so always in range.
    let groupings = chsh_all_groupings(e).expect("estimated correlators lie in [-1, 1]");
    let (s_max, max_grouping) = chsh_max_grouping(e).expect("estimated correlators lie in [-1, 1]");
    let printed_form = chsh_printed_form(e).expect("estimated correlators lie in [-1, 1]");
    let stderr_s = correlators.iter().map(|c| c.stderr * c.stderr).sum::<f64>().sqrt();
    let sigma_excess = (stderr_s > 0.0).then(|| (s_max - 2.0) / stderr_s);
    Ok(ChshReport {
        mode,
        correlators,
        groupings,
        printed_form,
        s_max,
        max_grouping,
        stderr_s,
        sigma_excess,
        trials: SettingChoice::ALL.map(|p| table.trials(p)),
        coincidences: SettingChoice::ALL.map(|p| table.coincidences(p)),
        double_fire: table.double_fire,
    })
}

pub const ERROR_MODEL: &str = "binomial per correlator, root-sum-square into S";

impl ChshReport {
    pub fn to_document(&self, config_digest: Option<&str>) -> KvDocument {
        let mut doc = KvDocument::new("bellcheck chsh report");
        doc.push("mode", self.mode)
            .push("config_digest", config_digest.unwrap_or("none"))
            .push("error_model", ERROR_MODEL)
            .push("trials", self.trials.iter().sum::<u64>())
            .push("excluded_double_fire", self.double_fire.iter().sum::<u64>());
        for pair in SettingChoice::ALL {
            let i = pair.index();
            doc.push(format!("pair.{pair}.trials"), self.trials[i])
                .push(format!("pair.{pair}.coincidences"), self.coincidences[i])
                .push(format!("pair.{pair}.double_fire"), self.double_fire[i]);
        }
        for pair in SettingChoice::ALL {
            let c = &self.correlators[pair.index()];
            doc.push(format!("E.{pair}"), fmt_fixed(c.value))
                .push(format!("E.{pair}.stderr"), fmt_fixed(c.stderr))
                .push(format!("E.{pair}.n"), c.n_effective);
        }
        for g in ChshGrouping::ALL {
            doc.push(format!("S.minus_{}", g.label()), fmt_fixed(self.groupings[g.minus_position()]));
        }
        doc.push("S.printed_form", fmt_fixed(self.printed_form))
            .push("S.max", fmt_fixed(self.s_max))
            .push("S.max_grouping", format!("minus_{}", self.max_grouping.label()))
            .push("S.stderr", fmt_fixed(self.stderr_s))
            .push(
                "sigma_excess",
                self.sigma_excess.map_or_else(|| "undefined".to_string(), fmt_fixed),
            )
            .push("violates_2", self.s_max > 2.0);
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::LogHeader;
    use approx::assert_abs_diff_eq;

    const A0B0: SettingChoice = SettingChoice { alice: 0, bob: 0 };

    fn rec(id: u64, a: u8, b: u8, ao: Outcome, bo: Outcome, v: Validity) -> TrialRecord {
        TrialRecord {
            trial_id: id,
            alice_setting: a,
            bob_setting: b,
            alice_outcome: ao,
            bob_outcome: bo,
            validity: v,
        }
    }

    #[test]
    fn empty_log_gives_empty_table() {
        assert_eq!(tabulate(&EventLog::default()), CountsTable::default());
    }

    #[test]
    fn one_plus_plus_per_pair() {
        let records = SettingChoice::ALL
            .iter()
            .enumerate()
            .map(|(i, p)| rec(i as u64, p.alice, p.bob, Outcome::Plus, Outcome::Plus, Validity::Ok))
            .collect();
        let t = tabulate(&EventLog {
            header: LogHeader::default(),
            records,
        });
        for p in SettingChoice::ALL {
            assert_eq!(t.count(p, Outcome::Plus, Outcome::Plus), 1);
            assert_eq!(t.valid_trials(p), 1);
        }
    }

    #[test]
    fn double_fires_are_excluded_but_counted() {
        let log = EventLog {
            header: LogHeader::default(),
            records: vec![
                rec(0, 1, 0, Outcome::None, Outcome::Plus, Validity::DoubleFire),
                rec(1, 1, 0, Outcome::Minus, Outcome::None, Validity::Ok),
            ],
        };
        let t = tabulate(&log);
        let p = SettingChoice { alice: 1, bob: 0 };
        assert_eq!(t.double_fire[p.index()], 1);
        assert_eq!(t.valid_trials(p), 1);
        assert_eq!(t.trials(p), 2);
        assert_eq!(t.total_trials(), 2);
    }

    #[test]
    fn fair_sampling_examples() {
        let e = fair_sampling_correlator(&CountsTable::with_coincidences(A0B0, [100; 4]), A0B0).unwrap();
        assert_eq!((e.value, e.n_effective), (0.0, 400));
        assert_abs_diff_eq!(e.stderr, 0.05, epsilon = 1e-15);

        let e = fair_sampling_correlator(&CountsTable::with_coincidences(A0B0, [73, 427, 427, 73]), A0B0).unwrap();
        assert_abs_diff_eq!(e.value, -0.708, epsilon = 1e-15);

        let e = fair_sampling_correlator(&CountsTable::with_coincidences(A0B0, [50, 0, 0, 0]), A0B0).unwrap();
        assert_eq!((e.value, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn no_coincidences_is_an_error() {
        let mut t = CountsTable::default();
        t.add(A0B0, Outcome::Plus, Outcome::None, 10);
        let err = fair_sampling_correlator(&t, A0B0).unwrap_err();
        assert_eq!(err, EstimateError::NoData { pair: A0B0, what: "coincidences" });
        assert!(err.to_string().contains("a0b0"));
        assert!(inclusive_correlator(&CountsTable::default(), A0B0).is_err());
    }

    #[test]
    fn inclusive_matches_fair_without_non_detections() {
        let t = CountsTable::with_coincidences(A0B0, [73, 427, 427, 73]);
        let f = fair_sampling_correlator(&t, A0B0).unwrap();
        let i = inclusive_correlator(&t, A0B0).unwrap();
        assert_eq!(f.value.to_bits(), i.value.to_bits());
        assert_eq!(f.stderr.to_bits(), i.stderr.to_bits());
    }

    #[test]
    fn all_undetected_inclusive_is_zero() {
        let mut t = CountsTable::default();
        t.add(A0B0, Outcome::None, Outcome::None, 40);
        t.add(A0B0, Outcome::Plus, Outcome::None, 10);
        let e = inclusive_correlator(&t, A0B0).unwrap();
        assert_eq!((e.value, e.stderr, e.n_effective), (0.0, 0.0, 50));
    }

    #[test]
    fn inclusive_stderr_uses_second_moment() {
        let mut t = CountsTable::with_coincidences(A0B0, [30, 10, 10, 30]);
        t.add(A0B0, Outcome::None, Outcome::Minus, 20);
        let e = inclusive_correlator(&t, A0B0).unwrap();
        // z ∈ {+1 ×60, −1 ×20, 0 ×20}: mean 0.4, E[z²] 0.8
        assert_abs_diff_eq!(e.value, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(e.stderr, ((0.8 - 0.16) / 100.0f64).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn report_names_missing_pair() {
        let t = CountsTable::with_coincidences(A0B0, [1, 2, 3, 4]);
        let err = chsh_report(&t, Mode::FairSampling).unwrap_err();
        assert_eq!(
            err,
            EstimateError::NoData {
                pair: SettingChoice { alice: 0, bob: 1 },
                what: "coincidences"
            }
        );
    }

    #[test]
    fn report_from_exact_counts() {
        // Singlet-like counts at ZW angles: E ≈ ∓0.7, S_max on e01.
        let mut t = CountsTable::default();
        let anti = [15, 85, 85, 15];
        let corr = [85, 15, 15, 85];
        for (p, c) in SettingChoice::ALL.iter().zip([anti, corr, anti, anti]) {
            t.merge(&CountsTable::with_coincidences(*p, c));
        }
        let r = chsh_report(&t, Mode::FairSampling).unwrap();
        assert_abs_diff_eq!(r.s_max, 2.8, epsilon = 1e-12);
        assert_eq!(r.max_grouping.minus_position(), 1);
        // each stderr = sqrt(0.51/200)
        assert_abs_diff_eq!(r.stderr_s, 2.0 * (0.51f64 / 200.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.sigma_excess.unwrap(), 0.8 / r.stderr_s, epsilon = 1e-9);

        let doc = r.to_document(Some("abc"));
        assert_eq!(doc.get("S.max"), Some("2.800000"));
        assert_eq!(doc.get("S.max_grouping"), Some("minus_e01"));
        assert_eq!(doc.get("config_digest"), Some("abc"));
        assert_eq!(doc.get("trials"), Some("800"));
        assert_eq!(doc.get("mode"), Some("fair_sampling"));
    }

    #[test]
    fn zero_stderr_leaves_sigma_undefined() {
        let mut t = CountsTable::default();
        for p in SettingChoice::ALL {
            t.merge(&CountsTable::with_coincidences(p, [10, 0, 0, 0]));
        }
        let r = chsh_report(&t, Mode::FairSampling).unwrap();
        assert_eq!((r.s_max, r.stderr_s, r.sigma_excess), (2.0, 0.0, None));
        assert_eq!(r.to_document(None).get("sigma_excess"), Some("undefined"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("fair".parse::<Mode>().unwrap(), Mode::FairSampling);
        assert_eq!("inclusive".parse::<Mode>().unwrap(), Mode::Inclusive);
        assert!("all".parse::<Mode>().is_err());
    }
}
