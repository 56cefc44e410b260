//! Local-hidden-variable trial generators.
//!
//! Two families live here. [`DeterministicStrategy`] tables assign a fixed
//! ±1 output to each local setting; enumerating all of them gives the
//! classical CHSH bound. [`DetectionLoopholeModel`] is a local model with
//! setting-dependent non-detection: analyzed on coincidences only it
//! reproduces the singlet correlator exactly, yet it is local by
//! construction.
//!
//! In the detection-loophole model a hidden angle `θ` is drawn uniformly
//! on `[0, 2π)` for every pair. Alice answers `sign(cos(θ − 2α))` and always
//! detects. Bob answers `−sign(cos(θ − 2β))` and detects with probability
//! `|cos(θ − 2β)|`. Each station sees only its own setting, `θ`, and its own
//! private randomness.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::model::{chsh_max_grouping, chsh_printed_form, chsh_value, Angle, ChshGrouping};
use crate::outcome::{Outcome, Sign};
use crate::rng::TrialStreams;

/// Outcomes of one trial, `Outcome::None` marking non-detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LhvTrialOutcome {
    pub alice: Outcome,
    pub bob: Outcome,
}

/// Fixed ±1 answers for each station's two settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub alice: [Sign; 2],
    pub bob: [Sign; 2],
}

impl DeterministicStrategy {
    /// All 16 strategies (4 Alice tables × 4 Bob tables).
    pub fn all() -> impl Iterator<Item = DeterministicStrategy> {
        (0u8..16).map(|bits| {
            let s = |i: u8| Sign::from_bool(bits >> i & 1 == 0);
            DeterministicStrategy {
                alice: [s(0), s(1)],
                bob: [s(2), s(3)],
            }
        })
    }

    /// Exact correlators `a(x)·b(y)` ordered `e00, e01, e10, e11`.
    pub fn correlators(&self) -> [f64; 4] {
        let mut e = [0.0; 4];
        for (pair, slot) in e.iter_mut().enumerate() {
            *slot = f64::from(self.alice[pair / 2].value() * self.bob[pair % 2].value());
        }
        e
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |s: Sign| if s == Sign::Plus { '+' } else { '-' };
        write!(
            f,
            "{}{}{}{}",
            c(self.alice[0]),
            c(self.alice[1]),
            c(self.bob[0]),
            c(self.bob[1])
        )
    }
}

impl FromStr for DeterministicStrategy {
    type Err = String;

    /// Four characters from `{+, -}`: Alice's answers for settings 0 and 1,
    /// then Bob's.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let signs: Vec<Sign> = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(format!("invalid strategy symbol {other:?}, expected '+' or '-'")),
            })
            .collect::<Result<_, _>>()?;
        if signs.len() != 4 {
            return Err(format!(
                "strategy table needs 4 symbols (alice0 alice1 bob0 bob1), got {}",
                signs.len()
            ));
        }
        Ok(DeterministicStrategy {
            alice: [signs[0], signs[1]],
            bob: [signs[2], signs[3]],
        })
    }
}

pub fn sample_deterministic_trial(
    strategy: &DeterministicStrategy,
    alice_setting_index: usize,
    bob_setting_index: usize,
) -> LhvTrialOutcome {
    LhvTrialOutcome {
        alice: strategy.alice[alice_setting_index].into(),
        bob: strategy.bob[bob_setting_index].into(),
    }
}

/// What a CHSH bound is maximized over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChshObjective {
    /// Best of the four groupings.
    MaxGrouping,
    Grouping(ChshGrouping),
    /// `|e00 − e11| + |e01 + e10|`.
    Printed,
}

impl ChshObjective {
    pub fn evaluate(self, e: [f64; 4]) -> f64 {
        let s = match self {
            ChshObjective::MaxGrouping => chsh_max_grouping(e).map(|(s, _)| s),
            ChshObjective::Grouping(g) => chsh_value(e, g),
            ChshObjective::Printed => chsh_printed_form(e),
        };
        s.expect("deterministic correlators are ±1")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicBound {
    pub max_s: f64,
    pub strategies_evaluated: usize,
    /// First strategy (in enumeration order) attaining the maximum.
    pub witness: DeterministicStrategy,
}

pub fn deterministic_bound(objective: ChshObjective) -> DeterministicBound {
    let mut best: Option<(f64, DeterministicStrategy)> = None;
    let mut count = 0;
    for strategy in DeterministicStrategy::all() {
        count += 1;
        let s = objective.evaluate(strategy.correlators());
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, strategy));
        }
    }
    let (max_s, witness) = best.expect("strategy set is non-empty");
    DeterministicBound {
        max_s,
        strategies_evaluated: count,
        witness,
    }
}

/// Largest CHSH value reachable by any deterministic local strategy.
pub fn enumerate_deterministic_chsh_bound() -> f64 {
    deterministic_bound(ChshObjective::MaxGrouping).max_s
}

/// A station's answer to a given hidden angle before the detection draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalResponse {
    pub channel: Sign,
    pub detection_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionLoopholeModel {
    /// Apply the `|cos|` detection rule on Alice's side as well.
    pub symmetric: bool,
}

impl DetectionLoopholeModel {
    pub const ONE_SIDED: DetectionLoopholeModel = DetectionLoopholeModel { symmetric: false };
    pub const SYMMETRIC: DetectionLoopholeModel = DetectionLoopholeModel { symmetric: true };

    pub fn alice_response(&self, theta: f64, alpha: Angle) -> LocalResponse {
        let c = (theta - 2.0 * alpha.radians()).cos();
        LocalResponse {
            channel: Sign::from_bool(c >= 0.0),
            detection_probability: if self.symmetric { c.abs() } else { 1.0 },
        }
    }

    pub fn bob_response(&self, theta: f64, beta: Angle) -> LocalResponse {
        let c = (theta - 2.0 * beta.radians()).cos();
        LocalResponse {
            channel: Sign::from_bool(c >= 0.0).flip(),
            detection_probability: c.abs(),
        }
    }
}

fn detect<R: Rng + ?Sized>(response: LocalResponse, rng: &mut R) -> Outcome {
    // Always one draw, so each station's stream advances identically per trial.
    let u: f64 = rng.gen();
    if u < response.detection_probability {
        response.channel.into()
    } else {
        Outcome::None
    }
}

/// One trial with the hidden angle already fixed.
pub fn sample_lhv_trial_given_theta<R: Rng + ?Sized>(
    model: &DetectionLoopholeModel,
    alice_setting: Angle,
    bob_setting: Angle,
    theta: f64,
    alice_rng: &mut R,
    bob_rng: &mut R,
) -> LhvTrialOutcome {
    LhvTrialOutcome {
        alice: detect(model.alice_response(theta, alice_setting), alice_rng),
        bob: detect(model.bob_response(theta, bob_setting), bob_rng),
    }
}

pub fn sample_lhv_trial<R: Rng>(
    model: &DetectionLoopholeModel,
    alice_setting: Angle,
    bob_setting: Angle,
    streams: &mut TrialStreams<R>,
) -> LhvTrialOutcome {
    let theta = streams.source.gen::<f64>() * TAU;
    sample_lhv_trial_given_theta(
        model,
        alice_setting,
        bob_setting,
        theta,
        &mut streams.alice,
        &mut streams.bob,
    )
}
