//! Analytic predictions for the two-photon singlet polarization state and
//! the CHSH combination algebra.
//!
//! Correlators use the convention `E(α, β) = −v·cos 2(α − β)`, with both
//! analyzers rotating in the same sense. Under that convention the
//! "which correlator carries the minus sign" choice matters, so every
//! CHSH evaluation here is parameterised by a [`ChshGrouping`] and callers
//! that want a convention-free number use [`chsh_max_grouping`].

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Tolerance used when checking that four probabilities sum to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("visibility must lie in [0, 1], got {0}")]
    VisibilityOutOfRange(f64),
    #[error("grouping index must be in 0..4, got {0}")]
    GroupingOutOfRange(usize),
    #[error("correlator {index} = {value} lies outside [-1, 1]")]
    CorrelatorOutOfRange { index: usize, value: f64 },
}

/// A polarization analyzer angle.
///
/// Stored in radians and normalized to `[0, π)`: a polarizer rotated by π
/// measures the same observable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub fn from_radians(radians: f64) -> Result<Self, ModelError> {
        if !radians.is_finite() {
            return Err(ModelError::NonFiniteAngle(radians));
        }
        let mut r = radians.rem_euclid(PI);
        // rem_euclid can round up to exactly PI for tiny negative inputs.
        if r >= PI {
            r = 0.0;
        }
        Ok(Angle(r))
    }

    pub fn from_degrees(degrees: f64) -> Result<Self, ModelError> {
        if !degrees.is_finite() {
            return Err(ModelError::NonFiniteAngle(degrees));
        }
        Self::from_radians(degrees.to_radians())
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees())
    }
}

/// Analyzer settings: two angles for each station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsPair {
    pub alice: [Angle; 2],
    pub bob: [Angle; 2],
}

impl SettingsPair {
    pub fn new(a0: Angle, a1: Angle, b0: Angle, b1: Angle) -> Self {
        SettingsPair {
            alice: [a0, a1],
            bob: [b0, b1],
        }
    }

    pub fn from_degrees(a0: f64, a1: f64, b0: f64, b1: f64) -> Result<Self, ModelError> {
        Ok(Self::new(
            Angle::from_degrees(a0)?,
            Angle::from_degrees(a1)?,
            Angle::from_degrees(b0)?,
            Angle::from_degrees(b1)?,
        ))
    }

    /// Analyzer angles 0°, 45° (Alice) and 22.5°, 67.5° (Bob).
    pub fn zw() -> Self {
        Self::from_degrees(0.0, 45.0, 22.5, 67.5).expect("finite angles")
    }

    /// Angles for setting indices `(alice_index, bob_index)`.
    pub fn angles(&self, alice_index: usize, bob_index: usize) -> (Angle, Angle) {
        (self.alice[alice_index], self.bob[bob_index])
    }

    /// Warnings for degenerate configurations (a station whose two
    /// settings coincide cannot violate CHSH).
    pub fn diagnostics(&self) -> Vec<String> {
        // Compare on the circle so 0 and π−ε count as equal.
        let same = |a: Angle, b: Angle| {
            let d = (a.radians() - b.radians()).abs();
            d.min(PI - d) < 1e-12
        };
        let mut warnings = Vec::new();
        if same(self.alice[0], self.alice[1]) {
            warnings.push(format!(
                "degenerate settings: alice uses {} for both settings",
                self.alice[0]
            ));
        }
        if same(self.bob[0], self.bob[1]) {
            warnings.push(format!(
                "degenerate settings: bob uses {} for both settings",
                self.bob[0]
            ));
        }
        warnings
    }
}

/// Degradation of the ideal correlator, `E → v·E`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Visibility(f64);

impl Visibility {
    pub const PERFECT: Visibility = Visibility(1.0);

    pub fn new(v: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&v) {
            Ok(Visibility(v))
        } else {
            Err(ModelError::VisibilityOutOfRange(v))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probabilities of the four coincidence outcomes `(+,+)`, `(+,−)`,
/// `(−,+)`, `(−,−)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOutcomeDistribution {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointOutcomeDistribution {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    pub fn total(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    pub fn is_normalized(&self) -> bool {
        self.as_array().iter().all(|p| (0.0..=1.0).contains(p))
            && (self.total() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// `P(++) + P(−−) − P(+−) − P(−+)`.
    pub fn correlator(&self) -> f64 {
        self.p_pp + self.p_mm - self.p_pm - self.p_mp
    }
}

pub fn singlet_joint_probabilities(
    alpha: Angle,
    beta: Angle,
    v: Visibility,
) -> JointOutcomeDistribution {
    let c = v.value() * (2.0 * (alpha.radians() - beta.radians())).cos();
    let same = (1.0 - c) / 4.0;
    let different = (1.0 + c) / 4.0;
    JointOutcomeDistribution {
        p_pp: same,
        p_pm: different,
        p_mp: different,
        p_mm: same,
    }
}

/// `−v·cos 2(α − β)`.
pub fn ideal_correlator(alpha: Angle, beta: Angle, v: Visibility) -> f64 {
    singlet_joint_probabilities(alpha, beta, v).correlator()
}

/// Ideal correlators for the four setting pairs, ordered
/// `E(a0,b0), E(a0,b1), E(a1,b0), E(a1,b1)`.
pub fn ideal_correlators(settings: &SettingsPair, v: Visibility) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (pair, e) in out.iter_mut().enumerate() {
        let (a, b) = settings.angles(pair / 2, pair % 2);
        *e = ideal_correlator(a, b, v);
    }
    out
}

/// Which of the four correlators carries the minus sign in the CHSH
/// combination. Positions follow the `e00, e01, e10, e11` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChshGrouping(u8);

impl ChshGrouping {
    pub const ALL: [ChshGrouping; 4] = [
        ChshGrouping(0),
        ChshGrouping(1),
        ChshGrouping(2),
        ChshGrouping(3),
    ];

    pub fn new(minus_position: usize) -> Result<Self, ModelError> {
        if minus_position < 4 {
            Ok(ChshGrouping(minus_position as u8))
        } else {
            Err(ModelError::GroupingOutOfRange(minus_position))
        }
    }

    #[inline]
    pub fn minus_position(self) -> usize {
        self.0 as usize
    }

    /// Label such as `e01`.
    pub fn label(self) -> &'static str {
        ["e00", "e01", "e10", "e11"][self.minus_position()]
    }
}

impl fmt::Display for ChshGrouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "minus on {}", self.label())
    }
}

fn check_correlators(e: &[f64; 4]) -> Result<(), ModelError> {
    for (index, &value) in e.iter().enumerate() {
        if !(-1.0..=1.0).contains(&value) {
            return Err(ModelError::CorrelatorOutOfRange { index, value });
        }
    }
    Ok(())
}

/// CHSH value with a single minus sign on the selected correlator:
/// `|e00 + e01 + e10 + e11 − 2·e_k|`.
pub fn chsh_value(e: [f64; 4], grouping: ChshGrouping) -> Result<f64, ModelError> {
    check_correlators(&e)?;
    let k = grouping.minus_position();
    let signed: f64 = e
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == k { -v } else { v })
        .sum();
    Ok(signed.abs())
}

/// The combination exactly as it is usually printed,
/// `|E(a0,b0) − E(a1,b1)| + |E(a0,b1) + E(a1,b0)|`.
///
/// This equals the larger of the groupings with the minus sign on `e00`
/// and on `e11`.
pub fn chsh_printed_form(e: [f64; 4]) -> Result<f64, ModelError> {
    check_correlators(&e)?;
    Ok((e[0] - e[3]).abs() + (e[1] + e[2]).abs())
}

/// Maximum CHSH value over the four groupings; ties go to the lowest index.
pub fn chsh_max_grouping(e: [f64; 4]) -> Result<(f64, ChshGrouping), ModelError> {
    let mut best = (f64::NEG_INFINITY, ChshGrouping(0));
    for g in ChshGrouping::ALL {
        let s = chsh_value(e, g)?;
        if s > best.0 {
            best = (s, g);
        }
    }
    Ok(best)
}

/// All four grouping values in index order.
pub fn chsh_all_groupings(e: [f64; 4]) -> Result<[f64; 4], ModelError> {
    let mut out = [0.0; 4];
    for g in ChshGrouping::ALL {
        out[g.minus_position()] = chsh_value(e, g)?;
    }
    Ok(out)
}
