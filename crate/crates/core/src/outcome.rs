//! Station outcomes.

use std::fmt;
use std::str::FromStr;

/// Which of a station's two detectors a photon is routed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// A recorded station output: `+1`, `−1`, or no detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
    None,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Plus, Outcome::Minus, Outcome::None];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
            Outcome::None => 0,
        }
    }

    /// Cell index used by counts tables: `+1 → 0`, `−1 → 1`, `0 → 2`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
            Outcome::None => 2,
        }
    }

    pub fn sign(self) -> Option<Sign> {
        match self {
            Outcome::Plus => Some(Sign::Plus),
            Outcome::Minus => Some(Sign::Minus),
            Outcome::None => None,
        }
    }

    pub fn is_detected(self) -> bool {
        self != Outcome::None
    }
}

impl From<Sign> for Outcome {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Plus => Outcome::Plus,
            Sign::Minus => Outcome::Minus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
            Outcome::None => "0",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+1" | "1" => Ok(Outcome::Plus),
            "-1" => Ok(Outcome::Minus),
            "0" => Ok(Outcome::None),
            other => Err(format!("invalid outcome {other:?}, expected +1, -1 or 0")),
        }
    }
}
