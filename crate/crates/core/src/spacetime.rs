//! Lightcone audits in 1+1 dimensions.
//!
//! Each station is described by the moment its setting choice starts and
//! the moment its output is fully recorded. The locality condition holds
//! when every choice event is spacelike-separated from the other station's
//! output event. The margin factor `|Δx| / (c·|Δt|)` says by how much: above
//! 1 the separation is spacelike, and its reciprocal is the deficit when it
//! is not.

use std::fmt;

use thiserror::Error;

use crate::config::{digest_entries, parse_key_values, ConfigError};
use crate::report::{fmt_fixed, fmt_sci, KvDocument};

/// Speed of light in vacuum, m/s (exact by definition of the metre).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative tolerance on `(c·Δt)² − Δx²` for declaring an interval null.
pub const LIGHTLIKE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeEvent {
    /// Laboratory time, seconds.
    pub t: f64,
    /// Position along the source–station axis, metres.
    pub x: f64,
}

impl SpacetimeEvent {
    pub fn new(t: f64, x: f64) -> Self {
        SpacetimeEvent { t, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Spacelike,
    Lightlike,
    Timelike,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Spacelike => "spacelike",
            Classification::Lightlike => "lightlike",
            Classification::Timelike => "timelike",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalVerdict {
    pub classification: Classification,
    /// `|Δx| / (c·|Δt|)`; `+∞` for simultaneous distinct events.
    pub margin_factor: f64,
    /// Both events coincide.
    pub degenerate: bool,
}

pub fn classify_interval(e1: SpacetimeEvent, e2: SpacetimeEvent) -> CausalVerdict {
    let dt = (e2.t - e1.t).abs();
    let dx = (e2.x - e1.x).abs();
    if dt == 0.0 && dx == 0.0 {
        return CausalVerdict {
            classification: Classification::Lightlike,
            margin_factor: 1.0,
            degenerate: true,
        };
    }
    let ct = SPEED_OF_LIGHT * dt;
    let margin_factor = if ct == 0.0 { f64::INFINITY } else { dx / ct };
    let (ct2, dx2) = (ct * ct, dx * dx);
    let interval = ct2 - dx2;
    let classification = if interval.abs() <= LIGHTLIKE_TOLERANCE * ct2.max(dx2) {
        Classification::Lightlike
    } else if interval < 0.0 {
        Classification::Spacelike
    } else {
        Classification::Timelike
    };
    CausalVerdict {
        classification,
        margin_factor,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimelineError {
    #[error("{station}: event coordinates must be finite")]
    NonFinite { station: String },
    #[error("{station}: output completes at {output} s, before the choice starts at {choice} s")]
    OutputBeforeChoice { station: String, choice: f64, output: f64 },
    #[error("{station}: choice and output positions differ by {offset} m, more than the station extent {extent} m")]
    OutsideExtent { station: String, offset: f64, extent: f64 },
    #[error("{station}: fiber speed {speed} m/s must be positive and at most c")]
    FiberSpeed { station: String, speed: f64 },
}

/// One station's choice and output events.
#[derive(Debug, Clone, PartialEq)]
pub struct StationTimeline {
    pub name: String,
    /// Earliest moment the setting choice starts.
    pub choice_start: SpacetimeEvent,
    /// Latest moment the output is recorded.
    pub output_complete: SpacetimeEvent,
    /// Signal speed in the feed fiber. Documentary; it does not affect the verdict.
    pub signal_speed_in_fiber: Option<f64>,
    /// Allowed spread between the two events' positions, metres.
    pub extent: f64,
}

impl StationTimeline {
    /// Point-like station at `x` whose choice starts at `t_choice` and
    /// whose output is complete at `t_output`.
    pub fn point(name: &str, x: f64, t_choice: f64, t_output: f64) -> Result<Self, TimelineError> {
        let timeline = StationTimeline {
            name: name.to_string(),
            choice_start: SpacetimeEvent::new(t_choice, x),
            output_complete: SpacetimeEvent::new(t_output, x),
            signal_speed_in_fiber: None,
            extent: 0.0,
        };
        timeline.validate()?;
        Ok(timeline)
    }

    pub fn validate(&self) -> Result<(), TimelineError> {
        let station = self.name.clone();
        let coords = [
            self.choice_start.t,
            self.choice_start.x,
            self.output_complete.t,
            self.output_complete.x,
            self.extent,
        ];
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(TimelineError::NonFinite { station });
        }
        if self.output_complete.t < self.choice_start.t {
            return Err(TimelineError::OutputBeforeChoice {
                station,
                choice: self.choice_start.t,
                output: self.output_complete.t,
            });
        }
        let offset = (self.output_complete.x - self.choice_start.x).abs();
        if offset > self.extent {
            return Err(TimelineError::OutsideExtent {
                station,
                offset,
                extent: self.extent,
            });
        }
        if let Some(speed) = self.signal_speed_in_fiber {
            if !(speed > 0.0 && speed <= SPEED_OF_LIGHT) {
                return Err(TimelineError::FiberSpeed { station, speed });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightconeAudit {
    /// Alice's choice against Bob's recorded output.
    pub alice_choice_to_bob_output: CausalVerdict,
    /// Bob's choice against Alice's recorded output.
    pub bob_choice_to_alice_output: CausalVerdict,
    pub pass: bool,
    pub min_margin: f64,
}

impl LightconeAudit {
    /// How far short of the spacelike condition the worse direction falls
    /// (`1 / min_margin`); below 1 when the audit passes.
    pub fn deficit_factor(&self) -> f64 {
        1.0 / self.min_margin
    }
}

pub fn lightcone_audit(alice: &StationTimeline, bob: &StationTimeline) -> LightconeAudit {
    let a_to_b = classify_interval(alice.choice_start, bob.output_complete);
    let b_to_a = classify_interval(bob.choice_start, alice.output_complete);
    let pass = a_to_b.classification == Classification::Spacelike
        && b_to_a.classification == Classification::Spacelike;
    LightconeAudit {
        alice_choice_to_bob_output: a_to_b,
        bob_choice_to_alice_output: b_to_a,
        pass,
        min_margin: a_to_b.margin_factor.min(b_to_a.margin_factor),
    }
}

/// Two station timelines read from a geometry file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGeometry {
    pub label: String,
    pub alice: StationTimeline,
    pub bob: StationTimeline,
    /// Canonical entries hashed into [`ExperimentGeometry::digest`].
    entries: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Syntax(#[from] ConfigError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// Parse a time in seconds, accepting `s`, `ms`, `us` and `ns` suffixes.
pub fn parse_time(value: &str) -> Option<f64> {
    let v = value.trim();
    let (number, scale) = [("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3), ("s", 1.0)]
        .iter()
        .find_map(|(suffix, scale)| v.strip_suffix(suffix).map(|n| (n, *scale)))
        .unwrap_or((v, 1.0));
    let x: f64 = number.trim().parse().ok()?;
    let t = x * scale;
    t.is_finite().then_some(t)
}

/// Parse a length in metres, accepting `m`, `mm`, `um` and `km` suffixes.
pub fn parse_length(value: &str) -> Option<f64> {
    let v = value.trim();
    let (number, scale) = [("km", 1e3), ("mm", 1e-3), ("um", 1e-6), ("m", 1.0)]
        .iter()
        .find_map(|(suffix, scale)| v.strip_suffix(suffix).map(|n| (n, *scale)))
        .unwrap_or((v, 1.0));
    let x: f64 = number.trim().parse().ok()?;
    let l = x * scale;
    l.is_finite().then_some(l)
}

#[derive(Default)]
struct StationFields {
    x: Option<f64>,
    x_out: Option<f64>,
    t_choice: Option<f64>,
    t_output: Option<f64>,
    fiber_speed: Option<f64>,
    extent: Option<f64>,
}

impl StationFields {
    fn build(self, name: &str) -> Result<StationTimeline, GeometryError> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| ConfigError::field(&format!("{name}.{key}"), "missing"))
        };
        let x = need(self.x, "x")?;
        let timeline = StationTimeline {
            name: name.to_string(),
            choice_start: SpacetimeEvent::new(need(self.t_choice, "choice_start")?, x),
            output_complete: SpacetimeEvent::new(need(self.t_output, "output_complete")?, self.x_out.unwrap_or(x)),
            signal_speed_in_fiber: self.fiber_speed,
            extent: self.extent.unwrap_or(0.0),
        };
        timeline.validate()?;
        Ok(timeline)
    }
}

impl ExperimentGeometry {
    /// Parse a geometry file:
    ///
    /// ```text
    /// label = symmetric photon stations
    /// alice.x = -200 m
    /// alice.choice_start = 0 ns
    /// alice.output_complete = 100 ns
    /// bob.x = 200 m
    /// bob.choice_start = 0 ns
    /// bob.output_complete = 100 ns
    /// fiber_speed = 2e8
    /// ```
    ///
    /// Optional per-station keys: `output_x`, `extent`, `fiber_speed`.
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let mut alice = StationFields::default();
        let mut bob = StationFields::default();
        let mut shared_fiber = None;
        let mut label = String::new();
        let mut entries = Vec::new();

        for (line, key, value) in parse_key_values(text)? {
            let bad = |what: &str| {
                let mut e = ConfigError::field(&key, format!("expected {what}, got {value:?}"));
                e.line = Some(line);
                e
            };
            if key == "label" {
                label = value.clone();
            } else if key == "fiber_speed" {
                shared_fiber = Some(value.parse::<f64>().map_err(|_| bad("a speed in m/s"))?);
            } else {
                let (station, field) = key.split_once('.').ok_or_else(|| bad("a known key"))?;
                let target = match station {
                    "alice" => &mut alice,
                    "bob" => &mut bob,
                    _ => return Err(ConfigError::field(&key, "unknown station, expected alice or bob").into()),
                };
                match field {
                    "x" => target.x = Some(parse_length(&value).ok_or_else(|| bad("a length"))?),
                    "output_x" => target.x_out = Some(parse_length(&value).ok_or_else(|| bad("a length"))?),
                    "extent" => target.extent = Some(parse_length(&value).ok_or_else(|| bad("a length"))?),
                    "choice_start" => target.t_choice = Some(parse_time(&value).ok_or_else(|| bad("a time"))?),
                    "output_complete" => target.t_output = Some(parse_time(&value).ok_or_else(|| bad("a time"))?),
                    "fiber_speed" => {
                        target.fiber_speed = Some(value.parse::<f64>().map_err(|_| bad("a speed in m/s"))?)
                    }
                    _ => {
                        let mut e = ConfigError::field(&key, "unknown key");
                        e.line = Some(line);
                        return Err(e.into());
                    }
                }
            }
            entries.push((key, value));
        }
        if alice.fiber_speed.is_none() {
            alice.fiber_speed = shared_fiber;
        }
        if bob.fiber_speed.is_none() {
            bob.fiber_speed = shared_fiber;
        }
        Ok(ExperimentGeometry {
            label,
            alice: alice.build("alice")?,
            bob: bob.build("bob")?,
            entries,
        })
    }

    pub fn digest(&self) -> String {
        digest_entries(self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn audit(&self) -> LightconeAudit {
        lightcone_audit(&self.alice, &self.bob)
    }
}

/// Illustrative geometries shipped with the tool.
pub const GEOMETRY_PRESETS: [(&str, &str); 2] = [
    ("photon_400m", include_str!("../presets/photon_400m.geom")),
    ("ion_trap", include_str!("../presets/ion_trap.geom")),
];

pub fn geometry_preset(name: &str) -> Option<ExperimentGeometry> {
    GEOMETRY_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ExperimentGeometry::parse(text).expect("shipped geometry parses"))
}

fn push_verdict(doc: &mut KvDocument, prefix: &str, v: &CausalVerdict) {
    doc.push(format!("{prefix}.classification"), v.classification)
        .push(format!("{prefix}.margin_factor"), fmt_sci(v.margin_factor))
        .push(format!("{prefix}.degenerate"), v.degenerate);
}

impl LightconeAudit {
    pub fn to_document(&self, geometry: Option<&ExperimentGeometry>) -> KvDocument {
        let mut doc = KvDocument::new("bellcheck lightcone audit");
        if let Some(g) = geometry {
            doc.push("geometry_digest", g.digest());
            if !g.label.is_empty() {
                doc.push("label", &g.label);
            }
            for s in [&g.alice, &g.bob] {
                doc.push(format!("{}.x", s.name), fmt_fixed(s.choice_start.x))
                    .push(format!("{}.choice_start", s.name), fmt_sci(s.choice_start.t))
                    .push(format!("{}.output_complete", s.name), fmt_sci(s.output_complete.t))
                    .push(
                        format!("{}.fiber_speed", s.name),
                        s.signal_speed_in_fiber.map_or_else(|| "unspecified".to_string(), fmt_sci),
                    );
            }
        }
        doc.push("speed_of_light", fmt_fixed(SPEED_OF_LIGHT));
        push_verdict(&mut doc, "alice_choice_to_bob_output", &self.alice_choice_to_bob_output);
        push_verdict(&mut doc, "bob_choice_to_alice_output", &self.bob_choice_to_alice_output);
        doc.push("min_margin_factor", fmt_sci(self.min_margin))
            .push("deficit_factor", fmt_sci(self.deficit_factor()))
            .push("verdict", if self.pass { "pass" } else { "fail" });
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ev(t: f64, x: f64) -> SpacetimeEvent {
        SpacetimeEvent::new(t, x)
    }

    #[test]
    fn coincident_events_are_degenerate_lightlike() {
        let v = classify_interval(ev(1.0, 2.0), ev(1.0, 2.0));
        assert_eq!(v.classification, Classification::Lightlike);
        assert_eq!(v.margin_factor, 1.0);
        assert!(v.degenerate);
    }

    #[test]
    fn simultaneous_distant_events() {
        let v = classify_interval(ev(0.0, -200.0), ev(0.0, 200.0));
        assert_eq!(v.classification, Classification::Spacelike);
        assert_eq!(v.margin_factor, f64::INFINITY);
    }

    #[test]
    fn hundred_nanoseconds_four_hundred_metres() {
        let v = classify_interval(ev(0.0, 0.0), ev(100e-9, 400.0));
        assert_eq!(v.classification, Classification::Spacelike);
        // 400 / 29.9792458
        assert_relative_eq!(v.margin_factor, 13.342563807926084, max_relative = 1e-12);
    }

    #[test]
    fn light_signal_is_lightlike_and_slower_is_timelike() {
        let v = classify_interval(ev(0.0, 0.0), ev(1e-6, SPEED_OF_LIGHT * 1e-6));
        assert_eq!(v.classification, Classification::Lightlike);
        let v = classify_interval(ev(0.0, 0.0), ev(1e-6, 100.0));
        assert_eq!(v.classification, Classification::Timelike);
        assert!(v.margin_factor < 1.0);
    }

    #[test]
    fn symmetric_photon_stations_pass() {
        let a = StationTimeline::point("alice", -200.0, 0.0, 100e-9).unwrap();
        let b = StationTimeline::point("bob", 200.0, 0.0, 100e-9).unwrap();
        let audit = lightcone_audit(&a, &b);
        assert!(audit.pass);
        assert_relative_eq!(audit.min_margin, 13.342563807926084, max_relative = 1e-12);
    }

    #[test]
    fn ion_trap_stations_fail_by_ten_orders() {
        let a = StationTimeline::point("alice", 0.0, 0.0, 1e-3).unwrap();
        let b = StationTimeline::point("bob", 3e-6, 0.0, 1e-3).unwrap();
        let audit = lightcone_audit(&a, &b);
        assert!(!audit.pass);
        assert_relative_eq!(audit.min_margin, 1.0006922855944563e-11, max_relative = 1e-9);
        assert!(audit.deficit_factor() > 1e10);
    }

    #[test]
    fn colocated_instant_stations_fail() {
        let a = StationTimeline::point("alice", 5.0, 0.0, 0.0).unwrap();
        let b = StationTimeline::point("bob", 5.0, 0.0, 0.0).unwrap();
        assert!(!lightcone_audit(&a, &b).pass);
        // Same place, later output: timelike.
        let b = StationTimeline::point("bob", 5.0, 0.0, 1e-9).unwrap();
        let audit = lightcone_audit(&a, &b);
        assert!(!audit.pass);
        assert_eq!(audit.alice_choice_to_bob_output.classification, Classification::Timelike);
    }

    #[test]
    fn timeline_validation() {
        assert!(matches!(
            StationTimeline::point("alice", 0.0, 1.0, 0.5),
            Err(TimelineError::OutputBeforeChoice { .. })
        ));
        assert!(StationTimeline::point("alice", f64::NAN, 0.0, 0.5).is_err());
        let mut t = StationTimeline::point("bob", 0.0, 0.0, 1.0).unwrap();
        t.output_complete.x = 0.5;
        assert!(matches!(t.validate(), Err(TimelineError::OutsideExtent { .. })));
        t.extent = 1.0;
        assert!(t.validate().is_ok());
        t.signal_speed_in_fiber = Some(4e8);
        assert!(matches!(t.validate(), Err(TimelineError::FiberSpeed { .. })));
    }

    #[test]
    fn units() {
        let close = |got: Option<f64>, want: f64| (got.unwrap() - want).abs() <= 1e-15 * want.abs();
        assert!(close(parse_time("100 ns"), 100e-9));
        assert!(close(parse_time("100ns"), 100e-9));
        assert!(close(parse_time("1ms"), 1e-3));
        assert_eq!(parse_time("2.5e-7"), Some(2.5e-7));
        assert_eq!(parse_time("3 s"), Some(3.0));
        assert_eq!(parse_time("soon"), None);
        assert!(close(parse_length("3 um"), 3e-6));
        assert_eq!(parse_length("-200 m"), Some(-200.0));
        assert_eq!(parse_length("0.4km"), Some(400.0));
        assert_eq!(parse_length("inf"), None);
    }

    #[test]
    fn geometry_file_parsing() {
        let g = geometry_preset("photon_400m").unwrap();
        assert!(g.audit().pass);
        assert_eq!(g.alice.signal_speed_in_fiber, Some(2e8));
        let g = geometry_preset("ion_trap").unwrap();
        assert!(!g.audit().pass);
        assert!(g.audit().deficit_factor() > 1e10);

        let err = ExperimentGeometry::parse("alice.x = 0\nalice.choice_start = later\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ExperimentGeometry::parse("carol.x = 1").is_err());
        assert!(ExperimentGeometry::parse("alice.x = 1").unwrap_err().to_string().contains("alice.choice_start"));
        assert!(ExperimentGeometry::parse("alice.speed = 1").is_err());
    }

    #[test]
    fn audit_document_fields() {
        let g = geometry_preset("ion_trap").unwrap();
        let doc = g.audit().to_document(Some(&g));
        assert_eq!(doc.get("verdict"), Some("fail"));
        assert_eq!(doc.get("geometry_digest"), Some(g.digest().as_str()));
        assert_eq!(doc.get("alice_choice_to_bob_output.classification"), Some("timelike"));
    }

    fn coord() -> impl Strategy<Value = f64> {
        -1e3f64..1e3
    }

    fn time() -> impl Strategy<Value = f64> {
        -1e-5f64..1e-5
    }

    proptest! {
        #[test]
        fn classification_is_symmetric(t1 in time(), x1 in coord(), t2 in time(), x2 in coord()) {
            prop_assert_eq!(classify_interval(ev(t1, x1), ev(t2, x2)), classify_interval(ev(t2, x2), ev(t1, x1)));
        }

        #[test]
        fn verdict_survives_common_translation(
            xa in coord(), sep in 0.0f64..1e3, t0 in time(), da in 0.0f64..1e-5, db in 0.0f64..1e-5,
            shift_t in time(), shift_x in coord(),
        ) {
            let a = StationTimeline::point("alice", xa, t0, t0 + da).unwrap();
            let b = StationTimeline::point("bob", xa + sep, t0, t0 + db).unwrap();
            let base = lightcone_audit(&a, &b);
            prop_assume!((base.min_margin - 1.0).abs() > 1e-6);
            let a2 = StationTimeline::point("alice", xa + shift_x, t0 + shift_t, t0 + da + shift_t).unwrap();
            let b2 = StationTimeline::point("bob", xa + sep + shift_x, t0 + shift_t, t0 + db + shift_t).unwrap();
            let moved = lightcone_audit(&a2, &b2);
            prop_assert_eq!(base.pass, moved.pass);
            if base.min_margin.is_finite() {
                prop_assert!((base.min_margin - moved.min_margin).abs() <= 1e-6 * base.min_margin.max(1.0));
            }
        }

        #[test]
        fn wider_separation_never_fails_a_pass(sep in 0.0f64..1e3, extra in 0.0f64..1e3, da in 0.0f64..1e-5, db in 0.0f64..1e-5) {
            let audit = |s: f64| {
                let a = StationTimeline::point("alice", -s / 2.0, 0.0, da).unwrap();
                let b = StationTimeline::point("bob", s / 2.0, 0.0, db).unwrap();
                lightcone_audit(&a, &b).pass
            };
            if audit(sep) {
                prop_assert!(audit(sep + extra));
            }
        }
    }
}
