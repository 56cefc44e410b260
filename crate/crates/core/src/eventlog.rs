//! Event-log file format.
//!
//! ```text
//! # bellcheck event log
//! # config_digest = 3f0c2a9d11e0b7c4
//! # alpha = 0
//! # ...
//! trial,a_set,b_set,a_out,b_out,valid
//! 0,1,0,+1,-1,ok
//! 1,0,0,0,-1,ok
//! 2,1,1,0,+1,dbl
//! ```
//!
//! Comment lines carry the canonical configuration and its digest. In a
//! `dbl` record the side whose detectors both fired is written as `0`.

use std::io::{self, BufRead, BufWriter, Write};

use thiserror::Error;

use crate::config::{canonical_entries, config_digest, digest_entries};
use crate::outcome::Outcome;
use crate::sim::ExperimentConfig;

pub const CSV_HEADER: &str = "trial,a_set,b_set,a_out,b_out,valid";
const TITLE: &str = "bellcheck event log";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Ok,
    DoubleFire,
}

impl Validity {
    pub fn as_str(self) -> &'static str {
        match self {
            Validity::Ok => "ok",
            Validity::DoubleFire => "dbl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub alice_setting: u8,
    pub bob_setting: u8,
    pub alice_outcome: Outcome,
    pub bob_outcome: Outcome,
    pub validity: Validity,
}

impl TrialRecord {
    /// Setting-pair index `2·a + b`, matching the `e00, e01, e10, e11` order.
    #[inline]
    pub fn setting_pair(&self) -> usize {
        2 * self.alice_setting as usize + self.bob_setting as usize
    }
}

/// Provenance carried in the comment block of a log.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LogHeader {
    pub config_digest: Option<String>,
    /// Canonical `key = value` configuration entries, in file order.
    pub config: Vec<(String, String)>,
}

impl LogHeader {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        LogHeader {
            config_digest: Some(config_digest(config)),
            config: canonical_entries(config),
        }
    }

    /// Digest recomputed from the embedded configuration entries.
    pub fn recomputed_digest(&self) -> String {
        digest_entries(self.config.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// `false` when the embedded digest disagrees with the embedded config.
    pub fn is_consistent(&self) -> bool {
        match &self.config_digest {
            Some(d) => *d == self.recomputed_digest(),
            None => self.config.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub header: LogHeader,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_error(line: usize, message: impl Into<String>) -> LogError {
    LogError::Parse {
        line,
        message: message.into(),
    }
}

impl EventLog {
    pub fn n_trials(&self) -> usize {
        self.records.len()
    }

    pub fn write_to<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "# {TITLE}")?;
        if let Some(d) = &self.header.config_digest {
            writeln!(w, "# config_digest = {d}")?;
        }
        for (k, v) in &self.header.config {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.trial_id,
                r.alice_setting,
                r.bob_setting,
                r.alice_outcome,
                r.bob_outcome,
                r.validity.as_str()
            )?;
        }
        w.flush()
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("log text is ASCII")
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<EventLog, LogError> {
        let mut log = EventLog::default();
        let mut seen_header = false;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if !seen_header {
                if let Some(comment) = line.strip_prefix('#') {
                    if let Some((k, v)) = comment.split_once('=') {
                        let (k, v) = (k.trim(), v.trim());
                        if k == "config_digest" {
                            log.header.config_digest = Some(v.to_string());
                        } else {
                            log.header.config.push((k.to_string(), v.to_string()));
                        }
                    }
                    continue;
                }
                if line.trim() != CSV_HEADER {
                    return Err(parse_error(line_no, format!("expected header `{CSV_HEADER}`")));
                }
                seen_header = true;
                continue;
            }
            let expected_id = log.records.len() as u64;
            log.records.push(parse_record(line, line_no, expected_id)?);
        }
        if !seen_header {
            return Err(parse_error(0, format!("missing header `{CSV_HEADER}`")));
        }
        Ok(log)
    }

    pub fn from_text(text: &str) -> Result<EventLog, LogError> {
        Self::read_from(text.as_bytes())
    }
}

fn parse_record(line: &str, line_no: usize, expected_id: u64) -> Result<TrialRecord, LogError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(parse_error(line_no, format!("expected 6 fields, found {}", fields.len())));
    }
    let trial_id: u64 = fields[0]
        .parse()
        .map_err(|_| parse_error(line_no, format!("invalid trial id {:?}", fields[0])))?;
    if trial_id != expected_id {
        return Err(parse_error(
            line_no,
            format!("trial id {trial_id} out of sequence, expected {expected_id}"),
        ));
    }
    let setting = |s: &str, side: &str| match s {
        "0" => Ok(0u8),
        "1" => Ok(1u8),
        _ => Err(parse_error(line_no, format!("invalid {side} setting {s:?}, expected 0 or 1"))),
    };
    let outcome = |s: &str| s.parse::<Outcome>().map_err(|m| parse_error(line_no, m));
    let validity = match fields[5] {
        "ok" => Validity::Ok,
        "dbl" => Validity::DoubleFire,
        other => return Err(parse_error(line_no, format!("invalid validity {other:?}, expected ok or dbl"))),
    };
    Ok(TrialRecord {
        trial_id,
        alice_setting: setting(fields[1], "alice")?,
        bob_setting: setting(fields[2], "bob")?,
        alice_outcome: outcome(fields[3])?,
        bob_outcome: outcome(fields[4])?,
        validity,
    })
}
