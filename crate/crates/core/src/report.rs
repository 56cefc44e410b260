//! Plain-text `key = value` reports.
//!
//! A report is a `#` title line followed by one `key = value` line per
//! entry, in insertion order. Floats use fixed formatting so reports are
//! byte-stable for golden-file comparisons. The same layout is read back by
//! [`KvDocument::parse`].

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KvDocument {
    pub title: String,
    pub entries: Vec<(String, String)>,
}

/// Fixed-point rendering with six decimals; non-finite values as `inf`,
/// `-inf` or `nan`.
pub fn fmt_fixed(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Scientific rendering for quantities spanning many decades.
pub fn fmt_sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6e}")
    } else {
        fmt_fixed(x)
    }
}

impl KvDocument {
    pub fn new(title: impl Into<String>) -> Self {
        KvDocument {
            title: title.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> KvDocument {
        let mut doc = KvDocument::default();
        for line in text.lines() {
            if let Some(title) = line.strip_prefix("# ") {
                if doc.title.is_empty() {
                    doc.title = title.to_string();
                }
            } else if let Some((k, v)) = line.split_once(" = ") {
                doc.entries.push((k.to_string(), v.to_string()));
            }
        }
        doc
    }
}

impl fmt::Display for KvDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.title)?;
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
