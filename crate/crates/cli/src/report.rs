//! Run and reduction reports.
//!
//! The text format is one `key: value` block per artifact, blocks separated
//! by a blank line. Values are single-line; newlines, tabs and backslashes
//! are escaped. The JSONL format has one object per artifact with a fixed
//! field set, then one `summary` object.

use std::io::{self, Write};

use clap::ValueEnum;
use gramtao::gdd::ReductionReport;
use gramtao::generate::Provenance;
use gramtao::Verdict;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Jsonl,
}

/// One artifact's row. Fields that do not apply stay `None`.
#[derive(Clone, Debug, Default)]
pub struct Record {
    pub id: usize,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub text: String,
    pub oracle: Option<String>,
    /// Why no oracle could be computed.
    pub error: Option<String>,
    pub verdict: Option<String>,
    pub actual: Option<String>,
    pub reduced_text: Option<String>,
    pub reduced_oracle: Option<String>,
    pub steps: Option<usize>,
    pub ratio: Option<f64>,
}

impl Record {
    pub fn new(id: usize, text: String, provenance: Option<Provenance>) -> Self {
        Record {
            id,
            seed: provenance.map(|p| p.seed),
            stream: provenance.map(|p| p.stream),
            text,
            ..Record::default()
        }
    }

    pub fn set_verdict(&mut self, verdict: &Verdict) {
        self.verdict = Some(verdict.to_string());
        self.actual = verdict.actual().map(str::to_string);
    }

    pub fn set_reduction(&mut self, report: &ReductionReport) {
        self.reduced_text = Some(report.reduced.text.clone());
        self.reduced_oracle = Some(report.reduced.oracle.to_string());
        self.steps = Some(report.steps.len());
        self.ratio = Some(report.ratio());
    }

    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("id", Some(self.id.to_string())),
            ("seed", self.seed.map(|s| s.to_string())),
            ("stream", self.stream.map(|s| s.to_string())),
            ("text", Some(self.text.clone())),
            ("oracle", self.oracle.clone()),
            ("error", self.error.clone()),
            ("verdict", self.verdict.clone()),
            ("actual", self.actual.clone()),
            ("reduced_text", self.reduced_text.clone()),
            ("reduced_oracle", self.reduced_oracle.clone()),
            ("steps", self.steps.map(|s| s.to_string())),
            ("ratio", self.ratio.map(fmt_ratio)),
        ]
    }

    fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "seed": self.seed,
            "stream": self.stream,
            "text": self.text,
            "oracle": self.oracle,
            "error": self.error,
            "verdict": self.verdict,
            "actual": self.actual,
            "reduced_text": self.reduced_text,
            "reduced_oracle": self.reduced_oracle,
            "steps": self.steps,
            "ratio": self.ratio,
        })
    }
}

/// Aggregate line items, written after the records.
pub type Summary = Vec<(&'static str, String)>;

pub fn fmt_ratio(r: f64) -> String {
    format!("{r:.4}")
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn write(
    out: &mut dyn Write,
    format: Format,
    records: &[Record],
    summary: &Summary,
) -> io::Result<()> {
    match format {
        Format::Text => {
            for r in records {
                for (key, value) in r.pairs() {
                    if let Some(v) = value {
                        writeln!(out, "{key}: {}", escape(&v))?;
                    }
                }
                writeln!(out)?;
            }
            for (key, value) in summary {
                writeln!(out, "{key}: {value}")?;
            }
        }
        Format::Jsonl => {
            for r in records {
                writeln!(out, "{}", r.to_json())?;
            }
            let fields: Map<String, Value> = summary
                .iter()
                .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
                .collect();
            writeln!(out, "{}", json!({ "summary": fields }))?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_control_characters() {
        assert_eq!(escape("a\nb\\c\t"), "a\\nb\\\\c\\t");
    }

    #[test]
    fn text_blocks_skip_missing_fields() {
        let mut r = Record::new(3, "1+2".into(), None);
        r.oracle = Some("3".into());
        let mut buf = Vec::new();
        write(&mut buf, Format::Text, &[r], &vec![("total", "1".into())]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id: 3\ntext: 1+2\noracle: 3\n\ntotal: 1\n"
        );
    }

    #[test]
    fn jsonl_has_fixed_fields() {
        let r = Record::new(0, "x".into(), None);
        let mut buf = Vec::new();
        write(&mut buf, Format::Jsonl, &[r], &vec![]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in [
            "id",
            "seed",
            "text",
            "oracle",
            "verdict",
            "actual",
            "reduced_text",
            "reduced_oracle",
            "steps",
            "ratio",
        ] {
            assert!(first.get(key).is_some(), "{key}");
        }
        assert!(first["verdict"].is_null());
    }
}
