//! Line-oriented reports: a `run` header with the resolved configuration,
//! then one `result` object per value or check. CSV output keeps the header
//! as a `#` comment.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub version: String,
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub op: String,
    pub params: BTreeMap<String, Value>,
    pub value: f64,
    pub error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub method: String,
    pub config_digest: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum Line {
    Run(RunHeader),
    Result(Record),
}

pub const CSV_COLUMNS: &str = "op,params,value,error,target,tol,pass,method,config_digest,seed";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Record {
    pub fn csv_row(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        [
            csv_field(&self.op),
            csv_field(&params.join(";")),
            self.value.to_string(),
            self.error.to_string(),
            opt(self.target),
            opt(self.tol),
            opt(self.pass),
            csv_field(&self.method),
            self.config_digest.clone(),
            self.seed.to_string(),
        ]
        .join(",")
    }
}

/// Writes report lines to stdout and, when asked, to a file.
pub struct Emitter<'a> {
    format: Format,
    sinks: Vec<&'a mut dyn Write>,
    wrote_columns: bool,
}

impl<'a> Emitter<'a> {
    pub fn new(format: Format, sinks: Vec<&'a mut dyn Write>) -> Self {
        Self {
            format,
            sinks,
            wrote_columns: false,
        }
    }

    fn line(&mut self, s: &str) -> CliResult<()> {
        for w in self.sinks.iter_mut() {
            writeln!(w, "{s}")?;
        }
        Ok(())
    }

    pub fn header(&mut self, h: &RunHeader) -> CliResult<()> {
        let json = serde_json::to_string(&Line::Run(h.clone()))?;
        match self.format {
            Format::Json => self.line(&json),
            Format::Csv => self.line(&format!("# {json}")),
        }
    }

    pub fn record(&mut self, r: &Record) -> CliResult<()> {
        match self.format {
            Format::Json => {
                let json = serde_json::to_string(&Line::Result(r.clone()))?;
                self.line(&json)
            }
            Format::Csv => {
                if !self.wrote_columns {
                    self.wrote_columns = true;
                    self.line(CSV_COLUMNS)?;
                }
                self.line(&r.csv_row())
            }
        }
    }

    /// A free-form CSV table; always CSV regardless of the report format.
    pub fn table(&mut self, columns: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
        self.line(&columns.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            self.line(&cells.join(","))?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> CliResult<()> {
        for w in self.sinks.iter_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

/// Splits a JSON-lines report into its header and result records.
pub fn read_report(text: &str) -> CliResult<(Option<RunHeader>, Vec<Record>)> {
    let mut header = None;
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<Line>(line)? {
            Line::Run(h) => header = Some(h),
            Line::Result(r) => records.push(r),
        }
    }
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Record {
        Record {
            op: "hk.eval".into(),
            params: BTreeMap::from([("point".into(), serde_json::json!([0.0, 0.0, 0.0]))]),
            value: 0.0625,
            error: 1e-17,
            target: None,
            tol: None,
            pass: None,
            method: "quadrature".into(),
            config_digest: "abc".into(),
            seed: 7,
        }
    }

    #[test]
    fn json_round_trip() {
        let mut buf = Vec::new();
        {
            let mut e = Emitter::new(Format::Json, vec![&mut buf]);
            e.record(&sample()).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("{\"record\":\"result\""));
        let (h, r) = read_report(&text).unwrap();
        assert!(h.is_none());
        assert_eq!(r, vec![sample()]);
    }

    #[test]
    fn csv_quotes_params() {
        let row = sample().csv_row();
        assert!(row.starts_with("hk.eval,\"point=[0.0,0.0,0.0]\",0.0625,"));
        assert_eq!(row.split(',').count(), CSV_COLUMNS.split(',').count() + 2);
    }
}
