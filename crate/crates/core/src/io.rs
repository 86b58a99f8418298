//! CSV ingestion.
//!
//! Two layouts are recognised by their header row:
//!
//! * summary: `label,n,mean,sd`, one row per group, control first; `sd` may
//!   be left empty for single-observation groups.
//! * raw: `group,value`, one row per observation, group 0 is the control.

use std::path::Path;

use crate::error::{data, Error, Result};
use crate::summary::{summarize_groups, summarize_raw, DoseResponseData, GroupSummary};

const SUMMARY_HEADER: [&str; 4] = ["label", "n", "mean", "sd"];
const RAW_HEADER: [&str; 2] = ["group", "value"];

#[derive(Debug, Clone, PartialEq)]
pub enum InputData {
    Summary(Vec<GroupSummary>),
    Raw(Vec<(usize, f64)>),
}

impl InputData {
    /// Group summaries, control first.
    pub fn groups(&self) -> Result<Vec<GroupSummary>> {
        match self {
            InputData::Summary(groups) => Ok(groups.clone()),
            InputData::Raw(obs) => summarize_groups(obs),
        }
    }

    /// Full sufficient statistics, including `S` and `nu`.
    pub fn dose_response(&self) -> Result<DoseResponseData> {
        match self {
            InputData::Summary(groups) => DoseResponseData::from_summaries(groups.clone()),
            InputData::Raw(obs) => summarize_raw(obs),
        }
    }
}

fn line_error(line: u64, msg: impl std::fmt::Display) -> Error {
    data(format!("line {line}: {msg}"))
}

pub fn read_input(path: &Path) -> Result<InputData> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| data(format!("cannot read {}: {e}", path.display())))?;
    parse_input(&text)
}

pub fn parse_input(text: &str) -> Result<InputData> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| line_error(1, e))?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();

    if header == SUMMARY_HEADER {
        parse_summary(reader).map(InputData::Summary)
    } else if header == RAW_HEADER {
        parse_raw(reader).map(InputData::Raw)
    } else {
        Err(line_error(
            1,
            format!(
                "unrecognised header {:?}; expected `label,n,mean,sd` or `group,value`",
                header.join(",")
            ),
        ))
    }
}

fn parse_field<T: std::str::FromStr>(line: u64, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| line_error(line, format!("cannot parse {name} from {raw:?}")))
}

fn parse_summary(mut reader: csv::Reader<&[u8]>) -> Result<Vec<GroupSummary>> {
    let mut groups = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            line_error(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let label = record[0].to_string();
        let n: u32 = parse_field(line, "n", &record[1])?;
        let mean: f64 = parse_field(line, "mean", &record[2])?;
        let sd = match &record[3] {
            "" => None,
            raw => Some(parse_field::<f64>(line, "sd", raw)?),
        };
        groups.push(GroupSummary::new(label, n, mean, sd).map_err(|e| line_error(line, e))?);
    }
    if groups.is_empty() {
        return Err(data("no data rows"));
    }
    Ok(groups)
}

fn parse_raw(mut reader: csv::Reader<&[u8]>) -> Result<Vec<(usize, f64)>> {
    let mut obs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            line_error(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let group: usize = parse_field(line, "group", &record[0])?;
        let value: f64 = parse_field(line, "value", &record[1])?;
        if !value.is_finite() {
            return Err(line_error(line, "value is not finite"));
        }
        obs.push((group, value));
    }
    if obs.is_empty() {
        return Err(data("no data rows"));
    }
    Ok(obs)
}
