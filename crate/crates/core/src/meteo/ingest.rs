//! CSV ingestion for daily cloud cover and tabulated irradiance.

use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Scale of the raw cover column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudScale {
    /// 0–10 observations, divided by 10.
    Okta10,
    /// Already in [0, 1].
    Unit,
}

/// Daily cloud-cover observations on consecutive dates.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl CloudSeries {
    /// Consecutive-day series starting on `start`.
    pub fn from_values(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let dates = start.iter_days().take(values.len()).collect();
        let series = Self { dates, values };
        series.validate()?;
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.dates.len() != self.values.len() {
            problems.push("dates and values differ in length".to_string());
        }
        for (i, &v) in self.values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("value {v} at index {i} outside [0, 1]"));
            }
        }
        for w in self.dates.windows(2) {
            if w[0].succ_opt() != Some(w[1]) {
                problems.push(format!("dates jump from {} to {}", w[0], w[1]));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Reads a cloud-cover CSV file. See [`parse_cloud_csv`].
pub fn ingest_cloud_csv(path: impl AsRef<Path>) -> Result<CloudSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_cloud_csv(&text)
}

/// Parses `date,cover` rows with an optional `# scale=okta10|unit` comment.
///
/// Without a scale comment the values are taken as unit-scaled. All
/// offending lines are reported together.
pub fn parse_cloud_csv(text: &str) -> Result<CloudSeries> {
    let mut scale = CloudScale::Unit;
    let mut rows: Vec<(usize, NaiveDate, f64)> = Vec::new();
    let mut problems = Vec::new();
    let mut seen_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(value) = comment.strip_prefix("scale") {
                match value.trim_start().trim_start_matches('=').trim() {
                    "okta10" => scale = CloudScale::Okta10,
                    "unit" => scale = CloudScale::Unit,
                    other => problems.push(format!("line {lineno}: unknown scale '{other}'")),
                }
            }
            continue;
        }
        if !seen_header && rows.is_empty() && line.replace(' ', "").eq_ignore_ascii_case("date,cover") {
            seen_header = true;
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (Some(d), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            problems.push(format!("line {lineno}: expected 'YYYY-MM-DD,value'"));
            continue;
        };
        let date = match NaiveDate::parse_from_str(d, "%Y-%m-%d") {
            Ok(date) => date,
            Err(_) => {
                problems.push(format!("line {lineno}: bad date '{d}'"));
                continue;
            }
        };
        match v.parse::<f64>() {
            Ok(value) if value.is_finite() => rows.push((lineno, date, value)),
            _ => problems.push(format!("line {lineno}: bad value '{v}'")),
        }
    }

    let (limit, divisor) = match scale {
        CloudScale::Okta10 => (10.0, 10.0),
        CloudScale::Unit => (1.0, 1.0),
    };
    let mut dates = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, &(lineno, date, value)) in rows.iter().enumerate() {
        if !(0.0..=limit).contains(&value) {
            problems.push(format!("line {lineno}: value {value} outside [0, {limit}]"));
        }
        if i > 0 {
            let prev = rows[i - 1].1;
            if date <= prev {
                problems.push(format!("line {lineno}: date {date} not after {prev}"));
            } else if prev.succ_opt() != Some(date) {
                problems.push(format!("line {lineno}: missing dates between {prev} and {date}"));
            }
        }
        dates.push(date);
        values.push(value / divisor);
    }
    if rows.is_empty() && problems.is_empty() {
        problems.push("no data rows".into());
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    Ok(CloudSeries { dates, values })
}

/// Reads a `t_days,irradiance` table.
pub fn ingest_irradiance_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut table = Vec::new();
    let mut problems = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if table.is_empty() && line.replace(' ', "").eq_ignore_ascii_case("t_days,irradiance") {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(t, v)| Some((t.trim().parse::<f64>().ok()?, v.trim().parse::<f64>().ok()?)));
        match parsed {
            Some(row) => table.push(row),
            None => problems.push(format!("line {}: expected 't_days,irradiance'", idx + 1)),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    Ok(table)
}
