//! CSV ingestion of a single time series.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use dsi_hurst::TimeSeries;

/// A column addressed by zero-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty column reference".into());
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Index(i) => write!(f, "#{i}"),
            Column::Name(n) => write!(f, "`{n}`"),
        }
    }
}

/// Where sample times come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TimeColumn {
    /// Column 0 when the file has two or more columns, else row index.
    #[default]
    Auto,
    /// Row index `1..=n` over the valid rows.
    RowIndex,
    Column(Column),
}

impl FromStr for TimeColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(TimeColumn::Auto),
            "none" | "index" => Ok(TimeColumn::RowIndex),
            other => other.parse().map(TimeColumn::Column),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Header {
    On,
    Off,
    /// Header present if the first row's value field is not numeric.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvOptions {
    pub time_col: TimeColumn,
    /// Defaults to the last column.
    pub value_col: Option<Column>,
    pub header: Header,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSeries {
    pub series: TimeSeries,
    /// Rows dropped for a missing or unparseable time or value.
    pub skipped: usize,
}

fn parse_number(field: Option<&str>) -> Option<f64> {
    field
        .filter(|f| !f.is_empty())
        .and_then(|f| f.parse::<f64>().ok())
        .filter(|v| v.is_finite())
}

fn resolve(
    col: &Column,
    header: Option<&csv::StringRecord>,
    width: usize,
) -> Result<usize, String> {
    match col {
        Column::Index(i) if *i < width => Ok(*i),
        Column::Index(i) => Err(format!("column {i} out of range ({width} columns)")),
        Column::Name(name) => header
            .ok_or_else(|| format!("column `{name}` addressed by name but the file has no header"))?
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("column `{name}` not found in header")),
    }
}

pub fn parse_series_str(text: &str, opts: &CsvOptions) -> Result<ParsedSeries, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(u64, csv::StringRecord)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| format!("malformed CSV: {e}"))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record));
    }
    if rows.is_empty() {
        return Err("file is empty".into());
    }

    let width = rows[0].1.len();
    let value_guess = match &opts.value_col {
        Some(Column::Index(i)) => Some(*i),
        Some(Column::Name(_)) => None,
        None => Some(width - 1),
    };
    let has_header = match opts.header {
        Header::On => true,
        Header::Off => false,
        Header::Auto => match value_guess {
            Some(i) => parse_number(rows[0].1.get(i)).is_none(),
            None => true,
        },
    };
    let header = has_header.then(|| rows.remove(0).1);
    let data_width = rows.first().map_or(width, |(_, r)| r.len()).max(width);

    let value_idx = match &opts.value_col {
        Some(c) => resolve(c, header.as_ref(), data_width)?,
        None => data_width - 1,
    };
    let time_idx = match &opts.time_col {
        TimeColumn::Auto => (data_width >= 2 && value_idx != 0).then_some(0),
        TimeColumn::RowIndex => None,
        TimeColumn::Column(c) => Some(resolve(c, header.as_ref(), data_width)?),
    };

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut skipped = 0;
    let mut prev_line: Option<u64> = None;
    for (line, record) in &rows {
        // blank lines never reach the reader as records
        if let Some(prev) = prev_line {
            skipped += line.saturating_sub(prev + 1) as usize;
        }
        prev_line = Some(*line);
        let value = parse_number(record.get(value_idx));
        let time = match time_idx {
            Some(i) => parse_number(record.get(i)),
            None => Some((values.len() + 1) as f64),
        };
        match (time, value) {
            (Some(t), Some(v)) => {
                times.push(t);
                values.push(v);
            }
            _ => skipped += 1,
        }
    }
    if values.len() < 2 {
        return Err(format!(
            "need at least 2 valid rows, found {}",
            values.len()
        ));
    }
    let series = TimeSeries::new(times, values).map_err(|e| e.to_string())?;
    Ok(ParsedSeries { series, skipped })
}

pub fn parse_series_csv(path: &Path, opts: &CsvOptions) -> Result<ParsedSeries, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_series_str(&text, opts).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ParsedSeries {
        parse_series_str(text, &CsvOptions::default()).unwrap()
    }

    #[test]
    fn two_column_headerless() {
        let p = parse("1,100.5\n2,101.0");
        assert_eq!(p.series.times(), &[1.0, 2.0]);
        assert_eq!(p.series.values(), &[100.5, 101.0]);
        assert_eq!(p.skipped, 0);
    }

    #[test]
    fn blank_value_rows_are_counted() {
        let p = parse("t,v\n1,1.5\n2,\n3,2.5\n");
        assert_eq!(p.series.times(), &[1.0, 3.0]);
        assert_eq!(p.skipped, 1);
        let single = parse("1.0\n\n2.0\n3.0\n");
        assert_eq!(single.series.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(single.skipped, 1);
        assert_eq!(parse("x\n1\nabc\n2\n").skipped, 1);
    }

    #[test]
    fn value_only_file_gets_row_times() {
        let text: String = (0..3168)
            .map(|i| format!("{}\n", 100.0 + i as f64 * 0.25))
            .collect();
        let p = parse(&text);
        assert_eq!(p.series.len(), 3168);
        assert_eq!(p.series.times()[0], 1.0);
        assert_eq!(p.series.times()[3167], 3168.0);
    }

    #[test]
    fn columns_by_name_and_index() {
        let text = "date,close,volume\n10,5.5,100\n11,6.5,90\n12,7.0,80\n";
        let by_name = CsvOptions {
            time_col: "date".parse().unwrap(),
            value_col: Some("close".parse().unwrap()),
            header: Header::On,
        };
        let p = parse_series_str(text, &by_name).unwrap();
        assert_eq!(p.series.times(), &[10.0, 11.0, 12.0]);
        assert_eq!(p.series.values(), &[5.5, 6.5, 7.0]);
        let by_index = CsvOptions {
            time_col: TimeColumn::RowIndex,
            value_col: Some(Column::Index(2)),
            header: Header::Auto,
        };
        let p = parse_series_str(text, &by_index).unwrap();
        assert_eq!(p.series.times(), &[1.0, 2.0, 3.0]);
        assert_eq!(p.series.values(), &[100.0, 90.0, 80.0]);
    }

    #[test]
    fn errors() {
        let o = CsvOptions::default();
        assert!(parse_series_str("", &o).is_err());
        assert!(parse_series_str("1,2\n", &o).is_err());
        assert!(parse_series_str("2,1\n1,2\n", &o)
            .unwrap_err()
            .contains("increasing"));
        let named = CsvOptions {
            value_col: Some(Column::Name("price".into())),
            header: Header::Off,
            ..o
        };
        assert!(parse_series_str("1,2\n2,3\n", &named).is_err());
    }
}
