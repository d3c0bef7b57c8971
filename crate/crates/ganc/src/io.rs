//! Rating file ingestion.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use ganc_core::dataset::dedup_last_wins;
use ganc_core::Rating;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingFormat {
    /// `user\titem\trating\ttimestamp`, as in MovieLens 100K `u.data`.
    TabSeparated,
    /// `user::item::rating::timestamp`, as in MovieLens 1M `ratings.dat`.
    DoubleColon,
    /// Comma-separated with a `user,item,rating[,timestamp]` header.
    Csv,
}

impl RatingFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            RatingFormat::TabSeparated => "tab",
            RatingFormat::DoubleColon => "double_colon",
            RatingFormat::Csv => "csv",
        }
    }

    /// Guesses from the file extension: `.csv`, `.dat`, anything else is tab.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => RatingFormat::Csv,
            Some("dat") => RatingFormat::DoubleColon,
            _ => RatingFormat::TabSeparated,
        }
    }
}

impl fmt::Display for RatingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tab" | "tab_separated" | "tsv" => Ok(RatingFormat::TabSeparated),
            "double_colon" | "dat" | "::" => Ok(RatingFormat::DoubleColon),
            "csv" => Ok(RatingFormat::Csv),
            other => Err(Error::Usage(format!(
                "unknown rating format `{other}` (expected tab, double_colon or csv)"
            ))),
        }
    }
}

/// Reads every rating in file order; a repeated `(user, item)` pair keeps
/// its last value.
pub fn load_ratings(path: &Path, format: RatingFormat) -> Result<Vec<Rating>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ratings = read_ratings(BufReader::new(file), format, path)?;
    if ratings.is_empty() {
        return Err(
            ganc_core::Error::EmptyDataset(format!("{} holds no ratings", path.display())).into(),
        );
    }
    Ok(ratings)
}

/// Parses ratings from any reader. `origin` only labels error messages.
pub fn read_ratings<R: Read>(
    reader: R,
    format: RatingFormat,
    origin: &Path,
) -> Result<Vec<Rating>> {
    let raw = match format {
        RatingFormat::TabSeparated => read_delimited(reader, "\t", origin)?,
        RatingFormat::DoubleColon => read_delimited(reader, "::", origin)?,
        RatingFormat::Csv => read_csv(reader, origin)?,
    };
    Ok(dedup_last_wins(raw))
}

fn read_delimited<R: Read>(reader: R, sep: &str, origin: &Path) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k as u64 + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(sep).collect();
        out.push(parse_fields(&fields, origin, lineno)?);
    }
    Ok(out)
}

fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Vec<Rating>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 3
        || names[..3] != ["user", "item", "rating"]
        || (names.len() == 4 && names[3] != "timestamp")
        || names.len() > 4
    {
        return Err(Error::parse(
            origin,
            1,
            "header must be user,item,rating[,timestamp]",
        ));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let lineno = record.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = record.iter().collect();
        out.push(parse_fields(&fields, origin, lineno)?);
    }
    Ok(out)
}

fn parse_fields(fields: &[&str], origin: &Path, line: u64) -> Result<Rating> {
    if !(3..=4).contains(&fields.len()) {
        return Err(Error::parse(
            origin,
            line,
            format!("expected 3 or 4 fields, found {}", fields.len()),
        ));
    }
    let id = |s: &str, what: &str| {
        s.trim().parse::<u64>().map_err(|_| {
            Error::parse(
                origin,
                line,
                format!("{what} id `{s}` is not a non-negative integer"),
            )
        })
    };
    let user = id(fields[0], "user")?;
    let item = id(fields[1], "item")?;
    let value: f64 = fields[2].trim().parse().map_err(|_| {
        Error::parse(
            origin,
            line,
            format!("rating `{}` is not a number", fields[2]),
        )
    })?;
    if !value.is_finite() || value < 0.0 {
        return Err(Error::parse(
            origin,
            line,
            format!("rating {value} must be finite and non-negative"),
        ));
    }
    let mut r = Rating::new(user, item, value);
    if let Some(ts) = fields.get(3).filter(|t| !t.trim().is_empty()) {
        let ts = ts.trim().parse::<i64>().map_err(|_| {
            Error::parse(origin, line, format!("timestamp `{ts}` is not an integer"))
        })?;
        r = r.with_timestamp(ts);
    }
    Ok(r)
}
