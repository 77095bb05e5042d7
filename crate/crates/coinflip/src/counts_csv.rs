//! Reading and writing the pattern-count table: a two-column CSV with
//! header `pattern,count`, one row per completed-family pattern.
//!
//! Parsing is strict — a malformed row fails with its line number rather
//! than being skipped — and serialization is canonical: patterns are
//! written in their natural order (prefix first, `M` before `F`), so
//! parse → write round-trips to a stable byte sequence.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AggregateCounts, SexPattern};

/// Required first line of a counts file.
pub const COUNTS_HEADER: &str = "pattern,count";

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::CountsParse { line, message: message.into() }
}

/// Parses a counts table from any buffered reader. Lines are trimmed (CRLF
/// endings are accepted) and blank lines are skipped; everything else must
/// be the header or a well-formed `pattern,count` row.
pub fn parse_counts<R: BufRead>(reader: R) -> Result<AggregateCounts> {
    let mut counts = AggregateCounts::new();
    let mut saw_header = false;
    let mut line_no = 0usize;
    for line in reader.lines() {
        line_no += 1;
        let raw = line?;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        if !saw_header {
            if row != COUNTS_HEADER {
                return Err(parse_error(
                    line_no,
                    format!("expected header {COUNTS_HEADER:?}, found {row:?}"),
                ));
            }
            saw_header = true;
            continue;
        }
        let (pattern_field, count_field) = row.split_once(',').ok_or_else(|| {
            parse_error(line_no, format!("expected two comma-separated fields, found {row:?}"))
        })?;
        if count_field.contains(',') {
            return Err(parse_error(
                line_no,
                format!("expected two comma-separated fields, found {row:?}"),
            ));
        }
        let pattern = SexPattern::from_str(pattern_field.trim())
            .map_err(|e| parse_error(line_no, e.to_string()))?;
        let count: u64 = count_field.trim().parse().map_err(|_| {
            parse_error(line_no, format!("count {count_field:?} is not a nonnegative integer"))
        })?;
        counts.insert(pattern, count).map_err(|e| match e {
            Error::DuplicatePattern(p) => parse_error(line_no, format!("duplicate pattern {p}")),
            other => parse_error(line_no, other.to_string()),
        })?;
    }
    if !saw_header {
        return Err(parse_error(1, format!("missing header {COUNTS_HEADER:?}")));
    }
    Ok(counts)
}

/// [`parse_counts`] over an in-memory string.
pub fn parse_counts_str(text: &str) -> Result<AggregateCounts> {
    parse_counts(text.as_bytes())
}

/// [`parse_counts`] over a file path.
pub fn read_counts_file(path: &Path) -> Result<AggregateCounts> {
    let file = File::open(path).map_err(|e| {
        Error::InvalidParameter(format!("cannot open counts file {}: {e}", path.display()))
    })?;
    parse_counts(BufReader::new(file))
}

/// Writes the canonical serialization: header, then one row per pattern in
/// natural order, LF line endings.
pub fn write_counts<W: Write>(mut writer: W, counts: &AggregateCounts) -> Result<()> {
    writeln!(writer, "{COUNTS_HEADER}")?;
    for (pattern, count) in counts.iter() {
        writeln!(writer, "{pattern},{count}")?;
    }
    Ok(())
}

/// The canonical serialization as a string.
pub fn counts_to_string(counts: &AggregateCounts) -> String {
    let mut out = Vec::new();
    write_counts(&mut out, counts).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("canonical serialization is ASCII")
}
