//! Web of Science "Plain Text" full-record export reader.
//!
//! The export is a tagged-line format: every field starts with a two
//! character tag and a space (`PY 2013`), continuation lines are indented
//! by three spaces and belong to the last tag seen, `ER` terminates a record
//! and `EF` marks the end of the file. Only `PY` and `CR` are interpreted.

use std::io::{BufRead, BufReader, Read};
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

const BOM: &str = "\u{feff}";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("input exceeds the size limit of {limit} bytes")]
    TooLarge { limit: u64 },
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
}

/// Returned by [`parse_cited_reference`] for a blank entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("empty cited reference entry")]
pub struct EmptyEntry;

/// One parsed `CR` entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CitedReference {
    /// Verbatim entry text, indent and trailing whitespace removed.
    pub raw: String,
    pub author: String,
    /// Reference publication year.
    pub rpy: Option<u16>,
    pub source: String,
    pub volume: Option<u32>,
    pub page: Option<String>,
    pub doi: Option<String>,
}

impl CitedReference {
    fn raw_only(raw: &str) -> Self {
        CitedReference {
            raw: raw.to_owned(),
            author: String::new(),
            rpy: None,
            source: String::new(),
            volume: None,
            page: None,
            doi: None,
        }
    }
}

/// One publication of the export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitingRecord {
    /// Citing publication year, from the `PY` field.
    pub publication_year: Option<u16>,
    pub cited_references: Vec<CitedReference>,
    /// 1-based line numbers spanned by the record, terminator included.
    pub source_line_range: RangeInclusive<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MalformedReason {
    /// Bytes that are not UTF-8 were replaced with U+FFFD.
    InvalidUtf8,
    /// A `CR` line with no text after the tag or indent.
    EmptyReference,
    /// A `PY` value that is not a four digit year in 1000..=2999.
    InvalidPublicationYear,
    /// An indented line with no preceding tag in the record.
    OrphanContinuation,
    /// Neither a tag line nor a continuation.
    UnrecognizedLine,
    /// Fields after the last `ER`; the partial record is dropped.
    UnterminatedRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: MalformedReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub records_parsed: usize,
    pub references_parsed: usize,
    pub references_without_year: usize,
    pub malformed_lines: Vec<MalformedLine>,
}

fn is_year(segment: &str) -> Option<u16> {
    if segment.len() != 4 || !segment.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let year: u16 = segment.parse().ok()?;
    (1000..=2999).contains(&year).then_some(year)
}

fn volume_of(segment: &str) -> Option<u32> {
    let digits = segment.strip_prefix('V')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|v| *v > 0)
}

/// `P` followed by alphanumerics. Before a source has been seen the segment
/// must also contain a digit, so one-word sources such as `PNAS` stay sources.
fn page_of(segment: &str, source_seen: bool) -> Option<&str> {
    let rest = segment.strip_prefix('P')?;
    if rest.is_empty() || !rest.chars().all(char::is_alphanumeric) {
        return None;
    }
    if !source_seen && !rest.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(rest)
}

fn strip_doi_brackets(value: &str) -> &str {
    value.trim().trim_start_matches('[').trim_end_matches(']').trim()
}

fn looks_like_doi(value: &str) -> bool {
    let value = strip_doi_brackets(value);
    value.starts_with("10.") && value.contains('/')
}

/// Decompose one `CR` entry of the form
/// `AUTHOR, YEAR, SOURCE, V12, P34, DOI 10.x/y`.
pub fn parse_cited_reference(entry: &str) -> Result<CitedReference, EmptyEntry> {
    let entry = entry.trim();
    if entry.is_empty() {
        return Err(EmptyEntry);
    }
    let mut reference = CitedReference::raw_only(entry);
    let segments: Vec<&str> = entry.split(", ").map(str::trim).collect();

    let mut rest = &segments[..];
    if is_year(segments[0]).is_none() {
        reference.author = segments[0].to_owned();
        rest = &segments[1..];
    }
    let Some(year_at) = rest.iter().position(|s| is_year(s).is_some()) else {
        return Ok(reference);
    };
    reference.rpy = is_year(rest[year_at]);

    let mut source_parts: Vec<&str> = Vec::new();
    let mut in_doi_list = false;
    for &segment in &rest[year_at + 1..] {
        if let Some(doi) = segment.strip_prefix("DOI ") {
            let doi = strip_doi_brackets(doi);
            if reference.doi.is_none() && doi.starts_with("10.") {
                reference.doi = Some(doi.to_owned());
            }
            in_doi_list = segment.contains('[') && !segment.contains(']');
            continue;
        }
        if in_doi_list && looks_like_doi(segment) {
            in_doi_list = !segment.contains(']');
            continue;
        }
        in_doi_list = false;
        if let Some(volume) = volume_of(segment) {
            reference.volume.get_or_insert(volume);
            continue;
        }
        if let Some(page) = page_of(segment, !source_parts.is_empty()) {
            reference.page.get_or_insert_with(|| page.to_owned());
            continue;
        }
        if !segment.is_empty() {
            source_parts.push(segment);
        }
    }
    reference.source = source_parts.join(" ");
    Ok(reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    CitedReferences,
    Other,
}

#[derive(Default)]
struct PendingRecord {
    first_line: Option<usize>,
    publication_year: Option<u16>,
    cited_references: Vec<CitedReference>,
    current_tag: Option<Tag>,
    has_fields: bool,
}

impl PendingRecord {
    fn touch(&mut self, line: usize) {
        self.first_line.get_or_insert(line);
    }
}

struct Parser {
    records: Vec<CitingRecord>,
    report: ParseReport,
    pending: PendingRecord,
}

fn is_ascii_ws(c: char) -> bool {
    c.is_ascii_whitespace()
}

fn is_tag(bytes: &[u8]) -> bool {
    bytes.len() >= 2
        && bytes[..2].iter().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
        && (bytes.len() == 2 || bytes[2] == b' ')
}

impl Parser {
    fn new() -> Self {
        Parser {
            records: Vec::new(),
            report: ParseReport::default(),
            pending: PendingRecord::default(),
        }
    }

    fn malformed(&mut self, line: usize, reason: MalformedReason) {
        self.report.malformed_lines.push(MalformedLine { line, reason });
    }

    fn push_reference(&mut self, line_no: usize, text: &str) {
        match parse_cited_reference(text) {
            Ok(reference) => self.pending.cited_references.push(reference),
            Err(EmptyEntry) => self.malformed(line_no, MalformedReason::EmptyReference),
        }
    }

    fn finish_record(&mut self, line_no: usize) {
        let pending = std::mem::take(&mut self.pending);
        self.report.references_parsed += pending.cited_references.len();
        self.report.references_without_year +=
            pending.cited_references.iter().filter(|r| r.rpy.is_none()).count();
        self.records.push(CitingRecord {
            publication_year: pending.publication_year,
            cited_references: pending.cited_references,
            source_line_range: pending.first_line.unwrap_or(line_no)..=line_no,
        });
        self.report.records_parsed += 1;
    }

    fn line(&mut self, line_no: usize, line: &str) {
        let bytes = line.as_bytes();
        if line.trim_matches(is_ascii_ws).is_empty() {
            if line.starts_with("   ") && self.pending.current_tag == Some(Tag::CitedReferences) {
                self.malformed(line_no, MalformedReason::EmptyReference);
            }
            return;
        }
        if let Some(rest) = line.strip_prefix("   ") {
            match self.pending.current_tag {
                Some(Tag::CitedReferences) => self.push_reference(line_no, rest.trim()),
                Some(Tag::Other) => {}
                None => self.malformed(line_no, MalformedReason::OrphanContinuation),
            }
            return;
        }
        if let Some(rest) = line.strip_prefix("ER") {
            if rest.trim_matches(is_ascii_ws).is_empty() {
                self.pending.touch(line_no);
                self.finish_record(line_no);
                return;
            }
        }
        if !is_tag(bytes) {
            self.malformed(line_no, MalformedReason::UnrecognizedLine);
            self.pending.current_tag = None;
            return;
        }
        let value = line[2..].trim_matches(is_ascii_ws);
        match &line[..2] {
            // File header and trailer tags do not start a record.
            "FN" | "VR" | "EF" if !self.pending.has_fields => {
                self.pending.current_tag = None;
            }
            tag => {
                self.pending.touch(line_no);
                self.pending.has_fields = true;
                match tag {
                    "CR" => {
                        self.pending.current_tag = Some(Tag::CitedReferences);
                        if value.is_empty() {
                            self.malformed(line_no, MalformedReason::EmptyReference);
                        } else {
                            self.push_reference(line_no, value);
                        }
                    }
                    "PY" => {
                        self.pending.current_tag = Some(Tag::Other);
                        match is_year(value) {
                            Some(year) => self.pending.publication_year = Some(year),
                            None => {
                                self.malformed(line_no, MalformedReason::InvalidPublicationYear)
                            }
                        }
                    }
                    _ => self.pending.current_tag = Some(Tag::Other),
                }
            }
        }
    }

    fn finish(mut self) -> (Vec<CitingRecord>, ParseReport) {
        if let Some(first) = self.pending.first_line {
            if self.pending.has_fields {
                self.malformed(first, MalformedReason::UnterminatedRecord);
            }
        }
        (self.records, self.report)
    }
}

/// Parse a complete export in one streaming pass.
///
/// Fails with [`ParseError::TooLarge`] as soon as more than `max_bytes` have
/// been read. Undecodable bytes are replaced and reported, never fatal.
pub fn parse_export<R: Read>(
    input: R,
    max_bytes: u64,
) -> Result<(Vec<CitingRecord>, ParseReport), ParseError> {
    let mut reader = BufReader::new(input.take(max_bytes.saturating_add(1)));
    let mut parser = Parser::new();
    let mut consumed: u64 = 0;
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        consumed += n as u64;
        if consumed > max_bytes {
            return Err(ParseError::TooLarge { limit: max_bytes });
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        let decoded = match std::str::from_utf8(&buf) {
            Ok(text) => std::borrow::Cow::Borrowed(text),
            Err(_) => {
                parser.malformed(line_no, MalformedReason::InvalidUtf8);
                String::from_utf8_lossy(&buf)
            }
        };
        let mut line: &str = &decoded;
        if line_no == 1 {
            line = line.strip_prefix(BOM).unwrap_or(line);
        }
        parser.line(line_no, line);
    }
    Ok(parser.finish())
}

/// Convenience wrapper over [`parse_export`] for in-memory text.
pub fn parse_str(input: &str) -> (Vec<CitingRecord>, ParseReport) {
    parse_export(input.as_bytes(), u64::MAX).expect("in-memory read cannot fail")
}
