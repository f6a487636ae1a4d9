//! Searchable table of cited-reference variants.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Serialize;
use thiserror::Error;

use crate::spectro::YearRange;
use crate::wos::{CitedReference, CitingRecord};

/// Rows served per query unless configured otherwise.
pub const DEFAULT_ROW_LIMIT: usize = 40;

const SCHOLAR_SEARCH: &str = "https://scholar.google.com/scholar?q=";
const DOI_RESOLVER: &str = "https://doi.org/";

// RFC 3986 unreserved characters stay literal.
const QUERY_ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Standard,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown mode {0:?}, expected one of: standard, multi")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Mode::Standard),
            "multi" => Ok(Mode::Multi),
            other => Err(UnknownMode(other.to_owned())),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Standard => "standard",
            Mode::Multi => "multi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Doi,
    Scholar,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ResolvedLink {
    pub kind: LinkKind,
    pub url: String,
}

/// DOI link when available, otherwise a scholar search for author, source
/// and year (or the raw entry when none of those were parsed).
pub fn resolve_link(reference: &CitedReference) -> ResolvedLink {
    if let Some(doi) = &reference.doi {
        return ResolvedLink { kind: LinkKind::Doi, url: format!("{DOI_RESOLVER}{doi}") };
    }
    let year = reference.rpy.map(|y| y.to_string());
    let parts: Vec<&str> = [reference.author.as_str(), reference.source.as_str()]
        .into_iter()
        .chain(year.as_deref())
        .filter(|p| !p.is_empty())
        .collect();
    let query = if parts.is_empty() { reference.raw.clone() } else { parts.join(" ") };
    ResolvedLink {
        kind: LinkKind::Scholar,
        url: format!("{SCHOLAR_SEARCH}{}", utf8_percent_encode(&query, QUERY_ENCODE)),
    }
}

/// Exact identity of a reference variant. No normalization is applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariantKey {
    pub author: String,
    pub rpy: Option<u16>,
    pub source: String,
    pub volume: Option<u32>,
    pub page: Option<String>,
    pub doi: Option<String>,
}

impl From<&CitedReference> for VariantKey {
    fn from(r: &CitedReference) -> Self {
        VariantKey {
            author: r.author.clone(),
            rpy: r.rpy,
            source: r.source.clone(),
            volume: r.volume,
            page: r.page.clone(),
            doi: r.doi.clone(),
        }
    }
}

impl VariantKey {
    /// Source as shown in the table, e.g. `PHILOS SCI V47 P165`.
    fn display_source(&self) -> String {
        let mut out = self.source.clone();
        let mut push = |piece: String| {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&piece);
        };
        if let Some(v) = self.volume {
            push(format!("V{v}"));
        }
        if let Some(p) = &self.page {
            push(format!("P{p}"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexRow {
    pub author: String,
    #[serde(rename = "rpy")]
    pub rpy_label: String,
    pub source: String,
    #[serde(rename = "times")]
    pub times_referenced: u64,
    #[serde(rename = "cpy", skip_serializing_if = "Option::is_none")]
    pub cpy_label: Option<String>,
    pub link: ResolvedLink,
    #[serde(skip)]
    pub variant: VariantKey,
    #[serde(skip)]
    pub cpy: Option<u16>,
}

/// Built rows plus the lowercase text each token is matched against.
#[derive(Debug, Clone)]
pub struct ReferenceIndex {
    mode: Mode,
    rows: Vec<IndexRow>,
    haystacks: Vec<String>,
}

/// Aggregate references into one row per exact variant (per citing year in
/// multi mode). References with a year outside `range` are left out;
/// references without a year are kept with an empty RPY label.
pub fn build_index(records: &[CitingRecord], mode: Mode, range: YearRange) -> ReferenceIndex {
    let mut groups: BTreeMap<(VariantKey, Option<u16>), (u64, &CitedReference)> = BTreeMap::new();
    for record in records {
        let cpy = match mode {
            Mode::Standard => None,
            Mode::Multi => match record.publication_year {
                Some(year) => Some(year),
                None => continue,
            },
        };
        for reference in &record.cited_references {
            if reference.rpy.is_some_and(|y| !range.contains(y)) {
                continue;
            }
            groups
                .entry((VariantKey::from(reference), cpy))
                .and_modify(|(n, _)| *n += 1)
                .or_insert((1, reference));
        }
    }
    let rows: Vec<IndexRow> = groups
        .into_iter()
        .map(|((variant, cpy), (times, first))| IndexRow {
            author: variant.author.clone(),
            rpy_label: variant.rpy.map(|y| format!("RPY{y}")).unwrap_or_default(),
            source: variant.display_source(),
            times_referenced: times,
            cpy_label: cpy.map(|y| format!("CPY{y}")),
            link: resolve_link(first),
            variant,
            cpy,
        })
        .collect();
    let haystacks = rows.iter().map(haystack).collect();
    ReferenceIndex { mode, rows, haystacks }
}

// Fields are joined by '\n', which can never appear inside a token.
fn haystack(row: &IndexRow) -> String {
    let mut text = String::new();
    for field in [&row.author, &row.rpy_label, &row.source]
        .into_iter()
        .chain(row.cpy_label.as_ref())
    {
        text.push_str(&field.to_lowercase());
        text.push('\n');
    }
    text
}

impl ReferenceIndex {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rows(&self) -> &[IndexRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows matching every token, sorted, then truncated to the query limit.
    pub fn search(&self, query: &Query) -> SearchHits<'_> {
        let tokens: Vec<String> = query.tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut hits: Vec<usize> = (0..self.rows.len())
            .filter(|&i| tokens.iter().all(|t| self.haystacks[i].contains(t.as_str())))
            .collect();
        let total_matches = hits.len();
        let cmp = |a: &usize, b: &usize| {
            compare(&self.rows[*a], &self.rows[*b], query.sort_key, query.direction).then(a.cmp(b))
        };
        match query.limit {
            Some(limit) if limit < hits.len() => {
                hits.select_nth_unstable_by(limit, cmp);
                hits.truncate(limit);
                hits.sort_unstable_by(cmp);
            }
            _ => hits.sort_unstable_by(cmp),
        }
        SearchHits { total_matches, rows: hits.into_iter().map(|i| &self.rows[i]).collect() }
    }
}

fn compare(a: &IndexRow, b: &IndexRow, key: SortKey, direction: SortDirection) -> Ordering {
    let primary = match key {
        SortKey::Author => a.author.cmp(&b.author),
        SortKey::Rpy => a.rpy_label.cmp(&b.rpy_label),
        SortKey::Source => a.source.cmp(&b.source),
        SortKey::Times => a.times_referenced.cmp(&b.times_referenced),
        SortKey::Cpy => a.cpy_label.cmp(&b.cpy_label),
    };
    let primary = match direction {
        SortDirection::Ascending => primary,
        SortDirection::Descending => primary.reverse(),
    };
    primary.then_with(|| a.author.cmp(&b.author)).then_with(|| a.source.cmp(&b.source))
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchHits<'a> {
    /// Matches before truncation.
    pub total_matches: usize,
    pub rows: Vec<&'a IndexRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortKey {
    Author,
    Rpy,
    Source,
    #[default]
    Times,
    Cpy,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown sort key {0:?}, expected one of: author, rpy, source, times, cpy")]
pub struct UnknownSortKey(pub String);

impl FromStr for SortKey {
    type Err = UnknownSortKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "author" => Ok(SortKey::Author),
            "rpy" => Ok(SortKey::Rpy),
            "source" => Ok(SortKey::Source),
            "times" => Ok(SortKey::Times),
            "cpy" => Ok(SortKey::Cpy),
            other => Err(UnknownSortKey(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortDirection {
    Ascending,
    #[default]
    Descending,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown sort direction {0:?}, expected one of: asc, desc")]
pub struct UnknownDirection(pub String);

impl FromStr for SortDirection {
    type Err = UnknownDirection;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asc" | "ascending" => Ok(SortDirection::Ascending),
            "desc" | "descending" => Ok(SortDirection::Descending),
            other => Err(UnknownDirection(other.to_owned())),
        }
    }
}

/// Search box contents plus sort and row limit. `limit: None` returns every
/// match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub tokens: Vec<String>,
    pub sort_key: SortKey,
    pub direction: SortDirection,
    pub limit: Option<usize>,
}

impl Default for Query {
    fn default() -> Self {
        Query {
            tokens: Vec::new(),
            sort_key: SortKey::default(),
            direction: SortDirection::default(),
            limit: Some(DEFAULT_ROW_LIMIT),
        }
    }
}

impl Query {
    /// Query with tokens split from `text` on whitespace.
    pub fn new(text: &str) -> Self {
        Query { tokens: text.split_whitespace().map(str::to_owned).collect(), ..Query::default() }
    }

    pub fn sorted(mut self, key: SortKey, direction: SortDirection) -> Self {
        self.sort_key = key;
        self.direction = direction;
        self
    }

    pub fn with_limit(mut self, limit: Option<usize>) -> Self {
        self.limit = limit;
        self
    }
}
