//! Standard RPYS and Multi-RPYS computations.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::wos::CitingRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid year range {first}..{last}: first year must not exceed last")]
pub struct InvalidRange {
    pub first: u16,
    pub last: u16,
}

/// Inclusive span of reference publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct YearRange {
    first: u16,
    last: u16,
}

impl Default for YearRange {
    fn default() -> Self {
        YearRange { first: 1900, last: 1999 }
    }
}

impl YearRange {
    pub fn new(first: u16, last: u16) -> Result<Self, InvalidRange> {
        if first > last {
            return Err(InvalidRange { first, last });
        }
        Ok(YearRange { first, last })
    }

    pub fn first(&self) -> u16 {
        self.first
    }

    pub fn last(&self) -> u16 {
        self.last
    }

    pub fn len(&self) -> usize {
        usize::from(self.last - self.first) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, year: u16) -> bool {
        (self.first..=self.last).contains(&year)
    }

    pub fn offset(&self, year: u16) -> Option<usize> {
        self.contains(year).then(|| usize::from(year - self.first))
    }

    pub fn years(&self) -> impl Iterator<Item = u16> + Clone {
        self.first..=self.last
    }
}

/// Difference from a five-year median, kept exact.
///
/// Medians of even-sized windows are half-integral, so the value is stored
/// in half units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Deviation(i64);

impl Deviation {
    pub fn from_halves(halves: i64) -> Self {
        Deviation(halves)
    }

    pub fn from_int(value: i64) -> Self {
        Deviation(value * 2)
    }

    pub fn halves(self) -> i64 {
        self.0
    }

    pub fn is_integral(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integral() {
            write!(f, "{}", self.0 / 2)
        } else {
            let sign = if self.0 < 0 { "-" } else { "" };
            write!(f, "{sign}{}.5", self.0.abs() / 2)
        }
    }
}

impl Serialize for Deviation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_integral() {
            serializer.serialize_i64(self.0 / 2)
        } else {
            serializer.serialize_f64(self.as_f64())
        }
    }
}

/// Reference counts per year in `range`, with multiplicity. References
/// without a year or outside the range are not counted.
pub fn count_by_rpy(records: &[CitingRecord], range: YearRange) -> Vec<u64> {
    count_refs(records.iter(), range)
}

fn count_refs<'a>(records: impl Iterator<Item = &'a CitingRecord>, range: YearRange) -> Vec<u64> {
    let mut counts = vec![0u64; range.len()];
    for reference in records.flat_map(|r| &r.cited_references) {
        if let Some(at) = reference.rpy.and_then(|y| range.offset(y)) {
            counts[at] += 1;
        }
    }
    counts
}

/// Twice the median of `window`, which must be non-empty.
fn doubled_median(window: &mut [u64]) -> i64 {
    window.sort_unstable();
    let mid = window.len() / 2;
    if window.len() % 2 == 1 {
        2 * window[mid] as i64
    } else {
        window[mid - 1] as i64 + window[mid] as i64
    }
}

/// `count(n)` minus the median of `count` over `n-2..=n+2`, the window being
/// truncated at both ends of the series.
pub fn deviation_series(counts: &[u64]) -> Vec<Deviation> {
    let mut window = [0u64; 5];
    (0..counts.len())
        .map(|n| {
            let lo = n.saturating_sub(2);
            let hi = (n + 2).min(counts.len() - 1);
            let window = &mut window[..=hi - lo];
            window.copy_from_slice(&counts[lo..=hi]);
            Deviation(2 * counts[n] as i64 - doubled_median(window))
        })
        .collect()
}

/// Ascending fractional ranks mapped onto `[0, 1]`.
///
/// Ties share the mean of the ranks they cover. A single value maps to 0.5.
pub fn rank_transform<T: Ord>(values: &[T]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![0.5];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let denominator = 2.0 * (n - 1) as f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // mean 1-based rank is (start + 1 + end) / 2, shifted down by one
        let normalized = (start + end - 1) as f64 / denominator;
        for &i in &order[start..end] {
            ranks[i] = normalized;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectroSeries {
    pub range: YearRange,
    pub counts: Vec<u64>,
    pub deviations: Vec<Deviation>,
}

impl SpectroSeries {
    fn from_counts(range: YearRange, counts: Vec<u64>) -> Self {
        let deviations = deviation_series(&counts);
        SpectroSeries { range, counts, deviations }
    }

    pub fn count(&self, year: u16) -> Option<u64> {
        self.range.offset(year).map(|i| self.counts[i])
    }

    pub fn deviation(&self, year: u16) -> Option<Deviation> {
        self.range.offset(year).map(|i| self.deviations[i])
    }

    /// `(year, count, deviation)` for every year of the range.
    pub fn rows(&self) -> impl Iterator<Item = (u16, u64, Deviation)> + '_ {
        self.range
            .years()
            .zip(&self.counts)
            .zip(&self.deviations)
            .map(|((y, c), d)| (y, *c, *d))
    }
}

pub fn standard_rpys(records: &[CitingRecord], range: YearRange) -> SpectroSeries {
    SpectroSeries::from_counts(range, count_by_rpy(records, range))
}

/// One citing year of a [`HeatmapMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub cpy: u16,
    pub counts: Vec<u64>,
    pub deviations: Vec<Deviation>,
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapMatrix {
    pub range: YearRange,
    /// Ascending citing publication years.
    pub rows: Vec<HeatmapRow>,
    /// Records dropped because they carry no publication year.
    pub records_without_year: usize,
}

impl HeatmapMatrix {
    pub fn cpys(&self) -> impl Iterator<Item = u16> + '_ {
        self.rows.iter().map(|r| r.cpy)
    }

    pub fn row(&self, cpy: u16) -> Option<&HeatmapRow> {
        self.rows.iter().find(|r| r.cpy == cpy)
    }
}

/// Standard RPYS per citing publication year, each row rank-transformed.
pub fn multi_rpys(records: &[CitingRecord], range: YearRange) -> HeatmapMatrix {
    let mut by_year: BTreeMap<u16, Vec<&CitingRecord>> = BTreeMap::new();
    let mut records_without_year = 0;
    for record in records {
        match record.publication_year {
            Some(year) => by_year.entry(year).or_default().push(record),
            None => records_without_year += 1,
        }
    }
    let rows = by_year
        .into_par_iter()
        .map(|(cpy, group)| {
            let series = SpectroSeries::from_counts(range, count_refs(group.into_iter(), range));
            let ranks = rank_transform(&series.deviations);
            HeatmapRow { cpy, counts: series.counts, deviations: series.deviations, ranks }
        })
        .collect();
    HeatmapMatrix { range, rows, records_without_year }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wos::parse_str;

    fn devs(counts: &[u64]) -> Vec<f64> {
        deviation_series(counts).into_iter().map(Deviation::as_f64).collect()
    }

    #[test]
    fn default_range() {
        let r = YearRange::default();
        assert_eq!((r.first(), r.last(), r.len()), (1900, 1999, 100));
        assert!(YearRange::new(2000, 1999).is_err());
        assert_eq!(YearRange::new(1980, 1980).unwrap().len(), 1);
    }

    #[test]
    fn constant_series_has_zero_deviation() {
        assert!(devs(&[7; 12]).iter().all(|d| *d == 0.0));
    }

    #[test]
    fn isolated_spike() {
        // windows by hand: [0,10,0] [0,10,0,0] [0,10,0,0,5] [10,0,0,5,0] ...
        let counts = [0, 10, 0, 0, 5, 0, 0];
        assert_eq!(devs(&counts), [0.0, 10.0, 0.0, 0.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn even_edge_window_uses_mean_of_middles() {
        // n=1: window [1, 2, 8, 9] -> median 5, dev -3
        // n=0: window [1, 2, 8] -> median 2, dev -1
        let counts = [1, 2, 8, 9, 20];
        assert_eq!(devs(&counts)[..2], [-1.0, -3.0]);
        let counts = [1, 4, 8, 9, 20];
        // n=1: window [1,4,8,9] median 6, dev -2; n=3: window [4,8,9,20] median 8.5, dev 0.5
        assert_eq!(devs(&counts)[1], -2.0);
        assert_eq!(devs(&counts)[3], 0.5);
    }

    #[test]
    fn short_series() {
        assert_eq!(devs(&[4]), [0.0]);
        assert_eq!(devs(&[4, 1]), [1.5, -1.5]);
    }

    #[test]
    fn the_1980_example() {
        // Only count(1980)=1339 and the median 1025 are known.
        let counts = [900, 1025, 1339, 1100, 1000];
        assert_eq!(deviation_series(&counts)[2], Deviation::from_int(314));
    }

    #[test]
    fn deviation_display_and_json() {
        assert_eq!(Deviation::from_halves(5).to_string(), "2.5");
        assert_eq!(Deviation::from_halves(-5).to_string(), "-2.5");
        assert_eq!(Deviation::from_halves(-1).to_string(), "-0.5");
        assert_eq!(Deviation::from_int(-3).to_string(), "-3");
        assert_eq!(serde_json::to_string(&Deviation::from_int(314)).unwrap(), "314");
        assert_eq!(serde_json::to_string(&Deviation::from_halves(-3)).unwrap(), "-1.5");
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_transform(&[3, 1, 2]), [1.0, 0.0, 0.5]);
        assert_eq!(rank_transform(&[4, 4, 4, 4]), [0.5; 4]);
        assert_eq!(rank_transform(&[9]), [0.5]);
        assert_eq!(rank_transform(&[1, 2, 3, 4, 5]), [0.0, 0.25, 0.5, 0.75, 1.0]);
        // ranks 1, 2.5, 2.5, 4 -> 0, 0.5, 0.5, 1
        assert_eq!(rank_transform(&[1, 5, 5, 7]), [0.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn counts_skip_missing_and_out_of_range_years() {
        let text = "PY 2000\nCR A, 1950, X\n   B, 1950, Y\n   C, NOYEAR\n   D, 1850, Z\nER\n";
        let (records, _) = parse_str(text);
        let counts = count_by_rpy(&records, YearRange::default());
        assert_eq!(counts[50], 2);
        assert_eq!(counts.iter().sum::<u64>(), 2);
    }

    #[test]
    fn empty_input_is_all_zero() {
        let s = standard_rpys(&[], YearRange::default());
        assert_eq!(s.counts.len(), 100);
        assert!(s.rows().all(|(_, c, d)| c == 0 && d == Deviation::default()));
        let m = multi_rpys(&[], YearRange::default());
        assert!(m.rows.is_empty());
    }

    #[test]
    fn single_citing_year_matches_standard() {
        let text = "PY 2001\nCR A, 1950, X\n   B, 1951, Y\nER\nPY 2001\nCR C, 1950, Z\nER\n";
        let (records, _) = parse_str(text);
        let range = YearRange::new(1945, 1955).unwrap();
        let s = standard_rpys(&records, range);
        let m = multi_rpys(&records, range);
        assert_eq!(m.rows.len(), 1);
        assert_eq!(m.rows[0].cpy, 2001);
        assert_eq!(m.rows[0].counts, s.counts);
        assert_eq!(m.rows[0].deviations, s.deviations);
    }

    #[test]
    fn multi_skips_records_without_year() {
        let text = "CR A, 1950, X\nER\nPY 2001\nCR C, 1950, Z\nER\n";
        let (records, _) = parse_str(text);
        let m = multi_rpys(&records, YearRange::default());
        assert_eq!(m.records_without_year, 1);
        assert_eq!(m.cpys().collect::<Vec<_>>(), [2001]);
    }
}
