//! Tabular views of analysis results, shared by the HTTP API and the CLI.
//!
//! JSON is produced by serializing these types directly. CSV always carries
//! a header row and quotes fields containing separators or quotes.

use std::io::Write;

use serde::Serialize;

use crate::index::{Mode, SearchHits};
use crate::spectro::{Deviation, HeatmapMatrix, SpectroSeries, YearRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpectrogramRow {
    pub year: u16,
    pub count: u64,
    pub deviation: Deviation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Spectrogram {
    pub range: YearRange,
    pub rows: Vec<SpectrogramRow>,
}

impl From<&SpectroSeries> for Spectrogram {
    fn from(series: &SpectroSeries) -> Self {
        Spectrogram {
            range: series.range,
            rows: series
                .rows()
                .map(|(year, count, deviation)| SpectrogramRow { year, count, deviation })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatmapCell {
    pub cpy: u16,
    pub rpy: u16,
    pub count: u64,
    pub deviation: Deviation,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub range: YearRange,
    pub cpys: Vec<u16>,
    /// Row-major: every RPY of the first CPY, then the next CPY.
    pub rows: Vec<HeatmapCell>,
}

impl From<&HeatmapMatrix> for Heatmap {
    fn from(matrix: &HeatmapMatrix) -> Self {
        let rows = matrix
            .rows
            .iter()
            .flat_map(|row| {
                matrix.range.years().enumerate().map(move |(i, rpy)| HeatmapCell {
                    cpy: row.cpy,
                    rpy,
                    count: row.counts[i],
                    deviation: row.deviations[i],
                    rank: row.ranks[i],
                })
            })
            .collect();
        Heatmap { range: matrix.range, cpys: matrix.cpys().collect(), rows }
    }
}

pub fn write_spectrogram_csv<W: Write>(out: W, table: &Spectrogram) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "count", "deviation"])?;
    for row in &table.rows {
        w.write_record([row.year.to_string(), row.count.to_string(), row.deviation.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_heatmap_csv<W: Write>(out: W, table: &Heatmap) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cpy", "rpy", "count", "deviation", "rank"])?;
    for cell in &table.rows {
        w.write_record([
            cell.cpy.to_string(),
            cell.rpy.to_string(),
            cell.count.to_string(),
            cell.deviation.to_string(),
            format!("{:.6}", cell.rank),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Table rows; the `cpy` column is present only for multi-mode indexes.
pub fn write_table_csv<W: Write>(out: W, hits: &SearchHits<'_>, mode: Mode) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_cpy = mode == Mode::Multi;
    if with_cpy {
        w.write_record(["author", "rpy", "source", "times", "cpy", "link"])?;
    } else {
        w.write_record(["author", "rpy", "source", "times", "link"])?;
    }
    for row in &hits.rows {
        let times = row.times_referenced.to_string();
        let mut record = vec![row.author.as_str(), &row.rpy_label, &row.source, &times];
        if with_cpy {
            record.push(row.cpy_label.as_deref().unwrap_or(""));
        }
        record.push(&row.link.url);
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}
