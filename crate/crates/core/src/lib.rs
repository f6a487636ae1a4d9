//! Reference Publication Year Spectroscopy over Web of Science exports.
//!
//! [`wos`] reads plain-text exports, [`spectro`] computes standard and
//! Multi-RPYS series, [`index`] builds the searchable reference table and
//! [`export`] renders results as JSON-ready rows and CSV.

pub mod export;
pub mod index;
pub mod spectro;
pub mod wos;

pub use index::{build_index, resolve_link, IndexRow, Mode, Query, ReferenceIndex};
pub use spectro::{
    count_by_rpy, deviation_series, multi_rpys, rank_transform, standard_rpys, Deviation,
    HeatmapMatrix, SpectroSeries, YearRange,
};
pub use wos::{parse_cited_reference, parse_export, CitedReference, CitingRecord, ParseReport};

/// Upload limit applied by default: 15 MiB.
pub const DEFAULT_MAX_BYTES: u64 = 15 * 1024 * 1024;
