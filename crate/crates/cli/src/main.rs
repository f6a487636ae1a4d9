use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rpys_core::export::{
    write_heatmap_csv, write_spectrogram_csv, write_table_csv, Heatmap, Spectrogram,
};
use rpys_core::index::{SortDirection, SortKey};
use rpys_core::{
    build_index, multi_rpys, parse_export, standard_rpys, CitingRecord, Mode, ParseReport, Query,
    YearRange,
};
use rpys_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "rpys", version, about = "Reference Publication Year Spectroscopy for Web of Science exports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counts and 5-year-median deviations per reference year
    Standard {
        file: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Standard RPYS per citing year, with rank-transformed deviations
    Multi {
        file: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cited-reference table filtered by search tokens
    Table {
        file: PathBuf,
        /// Whitespace-separated tokens, all of which must match
        #[arg(long, short, default_value = "")]
        query: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Standard)]
        mode: ModeArg,
        /// author, rpy, source, times or cpy
        #[arg(long, default_value = "times")]
        sort: String,
        /// asc or desc
        #[arg(long, default_value = "desc")]
        dir: String,
        /// Maximum rows to write; all matches when omitted
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the HTTP analysis service
    Serve {
        /// Overrides RPYS_BIND
        #[arg(long)]
        bind: Option<SocketAddr>,
        /// Overrides RPYS_MAX_UPLOAD_BYTES
        #[arg(long)]
        max_upload_bytes: Option<u64>,
        /// Overrides RPYS_SESSION_TTL_SECS
        #[arg(long)]
        ttl_secs: Option<u64>,
        /// Overrides RPYS_STATIC_DIR
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value_t = 1900)]
    from: u16,
    #[arg(long, default_value_t = 1999)]
    to: u16,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refuse inputs larger than this many bytes
    #[arg(long)]
    max_bytes: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Standard,
    Multi,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Standard => Mode::Standard,
            ModeArg::Multi => Mode::Multi,
        }
    }
}

impl OutputArgs {
    fn range(&self) -> Result<YearRange> {
        Ok(YearRange::new(self.from, self.to)?)
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn emit<T: serde::Serialize>(
        &self,
        value: &T,
        csv: impl FnOnce(&mut dyn Write) -> csv::Result<()>,
    ) -> Result<()> {
        let mut out = self.writer()?;
        match self.format {
            Format::Csv => csv(&mut out)?,
            Format::Json => {
                serde_json::to_writer(&mut out, value)?;
                writeln!(out)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn report_diagnostics(path: &Path, report: &ParseReport) {
    if !report.malformed_lines.is_empty() {
        eprintln!("{}: {} malformed line(s)", path.display(), report.malformed_lines.len());
        for m in report.malformed_lines.iter().take(10) {
            eprintln!("  line {}: {:?}", m.line, m.reason);
        }
    }
}

fn load(path: &Path, max_bytes: Option<u64>) -> Result<Vec<CitingRecord>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (records, report) = parse_export(file, max_bytes.unwrap_or(u64::MAX))
        .with_context(|| format!("cannot parse {}", path.display()))?;
    report_diagnostics(path, &report);
    if records.is_empty() {
        let report = serde_json::to_string(&report)?;
        bail!("{}: no records found\n{report}", path.display());
    }
    Ok(records)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Standard { file, output } => {
            let range = output.range()?;
            let records = load(&file, output.max_bytes)?;
            let table = Spectrogram::from(&standard_rpys(&records, range));
            output.emit(&table, |w| write_spectrogram_csv(w, &table))
        }
        Command::Multi { file, output } => {
            let range = output.range()?;
            let records = load(&file, output.max_bytes)?;
            let table = Heatmap::from(&multi_rpys(&records, range));
            output.emit(&table, |w| write_heatmap_csv(w, &table))
        }
        Command::Table { file, query, mode, sort, dir, limit, output } => {
            let range = output.range()?;
            let sort: SortKey = sort.parse()?;
            let dir: SortDirection = dir.parse()?;
            if limit == Some(0) {
                bail!("--limit must be positive");
            }
            let records = load(&file, output.max_bytes)?;
            let mode = Mode::from(mode);
            let index = build_index(&records, mode, range);
            let hits = index.search(&Query::new(&query).sorted(sort, dir).with_limit(limit));
            output.emit(&hits, |w| write_table_csv(w, &hits, mode))
        }
        Command::Serve { bind, max_upload_bytes, ttl_secs, static_dir } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .with_writer(io::stderr)
                .init();
            let mut config = ServiceConfig::from_env()?;
            if let Some(bind) = bind {
                config.bind = bind;
            }
            if let Some(max) = max_upload_bytes {
                config.max_upload_bytes = max;
            }
            if let Some(secs) = ttl_secs {
                config.session_ttl = Duration::from_secs(secs);
            }
            if static_dir.is_some() {
                config.static_dir = static_dir;
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(rpys_service::serve(config))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
