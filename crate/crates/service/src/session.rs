//! Analysis sessions and the in-memory table holding them.

use std::collections::HashMap;
use std::io::Cursor;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime};

use rpys_core::export::{Heatmap, Spectrogram};
use rpys_core::wos::ParseError;
use rpys_core::{
    build_index, multi_rpys, parse_export, standard_rpys, Mode, ParseReport, ReferenceIndex,
    YearRange,
};
use serde::Serialize;
use uuid::Uuid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(Uuid);

impl SessionId {
    fn random() -> Self {
        SessionId(Uuid::new_v4())
    }

    pub fn parse(text: &str) -> Option<Self> {
        Uuid::try_parse(text).ok().map(SessionId)
    }
}

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.simple().fmt(f)
    }
}

impl Serialize for SessionId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The analysis a session was created for; exactly one per session.
#[derive(Debug)]
pub enum Analysis {
    Standard(Spectrogram),
    Multi(Heatmap),
}

#[derive(Debug)]
pub struct Session {
    pub id: SessionId,
    pub created_at: SystemTime,
    pub mode: Mode,
    pub range: YearRange,
    pub analysis: Analysis,
    pub index: ReferenceIndex,
    pub report: ParseReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub id: SessionId,
    pub mode: Mode,
    pub records: usize,
    pub references: usize,
}

impl Session {
    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id,
            mode: self.mode,
            records: self.report.records_parsed,
            references: self.report.references_parsed,
        }
    }
}

#[derive(Debug)]
pub enum AnalyzeError {
    TooLarge { limit: u64 },
    NoRecords(ParseReport),
}

/// Parse and analyze an upload. The buffer is zeroed and released before
/// this returns, whatever the outcome.
pub fn analyze(
    mut upload: Vec<u8>,
    mode: Mode,
    range: YearRange,
    max_bytes: u64,
) -> Result<Session, AnalyzeError> {
    let parsed = parse_export(Cursor::new(&upload[..]), max_bytes);
    upload.fill(0);
    drop(upload);
    let (records, report) = match parsed {
        Ok(parsed) => parsed,
        Err(ParseError::TooLarge { limit }) => return Err(AnalyzeError::TooLarge { limit }),
        Err(ParseError::Io(_)) => unreachable!("reading from memory"),
    };
    if records.is_empty() {
        return Err(AnalyzeError::NoRecords(report));
    }
    let analysis = match mode {
        Mode::Standard => Analysis::Standard(Spectrogram::from(&standard_rpys(&records, range))),
        Mode::Multi => Analysis::Multi(Heatmap::from(&multi_rpys(&records, range))),
    };
    let index = build_index(&records, mode, range);
    Ok(Session {
        id: SessionId::random(),
        created_at: SystemTime::now(),
        mode,
        range,
        analysis,
        index,
        report,
    })
}

struct Entry {
    session: Arc<Session>,
    last_access: Mutex<Instant>,
}

/// Live sessions. Sessions are immutable once inserted, and readers only
/// take the shared lock.
pub struct SessionStore {
    sessions: RwLock<HashMap<SessionId, Entry>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore { sessions: RwLock::new(HashMap::new()), ttl }
    }

    pub fn insert(&self, session: Session) -> Arc<Session> {
        let session = Arc::new(session);
        let entry = Entry { session: Arc::clone(&session), last_access: Mutex::new(Instant::now()) };
        self.sessions.write().unwrap().insert(session.id, entry);
        session
    }

    /// Look up a session and refresh its idle timer. Expired sessions are
    /// removed and reported as missing.
    pub fn get(&self, id: SessionId) -> Option<Arc<Session>> {
        let now = Instant::now();
        {
            let sessions = self.sessions.read().unwrap();
            let entry = sessions.get(&id)?;
            let mut last = entry.last_access.lock().unwrap();
            if now.duration_since(*last) < self.ttl {
                *last = now;
                return Some(Arc::clone(&entry.session));
            }
        }
        self.remove(id);
        None
    }

    /// Idempotent.
    pub fn remove(&self, id: SessionId) {
        self.sessions.write().unwrap().remove(&id);
    }

    /// Drop every session idle for at least the TTL; returns how many.
    pub fn expire(&self) -> usize {
        let now = Instant::now();
        let mut sessions = self.sessions.write().unwrap();
        let before = sessions.len();
        sessions.retain(|_, e| now.duration_since(*e.last_access.lock().unwrap()) < self.ttl);
        before - sessions.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }
}
