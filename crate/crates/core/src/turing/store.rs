use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{Ack, NextItem, ReaderSession, Response, SessionError, SessionItem, SessionOptions, StudyResult};
use crate::error::{Error, Result};

/// One line of a session's event log.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Created {
        id: String,
        options: SessionOptions,
        items: Vec<SessionItem>,
    },
    Response(Response),
    Finalized,
}

struct Entry {
    session: ReaderSession,
    log: PathBuf,
}

/// Sessions backed by one append-only JSON-lines file each.
///
/// Every mutation validates, appends and fsyncs the event, then updates
/// memory, all under the session's lock. Reopening the directory replays
/// the logs into the same state.
pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut sessions = HashMap::new();
        let listing = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in listing {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                let session = replay(&path)?;
                sessions.insert(session.id.clone(), Arc::new(Mutex::new(Entry { session, log: path })));
            }
        }
        Ok(SessionStore {
            dir,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Persists a new session under a random id.
    pub fn create(&self, options: SessionOptions, items: Vec<SessionItem>) -> Result<ReaderSession> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let log = self.dir.join(format!("{id}.jsonl"));
        let event = Event::Created {
            id: id.clone(),
            options: options.clone(),
            items: items.clone(),
        };
        let mut file = File::create_new(&log).map_err(|e| Error::io(&log, e))?;
        write_event(&mut file, &log, &event)?;
        let session = ReaderSession::new(id.clone(), options, items);
        self.sessions.write().unwrap().insert(
            id,
            Arc::new(Mutex::new(Entry {
                session: session.clone(),
                log,
            })),
        );
        Ok(session)
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()).into())
    }

    /// Snapshot of the session state.
    pub fn get(&self, id: &str) -> Result<ReaderSession> {
        Ok(self.entry(id)?.lock().unwrap().session.clone())
    }

    pub fn next_item(&self, id: &str) -> Result<NextItem> {
        Ok(self.entry(id)?.lock().unwrap().session.next_item())
    }

    pub fn submit(&self, id: &str, response: Response) -> Result<Ack> {
        let entry = self.entry(id)?;
        let mut e = entry.lock().unwrap();
        e.session.validate_response(&response)?;
        append(&e.log, &Event::Response(response.clone()))?;
        let item_id = response.item_id.clone();
        e.session.apply_response(response);
        Ok(e.session.ack(&item_id))
    }

    /// Unlocks results before every item is answered. No-op on a
    /// complete session.
    pub fn finalize(&self, id: &str) -> Result<ReaderSession> {
        let entry = self.entry(id)?;
        let mut e = entry.lock().unwrap();
        if e.session.status == super::SessionStatus::Active {
            append(&e.log, &Event::Finalized)?;
            e.session.apply_finalize();
        }
        Ok(e.session.clone())
    }

    pub fn results(&self, id: &str) -> Result<StudyResult> {
        Ok(self.entry(id)?.lock().unwrap().session.results()?)
    }
}

fn write_event(file: &mut File, path: &Path, event: &Event) -> Result<()> {
    let mut line = serde_json::to_vec(event)?;
    line.push(b'\n');
    file.write_all(&line).map_err(|e| Error::io(path, e))?;
    file.sync_data().map_err(|e| Error::io(path, e))
}

fn append(path: &Path, event: &Event) -> Result<()> {
    let mut file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    write_event(&mut file, path, event)
}

/// Rebuilds a session from its log. A torn final line (crash mid-write) is
/// ignored; any other malformed line is an error.
fn replay(path: &Path) -> Result<ReaderSession> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let corrupt = |what: String| -> Error { SessionError::CorruptLog(format!("{}: {what}", path.display())).into() };
    let mut session: Option<ReaderSession> = None;
    let last = lines.len().saturating_sub(1);
    for (n, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(_) if n == last => break,
            Err(e) => return Err(corrupt(format!("line {}: {e}", n + 1))),
        };
        match (event, session.as_mut()) {
            (Event::Created { id, options, items }, None) => session = Some(ReaderSession::new(id, options, items)),
            (Event::Response(r), Some(s)) => {
                s.validate_response(&r)
                    .map_err(|e| corrupt(format!("line {}: {e}", n + 1)))?;
                s.apply_response(r);
            }
            (Event::Finalized, Some(s)) => s.apply_finalize(),
            _ => return Err(corrupt(format!("line {}: unexpected event", n + 1))),
        }
    }
    session.ok_or_else(|| corrupt("no created event".into()))
}
