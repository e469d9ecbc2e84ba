//! On-disk layout under the data directory:
//!
//! ```text
//! models/<id>.json        exchange document, byte-for-byte as posted
//! models/<id>.meta.json   creation time
//! races/<id>/race.json    race metadata, rewritten on every status change
//! races/<id>/events.log   append-only event log in the shared line format
//! ```
//!
//! Each log line carries a trailing comment with the wall-clock receipt time
//! and, for events that arrived without a timestamp, a `stamped` marker.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use easytime::runtime::TimingEvent;
use easytime::simulator::{format_line, EventLog};

use crate::RaceStatus;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ModelMeta {
    pub created_at_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct RaceMeta {
    pub model_id: String,
    pub roster: Vec<u32>,
    pub debounce_ms: u64,
    pub status: RaceStatus,
    pub created_at_ms: u64,
    /// Wall-clock time of the start command.
    pub started_at_ms: Option<u64>,
}

/// One line of a race's event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LoggedEvent {
    pub event: TimingEvent,
    pub received_at_ms: u64,
    pub stamped: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Store {
    root: PathBuf,
}

fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Store> {
        let root = root.into();
        fs::create_dir_all(root.join("models"))?;
        fs::create_dir_all(root.join("races"))?;
        Ok(Store { root })
    }

    fn model_path(&self, id: &str) -> PathBuf {
        self.root.join("models").join(format!("{id}.json"))
    }

    fn race_dir(&self, id: &str) -> PathBuf {
        self.root.join("races").join(id)
    }

    pub fn save_model(&self, id: &str, document: &str, meta: &ModelMeta) -> io::Result<()> {
        write_atomic(
            &self.root.join("models").join(format!("{id}.meta.json")),
            &serde_json::to_vec(meta)?,
        )?;
        write_atomic(&self.model_path(id), document.as_bytes())
    }

    /// All stored models as `(id, document, meta)`.
    pub fn load_models(&self) -> io::Result<Vec<(String, String, ModelMeta)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("models"))? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some(id) = name.strip_suffix(".json") else {
                continue;
            };
            if id.ends_with(".meta") {
                continue;
            }
            let document = fs::read_to_string(&path)?;
            let meta_path = self.root.join("models").join(format!("{id}.meta.json"));
            let meta = match fs::read(&meta_path) {
                Ok(bytes) => serde_json::from_slice(&bytes)?,
                Err(e) if e.kind() == io::ErrorKind::NotFound => ModelMeta { created_at_ms: 0 },
                Err(e) => return Err(e),
            };
            out.push((id.to_string(), document, meta));
        }
        Ok(out)
    }

    pub fn save_race(&self, id: &str, meta: &RaceMeta) -> io::Result<()> {
        let dir = self.race_dir(id);
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join("race.json"), &serde_json::to_vec_pretty(meta)?)
    }

    pub fn open_log(&self, id: &str) -> io::Result<File> {
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.race_dir(id).join("events.log"))
    }

    pub fn append(file: &mut File, entry: &LoggedEvent) -> io::Result<()> {
        let mut line = format!("{} # received={}", format_line(&entry.event), entry.received_at_ms);
        if entry.stamped {
            line.push_str(" stamped");
        }
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_data()
    }

    /// All races as `(id, meta, log)`.
    pub fn load_races(&self) -> io::Result<Vec<(String, RaceMeta, Vec<LoggedEvent>)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("races"))? {
            let dir = entry?.path();
            let Some(id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
                continue;
            };
            let meta: RaceMeta = serde_json::from_slice(&fs::read(dir.join("race.json"))?)?;
            let text = match fs::read_to_string(dir.join("events.log")) {
                Ok(t) => t,
                Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
                Err(e) => return Err(e),
            };
            out.push((id, meta, parse_log(&text)?));
        }
        Ok(out)
    }
}

pub(crate) fn parse_log(text: &str) -> io::Result<Vec<LoggedEvent>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let (body, comment) = raw.split_once('#').unwrap_or((raw, ""));
        let events = EventLog::parse(body).map_err(|e| invalid(format!("line {}: {}", i + 1, e.message)))?;
        let Some(mut event) = events.events.into_iter().next() else {
            continue;
        };
        let mut received_at_ms = 0;
        let mut stamped = false;
        for word in comment.split_whitespace() {
            if let Some(v) = word.strip_prefix("received=") {
                received_at_ms = v.parse().map_err(|_| invalid(format!("line {}: bad receipt time", i + 1)))?;
            } else if word == "stamped" {
                stamped = true;
            }
        }
        event.seq = out.len() as u64;
        out.push(LoggedEvent {
            event,
            received_at_ms,
            stamped,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_lines_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store
            .save_race(
                "r1",
                &RaceMeta {
                    model_id: "m1".into(),
                    roster: vec![1],
                    debounce_ms: 30_000,
                    status: RaceStatus::Running,
                    created_at_ms: 5,
                    started_at_ms: Some(6),
                },
            )
            .unwrap();
        let mut file = store.open_log("r1").unwrap();
        let entries = [
            LoggedEvent {
                event: TimingEvent { timestamp: 0, competitor: 0, mp: 0, agent: 1, seq: 0 },
                received_at_ms: 10,
                stamped: false,
            },
            LoggedEvent {
                event: TimingEvent { timestamp: 1500, competitor: 1, mp: 2, agent: 2, seq: 1 },
                received_at_ms: 1510,
                stamped: true,
            },
        ];
        for e in &entries {
            Store::append(&mut file, e).unwrap();
        }
        let races = store.load_races().unwrap();
        assert_eq!(races.len(), 1);
        assert_eq!(races[0].2, entries);
    }
}
