use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use songwell_core::session::{parse_transcript, Record, TranscriptParseError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session `{0}` already exists")]
    Exists(String),
    #[error("session `{0}` does not exist")]
    Missing(String),
    #[error("invalid session id `{0}`")]
    InvalidId(String),
    #[error("session `{id}`: {source}")]
    Corrupt {
        id: String,
        #[source]
        source: TranscriptParseError,
    },
    #[error("storage i/o: {0}")]
    Io(#[from] io::Error),
}

/// Append-only record log per session. A session's records are never rewritten.
pub trait Store: Send + Sync {
    fn create(&self, id: &str, records: &[Record]) -> Result<(), StoreError>;
    fn append(&self, id: &str, records: &[Record]) -> Result<(), StoreError>;
    fn load(&self, id: &str) -> Result<Option<Vec<Record>>, StoreError>;
    fn ids(&self) -> Result<Vec<String>, StoreError>;
}

/// Ids become file names, so only a conservative alphabet is allowed.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn check_id(id: &str) -> Result<(), StoreError> {
    if valid_id(id) {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

fn encode(records: &[Record]) -> String {
    records.iter().map(|r| r.to_line() + "\n").collect()
}

/// One JSONL file per session. Each append is a single write followed by `sync_data`.
/// Records left after the last turn record by a crash are cut off on the next load.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
}

impl FileStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn write(file: &mut File, records: &[Record]) -> Result<(), StoreError> {
        file.write_all(encode(records).as_bytes())?;
        file.sync_data()?;
        Ok(())
    }
}

impl Store for FileStore {
    fn create(&self, id: &str, records: &[Record]) -> Result<(), StoreError> {
        check_id(id)?;
        let mut file = match OpenOptions::new().write(true).create_new(true).open(self.path(id)) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => return Err(StoreError::Exists(id.into())),
            Err(e) => return Err(e.into()),
        };
        Self::write(&mut file, records)
    }

    fn append(&self, id: &str, records: &[Record]) -> Result<(), StoreError> {
        check_id(id)?;
        let mut file = match OpenOptions::new().append(true).open(self.path(id)) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::Missing(id.into())),
            Err(e) => return Err(e.into()),
        };
        Self::write(&mut file, records)
    }

    fn load(&self, id: &str) -> Result<Option<Vec<Record>>, StoreError> {
        check_id(id)?;
        let path = self.path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let complete = text.rfind('\n').map_or(0, |i| i + 1);
        let mut records =
            parse_transcript(&text[..complete]).map_err(|source| StoreError::Corrupt { id: id.into(), source })?;
        // Every batch ends with a turn record, so anything after the last one is a partial batch.
        let keep = records.iter().rposition(|r| matches!(r, Record::Turn(_))).map_or(0, |i| i + 1);
        if complete < text.len() || keep < records.len() {
            let end: usize = text.split_inclusive('\n').take(keep).map(str::len).sum();
            tracing::warn!(session = id, bytes = text.len() - end, "discarding an incomplete trailing batch");
            OpenOptions::new().write(true).open(&path)?.set_len(end as u64)?;
            records.truncate(keep);
        }
        Ok(Some(records))
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".jsonl")) {
                if valid_id(id) {
                    ids.push(id.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// In-process store for tests and throwaway servers.
#[derive(Debug, Default)]
pub struct MemoryStore {
    sessions: Mutex<BTreeMap<String, Vec<Record>>>,
}

impl Store for MemoryStore {
    fn create(&self, id: &str, records: &[Record]) -> Result<(), StoreError> {
        check_id(id)?;
        let mut sessions = self.sessions.lock();
        if sessions.contains_key(id) {
            return Err(StoreError::Exists(id.into()));
        }
        sessions.insert(id.into(), records.to_vec());
        Ok(())
    }

    fn append(&self, id: &str, records: &[Record]) -> Result<(), StoreError> {
        let mut sessions = self.sessions.lock();
        let log = sessions.get_mut(id).ok_or_else(|| StoreError::Missing(id.into()))?;
        log.extend_from_slice(records);
        Ok(())
    }

    fn load(&self, id: &str) -> Result<Option<Vec<Record>>, StoreError> {
        Ok(self.sessions.lock().get(id).cloned())
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        Ok(self.sessions.lock().keys().cloned().collect())
    }
}
