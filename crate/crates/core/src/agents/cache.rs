//! Record/replay transcript cache: one JSON file per exchange, named by the
//! sha256 of (role, backend id, prompt).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AgentError, AgentRole, AgentTranscript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Serve hits from disk, call the model on a miss and store the result.
    Record,
    /// Serve hits only; a miss is an error and the model is never called.
    Replay,
}

pub fn cache_key(role: AgentRole, prompt: &str, backend_id: &str) -> String {
    let mut h = Sha256::new();
    for part in [role.to_string().as_str(), backend_id, prompt] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug)]
pub struct TranscriptCache {
    dir: PathBuf,
    mode: CacheMode,
    write_lock: Mutex<()>,
}

impl TranscriptCache {
    pub fn open(dir: &Path, mode: CacheMode) -> Result<Self, AgentError> {
        match mode {
            CacheMode::Record => fs::create_dir_all(dir).map_err(cache_err(dir))?,
            CacheMode::Replay if !dir.is_dir() => {
                return Err(AgentError::Cache(format!(
                    "replay directory {} does not exist",
                    dir.display()
                )))
            }
            CacheMode::Replay => {}
        }
        Ok(TranscriptCache {
            dir: dir.to_path_buf(),
            mode,
            write_lock: Mutex::new(()),
        })
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<AgentTranscript>, AgentError> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(cache_err(&path)(e)),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| AgentError::Cache(format!("{}: {e}", path.display())))
    }

    /// Writes via a temporary file and rename so readers never see a partial record.
    pub fn put(&self, transcript: &AgentTranscript) -> Result<(), AgentError> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.path(&transcript.cache_key);
        let tmp = self.dir.join(format!(".{}.tmp", transcript.cache_key));
        let body = serde_json::to_string_pretty(transcript)
            .map_err(|e| AgentError::Cache(e.to_string()))?;
        let mut f = fs::File::create(&tmp).map_err(cache_err(&tmp))?;
        f.write_all(body.as_bytes()).map_err(cache_err(&tmp))?;
        f.write_all(b"\n").map_err(cache_err(&tmp))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(cache_err(&path))
    }

    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|rd| {
                rd.filter_map(Result::ok)
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn cache_err(path: &Path) -> impl Fn(std::io::Error) -> AgentError + '_ {
    move |e| AgentError::Cache(format!("{}: {e}", path.display()))
}
