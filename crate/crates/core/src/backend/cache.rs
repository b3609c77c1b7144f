use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendRequest, BackendResponse, Capabilities};
use crate::error::Result;

/// One line of the cache file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub request_hash: String,
    pub response: BackendResponse,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Parse a cache file, skipping unreadable lines with a warning.
pub(crate) fn read_records(path: &Path) -> Result<Vec<CacheRecord>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CacheRecord>(&line) {
            Ok(r) => records.push(r),
            Err(e) => log::warn!(
                "{}:{}: skipping corrupt cache entry: {e}",
                path.display(),
                lineno + 1
            ),
        }
    }
    Ok(records)
}

/// Backend wrapper that memoizes successful responses in an append-only JSONL file.
pub struct CachedBackend<B> {
    inner: B,
    path: PathBuf,
    entries: RwLock<HashMap<String, BackendResponse>>,
    writer: Mutex<File>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

/// Wrap `backend` with a persistent cache at `path`, loading any existing records.
pub fn with_cache<B: Backend>(backend: B, path: impl AsRef<Path>) -> Result<CachedBackend<B>> {
    CachedBackend::open(backend, path)
}

impl<B: Backend> CachedBackend<B> {
    pub fn open(inner: B, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let entries: HashMap<String, BackendResponse> = read_records(&path)?
            .into_iter()
            .map(|r| (r.request_hash, r.response))
            .collect();
        let mut writer = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)?;
        // a torn final line must not swallow the next record
        let len = writer.metadata()?.len();
        if len > 0 {
            writer.seek(SeekFrom::Start(len - 1))?;
            let mut last = [0u8; 1];
            writer.read_exact(&mut last)?;
            if last[0] != b'\n' {
                writer.write_all(b"\n")?;
            }
        }
        Ok(Self {
            inner,
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(writer),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    fn cached<F>(&self, request: &BackendRequest, compute: F) -> Result<BackendResponse>
    where
        F: FnOnce(&BackendRequest) -> Result<BackendResponse>,
    {
        let key = request.cache_key();
        if let Some(hit) = self.entries.read().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit.clone());
        }
        self.misses.fetch_add(1, Ordering::SeqCst);
        let response = compute(request)?;
        let record = CacheRecord {
            request_hash: key.clone(),
            response: response.clone(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        {
            let mut writer = self.writer.lock().expect("cache writer lock");
            writer.write_all(line.as_bytes())?;
            writer.flush()?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(key, response.clone());
        Ok(response)
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn tag(&self) -> &str {
        self.inner.tag()
    }

    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse> {
        self.cached(request, |r| self.inner.score_options(r))
    }

    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse> {
        self.cached(request, |r| self.inner.generate_greedy(r))
    }
}
