use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::cache::read_records;
use super::{Backend, BackendRequest, BackendResponse, Capabilities};
use crate::error::{Error, Result};

type Fallback = Box<dyn Fn(&BackendRequest) -> Result<BackendResponse> + Send + Sync>;

/// Replays recorded responses keyed by request hash.
pub struct ScriptedBackend {
    tag: String,
    capabilities: Capabilities,
    table: HashMap<String, BackendResponse>,
    failing: HashSet<String>,
    fallback: Option<Fallback>,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            capabilities: Capabilities {
                ranking: true,
                greedy: true,
            },
            table: HashMap::new(),
            failing: HashSet::new(),
            fallback: None,
            calls: AtomicUsize::new(0),
        }
    }

    /// Load every record of a cache file as a fixture.
    pub fn from_cache_file(tag: impl Into<String>, path: &Path) -> Result<Self> {
        let mut backend = Self::new(tag);
        for record in read_records(path)? {
            backend.table.insert(record.request_hash, record.response);
        }
        Ok(backend)
    }

    pub fn with_capabilities(mut self, capabilities: Capabilities) -> Self {
        self.capabilities = capabilities;
        self
    }

    pub fn with_response(mut self, request: &BackendRequest, response: BackendResponse) -> Self {
        self.table.insert(request.cache_key(), response);
        self
    }

    pub fn insert(&mut self, request_hash: impl Into<String>, response: BackendResponse) {
        self.table.insert(request_hash.into(), response);
    }

    /// Make every request with this hash fail with a transport error.
    pub fn fail_on(mut self, request_hash: impl Into<String>) -> Self {
        self.failing.insert(request_hash.into());
        self
    }

    /// Answer unscripted requests with `f` instead of failing.
    pub fn with_fallback<F>(mut self, f: F) -> Self
    where
        F: Fn(&BackendRequest) -> Result<BackendResponse> + Send + Sync + 'static,
    {
        self.fallback = Some(Box::new(f));
        self
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn lookup(&self, request: &BackendRequest) -> Result<BackendResponse> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = request.cache_key();
        if self.failing.contains(&key) {
            return Err(Error::Transport(format!(
                "scripted failure for request {key}"
            )));
        }
        if let Some(response) = self.table.get(&key) {
            return Ok(response.clone());
        }
        match &self.fallback {
            Some(f) => f(request),
            None => Err(Error::Backend(format!(
                "no scripted response for request {key}"
            ))),
        }
    }
}

impl Backend for ScriptedBackend {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse> {
        if !self.capabilities.ranking {
            return Err(Error::Capability(format!(
                "backend {} cannot rank options",
                self.tag
            )));
        }
        let response = self.lookup(request)?;
        response.logprobs_for(request)?;
        Ok(response)
    }

    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse> {
        if !self.capabilities.greedy {
            return Err(Error::Capability(format!(
                "backend {} cannot generate",
                self.tag
            )));
        }
        self.lookup(request)
    }
}
