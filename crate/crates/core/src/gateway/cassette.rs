use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{AnnotationRequest, Backend, BackendKind, GatewayError, RequestKey};

/// One cassette line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub key: RequestKey,
    pub text: String,
    pub ts: String,
}

/// Recorded responses indexed by request key. On duplicate keys the later
/// line wins.
#[derive(Debug, Clone, Default)]
pub struct Cassette {
    entries: HashMap<RequestKey, String>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let raw = fs::read_to_string(path)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        Self::parse(&raw)
    }

    pub fn parse(raw: &str) -> Result<Self, GatewayError> {
        let mut entries = HashMap::new();
        for (idx, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CassetteEntry = serde_json::from_str(line)
                .map_err(|e| GatewayError::Cassette(format!("line {}: {e}", idx + 1)))?;
            entries.insert(entry.key, entry.text);
        }
        Ok(Cassette { entries })
    }

    pub fn insert(&mut self, key: RequestKey, text: impl Into<String>) {
        self.entries.insert(key, text.into());
    }

    pub fn get(&self, key: &RequestKey) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Append-only cassette file. Appends from concurrent workers are serialized
/// behind a mutex; every line is flushed as it is written.
#[derive(Debug)]
pub struct CassetteWriter {
    path: PathBuf,
    file: Mutex<BufWriter<File>>,
}

impl CassetteWriter {
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| GatewayError::Cassette(format!("{}: {e}", parent.display())))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        Ok(CassetteWriter { path: path.to_path_buf(), file: Mutex::new(BufWriter::new(file)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, key: &RequestKey, text: &str) -> Result<(), GatewayError> {
        let entry = CassetteEntry {
            key: key.clone(),
            text: text.to_string(),
            ts: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        let mut line = serde_json::to_string(&entry).map_err(|e| GatewayError::Cassette(e.to_string()))?;
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", self.path.display())))
    }
}

pub struct ReplayBackend {
    cassette: Cassette,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> Self {
        ReplayBackend { cassette }
    }

    pub fn from_path(path: &Path) -> Result<Self, GatewayError> {
        Ok(Self::new(Cassette::load(path)?))
    }

    pub fn cassette(&self) -> &Cassette {
        &self.cassette
    }
}

impl Backend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(&self, req: &AnnotationRequest) -> Result<String, GatewayError> {
        let key = req.key();
        match self.cassette.get(&key) {
            Some(text) => Ok(text.to_string()),
            None => Err(GatewayError::CacheMiss(key)),
        }
    }
}

/// Forwards to an inner backend and appends each success to a cassette.
pub struct RecordingBackend<B> {
    inner: B,
    writer: CassetteWriter,
    write_error: Mutex<Option<GatewayError>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B, writer: CassetteWriter) -> Self {
        RecordingBackend { inner, writer, write_error: Mutex::new(None) }
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn kind(&self) -> BackendKind {
        self.inner.kind()
    }

    fn complete(&self, req: &AnnotationRequest) -> Result<String, GatewayError> {
        let text = self.inner.complete(req)?;
        if let Err(e) = self.writer.append(&req.key(), &text) {
            self.write_error.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
        }
        Ok(text)
    }

    fn finish(&self) -> Result<(), GatewayError> {
        self.inner.finish()?;
        match self.write_error.lock().unwrap_or_else(|p| p.into_inner()).take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::tests::request;
    use crate::gateway::{annotate, ScriptedBackend};
    use crate::prompts::PromptId;

    #[test]
    fn replay_hit_and_miss() {
        let hit = request("c1", PromptId::P2, 0);
        let miss = request("c2", PromptId::P2, 0);
        let mut cassette = Cassette::default();
        cassette.insert(hit.key(), "No.");
        let backend = ReplayBackend::new(cassette);
        let resp = annotate(&hit, &backend).unwrap();
        assert_eq!(resp.text, "No.");
        assert_eq!(resp.backend, BackendKind::Replay);
        assert_eq!(annotate(&miss, &backend).unwrap_err(), GatewayError::CacheMiss(miss.key()));
    }

    #[test]
    fn cassette_line_format() {
        let req = request("c1", PromptId::P2, 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tape.jsonl");
        let writer = CassetteWriter::open(&path).unwrap();
        writer.append(&req.key(), "Yes.\nBecause.").unwrap();
        drop(writer);
        let raw = fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(raw.trim()).unwrap();
        assert_eq!(v["key"]["prompt"], "P2");
        assert_eq!(v["key"]["concept"], "toxic");
        assert_eq!(v["key"]["comment_id"], "c1");
        assert_eq!(v["key"]["iteration"], 0);
        assert_eq!(v["key"]["params_fp"], req.params.fingerprint());
        assert_eq!(v["text"], "Yes.\nBecause.");
        assert!(v["ts"].as_str().unwrap().ends_with('Z'));
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/tape.jsonl");
        let inner = ScriptedBackend::new(|r: &AnnotationRequest| Ok(format!("  0.{}\n", r.iteration + 1)));
        let recorder = RecordingBackend::new(inner, CassetteWriter::open(&path).unwrap());
        let reqs: Vec<_> = (0..3).map(|i| request("c1", PromptId::P3, i)).collect();
        let recorded: Vec<_> = reqs.iter().map(|r| annotate(r, &recorder).unwrap().text).collect();
        recorder.finish().unwrap();
        let replay = ReplayBackend::from_path(&path).unwrap();
        assert_eq!(replay.cassette().len(), 3);
        let replayed: Vec<_> = reqs.iter().map(|r| annotate(r, &replay).unwrap().text).collect();
        assert_eq!(recorded, replayed);
        assert_eq!(replayed[0], "  0.1\n");
    }

    #[test]
    fn rejects_malformed_cassette() {
        assert!(matches!(Cassette::parse("{}\n"), Err(GatewayError::Cassette(m)) if m.starts_with("line 1")));
    }
}
