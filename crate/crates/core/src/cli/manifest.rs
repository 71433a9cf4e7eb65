use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, shown_as: impl Into<String>) -> io::Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(Self {
            path: shown_as.into(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Provenance record written next to every output set.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// RFC 3339; `None` when timestamps are suppressed for reproducible output.
    pub timestamp: Option<String>,
    pub command: String,
    pub arguments: Vec<String>,
    pub settings: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        arguments: Vec<String>,
        settings: serde_json::Value,
        with_timestamp: bool,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            timestamp: with_timestamp
                .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            command: command.to_string(),
            arguments,
            settings,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs
            .push(FileDigest::of(path, path.display().to_string())?);
        Ok(())
    }

    /// Outputs are listed by file name; they live next to the manifest.
    pub fn add_output(&mut self, path: &Path) -> io::Result<()> {
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        self.outputs.push(FileDigest::of(path, name)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}

/// Output paths sharing one directory and file-name prefix.
#[derive(Debug, Clone)]
pub struct OutputSet {
    dir: PathBuf,
    prefix: String,
}

impl OutputSet {
    pub fn new(dir: PathBuf, prefix: String) -> io::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, prefix })
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}_{suffix}", self.prefix))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.path("manifest.json")
    }

    pub fn manifest_name(&self) -> String {
        format!("{}_manifest.json", self.prefix)
    }
}
