//! Run manifests: a `key=value` audit record written next to every artifact.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use boxnet::util::{atomic_write, Fnv1a};
use chrono::{SecondsFormat, Utc};

/// Accumulates the command line, configuration, seeds, and dataset hashes of
/// one run, then writes an identical manifest beside each artifact.
pub(crate) struct Manifest {
    command: String,
    started: String,
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub(crate) fn begin(argv: &[String]) -> Self {
        Manifest {
            command: argv.join(" "),
            started: now(),
            entries: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Records the FNV-1a hash of a file's bytes under `key`.
    pub(crate) fn hash_file(&mut self, key: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path)
            .with_context(|| format!("hashing {} for the manifest", path.display()))?;
        let mut h = Fnv1a::new();
        h.write(&bytes);
        self.push(key, h.finish_hex());
        Ok(())
    }

    /// Writes `<artifact>.manifest` beside every artifact, atomically.
    pub(crate) fn write_next_to(mut self, artifacts: &[&Path]) -> Result<()> {
        for (i, a) in artifacts.iter().enumerate() {
            self.entries
                .push((format!("artifact.{i}"), a.display().to_string()));
        }
        let mut text = String::new();
        text.push_str(&format!("command={}\n", self.command));
        text.push_str(&format!("started={}\n", self.started));
        text.push_str(&format!("finished={}\n", now()));
        for (k, v) in &self.entries {
            text.push_str(&format!("{k}={v}\n"));
        }
        for a in artifacts {
            let p = manifest_path(a);
            atomic_write(&p, text.as_bytes())
                .with_context(|| format!("writing manifest {}", p.display()))?;
        }
        Ok(())
    }
}

pub(crate) fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    artifact.with_file_name(name)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}
