//! Fresh output directories and their content-hash manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lsit::io::KeyValues;
use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::error::{config, CliResult};

pub const RUN_MANIFEST: &str = "run.txt";

/// Removes whatever it wrote unless [`RunDir::finish`] ran, so a failed
/// command leaves no partial artifacts behind.
pub struct RunDir {
    root: PathBuf,
    command: &'static str,
    started: Instant,
    created: bool,
    finished: bool,
}

impl RunDir {
    /// Creates `root`, refusing directories that already hold files so no
    /// earlier artifact is overwritten.
    pub fn create(root: &Path, command: &'static str) -> CliResult<Self> {
        if root.exists() && fs::read_dir(root)?.next().is_some() {
            return Err(config(format!(
                "output directory {} is not empty",
                root.display()
            )));
        }
        let created = !root.exists();
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            command,
            started: Instant::now(),
            created,
            finished: false,
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `run.txt`: command, resolved settings, version, wall-clock and
    /// the SHA-256 of every other file under the run directory.
    pub fn finish(mut self, settings: &Settings) -> CliResult<Vec<(String, String)>> {
        let files = hash_tree(&self.root)?;
        let mut kv = KeyValues::new();
        kv.set("command", self.command);
        kv.set("version", env!("CARGO_PKG_VERSION"));
        for (k, v) in settings.key_values().iter() {
            kv.set(&format!("config.{k}"), v);
        }
        kv.set("wall_clock_s", format!("{:.3}", self.started.elapsed().as_secs_f64()));
        kv.set("files", files.len());
        for (rel, hash) in &files {
            kv.set(&format!("sha256.{rel}"), hash);
        }
        kv.save(&self.root.join(RUN_MANIFEST))?;
        self.finished = true;
        Ok(files)
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if self.finished {
            return;
        }
        if self.created {
            let _ = fs::remove_dir_all(&self.root);
        } else if let Ok(entries) = fs::read_dir(&self.root) {
            for e in entries.flatten() {
                let p = e.path();
                let _ = if p.is_dir() { fs::remove_dir_all(p) } else { fs::remove_file(p) };
            }
        }
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// `(relative path, sha256)` for every file below `root` except the run
/// manifest, sorted by path.
pub fn hash_tree(root: &Path) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p
                .strip_prefix(root)
                .expect("walk stays below root")
                .to_string_lossy()
                .replace('\\', "/");
            if rel != RUN_MANIFEST {
                out.push((rel, sha256_file(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}
