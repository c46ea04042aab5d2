//! Artifact writer. Every file carries the config digest and master seed;
//! nothing depends on the clock or the host.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::DriverError;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    artifact: &'a str,
    config_digest: &'a str,
    seed: u64,
    data: &'a T,
}

pub struct Artifacts {
    dir: PathBuf,
    digest: String,
    seed: u64,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path, digest: String, seed: u64) -> Result<Self, DriverError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), digest, seed, written: Vec::new() })
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// `# key=value` pairs for CSV writers of the core crate.
    pub fn meta(&self) -> Vec<(&'static str, String)> {
        vec![("config_digest", self.digest.clone()), ("seed", self.seed.to_string())]
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), DriverError> {
        let env = Envelope { artifact: name, config_digest: &self.digest, seed: self.seed, data };
        let text = perpetual_core::json::to_pretty(&env)?;
        self.put(name, &text)
    }

    /// CSV text already carrying its metadata lines.
    pub fn text(&mut self, name: &str, text: &str) -> Result<(), DriverError> {
        self.put(name, text)
    }

    /// CSV from a header and rows of preformatted fields.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), DriverError> {
        let mut out = String::new();
        for (k, v) in self.meta() {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        self.put(name, &out)
    }

    fn put(&mut self, name: &str, text: &str) -> Result<(), DriverError> {
        std::fs::write(self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }
}
