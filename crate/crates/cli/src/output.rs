use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::sha256_hex;
use crate::error::{CliError, CliResult};

pub const OUT_DIR_ENV: &str = "PECHO_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "pecho-out";

/// Flag, then config, then environment, then `pecho-out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Files produced by one command, held in memory until every input has been
/// validated and then written in order.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> CliResult<()> {
        let name = name.into();
        if self.files.iter().any(|(n, _)| *n == name) {
            return Err(CliError::invalid(format!("two outputs would be written to `{name}`")));
        }
        self.files.push((name, bytes.into()));
        Ok(())
    }

    pub fn entries(&self) -> Vec<OutputEntry> {
        self.files
            .iter()
            .map(|(n, b)| OutputEntry {
                path: n.clone(),
                sha256: sha256_hex(b),
            })
            .collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = vec![];
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
