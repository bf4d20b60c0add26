//! Output locations, the `config.txt` echo and atomic writes.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub const DEFAULT_DIR: &str = "ctflow-out";

/// Where a command writes: a directory holding `config.txt` and the command's files.
pub struct Output {
    dir: PathBuf,
    /// Explicit file name given with `--out`, used for the main output of single-file commands.
    file: Option<PathBuf>,
}

impl Output {
    /// A path with an extension names the main output file (its parent holds `config.txt`);
    /// anything else is a directory.
    pub fn resolve(out: Option<&Path>) -> Self {
        match out {
            None => Self { dir: PathBuf::from(DEFAULT_DIR), file: None },
            Some(p) if p.extension().is_some() && !p.as_os_str().to_string_lossy().ends_with('/') => {
                let dir = match p.parent() {
                    Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                    _ => PathBuf::from("."),
                };
                Self { dir, file: Some(p.to_path_buf()) }
            }
            Some(p) => Self { dir: p.to_path_buf(), file: None },
        }
    }

    /// Always a directory, for commands writing several files.
    pub fn dir_only(out: Option<&Path>) -> Self {
        Self { dir: out.map_or_else(|| PathBuf::from(DEFAULT_DIR), Path::to_path_buf), file: None }
    }

    pub fn main_file(&self, default_name: &str) -> PathBuf {
        self.file.clone().unwrap_or_else(|| self.dir.join(default_name))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_config(&self, config: &Config) -> Result<()> {
        write_atomic(&self.path("config.txt"), config.render().as_bytes())
    }
}

/// Resolved parameters, echoed as `key=value` lines.
pub struct Config(Vec<(String, String)>);

impl Config {
    pub fn new(command: &str) -> Self {
        Self(vec![("command".into(), command.into()), ("version".into(), env!("CARGO_PKG_VERSION").into())])
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Write through a temporary file in the target directory, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// CSV text with the given header and rows of numbers.
pub fn csv_bytes<R, I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: Display,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(|v| v.to_string()))?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}
