//! Artifact files. Line 1 of every artifact names the tool version and the
//! config hash; the comment syntax depends on the file type.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// `#` comment line: tsv, csv, plain text.
    Hash,
    /// `//` comment line.
    Dot,
    /// `<!-- -->` comment line.
    Markdown,
    /// First member of a JSON object.
    Json,
}

impl Format {
    pub fn for_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("dot") => Format::Dot,
            Some("md") => Format::Markdown,
            Some("json") => Format::Json,
            _ => Format::Hash,
        }
    }
}

pub fn header_text(hash: &str) -> String {
    format!("causal-survey {VERSION} config={hash}")
}

/// Writes `body` under a header. JSON bodies must be a serialized value;
/// they are wrapped as `{"header": ..., "data": body}`.
pub fn write(path: &Path, hash: &str, body: &str) -> Result<()> {
    let head = header_text(hash);
    let text = match Format::for_path(path) {
        Format::Hash => format!("# {head}\n{body}"),
        Format::Dot => format!("// {head}\n{body}"),
        Format::Markdown => format!("<!-- {head} -->\n{body}"),
        Format::Json => format!("{{\"header\": {},\n\"data\": {}}}\n", serde_json::to_string(&head)?, body.trim_end()),
    };
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, hash: &str, value: &T) -> Result<()> {
    write(path, hash, &serde_json::to_string_pretty(value)?)
}

/// Config hash recorded in an artifact's header line.
pub fn read_hash(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or_default();
    match first.split("config=").nth(1) {
        Some(rest) => Ok(rest.chars().take_while(|c| c.is_ascii_hexdigit()).collect()),
        None => bail!("{} has no artifact header", path.display()),
    }
}

/// Artifact contents after the header line.
pub fn read_body(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.split_once('\n').map(|(_, rest)| rest.to_string()).unwrap_or_default())
}

#[derive(serde::Deserialize)]
struct Wrapped<T> {
    data: T,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let w: Wrapped<T> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(w.data)
}

/// Exclusive claim on an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(".causal-survey.lock");
        let file: std::io::Result<File> = OpenOptions::new().write(true).create_new(true).open(&path);
        match file {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                bail!("output directory {} is locked by another run ({})", dir.display(), path.display())
            }
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
