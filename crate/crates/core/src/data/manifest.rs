//! Plain-text dataset manifests: one path per line.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Blank lines and lines starting with `#` are skipped; relative paths are
/// resolved against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let entries: Vec<PathBuf> =
        text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(|l| base.join(l)).collect();
    if entries.is_empty() {
        return Err(Error::Format(format!("{}: manifest lists no files", path.display())));
    }
    Ok(entries)
}
