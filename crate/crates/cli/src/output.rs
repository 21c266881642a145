use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ringgather_core::trace::{write_trace, TraceEvent};
use serde::Serialize;

/// Writes via a sibling temporary file and a rename, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| io::Error::other("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn write_events(path: &Path, events: &[TraceEvent]) -> io::Result<()> {
    let mut buf = Vec::new();
    write_trace(&mut buf, events)?;
    write_atomic(path, &buf)
}

/// `<base>.<i>.jsonl` next to `base`.
pub fn numbered(base: &Path, i: usize) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(format!(".{i}.jsonl"));
    PathBuf::from(name)
}
