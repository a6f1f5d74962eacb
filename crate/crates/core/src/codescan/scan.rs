//! Project-level scanning over a directory tree or a ZIP archive.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Cursor, Read};
use std::path::{Component, Path};

use serde::Serialize;
use walkdir::WalkDir;

use super::extract::{extract_functions, hash_function, normalize_line_endings, FunctionHash, FunctionSpan, Language};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanLimits {
    pub max_files: usize,
    pub max_file_bytes: u64,
}

impl Default for ScanLimits {
    fn default() -> Self {
        ScanLimits { max_files: 10_000, max_file_bytes: 10 * 1024 * 1024 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid archive: {0}")]
    Archive(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectScan {
    /// Sorted by path, then offset.
    pub spans: Vec<FunctionSpan>,
    /// Sorted, deduplicated.
    pub hashes: Vec<FunctionHash>,
    pub files_scanned: usize,
    pub files_skipped: usize,
    /// Number of scanned files per language.
    pub languages: BTreeMap<Language, usize>,
}

impl ProjectScan {
    /// Each span paired with its digest, in span order.
    pub fn hashed_spans(&self) -> impl Iterator<Item = (&FunctionSpan, FunctionHash)> {
        self.spans.iter().map(|s| (s, hash_function(s)))
    }
}

#[derive(Default)]
struct Collector {
    spans: Vec<FunctionSpan>,
    files_seen: usize,
    files_scanned: usize,
    files_skipped: usize,
    languages: BTreeMap<Language, usize>,
}

impl Collector {
    fn count_file(&mut self, limits: &ScanLimits) -> Result<(), ScanError> {
        self.files_seen += 1;
        if self.files_seen > limits.max_files {
            return Err(ScanError::ResourceLimit(format!("more than {} files", limits.max_files)));
        }
        Ok(())
    }

    fn add(&mut self, rel_path: String, language: Option<Language>, bytes: &[u8]) {
        let Some(language) = language else {
            self.files_skipped += 1;
            return;
        };
        let Ok(text) = std::str::from_utf8(bytes) else {
            tracing::debug!(path = %rel_path, "skipping source file that is not UTF-8");
            self.files_skipped += 1;
            return;
        };
        self.files_scanned += 1;
        *self.languages.entry(language).or_default() += 1;
        let text = normalize_line_endings(text);
        for mut span in extract_functions(&text, language) {
            span.file_path = rel_path.clone();
            self.spans.push(span);
        }
    }

    fn finish(mut self) -> ProjectScan {
        self.spans.sort_by(|a, b| a.file_path.cmp(&b.file_path).then(a.offset.cmp(&b.offset)));
        let hashes: BTreeSet<FunctionHash> = self.spans.iter().map(hash_function).collect();
        ProjectScan {
            spans: self.spans,
            hashes: hashes.into_iter().collect(),
            files_scanned: self.files_scanned,
            files_skipped: self.files_skipped,
            languages: self.languages,
        }
    }
}

fn language_of(path: &Path) -> Option<Language> {
    path.extension().and_then(|e| e.to_str()).and_then(Language::from_extension)
}

fn slash_path(path: &Path) -> String {
    path.components()
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("/")
}

/// Scans every regular file under `root`.
pub fn scan_dir(root: &Path, limits: &ScanLimits) -> Result<ProjectScan, ScanError> {
    let io_err = |path: &Path, source| ScanError::Io { path: path.display().to_string(), source };
    if !root.is_dir() {
        let source = std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory");
        return Err(io_err(root, source));
    }
    let mut collector = Collector::default();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf());
            io_err(&path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        collector.count_file(limits)?;
        let path = entry.path();
        let rel = slash_path(path.strip_prefix(root).unwrap_or(path));
        let language = language_of(path);
        if language.is_some() {
            let len = entry.metadata().map_err(|e| io_err(path, e.into()))?.len();
            if len > limits.max_file_bytes {
                return Err(ScanError::ResourceLimit(format!(
                    "{rel} is {len} bytes (limit {})",
                    limits.max_file_bytes
                )));
            }
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            collector.add(rel, language, &bytes);
        } else {
            collector.add(rel, None, &[]);
        }
    }
    Ok(collector.finish())
}

/// Scans the file entries of a ZIP archive held in memory.
pub fn scan_zip(bytes: &[u8], limits: &ScanLimits) -> Result<ProjectScan, ScanError> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes)).map_err(|e| ScanError::Archive(e.to_string()))?;
    if archive.len() > limits.max_files {
        return Err(ScanError::ResourceLimit(format!(
            "archive has {} entries (limit {})",
            archive.len(),
            limits.max_files
        )));
    }
    let mut collector = Collector::default();
    for i in 0..archive.len() {
        let mut file = archive.by_index(i).map_err(|e| ScanError::Archive(e.to_string()))?;
        if file.is_dir() {
            continue;
        }
        let Some(path) = file.enclosed_name() else {
            return Err(ScanError::Archive(format!("unsafe entry path {:?}", file.name())));
        };
        collector.count_file(limits)?;
        let rel = slash_path(&path);
        let language = language_of(&path);
        if language.is_none() {
            collector.add(rel, None, &[]);
            continue;
        }
        if file.size() > limits.max_file_bytes {
            return Err(ScanError::ResourceLimit(format!(
                "{rel} expands to {} bytes (limit {})",
                file.size(),
                limits.max_file_bytes
            )));
        }
        // the declared size can lie; cap what is actually inflated
        let mut buf = Vec::new();
        (&mut file)
            .take(limits.max_file_bytes + 1)
            .read_to_end(&mut buf)
            .map_err(|e| ScanError::Archive(format!("{rel}: {e}")))?;
        if buf.len() as u64 > limits.max_file_bytes {
            return Err(ScanError::ResourceLimit(format!("{rel} inflates past {} bytes", limits.max_file_bytes)));
        }
        collector.add(rel, language, &buf);
    }
    Ok(collector.finish())
}

/// Scans a directory, or a `.zip` file on disk.
pub fn scan_project(path: &Path, limits: &ScanLimits) -> Result<ProjectScan, ScanError> {
    if path.is_dir() {
        return scan_dir(path, limits);
    }
    let bytes = std::fs::read(path).map_err(|source| ScanError::Io { path: path.display().to_string(), source })?;
    scan_zip(&bytes, limits)
}

/// Packs `(path, contents)` entries into a deflated ZIP. Entry timestamps
/// are fixed so equal inputs give equal bytes.
pub fn build_zip<'a, I>(entries: I) -> std::io::Result<Vec<u8>>
where
    I: IntoIterator<Item = (&'a str, &'a [u8])>,
{
    use std::io::Write;
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default());
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    for (name, body) in entries {
        w.start_file(name, options)?;
        w.write_all(body)?;
    }
    Ok(w.finish()?.into_inner())
}
