//! Loading documents and taxonomies from disk by file extension.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{parse_bioc, parse_brat, parse_conllx, parse_taxonomy, FormatError, Report};
use crate::graph::{Document, SourceFormat, Taxonomy};

pub const TAXONOMY_EXTENSION: &str = "tax";
pub const SHARED_TAXONOMY: &str = "taxonomy.tax";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}: unknown file type")]
    UnknownFormat(PathBuf),
}

impl LoadError {
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::Io { .. } => "IO_ERROR",
            LoadError::Format { source, .. } => source.code(),
            LoadError::UnknownFormat(_) => "UNKNOWN_FORMAT",
        }
    }
}

/// Format implied by a file extension.
pub fn detect(path: &Path) -> Option<SourceFormat> {
    match path.extension()?.to_str()? {
        "ann" | "txt" => Some(SourceFormat::Brat),
        "conll" | "conllx" => Some(SourceFormat::Conllx),
        "xml" | "bioc" => Some(SourceFormat::Bioc),
        _ => None,
    }
}

pub fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("document").to_string()
}

/// Parses the file at `path` (for BRAT either half of the pair). Document
/// ids are the file stem; BioC documents keep their own ids.
pub fn load(path: &Path, format: Option<SourceFormat>) -> Result<(Vec<Document>, Report), LoadError> {
    let format = format.or_else(|| detect(path)).ok_or_else(|| LoadError::UnknownFormat(path.to_path_buf()))?;
    let fmt_err = |source| LoadError::Format { path: path.to_path_buf(), source };
    match format {
        SourceFormat::Brat => {
            let txt_path = path.with_extension("txt");
            let ann_path = path.with_extension("ann");
            let (doc, report) = parse_brat(&stem(path), &read(&txt_path)?, &read(&ann_path)?).map_err(fmt_err)?;
            Ok((vec![doc], report))
        }
        SourceFormat::Conllx => {
            let (doc, report) = parse_conllx(&stem(path), &read(path)?).map_err(fmt_err)?;
            Ok((vec![doc], report))
        }
        SourceFormat::Bioc => parse_bioc(&read(path)?).map_err(fmt_err),
    }
}

/// `<stem>.tax` next to the document, else `taxonomy.tax` in its folder.
pub fn find_taxonomy(path: &Path) -> Option<PathBuf> {
    let own = path.with_extension(TAXONOMY_EXTENSION);
    if own.is_file() {
        return Some(own);
    }
    let shared = path.parent().unwrap_or(Path::new(".")).join(SHARED_TAXONOMY);
    shared.is_file().then_some(shared)
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy, LoadError> {
    let id = stem(path);
    parse_taxonomy(Some(&id), &read(path)?).map_err(|source| LoadError::Format { path: path.to_path_buf(), source })
}
