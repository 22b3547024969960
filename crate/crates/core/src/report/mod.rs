//! Datasets, run directories and report files.

pub mod dataset;
pub mod manifest;
pub mod tables;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::cdx_client::{CdxRecord, StorageError};
use crate::scraper::ScrapeResult;

pub use dataset::{load_dataset, normalize_handle, parse_dataset, resolve_dataset, top25, Dataset, DatasetError};
pub use manifest::{CacheState, RunManifest, StageCounts, StageRun};
pub use tables::{
    format_pct, read_classified, read_onset, read_series_csv, read_series_json, read_verdicts, write_classified,
    write_json, write_onset, write_series_csv, write_series_json, write_verdicts, ReportError,
};

pub const MANIFEST: &str = "manifest.json";
pub const CLASSIFIED_CSV: &str = "classified.csv";
pub const REPLAYABILITY_CSV: &str = "replayability.csv";
pub const REPLAYABILITY_JSON: &str = "replayability.json";
pub const ONSET_JSON: &str = "onset.json";
pub const VERDICTS_CSV: &str = "verdicts.csv";
pub const RECORDS_DIR: &str = "records";
pub const SCRAPES_DIR: &str = "scrapes";

fn storage(path: &Path) -> impl FnOnce(std::io::Error) -> StorageError + '_ {
    move |source| StorageError {
        path: path.to_path_buf(),
        source,
    }
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<(), ReportError>) -> Result<(), ReportError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(storage(dir))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp).map_err(storage(&tmp))?;
        file.write_all(&buf).map_err(storage(&tmp))?;
        file.sync_all().map_err(storage(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(storage(path))?;
    Ok(())
}

/// `runs/{run-id}/` and the files inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(output_dir: &Path, run_id: &str) -> Self {
        RunDir {
            root: output_dir.join("runs").join(run_id),
        }
    }

    pub fn at(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn exists(&self) -> bool {
        self.root.join(MANIFEST).is_file()
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn records_path(&self, handle: &str) -> PathBuf {
        self.root.join(RECORDS_DIR).join(format!("{handle}.json"))
    }

    pub fn scrape_path(&self, result: &ScrapeResult) -> PathBuf {
        self.root.join(SCRAPES_DIR).join(result.file_name())
    }

    pub fn read_manifest(&self) -> Result<RunManifest, ReportError> {
        let p = self.path(MANIFEST);
        let bytes = fs::read(&p).map_err(storage(&p))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn write_manifest(&self, m: &RunManifest) -> Result<(), ReportError> {
        write_atomic(&self.path(MANIFEST), |b| write_json(b, m))
    }

    pub fn write_records(&self, handle: &str, records: &[CdxRecord]) -> Result<(), ReportError> {
        write_atomic(&self.records_path(handle), |b| write_json(b, records))
    }

    pub fn read_records(&self, handle: &str) -> Result<Vec<CdxRecord>, ReportError> {
        let p = self.records_path(handle);
        let bytes = fs::read(&p).map_err(storage(&p))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Handles with a records file, sorted.
    pub fn record_handles(&self) -> Result<Vec<String>, ReportError> {
        let dir = self.root.join(RECORDS_DIR);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(storage(&dir))? {
            let p = entry.map_err(storage(&dir))?.path();
            if p.extension().is_some_and(|e| e == "json") {
                if let Some(stem) = p.file_stem() {
                    out.push(stem.to_string_lossy().into_owned());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn write_scrape(&self, result: &ScrapeResult) -> Result<PathBuf, ReportError> {
        let p = self.scrape_path(result);
        write_atomic(&p, |b| write_json(b, result))?;
        Ok(p)
    }
}

pub fn read_scrape(path: &Path) -> Result<ScrapeResult, ReportError> {
    let bytes = fs::read(path).map_err(storage(path))?;
    Ok(serde_json::from_slice(&bytes)?)
}
