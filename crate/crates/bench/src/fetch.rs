//! Downloading and verifying the vendored UCI files.

use std::io::Read;
use std::path::{Path, PathBuf};

use dsa_core::data::{sha256_hex, verify_file, DatasetId};

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FetchStatus {
    Verified(PathBuf),
    Downloaded(PathBuf),
}

/// Verifies each file in `dir`; missing or corrupt files are downloaded
/// unless `verify_only` is set.
pub fn fetch(dir: &Path, ids: &[DatasetId], verify_only: bool) -> Result<Vec<FetchStatus>> {
    std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    ids.iter()
        .map(|&id| {
            let path = id.path_in(dir);
            if path.exists() && verify_file(id, &path).is_ok() {
                return Ok(FetchStatus::Verified(path));
            }
            if verify_only {
                verify_file(id, &path)?;
                return Ok(FetchStatus::Verified(path));
            }
            download(id, &path)?;
            Ok(FetchStatus::Downloaded(path))
        })
        .collect()
}

fn download(id: DatasetId, path: &Path) -> Result<()> {
    let url = id.url();
    let response = ureq::get(&url)
        .call()
        .map_err(|e| BenchError::Fetch(format!("{url}: {e}")))?;
    let mut body = Vec::new();
    response
        .into_reader()
        .take(64 << 20)
        .read_to_end(&mut body)
        .map_err(|e| BenchError::Fetch(format!("{url}: {e}")))?;
    let got = sha256_hex(&body);
    if got != id.sha256() {
        return Err(BenchError::Fetch(format!(
            "{url}: checksum {got}, expected {}",
            id.sha256()
        )));
    }
    std::fs::write(path, &body).map_err(BenchError::io(path))
}
