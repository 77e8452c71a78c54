//! Dataset archive fetching with checksum pinning.
//!
//! The published corpora live on a public archive host; a fetch downloads
//! once into a local cache and verifies a SHA-256 digest. A cached archive
//! that already matches the digest is never re-downloaded, so fetch works
//! offline after the first run.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("download of {url} failed: {reason}")]
    Download { url: String, reason: String },
    #[error("checksum mismatch for {path}: expected {expected}, got {actual}")]
    ChecksumMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("archive {0} is not a supported format (expected .zip)")]
    UnsupportedArchive(PathBuf),
    #[error("archive error in {path}: {reason}")]
    BadArchive { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn sha256_file(path: &Path) -> Result<String, FetchError> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Fetch `url` into `dest`, verifying the SHA-256 digest.
///
/// If `dest` exists and matches `expected_checksum`, the cached file is
/// returned without touching the network. `expected_checksum = None` pins
/// trust-on-first-use: the digest of the downloaded file is written next to
/// it as `<dest>.sha256` and enforced on later fetches.
///
/// `url` may be `http(s)://...`, `file://<path>`, or a plain filesystem path.
pub fn fetch_dataset(
    url: &str,
    expected_checksum: Option<&str>,
    dest: &Path,
) -> Result<PathBuf, FetchError> {
    let sidecar = dest.with_extension(format!(
        "{}.sha256",
        dest.extension()
            .map(|e| e.to_string_lossy())
            .unwrap_or_default()
    ));
    let pinned: Option<String> = match expected_checksum {
        Some(sum) => Some(sum.to_ascii_lowercase()),
        None => fs::read_to_string(&sidecar)
            .ok()
            .map(|s| s.trim().to_ascii_lowercase()),
    };

    if dest.is_file() {
        let actual = sha256_file(dest)?;
        match &pinned {
            Some(expected) if *expected != actual => {
                return Err(FetchError::ChecksumMismatch {
                    path: dest.to_path_buf(),
                    expected: expected.clone(),
                    actual,
                });
            }
            _ => return Ok(dest.to_path_buf()),
        }
    }

    if let Some(parent) = dest.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = dest.with_extension("partial");
    download(url, &tmp)?;

    let actual = sha256_file(&tmp)?;
    if let Some(expected) = &pinned {
        if *expected != actual {
            fs::remove_file(&tmp).ok();
            return Err(FetchError::ChecksumMismatch {
                path: dest.to_path_buf(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    fs::rename(&tmp, dest)?;
    if expected_checksum.is_none() && !sidecar.exists() {
        fs::write(&sidecar, format!("{actual}\n"))?;
    }
    Ok(dest.to_path_buf())
}

fn download(url: &str, dest: &Path) -> Result<(), FetchError> {
    if let Some(path) = url.strip_prefix("file://") {
        fs::copy(path, dest).map_err(|e| FetchError::Download {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        return Ok(());
    }
    if !url.starts_with("http://") && !url.starts_with("https://") {
        fs::copy(url, dest).map_err(|e| FetchError::Download {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        return Ok(());
    }
    let response = ureq::get(url).call().map_err(|e| FetchError::Download {
        url: url.to_string(),
        reason: e.to_string(),
    })?;
    let mut reader = response.into_reader();
    let mut file = fs::File::create(dest)?;
    std::io::copy(&mut reader, &mut file).map_err(|e| FetchError::Download {
        url: url.to_string(),
        reason: e.to_string(),
    })?;
    Ok(())
}

/// Unpack a `.zip` archive into `dest_dir`, refusing entries that would
/// escape it.
pub fn unpack_archive(archive: &Path, dest_dir: &Path) -> Result<(), FetchError> {
    if archive.extension().is_none_or(|e| e != "zip") {
        return Err(FetchError::UnsupportedArchive(archive.to_path_buf()));
    }
    let file = fs::File::open(archive)?;
    let mut zip = zip::ZipArchive::new(file).map_err(|e| FetchError::BadArchive {
        path: archive.to_path_buf(),
        reason: e.to_string(),
    })?;
    fs::create_dir_all(dest_dir)?;
    for i in 0..zip.len() {
        let mut entry = zip.by_index(i).map_err(|e| FetchError::BadArchive {
            path: archive.to_path_buf(),
            reason: e.to_string(),
        })?;
        let Some(rel) = entry.enclosed_name() else {
            return Err(FetchError::BadArchive {
                path: archive.to_path_buf(),
                reason: format!("entry {:?} escapes the target directory", entry.name()),
            });
        };
        let target = dest_dir.join(rel);
        if entry.is_dir() {
            fs::create_dir_all(&target)?;
        } else {
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            let mut out = fs::File::create(&target)?;
            std::io::copy(&mut entry, &mut out)?;
        }
    }
    Ok(())
}
