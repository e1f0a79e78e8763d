//! On-disk cache for expensive artifacts (eigenfunction series, reconstructed
//! `F(α)` tables). Entries are plain fixture text; a missing or unreadable entry
//! is simply recomputed, and write errors are ignored.

use std::path::PathBuf;

/// `$QMACV_CACHE_DIR`, or `qmacv-cache` under the system temp directory.
pub fn dir() -> PathBuf {
    match std::env::var_os("QMACV_CACHE_DIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => std::env::temp_dir().join("qmacv-cache"),
    }
}

pub fn load(key: &str) -> Option<String> {
    std::fs::read_to_string(dir().join(key)).ok()
}

/// Store atomically (write then rename) so concurrent jobs never see half a file.
pub fn store(key: &str, text: &str) {
    let d = dir();
    if std::fs::create_dir_all(&d).is_err() {
        return;
    }
    let tmp = d.join(format!("{key}.{}.tmp", std::process::id()));
    if std::fs::write(&tmp, text).is_ok() {
        let _ = std::fs::rename(&tmp, d.join(key));
    }
}
