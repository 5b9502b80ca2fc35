//! Output naming and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Names files `<task>_<timestamp>[_seed<k>].<ext>` inside one directory.
pub struct OutputDir {
    pub dir: PathBuf,
    pub stamp: String,
}

impl OutputDir {
    pub fn new(dir: PathBuf) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
        Ok(Self { dir, stamp })
    }

    pub fn path(&self, task: &str, seed: Option<u64>, ext: &str) -> PathBuf {
        let tag = seed.map(|s| format!("_seed{s}")).unwrap_or_default();
        self.dir.join(format!("{task}_{}{tag}.{ext}", self.stamp))
    }

    /// Writes through a temporary sibling and renames it into place.
    pub fn write(&self, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        let tmp = path.with_extension("partial");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        println!("{}", path.display());
        Ok(())
    }
}
