//! Atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use tempfile::NamedTempFile;

use crate::failure::Failure;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating {}", root.display()))
            .map_err(Failure::input)?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    /// Writes through a temporary file in the same directory, then renames,
    /// so readers never observe a partial file.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        let path = self.root.join(name);
        let go = || -> anyhow::Result<()> {
            let mut tmp = NamedTempFile::new_in(&self.root)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(&path)?;
            Ok(())
        };
        go().with_context(|| format!("writing {}", path.display())).map_err(Failure::input)?;
        Ok(path)
    }
}
