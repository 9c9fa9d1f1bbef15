use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;

/// Writes via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path
        .file_name()
        .ok_or_else(|| HarnessError::Trace(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

/// Files produced by one scenario run; removed again if the run fails.
#[derive(Debug)]
pub(crate) struct OutputSet {
    dir: PathBuf,
    written: Vec<String>,
    committed: bool,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), HarnessError> {
        write_atomic(&self.path(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<String> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for name in &self.written {
                let _ = fs::remove_file(self.dir.join(name));
            }
        }
    }
}
