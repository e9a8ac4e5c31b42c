use std::fs;
use std::path::{Path, PathBuf};

/// Paths a command is about to create. Unless [`Outputs::commit`] is
/// called, everything tracked is removed on drop.
#[derive(Debug, Default)]
pub struct Outputs {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tracks `path` only if it does not exist yet, so pre-existing data is
    /// never deleted.
    pub fn track(&mut self, path: impl AsRef<Path>) {
        let path = path.as_ref();
        if !path.exists() {
            self.paths.push(path.to_path_buf());
        }
    }

    /// Tracks `path` even if it exists; it is about to be overwritten.
    pub fn track_overwrite(&mut self, path: impl AsRef<Path>) {
        self.paths.push(path.as_ref().to_path_buf());
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in self.paths.iter().rev() {
            if p.is_dir() {
                let _ = fs::remove_dir_all(p);
            } else {
                let _ = fs::remove_file(p);
            }
        }
    }
}
