//! Output-directory plumbing: resolution order (`--out`, then
//! `$SIGNOISE_OUT`, then the working directory), creation, and a lock file
//! that serializes concurrent invocations writing to the same directory.

use signoise::error::{Error, Result};
use std::fs;
use std::io::{ErrorKind, Write as _};
use std::path::PathBuf;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SIGNOISE_OUT";

/// Name of the lock file held for the duration of a run.
pub const LOCK_NAME: &str = "signoise.lock";

/// An output directory whose lock is held for the lifetime of this value.
#[derive(Debug)]
pub struct OutDir {
    dir: PathBuf,
    lock: PathBuf,
}

impl OutDir {
    /// Resolves the directory, creates it if needed, and takes the lock.
    pub fn acquire(flag: Option<PathBuf>) -> Result<Self> {
        let dir = flag
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        let lock = dir.join(LOCK_NAME);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { dir, lock })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::InvalidConfig(format!(
                "output directory '{}' is in use by another run (delete '{}' if that run is gone)",
                dir.display(),
                lock.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }

    /// Path of an artifact inside the directory.
    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
