//! Library side of the `conebridge` command: configuration, verification
//! suites, scans and solver runs. The binary only parses arguments.

pub mod config;
pub mod problems;
pub mod report;
pub mod scan;
pub mod solve;
pub mod suites;

use std::path::Path;

/// A process exit: 1 for failed checks or solver errors, 2 for usage and
/// configuration errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exit {
    pub code: i32,
    pub message: String,
}

impl Exit {
    pub fn usage(message: impl Into<String>) -> Self {
        Exit { code: 2, message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Exit { code: 1, message: message.into() }
    }
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<(), Exit> {
    std::fs::create_dir_all(dir).map_err(|e| Exit::failure(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Exit::failure(format!("cannot write {}: {e}", path.display())))
}
