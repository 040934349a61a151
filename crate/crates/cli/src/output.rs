use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use phasefunnel::Result;

/// Output directory whose files are written atomically (temp file, then
/// rename) and remembered for the summary.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, self.dir.join(name))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    /// Renders into a buffer with `render`, then writes atomically.
    pub fn write_with(
        &mut self,
        name: &str,
        render: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write(name, &buf)
    }
}

/// One pass/fail threshold from the `assertions` section.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Result of one command before it is turned into an exit code.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: String,
    pub details: Value,
    pub checks: Vec<Check>,
    /// Nonzero code reported by a certificate (3 fail, 4 invalid).
    pub certificate_code: i32,
}

impl Outcome {
    pub fn new(summary: String, details: Value) -> Self {
        Self {
            summary,
            details,
            checks: Vec::new(),
            certificate_code: 0,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.certificate_code != 0 {
            self.certificate_code
        } else if self.checks.iter().any(|c| !c.passed) {
            2
        } else {
            0
        }
    }
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub command: &'a str,
    pub anchor: &'a str,
    pub status: &'a str,
    pub exit_code: i32,
    pub summary: &'a str,
    pub assertions: &'a [Check],
    pub files: &'a [String],
    pub details: &'a Value,
}
