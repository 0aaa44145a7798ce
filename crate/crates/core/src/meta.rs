//! `# key=value` preamble lines carried at the top of every CSV artifact.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const TOOL: &str = concat!("senstype ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Preamble {
    entries: Vec<(String, String)>,
}

impl Preamble {
    pub fn new() -> Self {
        Preamble {
            entries: vec![("tool".into(), TOOL.into())],
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }

    /// Splits `text` into its preamble and the remaining CSV body.
    pub fn split(text: &str) -> (Preamble, &str) {
        let mut entries = Vec::new();
        let mut rest = text;
        while let Some(line_end) = rest.find('\n').map(|i| i + 1).or(Some(rest.len())) {
            let line = &rest[..line_end];
            let Some(body) = line.strip_prefix('#') else {
                break;
            };
            if let Some((k, v)) = body.trim().split_once('=') {
                entries.push((k.trim().to_string(), v.trim().to_string()));
            }
            rest = &rest[line_end..];
            if rest.is_empty() {
                break;
            }
        }
        (Preamble { entries }, rest)
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Number of preamble lines, used to report CSV line numbers against the file.
pub(crate) fn preamble_lines(text: &str, body: &str) -> u64 {
    text[..text.len() - body.len()].matches('\n').count() as u64
}
