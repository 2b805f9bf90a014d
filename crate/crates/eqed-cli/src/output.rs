//! Atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::Format;
use crate::CliError;

pub struct OutputDir {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl OutputDir {
    pub fn create(dir: PathBuf, formats: Vec<Format>) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, formats })
    }

    /// Writes `name` via a temporary file in the same directory and a rename.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        Ok(path)
    }

    /// Writes `<stem>.json` and/or `<stem>.txt` per the configured formats.
    pub fn report(&self, stem: &str, value: &Value) -> Result<(), CliError> {
        for f in &self.formats {
            match f {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
                    s.push('\n');
                    self.write(&format!("{stem}.json"), &s)?;
                }
                Format::Txt => {
                    self.write(&format!("{stem}.txt"), &flatten(value))?;
                }
            }
        }
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// `a.b.c = value` lines.
fn flatten(v: &Value) -> String {
    fn go(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    go(&key, x, out);
                }
            }
            Value::Array(items) if items.iter().any(|x| x.is_object()) => {
                for (i, x) in items.iter().enumerate() {
                    go(&format!("{prefix}.{i}"), x, out);
                }
            }
            _ => out.push_str(&format!("{prefix} = {v}\n")),
        }
    }
    let mut out = String::new();
    go("", v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nested() {
        let v = serde_json::json!({"a": {"b": 1, "c": [1, 2]}, "d": [{"e": "x"}]});
        assert_eq!(flatten(&v), "a.b = 1\na.c = [1,2]\nd.0.e = \"x\"\n");
    }
}
