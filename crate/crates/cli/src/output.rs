//! CSV and JSON artifacts, written to a temporary file in the target
//! directory and renamed into place.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Column-major table. `{}` formatting of `f64` is the shortest string that
/// parses back to the same value.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Csv {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, config_sha256: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config_sha256={config_sha256}");
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path, config_sha256: &str) -> Result<(), CliError> {
        write_atomic(path, self.render(config_sha256).as_bytes())
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_sha256: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(
    path: &Path,
    config_sha256: &str,
    body: &T,
) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&Stamped {
        config_sha256,
        body,
    })
    .expect("report serialises");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `out.csv` -> `out.diagnostics.json`.
pub fn companion_path(out: &Path) -> PathBuf {
    out.with_extension("diagnostics.json")
}
