//! Table writers. Every file starts with a `#` provenance line carrying
//! the config hash, then a header row with units, then data rows. Numbers
//! use the shortest round-trip decimal form, so identical runs give
//! identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    /// `key=value` pairs for the provenance line, in order.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra `#` lines after the data.
    pub footer: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            title: String::new(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn provenance(&self) -> String {
        let mut line = String::from("#");
        if !self.title.is_empty() {
            line.push(' ');
            line.push_str(&self.title);
        }
        for (k, v) in &self.meta {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }

    pub fn to_csv(&self) -> std::io::Result<Vec<u8>> {
        let mut buf = self.provenance().into_bytes();
        buf.push(b'\n');
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        for line in &self.footer {
            writeln!(buf, "# {line}")?;
        }
        Ok(buf)
    }

    /// Whitespace-separated columns; the header is a comment so plotting
    /// tools skip it.
    pub fn to_dat(&self) -> Vec<u8> {
        let mut out = self.provenance();
        out.push_str("\n# ");
        out.push_str(&self.columns.join(" "));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for line in &self.footer {
            out.push_str(&format!("# {line}\n"));
        }
        out.into_bytes()
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes `table` as `<stem>.csv` and/or `<stem>.dat`; returns the paths.
pub fn write_table(dir: &Path, stem: &str, table: &Table, formats: &[OutputFormat]) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for format in formats {
        let (ext, bytes) = match format {
            OutputFormat::Csv => ("csv", table.to_csv()?),
            OutputFormat::Dat => ("dat", table.to_dat()),
        };
        let path = dir.join(format!("{stem}.{ext}"));
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}
