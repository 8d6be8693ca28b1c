//! CSV curve files: `#`-prefixed metadata, one header row, numeric rows
//! printed with 17 significant digits.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::format_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Upper bound accepted for columns holding probabilities.
pub const PROBABILITY_SLACK: f64 = 1e-8;

impl CurveFile {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta(key, format_f64(value))
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Checks that the first column strictly increases and that the named
    /// columns stay within `[0, 1 + PROBABILITY_SLACK]`.
    pub fn check(&self, probability_columns: &[&str]) -> Result<(), String> {
        if self.rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(format!(
                "column `{}` is not strictly increasing",
                self.columns[0]
            ));
        }
        for name in probability_columns {
            let values = self
                .column(name)
                .ok_or_else(|| format!("no column `{name}`"))?;
            if let Some(v) = values
                .iter()
                .find(|v| !(0.0..=1.0 + PROBABILITY_SLACK).contains(*v))
            {
                return Err(format!("column `{name}` value {v} is not a probability"));
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut metadata = Vec::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            let (k, v) = body
                .split_once(" = ")
                .ok_or_else(|| format!("malformed metadata line `{line}`"))?;
            metadata.push((k.to_string(), v.to_string()));
        }
        let columns: Vec<String> = lines
            .next()
            .ok_or("missing column header")?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .map(|line| {
                let row = line
                    .split(',')
                    .map(|c| c.parse::<f64>().map_err(|e| format!("bad cell `{c}`: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if row.len() == columns.len() {
                    Ok(row)
                } else {
                    Err(format!(
                        "row has {} cells, expected {}",
                        row.len(),
                        columns.len()
                    ))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            metadata,
            columns,
            rows,
        })
    }
}

/// Writes `contents` to `dir/name` through a temporary file in `dir`, so
/// readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}
