//! Numeric CSV tables with `# key=value` certificate lines above the header.
//!
//! Values are written in Rust's shortest round-trip exponent form, so reading
//! a table back yields bit-identical floats. NaN is written as an empty cell.

use anyhow::{anyhow, bail, Context, Result};
use klflow_core::domain::DataDist;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; the table is written to `<name>.csv`.
    pub name: String,
    pub comments: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| anyhow!("not a number: `{s}`"))
}

impl Table {
    pub fn new<S: Into<String>>(name: impl Into<String>, header: impl IntoIterator<Item = S>) -> Self {
        Table { name: name.into(), comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.comments.push((key.to_string(), value.to_string()));
        self
    }

    pub fn comment_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.comment(key, fmt_value(value))
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.col_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn get_comment(&self, key: &str) -> Option<&str> {
        self.comments.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.comments {
            write!(out, "# {k}={v}\r\n")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&v| fmt_value(v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn write(&self, dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.to_bytes()).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn parse(name: &str, bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes)?;
        let mut comments = Vec::new();
        let mut body = text;
        while let Some(rest) = body.strip_prefix('#') {
            let (line, next) = rest.split_once('\n').unwrap_or((rest, ""));
            let line = line.trim_end_matches('\r').trim();
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("comment line without `=`: `{line}`"))?;
            comments.push((k.trim().to_string(), v.trim().to_string()));
            body = next;
        }
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().any(String::is_empty) {
            bail!("missing or empty header");
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                bail!("row {} has {} cells, header has {}", i + 1, rec.len(), header.len());
            }
            rows.push(rec.iter().map(parse_value).collect::<Result<Vec<_>>>().with_context(|| format!("row {}", i + 1))?);
        }
        Ok(Table { name: name.to_string(), comments, header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
        Self::parse(name, &bytes).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Builds a finite distribution from the `x0, x1, ...` columns of a table and
/// its optional `weight` column. Other columns are ignored.
pub fn finite_dist(t: &Table) -> Result<DataDist> {
    let cols: Vec<usize> = (0..).map_while(|k| t.col_index(&format!("x{k}"))).collect();
    if cols.is_empty() {
        bail!("table {} has no x0 column", t.name);
    }
    let mut pts = Vec::with_capacity(t.rows.len() * cols.len());
    for r in &t.rows {
        pts.extend(cols.iter().map(|&c| r[c]));
    }
    let w = t.column("weight");
    DataDist::finite(cols.len(), pts, w).map_err(|e| anyhow!("table {}: {e}", t.name))
}

/// Table with `x0..x{dim-1}` and `weight` columns plus the extra per-point columns.
pub fn dist_table(name: &str, d: &DataDist, extra: &[(&str, Vec<f64>)]) -> Table {
    let mut header: Vec<String> = (0..d.dim()).map(|k| format!("x{k}")).collect();
    header.push("weight".into());
    header.extend(extra.iter().map(|(n, _)| n.to_string()));
    let mut t = Table::new(name, header);
    for i in 0..d.len() {
        let mut row = d.point(i).to_vec();
        row.push(d.weight(i));
        row.extend(extra.iter().map(|(_, v)| v[i]));
        t.push(row);
    }
    t
}
