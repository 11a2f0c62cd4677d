use std::path::Path;

use crate::error::{Error, Result};

/// Shortest round-trip decimal form; empty for a missing value.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// Writes `#` comment lines, a header row and the records.
pub fn write_csv<I>(path: &Path, comments: &[String], header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut buf = Vec::new();
    for line in comments {
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    let mut w = csv::Writer::from_writer(buf);
    let fail = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let buf = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
