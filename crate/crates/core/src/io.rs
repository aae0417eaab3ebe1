//! Small CSV and JSON helpers shared by the drivers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::Result;

/// Round-trip representation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.16e}")
}

/// Writes a header line and numeric rows, LF terminated.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::with_capacity(32 * rows.len() * header.len().max(1));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a numeric CSV with one header line.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap_or("")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            crate::Error::Invalid(format!("{}: line {}: {e}", path.display(), n + 2))
        })?);
    }
    Ok((header, rows))
}

/// Minimal JSON object writer for flat numeric summaries.
pub fn json_object(pairs: &[(&str, f64)]) -> String {
    let mut s = String::from("{\n");
    for (i, (k, v)) in pairs.iter().enumerate() {
        let val = if v.is_finite() { fmt_f64(*v) } else { "null".to_string() };
        let _ = write!(s, "  \"{k}\": {val}");
        s.push_str(if i + 1 < pairs.len() { ",\n" } else { "\n" });
    }
    s.push('}');
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
