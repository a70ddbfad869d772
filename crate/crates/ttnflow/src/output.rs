//! CSV rendering with a fixed numeric format so re-runs are byte identical.

use anyhow::{Context, Result};
use std::path::Path;

/// Render a real with 17 significant digits. This round-trips f64 exactly and
/// is deterministic across platforms, which keeps output files comparable.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Quote a field if it contains characters that would break the row.
pub fn field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn render(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::with_capacity(rows.len() * 64 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_out(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
