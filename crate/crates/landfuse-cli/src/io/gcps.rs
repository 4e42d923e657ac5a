//! Ground control point CSV: `src_x,src_y,dst_x,dst_y` per line, comments
//! with `#`.

use std::fs;
use std::path::Path;

use landfuse_core::register::GcpPair;

use crate::error::{CliError, Result};

pub fn load_gcps(path: &Path) -> Result<Vec<GcpPair>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(CliError::data(format!(
                "{}:{}: expected 4 fields: {line:?}",
                path.display(),
                lineno + 1
            )));
        }
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                CliError::data(format!(
                    "{}:{}: malformed number: {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
        }
        pairs.push(GcpPair {
            src_x: values[0],
            src_y: values[1],
            dst_x: values[2],
            dst_y: values[3],
        });
    }
    Ok(pairs)
}
