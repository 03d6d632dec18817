//! CSV and JSON emission: UTF-8, LF line endings, and floats at full
//! round-trip precision (17 significant digits).

use std::fs;
use std::io::Write;
use std::path::Path;

/// Formats a float with 17 significant digits so that parse -> re-emit is
/// byte-identical.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes a CSV file with a header row and LF endings.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    file.write_all(b"\n")?;
    for row in rows {
        file.write_all(row.as_bytes())?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes pretty-printed JSON with a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(
        serde_json::to_string_pretty(value)
            .expect("serializable")
            .as_bytes(),
    )?;
    file.write_all(b"\n")?;
    Ok(())
}
