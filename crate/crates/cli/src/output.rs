//! Number formatting and file emission.
//!
//! Every real is written with 17 significant digits so values round-trip
//! exactly; JSON numbers are spliced in as raw text to keep that format.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::value::RawValue;

use crate::error::CliError;

/// 17 significant digits in scientific notation; non-finite values print
/// as `nan`, `inf` or `-inf`.
pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub type Json = Box<RawValue>;

/// A JSON number, or `null` when `x` is not finite.
pub fn json_number(x: f64) -> Json {
    let text = if x.is_finite() { number(x) } else { "null".to_string() };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

pub fn json_numbers(xs: impl IntoIterator<Item = f64>) -> Vec<Json> {
    xs.into_iter().map(json_number).collect()
}

/// Row-major nested arrays.
pub fn json_matrix(m: &DMatrix<f64>) -> Vec<Vec<Json>> {
    m.row_iter()
        .map(|row| json_numbers(row.iter().copied()))
        .collect()
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// `<path>` with `suffix` appended to its full file name.
pub fn sidecar(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(number(0.1), "1.0000000000000001e-1");
        assert_eq!(number(-2.5), "-2.5000000000000000e0");
        assert_eq!(number(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(number(f64::NAN), "nan");
    }

    #[test]
    fn json_numbers_parse_back() {
        let v: Vec<f64> = serde_json::from_str(&to_json(&json_numbers([1.0 / 3.0, 1e-300]))).unwrap();
        assert_eq!(v, vec![1.0 / 3.0, 1e-300]);
        assert_eq!(json_number(f64::INFINITY).get(), "null");
    }

    #[test]
    fn sidecar_appends_to_the_name() {
        assert_eq!(sidecar(Path::new("out/data.csv"), ".truth.json"), Path::new("out/data.csv.truth.json"));
    }
}
