//! Plain-text sample files.
//!
//! The first line declares the shape, e.g. `# foldkit v1 pL=5 pR=5 response=cat`.
//! Every following non-empty line holds the response and then the `pL·pR`
//! predictor entries in column-major order, comma separated. Further lines
//! starting with `#` and blank lines are skipped.

use std::path::Path;

use foldkit::{ResponseKind, SampleSet};
use nalgebra::DMatrix;

use crate::error::CliError;
use crate::output::number;

const MAGIC: &str = "# foldkit v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub p_l: usize,
    pub p_r: usize,
    pub kind: ResponseKind,
}

impl Header {
    pub fn line(&self) -> String {
        let kind = match self.kind {
            ResponseKind::Continuous => "cont",
            ResponseKind::Categorical => "cat",
        };
        format!("{MAGIC} pL={} pR={} response={kind}", self.p_l, self.p_r)
    }
}

fn header_error(source_name: &str, column: usize, message: String) -> CliError {
    CliError::Parse {
        source_name: source_name.to_string(),
        line: 1,
        column,
        message,
    }
}

pub fn parse_header(line: &str, source_name: &str) -> Result<Header, CliError> {
    let Some(rest) = line.strip_prefix(MAGIC) else {
        return Err(header_error(
            source_name,
            1,
            format!("expected a header starting with `{MAGIC}`"),
        ));
    };
    let (mut p_l, mut p_r, mut kind) = (None, None, None);
    let mut offset = MAGIC.len();
    for token in rest.split(' ') {
        let column = offset + 2;
        offset += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let Some((key, value)) = token.split_once('=') else {
            return Err(header_error(source_name, column, format!("expected key=value, got `{token}`")));
        };
        let dim = |v: &str| {
            v.parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| header_error(source_name, column, format!("`{key}` must be a positive integer, got `{v}`")))
        };
        match key {
            "pL" => p_l = Some(dim(value)?),
            "pR" => p_r = Some(dim(value)?),
            "response" => {
                kind = Some(match value {
                    "cont" => ResponseKind::Continuous,
                    "cat" => ResponseKind::Categorical,
                    other => {
                        return Err(header_error(
                            source_name,
                            column,
                            format!("response must be `cont` or `cat`, got `{other}`"),
                        ))
                    }
                })
            }
            other => return Err(header_error(source_name, column, format!("unknown header key `{other}`"))),
        }
    }
    let missing = |k: &str| header_error(source_name, 1, format!("header lacks `{k}`"));
    Ok(Header {
        p_l: p_l.ok_or_else(|| missing("pL"))?,
        p_r: p_r.ok_or_else(|| missing("pR"))?,
        kind: kind.ok_or_else(|| missing("response"))?,
    })
}

pub fn parse_dataset(text: &str, source_name: &str) -> Result<SampleSet, CliError> {
    let mut lines = text.lines();
    let header = parse_header(lines.next().unwrap_or(""), source_name)?;
    let width = 1 + header.p_l * header.p_r;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (offset, raw) in lines.enumerate() {
        let line = offset as u64 + 2;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = ys.len() + 1;
        let fail = |column: usize, message: String| CliError::Parse {
            source_name: source_name.to_string(),
            line,
            column,
            message,
        };
        let record = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(trimmed.as_bytes())
            .records()
            .next()
            .transpose()
            .map_err(|e| fail(1, format!("row {row}: {e}")))?
            .unwrap_or_default();
        if record.len() != width {
            return Err(fail(
                record.len().min(width) + 1,
                format!("row {row} has {} fields, expected {width}", record.len()),
            ));
        }
        let mut values = Vec::with_capacity(width);
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(i + 1, format!("row {row}: `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(fail(i + 1, format!("row {row}: `{field}` is not finite")));
            }
            values.push(v);
        }
        ys.push(values[0]);
        xs.push(DMatrix::from_column_slice(header.p_l, header.p_r, &values[1..]));
    }
    SampleSet::new(header.p_l, header.p_r, xs, ys, header.kind).map_err(|e| CliError::Input(format!("{source_name}: {e}")))
}

pub fn read_dataset(path: &Path) -> Result<SampleSet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn render_dataset(samples: &SampleSet) -> String {
    let header = Header {
        p_l: samples.p_l(),
        p_r: samples.p_r(),
        kind: samples.kind(),
    };
    let mut out = header.line();
    out.push('\n');
    for (x, &y) in samples.xs().iter().zip(samples.ys()) {
        out.push_str(&number(y));
        for v in x.iter() {
            out.push(',');
            out.push_str(&number(*v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let h = Header {
            p_l: 3,
            p_r: 2,
            kind: ResponseKind::Categorical,
        };
        assert_eq!(parse_header(&h.line(), "t").unwrap(), h);
    }

    #[test]
    fn column_major_rows() {
        let s = parse_dataset("# foldkit v1 pL=2 pR=2 response=cat\n1,1,2,3,4\n0,5,6,7,8\n", "t").unwrap();
        assert_eq!(s.xs()[0][(1, 0)], 2.0);
        assert_eq!(s.xs()[0][(0, 1)], 3.0);
        assert_eq!(s.ys(), &[1.0, 0.0]);
    }

    #[test]
    fn short_row_reports_line_and_row() {
        let err = parse_dataset("# foldkit v1 pL=2 pR=1 response=cont\n1,2,3\n# note\n4,5\n", "t").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4"), "{msg}");
        assert!(msg.contains("row 2"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_number_reports_column() {
        let err = parse_dataset("# foldkit v1 pL=2 pR=1 response=cont\n1,2,x\n0,1,1\n", "t").unwrap_err();
        assert!(err.to_string().contains("line 2, column 3"), "{err}");
    }

    #[test]
    fn bad_header() {
        let err = parse_dataset("pL=2\n", "t").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        let err = parse_dataset("# foldkit v1 pL=2 response=cat\n", "t").unwrap_err();
        assert!(err.to_string().contains("pR"));
    }
}
