//! CSV and libsvm-format dataset loaders.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{OcsError, Result};
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Last column holds a +1/−1 label.
    pub has_labels: bool,
    /// First line is a header naming the columns.
    pub skip_header: bool,
}

impl CsvOptions {
    pub fn labeled() -> Self {
        CsvOptions {
            has_labels: true,
            skip_header: false,
        }
    }
}

pub fn load_csv(path: &Path, opts: CsvOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| OcsError::io(path, e))?;
    read_csv(file, opts).map_err(|e| match e {
        OcsError::Io { source, .. } => OcsError::io(path, source),
        other => other,
    })
}

/// Parses comma-separated numeric rows. Row and column numbers in errors are
/// 1-based and count data rows only.
pub fn read_csv<R: Read>(reader: R, opts: CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let names: Option<Vec<String>> = if opts.skip_header {
        let headers = rdr.headers().map_err(csv_error)?;
        let mut names: Vec<String> = headers.iter().map(str::to_string).collect();
        if opts.has_labels {
            names.pop();
        }
        Some(names)
    } else {
        None
    };

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(csv_error)?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(OcsError::RaggedRows {
                    row,
                    expected: w,
                    got: record.len(),
                })
            }
            _ => {}
        }
        let n_feat = if opts.has_labels {
            record.len().checked_sub(1).filter(|&n| n > 0).ok_or(OcsError::Parse {
                row,
                col: 1,
                msg: "labeled row needs at least one feature column".into(),
            })?
        } else {
            record.len()
        };
        for (c, cell) in record.iter().take(n_feat).enumerate() {
            features.push(parse_cell(cell, row, c + 1)?);
        }
        if opts.has_labels {
            let col = n_feat + 1;
            let cell = record.get(n_feat).unwrap_or("");
            labels.push(parse_label(cell, row, col)?);
        }
        rows += 1;
    }
    let dim = width.map_or(0, |w| if opts.has_labels { w - 1 } else { w });
    if rows < 2 {
        return Err(OcsError::TooFewSamples(rows));
    }
    let ds = Dataset::new(features, dim, opts.has_labels.then_some(labels))?;
    match names {
        Some(n) if n.len() == dim => ds.with_feature_names(n),
        _ => Ok(ds),
    }
}

fn csv_error(e: csv::Error) -> OcsError {
    let row = e.position().map_or(0, |p| p.record() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => OcsError::io("<csv>", io),
        other => OcsError::Parse {
            row,
            col: 0,
            msg: format!("{other:?}"),
        },
    }
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| OcsError::Parse {
        row,
        col,
        msg: format!("'{cell}' is not a number"),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(OcsError::NonFiniteValue { row, col })
    }
}

fn parse_label(cell: &str, row: usize, col: usize) -> Result<i8> {
    let v = parse_cell(cell, row, col)?;
    if v == 1.0 {
        Ok(1)
    } else if v == -1.0 {
        Ok(-1)
    } else {
        Err(OcsError::Parse {
            row,
            col,
            msg: format!("label '{cell}' is not +1 or -1"),
        })
    }
}

pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| OcsError::io(path, e))?;
    read_libsvm(BufReader::new(file)).map_err(|e| match e {
        OcsError::Io { source, .. } => OcsError::io(path, source),
        other => other,
    })
}

/// Parses `label idx:val idx:val …` lines with 1-based ascending indices into
/// a dense matrix as wide as the largest index. Positive labels map to +1,
/// everything else to −1. Blank lines and `#` comments are skipped.
pub fn read_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut parsed: Vec<(i8, Vec<(usize, f64)>)> = Vec::new();
    let mut width = 0usize;
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| OcsError::io("<libsvm>", e))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or("");
        let label: f64 = label_tok.parse().map_err(|_| OcsError::Parse {
            row: lineno,
            col: 1,
            msg: format!("bad label '{label_tok}'"),
        })?;
        if !label.is_finite() {
            return Err(OcsError::NonFiniteValue { row: lineno, col: 1 });
        }
        let mut entries = Vec::new();
        let mut previous = 0usize;
        for (t, tok) in tokens.enumerate() {
            let col = t + 2;
            let (idx, val) = tok.split_once(':').ok_or_else(|| OcsError::Parse {
                row: lineno,
                col,
                msg: format!("expected idx:val, got '{tok}'"),
            })?;
            let idx: usize = idx.parse().ok().filter(|&i| i >= 1).ok_or_else(|| OcsError::Parse {
                row: lineno,
                col,
                msg: format!("bad feature index '{idx}'"),
            })?;
            if idx <= previous {
                return Err(OcsError::NonAscendingIndex {
                    line: lineno,
                    index: idx,
                    previous,
                });
            }
            previous = idx;
            let val = parse_cell(val, lineno, col)?;
            width = width.max(idx);
            entries.push((idx, val));
        }
        parsed.push((if label > 0.0 { 1 } else { -1 }, entries));
    }
    if parsed.len() < 2 {
        return Err(OcsError::TooFewSamples(parsed.len()));
    }
    let width = width.max(1);
    let mut features = vec![0.0; parsed.len() * width];
    let mut labels = Vec::with_capacity(parsed.len());
    for (r, (label, entries)) in parsed.into_iter().enumerate() {
        for (idx, val) in entries {
            features[r * width + idx - 1] = val;
        }
        labels.push(label);
    }
    Dataset::new(features, width, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(s: &str, has_labels: bool) -> Result<Dataset> {
        read_csv(
            s.as_bytes(),
            CsvOptions {
                has_labels,
                skip_header: false,
            },
        )
    }

    #[test]
    fn csv_examples() {
        let d = csv("1.0,2.0\n3.0,4.0", false).unwrap();
        assert_eq!((d.len(), d.dim()), (2, 2));
        assert_eq!(d.features(), &[1.0, 2.0, 3.0, 4.0]);

        let d = csv("1.0,2.0,+1\n3.0,4.0,-1\n", true).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels(), Some(&[1i8, -1][..]));

        match csv("1.0,2.0\n1.0,abc", false) {
            Err(OcsError::Parse { row: 2, col: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match csv("1.0,abc\n1.0,2.0", false) {
            Err(OcsError::Parse { row: 1, col: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(matches!(csv("1,2\n3\n", false), Err(OcsError::RaggedRows { row: 2, .. })));
        assert!(matches!(csv("1,2\n3,inf\n", false), Err(OcsError::NonFiniteValue { row: 2, col: 2 })));
        assert!(matches!(csv("1,NaN\n3,4\n", false), Err(OcsError::NonFiniteValue { .. })));
        assert!(matches!(csv("1,2,0\n3,4,1\n", true), Err(OcsError::Parse { row: 1, col: 3, .. })));
    }

    #[test]
    fn csv_header() {
        let d = read_csv(
            "x,y,label\n1,2,1\n3,4,-1\n".as_bytes(),
            CsvOptions {
                has_labels: true,
                skip_header: true,
            },
        )
        .unwrap();
        assert_eq!(d.feature_names().unwrap(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn libsvm_examples() {
        let d = read_libsvm("+1 1:0.5 3:2.0\n-1 2:1\n".as_bytes()).unwrap();
        assert_eq!(d.dim(), 3);
        assert_eq!(d.row(0), &[0.5, 0.0, 2.0]);
        assert_eq!(d.labels().unwrap(), &[1, -1]);

        let d = read_libsvm("+1\n+1 2:3\n".as_bytes()).unwrap();
        assert_eq!(d.row(0), &[0.0, 0.0]);

        assert!(matches!(
            read_libsvm("1 2:1 1:1\n1 1:1\n".as_bytes()),
            Err(OcsError::NonAscendingIndex { line: 1, index: 1, previous: 2 })
        ));
        assert!(matches!(read_libsvm("1 x:1\n1 1:1\n".as_bytes()), Err(OcsError::Parse { .. })));
        assert!(matches!(read_libsvm("1 0:1\n1 1:1\n".as_bytes()), Err(OcsError::Parse { .. })));
    }
}
