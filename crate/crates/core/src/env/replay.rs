//! Offline replay of a labeled dataset through the block embedding: arm `a` sees the
//! raw context in coordinate block `a` and zeros elsewhere.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::model::ContextRound;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayDataset {
    labels: Vec<usize>,
    contexts: Vec<Vec<f64>>,
    k: usize,
    p: usize,
    x_max: f64,
}

impl ReplayDataset {
    pub fn from_rows(rows: Vec<(usize, Vec<f64>)>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("replay needs K >= 2, got {k}")));
        }
        let Some(p) = rows.first().map(|r| r.1.len()) else {
            return Err(Error::Validation("replay dataset is empty".into()));
        };
        if p == 0 {
            return Err(Error::Validation("replay rows have no covariates".into()));
        }
        let mut labels = Vec::with_capacity(rows.len());
        let mut contexts = Vec::with_capacity(rows.len());
        let mut x_max: f64 = 0.0;
        for (i, (label, ctx)) in rows.into_iter().enumerate() {
            if label >= k {
                return Err(Error::Validation(format!("row {i}: label {label} outside [0, {k})")));
            }
            if ctx.len() != p {
                return Err(Error::Validation(format!("row {i}: expected {p} covariates, got {}", ctx.len())));
            }
            if ctx.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("row {i}: non-finite covariate")));
            }
            x_max = x_max.max(norm_inf(&ctx));
            labels.push(label);
            contexts.push(ctx);
        }
        Ok(Self {
            labels,
            contexts,
            k,
            p,
            x_max,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.k * self.p
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn context(&self, row: usize) -> &[f64] {
        &self.contexts[row]
    }

    pub fn majority_label(&self) -> usize {
        let mut counts = vec![0usize; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        // lowest label wins ties
        let mut best = 0;
        for (a, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = a;
            }
        }
        best
    }

    /// Round `t` built from dataset row `row`.
    pub fn round(&self, row: usize, t: usize) -> ContextRound {
        let ctx = &self.contexts[row];
        let arms = (0..self.k)
            .map(|a| {
                let mut x = vec![0.0; self.dim()];
                x[a * self.p..(a + 1) * self.p].copy_from_slice(ctx);
                x
            })
            .collect();
        ContextRound::new_unchecked_bound(t, arms).expect("K >= 2 and equal lengths by construction")
    }
}

/// Reads a CSV with a header row, the integer label in the first column and the
/// covariates in the rest.
pub fn replay_load(path: &Path, k: usize) -> Result<ReplayDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if record.len() < 2 {
            return Err(parse_err(format!("expected a label and at least one covariate, got {} fields", record.len())));
        }
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(parse_err(format!("expected {} fields, got {}", width.unwrap_or(0), record.len())));
        }
        let label_field = record[0].trim();
        let label: usize = label_field
            .parse()
            .map_err(|_| parse_err(format!("label {label_field:?} is not a non-negative integer")))?;
        if label >= k {
            return Err(Error::Validation(format!(
                "{}:{line}: label {label} outside [0, {k})",
                path.display()
            )));
        }
        let mut ctx = Vec::with_capacity(record.len() - 1);
        for (j, field) in record.iter().enumerate().skip(1) {
            let field = field.trim();
            if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
                return Err(Error::Validation(format!(
                    "{}:{line}: missing value in column {}",
                    path.display(),
                    j + 1
                )));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("column {}: {field:?} is not a number", j + 1)))?;
            ctx.push(v);
        }
        rows.push((label, ctx));
    }
    ReplayDataset::from_rows(rows, k)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn block_embedding() {
        let ds = ReplayDataset::from_rows(vec![(1, vec![1.0, 2.0, 3.0])], 2).unwrap();
        let r = ds.round(0, 1);
        assert_eq!(r.arm(0), &[1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.arm(1), &[0.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(norm_inf(r.arm(1)), 3.0);
    }

    #[test]
    fn loads_csv() {
        let f = write("label,a,b\n0,1.5,-2\n2,0,3\n");
        let ds = replay_load(f.path(), 3).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.dim(), 6);
        assert_eq!(ds.labels(), &[0, 2]);
        assert_eq!(ds.context(0), &[1.5, -2.0]);
        assert_eq!(ds.x_max(), 3.0);
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write("label,a,b\n0,1,2\n1,x,2\n");
        match replay_load(f.path(), 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = write("label,a,b\n0,1,2\n1,2\n");
        assert!(matches!(replay_load(f.path(), 2), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn label_out_of_range_is_validation() {
        let f = write("label,a\n0,1\n4,1\n");
        assert!(matches!(replay_load(f.path(), 4), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_value_is_validation() {
        let f = write("label,a,b\n0,1,\n");
        assert!(matches!(replay_load(f.path(), 2), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_file_is_io() {
        let err = replay_load(Path::new("/nonexistent/replay.csv"), 2).unwrap_err();
        assert!(!err.is_user_error());
    }

    #[test]
    fn majority_label_ties_low() {
        let ds = ReplayDataset::from_rows(vec![(1, vec![0.0]), (2, vec![0.0]), (2, vec![0.0]), (1, vec![0.0])], 3).unwrap();
        assert_eq!(ds.majority_label(), 1);
    }
}
