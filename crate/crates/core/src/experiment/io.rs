//! CSV output and the matching readers.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::regret::{RegretRecord, RegretTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub rep: usize,
    pub policy: String,
    pub chosen_arm: usize,
    pub optimal_arm: usize,
    pub instant_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub t: usize,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsCsvRow {
    pub policy: String,
    pub rep: usize,
    pub t: usize,
    pub phi_hat: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub coverage: Option<bool>,
    pub optimal_fraction: f64,
}

impl DiagnosticsCsvRow {
    pub fn new(policy: &str, rep: usize, row: &DiagnosticsRow) -> Self {
        Self {
            policy: policy.to_string(),
            rep,
            t: row.t,
            phi_hat: row.phi_hat,
            rho_min: row.rho_min,
            rho_max: row.rho_max,
            coverage: row.coverage,
            optimal_fraction: row.optimal_fraction,
        }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for row in rows {
        w.serialize(row).map_err(|e| csv_write_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_write_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Validation(format!("{}: {kind:?}", path.display())),
    }
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            match e.into_kind() {
                csv::ErrorKind::Io(source) => Error::io(path, source),
                kind => Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("{kind:?}"),
                },
            }
        })?;
        out.push(row);
    }
    Ok(out)
}

pub fn trace_rows(trace: &RegretTrace) -> impl Iterator<Item = TraceRow> + '_ {
    trace.records().iter().map(|r| TraceRow {
        t: r.t,
        rep: trace.rep,
        policy: trace.policy_id.clone(),
        chosen_arm: r.chosen_arm,
        optimal_arm: r.optimal_arm,
        instant_regret: r.instant_regret,
        cum_regret: r.cum_regret,
    })
}

pub fn write_trace(path: &Path, trace: &RegretTrace) -> Result<()> {
    write_rows(path, trace_rows(trace))
}

/// Regroups trace rows into one trace per (policy, rep), in first-appearance order
/// of policies and ascending rep. The seed column is not stored and reads back as 0.
pub fn traces_from_rows(rows: Vec<TraceRow>) -> Result<Vec<RegretTrace>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<RegretRecord>> = BTreeMap::new();
    for row in rows {
        let pi = match order.iter().position(|p| *p == row.policy) {
            Some(i) => i,
            None => {
                order.push(row.policy.clone());
                order.len() - 1
            }
        };
        groups.entry((pi, row.rep)).or_default().push(RegretRecord {
            t: row.t,
            chosen_arm: row.chosen_arm,
            optimal_arm: row.optimal_arm,
            instant_regret: row.instant_regret,
            cum_regret: row.cum_regret,
        });
    }
    Ok(groups
        .into_iter()
        .map(|((pi, rep), records)| RegretTrace::from_records(order[pi].clone(), rep, 0, records))
        .collect())
}

pub fn read_traces(path: &Path) -> Result<Vec<RegretTrace>> {
    traces_from_rows(read_rows(path)?)
}

/// Mean and sample standard deviation of cumulative regret across repetitions at
/// every 10th round and at the horizon.
pub fn summarize(policy: &str, traces: &[&RegretTrace]) -> Vec<SummaryRow> {
    let Some(horizon) = traces.iter().map(|t| t.len()).min() else {
        return Vec::new();
    };
    let mut points: Vec<usize> = (10..=horizon).step_by(10).collect();
    if points.last() != Some(&horizon) {
        points.push(horizon);
    }
    points
        .into_iter()
        .map(|t| {
            let vals: Vec<f64> = traces.iter().map(|tr| tr.records()[t - 1].cum_regret).collect();
            let (mean, sd) = mean_sd(&vals);
            SummaryRow {
                policy: policy.to_string(),
                t,
                mean,
                sd,
                n: vals.len(),
            }
        })
        .collect()
}

pub fn mean_sd(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n;
    let sd = if vals.len() > 1 {
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(policy: &str, rep: usize, regrets: &[f64]) -> RegretTrace {
        let mut tr = RegretTrace::new(policy, rep, 0);
        for (i, r) in regrets.iter().enumerate() {
            tr.push(i + 1, 0, if *r > 0.0 { 1 } else { 0 }, *r);
        }
        tr
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let tr = trace("l1ball", 3, &[0.1, 0.0, 1.0 / 3.0, 2e-17, 0.7]);
        write_trace(&path, &tr).unwrap();
        let back = read_traces(&path).unwrap();
        assert_eq!(back, vec![tr]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,rep,policy,chosen_arm,optimal_arm,instant_regret,cum_regret\n"));
    }

    #[test]
    fn summary_round_trip_and_means() {
        let a = trace("p", 0, &[1.0; 25]);
        let b = trace("p", 1, &[0.5; 25]);
        let rows = summarize("p", &[&a, &b]);
        let ts: Vec<_> = rows.iter().map(|r| r.t).collect();
        assert_eq!(ts, [10, 20, 25]);
        assert_eq!(rows[2].mean, 18.75);
        assert!((rows[2].sd - (2.0 * 6.25f64.powi(2)).sqrt()).abs() < 1e-12);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_rows(&path, &rows).unwrap();
        assert_eq!(read_rows::<SummaryRow>(&path).unwrap(), rows);
    }

    #[test]
    fn diagnostics_round_trip() {
        let rows = vec![
            DiagnosticsCsvRow {
                policy: "l1ball".into(),
                rep: 0,
                t: 8,
                phi_hat: 0.123456789,
                rho_min: 0.01,
                rho_max: 3.5,
                coverage: Some(true),
                optimal_fraction: 0.75,
            },
            DiagnosticsCsvRow {
                policy: "oful".into(),
                rep: 1,
                t: 16,
                phi_hat: 0.0,
                rho_min: 0.0,
                rho_max: 1.0,
                coverage: None,
                optimal_fraction: 0.5,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_rows(&path, &rows).unwrap();
        assert_eq!(read_rows::<DiagnosticsCsvRow>(&path).unwrap(), rows);
    }

    #[test]
    fn malformed_trace_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,rep,policy,chosen_arm,optimal_arm,instant_regret,cum_regret\n1,0,p,0,0,0,0\n2,0,p,x,0,0,0\n").unwrap();
        assert!(matches!(read_traces(&path), Err(Error::Parse { line: 3, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn any_trace_round_trips(regrets in prop::collection::vec(0.0f64..10.0, 1..40), rep in 0usize..5) {
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("t.csv");
                let tr = trace("x", rep, &regrets);
                write_trace(&path, &tr).unwrap();
                prop_assert_eq!(read_traces(&path).unwrap(), vec![tr]);
            }
        }
    }
}
