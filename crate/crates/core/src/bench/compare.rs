use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::run::RunRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("nothing to compare")]
    Empty,
    #[error("record {index} is on `{found}` but the first record is on `{expected}`")]
    ProblemMismatch { index: usize, expected: String, found: String },
}

/// Mean and sample standard deviation over replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Cell {
    fn from_values(values: &[f64]) -> Option<Cell> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Cell { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub metric: String,
    /// One cell per column; `None` when the record has no data for the metric.
    pub cells: Vec<Option<Cell>>,
    /// Column with the lowest mean.
    pub best: Option<usize>,
}

/// Optimizers as columns, loss metrics as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub problem: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl ComparisonTable {
    pub fn row(&self, metric: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

fn table_row(metric: String, per_record: Vec<Vec<f64>>) -> TableRow {
    let cells: Vec<Option<Cell>> = per_record.iter().map(|v| Cell::from_values(v)).collect();
    let best = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.filter(|c| !c.mean.is_nan()).map(|c| (i, c.mean)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    TableRow { metric, cells, best }
}

/// Builds the comparison table. Trajectories are aligned on the last step
/// logged by every replica of every record.
pub fn compare(records: &[RunRecord]) -> Result<ComparisonTable, CompareError> {
    let first = records.first().ok_or(CompareError::Empty)?;
    for (index, r) in records.iter().enumerate().skip(1) {
        if r.problem != first.problem {
            return Err(CompareError::ProblemMismatch {
                index,
                expected: first.problem.clone(),
                found: r.problem.clone(),
            });
        }
    }

    let columns: Vec<String> = records
        .iter()
        .map(|r| {
            if records.iter().filter(|o| o.optimizer == r.optimizer).count() > 1 {
                let short = &r.config_hash[..r.config_hash.len().min(8)];
                format!("{} [{short}]", r.optimizer)
            } else {
                r.optimizer.clone()
            }
        })
        .collect();

    let mut rows = vec![
        table_row(
            "final loss".into(),
            records.iter().map(|r| r.summary.replicas.iter().map(|s| s.final_loss).collect()).collect(),
        ),
        table_row(
            "best loss".into(),
            records.iter().map(|r| r.summary.replicas.iter().map(|s| s.best_loss).collect()).collect(),
        ),
    ];

    // loss per (seed, step) for each record
    let trajectories: Vec<BTreeMap<(u64, u64), f64>> = records
        .iter()
        .map(|r| r.rows.iter().map(|row| ((row.seed, row.step), row.loss)).collect())
        .collect();
    let common_step = records
        .iter()
        .flat_map(|r| {
            r.summary.replicas.iter().map(|s| {
                r.rows.iter().filter(|row| row.seed == s.seed).map(|row| row.step).max().unwrap_or(0)
            })
        })
        .min()
        .unwrap_or(0);
    if common_step > 0 {
        let aligned = records
            .iter()
            .zip(&trajectories)
            .map(|(r, traj)| {
                r.summary
                    .replicas
                    .iter()
                    .filter_map(|s| traj.get(&(s.seed, common_step)).copied())
                    .collect()
            })
            .collect();
        rows.push(table_row(format!("loss @ step {common_step}"), aligned));
    }

    Ok(ComparisonTable { problem: first.problem.clone(), columns, rows })
}

impl fmt::Display for ComparisonTable {
    /// Markdown table; the best entry of each row is in bold.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Problem: {}", self.problem)?;
        writeln!(f)?;
        write!(f, "| metric |")?;
        for c in &self.columns {
            write!(f, " {c} |")?;
        }
        writeln!(f)?;
        write!(f, "|---|")?;
        for _ in &self.columns {
            write!(f, "---|")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "| {} |", row.metric)?;
            for (i, cell) in row.cells.iter().enumerate() {
                match cell {
                    Some(c) => {
                        let text = format!("{:.4e} ± {:.2e}", c.mean, c.std);
                        if row.best == Some(i) {
                            write!(f, " **{text}** |")?;
                        } else {
                            write!(f, " {text} |")?;
                        }
                    }
                    None => write!(f, " - |")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::run::{ReplicaSummary, Row, Summary};
    use super::*;

    fn record(optimizer: &str, problem: &str, seeds: &[(u64, f64)]) -> RunRecord {
        let rows = seeds
            .iter()
            .flat_map(|&(seed, loss)| {
                (1..=3).map(move |step| Row {
                    seed,
                    epoch: 0,
                    step,
                    lr: 0.1,
                    loss: loss * (4 - step) as f64,
                    grad_norm: 0.0,
                    param_norm: 0.0,
                })
            })
            .collect();
        RunRecord {
            config_hash: format!("{optimizer}-hash"),
            config: String::new(),
            problem: problem.into(),
            optimizer: optimizer.into(),
            rows,
            summary: Summary {
                replicas: seeds
                    .iter()
                    .map(|&(seed, loss)| ReplicaSummary { seed, final_loss: loss, best_loss: loss, steps: 3 })
                    .collect(),
                wall_time_secs: None,
            },
            aborted: None,
        }
    }

    #[test]
    fn single_record_matches_its_summary() {
        let t = compare(&[record("adaplus", "p", &[(0, 0.25)])]).unwrap();
        assert_eq!(t.columns, vec!["adaplus"]);
        let final_loss = t.row("final loss").unwrap().cells[0].unwrap();
        assert_eq!(final_loss, Cell { mean: 0.25, std: 0.0, n: 1 });
        assert_eq!(t.row("best loss").unwrap().cells[0].unwrap().mean, 0.25);
        assert_eq!(t.row("loss @ step 3").unwrap().cells[0].unwrap().mean, 0.25);
    }

    #[test]
    fn identical_replicas_have_zero_spread() {
        let t = compare(&[record("adam", "p", &[(0, 0.5), (1, 0.5)])]).unwrap();
        let c = t.row("final loss").unwrap().cells[0].unwrap();
        assert_eq!((c.mean, c.std, c.n), (0.5, 0.0, 2));
    }

    #[test]
    fn marks_lowest_mean_as_best() {
        let t = compare(&[
            record("adamw", "p", &[(0, 0.5), (1, 0.7)]),
            record("adaplus", "p", &[(0, 0.1), (1, 0.3)]),
        ])
        .unwrap();
        for row in &t.rows {
            assert_eq!(row.best, Some(1), "{}", row.metric);
        }
        let c = t.row("final loss").unwrap().cells[0].unwrap();
        assert!((c.mean - 0.6).abs() < 1e-15);
        assert!((c.std - 0.02f64.sqrt()).abs() < 1e-15);
        let text = t.to_string();
        assert!(text.contains("| metric | adamw | adaplus |"));
        assert!(text.contains("**2.0000e-1"));
    }

    #[test]
    fn duplicate_optimizers_get_hash_suffix() {
        let t = compare(&[record("adam", "p", &[(0, 1.0)]), record("adam", "p", &[(0, 2.0)])]).unwrap();
        assert_eq!(t.columns, vec!["adam [adam-has]", "adam [adam-has]"]);
    }

    #[test]
    fn rejects_mixed_problems_and_empty_input() {
        assert_eq!(compare(&[]), Err(CompareError::Empty));
        let err = compare(&[record("adam", "p", &[(0, 1.0)]), record("adam", "q", &[(0, 1.0)])]);
        assert!(matches!(err, Err(CompareError::ProblemMismatch { index: 1, .. })));
    }
}
