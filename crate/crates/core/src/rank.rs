//! Average rank across tasks with tied positions averaged.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    HigherIsBetter,
    LowerIsBetter,
}

/// `values[t][a]` is approach `a`'s result on task `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub approaches: Vec<String>,
    pub tasks: Vec<String>,
    pub values: Vec<Vec<f64>>,
    #[serde(default)]
    pub direction: Direction,
}

impl MetricTable {
    pub fn validate(&self) -> Result<()> {
        if self.approaches.len() < 2 {
            return Err(Error::NotRectangular("need at least two approaches".into()));
        }
        if self.tasks.is_empty() || self.values.len() != self.tasks.len() {
            return Err(Error::NotRectangular(alloc::format!(
                "{} task names for {} rows",
                self.tasks.len(),
                self.values.len()
            )));
        }
        for (task, row) in self.tasks.iter().zip(&self.values) {
            if row.len() != self.approaches.len() {
                return Err(Error::NotRectangular(alloc::format!(
                    "task {task} has {} values for {} approaches",
                    row.len(),
                    self.approaches.len()
                )));
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(task.clone()));
            }
        }
        Ok(())
    }
}

/// Ranks `1..=n` for `values` (best first), ties sharing the mean of their positions.
pub fn tie_averaged_ranks(values: &[f64], direction: Direction) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match direction {
        Direction::HigherIsBetter => values[b].total_cmp(&values[a]),
        Direction::LowerIsBetter => values[a].total_cmp(&values[b]),
    });
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let mean = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = mean;
        }
        i = j;
    }
    ranks
}

/// Mean over tasks of each approach's tie-averaged rank, in approach order.
pub fn average_rank(table: &MetricTable) -> Result<Vec<(String, f64)>> {
    table.validate()?;
    let mut sums = alloc::vec![0.0f64; table.approaches.len()];
    for row in &table.values {
        for (s, r) in sums.iter_mut().zip(tie_averaged_ranks(row, table.direction)) {
            *s += r;
        }
    }
    let t = table.tasks.len() as f64;
    Ok(table.approaches.iter().cloned().zip(sums.into_iter().map(|s| s / t)).collect())
}
