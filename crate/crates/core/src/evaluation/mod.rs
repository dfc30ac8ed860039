//! Probe-based downstream evaluation of learned embeddings.

mod probe;
mod sweep;
mod tasks;
mod topology;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

pub use probe::{split, train_probe, ProbeConfig, ProbeReport, Targets, MIN_CLASS_EXAMPLES};
pub use sweep::{mean_sample_count, sample_budget_sweep, BudgetRow};
pub use tasks::{
    distance_pairs, embedding_matrix, pair_matrix, task_distance, task_edge_count, task_line_length,
    task_shape_classification, task_topology, topology_pairs, LabeledPair, PairSample,
};
pub use topology::{topology_ground_truth, PairKind, TopoLabel, CONTACT_TOL};

use crate::training::TrainError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error("class `{class}` has only {count} examples (need at least 10)")]
    ClassStarvation { class: String, count: usize },
    #[error("class `{class}` has no test examples")]
    NoTestExamples { class: String },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("dataset carries no labels")]
    MissingLabels,
    #[error("embeddings missing for ids: {}", .0.join(", "))]
    MissingIds(Vec<String>),
    #[error("dataset has no {0} entities")]
    NoEntities(&'static str),
    #[error("budget {budget} is infeasible: at least {min:.1} samples per entity are always drawn")]
    InfeasibleBudget { budget: usize, min: f64 },
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Shape,
    Edge,
    Length,
    Distance,
    Topology,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Shape, Task::Edge, Task::Length, Task::Distance, Task::Topology];

    pub fn name(self) -> &'static str {
        match self {
            Task::Shape => "shape",
            Task::Edge => "edge",
            Task::Length => "length",
            Task::Distance => "distance",
            Task::Topology => "topology",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}` (expected shape, edge, length, distance or topology)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    Mae,
    R2,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Mae => "mae",
            Metric::R2 => "r2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One line of the results table.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub task: String,
    pub metric: Metric,
    pub value: f64,
    pub baseline: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_report(task: impl Into<String>, r: &ProbeReport, seed: u64) -> Vec<ResultRow> {
        let task = task.into();
        let mut rows = vec![ResultRow {
            task: task.clone(),
            metric: r.metric,
            value: r.value,
            baseline: r.baseline,
            seed,
        }];
        if let Some(r2) = r.r2 {
            rows.push(ResultRow {
                task,
                metric: Metric::R2,
                value: r2,
                baseline: 0.0,
                seed,
            });
        }
        rows
    }
}

pub fn write_results_csv(rows: &[ResultRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "task,metric,value,baseline,seed")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.task, r.metric, r.value, r.baseline, r.seed)?;
    }
    Ok(())
}

/// Fixed-width table of the same rows.
pub fn summary_table(rows: &[ResultRow]) -> String {
    let mut out = format!("{:<22} {:<9} {:>10} {:>10} {:>6}\n", "task", "metric", "value", "baseline", "seed");
    for r in rows {
        out.push_str(&format!(
            "{:<22} {:<9} {:>10.4} {:>10.4} {:>6}\n",
            r.task, r.metric, r.value, r.baseline, r.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
        }
        assert!("area".parse::<Task>().is_err());
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_results_csv(
            &[ResultRow {
                task: "shape".into(),
                metric: Metric::Accuracy,
                value: 0.95,
                baseline: 0.2,
                seed: 3,
            }],
            &mut out,
        )
        .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "task,metric,value,baseline,seed\nshape,accuracy,0.95,0.2,3\n");
    }
}
