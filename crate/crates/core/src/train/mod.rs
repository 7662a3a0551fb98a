//! Dataset loading, vocabulary, loss and optimizer, training/evaluation
//! loops, checkpoints, and the synthetic-task generators.

mod adam;
mod checkpoint;
mod data;
mod loss;
mod synthetic;
mod trainer;
mod vocab;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use data::{load_dataset, parse_dataset};
pub use loss::bce_loss;
pub use synthetic::{
    generate_synthetic, generate_synthetic_lines, random_formula_text, random_tree_formula_text,
    SyntheticTask,
};
pub use trainer::{evaluate, rank_premises, train, EpochMetrics, EvalReport, TrainOptions};
pub use vocab::{Vocabulary, UNK_TOKEN};

use crate::dag::FormulaDag;

/// One (premise, conjecture, label) training example.
#[derive(Debug, Clone)]
pub struct Example {
    pub premise: FormulaDag,
    pub conjecture: FormulaDag,
    /// 0 or 1.
    pub label: u8,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// A rejected input line, with its 1-based line number.
#[derive(Debug, Clone)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("failed to read dataset: {0}")]
    Io(String),
    #[error("dataset contains no examples")]
    Empty,
    #[error("{} malformed line(s): {}", .0.len(), format_lines(.0))]
    Lines(Vec<LineError>),
}

fn format_lines(errors: &[LineError]) -> String {
    errors
        .iter()
        .take(5)
        .map(|e| format!("line {}: {}", e.line, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error("evaluation requires a non-empty dataset")]
    EmptyEvaluation,
}
