//! The two-stage embedding architecture: initial node embedders (MPNN, GCN,
//! DAG LSTM, bidirectional DAG LSTM), gated cross-graph attention, pooling
//! (max pool or a DAG LSTM run to the root), and the pair classifier.

mod attention;
mod dag_lstm;
mod forward;
mod gcn;
mod mpnn;
mod params;
mod pipeline;

pub use attention::attention_exchange;
pub use dag_lstm::{dag_lstm_forward, dag_lstm_sequential};
pub use forward::{Forward, Mode};
pub use gcn::gcn_round;
pub use mpnn::{edge_states, mpnn_round};
pub use params::{ParameterStore, Params};
pub use pipeline::{classify_pair, embed_pair, embed_single, init_states, node_embeddings, pool};

use serde::{Deserialize, Serialize};

use crate::tensor::{Scalar, Tensor};
use crate::train::Vocabulary;

/// Per-node embedding vectors, aligned with DAG node indices.
pub type NodeStates<T> = Vec<Tensor<T>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbedderKind {
    #[serde(rename = "MPNN")]
    Mpnn,
    #[serde(rename = "GCN")]
    Gcn,
    #[serde(rename = "DagLSTM")]
    DagLstm,
    #[serde(rename = "BidirDagLSTM")]
    BidirDagLstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolingKind {
    MaxPool,
    DagPool,
    AttDagPool,
}

/// Architecture selection and dimensionalities.
///
/// Defaults follow the Holstep-scale configuration (node 256 / edge 64,
/// two message rounds, two attention heads, per-head attention width twice
/// the node width); halve the dimensions for Mizar-scale runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_node_dim")]
    pub node_dim: usize,
    #[serde(default = "default_edge_dim")]
    pub edge_dim: usize,
    #[serde(default = "default_embedder")]
    pub node_embedder: EmbedderKind,
    #[serde(default = "default_pooling")]
    pub pooling: PoolingKind,
    /// Message-passing rounds for MPNN/GCN; ignored by the DAG LSTM embedders.
    #[serde(default = "default_rounds")]
    pub rounds_k: usize,
    #[serde(default = "default_heads")]
    pub attention_heads: usize,
    /// Per-head query/key/value width; defaults to twice `node_dim`.
    #[serde(default)]
    pub attention_inner_dim: Option<usize>,
}

fn default_node_dim() -> usize {
    256
}
fn default_edge_dim() -> usize {
    64
}
fn default_embedder() -> EmbedderKind {
    EmbedderKind::BidirDagLstm
}
fn default_pooling() -> PoolingKind {
    PoolingKind::AttDagPool
}
fn default_rounds() -> usize {
    2
}
fn default_heads() -> usize {
    2
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            node_dim: default_node_dim(),
            edge_dim: default_edge_dim(),
            node_embedder: default_embedder(),
            pooling: default_pooling(),
            rounds_k: default_rounds(),
            attention_heads: default_heads(),
            attention_inner_dim: None,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid model config: {0}")]
    Invalid(String),
    #[error("config is not valid JSON: {0}")]
    Json(String),
}

impl ModelConfig {
    /// Small configuration used throughout the test and selfcheck suites.
    pub fn small(node_embedder: EmbedderKind, pooling: PoolingKind) -> Self {
        ModelConfig {
            node_dim: 8,
            edge_dim: 6,
            node_embedder,
            pooling,
            rounds_k: 2,
            attention_heads: 2,
            attention_inner_dim: None,
        }
    }

    pub fn attention_inner(&self) -> usize {
        self.attention_inner_dim.unwrap_or(2 * self.node_dim)
    }

    /// Width of the node states handed to the pooling stage.
    pub fn pool_input_dim(&self) -> usize {
        match self.pooling {
            PoolingKind::AttDagPool => 2 * self.node_dim,
            _ => self.node_dim,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_dim == 0 || self.edge_dim == 0 {
            return Err(ConfigError::Invalid("dimensions must be positive".into()));
        }
        if self.rounds_k == 0 {
            return Err(ConfigError::Invalid("rounds_k must be at least 1".into()));
        }
        if self.attention_heads == 0 {
            return Err(ConfigError::Invalid("attention_heads must be at least 1".into()));
        }
        if self.attention_inner_dim == Some(0) {
            return Err(ConfigError::Invalid("attention_inner_dim must be positive".into()));
        }
        Ok(())
    }

    /// Resolves derived fields so serialization is canonical.
    pub fn canonicalize(&mut self) {
        self.attention_inner_dim = Some(self.attention_inner());
    }

    /// Parses canonical JSON; unknown keys are hard errors.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut config: ModelConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        config.validate()?;
        config.canonicalize();
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let mut canonical = self.clone();
        canonical.canonicalize();
        serde_json::to_string(&canonical).expect("config serialization cannot fail")
    }
}

/// A ready-to-run model: architecture, vocabulary, and parameters.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ParameterStore<T>,
}

impl<T: Scalar> Model<T> {
    /// Freshly initialized parameters, deterministic in `seed`.
    pub fn init(config: ModelConfig, vocab: Vocabulary, seed: u64) -> Self {
        let params = ParameterStore::init(&config, vocab.len(), seed);
        Model {
            config,
            vocab,
            params,
        }
    }

    /// Eval-mode pair probability with frozen parameters.
    pub fn score_pair(
        &self,
        premise: &crate::dag::FormulaDag,
        conjecture: &crate::dag::FormulaDag,
    ) -> Result<T, crate::tensor::TensorError> {
        let view = self.params.frozen();
        let fwd = Forward::new(&view, Mode::Eval);
        let p = embed_pair(premise, conjecture, &self.vocab, &self.config, &fwd)?;
        Ok(p.item())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_round_trip() {
        let config = ModelConfig::small(EmbedderKind::Mpnn, PoolingKind::MaxPool);
        let json = config.to_json();
        let back = ModelConfig::from_json(&json).unwrap();
        assert_eq!(back.node_dim, 8);
        assert_eq!(back.node_embedder, EmbedderKind::Mpnn);
        assert_eq!(back.attention_inner_dim, Some(16));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ModelConfig::from_json("{\"node_dim\": 8, \"nod_embedder\": \"MPNN\"}");
        assert!(matches!(err, Err(ConfigError::Json(_))));
    }

    #[test]
    fn enum_spellings() {
        let config =
            ModelConfig::from_json("{\"node_embedder\": \"BidirDagLSTM\", \"pooling\": \"AttDagPool\"}")
                .unwrap();
        assert_eq!(config.node_embedder, EmbedderKind::BidirDagLstm);
        assert_eq!(config.pooling, PoolingKind::AttDagPool);
        assert_eq!(config.node_dim, 256);
        assert_eq!(config.attention_inner(), 512);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ModelConfig::from_json("{\"node_dim\": 0}").is_err());
        assert!(ModelConfig::from_json("{\"rounds_k\": 0}").is_err());
    }
}
