//! Stage composition: initial states, node embedder, optional attention
//! exchange, pooling, and the pair classifier.

use crate::dag::{FormulaDag, TopoDirection};
use crate::tensor::{ops, Scalar, Tensor, TensorError};
use crate::train::Vocabulary;

use super::{
    attention_exchange, dag_lstm_forward, edge_states, gcn_round, mpnn_round, EmbedderKind,
    Forward, ModelConfig, NodeStates, PoolingKind,
};

/// Initial node states `h_v^(0)`: token embeddings (unknown tokens map to
/// the UNK row) through batch normalization and a ReLU.
pub fn init_states<T: Scalar>(
    dag: &FormulaDag,
    vocab: &Vocabulary,
    fwd: &Forward<'_, T>,
) -> Result<NodeStates<T>, TensorError> {
    let ids: Vec<usize> = dag.nodes.iter().map(|n| vocab.lookup(&n.token)).collect();
    let x = ops::gather_rows(fwd.get("embed.token"), &ids)?;
    let h = ops::relu(&fwd.batch_norm("init.node_bn", &x)?);
    ops::rows(&h)
}

/// Runs the configured initial node embedder.
pub fn node_embeddings<T: Scalar>(
    dag: &FormulaDag,
    vocab: &Vocabulary,
    config: &ModelConfig,
    fwd: &Forward<'_, T>,
) -> Result<NodeStates<T>, TensorError> {
    let mut states = init_states(dag, vocab, fwd)?;
    match config.node_embedder {
        EmbedderKind::Mpnn => {
            let edges = edge_states(dag, fwd)?;
            for t in 1..=config.rounds_k {
                states = mpnn_round(dag, &states, &edges, t, fwd)?;
            }
        }
        EmbedderKind::Gcn => {
            for t in 1..=config.rounds_k {
                states = gcn_round(dag, &states, t, fwd)?;
            }
        }
        EmbedderKind::DagLstm => {
            states = dag_lstm_forward(dag, &states, TopoDirection::Up, "embedder.lstm", fwd)?;
        }
        EmbedderKind::BidirDagLstm => {
            let up = dag_lstm_forward(dag, &states, TopoDirection::Up, "embedder.up", fwd)?;
            let down = dag_lstm_forward(dag, &states, TopoDirection::Down, "embedder.down", fwd)?;
            let rows: Vec<Tensor<T>> = up
                .iter()
                .zip(&down)
                .map(|(u, d)| ops::concat(u, d))
                .collect::<Result<_, _>>()?;
            let stacked = ops::stack_rows(&rows)?;
            let out = fwd.feed_forward_rows("embedder.bd", &stacked)?;
            states = ops::rows(&out)?;
        }
    }
    Ok(states)
}

/// Reduces node states to one graph embedding: elementwise max over nodes,
/// or an upward DAG LSTM whose root state covers the whole graph.
pub fn pool<T: Scalar>(
    dag: &FormulaDag,
    states: &NodeStates<T>,
    config: &ModelConfig,
    fwd: &Forward<'_, T>,
) -> Result<Tensor<T>, TensorError> {
    match config.pooling {
        PoolingKind::MaxPool => {
            let mut acc = states[0].clone();
            for s in &states[1..] {
                acc = ops::maximum(&acc, s)?;
            }
            Ok(acc)
        }
        PoolingKind::DagPool | PoolingKind::AttDagPool => {
            let h = dag_lstm_forward(dag, states, TopoDirection::Up, "pool.lstm", fwd)?;
            Ok(h[dag.root].clone())
        }
    }
}

/// `F_CL([s_P || s_C])`: one plain-ReLU hidden layer at half the input
/// width, sigmoid output in (0, 1).
pub fn classify_pair<T: Scalar>(
    s_p: &Tensor<T>,
    s_c: &Tensor<T>,
    fwd: &Forward<'_, T>,
) -> Result<Tensor<T>, TensorError> {
    let z = ops::concat(s_p, s_c)?;
    let h = ops::relu(&ops::add(&ops::vecmat(&z, fwd.get("cls.w1"))?, fwd.get("cls.b1"))?);
    let out = ops::sigmoid(&ops::add(&ops::vecmat(&h, fwd.get("cls.w2"))?, fwd.get("cls.b2"))?);
    Ok(ops::sum_all(&out))
}

/// Full pipeline for one (premise, conjecture) pair, returning the
/// probability that the premise is relevant.
pub fn embed_pair<T: Scalar>(
    premise: &FormulaDag,
    conjecture: &FormulaDag,
    vocab: &Vocabulary,
    config: &ModelConfig,
    fwd: &Forward<'_, T>,
) -> Result<Tensor<T>, TensorError> {
    let s_p = node_embeddings(premise, vocab, config, fwd)?;
    let s_c = node_embeddings(conjecture, vocab, config, fwd)?;
    let (s_p, s_c) = if config.pooling == PoolingKind::AttDagPool {
        attention_exchange(&s_p, &s_c, premise, conjecture, config, fwd)?
    } else {
        (s_p, s_c)
    };
    let g_p = pool(premise, &s_p, config, fwd)?;
    let g_c = pool(conjecture, &s_c, config, fwd)?;
    classify_pair(&g_p, &g_c, fwd)
}

/// Graph embedding of a single formula. Only meaningful when the pooling
/// mode does not exchange information across the pair (not AttDagPool).
pub fn embed_single<T: Scalar>(
    dag: &FormulaDag,
    vocab: &Vocabulary,
    config: &ModelConfig,
    fwd: &Forward<'_, T>,
) -> Result<Tensor<T>, TensorError> {
    debug_assert_ne!(config.pooling, PoolingKind::AttDagPool);
    let states = node_embeddings(dag, vocab, config, fwd)?;
    pool(dag, &states, config, fwd)
}
