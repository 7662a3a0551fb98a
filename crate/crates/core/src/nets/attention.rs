//! Gated multi-head attention between identically labeled nodes of the
//! premise and conjecture graphs. Each node state is extended with a gated
//! summary of its matches from the other graph; nodes without matches get a
//! zero extension, and a closed gate reduces the model to plain DAG-LSTM
//! pooling.

use std::collections::HashMap;

use crate::dag::FormulaDag;
use crate::tensor::{ops, Scalar, Tensor, TensorError};

use super::{Forward, ModelConfig, NodeStates};

/// Produces `[s_u || s'_u]` for every node of both graphs, where `s'_u`
/// attends over the other graph's nodes with the same token. The parameter
/// set is shared between the two directions.
pub fn attention_exchange<T: Scalar>(
    states_p: &NodeStates<T>,
    states_c: &NodeStates<T>,
    dag_p: &FormulaDag,
    dag_c: &FormulaDag,
    config: &ModelConfig,
    fwd: &Forward<'_, T>,
) -> Result<(NodeStates<T>, NodeStates<T>), TensorError> {
    let extended_p = one_side(states_p, dag_p, states_c, dag_c, config, fwd)?;
    let extended_c = one_side(states_c, dag_c, states_p, dag_p, config, fwd)?;
    Ok((extended_p, extended_c))
}

fn one_side<T: Scalar>(
    states: &NodeStates<T>,
    dag: &FormulaDag,
    other_states: &NodeStates<T>,
    other_dag: &FormulaDag,
    config: &ModelConfig,
    fwd: &Forward<'_, T>,
) -> Result<NodeStates<T>, TensorError> {
    let node_dim = config.node_dim;
    let inner = config.attention_inner();
    let heads = config.attention_heads;
    let scale = T::from_f64(1.0 / (inner as f64).sqrt());

    // token -> node indices in the other graph, in index order
    let mut by_token: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, node) in other_dag.nodes.iter().enumerate() {
        by_token.entry(node.token.as_str()).or_default().push(i);
    }

    let other_stacked = ops::stack_rows(other_states)?;
    let mut keys = Vec::with_capacity(heads);
    let mut values = Vec::with_capacity(heads);
    for head in 0..heads {
        keys.push(ops::matmul(&other_stacked, fwd.get(&format!("att.k.h{head}")))?);
        values.push(ops::matmul(&other_stacked, fwd.get(&format!("att.v.h{head}")))?);
    }

    let mut out = Vec::with_capacity(states.len());
    for (u, node) in dag.nodes.iter().enumerate() {
        // matches in content-sorted order, so enumeration order of equal
        // matches cannot influence the softmax bits
        let mut matches: Vec<usize> = by_token
            .get(node.token.as_str())
            .cloned()
            .unwrap_or_default();
        matches.sort_by(|&a, &b| other_states[a].content_cmp(&other_states[b]));

        let summary = if matches.is_empty() {
            Tensor::zeros(vec![node_dim])
        } else {
            let mut head_outputs = Vec::with_capacity(heads);
            for head in 0..heads {
                let q_hat = ops::vecmat(&states[u], fwd.get(&format!("att.q.h{head}")))?;
                let k_rows: Vec<Tensor<T>> = matches
                    .iter()
                    .map(|&j| ops::row(&keys[head], j))
                    .collect::<Result<_, _>>()?;
                let v_rows: Vec<Tensor<T>> = matches
                    .iter()
                    .map(|&j| ops::row(&values[head], j))
                    .collect::<Result<_, _>>()?;
                let k_matrix = ops::stack_rows(&k_rows)?;
                let v_matrix = ops::stack_rows(&v_rows)?;
                let scores = ops::scale(&ops::matvec(&k_matrix, &q_hat)?, scale);
                let alpha = ops::softmax(&scores);
                head_outputs.push(ops::vecmat(&alpha, &v_matrix)?);
            }
            let combined = ops::vecmat(&ops::concat_all(&head_outputs)?, fwd.get("att.out"))?;
            let kind_vec = fwd.get(&format!("att.r.{}", node.kind.name().to_ascii_lowercase()));
            let gate = ops::sigmoid(&ops::vecmat(kind_vec, fwd.get("att.gate"))?);
            ops::mul(&gate, &combined)?
        };
        out.push(ops::concat(&states[u], &summary)?);
    }
    Ok(out)
}
