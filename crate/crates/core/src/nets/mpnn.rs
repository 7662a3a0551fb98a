//! Message-passing rounds: per-edge messages from ancestors and children,
//! summed per node, with a residual feed-forward update.

use crate::dag::FormulaDag;
use crate::tensor::{ops, Scalar, Tensor, TensorError};

use super::forward::Forward;
use super::NodeStates;

/// Edge states `h_e`: edge-label embeddings through batch norm and ReLU.
/// `None` when the graph has no edges.
pub fn edge_states<T: Scalar>(
    dag: &FormulaDag,
    fwd: &Forward<'_, T>,
) -> Result<Option<NodeStates<T>>, TensorError> {
    if dag.edges.is_empty() {
        return Ok(None);
    }
    let ids: Vec<usize> = dag.edges.iter().map(|e| e.label_id as usize).collect();
    let x = ops::gather_rows(fwd.get("embed.edge"), &ids)?;
    let h = ops::relu(&fwd.batch_norm("init.edge_bn", &x)?);
    Ok(Some(ops::rows(&h)?))
}

/// One message-passing round `t` (1-based):
/// ancestor and child messages are per-edge feed-forward outputs over
/// `[h_v || h_w || h_e]`, summed per node (empty sums are zero), followed by
/// the residual update `h_v + F_A([h_v || m_anc || m_child])`.
pub fn mpnn_round<T: Scalar>(
    dag: &FormulaDag,
    states: &NodeStates<T>,
    edges: &Option<NodeStates<T>>,
    round_t: usize,
    fwd: &Forward<'_, T>,
) -> Result<NodeStates<T>, TensorError> {
    let n = dag.nodes.len();
    let d = states[0].numel();

    let messages = |net: &str, ancestor_side: bool| -> Result<Vec<Tensor<T>>, TensorError> {
        // one input row per (node, incident edge) pair
        let mut rows: Vec<Tensor<T>> = Vec::new();
        let mut owner: Vec<usize> = Vec::new();
        for v in 0..n {
            let edge_ids = if ancestor_side {
                &dag.nodes[v].in_edges
            } else {
                &dag.nodes[v].out_edges
            };
            for &e in edge_ids {
                let w = if ancestor_side { dag.edges[e].src } else { dag.edges[e].dst };
                let he = edges
                    .as_ref()
                    .expect("graphs with edges have edge states")[e]
                    .clone();
                let row = ops::concat(&ops::concat(&states[v], &states[w])?, &he)?;
                rows.push(row);
                owner.push(v);
            }
        }
        if rows.is_empty() {
            return Ok(vec![Tensor::zeros(vec![d]); n]);
        }
        let stacked = ops::stack_rows(&rows)?;
        let out = fwd.feed_forward_rows(net, &stacked)?;
        let out_rows = ops::rows(&out)?;
        let mut per_node: Vec<Vec<Tensor<T>>> = vec![Vec::new(); n];
        for (row, &v) in out_rows.into_iter().zip(&owner) {
            per_node[v].push(row);
        }
        per_node
            .into_iter()
            .map(|parts| fwd.sum_canonical(parts, d))
            .collect()
    };

    let m_anc = messages(&format!("mpnn.r{round_t}.msg_anc"), true)?;
    let m_child = messages(&format!("mpnn.r{round_t}.msg_child"), false)?;

    let update_rows: Vec<Tensor<T>> = (0..n)
        .map(|v| ops::concat(&ops::concat(&states[v], &m_anc[v])?, &m_child[v]))
        .collect::<Result<_, _>>()?;
    let stacked = ops::stack_rows(&update_rows)?;
    let update = fwd.feed_forward_rows(&format!("mpnn.r{round_t}.update"), &stacked)?;
    let update_rows = ops::rows(&update)?;
    (0..n)
        .map(|v| ops::add(&states[v], &update_rows[v]))
        .collect()
}
