//! Graph-convolution rounds over the undirected neighborhood, with
//! symmetric degree normalization. Edge labels play no role here.

use crate::dag::FormulaDag;
use crate::tensor::{ops, Scalar, TensorError};

use super::Forward;
use super::NodeStates;

/// One GCN round `t` (1-based):
/// `h_v <- relu(W_t (h_v / |N(v)| + sum_w h_w / sqrt(|N(v)| |N(w)|)))`
/// with `N(v)` the deduplicated ancestor-union-child set and isolated-node
/// degrees clamped to 1.
pub fn gcn_round<T: Scalar>(
    dag: &FormulaDag,
    states: &NodeStates<T>,
    round_t: usize,
    fwd: &Forward<'_, T>,
) -> Result<NodeStates<T>, TensorError> {
    let n = dag.nodes.len();
    let d = states[0].numel();
    let degree: Vec<f64> = (0..n)
        .map(|v| dag.neighborhood(v).len().max(1) as f64)
        .collect();

    let mut agg_rows = Vec::with_capacity(n);
    for v in 0..n {
        let self_term = ops::scale(&states[v], T::from_f64(1.0 / degree[v]));
        let neighbor_terms: Vec<_> = dag
            .neighborhood(v)
            .into_iter()
            .map(|w| ops::scale(&states[w], T::from_f64(1.0 / (degree[v] * degree[w]).sqrt())))
            .collect();
        let sum = fwd.sum_canonical(neighbor_terms, d)?;
        agg_rows.push(ops::add(&self_term, &sum)?);
    }
    let stacked = ops::stack_rows(&agg_rows)?;
    let out = ops::relu(&ops::matmul(&stacked, fwd.get(&format!("gcn.r{round_t}.w")))?);
    ops::rows(&out)
}
