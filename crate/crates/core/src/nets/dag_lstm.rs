//! DAG LSTM: the N-ary tree-LSTM cell generalized to DAGs, executed with
//! topological batching. Predecessor contributions go through edge-label-
//! specific U matrices; every matrix product is layer-normalized at its own
//! site; per-predecessor forget gates modulate the cell-state flow.

use crate::dag::{EdgeId, FormulaDag, NodeId, TopoDirection};
use crate::tensor::{ops, Scalar, Tensor, TensorError};

use super::{Forward, NodeStates};

/// Predecessor edges of `v` for the accumulation direction: children when
/// accumulating upwards, parents when accumulating downwards. Returns
/// (edge id, neighbor node) pairs.
fn predecessors(dag: &FormulaDag, v: NodeId, direction: TopoDirection) -> Vec<(EdgeId, NodeId)> {
    match direction {
        TopoDirection::Up => dag.nodes[v]
            .out_edges
            .iter()
            .map(|&e| (e, dag.edges[e].dst))
            .collect(),
        TopoDirection::Down => dag.nodes[v]
            .in_edges
            .iter()
            .map(|&e| (e, dag.edges[e].src))
            .collect(),
    }
}

struct GateSums<T: Scalar> {
    i: Tensor<T>,
    o: Tensor<T>,
    c: Tensor<T>,
    forget: Tensor<T>,
}

/// Edge-label U contributions and forget-gated cell flow for one node.
fn predecessor_sums<T: Scalar>(
    dag: &FormulaDag,
    v: NodeId,
    direction: TopoDirection,
    prefix: &str,
    wf_v: &Tensor<T>,
    h: &[Option<Tensor<T>>],
    c: &[Option<Tensor<T>>],
    hid: usize,
    fwd: &Forward<'_, T>,
) -> Result<GateSums<T>, TensorError> {
    let mut u_i = Vec::new();
    let mut u_o = Vec::new();
    let mut u_c = Vec::new();
    let mut forget = Vec::new();
    for (e, w) in predecessors(dag, v, direction) {
        let label = dag.edges[e].label_id;
        let hw = h[w].as_ref().expect("predecessor state is finalized");
        let cw = c[w].as_ref().expect("predecessor cell is finalized");
        let u = |gate: &str| format!("{prefix}.u_{gate}.l{label:03}");
        u_i.push(fwd.layer_norm(&format!("{prefix}.ln_ui"), &ops::vecmat(hw, fwd.get(&u("i")))?)?);
        u_o.push(fwd.layer_norm(&format!("{prefix}.ln_uo"), &ops::vecmat(hw, fwd.get(&u("o")))?)?);
        u_c.push(fwd.layer_norm(&format!("{prefix}.ln_uc"), &ops::vecmat(hw, fwd.get(&u("c")))?)?);
        let uf = fwd.layer_norm(&format!("{prefix}.ln_uf"), &ops::vecmat(hw, fwd.get(&u("f")))?)?;
        let f_vw = ops::sigmoid(&ops::add(
            &ops::add(wf_v, &uf)?,
            fwd.get(&format!("{prefix}.b_f")),
        )?);
        forget.push(ops::mul(&f_vw, cw)?);
    }
    Ok(GateSums {
        i: fwd.sum_canonical(u_i, hid)?,
        o: fwd.sum_canonical(u_o, hid)?,
        c: fwd.sum_canonical(u_c, hid)?,
        forget: fwd.sum_canonical(forget, hid)?,
    })
}

fn cell<T: Scalar>(
    prefix: &str,
    wi_v: &Tensor<T>,
    wo_v: &Tensor<T>,
    wc_v: &Tensor<T>,
    sums: &GateSums<T>,
    fwd: &Forward<'_, T>,
) -> Result<(Tensor<T>, Tensor<T>), TensorError> {
    let gate = |w: &Tensor<T>, u: &Tensor<T>, b: &str| -> Result<Tensor<T>, TensorError> {
        ops::add(&ops::add(w, u)?, fwd.get(&format!("{prefix}.{b}")))
    };
    let i_v = ops::sigmoid(&gate(wi_v, &sums.i, "b_i")?);
    let o_v = ops::sigmoid(&gate(wo_v, &sums.o, "b_o")?);
    let c_hat = ops::tanh(&gate(wc_v, &sums.c, "b_c")?);
    let c_v = ops::add(&ops::mul(&i_v, &c_hat)?, &sums.forget)?;
    let h_v = ops::mul(&o_v, &ops::tanh(&c_v))?;
    Ok((h_v, c_v))
}

/// Topologically batched DAG LSTM pass. Processes schedule layers in order;
/// within a layer the four input projections are computed as one stacked
/// matrix product per gate (bitwise equal to the per-node products).
pub fn dag_lstm_forward<T: Scalar>(
    dag: &FormulaDag,
    inputs: &NodeStates<T>,
    direction: TopoDirection,
    prefix: &str,
    fwd: &Forward<'_, T>,
) -> Result<NodeStates<T>, TensorError> {
    let n = dag.nodes.len();
    let hid = fnet_hidden(prefix, fwd);
    let mut h: Vec<Option<Tensor<T>>> = vec![None; n];
    let mut c: Vec<Option<Tensor<T>>> = vec![None; n];

    let schedule = dag.schedule(direction).clone();
    for layer in &schedule.layers {
        let stacked = ops::stack_rows(
            &layer.iter().map(|&v| inputs[v].clone()).collect::<Vec<_>>(),
        )?;
        let project = |gate: &str| -> Result<Tensor<T>, TensorError> {
            fwd.layer_norm(
                &format!("{prefix}.ln_w{gate}"),
                &ops::matmul(&stacked, fwd.get(&format!("{prefix}.w_{gate}")))?,
            )
        };
        let wi = project("i")?;
        let wo = project("o")?;
        let wf = project("f")?;
        let wc = project("c")?;
        for (bi, &v) in layer.iter().enumerate() {
            let wf_v = ops::row(&wf, bi)?;
            let sums = predecessor_sums(dag, v, direction, prefix, &wf_v, &h, &c, hid, fwd)?;
            let (h_v, c_v) = cell(
                prefix,
                &ops::row(&wi, bi)?,
                &ops::row(&wo, bi)?,
                &ops::row(&wc, bi)?,
                &sums,
                fwd,
            )?;
            h[v] = Some(h_v);
            c[v] = Some(c_v);
        }
    }
    Ok(h.into_iter().map(|s| s.expect("all nodes scheduled")).collect())
}

/// Naive one-node-at-a-time evaluation in topological order, with no layer
/// stacking. Exists as the comparison path for the batched implementation;
/// the two must agree bitwise.
pub fn dag_lstm_sequential<T: Scalar>(
    dag: &FormulaDag,
    inputs: &NodeStates<T>,
    direction: TopoDirection,
    prefix: &str,
    fwd: &Forward<'_, T>,
) -> Result<NodeStates<T>, TensorError> {
    let n = dag.nodes.len();
    let hid = fnet_hidden(prefix, fwd);
    let mut h: Vec<Option<Tensor<T>>> = vec![None; n];
    let mut c: Vec<Option<Tensor<T>>> = vec![None; n];

    let order: Vec<NodeId> = dag.schedule(direction).iter_nodes().collect();
    for v in order {
        let project = |gate: &str| -> Result<Tensor<T>, TensorError> {
            fwd.layer_norm(
                &format!("{prefix}.ln_w{gate}"),
                &ops::vecmat(&inputs[v], fwd.get(&format!("{prefix}.w_{gate}")))?,
            )
        };
        let wf_v = project("f")?;
        let sums = predecessor_sums(dag, v, direction, prefix, &wf_v, &h, &c, hid, fwd)?;
        let (h_v, c_v) = cell(prefix, &project("i")?, &project("o")?, &project("c")?, &sums, fwd)?;
        h[v] = Some(h_v);
        c[v] = Some(c_v);
    }
    Ok(h.into_iter().map(|s| s.expect("all nodes scheduled")).collect())
}

fn fnet_hidden<T: Scalar>(prefix: &str, fwd: &Forward<'_, T>) -> usize {
    fwd.get(&format!("{prefix}.w_i")).shape()[1]
}
