//! Independent reference computations, written against raw `f64` buffers
//! rather than the tensor library, for the oracle-equivalence checks.

use crate::dag::{FormulaDag, NodeId};
use crate::nets::{ParameterStore, Params};
use crate::tensor::Scalar;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn get<'a>(params: &'a ParameterStore<f64>, name: &str) -> &'a [f64] {
    params.get(name).data()
}

/// x . W for row-major W of shape [in, out].
fn vecmat_raw(x: &[f64], w: &[f64], out_dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_dim];
    for (p, &xv) in x.iter().enumerate() {
        for j in 0..out_dim {
            out[j] += xv * w[p * out_dim + j];
        }
    }
    out
}

fn layer_norm_raw(x: &[f64], gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let d = x.len() as f64;
    let mu = x.iter().sum::<f64>() / d;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / d;
    let inv = 1.0 / (var + 1e-5).sqrt();
    x.iter()
        .zip(gamma.iter().zip(beta))
        .map(|(&v, (&g, &b))| g * (v - mu) * inv + b)
        .collect()
}

fn add3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b.iter().zip(c))
        .map(|(&x, (&y, &z))| x + y + z)
        .collect()
}

/// Recursive N-ary tree LSTM over a sharing-free DAG (every node has at
/// most one parent), accumulating from the leaves. Returns per-node h.
pub fn tree_lstm_reference(
    dag: &FormulaDag,
    inputs: &[Vec<f64>],
    params: &ParameterStore<f64>,
    prefix: &str,
) -> Vec<Vec<f64>> {
    let hid = params.get(&format!("{prefix}.w_i")).shape()[1];
    let mut h = vec![Vec::new(); dag.nodes.len()];
    let mut c = vec![Vec::new(); dag.nodes.len()];

    // explicit post-order traversal from the root
    let mut order: Vec<NodeId> = Vec::new();
    let mut stack = vec![dag.root];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &e in &dag.nodes[v].out_edges {
            stack.push(dag.edges[e].dst);
        }
    }
    for &v in order.iter().rev() {
        let ln = |site: &str, x: &[f64]| {
            layer_norm_raw(
                x,
                get(params, &format!("{prefix}.ln_{site}.gamma")),
                get(params, &format!("{prefix}.ln_{site}.beta")),
            )
        };
        let w_term = |gate: &str| {
            ln(
                &format!("w{gate}"),
                &vecmat_raw(&inputs[v], get(params, &format!("{prefix}.w_{gate}")), hid),
            )
        };
        let wi = w_term("i");
        let wo = w_term("o");
        let wf = w_term("f");
        let wc = w_term("c");

        let mut sum_i = vec![0.0; hid];
        let mut sum_o = vec![0.0; hid];
        let mut sum_c = vec![0.0; hid];
        let mut forget_flow = vec![0.0; hid];
        for &e in &dag.nodes[v].out_edges {
            let w = dag.edges[e].dst;
            let label = dag.edges[e].label_id;
            let u_term = |gate: &str| {
                ln(
                    &format!("u{gate}"),
                    &vecmat_raw(
                        &h[w],
                        get(params, &format!("{prefix}.u_{gate}.l{label:03}")),
                        hid,
                    ),
                )
            };
            for (acc, term) in [
                (&mut sum_i, u_term("i")),
                (&mut sum_o, u_term("o")),
                (&mut sum_c, u_term("c")),
            ] {
                for (a, t) in acc.iter_mut().zip(term) {
                    *a += t;
                }
            }
            let uf = u_term("f");
            let bf = get(params, &format!("{prefix}.b_f"));
            for j in 0..hid {
                let f = sigmoid(wf[j] + uf[j] + bf[j]);
                forget_flow[j] += f * c[w][j];
            }
        }

        let bi = get(params, &format!("{prefix}.b_i"));
        let bo = get(params, &format!("{prefix}.b_o"));
        let bc = get(params, &format!("{prefix}.b_c"));
        let i_gate: Vec<f64> = add3(&wi, &sum_i, bi).iter().map(|&x| sigmoid(x)).collect();
        let o_gate: Vec<f64> = add3(&wo, &sum_o, bo).iter().map(|&x| sigmoid(x)).collect();
        let c_hat: Vec<f64> = add3(&wc, &sum_c, bc).iter().map(|&x| x.tanh()).collect();
        let mut cv = vec![0.0; hid];
        let mut hv = vec![0.0; hid];
        for j in 0..hid {
            cv[j] = i_gate[j] * c_hat[j] + forget_flow[j];
            hv[j] = o_gate[j] * cv[j].tanh();
        }
        c[v] = cv;
        h[v] = hv;
    }
    h
}

fn batch_norm_train_raw(rows: &[Vec<f64>], gamma: &[f64], beta: &[f64]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = gamma.len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            let c = r[j] - mean[j];
            var[j] += c * c;
        }
    }
    for v in var.iter_mut() {
        *v /= n;
    }
    rows.iter()
        .map(|r| {
            (0..d)
                .map(|j| gamma[j] * (r[j] - mean[j]) / (var[j] + 1e-5).sqrt() + beta[j])
                .collect()
        })
        .collect()
}

/// Feed-forward net with training-mode batch norm over the given rows:
/// linear, BN + ReLU, linear, ReLU.
fn feed_forward_raw(rows: &[Vec<f64>], params: &ParameterStore<f64>, prefix: &str) -> Vec<Vec<f64>> {
    let w1 = params.get(&format!("{prefix}.w1"));
    let hidden_dim = w1.shape()[1];
    let b1 = get(params, &format!("{prefix}.b1"));
    let hidden: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vecmat_raw(r, w1.data(), hidden_dim)
                .iter()
                .zip(b1)
                .map(|(&h, &b)| h + b)
                .collect()
        })
        .collect();
    let normed = batch_norm_train_raw(
        &hidden,
        get(params, &format!("{prefix}.bn.gamma")),
        get(params, &format!("{prefix}.bn.beta")),
    );
    let w2 = params.get(&format!("{prefix}.w2"));
    let out_dim = w2.shape()[1];
    let b2 = get(params, &format!("{prefix}.b2"));
    normed
        .iter()
        .map(|r| {
            let activated: Vec<f64> = r.iter().map(|&v| v.max(0.0)).collect();
            vecmat_raw(&activated, w2.data(), out_dim)
                .iter()
                .zip(b2)
                .map(|(&o, &b)| (o + b).max(0.0))
                .collect()
        })
        .collect()
}

/// Direct per-node message-passing round: per-edge ancestor and child
/// messages summed in edge order, then the residual update.
pub fn mpnn_round_reference(
    dag: &FormulaDag,
    states: &[Vec<f64>],
    edge_states: &[Vec<f64>],
    round_t: usize,
    params: &ParameterStore<f64>,
) -> Vec<Vec<f64>> {
    let n = dag.nodes.len();
    let d = states[0].len();

    let side = |ancestor: bool, net: &str| -> Vec<Vec<f64>> {
        let mut rows = Vec::new();
        let mut owner = Vec::new();
        for v in 0..n {
            let edges = if ancestor {
                &dag.nodes[v].in_edges
            } else {
                &dag.nodes[v].out_edges
            };
            for &e in edges {
                let w = if ancestor { dag.edges[e].src } else { dag.edges[e].dst };
                let mut row = states[v].clone();
                row.extend_from_slice(&states[w]);
                row.extend_from_slice(&edge_states[e]);
                rows.push(row);
                owner.push(v);
            }
        }
        let mut messages = vec![vec![0.0; d]; n];
        if rows.is_empty() {
            return messages;
        }
        let outs = feed_forward_raw(&rows, params, net);
        for (out, &v) in outs.iter().zip(&owner) {
            for j in 0..d {
                messages[v][j] += out[j];
            }
        }
        messages
    };

    let m_anc = side(true, &format!("mpnn.r{round_t}.msg_anc"));
    let m_child = side(false, &format!("mpnn.r{round_t}.msg_child"));
    let update_rows: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut row = states[v].clone();
            row.extend_from_slice(&m_anc[v]);
            row.extend_from_slice(&m_child[v]);
            row
        })
        .collect();
    let updates = feed_forward_raw(&update_rows, params, &format!("mpnn.r{round_t}.update"));
    (0..n)
        .map(|v| states[v].iter().zip(&updates[v]).map(|(&h, &u)| h + u).collect())
        .collect()
}

/// Dense normalized-adjacency GCN round: builds the full propagation matrix
/// M with M[v][v] = 1/|N(v)| and M[v][w] = 1/sqrt(|N(v)||N(w)|), then
/// computes relu((M H) W).
pub fn gcn_round_reference(
    dag: &FormulaDag,
    states: &[Vec<f64>],
    round_t: usize,
    params: &ParameterStore<f64>,
) -> Vec<Vec<f64>> {
    let n = dag.nodes.len();
    let d = states[0].len();
    let degree: Vec<f64> = (0..n)
        .map(|v| dag.neighborhood(v).len().max(1) as f64)
        .collect();
    let mut m = vec![vec![0.0; n]; n];
    for v in 0..n {
        m[v][v] = 1.0 / degree[v];
        for w in dag.neighborhood(v) {
            m[v][w] = 1.0 / (degree[v] * degree[w]).sqrt();
        }
    }
    let w_t = params.get(&format!("gcn.r{round_t}.w"));
    (0..n)
        .map(|v| {
            let mut agg = vec![0.0; d];
            for w in 0..n {
                if m[v][w] != 0.0 {
                    for j in 0..d {
                        agg[j] += m[v][w] * states[w][j];
                    }
                }
            }
            vecmat_raw(&agg, w_t.data(), d).iter().map(|&x| x.max(0.0)).collect()
        })
        .collect()
}

/// Node states as plain buffers.
pub fn to_raw<T: Scalar>(states: &[crate::tensor::Tensor<T>]) -> Vec<Vec<f64>> {
    states
        .iter()
        .map(|s| s.data().iter().map(|&v| v.to_f64()).collect())
        .collect()
}

/// Flattened trainable parameters in sorted-name order.
pub fn flatten_trainable<T: Scalar>(params: &ParameterStore<T>) -> Vec<f64> {
    let mut out = Vec::new();
    for (_, p) in params.iter().filter(|(_, p)| p.trainable) {
        out.extend(p.tensor.data().iter().map(|&v| v.to_f64()));
    }
    out
}

/// Writes a flat vector back into the trainable parameters (same order).
pub fn restore_trainable<T: Scalar>(params: &mut ParameterStore<T>, flat: &[f64]) {
    let names: Vec<String> = params
        .iter()
        .filter(|(_, p)| p.trainable)
        .map(|(n, _)| n.to_string())
        .collect();
    let mut off = 0;
    for name in names {
        let shape = params.get(&name).shape().to_vec();
        let n: usize = shape.iter().product();
        let data: Vec<T> = flat[off..off + n].iter().map(|&v| T::from_f64(v)).collect();
        params.set(&name, crate::tensor::Tensor::from_vec(shape, data));
        off += n;
    }
    debug_assert_eq!(off, flat.len());
}

/// Analytic gradient of the trainable parameters, flattened in the same
/// order as [`flatten_trainable`]; parameters outside the graph get zeros.
pub fn flatten_grads<T: Scalar>(
    params: &ParameterStore<T>,
    view: &Params<T>,
    tape: &crate::tensor::Tape<T>,
) -> Vec<f64> {
    let mut out = Vec::new();
    for (name, p) in params.iter().filter(|(_, p)| p.trainable) {
        match tape.grad(view.get(name)) {
            Some(g) => out.extend(g.data().iter().map(|&v| v.to_f64())),
            None => out.extend(std::iter::repeat(0.0).take(p.tensor.numel())),
        }
    }
    out
}
