//! Primitive forward operations with analytic backward rules.
//!
//! Accumulation orders are part of the contract: matrix products sum over the
//! inner index in ascending order (so a stacked-row product is bitwise equal
//! to the per-row product), and batch-norm statistics sum rows in
//! content-sorted order (so permuting equal-content row multisets cannot
//! change any output bit).

use std::rc::Rc;

use super::{Scalar, Tensor, TensorError};

fn track1<T: Scalar>(
    x: &Tensor<T>,
    shape: Vec<usize>,
    data: Vec<T>,
    back: impl Fn(&[T]) -> Vec<T> + 'static,
) -> Tensor<T> {
    match &x.node {
        None => Tensor::from_parts(shape, data, None),
        Some((tape, id)) => {
            let nid = tape.record(vec![*id], Box::new(move |g| vec![back(g)]));
            Tensor::from_parts(shape, data, Some((tape.clone(), nid)))
        }
    }
}

fn track2<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    shape: Vec<usize>,
    data: Vec<T>,
    da: impl Fn(&[T]) -> Vec<T> + 'static,
    db: impl Fn(&[T]) -> Vec<T> + 'static,
) -> Tensor<T> {
    match (&a.node, &b.node) {
        (None, None) => Tensor::from_parts(shape, data, None),
        (Some((tape, i)), None) => {
            let nid = tape.record(vec![*i], Box::new(move |g| vec![da(g)]));
            Tensor::from_parts(shape, data, Some((tape.clone(), nid)))
        }
        (None, Some((tape, j))) => {
            let nid = tape.record(vec![*j], Box::new(move |g| vec![db(g)]));
            Tensor::from_parts(shape, data, Some((tape.clone(), nid)))
        }
        (Some((ta, i)), Some((tb, j))) => {
            assert!(ta.same_tape(tb), "inputs live on different tapes");
            let nid = ta.record(vec![*i, *j], Box::new(move |g| vec![da(g), db(g)]));
            Tensor::from_parts(shape, data, Some((ta.clone(), nid)))
        }
    }
}

fn track3<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    c: &Tensor<T>,
    shape: Vec<usize>,
    data: Vec<T>,
    da: impl Fn(&[T]) -> Vec<T> + 'static,
    db: impl Fn(&[T]) -> Vec<T> + 'static,
    dc: impl Fn(&[T]) -> Vec<T> + 'static,
) -> Tensor<T> {
    let mut inputs = Vec::new();
    let mut tape: Option<super::Tape<T>> = None;
    let mut slots = [false; 3];
    for (k, t) in [a, b, c].into_iter().enumerate() {
        if let Some((tp, id)) = &t.node {
            if let Some(existing) = &tape {
                assert!(existing.same_tape(tp), "inputs live on different tapes");
            } else {
                tape = Some(tp.clone());
            }
            inputs.push(*id);
            slots[k] = true;
        }
    }
    match tape {
        None => Tensor::from_parts(shape, data, None),
        Some(tape) => {
            let back = move |g: &[T]| {
                let mut out = Vec::new();
                if slots[0] {
                    out.push(da(g));
                }
                if slots[1] {
                    out.push(db(g));
                }
                if slots[2] {
                    out.push(dc(g));
                }
                out
            };
            let nid = tape.record(inputs, Box::new(back));
            Tensor::from_parts(shape, data, Some((tape, nid)))
        }
    }
}

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<(), TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    Ok(())
}

fn dims2<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(usize, usize), TensorError> {
    match t.shape() {
        [n, d] => Ok((*n, *d)),
        other => Err(TensorError::ShapeMismatch {
            op,
            lhs: other.to_vec(),
            rhs: vec![],
        }),
    }
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    same_shape("add", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x + y).collect();
    Ok(track2(
        a,
        b,
        a.shape().to_vec(),
        data,
        |g| g.to_vec(),
        |g| g.to_vec(),
    ))
}

pub fn sub<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    same_shape("sub", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x - y).collect();
    Ok(track2(
        a,
        b,
        a.shape().to_vec(),
        data,
        |g| g.to_vec(),
        |g| g.iter().map(|&x| -x).collect(),
    ))
}

pub fn mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    same_shape("mul", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).collect();
    let (ad, bd) = (a.data_rc(), b.data_rc());
    Ok(track2(
        a,
        b,
        a.shape().to_vec(),
        data,
        move |g| g.iter().zip(bd.iter()).map(|(&g, &y)| g * y).collect(),
        move |g| g.iter().zip(ad.iter()).map(|(&g, &x)| g * x).collect(),
    ))
}

/// Elementwise maximum; ties route the gradient to the first operand.
pub fn maximum<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    same_shape("maximum", a, b)?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| if x >= y { x } else { y })
        .collect();
    let (ad, bd) = (a.data_rc(), b.data_rc());
    let (ad2, bd2) = (Rc::clone(&ad), Rc::clone(&bd));
    Ok(track2(
        a,
        b,
        a.shape().to_vec(),
        data,
        move |g| {
            g.iter()
                .zip(ad.iter().zip(bd.iter()))
                .map(|(&g, (&x, &y))| if x >= y { g } else { T::zero() })
                .collect()
        },
        move |g| {
            g.iter()
                .zip(ad2.iter().zip(bd2.iter()))
                .map(|(&g, (&x, &y))| if y > x { g } else { T::zero() })
                .collect()
        },
    ))
}

pub fn scale<T: Scalar>(x: &Tensor<T>, c: T) -> Tensor<T> {
    let data = x.data().iter().map(|&v| v * c).collect();
    track1(x, x.shape().to_vec(), data, move |g| {
        g.iter().map(|&v| v * c).collect()
    })
}

pub fn add_scalar<T: Scalar>(x: &Tensor<T>, c: T) -> Tensor<T> {
    let data = x.data().iter().map(|&v| v + c).collect();
    track1(x, x.shape().to_vec(), data, |g| g.to_vec())
}

pub fn neg<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    scale(x, -T::one())
}

/// Row-broadcast bias: `[n, d] + [d]`.
pub fn add_bias<T: Scalar>(m: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (n, d) = dims2("add_bias", m)?;
    if bias.shape() != [d] {
        return Err(TensorError::ShapeMismatch {
            op: "add_bias",
            lhs: m.shape().to_vec(),
            rhs: bias.shape().to_vec(),
        });
    }
    let bd = bias.data_rc();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            data.push(m.data()[i * d + j] + bd[j]);
        }
    }
    Ok(track2(
        m,
        bias,
        vec![n, d],
        data,
        |g| g.to_vec(),
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i * d + j];
                }
            }
            out
        },
    ))
}

/// `[m, k] x [k, n] -> [m, n]`; the inner sum runs over k ascending.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (m, k) = dims2("matmul", a)?;
    let (kb, n) = dims2("matmul", b)?;
    if k != kb {
        return Err(TensorError::ShapeMismatch {
            op: "matmul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let (ad, bd) = (a.data_rc(), b.data_rc());
    let mut data = vec![T::zero(); m * n];
    for i in 0..m {
        for p in 0..k {
            let av = ad[i * k + p];
            for j in 0..n {
                data[i * n + j] += av * bd[p * n + j];
            }
        }
    }
    let (ad2, bd2) = (Rc::clone(&ad), Rc::clone(&bd));
    Ok(track2(
        a,
        b,
        vec![m, n],
        data,
        move |g| {
            // dA = g . B^T
            let mut out = vec![T::zero(); m * k];
            for i in 0..m {
                for p in 0..k {
                    let mut s = T::zero();
                    for j in 0..n {
                        s += g[i * n + j] * bd2[p * n + j];
                    }
                    out[i * k + p] = s;
                }
            }
            out
        },
        move |g| {
            // dB = A^T . g
            let mut out = vec![T::zero(); k * n];
            for i in 0..m {
                for p in 0..k {
                    let av = ad2[i * k + p];
                    for j in 0..n {
                        out[p * n + j] += av * g[i * n + j];
                    }
                }
            }
            out
        },
    ))
}

/// `[k] x [k, n] -> [n]`; bitwise equal to a one-row `matmul`.
pub fn vecmat<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let k = match a.shape() {
        [k] => *k,
        other => {
            return Err(TensorError::ShapeMismatch {
                op: "vecmat",
                lhs: other.to_vec(),
                rhs: b.shape().to_vec(),
            })
        }
    };
    let (kb, n) = dims2("vecmat", b)?;
    if k != kb {
        return Err(TensorError::ShapeMismatch {
            op: "vecmat",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let (ad, bd) = (a.data_rc(), b.data_rc());
    let mut data = vec![T::zero(); n];
    for p in 0..k {
        let av = ad[p];
        for j in 0..n {
            data[j] += av * bd[p * n + j];
        }
    }
    let (ad2, bd2) = (Rc::clone(&ad), Rc::clone(&bd));
    Ok(track2(
        a,
        b,
        vec![n],
        data,
        move |g| {
            let mut out = vec![T::zero(); k];
            for (p, o) in out.iter_mut().enumerate() {
                let mut s = T::zero();
                for j in 0..n {
                    s += g[j] * bd2[p * n + j];
                }
                *o = s;
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); k * n];
            for p in 0..k {
                let av = ad2[p];
                for j in 0..n {
                    out[p * n + j] = av * g[j];
                }
            }
            out
        },
    ))
}

/// `[n, d] x [d] -> [n]`; each output sums over d ascending.
pub fn matvec<T: Scalar>(m: &Tensor<T>, v: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (n, d) = dims2("matvec", m)?;
    if v.shape() != [d] {
        return Err(TensorError::ShapeMismatch {
            op: "matvec",
            lhs: m.shape().to_vec(),
            rhs: v.shape().to_vec(),
        });
    }
    let (md, vd) = (m.data_rc(), v.data_rc());
    let mut data = vec![T::zero(); n];
    for i in 0..n {
        let mut s = T::zero();
        for j in 0..d {
            s += md[i * d + j] * vd[j];
        }
        data[i] = s;
    }
    let (md2, vd2) = (Rc::clone(&md), Rc::clone(&vd));
    Ok(track2(
        m,
        v,
        vec![n],
        data,
        move |g| {
            let mut out = vec![T::zero(); n * d];
            for i in 0..n {
                for j in 0..d {
                    out[i * d + j] = g[i] * vd2[j];
                }
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i] * md2[i * d + j];
                }
            }
            out
        },
    ))
}

/// Inner product of two equal-length vectors; sums in index order.
pub fn dot<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    same_shape("dot", a, b)?;
    let mut s = T::zero();
    for (&x, &y) in a.data().iter().zip(b.data()) {
        s += x * y;
    }
    let (ad, bd) = (a.data_rc(), b.data_rc());
    Ok(track2(
        a,
        b,
        vec![],
        vec![s],
        move |g| bd.iter().map(|&y| g[0] * y).collect(),
        move |g| ad.iter().map(|&x| g[0] * x).collect(),
    ))
}

/// Concatenation along the last axis of two vectors or two row-aligned matrices.
pub fn concat<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    match (a.shape(), b.shape()) {
        ([la], [lb]) => {
            let (la, lb) = (*la, *lb);
            let mut data = Vec::with_capacity(la + lb);
            data.extend_from_slice(a.data());
            data.extend_from_slice(b.data());
            Ok(track2(
                a,
                b,
                vec![la + lb],
                data,
                move |g| g[..la].to_vec(),
                move |g| g[la..].to_vec(),
            ))
        }
        ([n, da], [nb, db]) if n == nb => {
            let (n, da, db) = (*n, *da, *db);
            let w = da + db;
            let mut data = Vec::with_capacity(n * w);
            for i in 0..n {
                data.extend_from_slice(&a.data()[i * da..(i + 1) * da]);
                data.extend_from_slice(&b.data()[i * db..(i + 1) * db]);
            }
            Ok(track2(
                a,
                b,
                vec![n, w],
                data,
                move |g| {
                    let mut out = Vec::with_capacity(n * da);
                    for i in 0..n {
                        out.extend_from_slice(&g[i * w..i * w + da]);
                    }
                    out
                },
                move |g| {
                    let mut out = Vec::with_capacity(n * db);
                    for i in 0..n {
                        out.extend_from_slice(&g[i * w + da..(i + 1) * w]);
                    }
                    out
                },
            ))
        }
        _ => Err(TensorError::ShapeMismatch {
            op: "concat",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        }),
    }
}

/// Left-fold concatenation of one or more vectors.
pub fn concat_all<T: Scalar>(parts: &[Tensor<T>]) -> Result<Tensor<T>, TensorError> {
    assert!(!parts.is_empty(), "concat_all requires at least one part");
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = concat(&acc, p)?;
    }
    Ok(acc)
}

pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data: Vec<T> = x
        .data()
        .iter()
        .map(|&v| T::one() / (T::one() + (-v).exp()))
        .collect();
    let y = Rc::new(data.clone());
    track1(x, x.shape().to_vec(), data, move |g| {
        g.iter()
            .zip(y.iter())
            .map(|(&g, &y)| g * y * (T::one() - y))
            .collect()
    })
}

pub fn tanh<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data: Vec<T> = x.data().iter().map(|&v| v.tanh()).collect();
    let y = Rc::new(data.clone());
    track1(x, x.shape().to_vec(), data, move |g| {
        g.iter()
            .zip(y.iter())
            .map(|(&g, &y)| g * (T::one() - y * y))
            .collect()
    })
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data: Vec<T> = x
        .data()
        .iter()
        .map(|&v| if v > T::zero() { v } else { T::zero() })
        .collect();
    let xd = x.data_rc();
    track1(x, x.shape().to_vec(), data, move |g| {
        g.iter()
            .zip(xd.iter())
            .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
            .collect()
    })
}

pub fn ln<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data: Vec<T> = x.data().iter().map(|&v| v.ln()).collect();
    let xd = x.data_rc();
    track1(x, x.shape().to_vec(), data, move |g| {
        g.iter().zip(xd.iter()).map(|(&g, &v)| g / v).collect()
    })
}

/// Clamp to `[lo, hi]`; the gradient passes only strictly inside the bounds.
pub fn clamp<T: Scalar>(x: &Tensor<T>, lo: T, hi: T) -> Tensor<T> {
    let data: Vec<T> = x
        .data()
        .iter()
        .map(|&v| if v < lo { lo } else if v > hi { hi } else { v })
        .collect();
    let xd = x.data_rc();
    track1(x, x.shape().to_vec(), data, move |g| {
        g.iter()
            .zip(xd.iter())
            .map(|(&g, &v)| if v > lo && v < hi { g } else { T::zero() })
            .collect()
    })
}

/// Numerically stable softmax over a vector.
pub fn softmax<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    assert_eq!(x.shape().len(), 1, "softmax expects a vector");
    assert!(x.numel() > 0, "softmax over an empty vector");
    let max = x
        .data()
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let exps: Vec<T> = x.data().iter().map(|&v| (v - max).exp()).collect();
    let mut z = T::zero();
    for &e in &exps {
        z += e;
    }
    let data: Vec<T> = exps.iter().map(|&e| e / z).collect();
    let y = Rc::new(data.clone());
    track1(x, x.shape().to_vec(), data, move |g| {
        let mut inner = T::zero();
        for (&g, &y) in g.iter().zip(y.iter()) {
            inner += g * y;
        }
        g.iter().zip(y.iter()).map(|(&g, &y)| y * (g - inner)).collect()
    })
}

/// Sum of all elements, as a scalar.
pub fn sum_all<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut s = T::zero();
    for &v in x.data() {
        s += v;
    }
    let n = x.numel();
    track1(x, vec![], vec![s], move |g| vec![g[0]; n])
}

pub fn mean_all<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let n = T::from_f64(x.numel() as f64);
    scale(&sum_all(x), T::one() / n)
}

/// Embedding lookup: selected rows of `table`, gradient scatter-adds.
pub fn gather_rows<T: Scalar>(table: &Tensor<T>, indices: &[usize]) -> Result<Tensor<T>, TensorError> {
    let (v, d) = dims2("gather_rows", table)?;
    for &i in indices {
        assert!(i < v, "gather_rows index {i} out of range {v}");
    }
    let n = indices.len();
    let mut data = Vec::with_capacity(n * d);
    for &i in indices {
        data.extend_from_slice(&table.data()[i * d..(i + 1) * d]);
    }
    let idx = indices.to_vec();
    Ok(track1(table, vec![n, d], data, move |g| {
        let mut out = vec![T::zero(); v * d];
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..d {
                out[i * d + j] += g[r * d + j];
            }
        }
        out
    }))
}

/// Stacks equal-length vectors into a matrix; gradients split back per row.
pub fn stack_rows<T: Scalar>(rows: &[Tensor<T>]) -> Result<Tensor<T>, TensorError> {
    assert!(!rows.is_empty(), "stack_rows requires at least one row");
    let d = rows[0].numel();
    for r in rows {
        if r.shape() != [d] {
            return Err(TensorError::ShapeMismatch {
                op: "stack_rows",
                lhs: vec![d],
                rhs: r.shape().to_vec(),
            });
        }
    }
    let n = rows.len();
    let mut data = Vec::with_capacity(n * d);
    for r in rows {
        data.extend_from_slice(r.data());
    }

    let mut tape: Option<super::Tape<T>> = None;
    let mut tracked: Vec<(usize, usize)> = Vec::new(); // (row position, tape id)
    for (pos, r) in rows.iter().enumerate() {
        if let Some((tp, id)) = &r.node {
            if let Some(existing) = &tape {
                assert!(existing.same_tape(tp), "inputs live on different tapes");
            } else {
                tape = Some(tp.clone());
            }
            tracked.push((pos, *id));
        }
    }
    match tape {
        None => Ok(Tensor::from_parts(vec![n, d], data, None)),
        Some(tape) => {
            let inputs: Vec<usize> = tracked.iter().map(|&(_, id)| id).collect();
            let positions: Vec<usize> = tracked.iter().map(|&(pos, _)| pos).collect();
            let back = move |g: &[T]| {
                positions
                    .iter()
                    .map(|&pos| g[pos * d..(pos + 1) * d].to_vec())
                    .collect()
            };
            let nid = tape.record(inputs, Box::new(back));
            Ok(Tensor::from_parts(vec![n, d], data, Some((tape, nid))))
        }
    }
}

/// Row `i` of a matrix.
pub fn row<T: Scalar>(m: &Tensor<T>, i: usize) -> Result<Tensor<T>, TensorError> {
    let (n, d) = dims2("row", m)?;
    assert!(i < n, "row index {i} out of range {n}");
    let data = m.data()[i * d..(i + 1) * d].to_vec();
    Ok(track1(m, vec![d], data, move |g| {
        let mut out = vec![T::zero(); n * d];
        out[i * d..(i + 1) * d].copy_from_slice(g);
        out
    }))
}

/// Splits a matrix into its rows.
pub fn rows<T: Scalar>(m: &Tensor<T>) -> Result<Vec<Tensor<T>>, TensorError> {
    let (n, _) = dims2("rows", m)?;
    (0..n).map(|i| row(m, i)).collect()
}

/// Per-row layer normalization with learned scale and shift.
/// Accepts a vector (one row) or a matrix (each row independently).
pub fn layer_norm<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: T,
) -> Result<Tensor<T>, TensorError> {
    let (n, d, shape) = match x.shape() {
        [d] => (1usize, *d, vec![*d]),
        [n, d] => (*n, *d, vec![*n, *d]),
        other => {
            return Err(TensorError::ShapeMismatch {
                op: "layer_norm",
                lhs: other.to_vec(),
                rhs: gamma.shape().to_vec(),
            })
        }
    };
    if gamma.shape() != [d] || beta.shape() != [d] {
        return Err(TensorError::ShapeMismatch {
            op: "layer_norm",
            lhs: vec![d],
            rhs: gamma.shape().to_vec(),
        });
    }
    let xd = x.data_rc();
    let gd = gamma.data_rc();
    let dd = T::from_f64(d as f64);
    let mut xhat = vec![T::zero(); n * d];
    let mut inv_std = vec![T::zero(); n];
    let mut data = vec![T::zero(); n * d];
    for i in 0..n {
        let r = &xd[i * d..(i + 1) * d];
        let mut mu = T::zero();
        for &v in r {
            mu += v;
        }
        mu = mu / dd;
        let mut var = T::zero();
        for &v in r {
            let c = v - mu;
            var += c * c;
        }
        var = var / dd;
        let is = T::one() / (var + eps).sqrt();
        inv_std[i] = is;
        for j in 0..d {
            let h = (r[j] - mu) * is;
            xhat[i * d + j] = h;
            data[i * d + j] = gd[j] * h + beta.data()[j];
        }
    }
    let xhat = Rc::new(xhat);
    let inv_std = Rc::new(inv_std);
    let (xhat_g, xhat_b) = (Rc::clone(&xhat), Rc::clone(&xhat));
    let gd2 = Rc::clone(&gd);
    let inv2 = Rc::clone(&inv_std);
    Ok(track3(
        x,
        gamma,
        beta,
        shape,
        data,
        move |g| {
            let mut out = vec![T::zero(); n * d];
            for i in 0..n {
                let mut m1 = T::zero();
                let mut m2 = T::zero();
                for j in 0..d {
                    let dxh = g[i * d + j] * gd2[j];
                    m1 += dxh;
                    m2 += dxh * xhat_g[i * d + j];
                }
                m1 = m1 / dd;
                m2 = m2 / dd;
                for j in 0..d {
                    let dxh = g[i * d + j] * gd2[j];
                    out[i * d + j] = inv2[i] * (dxh - m1 - xhat_g[i * d + j] * m2);
                }
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i * d + j] * xhat_b[i * d + j];
                }
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i * d + j];
                }
            }
            out
        },
    ))
}

/// Training-mode batch normalization over the row axis of `[n, d]`.
///
/// Returns the normalized output plus the per-feature batch mean and
/// (biased) variance for running-statistics updates. Statistics sum rows in
/// content-sorted order.
pub fn batch_norm_train<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: T,
) -> Result<(Tensor<T>, Vec<T>, Vec<T>), TensorError> {
    let (n, d) = dims2("batch_norm", x)?;
    if gamma.shape() != [d] || beta.shape() != [d] {
        return Err(TensorError::ShapeMismatch {
            op: "batch_norm",
            lhs: vec![d],
            rhs: gamma.shape().to_vec(),
        });
    }
    assert!(n > 0, "batch_norm over an empty batch");
    let xd = x.data_rc();
    let order = content_row_order(&xd, n, d);
    let nn = T::from_f64(n as f64);
    let mut mean = vec![T::zero(); d];
    for &i in &order {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += xd[i * d + j];
        }
    }
    for m in mean.iter_mut() {
        *m = *m / nn;
    }
    let mut var = vec![T::zero(); d];
    for &i in &order {
        for (j, v) in var.iter_mut().enumerate() {
            let c = xd[i * d + j] - mean[j];
            *v += c * c;
        }
    }
    for v in var.iter_mut() {
        *v = *v / nn;
    }
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut xhat = vec![T::zero(); n * d];
    let mut data = vec![T::zero(); n * d];
    for i in 0..n {
        for j in 0..d {
            let h = (xd[i * d + j] - mean[j]) * inv_std[j];
            xhat[i * d + j] = h;
            data[i * d + j] = gamma.data()[j] * h + beta.data()[j];
        }
    }
    let xhat = Rc::new(xhat);
    let inv_std_rc = Rc::new(inv_std);
    let (xhat_g, xhat_b) = (Rc::clone(&xhat), Rc::clone(&xhat));
    let gd = gamma.data_rc();
    let inv2 = Rc::clone(&inv_std_rc);
    let out = track3(
        x,
        gamma,
        beta,
        vec![n, d],
        data,
        move |g| {
            let mut m1 = vec![T::zero(); d];
            let mut m2 = vec![T::zero(); d];
            for i in 0..n {
                for j in 0..d {
                    let dxh = g[i * d + j] * gd[j];
                    m1[j] += dxh;
                    m2[j] += dxh * xhat_g[i * d + j];
                }
            }
            for j in 0..d {
                m1[j] = m1[j] / nn;
                m2[j] = m2[j] / nn;
            }
            let mut out = vec![T::zero(); n * d];
            for i in 0..n {
                for j in 0..d {
                    let dxh = g[i * d + j] * gd[j];
                    out[i * d + j] = inv2[j] * (dxh - m1[j] - xhat_g[i * d + j] * m2[j]);
                }
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i * d + j] * xhat_b[i * d + j];
                }
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i * d + j];
                }
            }
            out
        },
    );
    Ok((out, mean, var))
}

/// Eval-mode batch normalization against frozen statistics.
pub fn batch_norm_eval<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    mean: &[T],
    var: &[T],
    eps: T,
) -> Result<Tensor<T>, TensorError> {
    let (n, d) = dims2("batch_norm_eval", x)?;
    if gamma.shape() != [d] || beta.shape() != [d] || mean.len() != d || var.len() != d {
        return Err(TensorError::ShapeMismatch {
            op: "batch_norm_eval",
            lhs: vec![d],
            rhs: gamma.shape().to_vec(),
        });
    }
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let xd = x.data_rc();
    let mut xhat = vec![T::zero(); n * d];
    let mut data = vec![T::zero(); n * d];
    for i in 0..n {
        for j in 0..d {
            let h = (xd[i * d + j] - mean[j]) * inv_std[j];
            xhat[i * d + j] = h;
            data[i * d + j] = gamma.data()[j] * h + beta.data()[j];
        }
    }
    let xhat = Rc::new(xhat);
    let gd = gamma.data_rc();
    let inv = Rc::new(inv_std);
    Ok(track3(
        x,
        gamma,
        beta,
        vec![n, d],
        data,
        move |g| {
            let mut out = vec![T::zero(); n * d];
            for i in 0..n {
                for j in 0..d {
                    out[i * d + j] = g[i * d + j] * gd[j] * inv[j];
                }
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i * d + j] * xhat[i * d + j];
                }
            }
            out
        },
        move |g| {
            let mut out = vec![T::zero(); d];
            for i in 0..n {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += g[i * d + j];
                }
            }
            out
        },
    ))
}

/// Row indices sorted by row content (IEEE total order, lexicographic).
fn content_row_order<T: Scalar>(data: &[T], n: usize, d: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = &data[a * d..(a + 1) * d];
        let rb = &data[b * d..(b + 1) * d];
        for (x, y) in ra.iter().zip(rb) {
            match x.total_order(y) {
                std::cmp::Ordering::Equal => continue,
                non_eq => return non_eq,
            }
        }
        std::cmp::Ordering::Equal
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        let s = sigmoid(&Tensor::<f64>::scalar(0.0));
        assert_eq!(s.item(), 0.5);
        let sm = softmax(&Tensor::<f64>::vector(vec![3.7]));
        assert_eq!(sm.data(), &[1.0]);
        let eye = Tensor::from_vec(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let x = Tensor::vector(vec![2.5, -1.5]);
        let y = vecmat(&x, &eye).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn softmax_normalizes() {
        let y = softmax(&Tensor::<f64>::vector(vec![0.3, -1.2, 2.0, 0.0]));
        let total: f64 = y.data().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!(y.data().iter().all(|&v| v >= 0.0));
        let two = softmax(&Tensor::<f64>::vector(vec![1.0, 1.0]));
        assert_eq!(two.data(), &[0.5, 0.5]);
    }

    #[test]
    fn layer_norm_statistics() {
        let x = Tensor::<f64>::vector(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let ones = Tensor::vector(vec![1.0; 8]);
        let zeros = Tensor::vector(vec![0.0; 8]);
        let y = layer_norm(&x, &ones, &zeros, 1e-5).unwrap();
        let mean: f64 = y.data().iter().sum::<f64>() / 8.0;
        let var: f64 = y.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn batched_matmul_is_bitwise_equal_to_per_row() {
        let w = Tensor::<f64>::from_vec(
            vec![3, 2],
            vec![0.1, -0.7, 0.33, 0.21, -0.05, 0.9],
        );
        let r0 = Tensor::vector(vec![0.5, -0.25, 1.5]);
        let r1 = Tensor::vector(vec![-1.0, 2.0, 0.125]);
        let stacked = stack_rows(&[r0.clone(), r1.clone()]).unwrap();
        let batched = matmul(&stacked, &w).unwrap();
        let single0 = vecmat(&r0, &w).unwrap();
        let single1 = vecmat(&r1, &w).unwrap();
        assert_eq!(&batched.data()[..2], single0.data());
        assert_eq!(&batched.data()[2..], single1.data());
    }

    #[test]
    fn batch_norm_stats_invariant_to_row_order() {
        let a = Tensor::<f64>::from_vec(vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor::<f64>::from_vec(vec![3, 2], vec![5.0, 6.0, 1.0, 2.0, 3.0, 4.0]);
        let g = Tensor::vector(vec![1.0, 1.0]);
        let z = Tensor::vector(vec![0.0, 0.0]);
        let (_, ma, va) = batch_norm_train(&a, &g, &z, 1e-5).unwrap();
        let (_, mb, vb) = batch_norm_train(&b, &g, &z, 1e-5).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(va, vb);
    }

    #[test]
    fn shape_mismatch_names_the_primitive() {
        let a = Tensor::<f64>::vector(vec![1.0, 2.0]);
        let b = Tensor::<f64>::vector(vec![1.0, 2.0, 3.0]);
        let err = add(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("add") && msg.contains("[2]") && msg.contains("[3]"));
    }

    #[test]
    fn maximum_ties_go_to_first() {
        let tape: Tape<f64> = crate::tensor::Tape::new();
        let a = tape.watch(&Tensor::vector(vec![1.0, 5.0]));
        let b = tape.watch(&Tensor::vector(vec![1.0, 2.0]));
        let m = maximum(&a, &b).unwrap();
        let loss = sum_all(&m);
        tape.backward(&loss).unwrap();
        assert_eq!(tape.grad(&a).unwrap().data(), &[1.0, 1.0]);
        assert_eq!(tape.grad(&b).unwrap().data(), &[0.0, 0.0]);
    }

    use crate::tensor::Tape;
}
