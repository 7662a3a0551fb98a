//! Finite-difference verification for every tensor primitive: randomized
//! small shapes, 64-bit, relative error below 1e-4.

use dagembed::tensor::{finite_difference, ops, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

/// Deterministic pseudo-random linear functional so transposed or misplaced
/// gradients cannot cancel out.
fn weighted_sum(out: &Tensor<f64>) -> Tensor<f64> {
    let w: Vec<f64> = (0..out.numel())
        .map(|i| 0.3 + 0.7 * ((i as f64 * 2.399963) % 1.0))
        .collect();
    let w = Tensor::from_vec(out.shape().to_vec(), w);
    ops::sum_all(&ops::mul(out, &w).unwrap())
}

struct Case {
    name: &'static str,
    shapes: Vec<Vec<usize>>,
    f: Box<dyn Fn(&[Tensor<f64>]) -> Tensor<f64>>,
}

fn run_case(case: &Case, rng: &mut ChaCha20Rng) {
    let sizes: Vec<usize> = case.shapes.iter().map(|s| s.iter().product()).collect();
    let total: usize = sizes.iter().sum();
    let params: Vec<f64> = (0..total).map(|_| rng.gen_range(-1.2..1.2)).collect();

    let split = |flat: &[f64]| -> Vec<Tensor<f64>> {
        let mut out = Vec::new();
        let mut off = 0;
        for (shape, &len) in case.shapes.iter().zip(&sizes) {
            out.push(Tensor::from_vec(shape.clone(), flat[off..off + len].to_vec()));
            off += len;
        }
        out
    };

    // analytic gradients through the tape
    let tape: Tape<f64> = Tape::new();
    let tracked: Vec<Tensor<f64>> = split(&params).iter().map(|t| tape.watch(t)).collect();
    let loss = (case.f)(&tracked);
    tape.backward(&loss).expect("backward");
    let mut analytic = Vec::with_capacity(total);
    for t in &tracked {
        match tape.grad(t) {
            Some(g) => analytic.extend_from_slice(g.data()),
            None => analytic.extend(std::iter::repeat(0.0).take(t.numel())),
        }
    }

    // numeric gradients by central differences
    let numeric = finite_difference(|flat| (case.f)(&split(flat)).item(), &params, EPS);

    for (i, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-4);
        assert!(
            rel < TOL,
            "{}: coordinate {i}: analytic {a} vs numeric {n} (rel {rel})",
            case.name
        );
    }
}

#[test]
fn primitive_gradients_match_finite_differences() {
    let cases: Vec<Case> = vec![
        Case {
            name: "add",
            shapes: vec![vec![3, 4], vec![3, 4]],
            f: Box::new(|xs| weighted_sum(&ops::add(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "sub",
            shapes: vec![vec![5], vec![5]],
            f: Box::new(|xs| weighted_sum(&ops::sub(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "mul",
            shapes: vec![vec![2, 3], vec![2, 3]],
            f: Box::new(|xs| weighted_sum(&ops::mul(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "maximum",
            shapes: vec![vec![6], vec![6]],
            f: Box::new(|xs| weighted_sum(&ops::maximum(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "scale_add_scalar",
            shapes: vec![vec![4]],
            f: Box::new(|xs| weighted_sum(&ops::add_scalar(&ops::scale(&xs[0], -1.7), 0.3))),
        },
        Case {
            name: "add_bias",
            shapes: vec![vec![3, 4], vec![4]],
            f: Box::new(|xs| weighted_sum(&ops::add_bias(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "matmul",
            shapes: vec![vec![3, 4], vec![4, 2]],
            f: Box::new(|xs| weighted_sum(&ops::matmul(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "vecmat",
            shapes: vec![vec![4], vec![4, 3]],
            f: Box::new(|xs| weighted_sum(&ops::vecmat(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "dot",
            shapes: vec![vec![5], vec![5]],
            f: Box::new(|xs| ops::dot(&xs[0], &xs[1]).unwrap()),
        },
        Case {
            name: "concat_vec",
            shapes: vec![vec![3], vec![4]],
            f: Box::new(|xs| weighted_sum(&ops::concat(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "concat_rows",
            shapes: vec![vec![2, 3], vec![2, 2]],
            f: Box::new(|xs| weighted_sum(&ops::concat(&xs[0], &xs[1]).unwrap())),
        },
        Case {
            name: "sigmoid",
            shapes: vec![vec![7]],
            f: Box::new(|xs| weighted_sum(&ops::sigmoid(&xs[0]))),
        },
        Case {
            name: "tanh",
            shapes: vec![vec![7]],
            f: Box::new(|xs| weighted_sum(&ops::tanh(&xs[0]))),
        },
        Case {
            name: "relu",
            shapes: vec![vec![8]],
            f: Box::new(|xs| weighted_sum(&ops::relu(&xs[0]))),
        },
        Case {
            name: "ln_chain",
            shapes: vec![vec![5]],
            f: Box::new(|xs| {
                let sq = ops::mul(&xs[0], &xs[0]).unwrap();
                weighted_sum(&ops::ln(&ops::add_scalar(&sq, 0.5)))
            }),
        },
        Case {
            name: "clamp",
            shapes: vec![vec![6]],
            f: Box::new(|xs| weighted_sum(&ops::clamp(&xs[0], -0.9, 0.9))),
        },
        Case {
            name: "softmax",
            shapes: vec![vec![6]],
            f: Box::new(|xs| weighted_sum(&ops::softmax(&xs[0]))),
        },
        Case {
            name: "sum_mean",
            shapes: vec![vec![3, 3]],
            f: Box::new(|xs| {
                ops::add(&ops::sum_all(&xs[0]), &ops::mean_all(&xs[0])).unwrap()
            }),
        },
        Case {
            name: "gather_rows",
            shapes: vec![vec![4, 3]],
            f: Box::new(|xs| {
                weighted_sum(&ops::gather_rows(&xs[0], &[0, 2, 2, 3]).unwrap())
            }),
        },
        Case {
            name: "stack_rows_row",
            shapes: vec![vec![3], vec![3], vec![3]],
            f: Box::new(|xs| {
                let m = ops::stack_rows(&[xs[0].clone(), xs[1].clone(), xs[2].clone()]).unwrap();
                let r = ops::row(&m, 1).unwrap();
                ops::add(&weighted_sum(&m), &weighted_sum(&r)).unwrap()
            }),
        },
        Case {
            name: "layer_norm_vec",
            shapes: vec![vec![8], vec![8], vec![8]],
            f: Box::new(|xs| {
                weighted_sum(&ops::layer_norm(&xs[0], &xs[1], &xs[2], 1e-5).unwrap())
            }),
        },
        Case {
            name: "layer_norm_rows",
            shapes: vec![vec![3, 5], vec![5], vec![5]],
            f: Box::new(|xs| {
                weighted_sum(&ops::layer_norm(&xs[0], &xs[1], &xs[2], 1e-5).unwrap())
            }),
        },
        Case {
            name: "batch_norm_train",
            shapes: vec![vec![4, 3], vec![3], vec![3]],
            f: Box::new(|xs| {
                let (y, _, _) = ops::batch_norm_train(&xs[0], &xs[1], &xs[2], 1e-5).unwrap();
                weighted_sum(&y)
            }),
        },
        Case {
            name: "batch_norm_eval",
            shapes: vec![vec![4, 3], vec![3], vec![3]],
            f: Box::new(|xs| {
                let mean = vec![0.1, -0.2, 0.05];
                let var = vec![0.8, 1.1, 0.9];
                weighted_sum(
                    &ops::batch_norm_eval(&xs[0], &xs[1], &xs[2], &mean, &var, 1e-5).unwrap(),
                )
            }),
        },
    ];

    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_0001);
    for case in &cases {
        for _ in 0..4 {
            run_case(case, &mut rng);
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let x: Vec<f64> = (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let run = |data: &[f64]| {
        let t = Tensor::from_vec(vec![4, 6], data.to_vec());
        let g = Tensor::vector(vec![1.0; 6]);
        let b = Tensor::vector(vec![0.0; 6]);
        let (y, m, v) = ops::batch_norm_train(&t, &g, &b, 1e-5).unwrap();
        let l = ops::layer_norm(&y, &g, &b, 1e-5).unwrap();
        (l.data().to_vec(), m, v)
    };
    assert_eq!(run(&x), run(&x));
}
