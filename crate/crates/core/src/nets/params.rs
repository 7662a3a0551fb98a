//! Named parameter storage: registration, seeded initialization, and
//! tracked/frozen views for the forward passes.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::dag::EDGE_LABEL_COUNT;
use crate::parser::NodeKind;
use crate::tensor::{Scalar, Tape, Tensor};

use super::{EmbedderKind, ModelConfig, PoolingKind};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Init {
    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    UniformFanIn(usize),
    /// Normal(0, 0.05^2), used for embedding tables and kind vectors.
    Embedding,
    Zeros,
    Ones,
}

#[derive(Debug, Clone)]
struct Spec {
    name: String,
    shape: Vec<usize>,
    init: Init,
    trainable: bool,
}

#[derive(Debug, Clone)]
pub struct Param<T: Scalar> {
    pub tensor: Tensor<T>,
    pub trainable: bool,
}

/// All named learned weights (and batch-norm running buffers) of one model.
/// Iteration order is always sorted by name.
#[derive(Debug, Clone)]
pub struct ParameterStore<T: Scalar> {
    entries: BTreeMap<String, Param<T>>,
}

/// A read-only view handed to forward passes; in training the trainable
/// tensors are watched on a tape so gradients materialize.
pub struct Params<T: Scalar> {
    map: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> Params<T> {
    pub fn get(&self, name: &str) -> &Tensor<T> {
        self.map
            .get(name)
            .unwrap_or_else(|| panic!("parameter `{name}` is not registered"))
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|s| s.as_str())
    }
}

impl<T: Scalar> ParameterStore<T> {
    /// Initializes every parameter the chosen architecture needs. Each
    /// tensor draws from its own name-keyed stream, so values do not depend
    /// on registration order.
    pub fn init(config: &ModelConfig, vocab_size: usize, seed: u64) -> Self {
        let mut entries = BTreeMap::new();
        for spec in registry(config, vocab_size) {
            let n: usize = spec.shape.iter().product();
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ fnv1a(&spec.name));
            let data: Vec<T> = match spec.init {
                Init::Zeros => vec![T::zero(); n],
                Init::Ones => vec![T::one(); n],
                Init::UniformFanIn(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound);
                    (0..n).map(|_| T::from_f64(dist.sample(&mut rng))).collect()
                }
                Init::Embedding => {
                    let dist = Normal::new(0.0, 0.05).expect("valid stddev");
                    (0..n).map(|_| T::from_f64(dist.sample(&mut rng))).collect()
                }
            };
            entries.insert(
                spec.name,
                Param {
                    tensor: Tensor::from_vec(spec.shape, data),
                    trainable: spec.trainable,
                },
            );
        }
        ParameterStore { entries }
    }

    pub fn from_entries(entries: BTreeMap<String, Param<T>>) -> Self {
        ParameterStore { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> &Tensor<T> {
        &self
            .entries
            .get(name)
            .unwrap_or_else(|| panic!("parameter `{name}` is not registered"))
            .tensor
    }

    pub fn set(&mut self, name: &str, tensor: Tensor<T>) {
        let entry = self
            .entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("parameter `{name}` is not registered"));
        assert_eq!(entry.tensor.shape(), tensor.shape(), "shape change for `{name}`");
        entry.tensor = tensor;
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// (name, param) pairs in sorted-name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn trainable_names(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, p)| p.trainable)
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Total number of scalar values across all tensors.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|p| p.tensor.numel()).sum()
    }

    /// Untracked view for evaluation.
    pub fn frozen(&self) -> Params<T> {
        Params {
            map: self
                .entries
                .iter()
                .map(|(k, p)| (k.clone(), p.tensor.detach()))
                .collect(),
        }
    }

    /// Training view: trainable tensors watched on `tape`, buffers frozen.
    pub fn tracked(&self, tape: &Tape<T>) -> Params<T> {
        Params {
            map: self
                .entries
                .iter()
                .map(|(k, p)| {
                    let t = if p.trainable {
                        tape.watch(&p.tensor)
                    } else {
                        p.tensor.detach()
                    };
                    (k.clone(), t)
                })
                .collect(),
        }
    }

    /// Applies a momentum update to a batch-norm running-statistics pair.
    pub fn update_running_stats(&mut self, prefix: &str, mean: &[T], var: &[T], momentum: T) {
        for (suffix, batch) in [("running_mean", mean), ("running_var", var)] {
            let name = format!("{prefix}.{suffix}");
            let current = self.get(&name).data().to_vec();
            let updated: Vec<T> = current
                .iter()
                .zip(batch)
                .map(|(&r, &b)| (T::one() - momentum) * r + momentum * b)
                .collect();
            self.set(&name, Tensor::from_vec(vec![updated.len()], updated));
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in s.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn push(specs: &mut Vec<Spec>, name: String, shape: Vec<usize>, init: Init, trainable: bool) {
    specs.push(Spec {
        name,
        shape,
        init,
        trainable,
    });
}

fn bn(specs: &mut Vec<Spec>, prefix: &str, dim: usize) {
    push(specs, format!("{prefix}.gamma"), vec![dim], Init::Ones, true);
    push(specs, format!("{prefix}.beta"), vec![dim], Init::Zeros, true);
    push(specs, format!("{prefix}.running_mean"), vec![dim], Init::Zeros, false);
    push(specs, format!("{prefix}.running_var"), vec![dim], Init::Ones, false);
}

// One hidden layer; the hidden activation is batch norm + ReLU.
fn ff(specs: &mut Vec<Spec>, prefix: &str, input: usize, hidden: usize, output: usize) {
    push(specs, format!("{prefix}.w1"), vec![input, hidden], Init::UniformFanIn(input), true);
    push(specs, format!("{prefix}.b1"), vec![hidden], Init::Zeros, true);
    bn(specs, &format!("{prefix}.bn"), hidden);
    push(specs, format!("{prefix}.w2"), vec![hidden, output], Init::UniformFanIn(hidden), true);
    push(specs, format!("{prefix}.b2"), vec![output], Init::Zeros, true);
}

// One DAG LSTM instance: gate projections, per-edge-label U matrices,
// and one layer-norm site per matrix product.
fn lstm(specs: &mut Vec<Spec>, prefix: &str, input: usize, hidden: usize) {
    for gate in ["i", "o", "f", "c"] {
        push(specs, format!("{prefix}.w_{gate}"), vec![input, hidden], Init::UniformFanIn(input), true);
        push(specs, format!("{prefix}.b_{gate}"), vec![hidden], Init::Zeros, true);
        for label in 0..EDGE_LABEL_COUNT {
            push(
                specs,
                format!("{prefix}.u_{gate}.l{label:03}"),
                vec![hidden, hidden],
                Init::UniformFanIn(hidden),
                true,
            );
        }
        for site in ["w", "u"] {
            push(specs, format!("{prefix}.ln_{site}{gate}.gamma"), vec![hidden], Init::Ones, true);
            push(specs, format!("{prefix}.ln_{site}{gate}.beta"), vec![hidden], Init::Zeros, true);
        }
    }
}

fn registry(config: &ModelConfig, vocab_size: usize) -> Vec<Spec> {
    let nd = config.node_dim;
    let ed = config.edge_dim;
    let mut specs = Vec::new();

    // Token embeddings and initial node states.
    push(&mut specs, "embed.token".into(), vec![vocab_size, nd], Init::Embedding, true);
    bn(&mut specs, "init.node_bn", nd);

    match config.node_embedder {
        EmbedderKind::Mpnn => {
            push(&mut specs, "embed.edge".into(), vec![EDGE_LABEL_COUNT, ed], Init::Embedding, true);
            bn(&mut specs, "init.edge_bn", ed);
            for t in 1..=config.rounds_k {
                ff(&mut specs, &format!("mpnn.r{t}.msg_anc"), 2 * nd + ed, nd, nd);
                ff(&mut specs, &format!("mpnn.r{t}.msg_child"), 2 * nd + ed, nd, nd);
                ff(&mut specs, &format!("mpnn.r{t}.update"), 3 * nd, nd, nd);
            }
        }
        EmbedderKind::Gcn => {
            for t in 1..=config.rounds_k {
                specs.push(Spec {
                    name: format!("gcn.r{t}.w"),
                    shape: vec![nd, nd],
                    init: Init::UniformFanIn(nd),
                    trainable: true,
                });
            }
        }
        EmbedderKind::DagLstm => {
            lstm(&mut specs, "embedder.lstm", nd, nd);
        }
        EmbedderKind::BidirDagLstm => {
            lstm(&mut specs, "embedder.up", nd, nd);
            lstm(&mut specs, "embedder.down", nd, nd);
            ff(&mut specs, "embedder.bd", 2 * nd, nd, nd);
        }
    }

    match config.pooling {
        PoolingKind::MaxPool => {}
        PoolingKind::DagPool => {
            lstm(&mut specs, "pool.lstm", nd, nd);
        }
        PoolingKind::AttDagPool => {
            let inner = config.attention_inner();
            for h in 0..config.attention_heads {
                for proj in ["q", "k", "v"] {
                    specs.push(Spec {
                        name: format!("att.{proj}.h{h}"),
                        shape: vec![nd, inner],
                        init: Init::UniformFanIn(nd),
                        trainable: true,
                    });
                }
            }
            specs.push(Spec {
                name: "att.out".into(),
                shape: vec![config.attention_heads * inner, nd],
                init: Init::UniformFanIn(config.attention_heads * inner),
                trainable: true,
            });
            specs.push(Spec {
                name: "att.gate".into(),
                shape: vec![nd, nd],
                init: Init::UniformFanIn(nd),
                trainable: true,
            });
            for kind in NodeKind::ALL {
                specs.push(Spec {
                    name: format!("att.r.{}", kind.name().to_ascii_lowercase()),
                    shape: vec![nd],
                    init: Init::Embedding,
                    trainable: true,
                });
            }
            lstm(&mut specs, "pool.lstm", 2 * nd, nd);
        }
    }

    // Classifier head on [s_P || s_C]: hidden width is half the input,
    // plain ReLU hidden (no batch norm), sigmoid output.
    let pool_out = nd;
    specs.push(Spec {
        name: "cls.w1".into(),
        shape: vec![2 * pool_out, pool_out],
        init: Init::UniformFanIn(2 * pool_out),
        trainable: true,
    });
    specs.push(Spec {
        name: "cls.b1".into(),
        shape: vec![pool_out],
        init: Init::Zeros,
        trainable: true,
    });
    specs.push(Spec {
        name: "cls.w2".into(),
        shape: vec![pool_out, 1],
        init: Init::UniformFanIn(pool_out),
        trainable: true,
    });
    specs.push(Spec {
        name: "cls.b2".into(),
        shape: vec![1],
        init: Init::Zeros,
        trainable: true,
    });

    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_order_free() {
        let config = ModelConfig::small(EmbedderKind::Mpnn, PoolingKind::MaxPool);
        let a: ParameterStore<f64> = ParameterStore::init(&config, 10, 42);
        let b: ParameterStore<f64> = ParameterStore::init(&config, 10, 42);
        for ((na, pa), (nb, pb)) in a.iter().zip(b.iter()) {
            assert_eq!(na, nb);
            assert_eq!(pa.tensor.data(), pb.tensor.data());
        }
        let c: ParameterStore<f64> = ParameterStore::init(&config, 10, 43);
        assert_ne!(
            a.get("embed.token").data(),
            c.get("embed.token").data(),
            "different seeds must give different parameters"
        );
    }

    #[test]
    fn registry_covers_architectures() {
        for embedder in [
            EmbedderKind::Mpnn,
            EmbedderKind::Gcn,
            EmbedderKind::DagLstm,
            EmbedderKind::BidirDagLstm,
        ] {
            for pooling in [PoolingKind::MaxPool, PoolingKind::DagPool, PoolingKind::AttDagPool] {
                let config = ModelConfig::small(embedder, pooling);
                let store: ParameterStore<f32> = ParameterStore::init(&config, 5, 1);
                assert!(store.contains("embed.token"));
                assert!(store.contains("cls.w2"));
                if pooling == PoolingKind::AttDagPool {
                    assert!(store.contains("att.gate"));
                    assert!(store.contains("att.r.variable"));
                    assert_eq!(store.get("pool.lstm.w_i").shape(), &[16, 8]);
                }
            }
        }
    }

    #[test]
    fn buffers_are_not_trainable() {
        let config = ModelConfig::small(EmbedderKind::Mpnn, PoolingKind::DagPool);
        let store: ParameterStore<f64> = ParameterStore::init(&config, 5, 7);
        for (name, p) in store.iter() {
            let is_buffer = name.ends_with("running_mean") || name.ends_with("running_var");
            assert_eq!(!p.trainable, is_buffer, "{name}");
        }
    }

    #[test]
    fn running_stat_update() {
        let config = ModelConfig::small(EmbedderKind::Gcn, PoolingKind::MaxPool);
        let mut store: ParameterStore<f64> = ParameterStore::init(&config, 5, 7);
        let d = 8;
        store.update_running_stats("init.node_bn", &vec![1.0; d], &vec![2.0; d], 0.1);
        assert!((store.get("init.node_bn.running_mean").data()[0] - 0.1).abs() < 1e-12);
        assert!((store.get("init.node_bn.running_var").data()[0] - (0.9 + 0.2)).abs() < 1e-12);
    }
}
