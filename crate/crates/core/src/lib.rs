//! Embeds logical formulae as vectors.
//!
//! The pipeline: parse a formula (s-expression or TPTP FOF subset) into an
//! abstract syntax tree, alpha-normalize it, compile it to a rooted DAG with
//! collapsed variables and shared subexpressions, then run a two-stage neural
//! embedding: an initial node embedder (MPNN, GCN, DAG LSTM, or bidirectional
//! DAG LSTM) followed by a pooling stage (max pooling or a DAG LSTM run to the
//! root, optionally preceded by gated cross-graph attention). Premise/conjecture
//! pairs are classified by a feed-forward head trained with binary
//! cross-entropy and Adam on top of a small reverse-mode autodiff tape.

pub mod dag;
pub mod nets;
pub mod parser;
pub mod selfcheck;
pub mod tensor;
pub mod train;

pub use dag::{build_dag, DagEdge, DagNode, FormulaDag, TopoDirection, TopoSchedule};
pub use parser::{
    alpha_normalize, parse_sexpr, parse_tptp_fof, ArityClass, FormulaAst, NodeKind, ParseError,
};
pub use tensor::{Scalar, Tape, Tensor, TensorError};
