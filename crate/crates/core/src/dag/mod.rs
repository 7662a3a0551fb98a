//! Rooted-DAG compilation of normalized formulae: collapsed variables,
//! hash-consed shared subexpressions, partial-order edge labels, and
//! precomputed topological schedules for both directions.

mod build;
mod export;
mod schedule;

pub use build::build_dag;
pub use export::{to_dot, to_json};
pub use schedule::{topo_ranks, TopoDirection, TopoSchedule};

use crate::parser::NodeKind;

pub type NodeId = usize;
pub type EdgeId = usize;

/// Argument ranks at or above this cap share one overflow bucket in the
/// edge-label vocabulary.
pub const RANK_CAP: u32 = 16;

/// Fixed edge-label vocabulary: 7 parent kinds x ranks 0..=16.
pub const EDGE_LABEL_COUNT: usize = 7 * (RANK_CAP as usize + 1);

/// Token carried by every collapsed variable node.
pub const VAR_TOKEN: &str = "VAR";

/// Token carried by higher-order application nodes.
pub const APPLY_TOKEN: &str = "@";

/// Encodes (parent kind, argument rank) into a label id in `0..EDGE_LABEL_COUNT`.
pub fn encode_edge_label(parent_kind: NodeKind, rank: u32) -> u32 {
    parent_kind.index() as u32 * (RANK_CAP + 1) + rank.min(RANK_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagNode {
    pub token: String,
    pub kind: NodeKind,
    /// Edges arriving from immediate ancestors.
    pub in_edges: Vec<EdgeId>,
    /// Edges leaving towards arguments, in construction order.
    pub out_edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DagEdge {
    /// Parent node.
    pub src: NodeId,
    /// Argument node.
    pub dst: NodeId,
    /// Argument rank under `src`'s ordering discipline.
    pub rank: u32,
    pub parent_kind: NodeKind,
    pub label_id: u32,
}

/// Immutable rooted DAG for one formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaDag {
    pub nodes: Vec<DagNode>,
    pub edges: Vec<DagEdge>,
    pub root: NodeId,
    pub up_schedule: TopoSchedule,
    pub down_schedule: TopoSchedule,
}

impl FormulaDag {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Immediate ancestors of `v`, deduplicated, in ascending id order.
    pub fn ancestors(&self, v: NodeId) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes[v].in_edges.iter().map(|&e| self.edges[e].src).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Immediate children of `v`, deduplicated, in ascending id order.
    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes[v].out_edges.iter().map(|&e| self.edges[e].dst).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Undirected neighborhood `N(v)` = ancestors union children.
    pub fn neighborhood(&self, v: NodeId) -> Vec<NodeId> {
        let mut ids = self.ancestors(v);
        ids.extend(self.children(v));
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn schedule(&self, direction: TopoDirection) -> &TopoSchedule {
        match direction {
            TopoDirection::Up => &self.up_schedule,
            TopoDirection::Down => &self.down_schedule,
        }
    }
}

/// Ancestor and child node sets of `v` (each deduplicated, ascending).
pub fn neighborhoods(dag: &FormulaDag, v: NodeId) -> (Vec<NodeId>, Vec<NodeId>) {
    (dag.ancestors(v), dag.children(v))
}
