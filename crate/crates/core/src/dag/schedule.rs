//! Topological batching schedules: nodes grouped into layers of equal
//! topological rank so that a whole layer can be updated at once.

use super::{FormulaDag, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopoDirection {
    /// Leaves first, root last; a node's predecessors are its children.
    Up,
    /// Root first, leaves last; a node's predecessors are its parents.
    Down,
}

/// Layered topological order. Layer `t` holds every node of rank `t`
/// (ascending node-id order within a layer); rank 0 are the direction's
/// sources, otherwise 1 + max predecessor rank.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopoSchedule {
    pub layers: Vec<Vec<NodeId>>,
}

impl TopoSchedule {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Nodes in schedule order, one at a time.
    pub fn iter_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.layers.iter().flatten().copied()
    }
}

/// Computes the layered schedule for one direction.
///
/// Node ids are topologically sorted by construction (every edge satisfies
/// dst < src), so a single pass in id order (reverse order for Down)
/// finalizes each rank after all its predecessors.
pub fn topo_ranks(dag: &FormulaDag, direction: TopoDirection) -> TopoSchedule {
    let n = dag.nodes.len();
    let mut rank = vec![0usize; n];
    match direction {
        TopoDirection::Up => {
            for v in 0..n {
                let mut r = 0;
                for &e in &dag.nodes[v].out_edges {
                    r = r.max(rank[dag.edges[e].dst] + 1);
                }
                rank[v] = r;
            }
        }
        TopoDirection::Down => {
            for v in (0..n).rev() {
                let mut r = 0;
                for &e in &dag.nodes[v].in_edges {
                    r = r.max(rank[dag.edges[e].src] + 1);
                }
                rank[v] = r;
            }
        }
    }
    let depth = rank.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let mut layers = vec![Vec::new(); depth];
    for v in 0..n {
        layers[rank[v]].push(v);
    }
    TopoSchedule { layers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::build_dag;
    use crate::parser::{alpha_normalize, parse_sexpr};

    fn dag_of(src: &str) -> FormulaDag {
        build_dag(&alpha_normalize(&parse_sexpr(src).unwrap()))
    }

    #[test]
    fn chain_layers() {
        // not -> not -> p : ids are p=0, inner not=1, outer not=2
        let dag = dag_of("(not (not p))");
        assert_eq!(dag.up_schedule.layers, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(dag.down_schedule.layers, vec![vec![2], vec![1], vec![0]]);
    }

    #[test]
    fn diamond_longest_path_rule() {
        // and(p(a), q(a)): a is shared, reachable through both branches
        let dag = dag_of("(and (p z) (q z))");
        let up = &dag.up_schedule;
        assert_eq!(up.layers.len(), 3);
        assert_eq!(up.layers[0].len(), 1); // the VAR leaf
        assert_eq!(up.layers[1].len(), 2); // p and q
        assert_eq!(up.layers[2], vec![dag.root]);
    }

    #[test]
    fn single_node() {
        let dag = dag_of("p");
        assert_eq!(dag.up_schedule.layers, vec![vec![0]]);
        assert_eq!(dag.down_schedule.layers, vec![vec![0]]);
    }

    #[test]
    fn schedules_are_valid_topological_orders() {
        let dag = dag_of("(forall (x y) (implies (p x (f y)) (and (q x) (q y) (p x (f y)))))");
        let up_rank = layer_index(&dag.up_schedule, dag.node_count());
        let down_rank = layer_index(&dag.down_schedule, dag.node_count());
        for e in &dag.edges {
            assert!(up_rank[e.dst] < up_rank[e.src]);
            assert!(down_rank[e.src] < down_rank[e.dst]);
        }
    }

    fn layer_index(s: &TopoSchedule, n: usize) -> Vec<usize> {
        let mut rank = vec![usize::MAX; n];
        for (t, layer) in s.layers.iter().enumerate() {
            for &v in layer {
                assert_eq!(rank[v], usize::MAX, "node {v} appears twice");
                rank[v] = t;
            }
        }
        assert!(rank.iter().all(|&r| r != usize::MAX));
        rank
    }
}
