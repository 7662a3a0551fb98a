//! AST-to-DAG compilation via hash-consing.

use std::collections::HashMap;

use crate::parser::{ArityClass, FormulaAst, NodeKind};

use super::schedule::{topo_ranks, TopoDirection};
use super::{encode_edge_label, DagEdge, DagNode, FormulaDag, NodeId, APPLY_TOKEN, VAR_TOKEN};

/// Structural interning key. Variables are keyed by their scope symbol so all
/// occurrences of one binder collapse into a single node; other nodes are
/// keyed by kind, token, and the ordered (child id, rank) list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Var(String),
    Term {
        kind: NodeKind,
        token: String,
        children: Vec<(NodeId, u32)>,
    },
}

/// Compiles an alpha-normalized AST into a rooted DAG.
///
/// Each distinct variable scope becomes one `VAR` node receiving all its
/// occurrence edges; structurally identical subterms are merged; edges carry
/// (rank, parent kind) labels per the parent's ordering discipline. Both
/// topological schedules are computed. Internal consistency (acyclicity,
/// unique root) is asserted: a violation is a bug, not an input error.
pub fn build_dag(ast: &FormulaAst) -> FormulaDag {
    enum Task<'a> {
        Visit(&'a FormulaAst),
        Assemble(&'a FormulaAst),
    }

    let mut nodes: Vec<DagNode> = Vec::new();
    let mut edges: Vec<DagEdge> = Vec::new();
    let mut interned: HashMap<Key, NodeId> = HashMap::new();
    let mut values: Vec<NodeId> = Vec::new();
    let mut tasks = vec![Task::Visit(ast)];

    while let Some(task) = tasks.pop() {
        match task {
            Task::Visit(node) => {
                tasks.push(Task::Assemble(node));
                for c in node.children.iter().rev() {
                    tasks.push(Task::Visit(c));
                }
            }
            Task::Assemble(node) => {
                let n = node.children.len();
                let child_ids: Vec<NodeId> = values.drain(values.len() - n..).collect();
                let ranks = argument_ranks(node);
                let pairs: Vec<(NodeId, u32)> =
                    child_ids.into_iter().zip(ranks).collect();

                let (key, token) = match node.kind {
                    NodeKind::Variable => (Key::Var(node.symbol.clone()), VAR_TOKEN.to_string()),
                    NodeKind::Apply => (
                        Key::Term {
                            kind: node.kind,
                            token: APPLY_TOKEN.to_string(),
                            children: pairs.clone(),
                        },
                        APPLY_TOKEN.to_string(),
                    ),
                    _ => (
                        Key::Term {
                            kind: node.kind,
                            token: node.symbol.clone(),
                            children: pairs.clone(),
                        },
                        node.symbol.clone(),
                    ),
                };

                let id = match interned.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = nodes.len();
                        nodes.push(DagNode {
                            token,
                            kind: node.kind,
                            in_edges: Vec::new(),
                            out_edges: Vec::new(),
                        });
                        for (child, rank) in pairs {
                            let edge_id = edges.len();
                            edges.push(DagEdge {
                                src: id,
                                dst: child,
                                rank,
                                parent_kind: node.kind,
                                label_id: encode_edge_label(node.kind, rank),
                            });
                            nodes[id].out_edges.push(edge_id);
                            nodes[child].in_edges.push(edge_id);
                        }
                        interned.insert(key, id);
                        id
                    }
                };
                values.push(id);
            }
        }
    }

    debug_assert_eq!(values.len(), 1);
    let root = values.pop().unwrap();

    // Interned ids are topologically ordered (children first), which makes
    // acyclicity equivalent to dst < src on every edge.
    for e in &edges {
        assert!(e.dst < e.src, "cycle: edge {} -> {}", e.src, e.dst);
    }
    let rootless = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.in_edges.is_empty())
        .count();
    assert_eq!(rootless, 1, "exactly one node must lack incoming edges");
    assert!(nodes[root].in_edges.is_empty(), "root must lack incoming edges");

    let mut dag = FormulaDag {
        nodes,
        edges,
        root,
        up_schedule: Default::default(),
        down_schedule: Default::default(),
    };
    dag.up_schedule = topo_ranks(&dag, TopoDirection::Up);
    dag.down_schedule = topo_ranks(&dag, TopoDirection::Down);
    dag
}

fn argument_ranks(node: &FormulaAst) -> Vec<u32> {
    let n = node.children.len();
    match node.arity_class() {
        ArityClass::Unordered => vec![0; n],
        ArityClass::Ordered => (0..n as u32).collect(),
        ArityClass::QuantifierHybrid => {
            let binders = node.binder_count();
            let mut ranks = vec![0u32; binders];
            ranks.extend(std::iter::repeat(1).take(n - binders));
            ranks
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{alpha_normalize, parse_sexpr};

    fn dag_of(src: &str) -> FormulaDag {
        build_dag(&alpha_normalize(&parse_sexpr(src).unwrap()))
    }

    fn token_id(dag: &FormulaDag, token: &str) -> NodeId {
        dag.nodes.iter().position(|n| n.token == token).unwrap()
    }

    #[test]
    fn variable_collapsing() {
        let dag = dag_of("(forall (x) (and (p x) (q x)))");
        assert_eq!(dag.node_count(), 5);
        let var = token_id(&dag, VAR_TOKEN);
        assert_eq!(dag.nodes[var].in_edges.len(), 3);
        let mut parents = dag.ancestors(var);
        parents.sort_unstable();
        let tokens: Vec<&str> = parents.iter().map(|&p| dag.nodes[p].token.as_str()).collect();
        assert!(tokens.contains(&"forall") && tokens.contains(&"p") && tokens.contains(&"q"));
        assert!(dag.children(var).is_empty());
    }

    #[test]
    fn shared_subterms_merge_with_ordered_ranks() {
        let dag = dag_of("(r (f (g (a)) (g (a))))");
        // a, g(a), f(..), r: the repeated g(a) appears once
        assert_eq!(dag.node_count(), 4);
        let f = token_id(&dag, "f");
        assert_eq!(dag.nodes[f].out_edges.len(), 2);
        let ranks: Vec<u32> = dag.nodes[f]
            .out_edges
            .iter()
            .map(|&e| dag.edges[e].rank)
            .collect();
        assert_eq!(ranks, vec![0, 1]);
        let g = token_id(&dag, "g");
        assert_eq!(dag.edges[dag.nodes[f].out_edges[0]].dst, g);
        assert_eq!(dag.edges[dag.nodes[f].out_edges[1]].dst, g);
    }

    #[test]
    fn unordered_connective_ranks_are_zero() {
        let dag = dag_of("(and (p (a)) (q (b)))");
        let and = dag.root;
        for &e in &dag.nodes[and].out_edges {
            assert_eq!(dag.edges[e].rank, 0);
        }
    }

    #[test]
    fn quantifier_hybrid_ranks() {
        let dag = dag_of("(forall (x y) (p x y))");
        let q = dag.root;
        let ranks: Vec<u32> = dag.nodes[q]
            .out_edges
            .iter()
            .map(|&e| dag.edges[e].rank)
            .collect();
        assert_eq!(ranks, vec![0, 0, 1]);
    }

    #[test]
    fn distinct_scopes_stay_distinct() {
        // inner and outer x are different binders: two VAR nodes
        let dag = dag_of("(forall (x) (and (p x) (forall (x) (q x))))");
        let vars = dag.nodes.iter().filter(|n| n.token == VAR_TOKEN).count();
        assert_eq!(vars, 2);
    }

    #[test]
    fn predicate_and_function_homonyms_stay_distinct() {
        let dag = dag_of("(and (p x) (q (p x)))");
        let p_nodes = dag.nodes.iter().filter(|n| n.token == "p").count();
        assert_eq!(p_nodes, 2);
    }

    #[test]
    fn root_neighborhoods() {
        let dag = dag_of("(forall (x) (and (p x) (q x)))");
        assert!(dag.ancestors(dag.root).is_empty());
        let var = token_id(&dag, VAR_TOKEN);
        assert_eq!(dag.ancestors(var).len(), 3);
    }

    #[test]
    fn label_ids_in_vocabulary() {
        let dag = dag_of("(p (f x y (g x)) (a))");
        for e in &dag.edges {
            assert!((e.label_id as usize) < super::super::EDGE_LABEL_COUNT);
            assert_eq!(e.parent_kind, dag.nodes[e.src].kind);
        }
    }

    #[test]
    fn rank_cap_overflow_bucket() {
        let args: Vec<String> = (0..20).map(|i| format!("x{i}")).collect();
        let src = format!("(p {})", args.join(" "));
        let dag = dag_of(&src);
        let root_edges = &dag.nodes[dag.root].out_edges;
        let last = dag.edges[*root_edges.last().unwrap()];
        assert_eq!(last.rank, 19);
        assert_eq!(last.label_id, encode_edge_label(NodeKind::Predicate, 16));
    }
}
