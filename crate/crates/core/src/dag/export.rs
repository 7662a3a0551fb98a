//! DOT and JSON serialization of formula DAGs. Output is deterministic:
//! nodes and edges are emitted in index order.

use serde::Serialize;

use super::FormulaDag;

/// Graphviz DOT text; node labels are tokens, edge labels `kind:rank`.
pub fn to_dot(dag: &FormulaDag) -> String {
    let mut out = String::from("digraph formula {\n");
    for (i, node) in dag.nodes.iter().enumerate() {
        let label = node.token.replace('"', "\\\"");
        out.push_str(&format!("  n{i} [label=\"{label}\"];\n"));
    }
    for e in &dag.edges {
        out.push_str(&format!(
            "  n{} -> n{} [label=\"{}:{}\"];\n",
            e.src, e.dst, e.parent_kind, e.rank
        ));
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct JsonNode<'a> {
    id: usize,
    token: &'a str,
    kind: &'a str,
}

#[derive(Serialize)]
struct JsonEdge {
    src: usize,
    dst: usize,
    rank: u32,
    parent_kind: &'static str,
    label_id: u32,
}

#[derive(Serialize)]
struct JsonDag<'a> {
    root: usize,
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<JsonEdge>,
    up_schedule: &'a [Vec<usize>],
    down_schedule: &'a [Vec<usize>],
}

/// Canonical JSON rendering with stable field names.
pub fn to_json(dag: &FormulaDag) -> String {
    let doc = JsonDag {
        root: dag.root,
        nodes: dag
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| JsonNode {
                id,
                token: &n.token,
                kind: n.kind.name(),
            })
            .collect(),
        edges: dag
            .edges
            .iter()
            .map(|e| JsonEdge {
                src: e.src,
                dst: e.dst,
                rank: e.rank,
                parent_kind: e.parent_kind.name(),
                label_id: e.label_id,
            })
            .collect(),
        up_schedule: &dag.up_schedule.layers,
        down_schedule: &dag.down_schedule.layers,
    };
    serde_json::to_string(&doc).expect("dag serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::build_dag;
    use crate::parser::{alpha_normalize, parse_sexpr, FormulaAst, NodeKind};

    #[test]
    fn single_constant_node() {
        let ast = alpha_normalize(&FormulaAst::new(NodeKind::Constant, "c", vec![]));
        let dag = build_dag(&ast);
        let dot = to_dot(&dag);
        assert_eq!(dot, "digraph formula {\n  n0 [label=\"c\"];\n}\n");
    }

    #[test]
    fn negation_edge_label() {
        let dag = build_dag(&alpha_normalize(&parse_sexpr("(not p)").unwrap()));
        let dot = to_dot(&dag);
        assert_eq!(dag.node_count(), 2);
        assert!(dot.contains("label=\"Connective:0\""));
    }

    #[test]
    fn deterministic_output() {
        let src = "(forall (x) (implies (p x) (q x)))";
        let a = build_dag(&alpha_normalize(&parse_sexpr(src).unwrap()));
        let b = build_dag(&alpha_normalize(&parse_sexpr(src).unwrap()));
        assert_eq!(to_dot(&a), to_dot(&b));
        assert_eq!(to_json(&a), to_json(&b));
    }

    #[test]
    fn json_shape() {
        let dag = build_dag(&alpha_normalize(&parse_sexpr("(forall (x) (p x))").unwrap()));
        let json = to_json(&dag);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
        assert!(v["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .any(|n| n["token"] == "VAR" && n["kind"] == "Variable"));
        assert_eq!(v["root"], dag.root);
        assert!(v["up_schedule"].is_array());
    }
}
