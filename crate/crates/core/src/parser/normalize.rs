//! Alpha-normalization: bound-variable occurrences are tagged with scope
//! identifiers so that formulae differing only in variable names become
//! structurally identical.

use std::collections::HashMap;

use super::{FormulaAst, NodeKind};

/// Rewrites every variable to a scope-identified token `?<id>`.
///
/// Scope ids are assigned in a deterministic pre-order traversal: a
/// quantifier assigns fresh ids to its binders (in varlist order) on entry,
/// and a free variable receives a fresh root-level id at its first
/// occurrence. The original name is kept in `source_name` as debug metadata.
/// Idempotent: normalizing a normalized tree reassigns the same ids.
pub fn alpha_normalize(ast: &FormulaAst) -> FormulaAst {
    enum Task<'a> {
        Visit(&'a FormulaAst),
        Assemble {
            node: &'a FormulaAst,
            child_count: usize,
            binder_ids: Vec<u32>,
        },
        PopScope(Vec<String>),
    }

    let mut counter: u32 = 0;
    let mut fresh = || {
        let id = counter;
        counter += 1;
        id
    };
    // name -> stack of scope ids (innermost last), for shadowing
    let mut env: HashMap<String, Vec<u32>> = HashMap::new();
    // free variables get a root-level scope id at first occurrence
    let mut free_ids: HashMap<String, u32> = HashMap::new();

    let mut tasks = vec![Task::Visit(ast)];
    let mut values: Vec<FormulaAst> = Vec::new();

    while let Some(task) = tasks.pop() {
        match task {
            Task::PopScope(names) => {
                for name in names {
                    if let Some(stack) = env.get_mut(&name) {
                        stack.pop();
                        if stack.is_empty() {
                            env.remove(&name);
                        }
                    }
                }
            }
            Task::Assemble {
                node,
                child_count,
                binder_ids,
            } => {
                let mut children: Vec<FormulaAst> =
                    values.drain(values.len() - child_count..).collect();
                if node.kind == NodeKind::Quantifier {
                    let binders = node.binder_count();
                    let mut all = Vec::with_capacity(binders + 1);
                    for (v, id) in node.children[..binders].iter().zip(&binder_ids) {
                        all.push(scoped_var(v, *id));
                    }
                    all.append(&mut children);
                    children = all;
                }
                let mut out = FormulaAst::new(node.kind, node.symbol.clone(), children);
                out.span = node.span;
                values.push(out);
            }
            Task::Visit(node) => match node.kind {
                NodeKind::Variable => {
                    let id = match env.get(&node.symbol).and_then(|s| s.last()) {
                        Some(id) => *id,
                        None => *free_ids.entry(node.symbol.clone()).or_insert_with(&mut fresh),
                    };
                    values.push(scoped_var(node, id));
                }
                NodeKind::Quantifier => {
                    let binders = node.binder_count();
                    let mut names = Vec::with_capacity(binders);
                    let mut ids = Vec::with_capacity(binders);
                    for v in &node.children[..binders] {
                        let id = fresh();
                        env.entry(v.symbol.clone()).or_default().push(id);
                        names.push(v.symbol.clone());
                        ids.push(id);
                    }
                    tasks.push(Task::PopScope(names));
                    tasks.push(Task::Assemble {
                        node,
                        child_count: 1,
                        binder_ids: ids,
                    });
                    tasks.push(Task::Visit(&node.children[binders]));
                }
                _ => {
                    tasks.push(Task::Assemble {
                        node,
                        child_count: node.children.len(),
                        binder_ids: Vec::new(),
                    });
                    for c in node.children.iter().rev() {
                        tasks.push(Task::Visit(c));
                    }
                }
            },
        }
    }

    debug_assert_eq!(values.len(), 1);
    values.pop().unwrap()
}

fn scoped_var(original: &FormulaAst, id: u32) -> FormulaAst {
    let mut v = FormulaAst::new(NodeKind::Variable, format!("?{id}"), vec![]);
    v.span = original.span;
    v.source_name = Some(
        original
            .source_name
            .clone()
            .unwrap_or_else(|| original.symbol.clone()),
    );
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_sexpr;

    fn norm(src: &str) -> FormulaAst {
        alpha_normalize(&parse_sexpr(src).unwrap())
    }

    #[test]
    fn renamed_bound_variables_normalize_identically() {
        assert_eq!(norm("(forall (x) (p x))"), norm("(forall (y) (p y))"));
        assert_eq!(
            norm("(forall (a b) (implies (p a) (q b a)))"),
            norm("(forall (u v) (implies (p u) (q v u)))")
        );
    }

    #[test]
    fn shadowing_gets_distinct_scopes() {
        let ast = norm("(forall (x) (and (p x) (forall (x) (q x))))");
        let and = &ast.children[1];
        let outer_occ = &and.children[0].children[0];
        let inner = &and.children[1];
        let inner_occ = &inner.children[1].children[0];
        assert_eq!(outer_occ.symbol, "?0");
        assert_ne!(outer_occ.symbol, inner_occ.symbol);
        assert_eq!(inner.children[0].symbol, inner_occ.symbol);
    }

    #[test]
    fn free_variables_get_root_scopes() {
        let ast = norm("(and (p z) (q w z))");
        let z1 = &ast.children[0].children[0];
        let w = &ast.children[1].children[0];
        let z2 = &ast.children[1].children[1];
        assert_eq!(z1.symbol, "?0");
        assert_eq!(w.symbol, "?1");
        assert_eq!(z2.symbol, "?0");
        assert_eq!(z1.source_name.as_deref(), Some("z"));
    }

    #[test]
    fn free_and_bound_scopes_are_distinct() {
        let ast = norm("(forall (x) (p x z))");
        let body = &ast.children[1];
        assert_eq!(body.children[0].symbol, "?0");
        assert_eq!(body.children[1].symbol, "?1");
    }

    #[test]
    fn idempotent() {
        for src in [
            "(forall (x y) (implies (p x) (q y x)))",
            "(and (p z) (forall (z) (p z)))",
            "(exists (v) (iff (p v) (q w)))",
        ] {
            let once = norm(src);
            let twice = alpha_normalize(&once);
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn normalized_form_prints_and_reparses() {
        let once = norm("(forall (x) (and (p x) (q z)))");
        let printed = once.to_sexpr();
        let again = alpha_normalize(&parse_sexpr(&printed).unwrap());
        assert_eq!(once, again);
    }
}
