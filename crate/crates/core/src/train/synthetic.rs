//! Seeded synthetic datasets for desk-scale validation, plus the random
//! formula generators shared by the property suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{parse_dataset, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticTask {
    /// Label 1 iff premise and conjecture share at least one predicate symbol.
    SharedPredicate,
    /// Label is the parity of the premise's nesting depth.
    DepthParity,
}

impl std::str::FromStr for SyntheticTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shared-predicate" => Ok(SyntheticTask::SharedPredicate),
            "depth-parity" => Ok(SyntheticTask::DepthParity),
            other => Err(format!("unknown synthetic task `{other}`")),
        }
    }
}

/// Dataset lines (`label<TAB>premise<TAB>conjecture`), balanced within one
/// example by alternating target labels.
pub fn generate_synthetic_lines(n: usize, seed: u64, task: SyntheticTask) -> Vec<String> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2 == 0) as u8;
        let (premise, conjecture) = match task {
            SyntheticTask::SharedPredicate => shared_predicate_pair(&mut rng, label),
            SyntheticTask::DepthParity => depth_parity_pair(&mut rng, label),
        };
        lines.push(format!("{label}\t{premise}\t{conjecture}"));
    }
    lines
}

/// Parsed, normalized, dag-built synthetic dataset.
pub fn generate_synthetic(n: usize, seed: u64, task: SyntheticTask) -> Dataset {
    if n == 0 {
        return Dataset::default();
    }
    let text = generate_synthetic_lines(n, seed, task).join("\n");
    parse_dataset(&text).expect("generated lines always parse")
}

const PREDICATES: [&str; 6] = ["p0", "p1", "p2", "p3", "p4", "p5"];

fn shared_predicate_pair(rng: &mut ChaCha20Rng, label: u8) -> (String, String) {
    let (premise_preds, conjecture_preds) = if label == 1 {
        let mut pool: Vec<&str> = PREDICATES.to_vec();
        pool.shuffle(rng);
        let shared = pool[0];
        let mut prem = vec![shared];
        if rng.gen_bool(0.5) {
            prem.push(pool[1]);
        }
        let mut conj = vec![shared];
        if rng.gen_bool(0.5) {
            conj.push(pool[2]);
        }
        (prem, conj)
    } else {
        let mut pool: Vec<&str> = PREDICATES.to_vec();
        pool.shuffle(rng);
        let split = 3;
        let prem_n = rng.gen_range(1..=2);
        let conj_n = rng.gen_range(1..=2);
        (
            pool[..split].choose_multiple(rng, prem_n).copied().collect(),
            pool[split..].choose_multiple(rng, conj_n).copied().collect(),
        )
    };
    (
        formula_over(rng, &premise_preds),
        formula_over(rng, &conjecture_preds),
    )
}

/// A small formula whose predicate symbols are exactly `preds`.
fn formula_over(rng: &mut ChaCha20Rng, preds: &[&str]) -> String {
    let mut atoms: Vec<String> = preds.iter().map(|p| atom(rng, p)).collect();
    // one predicate may appear twice
    if rng.gen_bool(0.3) {
        let p = preds.choose(rng).unwrap();
        atoms.push(atom(rng, p));
    }
    atoms.shuffle(rng);
    let body = if atoms.len() == 1 {
        atoms.pop().unwrap()
    } else {
        let conn = if rng.gen_bool(0.5) { "and" } else { "or" };
        format!("({conn} {})", atoms.join(" "))
    };
    if rng.gen_bool(0.5) {
        format!("(forall (x) {body})")
    } else {
        body
    }
}

fn atom(rng: &mut ChaCha20Rng, pred: &str) -> String {
    let term = match rng.gen_range(0..4) {
        0 => "x".to_string(),
        1 => "(c0)".to_string(),
        2 => "(c1)".to_string(),
        _ => "(f0 x)".to_string(),
    };
    if rng.gen_bool(0.3) {
        let second = if rng.gen_bool(0.5) { "x" } else { "(c0)" };
        format!("({pred} {term} {second})")
    } else {
        format!("({pred} {term})")
    }
}

fn depth_parity_pair(rng: &mut ChaCha20Rng, label: u8) -> (String, String) {
    // base atom "(pK x)" has depth 2; each `not` wrapper adds 1
    let mut depth = rng.gen_range(3..=8);
    if depth % 2 != label as usize {
        depth += 1;
    }
    let pred = PREDICATES.choose(rng).unwrap();
    let mut premise = format!("({pred} x)");
    for _ in 0..depth - 2 {
        premise = format!("(not {premise})");
    }
    let conj_pred = PREDICATES.choose(rng).unwrap();
    (premise, atom(rng, conj_pred))
}

/// General random formula: quantifiers, unordered and ordered connectives,
/// equality, repeated variables, and repeated subterms. Used by the
/// structural property suites.
pub fn random_formula_text(rng: &mut ChaCha20Rng, max_depth: usize) -> String {
    let mut scope: Vec<String> = Vec::new();
    gen_formula(rng, max_depth, &mut scope)
}

fn gen_formula(rng: &mut ChaCha20Rng, budget: usize, scope: &mut Vec<String>) -> String {
    if budget == 0 {
        return gen_atom(rng, scope);
    }
    match rng.gen_range(0..10) {
        0 | 1 => {
            let var = format!("v{}", scope.len());
            let quant = if rng.gen_bool(0.5) { "forall" } else { "exists" };
            scope.push(var.clone());
            let body = gen_formula(rng, budget - 1, scope);
            scope.pop();
            format!("({quant} ({var}) {body})")
        }
        2 | 3 | 4 => {
            let conn = if rng.gen_bool(0.5) { "and" } else { "or" };
            let n = rng.gen_range(2..=3);
            let parts: Vec<String> = (0..n).map(|_| gen_formula(rng, budget - 1, scope)).collect();
            format!("({conn} {})", parts.join(" "))
        }
        5 => format!("(not {})", gen_formula(rng, budget - 1, scope)),
        6 => format!(
            "(implies {} {})",
            gen_formula(rng, budget - 1, scope),
            gen_formula(rng, budget - 1, scope)
        ),
        7 => format!(
            "(iff {} {})",
            gen_formula(rng, budget - 1, scope),
            gen_formula(rng, budget - 1, scope)
        ),
        8 => format!(
            "(= {} {})",
            gen_term(rng, budget.min(2), scope),
            gen_term(rng, budget.min(2), scope)
        ),
        _ => gen_atom(rng, scope),
    }
}

fn gen_atom(rng: &mut ChaCha20Rng, scope: &[String]) -> String {
    let pred = format!("p{}", rng.gen_range(0..5));
    let arity = rng.gen_range(0..=2);
    if arity == 0 {
        return pred;
    }
    let args: Vec<String> = (0..arity).map(|_| gen_term(rng, 1, scope)).collect();
    format!("({pred} {})", args.join(" "))
}

fn gen_term(rng: &mut ChaCha20Rng, budget: usize, scope: &[String]) -> String {
    if budget > 0 && rng.gen_bool(0.4) {
        let f = format!("f{}", rng.gen_range(0..3));
        let arity = rng.gen_range(1..=2);
        let args: Vec<String> = (0..arity).map(|_| gen_term(rng, budget - 1, scope)).collect();
        return format!("({f} {})", args.join(" "));
    }
    if !scope.is_empty() && rng.gen_bool(0.6) {
        return scope[rng.gen_range(0..scope.len())].clone();
    }
    match rng.gen_range(0..3) {
        0 => format!("(c{})", rng.gen_range(0..3)),
        1 => format!("z{}", rng.gen_range(0..2)),
        _ => "(c0)".to_string(),
    }
}

/// Sharing-free formula: no variables or quantifiers and globally unique
/// symbols, so the compiled DAG is exactly the parse tree. `counter`
/// provides symbol freshness across calls.
pub fn random_tree_formula_text(rng: &mut ChaCha20Rng, counter: &mut usize) -> String {
    let budget = rng.gen_range(2..=4);
    gen_tree_formula(rng, budget, counter)
}

fn fresh(prefix: &str, counter: &mut usize) -> String {
    let name = format!("{prefix}{counter}");
    *counter += 1;
    name
}

fn gen_tree_formula(rng: &mut ChaCha20Rng, budget: usize, counter: &mut usize) -> String {
    if budget == 0 {
        return gen_tree_atom(rng, counter);
    }
    match rng.gen_range(0..8) {
        0 | 1 => {
            let conn = if rng.gen_bool(0.5) { "and" } else { "or" };
            let n = rng.gen_range(2..=3);
            let parts: Vec<String> = (0..n)
                .map(|_| gen_tree_formula(rng, budget - 1, counter))
                .collect();
            format!("({conn} {})", parts.join(" "))
        }
        2 => format!("(not {})", gen_tree_formula(rng, budget - 1, counter)),
        3 => format!(
            "(implies {} {})",
            gen_tree_formula(rng, budget - 1, counter),
            gen_tree_formula(rng, budget - 1, counter)
        ),
        4 => format!(
            "(= {} {})",
            gen_tree_term(rng, 1, counter),
            gen_tree_term(rng, 1, counter)
        ),
        _ => gen_tree_atom(rng, counter),
    }
}

fn gen_tree_atom(rng: &mut ChaCha20Rng, counter: &mut usize) -> String {
    let pred = fresh("tp", counter);
    let arity = rng.gen_range(1..=2);
    let args: Vec<String> = (0..arity).map(|_| gen_tree_term(rng, 1, counter)).collect();
    format!("({pred} {})", args.join(" "))
}

fn gen_tree_term(rng: &mut ChaCha20Rng, budget: usize, counter: &mut usize) -> String {
    if budget > 0 && rng.gen_bool(0.5) {
        let f = fresh("tf", counter);
        let arity = rng.gen_range(1..=2);
        let args: Vec<String> = (0..arity)
            .map(|_| gen_tree_term(rng, budget - 1, counter))
            .collect();
        format!("({f} {})", args.join(" "))
    } else {
        format!("({})", fresh("tc", counter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_sexpr, NodeKind};
    use std::collections::BTreeSet;

    fn predicate_symbols(src: &str) -> BTreeSet<String> {
        let ast = parse_sexpr(src).unwrap();
        let mut out = BTreeSet::new();
        let mut stack = vec![&ast];
        while let Some(n) = stack.pop() {
            if n.kind == NodeKind::Predicate {
                out.insert(n.symbol.clone());
            }
            stack.extend(n.children.iter());
        }
        out
    }

    #[test]
    fn empty_dataset() {
        assert_eq!(generate_synthetic(0, 1, SyntheticTask::SharedPredicate).len(), 0);
    }

    #[test]
    fn labels_balanced() {
        for task in [SyntheticTask::SharedPredicate, SyntheticTask::DepthParity] {
            let data = generate_synthetic(101, 7, task);
            let ones: i64 = data.examples.iter().map(|e| e.label as i64).sum();
            let zeros = data.len() as i64 - ones;
            assert!((ones - zeros).abs() <= 2, "{task:?}: {ones} vs {zeros}");
        }
    }

    #[test]
    fn shared_predicate_labels_match_brute_force() {
        let lines = generate_synthetic_lines(400, 99, SyntheticTask::SharedPredicate);
        for line in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            let label: u8 = fields[0].parse().unwrap();
            let shared = !predicate_symbols(fields[1])
                .intersection(&predicate_symbols(fields[2]))
                .next()
                .is_none();
            assert_eq!(label == 1, shared, "line: {line}");
        }
    }

    #[test]
    fn depth_parity_labels_match_brute_force() {
        let lines = generate_synthetic_lines(200, 3, SyntheticTask::DepthParity);
        for line in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            let label: usize = fields[0].parse().unwrap();
            let depth = parse_sexpr(fields[1]).unwrap().depth();
            assert_eq!(depth % 2, label, "line: {line}");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_synthetic_lines(50, 5, SyntheticTask::SharedPredicate);
        let b = generate_synthetic_lines(50, 5, SyntheticTask::SharedPredicate);
        assert_eq!(a, b);
    }

    #[test]
    fn random_formulas_parse() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let mut counter = 0;
        for _ in 0..50 {
            let f = random_formula_text(&mut rng, 3);
            parse_sexpr(&f).unwrap_or_else(|e| panic!("{f}: {e}"));
            let t = random_tree_formula_text(&mut rng, &mut counter);
            parse_sexpr(&t).unwrap_or_else(|e| panic!("{t}: {e}"));
        }
    }

    #[test]
    fn tree_formulas_compile_to_trees() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let mut counter = 0;
        for _ in 0..30 {
            let src = random_tree_formula_text(&mut rng, &mut counter);
            let dag = crate::dag::build_dag(&crate::parser::alpha_normalize(
                &parse_sexpr(&src).unwrap(),
            ));
            // a tree has exactly one more node than edges and no multi-parent nodes
            assert_eq!(dag.nodes.len(), dag.edges.len() + 1, "{src}");
            assert!(dag.nodes.iter().all(|n| n.in_edges.len() <= 1), "{src}");
        }
    }
}
