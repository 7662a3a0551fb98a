//! Formula front-end: s-expression and TPTP FOF parsers producing a shared,
//! validated abstract syntax tree, plus alpha-normalization.

mod normalize;
mod sexpr;
mod tptp;

pub use normalize::alpha_normalize;
pub use sexpr::{parse_sexpr, parse_sexpr_with};
pub use tptp::{parse_tptp_fof, parse_tptp_fof_with, TptpStatement};

use std::collections::HashMap;
use std::fmt;

/// Maximum formula nesting depth accepted by the parsers. Enforced with an
/// explicit stack, never via recursion.
pub const MAX_DEPTH: usize = 10_000;

/// The syntactic role of an AST or DAG node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum NodeKind {
    Quantifier,
    Connective,
    Predicate,
    Function,
    Variable,
    Constant,
    Apply,
}

impl NodeKind {
    pub const ALL: [NodeKind; 7] = [
        NodeKind::Quantifier,
        NodeKind::Connective,
        NodeKind::Predicate,
        NodeKind::Function,
        NodeKind::Variable,
        NodeKind::Constant,
        NodeKind::Apply,
    ];

    /// Stable index used for edge-label encoding and kind-conditioned parameters.
    pub fn index(self) -> usize {
        match self {
            NodeKind::Quantifier => 0,
            NodeKind::Connective => 1,
            NodeKind::Predicate => 2,
            NodeKind::Function => 3,
            NodeKind::Variable => 4,
            NodeKind::Constant => 5,
            NodeKind::Apply => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Quantifier => "Quantifier",
            NodeKind::Connective => "Connective",
            NodeKind::Predicate => "Predicate",
            NodeKind::Function => "Function",
            NodeKind::Variable => "Variable",
            NodeKind::Constant => "Constant",
            NodeKind::Apply => "Apply",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Argument-ordering discipline of a node, derived from kind and symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArityClass {
    /// All arguments share rank 0 (`and`, `or`, `iff`, `=`).
    Unordered,
    /// Arguments are linearly ordered (everything else).
    Ordered,
    /// Bound variables at rank 0, body at rank 1 (quantifiers).
    QuantifierHybrid,
}

/// Byte range of a node in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

/// Typed parse tree of a formula.
///
/// Equality and hashing ignore `span` and `source_name`; two trees are equal
/// when their kinds, symbols, and child structure coincide.
#[derive(Debug, Clone)]
pub struct FormulaAst {
    pub kind: NodeKind,
    /// Token: quantifier or connective keyword, user symbol, or variable name.
    /// Empty for `Apply`. After alpha-normalization variables carry `?<scope>`.
    pub symbol: String,
    /// Ordered children; for quantifiers the bound variables come first,
    /// followed by exactly one body.
    pub children: Vec<FormulaAst>,
    pub span: Span,
    /// Original variable name, kept as debug metadata by alpha-normalization.
    pub source_name: Option<String>,
}

impl PartialEq for FormulaAst {
    fn eq(&self, other: &Self) -> bool {
        // Iterative: trees may be deep.
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            if a.kind != b.kind || a.symbol != b.symbol || a.children.len() != b.children.len() {
                return false;
            }
            for (ca, cb) in a.children.iter().zip(&b.children) {
                stack.push((ca, cb));
            }
        }
        true
    }
}

impl Eq for FormulaAst {}

impl FormulaAst {
    pub fn new(kind: NodeKind, symbol: impl Into<String>, children: Vec<FormulaAst>) -> Self {
        FormulaAst {
            kind,
            symbol: symbol.into(),
            children,
            span: Span::default(),
            source_name: None,
        }
    }

    /// Ordering discipline, derived from kind + symbol.
    pub fn arity_class(&self) -> ArityClass {
        arity_class_of(self.kind, &self.symbol)
    }

    /// For quantifiers, the number of leading bound-variable children.
    pub fn binder_count(&self) -> usize {
        if self.kind == NodeKind::Quantifier {
            self.children.len() - 1
        } else {
            0
        }
    }

    /// Maximum nesting depth; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        let mut max = 0usize;
        let mut stack = vec![(self, 1usize)];
        while let Some((node, d)) = stack.pop() {
            max = max.max(d);
            for c in &node.children {
                stack.push((c, d + 1));
            }
        }
        max
    }

    /// Canonical s-expression form. Re-parsing the output yields a
    /// structurally identical tree.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        enum Item<'a> {
            Node(&'a FormulaAst),
            Text(&'a str),
        }
        let mut stack = vec![Item::Node(self)];
        while let Some(item) = stack.pop() {
            match item {
                Item::Text(t) => out.push_str(t),
                Item::Node(n) => match n.kind {
                    NodeKind::Variable => out.push_str(&n.symbol),
                    NodeKind::Constant => {
                        out.push('(');
                        out.push_str(&n.symbol);
                        out.push(')');
                    }
                    NodeKind::Predicate if n.children.is_empty() => out.push_str(&n.symbol),
                    NodeKind::Quantifier => {
                        out.push('(');
                        out.push_str(&n.symbol);
                        out.push_str(" (");
                        let binders = n.binder_count();
                        for (i, v) in n.children[..binders].iter().enumerate() {
                            if i > 0 {
                                out.push(' ');
                            }
                            out.push_str(&v.symbol);
                        }
                        out.push_str(") ");
                        stack.push(Item::Text(")"));
                        stack.push(Item::Node(&n.children[binders]));
                    }
                    _ => {
                        out.push('(');
                        out.push_str(if n.kind == NodeKind::Apply { "apply" } else { &n.symbol });
                        stack.push(Item::Text(")"));
                        for c in n.children.iter().rev() {
                            stack.push(Item::Node(c));
                            stack.push(Item::Text(" "));
                        }
                    }
                },
            }
        }
        out
    }
}

pub(crate) fn arity_class_of(kind: NodeKind, symbol: &str) -> ArityClass {
    match kind {
        NodeKind::Quantifier => ArityClass::QuantifierHybrid,
        NodeKind::Connective if matches!(symbol, "and" | "or" | "iff") => ArityClass::Unordered,
        NodeKind::Predicate if symbol == "=" => ArityClass::Unordered,
        _ => ArityClass::Ordered,
    }
}

/// Distinct free variables in first-occurrence (pre-order) order.
pub fn free_variables(ast: &FormulaAst) -> Vec<String> {
    enum Step<'a> {
        Enter(&'a FormulaAst),
        Leave(Vec<String>),
    }
    let mut bound: HashMap<String, usize> = HashMap::new();
    let mut free = Vec::new();
    let mut stack = vec![Step::Enter(ast)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Leave(names) => {
                for name in names {
                    if let Some(n) = bound.get_mut(&name) {
                        *n -= 1;
                        if *n == 0 {
                            bound.remove(&name);
                        }
                    }
                }
            }
            Step::Enter(node) => match node.kind {
                NodeKind::Variable => {
                    if !bound.contains_key(&node.symbol) && !free.contains(&node.symbol) {
                        free.push(node.symbol.clone());
                    }
                }
                NodeKind::Quantifier => {
                    let binders = node.binder_count();
                    let names: Vec<String> =
                        node.children[..binders].iter().map(|v| v.symbol.clone()).collect();
                    for name in &names {
                        *bound.entry(name.clone()).or_insert(0) += 1;
                    }
                    stack.push(Step::Leave(names));
                    stack.push(Step::Enter(&node.children[binders]));
                }
                _ => {
                    for c in node.children.iter().rev() {
                        stack.push(Step::Enter(c));
                    }
                }
            },
        }
    }
    free
}

/// Parser options. Strict mode rejects formulae with free variables.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub strict: bool,
}

/// Errors from the formula front-end. Positions are byte offsets with
/// 1-based line/column derived from the source text.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset} (line {line}, column {column}): expected {expected}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        expected: String,
    },
    #[error("arity error at line {line}, column {column}: {message}")]
    Arity {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unbound variable `{name}` at line {line}, column {column}")]
    UnboundVariable {
        name: String,
        offset: usize,
        line: usize,
        column: usize,
    },
    #[error("unsupported construct at line {line}, column {column}: {construct}")]
    UnsupportedConstruct {
        construct: String,
        offset: usize,
        line: usize,
        column: usize,
    },
    #[error("maximum nesting depth {limit} exceeded at offset {offset}")]
    DepthExceeded { limit: usize, offset: usize },
}

impl ParseError {
    pub(crate) fn syntax(text: &str, offset: usize, expected: impl Into<String>) -> Self {
        let (line, column) = line_col(text, offset);
        ParseError::Syntax {
            offset,
            line,
            column,
            expected: expected.into(),
        }
    }

    pub(crate) fn arity(text: &str, offset: usize, message: impl Into<String>) -> Self {
        let (line, column) = line_col(text, offset);
        ParseError::Arity {
            offset,
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn unbound(text: &str, offset: usize, name: impl Into<String>) -> Self {
        let (line, column) = line_col(text, offset);
        ParseError::UnboundVariable {
            name: name.into(),
            offset,
            line,
            column,
        }
    }

    pub(crate) fn unsupported(text: &str, offset: usize, construct: impl Into<String>) -> Self {
        let (line, column) = line_col(text, offset);
        ParseError::UnsupportedConstruct {
            construct: construct.into(),
            offset,
            line,
            column,
        }
    }

    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::UnboundVariable { offset, .. }
            | ParseError::UnsupportedConstruct { offset, .. }
            | ParseError::DepthExceeded { offset, .. } => *offset,
        }
    }
}

pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in text.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

pub(crate) fn check_strict(text: &str, ast: &FormulaAst, opts: &ParseOptions) -> Result<(), ParseError> {
    if opts.strict {
        if let Some(name) = free_variables(ast).into_iter().next() {
            return Err(ParseError::unbound(text, 0, name));
        }
    }
    Ok(())
}
