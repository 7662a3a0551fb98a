//! Canonical s-expression syntax.
//!
//! ```text
//! formula := '(' 'forall' varlist formula ')' | '(' 'exists' varlist formula ')'
//!          | '(' 'and' formula formula+ ')' | '(' 'or' formula formula+ ')'
//!          | '(' 'not' formula ')' | '(' 'implies' formula formula ')'
//!          | '(' 'iff' formula formula+ ')' | '(' '=' term term ')'
//!          | '(' SYMBOL term* ')' | SYMBOL
//! term    := '(' SYMBOL term* ')' | '(' 'apply' term term+ ')' | SYMBOL
//! varlist := '(' SYMBOL+ ')'
//! SYMBOL  := [A-Za-z0-9_$.!?'-]+
//! ```
//!
//! `;` starts a line comment. A bare symbol in term position is a variable
//! (free variables are allowed by default); a zero-argument application
//! `(c)` is a constant; a bare symbol in formula position is a
//! propositional atom (nullary predicate).

use super::{
    check_strict, FormulaAst, NodeKind, ParseError, ParseOptions, Span, MAX_DEPTH,
};

const RESERVED: [&str; 8] = [
    "forall", "exists", "and", "or", "not", "implies", "iff", "apply",
];

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '.' | '!' | '?' | '\'' | '-')
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    LParen(usize),
    RParen(usize),
    Equal(usize),
    Sym(&'a str, usize),
}

impl Tok<'_> {
    fn offset(&self) -> usize {
        match self {
            Tok::LParen(o) | Tok::RParen(o) | Tok::Equal(o) => *o,
            Tok::Sym(_, o) => *o,
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Tok<'_>>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            '(' => {
                toks.push(Tok::LParen(i));
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen(i));
                i += 1;
            }
            '=' => {
                toks.push(Tok::Equal(i));
                i += 1;
            }
            ';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            c if is_symbol_char(c) => {
                let start = i;
                while i < bytes.len() && is_symbol_char(bytes[i] as char) {
                    i += 1;
                }
                toks.push(Tok::Sym(&text[start..i], start));
            }
            other => {
                return Err(ParseError::syntax(
                    text,
                    i,
                    format!("a symbol or parenthesis, found `{other}`"),
                ))
            }
        }
    }
    Ok(toks)
}

enum Frame {
    Quant {
        symbol: &'static str,
        vars: Vec<FormulaAst>,
        body: Option<FormulaAst>,
        start: usize,
    },
    Conn {
        symbol: String,
        children: Vec<FormulaAst>,
        start: usize,
    },
    Equality {
        children: Vec<FormulaAst>,
        start: usize,
    },
    Pred {
        symbol: String,
        children: Vec<FormulaAst>,
        start: usize,
    },
    Func {
        symbol: String,
        children: Vec<FormulaAst>,
        start: usize,
    },
    Apply {
        children: Vec<FormulaAst>,
        start: usize,
    },
}

impl Frame {
    /// Does this frame expect formulae (true) or terms (false) as children?
    fn expects_formula(&self) -> bool {
        matches!(self, Frame::Quant { .. } | Frame::Conn { .. })
    }
}

/// Parse a single formula with default options (free variables allowed).
pub fn parse_sexpr(text: &str) -> Result<FormulaAst, ParseError> {
    parse_sexpr_with(text, &ParseOptions::default())
}

/// Parse a single formula; strict mode rejects free variables.
pub fn parse_sexpr_with(text: &str, opts: &ParseOptions) -> Result<FormulaAst, ParseError> {
    let toks = tokenize(text)?;
    let mut pos = 0usize;
    let mut frames: Vec<Frame> = Vec::new();
    let mut result: Option<FormulaAst> = None;

    macro_rules! peek {
        () => {
            toks.get(pos)
        };
    }

    loop {
        let tok = match peek!() {
            Some(t) => *t,
            None => break,
        };
        pos += 1;
        if result.is_some() {
            return Err(ParseError::syntax(text, tok.offset(), "end of input"));
        }
        let expects_formula = frames.last().map(|f| f.expects_formula()).unwrap_or(true);
        let completed: Option<FormulaAst> = match tok {
            Tok::LParen(start) => {
                if frames.len() >= MAX_DEPTH {
                    return Err(ParseError::DepthExceeded {
                        limit: MAX_DEPTH,
                        offset: start,
                    });
                }
                let head = match peek!() {
                    Some(t) => *t,
                    None => return Err(ParseError::syntax(text, text.len(), "a symbol after `(`")),
                };
                pos += 1;
                match head {
                    Tok::Equal(_) if expects_formula => {
                        frames.push(Frame::Equality {
                            children: Vec::new(),
                            start,
                        });
                    }
                    Tok::Equal(o) => {
                        return Err(ParseError::syntax(text, o, "a symbol (`=` is not a term head)"))
                    }
                    Tok::Sym(s, o) => match s {
                        "forall" | "exists" if expects_formula => {
                            let symbol = if s == "forall" { "forall" } else { "exists" };
                            let vars = parse_varlist(text, &toks, &mut pos)?;
                            frames.push(Frame::Quant {
                                symbol,
                                vars,
                                body: None,
                                start,
                            });
                        }
                        "and" | "or" | "not" | "implies" | "iff" if expects_formula => {
                            frames.push(Frame::Conn {
                                symbol: s.to_string(),
                                children: Vec::new(),
                                start,
                            });
                        }
                        "apply" => {
                            frames.push(Frame::Apply {
                                children: Vec::new(),
                                start,
                            });
                        }
                        _ if RESERVED.contains(&s) => {
                            return Err(ParseError::syntax(
                                text,
                                o,
                                format!("a term head (`{s}` is reserved)"),
                            ));
                        }
                        _ if expects_formula => {
                            frames.push(Frame::Pred {
                                symbol: s.to_string(),
                                children: Vec::new(),
                                start,
                            });
                        }
                        _ => {
                            frames.push(Frame::Func {
                                symbol: s.to_string(),
                                children: Vec::new(),
                                start,
                            });
                        }
                    },
                    Tok::LParen(o) | Tok::RParen(o) => {
                        return Err(ParseError::syntax(text, o, "a symbol after `(`"))
                    }
                }
                None
            }
            Tok::RParen(end) => {
                let frame = frames.pop().ok_or_else(|| {
                    ParseError::syntax(text, end, "a formula, found unmatched `)`")
                })?;
                Some(finish_frame(text, frame, end)?)
            }
            Tok::Equal(o) => {
                return Err(ParseError::syntax(text, o, "a symbol (bare `=` is not allowed)"))
            }
            Tok::Sym(s, o) => {
                if RESERVED.contains(&s) {
                    return Err(ParseError::syntax(
                        text,
                        o,
                        format!("a symbol (`{s}` is reserved)"),
                    ));
                }
                let kind = if expects_formula {
                    NodeKind::Predicate
                } else {
                    NodeKind::Variable
                };
                let mut node = FormulaAst::new(kind, s, vec![]);
                node.span = Span::new(o, o + s.len());
                Some(node)
            }
        };

        if let Some(node) = completed {
            match frames.last_mut() {
                None => result = Some(node),
                Some(Frame::Quant { body, symbol, .. }) => {
                    if body.is_some() {
                        return Err(ParseError::arity(
                            text,
                            node.span.start,
                            format!("`{symbol}` takes exactly one body formula"),
                        ));
                    }
                    *body = Some(node);
                }
                Some(Frame::Conn { children, .. })
                | Some(Frame::Equality { children, .. })
                | Some(Frame::Pred { children, .. })
                | Some(Frame::Func { children, .. })
                | Some(Frame::Apply { children, .. }) => children.push(node),
            }
        }
    }

    match result {
        Some(ast) => {
            check_strict(text, &ast, opts)?;
            Ok(ast)
        }
        None => Err(ParseError::syntax(
            text,
            text.len(),
            if frames.is_empty() {
                "a formula".to_string()
            } else {
                "`)`".to_string()
            },
        )),
    }
}

fn parse_varlist<'a>(
    text: &str,
    toks: &[Tok<'a>],
    pos: &mut usize,
) -> Result<Vec<FormulaAst>, ParseError> {
    match toks.get(*pos) {
        Some(Tok::LParen(_)) => *pos += 1,
        Some(t) => return Err(ParseError::syntax(text, t.offset(), "`(` starting a variable list")),
        None => return Err(ParseError::syntax(text, text.len(), "`(` starting a variable list")),
    }
    let mut vars: Vec<FormulaAst> = Vec::new();
    loop {
        match toks.get(*pos) {
            Some(Tok::Sym(s, o)) => {
                *pos += 1;
                if RESERVED.contains(s) {
                    return Err(ParseError::syntax(
                        text,
                        *o,
                        format!("a variable name (`{s}` is reserved)"),
                    ));
                }
                if vars.iter().any(|v| v.symbol == *s) {
                    return Err(ParseError::syntax(
                        text,
                        *o,
                        format!("distinct variable names (`{s}` repeats)"),
                    ));
                }
                let mut v = FormulaAst::new(NodeKind::Variable, *s, vec![]);
                v.span = Span::new(*o, *o + s.len());
                vars.push(v);
            }
            Some(Tok::RParen(o)) => {
                *pos += 1;
                if vars.is_empty() {
                    return Err(ParseError::arity(text, *o, "a quantifier binds at least one variable"));
                }
                return Ok(vars);
            }
            Some(t) => return Err(ParseError::syntax(text, t.offset(), "a variable name or `)`")),
            None => return Err(ParseError::syntax(text, text.len(), "a variable name or `)`")),
        }
    }
}

fn finish_frame(text: &str, frame: Frame, end: usize) -> Result<FormulaAst, ParseError> {
    let node = match frame {
        Frame::Quant {
            symbol,
            vars,
            body,
            start,
        } => {
            let body = body.ok_or_else(|| {
                ParseError::arity(text, end, format!("`{symbol}` is missing a body formula"))
            })?;
            let mut children = vars;
            children.push(body);
            let mut n = FormulaAst::new(NodeKind::Quantifier, symbol, children);
            n.span = Span::new(start, end + 1);
            n
        }
        Frame::Conn {
            symbol,
            children,
            start,
        } => {
            let ok = match symbol.as_str() {
                "not" => children.len() == 1,
                "implies" => children.len() == 2,
                _ => children.len() >= 2,
            };
            if !ok {
                let want = match symbol.as_str() {
                    "not" => "exactly 1 argument",
                    "implies" => "exactly 2 arguments",
                    _ => "at least 2 arguments",
                };
                return Err(ParseError::arity(
                    text,
                    end,
                    format!("`{symbol}` takes {want}, found {}", children.len()),
                ));
            }
            let mut n = FormulaAst::new(NodeKind::Connective, symbol, children);
            n.span = Span::new(start, end + 1);
            n
        }
        Frame::Equality { children, start } => {
            if children.len() != 2 {
                return Err(ParseError::arity(
                    text,
                    end,
                    format!("`=` takes exactly 2 terms, found {}", children.len()),
                ));
            }
            let mut n = FormulaAst::new(NodeKind::Predicate, "=", children);
            n.span = Span::new(start, end + 1);
            n
        }
        Frame::Pred {
            symbol,
            children,
            start,
        } => {
            let mut n = FormulaAst::new(NodeKind::Predicate, symbol, children);
            n.span = Span::new(start, end + 1);
            n
        }
        Frame::Func {
            symbol,
            children,
            start,
        } => {
            let kind = if children.is_empty() {
                NodeKind::Constant
            } else {
                NodeKind::Function
            };
            let mut n = FormulaAst::new(kind, symbol, children);
            n.span = Span::new(start, end + 1);
            n
        }
        Frame::Apply { children, start } => {
            if children.len() < 2 {
                return Err(ParseError::arity(
                    text,
                    end,
                    format!("`apply` takes a head and at least one argument, found {}", children.len()),
                ));
            }
            let mut n = FormulaAst::new(NodeKind::Apply, "", children);
            n.span = Span::new(start, end + 1);
            n
        }
    };
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::free_variables;

    #[test]
    fn quantified_predicate() {
        let ast = parse_sexpr("(forall (x) (p x))").unwrap();
        assert_eq!(ast.kind, NodeKind::Quantifier);
        assert_eq!(ast.symbol, "forall");
        assert_eq!(ast.children.len(), 2);
        assert_eq!(ast.children[0].kind, NodeKind::Variable);
        assert_eq!(ast.children[0].symbol, "x");
        let body = &ast.children[1];
        assert_eq!(body.kind, NodeKind::Predicate);
        assert_eq!(body.symbol, "p");
        assert_eq!(body.children[0].kind, NodeKind::Variable);
    }

    #[test]
    fn duplicate_subtrees_stay_separate() {
        let ast = parse_sexpr("(and (p a) (p a))").unwrap();
        assert_eq!(ast.kind, NodeKind::Connective);
        assert_eq!(ast.children.len(), 2);
        assert_eq!(ast.children[0], ast.children[1]);
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        let err = parse_sexpr("(forall (x").unwrap_err();
        match err {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 10),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn arity_violations() {
        assert!(matches!(parse_sexpr("(not p q)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_sexpr("(implies p)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_sexpr("(and p)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_sexpr("(forall (x))"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse_sexpr("(= a)"), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn term_positions() {
        let ast = parse_sexpr("(p (f x) (c) y)").unwrap();
        assert_eq!(ast.children[0].kind, NodeKind::Function);
        assert_eq!(ast.children[1].kind, NodeKind::Constant);
        assert_eq!(ast.children[2].kind, NodeKind::Variable);
    }

    #[test]
    fn apply_chains() {
        let ast = parse_sexpr("(p (apply f x y))").unwrap();
        let app = &ast.children[0];
        assert_eq!(app.kind, NodeKind::Apply);
        assert_eq!(app.children.len(), 3);
        assert!(matches!(parse_sexpr("(p (apply f))"), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn propositional_atom() {
        let ast = parse_sexpr("(not p)").unwrap();
        assert_eq!(ast.children[0].kind, NodeKind::Predicate);
        assert!(ast.children[0].children.is_empty());
    }

    #[test]
    fn strict_mode_rejects_free_variables() {
        let opts = ParseOptions { strict: true };
        assert!(matches!(
            parse_sexpr_with("(p z)", &opts),
            Err(ParseError::UnboundVariable { .. })
        ));
        assert!(parse_sexpr_with("(forall (z) (p z))", &opts).is_ok());
        assert_eq!(free_variables(&parse_sexpr("(p z)").unwrap()), vec!["z"]);
    }

    #[test]
    fn comments_and_whitespace() {
        let ast = parse_sexpr("; leading comment\n(and p ; inline\n q)\n; trailing").unwrap();
        assert_eq!(ast.children.len(), 2);
    }

    #[test]
    fn trailing_input_rejected() {
        assert!(matches!(parse_sexpr("(p a) (q b)"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn reserved_words_rejected_as_symbols() {
        assert!(parse_sexpr("(p forall)").is_err());
        assert!(parse_sexpr("and").is_err());
    }

    #[test]
    fn deep_nesting_within_limit() {
        let depth = 2_000;
        let mut text = String::new();
        for _ in 0..depth {
            text.push_str("(not ");
        }
        text.push('p');
        for _ in 0..depth {
            text.push(')');
        }
        let ast = parse_sexpr(&text).unwrap();
        assert_eq!(ast.depth(), depth + 1);
    }

    #[test]
    fn depth_limit_enforced() {
        let over = MAX_DEPTH + 5;
        let mut text = String::new();
        for _ in 0..over {
            text.push_str("(not ");
        }
        text.push('p');
        for _ in 0..over {
            text.push(')');
        }
        assert!(matches!(
            parse_sexpr(&text),
            Err(ParseError::DepthExceeded { .. })
        ));
    }

    #[test]
    fn round_trip_examples() {
        for src in [
            "(forall (x y) (implies (p x) (q x y)))",
            "(and (p (a)) (or r (not s) (= (f x) (g (b)))))",
            "(exists (v) (iff (p v) (q v) r))",
            "(p (apply f x (g y)))",
            "atom",
        ] {
            let ast = parse_sexpr(src).unwrap();
            let printed = ast.to_sexpr();
            let reparsed = parse_sexpr(&printed).unwrap();
            assert_eq!(ast, reparsed, "round trip failed for {src} -> {printed}");
        }
    }
}
