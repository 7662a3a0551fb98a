//! TPTP FOF front-end, lowered to the same AST as the s-expression syntax.
//!
//! Supported subset: `fof(name, role, formula).` statements with connectives
//! `~ & | => <=>`, equality `=` / `!=` (the latter desugars to `not(=)`),
//! quantifiers `! [X,...]:` and `? [X,...]:`, and application `f(t1,...,tn)`.
//! Variables are upper-case words, functions/predicates/constants lower-case
//! words, `%` starts a line comment. Everything else (typed constructs,
//! `$true`/`$false`, quoted atoms, numbers) is rejected as unsupported.

use super::{
    check_strict, FormulaAst, NodeKind, ParseError, ParseOptions, Span, MAX_DEPTH,
};

/// One `fof(...)` statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TptpStatement {
    pub name: String,
    pub role: String,
    pub formula: FormulaAst,
}

/// Parse a sequence of `fof` statements with default options.
pub fn parse_tptp_fof(text: &str) -> Result<Vec<TptpStatement>, ParseError> {
    parse_tptp_fof_with(text, &ParseOptions::default())
}

/// Parse a sequence of `fof` statements; strict mode rejects free variables.
pub fn parse_tptp_fof_with(
    text: &str,
    opts: &ParseOptions,
) -> Result<Vec<TptpStatement>, ParseError> {
    let toks = lex(text)?;
    let mut pos = 0usize;
    let mut statements = Vec::new();
    while pos < toks.len() {
        let stmt = parse_statement(text, &toks, &mut pos)?;
        check_strict(text, &stmt.formula, opts)?;
        statements.push(stmt);
    }
    Ok(statements)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Colon,
    Amp,
    Pipe,
    Tilde,
    Bang,
    Question,
    Arrow,   // =>
    Iff,     // <=>
    Equal,
    NotEqual,
    Lower(String),
    Upper(String),
    Unsupported(String),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            '%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            '(' => {
                toks.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, start));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBracket, start));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBracket, start));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, start));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, start));
                i += 1;
            }
            ':' => {
                toks.push((Tok::Colon, start));
                i += 1;
            }
            '&' => {
                toks.push((Tok::Amp, start));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Pipe, start));
                i += 1;
            }
            '~' => {
                toks.push((Tok::Tilde, start));
                i += 1;
            }
            '?' => {
                toks.push((Tok::Question, start));
                i += 1;
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::NotEqual, start));
                    i += 2;
                } else {
                    toks.push((Tok::Bang, start));
                    i += 1;
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Arrow, start));
                    i += 2;
                } else {
                    toks.push((Tok::Equal, start));
                    i += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') && bytes.get(i + 2) == Some(&b'>') {
                    toks.push((Tok::Iff, start));
                    i += 3;
                } else {
                    toks.push((Tok::Unsupported(slice_word(text, i, 3)), start));
                    i += 1;
                }
            }
            '$' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j] as char).is_ascii_alphanumeric() {
                    j += 1;
                }
                toks.push((Tok::Unsupported(text[i..j].to_string()), start));
                i = j;
            }
            '\'' => {
                toks.push((Tok::Unsupported("quoted atom".to_string()), start));
                i += 1;
            }
            c if c.is_ascii_lowercase() => {
                let mut j = i;
                while j < bytes.len() && is_word_char(bytes[j] as char) {
                    j += 1;
                }
                toks.push((Tok::Lower(text[i..j].to_string()), start));
                i = j;
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                let mut j = i;
                while j < bytes.len() && is_word_char(bytes[j] as char) {
                    j += 1;
                }
                toks.push((Tok::Upper(text[i..j].to_string()), start));
                i = j;
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    j += 1;
                }
                toks.push((Tok::Lower(text[i..j].to_string()), start));
                i = j;
            }
            other => {
                return Err(ParseError::syntax(
                    text,
                    i,
                    format!("a TPTP token, found `{other}`"),
                ))
            }
        }
    }
    Ok(toks)
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn slice_word(text: &str, i: usize, max: usize) -> String {
    text[i..].chars().take(max).collect()
}

struct Cursor<'a> {
    text: &'a str,
    toks: &'a [(Tok, usize)],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a (Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a (Tok, usize)> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eof_offset(&self) -> usize {
        self.text.len()
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<usize, ParseError> {
        match self.next() {
            Some((t, o)) if t == want => Ok(*o),
            Some((_, o)) => Err(ParseError::syntax(self.text, *o, what)),
            None => Err(ParseError::syntax(self.text, self.eof_offset(), what)),
        }
    }
}

fn parse_statement(
    text: &str,
    toks: &[(Tok, usize)],
    pos: &mut usize,
) -> Result<TptpStatement, ParseError> {
    let mut cur = Cursor { text, toks, pos: *pos };
    let head = cur.next();
    match head {
        Some((Tok::Lower(w), _)) if w == "fof" => {}
        Some((Tok::Lower(w), o)) if matches!(w.as_str(), "cnf" | "tff" | "thf" | "tpi" | "include") => {
            return Err(ParseError::unsupported(text, *o, format!("`{w}` statements")));
        }
        Some((_, o)) => return Err(ParseError::syntax(text, *o, "`fof`")),
        None => return Err(ParseError::syntax(text, cur.eof_offset(), "`fof`")),
    }
    cur.expect(&Tok::LParen, "`(` after `fof`")?;
    let name = match cur.next() {
        Some((Tok::Lower(w), _)) => w.clone(),
        Some((Tok::Unsupported(w), o)) => {
            return Err(ParseError::unsupported(text, *o, format!("formula name {w}")))
        }
        Some((_, o)) => return Err(ParseError::syntax(text, *o, "a formula name")),
        None => return Err(ParseError::syntax(text, cur.eof_offset(), "a formula name")),
    };
    cur.expect(&Tok::Comma, "`,` after the formula name")?;
    let role = match cur.next() {
        Some((Tok::Lower(w), _)) => w.clone(),
        Some((_, o)) => return Err(ParseError::syntax(text, *o, "a formula role")),
        None => return Err(ParseError::syntax(text, cur.eof_offset(), "a formula role")),
    };
    cur.expect(&Tok::Comma, "`,` after the formula role")?;
    let formula = parse_formula(&mut cur)?;
    cur.expect(&Tok::RParen, "`)` closing the statement")?;
    cur.expect(&Tok::Dot, "`.` ending the statement")?;
    *pos = cur.pos;
    Ok(TptpStatement { name, role, formula })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    And,
    Or,
    Implies,
    Iff,
}

impl BinOp {
    fn associative(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "implies",
            BinOp::Iff => "iff",
        }
    }
}

enum Pend {
    Neg(usize),
    Quant {
        symbol: &'static str,
        vars: Vec<(String, Span)>,
        start: usize,
    },
    Bin {
        op: BinOp,
        args: Vec<FormulaAst>,
        start: usize,
    },
    Paren(usize),
}

/// Iterative FOF formula parser. Quantifiers and negation bind to the next
/// unitary formula; `&`/`|` chains are flattened to n-ary connectives; mixed
/// or chained non-associative connectives require explicit parentheses.
fn parse_formula(cur: &mut Cursor<'_>) -> Result<FormulaAst, ParseError> {
    let text = cur.text;
    let mut pend: Vec<Pend> = Vec::new();
    let mut current: Option<FormulaAst> = None;

    loop {
        if current.is_none() {
            // expecting the start of a unitary formula
            if pend.len() >= MAX_DEPTH {
                let offset = cur.peek().map(|(_, o)| *o).unwrap_or(cur.eof_offset());
                return Err(ParseError::DepthExceeded { limit: MAX_DEPTH, offset });
            }
            match cur.next() {
                Some((Tok::Tilde, o)) => pend.push(Pend::Neg(*o)),
                Some((Tok::Bang, o)) => {
                    let vars = parse_binder_list(cur)?;
                    pend.push(Pend::Quant { symbol: "forall", vars, start: *o });
                }
                Some((Tok::Question, o)) => {
                    let vars = parse_binder_list(cur)?;
                    pend.push(Pend::Quant { symbol: "exists", vars, start: *o });
                }
                Some((Tok::LParen, o)) => pend.push(Pend::Paren(*o)),
                Some((Tok::Lower(w), o)) => {
                    let w = w.clone();
                    let o = *o;
                    current = Some(parse_atom_or_equality(cur, w, o)?);
                }
                Some((Tok::Upper(v), o)) => {
                    let v = v.clone();
                    let o = *o;
                    let lhs = variable(&v, o);
                    current = Some(parse_equality_tail(cur, lhs, o, true)?);
                }
                Some((Tok::Unsupported(w), o)) => {
                    return Err(ParseError::unsupported(text, *o, w.clone()))
                }
                Some((_, o)) => return Err(ParseError::syntax(text, *o, "a formula")),
                None => return Err(ParseError::syntax(text, cur.eof_offset(), "a formula")),
            }
            if current.is_some() {
                reduce_tight(&mut pend, &mut current);
            }
        } else {
            match cur.peek() {
                Some((Tok::Amp, o)) | Some((Tok::Pipe, o)) | Some((Tok::Arrow, o))
                | Some((Tok::Iff, o)) => {
                    let (tok, o) = (cur.next().unwrap().0.clone(), *o);
                    let op = match tok {
                        Tok::Amp => BinOp::And,
                        Tok::Pipe => BinOp::Or,
                        Tok::Arrow => BinOp::Implies,
                        _ => BinOp::Iff,
                    };
                    let lhs = current.take().unwrap();
                    match pend.last_mut() {
                        Some(Pend::Bin { op: top, args, .. }) => {
                            if *top == op && op.associative() {
                                args.push(lhs);
                            } else {
                                return Err(ParseError::syntax(
                                    text,
                                    o,
                                    "parentheses (mixed or chained binary connectives)",
                                ));
                            }
                        }
                        _ => pend.push(Pend::Bin { op, args: vec![lhs], start: o }),
                    }
                }
                Some((Tok::RParen, _)) => {
                    // close an explicit group if one is open; otherwise the
                    // paren belongs to the enclosing fof(...) statement
                    let has_group = pend.iter().any(|p| matches!(p, Pend::Paren(_)));
                    if !has_group {
                        break;
                    }
                    let (_, o) = cur.next().unwrap();
                    if let Some(Pend::Bin { .. }) = pend.last() {
                        finish_bin(&mut pend, &mut current);
                    }
                    match pend.pop() {
                        Some(Pend::Paren(_)) => {}
                        _ => return Err(ParseError::syntax(text, *o, "a matching `(`")),
                    }
                    reduce_tight(&mut pend, &mut current);
                }
                Some((Tok::Unsupported(w), o)) => {
                    return Err(ParseError::unsupported(text, *o, w.clone()))
                }
                _ => break,
            }
        }
    }

    if let Some(Pend::Bin { .. }) = pend.last() {
        finish_bin(&mut pend, &mut current);
    }
    match pend.last() {
        None => Ok(current.unwrap()),
        Some(Pend::Paren(o)) => Err(ParseError::syntax(text, *o, "`)` closing this group")),
        _ => Err(ParseError::syntax(text, cur.eof_offset(), "a complete formula")),
    }
}

/// Pops negation and quantifier wrappers around a completed unitary formula.
fn reduce_tight(pend: &mut Vec<Pend>, current: &mut Option<FormulaAst>) {
    while let Some(top) = pend.last() {
        match top {
            Pend::Neg(_) => {
                let Some(Pend::Neg(start)) = pend.pop() else { unreachable!() };
                let body = current.take().unwrap();
                let end = body.span.end;
                let mut n = FormulaAst::new(NodeKind::Connective, "not", vec![body]);
                n.span = Span::new(start, end);
                *current = Some(n);
            }
            Pend::Quant { .. } => {
                let Some(Pend::Quant { symbol, vars, start }) = pend.pop() else {
                    unreachable!()
                };
                let body = current.take().unwrap();
                let end = body.span.end;
                let mut children: Vec<FormulaAst> = vars
                    .into_iter()
                    .map(|(name, span)| {
                        let mut v = FormulaAst::new(NodeKind::Variable, name, vec![]);
                        v.span = span;
                        v
                    })
                    .collect();
                children.push(body);
                let mut n = FormulaAst::new(NodeKind::Quantifier, symbol, children);
                n.span = Span::new(start, end);
                *current = Some(n);
            }
            _ => break,
        }
    }
}

fn finish_bin(pend: &mut Vec<Pend>, current: &mut Option<FormulaAst>) {
    let Some(Pend::Bin { op, mut args, start }) = pend.pop() else {
        unreachable!()
    };
    args.push(current.take().unwrap());
    let end = args.last().map(|a| a.span.end).unwrap_or(start);
    let mut n = FormulaAst::new(NodeKind::Connective, op.symbol(), args);
    n.span = Span::new(start, end);
    *current = Some(n);
}

fn parse_binder_list(cur: &mut Cursor<'_>) -> Result<Vec<(String, Span)>, ParseError> {
    let text = cur.text;
    cur.expect(&Tok::LBracket, "`[` starting the binder list")?;
    let mut vars: Vec<(String, Span)> = Vec::new();
    loop {
        match cur.next() {
            Some((Tok::Upper(v), o)) => {
                if vars.iter().any(|(name, _)| name == v) {
                    return Err(ParseError::syntax(
                        text,
                        *o,
                        format!("distinct variable names (`{v}` repeats)"),
                    ));
                }
                vars.push((v.clone(), Span::new(*o, *o + v.len())));
            }
            Some((_, o)) => return Err(ParseError::syntax(text, *o, "a variable (upper-case word)")),
            None => return Err(ParseError::syntax(text, cur.eof_offset(), "a variable")),
        }
        match cur.next() {
            Some((Tok::Comma, _)) => continue,
            Some((Tok::RBracket, _)) => break,
            Some((_, o)) => return Err(ParseError::syntax(text, *o, "`,` or `]`")),
            None => return Err(ParseError::syntax(text, cur.eof_offset(), "`,` or `]`")),
        }
    }
    cur.expect(&Tok::Colon, "`:` after the binder list")?;
    Ok(vars)
}

/// Parses an application starting with a lower-case word; the result is a
/// predicate unless an equality operator follows, in which case it is
/// re-read as a term.
fn parse_atom_or_equality(
    cur: &mut Cursor<'_>,
    word: String,
    start: usize,
) -> Result<FormulaAst, ParseError> {
    let args = if matches!(cur.peek(), Some((Tok::LParen, _))) {
        cur.next();
        parse_term_list(cur)?
    } else {
        Vec::new()
    };
    if matches!(cur.peek(), Some((Tok::Equal, _)) | Some((Tok::NotEqual, _))) {
        let end = args.last().map(|a| a.span.end).unwrap_or(start + word.len());
        let lhs = make_term(word, args, start, end);
        parse_equality_tail(cur, lhs, start, false)
    } else {
        let end = args.last().map(|a| a.span.end).unwrap_or(start + word.len());
        let mut n = FormulaAst::new(NodeKind::Predicate, word, args);
        n.span = Span::new(start, end);
        Ok(n)
    }
}

/// After a term lhs: `= rhs` or `!= rhs`. `require` demands the operator
/// (a bare variable is not a formula).
fn parse_equality_tail(
    cur: &mut Cursor<'_>,
    lhs: FormulaAst,
    start: usize,
    require: bool,
) -> Result<FormulaAst, ParseError> {
    let text = cur.text;
    let negated = match cur.peek() {
        Some((Tok::Equal, _)) => {
            cur.next();
            false
        }
        Some((Tok::NotEqual, _)) => {
            cur.next();
            true
        }
        _ if require => {
            let o = cur.peek().map(|(_, o)| *o).unwrap_or(cur.eof_offset());
            return Err(ParseError::syntax(
                text,
                o,
                "`=` or `!=` (a bare variable is not a formula)",
            ));
        }
        _ => return Ok(lhs),
    };
    let rhs = parse_term(cur)?;
    let end = rhs.span.end;
    let mut eq = FormulaAst::new(NodeKind::Predicate, "=", vec![lhs, rhs]);
    eq.span = Span::new(start, end);
    Ok(if negated {
        let mut n = FormulaAst::new(NodeKind::Connective, "not", vec![eq]);
        n.span = Span::new(start, end);
        n
    } else {
        eq
    })
}

/// Comma-separated terms up to the closing `)`.
fn parse_term_list(cur: &mut Cursor<'_>) -> Result<Vec<FormulaAst>, ParseError> {
    let text = cur.text;
    let mut args = Vec::new();
    loop {
        args.push(parse_term(cur)?);
        match cur.next() {
            Some((Tok::Comma, _)) => continue,
            Some((Tok::RParen, _)) => return Ok(args),
            Some((_, o)) => return Err(ParseError::syntax(text, *o, "`,` or `)`")),
            None => return Err(ParseError::syntax(text, cur.eof_offset(), "`,` or `)`")),
        }
    }
}

/// Iterative term parser: `term := Variable | constant | f(term, ...)`.
fn parse_term(cur: &mut Cursor<'_>) -> Result<FormulaAst, ParseError> {
    let text = cur.text;
    // stack of (function name, collected args, start offset)
    let mut frames: Vec<(String, Vec<FormulaAst>, usize)> = Vec::new();
    loop {
        if frames.len() >= MAX_DEPTH {
            let offset = cur.peek().map(|(_, o)| *o).unwrap_or(cur.eof_offset());
            return Err(ParseError::DepthExceeded { limit: MAX_DEPTH, offset });
        }
        let mut leaf = match cur.next() {
            Some((Tok::Upper(v), o)) => variable(v, *o),
            Some((Tok::Lower(w), o)) => {
                if matches!(cur.peek(), Some((Tok::LParen, _))) {
                    cur.next();
                    frames.push((w.clone(), Vec::new(), *o));
                    continue;
                }
                make_term(w.clone(), Vec::new(), *o, *o + w.len())
            }
            Some((Tok::Unsupported(w), o)) => {
                return Err(ParseError::unsupported(text, *o, w.clone()))
            }
            Some((_, o)) => return Err(ParseError::syntax(text, *o, "a term")),
            None => return Err(ParseError::syntax(text, cur.eof_offset(), "a term")),
        };
        // fold the completed leaf into enclosing application frames
        loop {
            match frames.last_mut() {
                None => return Ok(leaf),
                Some((_, args, _)) => args.push(leaf),
            }
            match cur.next() {
                Some((Tok::Comma, _)) => break, // next argument
                Some((Tok::RParen, o)) => {
                    let (name, args, start) = frames.pop().unwrap();
                    leaf = make_term(name, args, start, *o + 1);
                }
                Some((_, o)) => return Err(ParseError::syntax(text, *o, "`,` or `)`")),
                None => return Err(ParseError::syntax(text, cur.eof_offset(), "`,` or `)`")),
            }
        }
    }
}

fn variable(name: &str, offset: usize) -> FormulaAst {
    let mut v = FormulaAst::new(NodeKind::Variable, name, vec![]);
    v.span = Span::new(offset, offset + name.len());
    v
}

fn make_term(name: String, args: Vec<FormulaAst>, start: usize, end: usize) -> FormulaAst {
    let kind = if args.is_empty() {
        NodeKind::Constant
    } else {
        NodeKind::Function
    };
    let mut n = FormulaAst::new(kind, name, args);
    n.span = Span::new(start, end);
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{alpha_normalize, parse_sexpr, ArityClass};

    #[test]
    fn basic_statement() {
        let stmts = parse_tptp_fof("fof(ax1, axiom, ![X]: p(X)).").unwrap();
        assert_eq!(stmts.len(), 1);
        assert_eq!(stmts[0].name, "ax1");
        assert_eq!(stmts[0].role, "axiom");
        let expected = parse_sexpr("(forall (X) (p X))").unwrap();
        assert_eq!(stmts[0].formula, expected);
    }

    #[test]
    fn equality_and_implication() {
        let stmts = parse_tptp_fof("fof(c, conjecture, (a = b) => p(a)).").unwrap();
        let f = &stmts[0].formula;
        assert_eq!(f.symbol, "implies");
        let eq = &f.children[0];
        assert_eq!(eq.symbol, "=");
        assert_eq!(eq.arity_class(), ArityClass::Unordered);
        assert_eq!(eq.children[0].kind, NodeKind::Constant);
        assert_eq!(f.children[1].symbol, "p");
    }

    #[test]
    fn disequality_desugars() {
        let stmts = parse_tptp_fof("fof(a, axiom, a != b).").unwrap();
        let f = &stmts[0].formula;
        assert_eq!(f.symbol, "not");
        assert_eq!(f.children[0].symbol, "=");
    }

    #[test]
    fn unsupported_constructs() {
        assert!(matches!(
            parse_tptp_fof("fof(t, axiom, $true)."),
            Err(ParseError::UnsupportedConstruct { .. })
        ));
        assert!(matches!(
            parse_tptp_fof("cnf(c, axiom, p)."),
            Err(ParseError::UnsupportedConstruct { .. })
        ));
        assert!(matches!(
            parse_tptp_fof("fof(t, axiom, p <= q)."),
            Err(ParseError::UnsupportedConstruct { .. })
        ));
    }

    #[test]
    fn associative_chains_flatten() {
        let stmts = parse_tptp_fof("fof(a, axiom, p & q & r).").unwrap();
        let f = &stmts[0].formula;
        assert_eq!(f.symbol, "and");
        assert_eq!(f.children.len(), 3);
    }

    #[test]
    fn mixed_connectives_need_parens() {
        assert!(parse_tptp_fof("fof(a, axiom, p & q | r).").is_err());
        assert!(parse_tptp_fof("fof(a, axiom, p => q => r).").is_err());
        assert!(parse_tptp_fof("fof(a, axiom, (p & q) | r).").is_ok());
    }

    #[test]
    fn quantifier_scope_is_unitary() {
        let stmts = parse_tptp_fof("fof(a, axiom, ![X]: p(X) & q).").unwrap();
        let f = &stmts[0].formula;
        assert_eq!(f.symbol, "and");
        assert_eq!(f.children[0].symbol, "forall");
    }

    #[test]
    fn negation_binds_tightly() {
        let stmts = parse_tptp_fof("fof(a, axiom, ~p & q).").unwrap();
        let f = &stmts[0].formula;
        assert_eq!(f.symbol, "and");
        assert_eq!(f.children[0].symbol, "not");
    }

    #[test]
    fn nested_terms_and_multi_binders() {
        let stmts =
            parse_tptp_fof("fof(a, axiom, ![X,Y]: (p(f(X, g(Y)), c) | X = Y)).").unwrap();
        let expected =
            parse_sexpr("(forall (X Y) (or (p (f X (g Y)) (c)) (= X Y)))").unwrap();
        assert_eq!(stmts[0].formula, expected);
    }

    #[test]
    fn comments_and_multiple_statements() {
        let text = "% header\nfof(a1, axiom, p).\n% middle\nfof(a2, axiom, q => r).\n";
        let stmts = parse_tptp_fof(text).unwrap();
        assert_eq!(stmts.len(), 2);
        assert_eq!(stmts[1].formula.symbol, "implies");
    }

    #[test]
    fn sexpr_round_trip_matches_normalized_ast() {
        for text in [
            "fof(a, axiom, ![X,Y]: (p(f(X), Y) & q(c))).",
            "fof(b, axiom, ~(a = b) | r(Z)).",
            "fof(c, conjecture, ?[V]: (p(V) <=> q(V))).",
        ] {
            let stmts = parse_tptp_fof(text).unwrap();
            let direct = alpha_normalize(&stmts[0].formula);
            let printed = direct.to_sexpr();
            let reparsed = alpha_normalize(&parse_sexpr(&printed).unwrap());
            assert_eq!(direct, reparsed, "round trip failed for {text}");
        }
    }
}
