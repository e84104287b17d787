//! Lexer and recursive-descent parser for the property language.
//!
//! Precedence, loosest first: implication (`->`, `|->`, `|=>`, right
//! associative), disjunction, conjunction (and `a ##N b`), until (right
//! associative), then unary operators and comparisons.

use std::fmt;

use thiserror::Error;

use super::{Atom, CmpOp, Formula, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: syntax error near '{near}': {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub near: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    SysFn(String),
    Num(i64),
    Delay(u32),
    LParen,
    RParen,
    Semi,
    Colon,
    At,
    Comma,
    Not,
    AndAnd,
    OrOr,
    Arrow,
    OverlapImpl,
    NonOverlapImpl,
    Plus,
    Minus,
    Cmp(CmpOp),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::SysFn(s) => write!(f, "${s}"),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Delay(n) => write!(f, "##{n}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Semi => write!(f, ";"),
            Tok::Colon => write!(f, ":"),
            Tok::At => write!(f, "@"),
            Tok::Comma => write!(f, ","),
            Tok::Not => write!(f, "!"),
            Tok::AndAnd => write!(f, "&&"),
            Tok::OrOr => write!(f, "||"),
            Tok::Arrow => write!(f, "->"),
            Tok::OverlapImpl => write!(f, "|->"),
            Tok::NonOverlapImpl => write!(f, "|=>"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Cmp(op) => write!(f, "{}", op.symbol()),
            Tok::Eof => write!(f, "<end of input>"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, column, near: String, message: &str| ParseError {
        line,
        column,
        near,
        message: message.to_string(),
    };

    while i < chars.len() {
        let c = chars[i];
        let peek = |k: usize| chars.get(i + k).copied().unwrap_or('\0');
        let (start_line, start_col) = (line, col);

        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // line comments: `//` and `--`
        if (c == '/' && peek(1) == '/') || (c == '-' && peek(1) == '-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && peek(1) == '*' {
            i += 2;
            col += 2;
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            i += 2;
            col += 2;
            continue;
        }

        let take = |n: usize, tok: Tok, out: &mut Vec<Spanned>| {
            out.push(Spanned { tok, line: start_line, column: start_col });
            n
        };

        let three: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let n = match () {
            _ if three == "|->" => take(3, Tok::OverlapImpl, &mut out),
            _ if three == "|=>" => take(3, Tok::NonOverlapImpl, &mut out),
            _ if three == "===" => take(3, Tok::Cmp(CmpOp::Eq), &mut out),
            _ if three == "!==" => take(3, Tok::Cmp(CmpOp::Ne), &mut out),
            _ if two == "==" => take(2, Tok::Cmp(CmpOp::Eq), &mut out),
            _ if two == "!=" => take(2, Tok::Cmp(CmpOp::Ne), &mut out),
            _ if two == "<=" => take(2, Tok::Cmp(CmpOp::Le), &mut out),
            _ if two == ">=" => take(2, Tok::Cmp(CmpOp::Ge), &mut out),
            _ if two == "&&" => take(2, Tok::AndAnd, &mut out),
            _ if two == "||" => take(2, Tok::OrOr, &mut out),
            _ if two == "->" => take(2, Tok::Arrow, &mut out),
            _ if two == "##" => {
                let mut j = i + 2;
                let mut digits = String::new();
                while j < chars.len() && chars[j].is_ascii_digit() {
                    digits.push(chars[j]);
                    j += 1;
                }
                let n: u32 = digits
                    .parse()
                    .map_err(|_| err(start_line, start_col, "##".into(), "expected a cycle count after ##"))?;
                take(j - i, Tok::Delay(n), &mut out)
            }
            _ => match c {
                '<' => take(1, Tok::Cmp(CmpOp::Lt), &mut out),
                '>' => take(1, Tok::Cmp(CmpOp::Gt), &mut out),
                '&' => take(1, Tok::AndAnd, &mut out),
                '|' => take(1, Tok::OrOr, &mut out),
                '!' | '~' => take(1, Tok::Not, &mut out),
                '(' => take(1, Tok::LParen, &mut out),
                ')' => take(1, Tok::RParen, &mut out),
                ';' => take(1, Tok::Semi, &mut out),
                ':' => take(1, Tok::Colon, &mut out),
                '@' => take(1, Tok::At, &mut out),
                ',' => take(1, Tok::Comma, &mut out),
                '+' => take(1, Tok::Plus, &mut out),
                '-' => take(1, Tok::Minus, &mut out),
                '$' => {
                    let mut j = i + 1;
                    while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    let name: String = chars[i + 1..j].iter().collect();
                    if name.is_empty() {
                        return Err(err(start_line, start_col, "$".into(), "expected a system function name"));
                    }
                    take(j - i, Tok::SysFn(name), &mut out)
                }
                '\'' => {
                    // unsized fill literal '0 / '1
                    match peek(1) {
                        '0' => take(2, Tok::Num(0), &mut out),
                        '1' => take(2, Tok::Num(1), &mut out),
                        other => {
                            return Err(err(start_line, start_col, format!("'{other}"), "unsupported literal"))
                        }
                    }
                }
                c if c.is_ascii_digit() => {
                    let (value, len) = lex_number(&chars[i..])
                        .ok_or_else(|| err(start_line, start_col, c.to_string(), "malformed number"))?;
                    take(len, Tok::Num(value), &mut out)
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '.') {
                        j += 1;
                    }
                    // bit select `name[3]` is part of the identifier
                    if chars.get(j) == Some(&'[') {
                        let mut k = j + 1;
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        if k > j + 1 && chars.get(k) == Some(&']') {
                            j = k + 1;
                        }
                    }
                    let name: String = chars[i..j].iter().collect();
                    take(j - i, Tok::Ident(name), &mut out)
                }
                other => return Err(err(start_line, start_col, other.to_string(), "unexpected character")),
            },
        };
        i += n;
        col += n;
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

/// Decimal or sized Verilog literal (`4'b1010`, `8'hff`, `3'd5`).
fn lex_number(chars: &[char]) -> Option<(i64, usize)> {
    let mut j = 0;
    while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '_') {
        j += 1;
    }
    let digits: String = chars[..j].iter().filter(|c| **c != '_').collect();
    if chars.get(j) != Some(&'\'') {
        return digits.parse().ok().map(|v| (v, j));
    }
    let radix = match chars.get(j + 1)?.to_ascii_lowercase() {
        'b' => 2,
        'o' => 8,
        'd' => 10,
        'h' => 16,
        _ => return None,
    };
    let mut k = j + 2;
    while k < chars.len() && (chars[k].is_ascii_hexdigit() || chars[k] == '_') {
        k += 1;
    }
    let body: String = chars[j + 2..k].iter().filter(|c| **c != '_').collect();
    i64::from_str_radix(&body, radix).ok().map(|v| (v, k))
}

/// Intermediate parse result: comparisons make a bare identifier ambiguous
/// until the following token is seen.
enum Node {
    F(Formula),
    T(Term),
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            near: s.tok.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected '{tok}'")))
        }
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}'")))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    /// True when the input opens with a `property`/`assert` statement.
    pub(crate) fn starts_block(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "property" || s == "assert" || s == "initial")
            || matches!((self.peek(), self.peek_at(1), self.peek_at(2)),
                (Tok::Ident(_), Tok::Colon, Tok::Ident(s)) if s == "assert")
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn formula(&mut self) -> Result<Formula, ParseError> {
        let n = self.implication()?;
        self.to_formula(n)
    }

    fn to_formula(&self, n: Node) -> Result<Formula, ParseError> {
        match n {
            Node::F(f) => Ok(f),
            Node::T(Term::Var(v)) => Ok(Formula::Atom(Atom::Var(v))),
            Node::T(Term::Past(v)) => Ok(Formula::past(Formula::atom(v))),
            Node::T(Term::Const(c)) => Ok(Formula::constant(c != 0)),
            Node::T(t) => Err(self.error(format!("arithmetic term '{t}' used as a boolean"))),
        }
    }

    fn to_term(&self, n: Node) -> Result<Term, ParseError> {
        match n {
            Node::T(t) => Ok(t),
            Node::F(Formula::Atom(Atom::Var(v))) => Ok(Term::Var(v)),
            Node::F(f) => Err(self.error(format!("boolean formula '{f}' used as an arithmetic term"))),
        }
    }

    fn implication(&mut self) -> Result<Node, ParseError> {
        let lhs = self.disjunction()?;
        let op = self.peek().clone();
        match op {
            Tok::Arrow | Tok::OverlapImpl | Tok::NonOverlapImpl => {
                self.bump();
                let a = self.to_formula(lhs)?;
                let rhs = self.implication()?;
                let b = self.to_formula(rhs)?;
                let b = if op == Tok::NonOverlapImpl { Formula::next(b) } else { b };
                Ok(Node::F(Formula::implies(a, b)))
            }
            _ => Ok(lhs),
        }
    }

    fn disjunction(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::OrOr || self.is_keyword("or") {
            self.bump();
            let a = self.to_formula(lhs)?;
            let rhs = self.conjunction()?;
            let b = self.to_formula(rhs)?;
            lhs = Node::F(Formula::or(a, b));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.until()?;
        loop {
            let delay = match self.peek() {
                Tok::AndAnd => 0,
                Tok::Ident(s) if s == "and" => 0,
                Tok::Delay(n) => *n,
                _ => break,
            };
            self.bump();
            let a = self.to_formula(lhs)?;
            let rhs = self.until()?;
            let mut b = self.to_formula(rhs)?;
            for _ in 0..delay {
                b = Formula::next(b);
            }
            lhs = Node::F(Formula::and(a, b));
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Node, ParseError> {
        let lhs = self.unary()?;
        if self.is_keyword("U") || self.is_keyword("until") || self.is_keyword("s_until") {
            self.bump();
            let a = self.to_formula(lhs)?;
            let rhs = self.until()?;
            let b = self.to_formula(rhs)?;
            return Ok(Node::F(Formula::until(a, b)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let wrap: Option<fn(Formula) -> Formula> = match self.peek() {
            Tok::Not => Some(Formula::not),
            Tok::Ident(s) => match s.as_str() {
                "not" => Some(Formula::not),
                "G" | "always" | "s_always" => Some(Formula::always),
                "F" | "eventually" | "s_eventually" => Some(Formula::eventually),
                "X" | "nexttime" | "s_nexttime" => Some(Formula::next),
                _ => None,
            },
            Tok::Delay(n) => {
                let n = *n;
                self.bump();
                let inner = self.unary()?;
                let mut f = self.to_formula(inner)?;
                for _ in 0..n {
                    f = Formula::next(f);
                }
                return Ok(Node::F(f));
            }
            _ => None,
        };
        if let Some(wrap) = wrap {
            self.bump();
            let inner = self.unary()?;
            let f = self.to_formula(inner)?;
            return Ok(Node::F(wrap(f)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.primary()?;
        if matches!(self.peek(), Tok::Plus | Tok::Minus) {
            lhs = Node::T(self.term_tail(lhs)?);
        }
        if let Tok::Cmp(op) = *self.peek() {
            self.bump();
            let l = self.to_term(lhs)?;
            let first = self.primary()?;
            let r = self.term_tail(first)?;
            return Ok(Node::F(Formula::Atom(Atom::Cmp(l, op, r))));
        }
        Ok(lhs)
    }

    fn term_tail(&mut self, first: Node) -> Result<Term, ParseError> {
        let mut acc = self.to_term(first)?;
        loop {
            let add = match self.peek() {
                Tok::Plus => true,
                Tok::Minus => false,
                _ => break,
            };
            self.bump();
            let next = self.primary()?;
            let rhs = self.to_term(next)?;
            acc = if add {
                Term::Add(Box::new(acc), Box::new(rhs))
            } else {
                Term::Sub(Box::new(acc), Box::new(rhs))
            };
        }
        Ok(acc)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.implication()?;
                // a parenthesised term may continue as arithmetic
                let inner = if matches!(self.peek(), Tok::Plus | Tok::Minus) {
                    Node::T(self.term_tail(inner)?)
                } else {
                    inner
                };
                self.expect(&Tok::RParen)?;
                Ok(inner)
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Node::T(Term::Const(n)))
            }
            Tok::SysFn(name) => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let inner = self.implication()?;
                self.expect(&Tok::RParen)?;
                match name.as_str() {
                    "past" => match inner {
                        Node::T(Term::Var(v)) | Node::F(Formula::Atom(Atom::Var(v))) => Ok(Node::T(Term::Past(v))),
                        other => {
                            let f = self.to_formula(other)?;
                            Ok(Node::F(Formula::past(f)))
                        }
                    },
                    "stable" => {
                        let f = self.to_formula(inner)?;
                        Ok(Node::F(Formula::stable(f)))
                    }
                    other => Err(self.error(format!("unsupported system function ${other}"))),
                }
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Node::F(Formula::True))
                }
                "false" => {
                    self.bump();
                    Ok(Node::F(Formula::False))
                }
                _ if is_reserved(&s) => Err(self.error("unexpected keyword")),
                _ => {
                    self.bump();
                    Ok(Node::T(Term::Var(s)))
                }
            },
            _ => Err(self.error("expected an expression")),
        }
    }
}

pub(crate) fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "G" | "F"
            | "X"
            | "U"
            | "not"
            | "and"
            | "or"
            | "always"
            | "s_always"
            | "eventually"
            | "s_eventually"
            | "nexttime"
            | "s_nexttime"
            | "until"
            | "s_until"
            | "true"
            | "false"
            | "property"
            | "endproperty"
            | "assert"
            | "disable"
            | "iff"
            | "posedge"
            | "negedge"
            | "initial"
    )
}

/// Parses a property. Accepts either a bare formula (`G (p -> F q)`) or a
/// complete `property ... endproperty` block, in which case the block's
/// asserted formula is returned.
pub fn parse_property(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    if p.starts_block() {
        return super::sva::parse_property_block(text).map(|p| p.formula);
    }
    let f = p.formula()?;
    if !p.at_eof() {
        return Err(p.error("unexpected trailing input"));
    }
    f.validate().map_err(|e| ParseError {
        line: 1,
        column: 1,
        near: text.trim().chars().take(24).collect(),
        message: e.to_string(),
    })?;
    Ok(f)
}

/// Parses a state expression used by model update rules. Arithmetic results
/// come back as `Err(term)` so the caller can decide how to interpret them.
pub fn parse_expr(text: &str) -> Result<Result<Formula, Term>, ParseError> {
    let mut p = Parser::new(text)?;
    let n = p.implication()?;
    let n = if matches!(p.peek(), Tok::Plus | Tok::Minus) {
        Node::T(p.term_tail(n)?)
    } else {
        n
    };
    if !p.at_eof() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(match n {
        Node::F(f) => Ok(f),
        Node::T(t) => Err(t),
    })
}
