//! SVA property blocks: rendering and parsing of
//! `property ... endproperty assert property(...)` text.
//!
//! A concurrent `assert property` is checked at every clock tick, so a block's
//! body `b` denotes `G b`. `initial assert property` checks only the first
//! tick and denotes `b` itself; the emitter uses it for formulas that are not
//! rooted in `G`, which keeps emission and parsing exact inverses.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::parse::{ParseError, Parser, Tok};
use super::Formula;

/// A named, clocked property as written in a property file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub name: String,
    pub clock: Option<String>,
    /// `disable iff` condition. Modelled as the path assumption `G ¬disable`.
    pub disable: Option<Formula>,
    pub formula: Formula,
}

impl Property {
    pub fn new(name: impl Into<String>, formula: Formula) -> Self {
        Property { name: name.into(), clock: None, disable: None, formula }
    }

    pub fn assumption(&self) -> Option<Formula> {
        self.disable.as_ref().map(|d| Formula::always(Formula::not(d.clone())))
    }

    pub fn to_sva(&self) -> SvaText {
        emit_sva(
            &self.formula,
            &self.name,
            self.clock.as_deref().unwrap_or("clk"),
            self.disable.as_ref(),
        )
    }
}

/// Rendered SVA for one property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvaText {
    pub name: String,
    pub clock: String,
    pub disable: Option<String>,
    pub body: String,
    pub text: String,
}

impl fmt::Display for SvaText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Renders `f` as an SVA property block with `|->`, `|=>`, `$past` and
/// `$stable` sugar where the tree allows it.
pub fn emit_sva(f: &Formula, name: &str, clock: &str, disable: Option<&Formula>) -> SvaText {
    let (body_formula, initial) = match f {
        Formula::Always(inner) => (&**inner, false),
        other => (other, true),
    };
    let body = sva_body(body_formula);
    let disable_text = disable.map(|d| sva_string(d));
    let mut text = format!("property {name};\n  @(posedge {clock})");
    if let Some(d) = &disable_text {
        text.push_str(&format!(" disable iff ({d})"));
    }
    text.push_str(&format!(" {body};\nendproperty\n"));
    if initial {
        text.push_str("initial ");
    }
    text.push_str(&format!("assert property ({name});"));
    SvaText {
        name: name.to_string(),
        clock: clock.to_string(),
        disable: disable_text,
        body,
        text,
    }
}

/// Top-level implications are printed without their outer parentheses.
fn sva_body(f: &Formula) -> String {
    match f {
        Formula::Implies(a, b) => match &**b {
            Formula::Next(c) => format!("{} |=> {}", sva_string(a), sva_string(c)),
            _ => format!("{} |-> {}", sva_string(a), sva_string(b)),
        },
        other => sva_string(other),
    }
}

fn sva_string(f: &Formula) -> String {
    use Formula::*;
    match f {
        True => "1'b1".into(),
        False => "1'b0".into(),
        Atom(a) => a.to_string(),
        Not(a) => format!("!{}", sva_string(a)),
        And(a, b) => format!("({} && {})", sva_string(a), sva_string(b)),
        Or(a, b) => format!("({} || {})", sva_string(a), sva_string(b)),
        Implies(..) => format!("({})", sva_body(f)),
        Until(a, b) => format!("({} s_until {})", sva_string(a), sva_string(b)),
        Next(a) => format!("nexttime {}", sva_string(a)),
        Eventually(a) => format!("s_eventually {}", sva_string(a)),
        Always(a) => format!("always {}", sva_string(a)),
        Past(a) => format!("$past({})", sva_string(a)),
        Stable(a) => format!("$stable({})", sva_string(a)),
    }
}

struct Declared {
    clock: Option<String>,
    disable: Option<Formula>,
    body: Formula,
}

/// Parses a single property block (plus its `assert` statement).
pub fn parse_property_block(text: &str) -> Result<Property, ParseError> {
    let mut props = parse_blocks(text)?;
    match props.len() {
        1 => Ok(props.remove(0)),
        0 => Err(ParseError {
            line: 1,
            column: 1,
            near: String::new(),
            message: "no property block found".into(),
        }),
        _ => Err(ParseError {
            line: 1,
            column: 1,
            near: props[1].name.clone(),
            message: "expected exactly one property block".into(),
        }),
    }
}

/// Parses a property file. Files made of `property ... endproperty` blocks
/// are read as SVA; otherwise every non-empty line is a formula, optionally
/// prefixed with `name:`.
pub fn parse_property_file(text: &str) -> Result<Vec<Property>, ParseError> {
    let probe = Parser::new(text)?;
    if probe.starts_block() {
        return parse_blocks(text);
    }
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut p = Parser::new(line).map_err(|e| relocate(e, lineno))?;
        if p.at_eof() {
            continue;
        }
        let name = if matches!((p.peek(), p.peek_at(1)), (Tok::Ident(_), Tok::Colon)) {
            let n = p.ident().map_err(|e| relocate(e, lineno))?;
            p.bump();
            n
        } else {
            format!("p{}", out.len() + 1)
        };
        let formula = p.formula().map_err(|e| relocate(e, lineno))?;
        if !p.at_eof() {
            return Err(relocate(p.error("unexpected trailing input"), lineno));
        }
        formula.validate().map_err(|e| relocate(p.error(e.to_string()), lineno))?;
        out.push(Property::new(name, formula));
    }
    Ok(out)
}

fn relocate(mut e: ParseError, lineno: usize) -> ParseError {
    e.line += lineno;
    e
}

fn parse_blocks(text: &str) -> Result<Vec<Property>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut declared: BTreeMap<String, Declared> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut initial_flags: BTreeMap<String, bool> = BTreeMap::new();
    let mut inline: Vec<Property> = Vec::new();

    while !p.at_eof() {
        if p.is_keyword("property") {
            p.bump();
            let name = p.ident()?;
            if *p.peek() == Tok::LParen && *p.peek_at(1) == Tok::RParen {
                p.bump();
                p.bump();
            }
            p.expect(&Tok::Semi)?;
            let (clock, disable, body) = spec_body(&mut p)?;
            if *p.peek() == Tok::Semi {
                p.bump();
            }
            p.expect_keyword("endproperty")?;
            if *p.peek() == Tok::Colon {
                p.bump();
                p.ident()?;
            }
            if declared.contains_key(&name) {
                return Err(p.error(format!("property '{name}' declared twice")));
            }
            order.push(name.clone());
            declared.insert(name, Declared { clock, disable, body });
            continue;
        }

        let initial = if p.is_keyword("initial") {
            p.bump();
            true
        } else {
            false
        };
        let label = if matches!((p.peek(), p.peek_at(1)), (Tok::Ident(s), Tok::Colon) if s != "assert") {
            let l = p.ident()?;
            p.bump();
            Some(l)
        } else {
            None
        };
        p.expect_keyword("assert")?;
        p.expect_keyword("property")?;
        p.expect(&Tok::LParen)?;
        let referenced = match (p.peek().clone(), p.peek_at(1).clone()) {
            (Tok::Ident(n), Tok::RParen) if declared.contains_key(&n) => Some(n),
            _ => None,
        };
        if let Some(name) = referenced {
            p.bump();
            p.expect(&Tok::RParen)?;
            initial_flags.insert(name, initial);
        } else {
            let (clock, disable, body) = spec_body(&mut p)?;
            p.expect(&Tok::RParen)?;
            let name = label.unwrap_or_else(|| format!("assert_{}", inline.len() + 1));
            inline.push(finish(name, Declared { clock, disable, body }, initial));
        }
        if *p.peek() == Tok::Semi {
            p.bump();
        }
    }

    let mut out: Vec<Property> = order
        .into_iter()
        .map(|name| {
            let d = declared.remove(&name).expect("declared");
            let initial = initial_flags.get(&name).copied().unwrap_or(false);
            finish(name, d, initial)
        })
        .collect();
    out.extend(inline);
    for prop in &out {
        if let Err(e) = prop.formula.validate() {
            return Err(ParseError {
                line: 1,
                column: 1,
                near: prop.name.clone(),
                message: e.to_string(),
            });
        }
    }
    Ok(out)
}

fn finish(name: String, d: Declared, initial: bool) -> Property {
    let formula = if initial { d.body } else { Formula::always(d.body) };
    Property { name, clock: d.clock, disable: d.disable, formula }
}

type SpecBody = (Option<String>, Option<Formula>, Formula);

fn spec_body(p: &mut Parser) -> Result<SpecBody, ParseError> {
    let mut clock = None;
    if *p.peek() == Tok::At {
        p.bump();
        p.expect(&Tok::LParen)?;
        if p.is_keyword("posedge") || p.is_keyword("negedge") {
            p.bump();
        }
        clock = Some(p.ident()?);
        p.expect(&Tok::RParen)?;
    }
    let mut disable = None;
    if p.is_keyword("disable") {
        p.bump();
        p.expect_keyword("iff")?;
        p.expect(&Tok::LParen)?;
        let d = p.formula()?;
        p.expect(&Tok::RParen)?;
        disable = Some(d);
    }
    let body = p.formula()?;
    Ok((clock, disable, body))
}
