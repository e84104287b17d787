//! Temporal property language: an LTL core with a one-step past fragment and
//! SVA-flavoured surface syntax.
//!
//! Formulas are plain immutable trees. Every transformation here returns a new
//! tree and leaves its input untouched, so a `Formula` can be shared freely
//! between checker workers.

mod parse;
mod sva;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_expr, parse_property, ParseError};
pub use sva::{emit_sva, parse_property_block, parse_property_file, Property, SvaText};

/// Integer-valued term used inside comparison atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    /// Value of the variable one step earlier.
    Past(String),
    Const(i64),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// A state predicate. Either a (possibly bit-selected) variable read as a
/// boolean, or a comparison between integer terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    Var(String),
    Cmp(Term, CmpOp, Term),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    /// `$past(e)`: value of the state formula `e` one step earlier.
    Past(Box<Formula>),
    /// `$stable(e)`: `e` has the same value as one step earlier.
    Stable(Box<Formula>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Address of one subformula occurrence, as child indices from the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OccurrencePath {
    pub path: Vec<usize>,
    pub polarity: Polarity,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("occurrence path {0:?} does not resolve in the formula")]
    StalePath(Vec<usize>),
    #[error("$past/$stable argument must be a state formula without nested past operators: {0}")]
    BadPastArgument(String),
}

// Shorthand constructors. Used heavily by tests and by the desugaring code.
impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(Atom::Var(name.into()))
    }
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }
    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }
    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }
    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }
    pub fn past(f: Formula) -> Self {
        Formula::Past(Box::new(f))
    }
    pub fn stable(f: Formula) -> Self {
        Formula::Stable(Box::new(f))
    }
    pub fn constant(value: bool) -> Self {
        if value {
            Formula::True
        } else {
            Formula::False
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            True | False | Atom(_) => vec![],
            Not(a) | Next(a) | Eventually(a) | Always(a) | Past(a) | Stable(a) => vec![a],
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) => vec![a, b],
        }
    }

    fn child_mut(&mut self, index: usize) -> Option<&mut Formula> {
        use Formula::*;
        match (self, index) {
            (Not(a) | Next(a) | Eventually(a) | Always(a) | Past(a) | Stable(a), 0) => Some(a),
            (And(a, _) | Or(a, _) | Implies(a, _) | Until(a, _), 0) => Some(a),
            (And(_, b) | Or(_, b) | Implies(_, b) | Until(_, b), 1) => Some(b),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// True when the formula contains no temporal operator, i.e. it is a
    /// predicate over a single state (possibly reading past values).
    pub fn is_state_formula(&self) -> bool {
        match self {
            Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) | Formula::Until(..) => {
                false
            }
            _ => self.children().iter().all(|c| c.is_state_formula()),
        }
    }

    pub fn has_past(&self) -> bool {
        match self {
            Formula::Past(_) | Formula::Stable(_) => true,
            Formula::Atom(Atom::Cmp(l, _, r)) => l.has_past() || r.has_past(),
            _ => self.children().iter().any(|c| c.has_past()),
        }
    }

    /// Checks the past-fragment restriction: `$past`/`$stable` arguments are
    /// state formulas that do not themselves read past values.
    pub fn validate(&self) -> Result<(), FormulaError> {
        match self {
            Formula::Past(e) | Formula::Stable(e) => {
                if !e.is_state_formula() || e.has_past() {
                    return Err(FormulaError::BadPastArgument(e.to_string()));
                }
                Ok(())
            }
            _ => self.children().iter().try_for_each(|c| c.validate()),
        }
    }

    /// Evaluates a state formula. `lookup(name, past)` supplies values.
    /// Returns `None` for temporal operators or unknown variables.
    pub fn eval_state<F>(&self, lookup: &F) -> Option<bool>
    where
        F: Fn(&str, bool) -> Option<i64>,
    {
        self.eval_state_inner(lookup, false)
    }

    fn eval_state_inner<F>(&self, lookup: &F, past: bool) -> Option<bool>
    where
        F: Fn(&str, bool) -> Option<i64>,
    {
        use Formula::*;
        Some(match self {
            True => true,
            False => false,
            Atom(a) => a.eval(lookup, past)?,
            Not(a) => !a.eval_state_inner(lookup, past)?,
            And(a, b) => a.eval_state_inner(lookup, past)? & b.eval_state_inner(lookup, past)?,
            Or(a, b) => a.eval_state_inner(lookup, past)? | b.eval_state_inner(lookup, past)?,
            Implies(a, b) => !a.eval_state_inner(lookup, past)? | b.eval_state_inner(lookup, past)?,
            Past(a) => a.eval_state_inner(lookup, true)?,
            Stable(a) => a.eval_state_inner(lookup, past)? == a.eval_state_inner(lookup, true)?,
            Next(_) | Eventually(_) | Always(_) | Until(..) => return None,
        })
    }

    /// Names of every variable read by the formula, current or past.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out, &mut BTreeSet::new(), false);
        out
    }

    /// Names of variables whose previous value is read.
    pub fn past_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut BTreeSet::new(), &mut out, false);
        out
    }

    fn collect_vars(&self, all: &mut BTreeSet<String>, past: &mut BTreeSet<String>, under_past: bool) {
        match self {
            Formula::Atom(Atom::Var(name)) => {
                all.insert(name.clone());
                if under_past {
                    past.insert(name.clone());
                }
            }
            Formula::Atom(Atom::Cmp(l, _, r)) => {
                for t in [l, r] {
                    t.collect_vars(all, past, under_past);
                }
            }
            Formula::Past(e) | Formula::Stable(e) => e.collect_vars(all, past, true),
            _ => {
                for c in self.children() {
                    c.collect_vars(all, past, under_past);
                }
            }
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Formula> {
        let mut node = self;
        for &i in path {
            node = *node.children().get(i)?;
        }
        Some(node)
    }

    /// Every strict-subformula occurrence in preorder, with its polarity.
    pub fn occurrences(&self) -> Vec<OccurrencePath> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk_occurrences(&mut path, Polarity::Positive, &mut out);
        out
    }

    fn walk_occurrences(&self, path: &mut Vec<usize>, polarity: Polarity, out: &mut Vec<OccurrencePath>) {
        for (i, child) in self.children().into_iter().enumerate() {
            let child_polarity = match (self, i) {
                (Formula::Not(_), _) | (Formula::Implies(..), 0) => polarity.flip(),
                _ => polarity,
            };
            path.push(i);
            out.push(OccurrencePath { path: path.clone(), polarity: child_polarity });
            child.walk_occurrences(path, child_polarity, out);
            path.pop();
        }
    }

    /// Replaces the addressed occurrence with `replacement`.
    pub fn replace_at(&self, path: &[usize], replacement: Formula) -> Result<Formula, FormulaError> {
        let mut out = self.clone();
        let mut node = &mut out;
        for &i in path {
            node = node
                .child_mut(i)
                .ok_or_else(|| FormulaError::StalePath(path.to_vec()))?;
        }
        *node = replacement;
        Ok(out)
    }

    /// `f[ψ ← value]` for the occurrence at `at`.
    pub fn substitute(&self, at: &OccurrencePath, value: bool) -> Result<Formula, FormulaError> {
        self.replace_at(&at.path, Formula::constant(value))
    }

    /// Simultaneous substitution of several occurrences. Paths must not be
    /// nested inside one another.
    pub fn substitute_all(&self, at: &[(Vec<usize>, bool)]) -> Result<Formula, FormulaError> {
        let mut out = self.clone();
        for (path, value) in at {
            out = out.replace_at(path, Formula::constant(*value))?;
        }
        Ok(out)
    }

    /// Constant folding. Semantics-preserving; leaves constant-free formulas
    /// structurally intact apart from double negations.
    pub fn simplify(&self) -> Formula {
        use Formula::*;
        match self {
            True | False | Atom(_) => self.clone(),
            Not(a) => match a.simplify() {
                True => False,
                False => True,
                Not(inner) => *inner,
                s => Formula::not(s),
            },
            And(a, b) => match (a.simplify(), b.simplify()) {
                (False, _) | (_, False) => False,
                (True, x) | (x, True) => x,
                (x, y) => Formula::and(x, y),
            },
            Or(a, b) => match (a.simplify(), b.simplify()) {
                (True, _) | (_, True) => True,
                (False, x) | (x, False) => x,
                (x, y) => Formula::or(x, y),
            },
            Implies(a, b) => match (a.simplify(), b.simplify()) {
                (False, _) | (_, True) => True,
                (True, x) => x,
                (x, False) => Formula::not(x).simplify(),
                (x, y) => Formula::implies(x, y),
            },
            Next(a) => match a.simplify() {
                c @ (True | False) => c,
                s => Formula::next(s),
            },
            Eventually(a) => match a.simplify() {
                c @ (True | False) => c,
                s => Formula::eventually(s),
            },
            Always(a) => match a.simplify() {
                c @ (True | False) => c,
                s => Formula::always(s),
            },
            Until(a, b) => match (a.simplify(), b.simplify()) {
                (_, c @ (True | False)) => c,
                (False, y) => y,
                (True, y) => Formula::eventually(y),
                (x, y) => Formula::until(x, y),
            },
            Past(a) => match a.simplify() {
                c @ (True | False) => c,
                s => Formula::past(s),
            },
            Stable(a) => match a.simplify() {
                True | False => True,
                s => Formula::stable(s),
            },
        }
    }

    /// Negation normal form: implications and `$stable` are eliminated,
    /// `$past` is pushed onto atoms, and negation sits only directly above
    /// an atom or a `$past` of an atom. `¬(a U b)` is rewritten as
    /// `(¬b U (¬a ∧ ¬b)) ∨ G ¬b` since the language has no release operator.
    pub fn nnf(&self) -> Formula {
        nnf(self, false, false)
    }

    /// Interesting-witness formula: `f ∧ ⋀ ¬f[ψ ← c(ψ)]` over the strict
    /// occurrences of `f`, with `c(ψ)` false for positive and true for negative
    /// occurrences. Each substituted conjunct is constant-folded and conjuncts
    /// that fold to `true` are dropped. Constant occurrences are skipped, as
    /// in the vacuity check, and so are occurrences below `$stable`, which
    /// have no fixed polarity.
    pub fn witness_formula(&self) -> Formula {
        let mut acc = self.clone();
        for occ in self.occurrences() {
            let constant = matches!(self.at(&occ.path), Some(Formula::True | Formula::False));
            if constant || self.passes_through_stable(&occ.path) {
                continue;
            }
            let value = occ.polarity == Polarity::Negative;
            let substituted = self
                .substitute(&occ, value)
                .expect("occurrence paths from occurrences() resolve");
            let conjunct = Formula::not(substituted).simplify();
            if conjunct != Formula::True {
                acc = Formula::and(acc, conjunct);
            }
        }
        acc
    }

    fn passes_through_stable(&self, path: &[usize]) -> bool {
        let mut node = self;
        for &i in path {
            if matches!(node, Formula::Stable(_)) {
                return true;
            }
            node = node.children()[i];
        }
        false
    }
}

fn nnf(f: &Formula, negated: bool, under_past: bool) -> Formula {
    use Formula::*;
    let wrap = |a: Formula| if under_past { Formula::past(a) } else { a };
    match f {
        True => Formula::constant(!negated),
        False => Formula::constant(negated),
        Atom(_) => {
            let lit = wrap(f.clone());
            if negated {
                Formula::not(lit)
            } else {
                lit
            }
        }
        Not(a) => nnf(a, !negated, under_past),
        And(a, b) if !negated => Formula::and(nnf(a, false, under_past), nnf(b, false, under_past)),
        And(a, b) => Formula::or(nnf(a, true, under_past), nnf(b, true, under_past)),
        Or(a, b) if !negated => Formula::or(nnf(a, false, under_past), nnf(b, false, under_past)),
        Or(a, b) => Formula::and(nnf(a, true, under_past), nnf(b, true, under_past)),
        Implies(a, b) if !negated => Formula::or(nnf(a, true, under_past), nnf(b, false, under_past)),
        Implies(a, b) => Formula::and(nnf(a, false, under_past), nnf(b, true, under_past)),
        Next(a) => Formula::next(nnf(a, negated, under_past)),
        Eventually(a) if !negated => Formula::eventually(nnf(a, false, under_past)),
        Eventually(a) => Formula::always(nnf(a, true, under_past)),
        Always(a) if !negated => Formula::always(nnf(a, false, under_past)),
        Always(a) => Formula::eventually(nnf(a, true, under_past)),
        Until(a, b) if !negated => Formula::until(nnf(a, false, under_past), nnf(b, false, under_past)),
        Until(a, b) => {
            let not_a = nnf(a, true, under_past);
            let not_b = nnf(b, true, under_past);
            Formula::or(
                Formula::until(not_b.clone(), Formula::and(not_a, not_b.clone())),
                Formula::always(not_b),
            )
        }
        Past(a) => nnf(a, negated, true),
        Stable(a) => {
            // e ↔ past(e), or its negation e ↔ ¬past(e)
            let now = nnf(a, false, under_past);
            let not_now = nnf(a, true, under_past);
            let before = nnf(a, negated, true);
            let not_before = nnf(a, !negated, true);
            Formula::or(Formula::and(now, before), Formula::and(not_now, not_before))
        }
    }
}

impl Term {
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out, &mut BTreeSet::new(), false);
        out
    }

    pub fn has_past(&self) -> bool {
        match self {
            Term::Past(_) => true,
            Term::Var(_) | Term::Const(_) => false,
            Term::Add(a, b) | Term::Sub(a, b) => a.has_past() || b.has_past(),
        }
    }

    fn collect_vars(&self, all: &mut BTreeSet<String>, past: &mut BTreeSet<String>, under_past: bool) {
        match self {
            Term::Var(v) => {
                all.insert(v.clone());
                if under_past {
                    past.insert(v.clone());
                }
            }
            Term::Past(v) => {
                all.insert(v.clone());
                past.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) => {
                a.collect_vars(all, past, under_past);
                b.collect_vars(all, past, under_past);
            }
        }
    }

    /// Evaluates with `lookup(name, past)` supplying variable values.
    pub fn eval<F>(&self, lookup: &F) -> Option<i64>
    where
        F: Fn(&str, bool) -> Option<i64>,
    {
        self.eval_inner(lookup, false)
    }

    fn eval_inner<F>(&self, lookup: &F, under_past: bool) -> Option<i64>
    where
        F: Fn(&str, bool) -> Option<i64>,
    {
        match self {
            Term::Var(v) => lookup(v, under_past),
            Term::Past(v) => lookup(v, true),
            Term::Const(c) => Some(*c),
            Term::Add(a, b) => Some(a.eval_inner(lookup, under_past)? + b.eval_inner(lookup, under_past)?),
            Term::Sub(a, b) => Some(a.eval_inner(lookup, under_past)? - b.eval_inner(lookup, under_past)?),
        }
    }
}

impl CmpOp {
    pub fn apply(self, l: i64, r: i64) -> bool {
        match self {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Gt => l > r,
            CmpOp::Ge => l >= r,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl Atom {
    /// Truth value of the atom; `past` requests previous-step values.
    pub fn eval<F>(&self, lookup: &F, past: bool) -> Option<bool>
    where
        F: Fn(&str, bool) -> Option<i64>,
    {
        match self {
            Atom::Var(v) => lookup(v, past).map(|x| x != 0),
            Atom::Cmp(l, op, r) => {
                let l = l.eval_inner(lookup, past)?;
                let r = r.eval_inner(lookup, past)?;
                Some(op.apply(l, r))
            }
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        Formula::Atom(self.clone()).variables()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Past(v) => write!(f, "$past({v})"),
            Term::Const(c) => write!(f, "{c}"),
            Term::Add(a, b) | Term::Sub(a, b) => {
                let op = if matches!(self, Term::Add(..)) { "+" } else { "-" };
                write!(f, "{a} {op} ")?;
                if matches!(**b, Term::Add(..) | Term::Sub(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Cmp(l, op, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

/// Fully parenthesised plain syntax, accepted back by [`parse_property`].
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(a) => write!(f, "{a}"),
            Not(a) => write!(f, "!{a}"),
            And(a, b) => write!(f, "({a} && {b})"),
            Or(a, b) => write!(f, "({a} || {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            Until(a, b) => write!(f, "({a} U {b})"),
            Next(a) => write!(f, "X {a}"),
            Eventually(a) => write!(f, "F {a}"),
            Always(a) => write!(f, "G {a}"),
            Past(a) => write!(f, "$past({a})"),
            Stable(a) => write!(f, "$stable({a})"),
        }
    }
}
