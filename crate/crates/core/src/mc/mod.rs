//! Explicit-state LTL model checking.
//!
//! `M ⊨ f` is decided by building a Büchi automaton for `¬f`, exploring its
//! product with the model by nested depth-first search, and reporting an
//! accepting lasso as the counterexample.

pub mod buchi;
mod lasso;

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, FormulaError};
use crate::model::{Lasso, Model, ModelError, StateId};

pub use buchi::{ltl_to_buchi, Buchi};
pub use lasso::eval_on_lasso;

pub const DEFAULT_MAX_PRODUCT_STATES: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("undeclared variable '{0}'")]
    UndeclaredVariable(String),
    #[error("resource limit: product exceeds {0} states")]
    ResourceLimit(usize),
    #[error("lasso has an empty loop")]
    EmptyLoop,
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Path assumption: only paths satisfying it are considered.
    pub assume: Option<Formula>,
    pub max_product_states: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { assume: None, max_product_states: DEFAULT_MAX_PRODUCT_STATES }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub product_states: usize,
    pub automaton_states: usize,
    pub wall_time_us: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub counterexample: Option<Lasso>,
    pub stats: Stats,
}

pub fn check(m: &Model, f: &Formula) -> Result<Verdict, CheckError> {
    check_with(m, f, &CheckOptions::default())
}

pub fn check_with(m: &Model, f: &Formula, opts: &CheckOptions) -> Result<Verdict, CheckError> {
    Checker::new(f, opts)?.check(m)
}

/// A property compiled once and checkable against many models.
#[derive(Clone, Debug)]
pub struct Checker {
    target: Formula,
    automaton: Buchi,
    vars: Vec<String>,
    past_vars: BTreeSet<String>,
    max_product_states: usize,
}

impl Checker {
    pub fn new(f: &Formula, opts: &CheckOptions) -> Result<Checker, CheckError> {
        let target = match &opts.assume {
            Some(a) => Formula::implies(a.clone(), f.clone()),
            None => f.clone(),
        };
        target.validate()?;
        let automaton = ltl_to_buchi(&Formula::not(target.clone()));
        Ok(Checker {
            vars: target.variables().into_iter().collect(),
            past_vars: target.past_variables(),
            target,
            automaton,
            max_product_states: opts.max_product_states,
        })
    }

    /// The formula actually checked, with the assumption folded in.
    pub fn target(&self) -> &Formula {
        &self.target
    }

    pub fn automaton(&self) -> &Buchi {
        &self.automaton
    }

    pub fn check(&self, m: &Model) -> Result<Verdict, CheckError> {
        let start = Instant::now();
        if let Some(v) = self.vars.iter().find(|v| m.resolve(v).is_none()) {
            return Err(CheckError::UndeclaredVariable(v.clone()));
        }
        let run = find_accepting_run(&self.automaton, m, &self.past_vars, self.max_product_states)?;
        let stats = Stats {
            product_states: run.explored,
            automaton_states: self.automaton.num_states(),
            wall_time_us: start.elapsed().as_micros() as u64,
        };
        Ok(Verdict { holds: run.lasso.is_none(), counterexample: run.lasso, stats })
    }
}

/// Whether the automaton for `f` accepts the word read along `lasso`.
/// Independent of [`eval_on_lasso`]; used to cross-check the translation.
pub fn accepts_lasso(f: &Formula, m: &Model, lasso: &Lasso) -> Result<bool, CheckError> {
    if lasso.cycle.is_empty() {
        return Err(CheckError::EmptyLoop);
    }
    f.validate()?;
    let path = lasso_model(m, lasso)?;
    let aut = ltl_to_buchi(f);
    let run = find_accepting_run(&aut, &path, &f.past_variables(), DEFAULT_MAX_PRODUCT_STATES)?;
    Ok(run.lasso.is_some())
}

/// The lasso as a single-path model whose states are lasso positions.
fn lasso_model(m: &Model, lasso: &Lasso) -> Result<Model, ModelError> {
    let n = lasso.len();
    let states = (0..n).map(|i| m.values(lasso.state_at(i)).to_vec()).collect();
    let edges: Vec<(StateId, StateId)> = (0..n)
        .map(|i| (i, if i + 1 < n { i + 1 } else { lasso.stem.len() }))
        .collect();
    Model::explicit(m.name.clone(), m.vars.clone(), states, vec![0], &edges)
}

struct Run {
    lasso: Option<Lasso>,
    explored: usize,
}

const VISITED: u8 = 1;
const ON_STACK: u8 = 2;
const RED: u8 = 4;

enum Marks {
    Dense(Vec<u8>),
    Sparse(HashMap<usize, u8>),
}

impl Marks {
    fn new(size: usize) -> Self {
        if size <= 1 << 24 {
            Marks::Dense(vec![0; size])
        } else {
            Marks::Sparse(HashMap::new())
        }
    }

    #[inline]
    fn get(&self, i: usize) -> u8 {
        match self {
            Marks::Dense(v) => v[i],
            Marks::Sparse(m) => m.get(&i).copied().unwrap_or(0),
        }
    }

    #[inline]
    fn set(&mut self, i: usize, bit: u8) {
        match self {
            Marks::Dense(v) => v[i] |= bit,
            Marks::Sparse(m) => *m.entry(i).or_insert(0) |= bit,
        }
    }

    #[inline]
    fn clear(&mut self, i: usize, bit: u8) {
        match self {
            Marks::Dense(v) => v[i] &= !bit,
            Marks::Sparse(m) => {
                if let Some(x) = m.get_mut(&i) {
                    *x &= !bit;
                }
            }
        }
    }
}

struct Product<'a> {
    aut: &'a Buchi,
    m: &'a Model,
    truth: Vec<u64>,
    words: usize,
    na: usize,
}

impl Product<'_> {
    #[inline]
    fn admits(&self, s: StateId, q: usize) -> bool {
        let t = &self.truth[s * self.words..(s + 1) * self.words];
        self.aut.states[q].label.admits(t)
    }

    /// Successors in ascending product id `s * na + q`.
    fn successors(&self, p: usize, out: &mut Vec<usize>) {
        out.clear();
        let (s, q) = (p / self.na, p % self.na);
        for &t in self.m.successors(s) {
            for &q2 in &self.aut.states[q].succ {
                if self.admits(t, q2) {
                    out.push(t * self.na + q2);
                }
            }
        }
    }

    fn accepting(&self, p: usize) -> bool {
        self.aut.states[p % self.na].accepting
    }
}

/// Literal truth table: one bitset per model state.
fn literal_table(aut: &Buchi, m: &Model) -> Result<Vec<u64>, CheckError> {
    let words = aut.words();
    // Resolve every name once: (name, current slot, shadow slot).
    let mut slots: Vec<(String, Option<(usize, Option<u32>)>, Option<(usize, Option<u32>)>)> = Vec::new();
    for lit in &aut.literals {
        for n in lit.variables() {
            if slots.iter().all(|s| s.0 != n) {
                let cur = m.resolve(&n);
                let past = {
                    let (base, bit) = match n.split_once('[') {
                        Some((b, r)) => (b, r.strip_suffix(']').and_then(|x| x.parse().ok())),
                        None => (n.as_str(), None),
                    };
                    m.var_id(&crate::model::past_name(base)).map(|v| (v, bit))
                };
                slots.push((n, cur, past));
            }
        }
    }
    let mut truth = vec![0u64; m.num_states() * words];
    for s in 0..m.num_states() {
        let vals = m.values(s);
        let lookup = |n: &str, past: bool| -> Option<i64> {
            let slot = slots.iter().find(|x| x.0 == n)?;
            let (v, bit) = if past { slot.2? } else { slot.1? };
            let x = vals[v];
            Some(match bit {
                Some(b) => ((x >> b) & 1) as i64,
                None => x as i64,
            })
        };
        for (i, lit) in aut.literals.iter().enumerate() {
            let v = match lit {
                Formula::Atom(a) => a.eval(&lookup, false),
                Formula::Past(inner) => match &**inner {
                    Formula::Atom(a) => a.eval(&lookup, true),
                    _ => None,
                },
                _ => None,
            };
            let v = v.ok_or_else(|| CheckError::UndeclaredVariable(lit.to_string()))?;
            if v {
                truth[s * words + i / 64] |= 1 << (i % 64);
            }
        }
    }
    Ok(truth)
}

fn find_accepting_run(aut: &Buchi, m: &Model, past_vars: &BTreeSet<String>, limit: usize) -> Result<Run, CheckError> {
    let (model, projection): (Cow<Model>, Option<Vec<StateId>>) = if past_vars.is_empty() {
        (Cow::Borrowed(m), None)
    } else {
        let (am, proj) = m.augment_past(past_vars)?;
        (Cow::Owned(am), Some(proj))
    };
    let model = model.as_ref();
    if aut.initial.is_empty() {
        return Ok(Run { lasso: None, explored: 0 });
    }
    let prod = Product { aut, m: model, truth: literal_table(aut, model)?, words: aut.words(), na: aut.num_states() };
    let mut roots = Vec::new();
    for &s in model.init() {
        for &q in &aut.initial {
            if prod.admits(s, q) {
                roots.push(s * prod.na + q);
            }
        }
    }
    roots.sort_unstable();
    let mut ndfs = Ndfs { prod: &prod, marks: Marks::new(model.num_states() * prod.na), explored: 0, limit };
    let found = ndfs.run(&roots)?;
    let lasso = found.map(|(stem, cycle)| {
        let map = |p: usize| {
            let s = p / prod.na;
            projection.as_ref().map_or(s, |pr| pr[s])
        };
        Lasso { stem: stem.into_iter().map(map).collect(), cycle: cycle.into_iter().map(map).collect() }.normalized()
    });
    Ok(Run { lasso, explored: ndfs.explored })
}

struct Ndfs<'a> {
    prod: &'a Product<'a>,
    marks: Marks,
    explored: usize,
    limit: usize,
}

/// DFS frame: state, and the unexplored range of its successors in the
/// shared successor buffer.
struct Frame {
    state: usize,
    next: usize,
    end: usize,
}

impl Ndfs<'_> {
    fn visit(&mut self, p: usize) -> Result<(), CheckError> {
        self.explored += 1;
        if self.explored > self.limit {
            return Err(CheckError::ResourceLimit(self.limit));
        }
        self.marks.set(p, VISITED | ON_STACK);
        Ok(())
    }

    fn push(&self, p: usize, stack: &mut Vec<Frame>, buf: &mut Vec<usize>, scratch: &mut Vec<usize>) {
        self.prod.successors(p, scratch);
        let next = buf.len();
        buf.extend_from_slice(scratch);
        stack.push(Frame { state: p, next, end: buf.len() });
    }

    /// Outer search. Returns `(stem, cycle)` in product states.
    fn run(&mut self, roots: &[usize]) -> Result<Option<(Vec<usize>, Vec<usize>)>, CheckError> {
        let mut scratch = Vec::new();
        let mut buf = Vec::new();
        let mut stack: Vec<Frame> = Vec::new();
        for &root in roots {
            if self.marks.get(root) & VISITED != 0 {
                continue;
            }
            self.visit(root)?;
            self.push(root, &mut stack, &mut buf, &mut scratch);
            while let Some(top) = stack.last_mut() {
                if top.next < top.end {
                    let t = buf[top.next];
                    top.next += 1;
                    if self.marks.get(t) & VISITED == 0 {
                        self.visit(t)?;
                        self.push(t, &mut stack, &mut buf, &mut scratch);
                    }
                    continue;
                }
                let p = top.state;
                if self.prod.accepting(p) {
                    if let Some((inner, closing)) = self.inner(p, &mut scratch)? {
                        let path: Vec<usize> = stack.iter().map(|f| f.state).collect();
                        let j = path.iter().position(|&x| x == closing).expect("closing state is on the stack");
                        let stem = path[..j].to_vec();
                        let mut cycle = path[j..].to_vec();
                        cycle.extend(inner);
                        return Ok(Some((stem, cycle)));
                    }
                }
                self.marks.clear(p, ON_STACK);
                stack.pop();
                buf.truncate(stack.last().map_or(0, |f| f.end));
            }
        }
        Ok(None)
    }

    /// Inner search from an accepting seed for a state on the outer stack.
    /// Returns the path after the seed and the stack state it closes on.
    fn inner(&mut self, seed: usize, scratch: &mut Vec<usize>) -> Result<Option<(Vec<usize>, usize)>, CheckError> {
        let mut buf = Vec::new();
        let mut stack: Vec<Frame> = Vec::new();
        self.push(seed, &mut stack, &mut buf, scratch);
        while let Some(top) = stack.last_mut() {
            if top.next >= top.end {
                stack.pop();
                buf.truncate(stack.last().map_or(0, |f| f.end));
                continue;
            }
            let t = buf[top.next];
            top.next += 1;
            let mark = self.marks.get(t);
            if mark & ON_STACK != 0 {
                let inner = stack.iter().skip(1).map(|f| f.state).collect();
                return Ok(Some((inner, t)));
            }
            if mark & RED == 0 {
                self.marks.set(t, RED);
                self.push(t, &mut stack, &mut buf, scratch);
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_property;
    use crate::model::VarDecl;

    fn pq(states: Vec<Vec<u64>>, init: Vec<usize>, edges: &[(usize, usize)]) -> Model {
        Model::explicit("t", vec![VarDecl::boolean("p"), VarDecl::boolean("q")], states, init, edges).unwrap()
    }

    fn f(s: &str) -> Formula {
        parse_property(s).unwrap()
    }

    #[test]
    fn single_state_invariant() {
        let m = pq(vec![vec![1, 1]], vec![0], &[(0, 0)]);
        let v = check(&m, &f("G p")).unwrap();
        assert!(v.holds);
        assert!(v.counterexample.is_none());
    }

    #[test]
    fn p_never_holds() {
        let m = pq(vec![vec![0, 0], vec![0, 1]], vec![0], &[(0, 1), (1, 0)]);
        assert!(check(&m, &f("G (p -> F q)")).unwrap().holds);
    }

    #[test]
    fn counterexample_violates() {
        let m = pq(vec![vec![1, 0], vec![0, 0]], vec![0], &[(0, 1), (1, 1)]);
        let g = f("G (p -> F q)");
        let v = check(&m, &g).unwrap();
        assert!(!v.holds);
        let cex = v.counterexample.unwrap();
        cex.validate(&m).unwrap();
        assert!(!eval_on_lasso(&g, &m, &cex).unwrap());
        assert_eq!(cex, Lasso { stem: vec![0], cycle: vec![1] });
    }

    #[test]
    fn undeclared_atom() {
        let m = pq(vec![vec![1, 1]], vec![0], &[(0, 0)]);
        assert!(matches!(check(&m, &f("G z")), Err(CheckError::UndeclaredVariable(v)) if v == "z"));
    }

    #[test]
    fn assumption_masks_paths() {
        // r is high only on the path that breaks p.
        let m = Model::explicit(
            "a",
            vec![VarDecl::boolean("p"), VarDecl::boolean("r")],
            vec![vec![1, 0], vec![0, 1]],
            vec![0],
            &[(0, 0), (0, 1), (1, 1)],
        )
        .unwrap();
        assert!(!check(&m, &f("G p")).unwrap().holds);
        let opts = CheckOptions { assume: Some(f("G !r")), ..Default::default() };
        assert!(check_with(&m, &f("G p"), &opts).unwrap().holds);
    }

    #[test]
    fn past_operators() {
        // k toggles 0,1,0,1: $stable(k) fails after the first step.
        let m = Model::explicit("k", vec![VarDecl::boolean("k")], vec![vec![0], vec![1]], vec![0], &[(0, 1), (1, 0)])
            .unwrap();
        assert!(check(&m, &f("$stable(k)")).unwrap().holds);
        assert!(check(&m, &f("X G !$stable(k)")).unwrap().holds);
        assert!(check(&m, &f("G (k -> !$past(k))")).unwrap().holds);
        let v = check(&m, &f("G $stable(k)")).unwrap();
        assert!(!v.holds);
        let cex = v.counterexample.unwrap();
        assert!(!eval_on_lasso(&f("G $stable(k)"), &m, &cex).unwrap());
    }

    #[test]
    fn resource_limit() {
        let m = pq(vec![vec![1, 1]], vec![0], &[(0, 0)]);
        let opts = CheckOptions { max_product_states: 0, ..Default::default() };
        assert!(matches!(check_with(&m, &f("G p"), &opts), Err(CheckError::ResourceLimit(0))));
    }

    #[test]
    fn automaton_accepts_lasso() {
        let m = pq(vec![vec![1, 0], vec![0, 1]], vec![0], &[(0, 1), (1, 0)]);
        let l = Lasso { stem: vec![], cycle: vec![0, 1] };
        assert!(accepts_lasso(&f("G F q"), &m, &l).unwrap());
        assert!(!accepts_lasso(&f("F G q"), &m, &l).unwrap());
    }
}
