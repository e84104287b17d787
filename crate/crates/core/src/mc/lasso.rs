//! Direct LTL evaluation on ultimately periodic paths.

use crate::formula::{Formula, FormulaError};
use crate::model::{Lasso, Model, StateId};

use super::CheckError;

/// Truth of `f` at position 0 of the infinite path described by `lasso`.
///
/// The lasso is folded into a finite graph whose last position steps back to
/// the start of the loop. Temporal operators are fixpoints on that graph.
/// `$past` at position 0 reads position 0 itself. When `f` reads the past,
/// one copy of the loop is unrolled into the stem so that every position
/// has a unique predecessor.
pub fn eval_on_lasso(f: &Formula, m: &Model, lasso: &Lasso) -> Result<bool, CheckError> {
    if lasso.cycle.is_empty() {
        return Err(CheckError::EmptyLoop);
    }
    f.validate().map_err(CheckError::Formula)?;
    let (stem, cycle) = if f.has_past() {
        let mut stem = lasso.stem.clone();
        stem.extend(&lasso.cycle);
        (stem, lasso.cycle.clone())
    } else {
        (lasso.stem.clone(), lasso.cycle.clone())
    };
    let path: Vec<StateId> = stem.iter().chain(&cycle).copied().collect();
    let ev = Evaluator { m, path: &path, loop_start: stem.len() };
    Ok(ev.eval(f)?[0])
}

struct Evaluator<'a> {
    m: &'a Model,
    path: &'a [StateId],
    loop_start: usize,
}

impl Evaluator<'_> {
    fn n(&self) -> usize {
        self.path.len()
    }

    fn succ(&self, i: usize) -> usize {
        if i + 1 < self.n() {
            i + 1
        } else {
            self.loop_start
        }
    }

    fn eval(&self, f: &Formula) -> Result<Vec<bool>, CheckError> {
        use Formula::*;
        if f.is_state_formula() {
            return (0..self.n()).map(|i| self.eval_state(f, i)).collect();
        }
        let n = self.n();
        Ok(match f {
            Not(a) => self.eval(a)?.into_iter().map(|x| !x).collect(),
            And(a, b) | Or(a, b) | Implies(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                (0..n)
                    .map(|i| match f {
                        And(..) => a[i] && b[i],
                        Or(..) => a[i] || b[i],
                        _ => !a[i] || b[i],
                    })
                    .collect()
            }
            Next(a) => {
                let a = self.eval(a)?;
                (0..n).map(|i| a[self.succ(i)]).collect()
            }
            Eventually(a) => {
                let a = self.eval(a)?;
                self.fixpoint(false, |i, v| a[i] || v[self.succ(i)])
            }
            Always(a) => {
                let a = self.eval(a)?;
                self.fixpoint(true, |i, v| a[i] && v[self.succ(i)])
            }
            Until(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                self.fixpoint(false, |i, v| b[i] || (a[i] && v[self.succ(i)]))
            }
            Past(_) | Stable(_) => {
                return Err(CheckError::Formula(FormulaError::BadPastArgument(f.to_string())));
            }
            True | False | Atom(_) => unreachable!("state formulas handled above"),
        })
    }

    /// Iterates `step` from the constant `start` until nothing changes.
    fn fixpoint(&self, start: bool, step: impl Fn(usize, &[bool]) -> bool) -> Vec<bool> {
        let mut v = vec![start; self.n()];
        loop {
            let mut changed = false;
            for i in (0..self.n()).rev() {
                let x = step(i, &v);
                if x != v[i] {
                    v[i] = x;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    }

    fn eval_state(&self, f: &Formula, i: usize) -> Result<bool, CheckError> {
        let now = self.path[i];
        let prev = self.path[i.saturating_sub(1)];
        let lookup = |name: &str, past: bool| self.m.read(if past { prev } else { now }, name, false);
        f.eval_state(&lookup).ok_or_else(|| {
            let missing = f
                .variables()
                .into_iter()
                .find(|v| self.m.resolve(v).is_none())
                .unwrap_or_else(|| f.to_string());
            CheckError::UndeclaredVariable(missing)
        })
    }
}
