//! Vacuity analysis: per-occurrence "does not affect" checks, simultaneous
//! substitution for repeated subformulas, and interesting witnesses.
//!
//! An occurrence `ψ` of `f` does not affect `f` in `M` iff `M ⊨ f[ψ←true]`
//! and `M ⊨ f[ψ←false]` agree. `M` satisfies `f` vacuously when `M ⊨ f` and
//! some occurrence does not affect it. Failing properties have no vacuity
//! verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::formula::{Formula, OccurrencePath};
use crate::mc::{CheckError, CheckOptions, Checker};
use crate::model::{Lasso, Model};

/// Largest occurrence count accepted by [`VacuityMode::Exhaustive`].
pub const EXHAUSTIVE_MAX_OCCURRENCES: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VacuityMode {
    /// One substitution pair per occurrence.
    Single,
    /// Single-occurrence checks plus simultaneous substitution of every
    /// occurrence of each repeated subformula.
    #[default]
    AllOccurrences,
    /// All-occurrences checks plus every subset of occurrences under every
    /// constant assignment. Bounded by [`EXHAUSTIVE_MAX_OCCURRENCES`].
    Exhaustive,
}

impl std::str::FromStr for VacuityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(VacuityMode::Single),
            "all-occurrences" | "all" => Ok(VacuityMode::AllOccurrences),
            "exhaustive" => Ok(VacuityMode::Exhaustive),
            _ => Err(format!("unknown vacuity mode '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceResult {
    pub occurrence: OccurrencePath,
    pub subformula: String,
    pub affects: bool,
    pub sat_under_true: bool,
    pub sat_under_false: bool,
}

/// Result for a set of occurrences substituted together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupResult {
    pub subformula: String,
    pub paths: Vec<Vec<usize>>,
    pub affects: bool,
    pub sat_under_true: bool,
    pub sat_under_false: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VacuityVerdict {
    Fails,
    NonVacuous,
    Vacuous {
        non_affecting: Vec<OccurrencePath>,
        /// Repeated subformulas whose occurrences, substituted together,
        /// do not affect the formula.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        groups: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VacuityReport {
    pub formula: String,
    pub model: String,
    pub mode: VacuityMode,
    pub holds: bool,
    pub occurrences: Vec<OccurrenceResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupResult>,
    /// Occurrence subsets found non-affecting in exhaustive mode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub non_affecting_subsets: Vec<Vec<Vec<usize>>>,
    pub verdict: VacuityVerdict,
    pub witness: Option<Lasso>,
    pub counterexample: Option<Lasso>,
}

impl VacuityReport {
    pub fn is_vacuous(&self) -> bool {
        matches!(self.verdict, VacuityVerdict::Vacuous { .. })
    }

    pub fn is_non_vacuous(&self) -> bool {
        self.verdict == VacuityVerdict::NonVacuous
    }
}

struct Ctx<'a> {
    m: &'a Model,
    opts: &'a CheckOptions,
}

impl Ctx<'_> {
    fn holds(&self, f: &Formula) -> Result<bool, CheckError> {
        Ok(Checker::new(f, self.opts)?.check(self.m)?.holds)
    }

    fn pair(&self, f: &Formula, paths: &[Vec<usize>]) -> Result<(bool, bool), CheckError> {
        let with = |v: bool| -> Result<Formula, CheckError> {
            let subs: Vec<(Vec<usize>, bool)> = paths.iter().map(|p| (p.clone(), v)).collect();
            Ok(f.substitute_all(&subs)?)
        };
        Ok((self.holds(&with(true)?)?, self.holds(&with(false)?)?))
    }
}

/// Substitution test for one occurrence. Returns `(affects, sat_true, sat_false)`.
pub fn affects(m: &Model, f: &Formula, at: &OccurrencePath) -> Result<(bool, bool, bool), CheckError> {
    affects_with(m, f, at, &CheckOptions::default())
}

pub fn affects_with(
    m: &Model,
    f: &Formula,
    at: &OccurrencePath,
    opts: &CheckOptions,
) -> Result<(bool, bool, bool), CheckError> {
    let (t, fl) = Ctx { m, opts }.pair(f, std::slice::from_ref(&at.path))?;
    Ok((t != fl, t, fl))
}

pub fn check_vacuity(m: &Model, f: &Formula, mode: VacuityMode) -> Result<VacuityReport, CheckError> {
    check_vacuity_with(m, f, mode, &CheckOptions::default())
}

/// Full vacuity analysis. `opts.assume` (for example `G ¬rst` from a
/// `disable iff`) applies to every check; substitutions touch only `f`.
pub fn check_vacuity_with(
    m: &Model,
    f: &Formula,
    mode: VacuityMode,
    opts: &CheckOptions,
) -> Result<VacuityReport, CheckError> {
    let ctx = Ctx { m, opts };
    let verdict = Checker::new(f, opts)?.check(m)?;
    let mut report = VacuityReport {
        formula: f.to_string(),
        model: m.name.clone(),
        mode,
        holds: verdict.holds,
        occurrences: Vec::new(),
        groups: Vec::new(),
        non_affecting_subsets: Vec::new(),
        verdict: VacuityVerdict::Fails,
        witness: None,
        counterexample: verdict.counterexample,
    };
    if !verdict.holds {
        return Ok(report);
    }

    let occs: Vec<OccurrencePath> = f
        .occurrences()
        .into_iter()
        .filter(|o| !matches!(f.at(&o.path), Some(Formula::True | Formula::False)))
        .collect();
    let mut non_affecting = Vec::new();
    for occ in &occs {
        let (t, fl) = ctx.pair(f, std::slice::from_ref(&occ.path))?;
        if t == fl {
            non_affecting.push(occ.clone());
        }
        report.occurrences.push(OccurrenceResult {
            occurrence: occ.clone(),
            subformula: f.at(&occ.path).map(|s| s.to_string()).unwrap_or_default(),
            affects: t != fl,
            sat_under_true: t,
            sat_under_false: fl,
        });
    }

    let mut vacuous = !non_affecting.is_empty();
    let mut groups = Vec::new();
    if mode != VacuityMode::Single {
        let mut by_sub: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
        for occ in &occs {
            let sub = f.at(&occ.path).expect("occurrence resolves");
            by_sub.entry(sub.to_string()).or_default().push(occ.path.clone());
        }
        for (sub, paths) in by_sub.into_iter().filter(|(_, p)| p.len() > 1) {
            let (t, fl) = ctx.pair(f, &paths)?;
            if t == fl {
                vacuous = true;
                groups.push(sub.clone());
            }
            report.groups.push(GroupResult { subformula: sub, paths, affects: t != fl, sat_under_true: t, sat_under_false: fl });
        }
    }
    if mode == VacuityMode::Exhaustive {
        if occs.len() > EXHAUSTIVE_MAX_OCCURRENCES {
            return Err(CheckError::ResourceLimit(EXHAUSTIVE_MAX_OCCURRENCES));
        }
        for subset in independent_subsets(&occs) {
            if subset_non_affecting(&ctx, f, &subset)? {
                vacuous = true;
                report.non_affecting_subsets.push(subset);
            }
        }
    }

    report.verdict = if vacuous {
        VacuityVerdict::Vacuous { non_affecting, groups }
    } else {
        VacuityVerdict::NonVacuous
    };
    report.witness = interesting_witness_with(m, f, opts)?;
    Ok(report)
}

/// Subsets of at least two occurrences with no path nested in another.
fn independent_subsets(occs: &[OccurrencePath]) -> Vec<Vec<Vec<usize>>> {
    let n = occs.len();
    let nested = |a: &[usize], b: &[usize]| a.starts_with(b) || b.starts_with(a);
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let set: Vec<&Vec<usize>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &occs[i].path).collect();
        let ok = set
            .iter()
            .enumerate()
            .all(|(i, a)| set[i + 1..].iter().all(|b| !nested(a, b)));
        if ok {
            out.push(set.into_iter().cloned().collect());
        }
    }
    out
}

/// Satisfaction is the same under every constant assignment to the subset.
fn subset_non_affecting(ctx: &Ctx, f: &Formula, subset: &[Vec<usize>]) -> Result<bool, CheckError> {
    let mut first = None;
    for bits in 0u32..(1 << subset.len()) {
        let subs: Vec<(Vec<usize>, bool)> = subset
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), bits >> i & 1 == 1))
            .collect();
        let h = ctx.holds(&f.substitute_all(&subs)?)?;
        match first {
            None => first = Some(h),
            Some(x) if x != h => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// A path of `M` satisfying `witness_formula(f)`, found as a counterexample
/// to its negation. `None` means no interesting witness exists.
pub fn interesting_witness(m: &Model, f: &Formula) -> Result<Option<Lasso>, CheckError> {
    interesting_witness_with(m, f, &CheckOptions::default())
}

pub fn interesting_witness_with(m: &Model, f: &Formula, opts: &CheckOptions) -> Result<Option<Lasso>, CheckError> {
    let w = Formula::not(f.witness_formula());
    Ok(Checker::new(&w, opts)?.check(m)?.counterexample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_property;
    use crate::mc::eval_on_lasso;
    use crate::model::VarDecl;

    fn pq(states: Vec<Vec<u64>>, edges: &[(usize, usize)]) -> Model {
        Model::explicit("t", vec![VarDecl::boolean("p"), VarDecl::boolean("q")], states, vec![0], edges).unwrap()
    }

    fn response() -> Formula {
        parse_property("G (p -> F q)").unwrap()
    }

    fn occ(f: &Formula, path: &[usize]) -> OccurrencePath {
        f.occurrences().into_iter().find(|o| o.path == path).unwrap()
    }

    #[test]
    fn p_never_consequent_does_not_affect() {
        let m = pq(vec![vec![0, 0]], &[(0, 0)]);
        let f = response();
        assert_eq!(affects(&m, &f, &occ(&f, &[0, 1])).unwrap(), (false, true, true));
        let r = check_vacuity(&m, &f, VacuityMode::Single).unwrap();
        assert!(r.is_vacuous());
        assert!(r.witness.is_none());
    }

    #[test]
    fn single_state_consequent_affects() {
        let m = pq(vec![vec![1, 1]], &[(0, 0)]);
        let f = response();
        assert_eq!(affects(&m, &f, &occ(&f, &[0, 1])).unwrap(), (true, true, false));
    }

    #[test]
    fn live_model_non_vacuous_with_witness() {
        let m = pq(vec![vec![1, 1], vec![0, 0]], &[(0, 1), (1, 1)]);
        let f = response();
        let r = check_vacuity(&m, &f, VacuityMode::AllOccurrences).unwrap();
        assert!(r.is_non_vacuous(), "{r:?}");
        let w = r.witness.unwrap();
        assert!(eval_on_lasso(&f.witness_formula(), &m, &w).unwrap());
    }

    #[test]
    fn failing_property_has_no_occurrence_results() {
        let m = pq(vec![vec![1, 0]], &[(0, 0)]);
        let r = check_vacuity(&m, &response(), VacuityMode::AllOccurrences).unwrap();
        assert_eq!(r.verdict, VacuityVerdict::Fails);
        assert!(r.occurrences.is_empty());
        assert!(r.counterexample.is_some());
    }

    #[test]
    fn repeated_subformula_group() {
        let m = pq(vec![vec![1, 1]], &[(0, 0)]);
        let f = parse_property("G (p && p)").unwrap();
        let r = check_vacuity(&m, &f, VacuityMode::AllOccurrences).unwrap();
        assert_eq!(r.groups.len(), 1);
        assert!(r.groups[0].affects);
        // each p alone affects, and the group affects too
        assert!(r.is_non_vacuous());
        let r = check_vacuity(&m, &f, VacuityMode::Exhaustive).unwrap();
        assert!(r.is_non_vacuous());
    }

    #[test]
    fn atom_witness_is_self_loop() {
        let m = Model::explicit("p", vec![VarDecl::boolean("p")], vec![vec![1]], vec![0], &[(0, 0)]).unwrap();
        let w = interesting_witness(&m, &Formula::atom("p")).unwrap().unwrap();
        assert_eq!(w, Lasso { stem: vec![], cycle: vec![0] });
    }
}
