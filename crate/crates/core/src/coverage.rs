//! Coverage figures: checker (cone of influence and proof core), stimuli
//! (toggle and reachability), and their formal composite.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Property;
use crate::mc::{CheckError, CheckOptions, Checker};
use crate::model::{Model, ModelError, VarId};

pub const DEFAULT_THRESHOLD: f64 = 80.0;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("property '{0}' does not hold; coverage needs proven properties")]
    Unproven(String),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How stimuli and checker figures combine into formal coverage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositeRule {
    #[default]
    Product,
    Min,
    HarmonicMean,
}

impl CompositeRule {
    pub fn combine(self, checker: f64, stimuli: f64) -> f64 {
        match self {
            CompositeRule::Product => checker * stimuli / 100.0,
            CompositeRule::Min => checker.min(stimuli),
            CompositeRule::HarmonicMean => {
                if checker + stimuli == 0.0 {
                    0.0
                } else {
                    2.0 * checker * stimuli / (checker + stimuli)
                }
            }
        }
    }
}

impl std::str::FromStr for CompositeRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "product" => Ok(CompositeRule::Product),
            "min" => Ok(CompositeRule::Min),
            "harmonic" | "harmonic-mean" => Ok(CompositeRule::HarmonicMean),
            _ => Err(format!("unknown composite rule '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCoverage {
    pub name: String,
    pub coi: Vec<String>,
    pub proof_core: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckerCoverage {
    pub coi: f64,
    pub proof_core: f64,
    pub per_property: Vec<PropertyCoverage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimuliCoverage {
    pub toggle: f64,
    pub reachability: f64,
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub checker_coi: f64,
    pub checker_proof_core: f64,
    pub stimuli: f64,
    pub stimuli_toggle: f64,
    pub stimuli_reachability: f64,
    pub formal_coi: f64,
    pub formal_proof_core: f64,
    pub rule: CompositeRule,
    pub per_property: Vec<PropertyCoverage>,
    pub uncovered_variables: Vec<String>,
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn names(m: &Model, ids: &BTreeSet<VarId>) -> Vec<String> {
    ids.iter().map(|&v| m.vars[v].name.clone()).collect()
}

fn options(p: &Property) -> CheckOptions {
    CheckOptions { assume: p.assumption(), ..Default::default() }
}

/// COI of one property at declared-variable level.
pub fn property_coi(m: &Model, p: &Property) -> Result<BTreeSet<VarId>, CoverageError> {
    Ok(m.coi_ids(&m.formula_vars(&p.formula)?))
}

/// Variables in the property's COI whose havocking breaks the proof.
pub fn proof_core(m: &Model, p: &Property) -> Result<BTreeSet<VarId>, CoverageError> {
    let checker = Checker::new(&p.formula, &options(p))?;
    let mut core = BTreeSet::new();
    for v in property_coi(m, p)? {
        let (h, _) = m.havoc(&m.vars[v].name)?;
        if !checker.check(&h)?.holds {
            core.insert(v);
        }
    }
    Ok(core)
}

pub fn checker_coverage(m: &Model, props: &[Property]) -> Result<CheckerCoverage, CoverageError> {
    let mut coi_union = BTreeSet::new();
    let mut core_union = BTreeSet::new();
    let mut per_property = Vec::new();
    for p in props {
        if !Checker::new(&p.formula, &options(p))?.check(m)?.holds {
            return Err(CoverageError::Unproven(p.name.clone()));
        }
        let coi = property_coi(m, p)?;
        let core = proof_core(m, p)?;
        debug_assert!(core.is_subset(&coi));
        per_property.push(PropertyCoverage { name: p.name.clone(), coi: names(m, &coi), proof_core: names(m, &core) });
        coi_union.extend(coi);
        core_union.extend(core);
    }
    let n = m.vars.len();
    Ok(CheckerCoverage { coi: percent(coi_union.len(), n), proof_core: percent(core_union.len(), n), per_property })
}

/// Bits that take both values over the reachable states.
pub fn toggled_bits(m: &Model) -> Vec<(VarId, u32)> {
    let reach = m.reachable_states();
    let mut out = Vec::new();
    for (v, decl) in m.vars.iter().enumerate() {
        for b in 0..decl.width {
            let mut seen = [false; 2];
            for &s in &reach {
                seen[((m.values(s)[v] >> b) & 1) as usize] = true;
            }
            if seen[0] && seen[1] {
                out.push((v, b));
            }
        }
    }
    out
}

pub fn stimuli_coverage(m: &Model) -> StimuliCoverage {
    let bits: usize = m.vars.iter().map(|v| v.width as usize).sum();
    let toggle = percent(toggled_bits(m).len(), bits);
    let reachability = percent(m.reachable_states().len(), m.num_states());
    StimuliCoverage { toggle, reachability, percent: (toggle + reachability) / 2.0 }
}

pub fn formal_coverage(checker: &CheckerCoverage, stimuli: &StimuliCoverage, rule: CompositeRule) -> (f64, f64) {
    (rule.combine(checker.coi, stimuli.percent), rule.combine(checker.proof_core, stimuli.percent))
}

pub fn coverage_report(m: &Model, props: &[Property], rule: CompositeRule) -> Result<CoverageReport, CoverageError> {
    let checker = checker_coverage(m, props)?;
    let stimuli = stimuli_coverage(m);
    let (formal_coi, formal_proof_core) = formal_coverage(&checker, &stimuli, rule);
    let covered: BTreeSet<&str> = checker.per_property.iter().flat_map(|p| p.coi.iter().map(String::as_str)).collect();
    let uncovered_variables = m.vars.iter().map(|v| v.name.clone()).filter(|n| !covered.contains(n.as_str())).collect();
    Ok(CoverageReport {
        checker_coi: checker.coi,
        checker_proof_core: checker.proof_core,
        stimuli: stimuli.percent,
        stimuli_toggle: stimuli.toggle,
        stimuli_reachability: stimuli.reachability,
        formal_coi,
        formal_proof_core,
        rule,
        per_property: checker.per_property,
        uncovered_variables,
    })
}

/// Inclusive comparison: exactly `threshold` passes.
pub fn meets_threshold(r: &CoverageReport, threshold: f64) -> bool {
    r.formal_coi >= threshold
}

/// Table with one row per design and an average row.
pub fn render_table(rows: &[(String, CoverageReport)]) -> String {
    let mut out = String::new();
    let width = rows.iter().map(|(n, _)| n.len()).chain([7]).max().unwrap_or(7);
    let _ = writeln!(
        out,
        "{:<width$} | {:>11} | {:>10} | {:>8} | {:>10} | {:>10}",
        "Design", "Checker COI", "Proof Core", "Stimuli", "Formal COI", "Proof Core"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 65));
    let line = |out: &mut String, name: &str, c: [f64; 5]| {
        let _ = writeln!(
            out,
            "{:<width$} | {:>10.2}% | {:>9.2}% | {:>7.2}% | {:>9.2}% | {:>9.2}%",
            name, c[0], c[1], c[2], c[3], c[4]
        );
    };
    let mut sum = [0.0; 5];
    for (name, r) in rows {
        let c = [r.checker_coi, r.checker_proof_core, r.stimuli, r.formal_coi, r.formal_proof_core];
        for (s, x) in sum.iter_mut().zip(c) {
            *s += x;
        }
        line(&mut out, name, c);
    }
    if !rows.is_empty() {
        line(&mut out, "Average", sum.map(|s| s / rows.len() as f64));
    }
    out
}
