//! Run reports: JSON document and text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompt::Stage;
use super::{PropertyRecord, Status};
use crate::coverage::{render_table, CompositeRule, CoverageReport};
use crate::model::Lasso;
use crate::vacuity::VacuityMode;

/// Everything that varies between identical runs lives here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub generated_at: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub threshold: f64,
    pub max_iter: usize,
    pub mode: VacuityMode,
    pub rule: CompositeRule,
    pub provider: String,
    pub model: String,
    pub k_shot: usize,
    pub retrieval_k: usize,
}

/// Records at or beyond each funnel stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funnel {
    pub generated: usize,
    pub correct: usize,
    pub non_vacuous: usize,
    pub sva_emitted: usize,
    pub sva_correct: usize,
    pub proved: usize,
    pub failed: usize,
}

impl Funnel {
    pub fn of(records: &[PropertyRecord]) -> Funnel {
        let at_least = |s: Status| records.iter().filter(|r| r.status >= s).count();
        let exactly = |s: Status| records.iter().filter(|r| r.status == s).count();
        Funnel {
            generated: records.len(),
            correct: at_least(Status::Correct),
            non_vacuous: at_least(Status::NonVacuous),
            sva_emitted: at_least(Status::SvaEmitted),
            sva_correct: at_least(Status::SvaCorrect),
            proved: exactly(Status::Proved),
            failed: exactly(Status::Failed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub prompt_id: String,
    pub database_prompt: Option<String>,
    pub proved: usize,
    pub checker_coi: f64,
    pub checker_proof_core: f64,
    pub stimuli: f64,
    pub formal_coi: f64,
    pub formal_proof_core: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CexDigest {
    pub record: String,
    pub property: String,
    /// First 16 hex digits of the SHA-256 of `table`.
    pub digest: String,
    pub lasso: Option<Lasso>,
    pub table: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<String>,
}

impl CexDigest {
    pub fn new(record: &str, property: &str, lasso: Option<Lasso>, table: String) -> Self {
        let digest = hex::encode(Sha256::digest(table.as_bytes()))[..16].to_string();
        CexDigest { record: record.into(), property: property.into(), digest, lasso, table, analysis: None }
    }
}

/// A failed assertion tied to a secure asset or threat-model context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bug {
    pub record: String,
    pub property: String,
    pub sva: String,
    pub assets: Vec<String>,
    pub threat_model: Option<String>,
    pub coi: Vec<String>,
    pub counterexample: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeRef {
    pub prompt_id: String,
    pub stages: Vec<Stage>,
    pub prompt_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub header: Header,
    pub design: String,
    pub ip: String,
    pub complete: bool,
    pub incomplete_reason: Option<String>,
    pub settings: Settings,
    pub funnel: Funnel,
    pub coverage: Option<CoverageReport>,
    pub threshold_met: bool,
    /// Refinement iterations run after the initial generation.
    pub iterations: usize,
    pub trajectory: Vec<TrajectoryPoint>,
    /// Retrieved documentation chunks, as `doc#id`.
    pub context: Vec<String>,
    pub records: Vec<PropertyRecord>,
    pub counterexamples: Vec<CexDigest>,
    pub bugs: Vec<Bug>,
    pub plain_failures: Vec<String>,
    pub exchanges: Vec<ExchangeRef>,
}

/// Exit codes shared with the command-line driver.
pub const EXIT_OK: i32 = 0;
pub const EXIT_BUGS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if !self.complete {
            EXIT_INPUT
        } else if !self.bugs.is_empty() {
            EXIT_BUGS
        } else if !self.threshold_met {
            EXIT_THRESHOLD
        } else {
            EXIT_OK
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn render_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "Run report: {} ({})", self.design, self.ip);
        let _ = writeln!(o, "Generated at: {}", self.header.generated_at);
        if let Some(r) = &self.incomplete_reason {
            let _ = writeln!(o, "INCOMPLETE: {r}");
        }
        let f = &self.funnel;
        let _ = writeln!(o, "\nProperty funnel");
        let _ = writeln!(
            o,
            "{:>10} | {:>8} | {:>12} | {:>14} | {:>12} | {:>7} | {:>7}",
            "#generated", "#correct", "#non-vacuous", "#sva-generated", "#sva-correct", "#proved", "#failed"
        );
        let _ = writeln!(
            o,
            "{:>10} | {:>8} | {:>12} | {:>14} | {:>12} | {:>7} | {:>7}",
            f.generated, f.correct, f.non_vacuous, f.sva_emitted, f.sva_correct, f.proved, f.failed
        );
        if let Some(c) = &self.coverage {
            let _ = writeln!(o, "\nCoverage ({:?} rule)", c.rule);
            o.push_str(&render_table(&[(self.ip.clone(), c.clone())]));
            if !c.uncovered_variables.is_empty() {
                let _ = writeln!(o, "Uncovered: {}", c.uncovered_variables.join(", "));
            }
        }
        let _ = writeln!(o, "\nCoverage trajectory");
        for t in &self.trajectory {
            let _ = writeln!(
                o,
                "  iter {} [{}] proved {:>3}  formal COI {:>6.2}%{}",
                t.iteration,
                t.prompt_id,
                t.proved,
                t.formal_coi,
                t.database_prompt.as_ref().map(|p| format!("  \"{p}\"")).unwrap_or_default()
            );
        }
        let _ = writeln!(
            o,
            "Threshold {:.0}%: {}",
            self.settings.threshold,
            if self.threshold_met { "met" } else { "not met" }
        );
        if !self.bugs.is_empty() {
            let _ = writeln!(o, "\nBugs");
            for b in &self.bugs {
                let _ = writeln!(o, "- {} ({})", b.property, b.record);
                if !b.assets.is_empty() {
                    let _ = writeln!(o, "  assets: {}", b.assets.join(", "));
                }
                if let Some(t) = &b.threat_model {
                    let _ = writeln!(o, "  threat model: {}", t.replace('\n', "; "));
                }
                for line in b.sva.lines() {
                    let _ = writeln!(o, "  {line}");
                }
                for line in b.counterexample.lines() {
                    let _ = writeln!(o, "    {line}");
                }
            }
        }
        if !self.plain_failures.is_empty() {
            let _ = writeln!(o, "\nOther failures: {}", self.plain_failures.join(", "));
        }
        o
    }
}
