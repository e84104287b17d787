//! Property-generation pipeline: spec ingestion and prompt construction,
//! provider-backed generation, vacuity filtering, SVA emission and repair,
//! model checking, coverage-gated refinement, and bug reporting.

pub mod extract;
pub mod prompt;
pub mod provider;
pub mod report;
pub mod retrieval;
pub mod spec;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{coverage_report, meets_threshold, property_coi, CompositeRule, CoverageError, CoverageReport};
use crate::formula::{parse_property_block, Property};
use crate::mc::{CheckError, CheckOptions, DEFAULT_MAX_PRODUCT_STATES};
use crate::model::{Lasso, Model};
use crate::vacuity::{check_vacuity_with, VacuityMode, VacuityReport, VacuityVerdict};

use extract::{extract_properties, parse_candidate};
use prompt::{Category, Prompt, PromptDatabase, PromptError, Stage, Templates};
use provider::{complete_with_retry, Provider, ProviderConfig, ProviderError};
use report::{Bug, CexDigest, ExchangeRef, Funnel, RunReport, Settings, TrajectoryPoint};
use retrieval::{Chunk, Corpus};
use spec::{IpView, SpecFile};

pub use report::Header;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

/// Position of a record in the funnel. Later variants imply earlier ones,
/// except that `Proved` and `Failed` are alternative outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Generated,
    Correct,
    NonVacuous,
    SvaEmitted,
    SvaCorrect,
    Proved,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRef {
    pub holds: bool,
    pub counterexample: Option<Lasso>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub id: String,
    pub prompt_id: String,
    pub iteration: usize,
    pub raw_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repaired_text: Option<String>,
    pub name: Option<String>,
    pub formula: Option<String>,
    pub status: Status,
    /// Produced from a prompt carrying threat-model context.
    pub augmented: bool,
    pub vacuity: Option<VacuityReport>,
    pub verdict: Option<VerdictRef>,
    pub sva: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub property: Option<Property>,
}

impl PropertyRecord {
    fn new(id: String, prompt_id: &str, iteration: usize, raw_text: String, augmented: bool) -> Self {
        PropertyRecord {
            id,
            prompt_id: prompt_id.to_string(),
            iteration,
            raw_text,
            repaired_text: None,
            name: None,
            formula: None,
            status: Status::Generated,
            augmented,
            vacuity: None,
            verdict: None,
            sva: None,
            notes: Vec::new(),
            property: None,
        }
    }

    fn accept(&mut self, p: Property) {
        self.name = Some(p.name.clone());
        self.formula = Some(p.formula.to_string());
        self.status = Status::Correct;
        self.property = Some(p);
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub threshold: f64,
    pub max_iter: usize,
    pub mode: VacuityMode,
    pub rule: CompositeRule,
    pub provider: ProviderConfig,
    pub templates: Templates,
    pub prompt_db: PromptDatabase,
    /// Chunks of retrieved documentation per prompt.
    pub retrieval_k: usize,
    /// IP to target; defaults to the IP named like the model, else the first.
    pub ip: Option<String>,
    pub clock: String,
    pub max_product_states: usize,
    /// Send a cex-analysis prompt for every failed property.
    pub cex_analysis: bool,
    /// Overrides the report timestamp.
    pub timestamp: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            threshold: crate::coverage::DEFAULT_THRESHOLD,
            max_iter: 5,
            mode: VacuityMode::default(),
            rule: CompositeRule::default(),
            provider: ProviderConfig::default(),
            templates: Templates::default(),
            prompt_db: PromptDatabase::default(),
            retrieval_k: 3,
            ip: None,
            clock: "clk".into(),
            max_product_states: DEFAULT_MAX_PRODUCT_STATES,
            cex_analysis: false,
            timestamp: None,
        }
    }
}

/// Provider access for one run: serialized calls and an exchange log.
pub struct Session<'a> {
    pub provider: &'a mut dyn Provider,
    pub cfg: &'a PipelineConfig,
    pub exchanges: Vec<ExchangeRef>,
    system: String,
}

impl<'a> Session<'a> {
    pub fn new(provider: &'a mut dyn Provider, cfg: &'a PipelineConfig) -> Result<Self, PromptError> {
        let system = cfg.templates.build_prompt(Stage::SystemSetup, None, &[], &BTreeMap::new())?.text;
        Ok(Session { provider, cfg, exchanges: Vec::new(), system })
    }

    pub fn send(&mut self, prompt_id: &str, stages: Vec<Stage>, text: &str) -> Result<String, ProviderError> {
        let req = self.cfg.provider.request(&self.system, text);
        self.exchanges.push(ExchangeRef { prompt_id: prompt_id.to_string(), stages, prompt_hash: req.hash() });
        complete_with_retry(self.provider, &req, &self.cfg.provider)
    }

    /// Sends `prompt`, extracts candidate properties and parses them. A
    /// candidate that fails to parse gets one sva-fix round trip.
    pub fn generate_properties(
        &mut self,
        prompt: &Prompt,
        stages: Vec<Stage>,
        prompt_id: &str,
        iteration: usize,
        augmented: bool,
    ) -> Result<Vec<PropertyRecord>, PipelineError> {
        let response = self.send(prompt_id, stages, &prompt.text)?;
        let candidates = extract_properties(&response);
        if candidates.is_empty() {
            log::warn!("prompt {prompt_id}: response contains no property blocks");
        }
        let mut out = Vec::new();
        for (j, text) in candidates.into_iter().enumerate() {
            let id = format!("{prompt_id}.{}", j + 1);
            let mut rec = PropertyRecord::new(id.clone(), prompt_id, iteration, text.clone(), augmented);
            match parse_candidate(&text) {
                Ok(p) => rec.accept(p),
                Err(e) => {
                    rec.notes.push(format!("parse: {e}"));
                    let extras: BTreeMap<String, String> = [
                        ("file", format!("{id}.sva")),
                        ("near", e.near.clone()),
                        ("error", e.to_string()),
                        ("property", text.clone()),
                    ]
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect();
                    let fix = self.cfg.templates.build_prompt(Stage::SvaFix, None, &[], &extras)?;
                    let reply = self.send(&format!("{id}-fix"), vec![Stage::SvaFix], &fix.text)?;
                    match extract_properties(&reply).first().map(|c| (c.clone(), parse_candidate(c))) {
                        Some((fixed, Ok(p))) => {
                            rec.repaired_text = Some(fixed);
                            rec.accept(p);
                        }
                        Some((_, Err(e))) => rec.notes.push(format!("repair: {e}")),
                        None => rec.notes.push("repair: no property in reply".into()),
                    }
                }
            }
            out.push(rec);
        }
        Ok(out)
    }
}

/// Convenience wrapper: one prompt, fresh session.
pub fn generate_properties(
    provider: &mut dyn Provider,
    cfg: &PipelineConfig,
    prompt: &Prompt,
) -> Result<Vec<PropertyRecord>, PipelineError> {
    let mut s = Session::new(provider, cfg)?;
    s.generate_properties(prompt, vec![prompt.stage], "P0", 0, false)
}

/// Vacuity filter, SVA emission and round trip, and the model-checking
/// verdict for one parsed record.
pub fn process_record(m: &Model, rec: &mut PropertyRecord, cfg: &PipelineConfig) -> Result<(), CheckError> {
    let Some(p) = rec.property.clone() else { return Ok(()) };
    let opts = CheckOptions { assume: p.assumption(), max_product_states: cfg.max_product_states };
    let report = match check_vacuity_with(m, &p.formula, cfg.mode, &opts) {
        Ok(r) => r,
        Err(CheckError::ResourceLimit(n)) => return Err(CheckError::ResourceLimit(n)),
        Err(e) => {
            rec.notes.push(format!("check: {e}"));
            return Ok(());
        }
    };
    let vacuous = matches!(report.verdict, VacuityVerdict::Vacuous { .. });
    let holds = report.holds;
    let cex = report.counterexample.clone();
    rec.vacuity = Some(report);
    if vacuous {
        return Ok(());
    }
    rec.status = Status::NonVacuous;
    let sva = emit(&p, &cfg.clock);
    rec.status = Status::SvaEmitted;
    match parse_property_block(&sva) {
        Ok(back) if back.formula == p.formula && back.disable == p.disable => rec.status = Status::SvaCorrect,
        Ok(_) => rec.notes.push("sva: round trip changed the property".into()),
        Err(e) => rec.notes.push(format!("sva: {e}")),
    }
    rec.sva = Some(sva);
    if rec.status == Status::SvaCorrect {
        rec.status = if holds { Status::Proved } else { Status::Failed };
        rec.verdict = Some(VerdictRef { holds, counterexample: cex });
    }
    Ok(())
}

fn emit(p: &Property, default_clock: &str) -> String {
    crate::formula::emit_sva(&p.formula, &p.name, p.clock.as_deref().unwrap_or(default_clock), p.disable.as_ref())
        .text
}

/// Refinement categories that describe an uncovered variable.
pub fn variable_categories(m: &Model, var: &str) -> BTreeSet<Category> {
    let mut out = BTreeSet::new();
    let Some(v) = m.var_id(var) else { return out };
    let decl = &m.vars[v];
    out.extend(decl.tags.iter().filter_map(|t| t.parse::<Category>().ok()));
    let lower = decl.name.to_lowercase();
    if lower.contains("rst") || lower.contains("reset") {
        out.insert(Category::Reset);
    }
    if decl.width > 1 {
        out.insert(Category::Corner);
    }
    if m.deps.contains(&(v, v)) {
        out.insert(Category::Sequential);
    }
    let preds = |x: usize| m.deps.iter().filter(move |&&(a, b)| b == x && a != x).map(|&(a, _)| a);
    if preds(v).any(|a| preds(a).next().is_some()) {
        out.insert(Category::MultiCycle);
    }
    out
}

fn uncovered_categories(m: &Model, uncovered: &[String]) -> BTreeSet<Category> {
    let mut out: BTreeSet<Category> = uncovered.iter().flat_map(|v| variable_categories(m, v)).collect();
    if !uncovered.is_empty() && m.reachable_states().len() < m.num_states() {
        out.insert(Category::Unreachable);
    }
    out
}

fn choose_ip(spec: &SpecFile, m: &Model, cfg: &PipelineConfig) -> IpView {
    let name = cfg.ip.clone().or_else(|| {
        spec.ip_blocks
            .iter()
            .find(|ip| ip.name.eq_ignore_ascii_case(&m.name))
            .or(spec.ip_blocks.first())
            .map(|ip| ip.name.clone())
    });
    spec.view(name.as_deref())
}

struct Run<'a, 'b> {
    m: &'a Model,
    cfg: &'a PipelineConfig,
    view: IpView,
    context: Vec<Chunk>,
    session: Session<'b>,
    records: Vec<PropertyRecord>,
    names: BTreeSet<String>,
    trajectory: Vec<TrajectoryPoint>,
    coverage: Option<CoverageReport>,
}

impl Run<'_, '_> {
    /// Makes property names unique across the run and processes the batch.
    fn merge(&mut self, mut batch: Vec<PropertyRecord>) -> Result<(), CheckError> {
        for rec in &mut batch {
            if let Some(p) = &mut rec.property {
                let mut name = p.name.clone();
                let mut k = 2;
                while self.names.contains(&name) {
                    name = format!("{}_{k}", p.name);
                    k += 1;
                }
                self.names.insert(name.clone());
                p.name = name.clone();
                rec.name = Some(name);
            }
        }
        let result = batch.iter_mut().try_for_each(|rec| process_record(self.m, rec, self.cfg));
        self.records.extend(batch);
        result
    }

    fn measure(&mut self, iteration: usize, prompt_id: &str, database_prompt: Option<String>) -> Result<(), CoverageError> {
        let proved: Vec<Property> = self
            .records
            .iter()
            .filter(|r| r.status == Status::Proved)
            .filter_map(|r| r.property.clone())
            .collect();
        let cov = coverage_report(self.m, &proved, self.cfg.rule)?;
        self.trajectory.push(TrajectoryPoint {
            iteration,
            prompt_id: prompt_id.to_string(),
            database_prompt,
            proved: proved.len(),
            checker_coi: cov.checker_coi,
            checker_proof_core: cov.checker_proof_core,
            stimuli: cov.stimuli,
            formal_coi: cov.formal_coi,
            formal_proof_core: cov.formal_proof_core,
        });
        self.coverage = Some(cov);
        Ok(())
    }

    fn initial(&mut self) -> Result<(), PipelineError> {
        let augmented = self.view.threat_model().is_some();
        let t = &self.cfg.templates;
        let extraction = t.build_prompt(Stage::SpecExtraction, Some(&self.view), &self.context, &BTreeMap::new())?;
        let rules = t.build_prompt(Stage::VacuityRules, Some(&self.view), &self.context, &BTreeMap::new())?;
        let prompt = Prompt {
            stage: Stage::SpecExtraction,
            text: format!("{}\n{}", extraction.text, rules.text),
            attachments: extraction.attachments,
        };
        let batch = self.session.generate_properties(
            &prompt,
            vec![Stage::SpecExtraction, Stage::VacuityRules],
            "P0",
            0,
            augmented,
        )?;
        self.merge(batch)?;
        self.measure(0, "P0", None)?;
        Ok(())
    }

    fn refine(&mut self, iteration: usize, cursor: &mut usize) -> Result<(), PipelineError> {
        let cov = self.coverage.clone().expect("measured");
        let cats = uncovered_categories(self.m, &cov.uncovered_variables);
        let entry = self.cfg.prompt_db.select(cursor, &cats).map(|e| e.text.clone());
        let uncovered =
            if cov.uncovered_variables.is_empty() { "none".to_string() } else { cov.uncovered_variables.join(", ") };
        let extras: BTreeMap<String, String> = [
            (
                "coverage",
                format!(
                    "checker COI {:.2}%, proof core {:.2}%, stimuli {:.2}%, formal COI {:.2}%",
                    cov.checker_coi, cov.checker_proof_core, cov.stimuli, cov.formal_coi
                ),
            ),
            ("uncovered", uncovered),
            ("database_prompt", entry.clone().unwrap_or_default()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let prompt = self.cfg.templates.build_prompt(Stage::Refinement, Some(&self.view), &self.context, &extras)?;
        let id = format!("R{iteration}");
        let augmented = self.view.threat_model().is_some();
        let batch = self.session.generate_properties(&prompt, vec![Stage::Refinement], &id, iteration, augmented)?;
        self.merge(batch)?;
        self.measure(iteration, &id, entry)?;
        Ok(())
    }

    fn failures(&mut self) -> Result<(Vec<CexDigest>, Vec<Bug>, Vec<String>), PipelineError> {
        let (mut cexs, mut bugs, mut plain) = (Vec::new(), Vec::new(), Vec::new());
        let failed: Vec<usize> = (0..self.records.len()).filter(|&i| self.records[i].status == Status::Failed).collect();
        for i in failed {
            let rec = self.records[i].clone();
            let p = rec.property.clone().expect("failed records are parsed");
            let coi: Vec<String> = property_coi(self.m, &p)?.into_iter().map(|v| self.m.vars[v].name.clone()).collect();
            let lasso = rec.verdict.as_ref().and_then(|v| v.counterexample.clone());
            let shown: Vec<String> = p.formula.variables().into_iter().filter(|v| self.m.var_id(v).is_some()).collect();
            let table = lasso.as_ref().map(|l| l.render_table(self.m, &shown)).unwrap_or_default();
            let name = rec.name.clone().unwrap_or_default();
            let mut digest = CexDigest::new(&rec.id, &name, lasso, table);
            if self.cfg.cex_analysis {
                let extras: BTreeMap<String, String> =
                    [("cex".to_string(), format!("{}\n{}", rec.sva.clone().unwrap_or_default(), digest.table))]
                        .into_iter()
                        .collect();
                let prompt = self.cfg.templates.build_prompt(Stage::CexAnalysis, Some(&self.view), &[], &extras)?;
                digest.analysis = Some(self.session.send(&format!("{}-cex", rec.id), vec![Stage::CexAnalysis], &prompt.text)?);
            }
            let assets: Vec<String> = self
                .view
                .assets
                .iter()
                .filter(|a| a.signals().iter().any(|s| coi.contains(s)))
                .map(|a| a.name.clone())
                .collect();
            if !assets.is_empty() || rec.augmented {
                bugs.push(Bug {
                    record: rec.id.clone(),
                    property: name,
                    sva: rec.sva.clone().unwrap_or_default(),
                    assets,
                    threat_model: self.view.threat_model(),
                    coi,
                    counterexample: digest.table.clone(),
                });
            } else {
                plain.push(rec.id.clone());
            }
            cexs.push(digest);
        }
        Ok((cexs, bugs, plain))
    }
}

/// Runs the whole pipeline. Template errors are returned; provider and
/// resource failures yield a report marked incomplete.
pub fn run_pipeline(
    spec: &SpecFile,
    m: &Model,
    corpus: &Corpus,
    provider: &mut dyn Provider,
    cfg: &PipelineConfig,
) -> Result<RunReport, PipelineError> {
    let view = choose_ip(spec, m, cfg);
    let query = {
        let mut q = vec![view.module_name()];
        if let Some(ip) = &view.ip {
            q.push(ip.operation.clone());
        }
        q.extend(m.vars.iter().map(|v| v.name.clone()));
        q.join(" ")
    };
    let context: Vec<Chunk> =
        corpus.retrieve(&query, cfg.retrieval_k).into_iter().map(|s| corpus.chunks[s.chunk].clone()).collect();
    let session = Session::new(provider, cfg)?;
    let mut run = Run {
        m,
        cfg,
        view,
        context,
        session,
        records: Vec::new(),
        names: BTreeSet::new(),
        trajectory: Vec::new(),
        coverage: None,
    };

    let mut incomplete: Option<String> = None;
    let mut iterations = 0;
    match run.initial() {
        Ok(()) => {
            let mut cursor = 0;
            while !meets_threshold(run.coverage.as_ref().expect("measured"), cfg.threshold) && iterations < cfg.max_iter {
                iterations += 1;
                if let Err(e) = run.refine(iterations, &mut cursor) {
                    match e {
                        PipelineError::Prompt(e) => return Err(e.into()),
                        other => {
                            incomplete = Some(other.to_string());
                            break;
                        }
                    }
                }
            }
        }
        Err(PipelineError::Prompt(e)) => return Err(e.into()),
        Err(e) => incomplete = Some(e.to_string()),
    }
    let (counterexamples, bugs, plain_failures) = match run.failures() {
        Ok(x) => x,
        Err(PipelineError::Prompt(e)) => return Err(e.into()),
        Err(e) => {
            incomplete.get_or_insert(e.to_string());
            Default::default()
        }
    };

    let threshold_met = run.coverage.as_ref().is_some_and(|c| meets_threshold(c, cfg.threshold));
    Ok(RunReport {
        header: Header {
            generated_at: cfg.timestamp.clone().unwrap_or_else(|| chrono::Utc::now().to_rfc3339()),
        },
        design: m.name.clone(),
        ip: run.view.module_name(),
        complete: incomplete.is_none(),
        incomplete_reason: incomplete,
        settings: Settings {
            threshold: cfg.threshold,
            max_iter: cfg.max_iter,
            mode: cfg.mode,
            rule: cfg.rule,
            provider: run.session.provider.id().to_string(),
            model: cfg.provider.model.clone(),
            k_shot: cfg.templates.k_shot,
            retrieval_k: cfg.retrieval_k,
        },
        funnel: Funnel::of(&run.records),
        coverage: run.coverage.clone(),
        threshold_met,
        iterations,
        trajectory: run.trajectory,
        context: run.context.iter().map(|c| format!("{}#{}", c.doc, c.id)).collect(),
        records: run.records,
        counterexamples,
        bugs,
        plain_failures,
        exchanges: run.session.exchanges,
    })
}
