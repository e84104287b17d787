//! Prompt templates, rendering and the refinement prompt database.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::retrieval::Chunk;
use super::spec::IpView;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template '{stage}' needs a value for '{{{name}}}'")]
    MissingSubstitution { stage: Stage, name: String },
    #[error("unterminated placeholder in template '{0}'")]
    Unterminated(Stage),
    #[error("reading template {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    SystemSetup,
    VacuityRules,
    VacuityEval,
    CexAnalysis,
    SvaFix,
    Refinement,
    SpecExtraction,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::SystemSetup,
        Stage::VacuityRules,
        Stage::VacuityEval,
        Stage::CexAnalysis,
        Stage::SvaFix,
        Stage::Refinement,
        Stage::SpecExtraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::SystemSetup => "system-setup",
            Stage::VacuityRules => "vacuity-rules",
            Stage::VacuityEval => "vacuity-eval",
            Stage::CexAnalysis => "cex-analysis",
            Stage::SvaFix => "sva-fix",
            Stage::Refinement => "refinement",
            Stage::SpecExtraction => "spec-extraction",
        }
    }

    fn default_template(self) -> &'static str {
        match self {
            Stage::SystemSetup => include_str!("../../templates/system-setup.txt"),
            Stage::VacuityRules => include_str!("../../templates/vacuity-rules.txt"),
            Stage::VacuityEval => include_str!("../../templates/vacuity-eval.txt"),
            Stage::CexAnalysis => include_str!("../../templates/cex-analysis.txt"),
            Stage::SvaFix => include_str!("../../templates/sva-fix.txt"),
            Stage::Refinement => include_str!("../../templates/refinement.txt"),
            Stage::SpecExtraction => include_str!("../../templates/spec-extraction.txt"),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const THEOREMS: &str = include_str!("../../templates/theorems.txt");
pub const DEFAULT_PROMPT_DATABASE: &str = include_str!("../../templates/prompt_database.txt");
pub const DEFAULT_EXAMPLES: &str = include_str!("../../templates/kshot_examples.txt");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "kebab-case")]
pub enum Attachment {
    Chunk(String),
    Coverage(String),
    Error(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub stage: Stage,
    pub text: String,
    pub attachments: Vec<Attachment>,
}

/// Stage templates, by default the built-in set.
#[derive(Clone, Debug)]
pub struct Templates {
    texts: BTreeMap<Stage, String>,
    /// Number of k-shot examples included in the vacuity-rules prompt.
    pub k_shot: usize,
    examples: Vec<String>,
}

impl Default for Templates {
    fn default() -> Self {
        Templates {
            texts: Stage::ALL.iter().map(|&s| (s, s.default_template().to_string())).collect(),
            k_shot: 3,
            examples: split_examples(DEFAULT_EXAMPLES),
        }
    }
}

fn split_examples(text: &str) -> Vec<String> {
    text.split("\n---\n").map(|e| e.trim().to_string()).filter(|e| !e.is_empty()).collect()
}

impl Templates {
    /// Built-in templates overridden by `<stage>.txt` files found in `dir`
    /// (and `kshot_examples.txt` for the example set).
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Templates, PromptError> {
        let dir = dir.as_ref();
        let mut t = Templates::default();
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| PromptError::Io { path: p.display().to_string(), source })
        };
        for s in Stage::ALL {
            let p = dir.join(format!("{}.txt", s.name()));
            if p.exists() {
                t.texts.insert(s, read(&p)?);
            }
        }
        let p = dir.join("kshot_examples.txt");
        if p.exists() {
            t.examples = split_examples(&read(&p)?);
        }
        Ok(t)
    }

    pub fn template(&self, stage: Stage) -> &str {
        &self.texts[&stage]
    }

    /// Renders `stage`. `spec`, `module`, `context`, `theorems` and
    /// `examples` are filled from the arguments unless `extras` overrides
    /// them; every other placeholder must come from `extras`.
    pub fn build_prompt(
        &self,
        stage: Stage,
        view: Option<&IpView>,
        context: &[Chunk],
        extras: &BTreeMap<String, String>,
    ) -> Result<Prompt, PromptError> {
        let mut values: BTreeMap<&str, String> = BTreeMap::new();
        if let Some(v) = view {
            values.insert("spec", v.render());
            values.insert("module", v.module_name());
        }
        values.insert(
            "context",
            if context.is_empty() {
                "(none)".into()
            } else {
                context.iter().map(|c| format!("[{}#{}] {}", c.doc, c.id, c.text)).collect::<Vec<_>>().join("\n")
            },
        );
        values.insert("theorems", THEOREMS.trim_end().to_string());
        let k = self.k_shot.min(self.examples.len());
        values.insert("examples", self.examples[..k].join("\n\n"));
        for (k, v) in extras {
            values.insert(k.as_str(), v.clone());
        }
        let text = render(self.template(stage), stage, &values)?;

        let mut attachments: Vec<Attachment> = Vec::new();
        if self.template(stage).contains("{context}") {
            attachments.extend(context.iter().map(|c| Attachment::Chunk(c.text.clone())));
        }
        if let Some(c) = extras.get("coverage") {
            attachments.push(Attachment::Coverage(c.clone()));
        }
        if let Some(e) = extras.get("error") {
            attachments.push(Attachment::Error(e.clone()));
        }
        Ok(Prompt { stage, text, attachments })
    }
}

/// `{name}` placeholders; `{{` and `}}` are literal braces.
fn render(template: &str, stage: Stage, values: &BTreeMap<&str, String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if tail.starts_with('}') {
            out.push('}');
            rest = &tail[1..];
            continue;
        }
        let end = tail.find('}').ok_or(PromptError::Unterminated(stage))?;
        let name = &tail[1..end];
        let v = values
            .get(name)
            .ok_or_else(|| PromptError::MissingSubstitution { stage, name: name.to_string() })?;
        out.push_str(v);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Keyword tag of a refinement prompt, matched against the categories of
/// uncovered variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Reset,
    Corner,
    Sequential,
    Unreachable,
    MultiCycle,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Reset, Category::Corner, Category::Sequential, Category::Unreachable, Category::MultiCycle];

    pub fn name(self) -> &'static str {
        match self {
            Category::Reset => "reset",
            Category::Corner => "corner",
            Category::Sequential => "sequential",
            Category::Unreachable => "unreachable",
            Category::MultiCycle => "multi-cycle",
        }
    }

    /// Tag of a prompt text, from its keywords.
    pub fn of_text(text: &str) -> Option<Category> {
        let t = text.to_lowercase();
        if t.contains("reset") {
            Some(Category::Reset)
        } else if t.contains("corner") || t.contains("boundary") {
            Some(Category::Corner)
        } else if t.contains("multi-cycle") || t.contains("multicycle") {
            Some(Category::MultiCycle)
        } else if t.contains("sequential") {
            Some(Category::Sequential)
        } else if t.contains("unreachable") {
            Some(Category::Unreachable)
        } else {
            None
        }
    }
}

impl FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown category '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbEntry {
    pub text: String,
    pub tag: Option<Category>,
}

/// Line-oriented list of refinement prompts: one quoted prompt per line,
/// an optional `name:` header line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptDatabase {
    pub entries: Vec<DbEntry>,
}

impl Default for PromptDatabase {
    fn default() -> Self {
        PromptDatabase::parse(DEFAULT_PROMPT_DATABASE)
    }
}

impl PromptDatabase {
    pub fn parse(text: &str) -> PromptDatabase {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.ends_with(':'))
            .map(|l| {
                let t = l.strip_prefix('"').and_then(|l| l.strip_suffix('"')).unwrap_or(l).to_string();
                DbEntry { tag: Category::of_text(&t), text: t }
            })
            .collect();
        PromptDatabase { entries }
    }

    /// Round-robin selection starting at `*cursor`: the first entry whose
    /// tag is absent or among `categories`. If none qualifies, the entry at
    /// the cursor. Advances the cursor past the chosen entry.
    pub fn select(&self, cursor: &mut usize, categories: &BTreeSet<Category>) -> Option<&DbEntry> {
        let n = self.entries.len();
        if n == 0 {
            return None;
        }
        let start = *cursor % n;
        let pick = (0..n)
            .map(|o| (start + o) % n)
            .find(|&i| self.entries[i].tag.is_none_or(|t| categories.contains(&t)))
            .unwrap_or(start);
        *cursor = pick + 1;
        Some(&self.entries[pick])
    }
}
