//! `vacfv`: model checking, vacuity analysis, coverage and the
//! property-generation pipeline from the command line.
//!
//! Exit codes: 0 success, 1 a property failed or a bug was found,
//! 2 invalid input or an incomplete run, 3 coverage below threshold.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use vacfv::coverage::{coverage_report, render_table, CompositeRule};
use vacfv::formula::{parse_property_file, Property};
use vacfv::mc::{check_with, CheckOptions};
use vacfv::model::{load_model, LoadOptions, Model};
use vacfv::pipeline::prompt::{PromptDatabase, Templates};
use vacfv::pipeline::provider::{HttpProvider, Provider, ProviderConfig, RecordingProvider, ReplayProvider};
use vacfv::pipeline::report::{EXIT_BUGS, EXIT_INPUT, EXIT_OK};
use vacfv::pipeline::retrieval::{Corpus, DEFAULT_OVERLAP, DEFAULT_WINDOW};
use vacfv::pipeline::spec::ingest_spec_file;
use vacfv::pipeline::{run_pipeline, PipelineConfig};
use vacfv::vacuity::{check_vacuity_with, VacuityMode, VacuityVerdict};

#[derive(Parser)]
#[command(name = "vacfv", version, about = "Vacuity-aware formal property verification")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model-check every property of a property file.
    Check(CheckArgs),
    /// Classify every property as vacuous, non-vacuous or failing.
    Vacuity(VacuityArgs),
    /// Checker, stimuli and formal coverage of a proven property set.
    Coverage(CoverageArgs),
    /// Generate, screen and check properties for a design.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct Inputs {
    /// Design model (explicit or FSM JSON).
    #[arg(long)]
    model: PathBuf,
    /// Property file(s) in the SVA subset.
    #[arg(long, required = true)]
    props: Vec<PathBuf>,
    /// Give dead-end states a self-loop instead of rejecting the model.
    #[arg(long)]
    complete_selfloop: bool,
}

#[derive(Args)]
struct Output {
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Write the output to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VacuityArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value_t = ModeArg::AllOccurrences)]
    mode: ModeArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value_t = RuleArg::Product)]
    rule: RuleArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PipelineArgs {
    /// Design model (explicit or FSM JSON).
    #[arg(long)]
    model: PathBuf,
    /// SoC specification JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Directory of .txt/.md design documents for retrieval.
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProviderArg::Replay)]
    provider: ProviderArg,
    /// Transcript to replay (required with `--provider replay`).
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Save every provider exchange of this run to a transcript.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Provider settings JSON (model, temperature, retries, env names).
    #[arg(long)]
    provider_config: Option<PathBuf>,
    /// Formal COI coverage target, in percent.
    #[arg(long, default_value_t = 80.0, value_parser = parse_threshold)]
    threshold: f64,
    /// Refinement iterations after the initial generation.
    #[arg(long, default_value_t = 5)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::AllOccurrences)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = RuleArg::Product)]
    rule: RuleArg,
    /// Directory overriding prompt templates (`<stage>.txt`).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Refinement prompt database, one prompt per line.
    #[arg(long)]
    prompt_db: Option<PathBuf>,
    /// IP block to target.
    #[arg(long)]
    ip: Option<String>,
    /// Reject specs whose declared IP count disagrees with the IP list.
    #[arg(long)]
    strict: bool,
    /// Ask the provider to explain each counterexample.
    #[arg(long)]
    cex_analysis: bool,
    /// Fixed report timestamp.
    #[arg(long)]
    timestamp: Option<String>,
    /// Give dead-end states a self-loop instead of rejecting the model.
    #[arg(long)]
    complete_selfloop: bool,
    /// Print the JSON report instead of text.
    #[arg(long)]
    json: bool,
    /// Write the JSON report here and the text report next to it (`.txt`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    AllOccurrences,
    Exhaustive,
}

impl From<ModeArg> for VacuityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => VacuityMode::Single,
            ModeArg::AllOccurrences => VacuityMode::AllOccurrences,
            ModeArg::Exhaustive => VacuityMode::Exhaustive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Product,
    Min,
    Harmonic,
}

impl From<RuleArg> for CompositeRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Product => CompositeRule::Product,
            RuleArg::Min => CompositeRule::Min,
            RuleArg::Harmonic => CompositeRule::HarmonicMean,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Replay,
    Http,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("threshold {v} is outside [0, 100]"))
    }
}

/// Input failure: reported and mapped to exit code 2.
struct InputError(anyhow::Error);

type Outcome = std::result::Result<i32, InputError>;

fn input<T>(r: Result<T>) -> std::result::Result<T, InputError> {
    r.map_err(InputError)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Check(a) => run_check(a),
        Command::Vacuity(a) => run_vacuity(a),
        Command::Coverage(a) => run_coverage(a),
        Command::Pipeline(a) => run_pipeline_cmd(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}

fn load_inputs(i: &Inputs) -> Result<(Model, Vec<Property>)> {
    let opts = LoadOptions { complete_selfloop: i.complete_selfloop, ..Default::default() };
    let model = load_model(&i.model, &opts).with_context(|| format!("loading model {}", i.model.display()))?;
    let mut props = Vec::new();
    for path in &i.props {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = parse_property_file(&text).with_context(|| format!("parsing {}", path.display()))?;
        if parsed.is_empty() {
            bail!("{}: no properties found", path.display());
        }
        props.extend(parsed);
    }
    Ok((model, props))
}

/// Opens the destination before any work so a bad path fails fast.
fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn create(p: &Path) -> Result<File> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(p).with_context(|| format!("creating {}", p.display()))
}

fn options(p: &Property) -> CheckOptions {
    CheckOptions { assume: p.assumption(), ..Default::default() }
}

/// Variables of the property that the model declares, for trace tables.
fn trace_vars(m: &Model, p: &Property) -> Vec<String> {
    let mut vars = p.formula.variables();
    if let Some(d) = &p.disable {
        vars.extend(d.variables());
    }
    vars.into_iter().filter(|v| m.base_var(v).is_some()).collect()
}

fn indent(text: &str, by: &str) -> String {
    text.lines().map(|l| format!("{by}{l}\n")).collect()
}

fn run_check(a: CheckArgs) -> Outcome {
    let mut out = input(open_output(&a.output.out))?;
    let (m, props) = input(load_inputs(&a.inputs))?;
    let mut all = true;
    let mut text = String::new();
    let mut json = Vec::new();
    for p in &props {
        let v = input(check_with(&m, &p.formula, &options(p)).with_context(|| format!("checking {}", p.name)))?;
        all &= v.holds;
        text.push_str(&format!("{}: {}\n", p.name, if v.holds { "proved" } else { "failed" }));
        if let Some(cex) = &v.counterexample {
            text.push_str("  counterexample:\n");
            text.push_str(&indent(&cex.render_table(&m, &trace_vars(&m, p)), "  "));
        }
        json.push(serde_json::json!({ "name": p.name, "formula": p.formula.to_string(), "verdict": v }));
    }
    input(emit(&mut out, a.output.json, &text, &serde_json::Value::Array(json)))?;
    Ok(if all { EXIT_OK } else { EXIT_BUGS })
}

fn run_vacuity(a: VacuityArgs) -> Outcome {
    let mut out = input(open_output(&a.output.out))?;
    let (m, props) = input(load_inputs(&a.inputs))?;
    let mode = VacuityMode::from(a.mode);
    let mut all = true;
    let mut text = String::new();
    let mut json = Vec::new();
    for p in &props {
        let r = input(
            check_vacuity_with(&m, &p.formula, mode, &options(p)).with_context(|| format!("analysing {}", p.name)),
        )?;
        all &= r.is_non_vacuous();
        text.push_str(&format!("{}: {}\n", p.name, p.formula));
        match &r.verdict {
            VacuityVerdict::Fails => text.push_str("  Fails (vacuity undefined)\n"),
            VacuityVerdict::NonVacuous => text.push_str("  Non-Vacuous: True\n"),
            VacuityVerdict::Vacuous { groups, .. } => {
                text.push_str("  Non-Vacuous: False\n");
                for g in groups {
                    text.push_str(&format!("  all occurrences of {g} together are non-affecting\n"));
                }
            }
        }
        if !r.occurrences.is_empty() {
            let w = r.occurrences.iter().map(|o| o.subformula.len()).max().unwrap_or(0).max(10);
            text.push_str(&format!("  {:<w$} | {:>7} | {:>6} | {:>7}\n", "occurrence", "affects", "f[1]", "f[0]"));
            for o in &r.occurrences {
                text.push_str(&format!(
                    "  {:<w$} | {:>7} | {:>6} | {:>7}\n",
                    o.subformula, o.affects, o.sat_under_true, o.sat_under_false
                ));
            }
        }
        if let Some(wit) = &r.witness {
            text.push_str("  interesting witness:\n");
            text.push_str(&indent(&wit.render_table(&m, &trace_vars(&m, p)), "  "));
        }
        if let Some(cex) = &r.counterexample {
            text.push_str("  counterexample:\n");
            text.push_str(&indent(&cex.render_table(&m, &trace_vars(&m, p)), "  "));
        }
        json.push(serde_json::json!({ "name": p.name, "report": r }));
    }
    input(emit(&mut out, a.output.json, &text, &serde_json::Value::Array(json)))?;
    Ok(if all { EXIT_OK } else { EXIT_BUGS })
}

fn run_coverage(a: CoverageArgs) -> Outcome {
    let mut out = input(open_output(&a.output.out))?;
    let (m, props) = input(load_inputs(&a.inputs))?;
    let r = input(coverage_report(&m, &props, a.rule.into()).context("computing coverage"))?;
    let mut text = render_table(&[(m.name.clone(), r.clone())]);
    for p in &r.per_property {
        text.push_str(&format!("{}: COI {{{}}} proof core {{{}}}\n", p.name, p.coi.join(", "), p.proof_core.join(", ")));
    }
    if !r.uncovered_variables.is_empty() {
        text.push_str(&format!("Uncovered: {}\n", r.uncovered_variables.join(", ")));
    }
    input(emit(&mut out, a.output.json, &text, &serde_json::to_value(&r).expect("report serializes")))?;
    Ok(EXIT_OK)
}

fn emit(out: &mut dyn Write, json: bool, text: &str, value: &serde_json::Value) -> Result<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    } else {
        out.write_all(text.as_bytes())?;
    }
    Ok(())
}

fn provider(a: &PipelineArgs, cfg: &ProviderConfig) -> Result<Box<dyn Provider>> {
    Ok(match a.provider {
        ProviderArg::Replay => {
            let t = a.transcript.as_ref().context("--provider replay needs --transcript")?;
            Box::new(ReplayProvider::from_file(t).with_context(|| format!("loading transcript {}", t.display()))?)
        }
        ProviderArg::Http => Box::new(HttpProvider::from_env(cfg)?),
    })
}

fn run_pipeline_cmd(a: PipelineArgs) -> Outcome {
    let mut files = None;
    if let Some(p) = &a.out {
        files = Some((input(create(p))?, input(create(&p.with_extension("txt")))?));
    }
    let mut record_file = None;
    if let Some(p) = &a.record {
        record_file = Some(input(create(p))?);
    }

    let opts = LoadOptions { complete_selfloop: a.complete_selfloop, ..Default::default() };
    let m = input(load_model(&a.model, &opts).with_context(|| format!("loading model {}", a.model.display())))?;
    let spec = input(ingest_spec_file(&a.spec, a.strict).with_context(|| format!("loading spec {}", a.spec.display())))?;
    let corpus = match &a.docs {
        Some(d) => input(
            Corpus::from_dir(d, DEFAULT_WINDOW, DEFAULT_OVERLAP).with_context(|| format!("reading docs {}", d.display())),
        )?,
        None => Corpus::default(),
    };
    let provider_cfg = match &a.provider_config {
        Some(p) => input(ProviderConfig::load(p).map_err(anyhow::Error::from))?,
        None => ProviderConfig::default(),
    };
    let templates = match &a.templates {
        Some(d) => input(Templates::from_dir(d).with_context(|| format!("loading templates {}", d.display())))?,
        None => Templates::default(),
    };
    let prompt_db = match &a.prompt_db {
        Some(p) => PromptDatabase::parse(&input(
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        )?),
        None => PromptDatabase::default(),
    };
    let cfg = PipelineConfig {
        threshold: a.threshold,
        max_iter: a.max_iter,
        mode: a.mode.into(),
        rule: a.rule.into(),
        provider: provider_cfg.clone(),
        templates,
        prompt_db,
        ip: a.ip.clone(),
        cex_analysis: a.cex_analysis,
        timestamp: a.timestamp.clone(),
        ..Default::default()
    };

    let mut recorder = RecordingProvider::new(input(provider(&a, &provider_cfg))?);
    let report = input(run_pipeline(&spec, &m, &corpus, &mut recorder, &cfg).context("running pipeline"))?;
    if let Some(mut f) = record_file {
        input(
            serde_json::to_writer_pretty(&mut f, &recorder.exchanges)
                .map_err(anyhow::Error::from)
                .and_then(|_| Ok(writeln!(f)?)),
        )?;
    }

    let json = report.to_json();
    let text = report.render_text();
    if let Some((mut jf, mut tf)) = files {
        input(jf.write_all(json.as_bytes()).and_then(|_| tf.write_all(text.as_bytes())).context("writing report"))?;
    }
    print!("{}", if a.json { &json } else { &text });
    if let Some(r) = &report.incomplete_reason {
        eprintln!("error: run incomplete: {r}");
    }
    Ok(report.exit_code())
}
