//! Records a replay transcript for a pipeline fixture directory.
//!
//! The directory holds `model.json`, `spec.json`, `docs/` and
//! `responses.json` (the provider replies, in order). The pipeline runs
//! against those replies and the exchanges are written to
//! `transcript.json`.
//!
//! ```text
//! cargo run -p vacfv-core --example record_transcript -- fixtures/pipeline/toy-uart
//! ```

use std::path::PathBuf;

use vacfv::model::{load_model, LoadOptions};
use vacfv::pipeline::provider::{RecordingProvider, ScriptedProvider};
use vacfv::pipeline::retrieval::{Corpus, DEFAULT_OVERLAP, DEFAULT_WINDOW};
use vacfv::pipeline::spec::ingest_spec_file;
use vacfv::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).ok_or("usage: record_transcript <fixture-dir>")?);
    let model = load_model(dir.join("model.json"), &LoadOptions::default())?;
    let spec = ingest_spec_file(dir.join("spec.json"), false)?;
    let corpus = Corpus::from_dir(dir.join("docs"), DEFAULT_WINDOW, DEFAULT_OVERLAP)?;
    let responses: Vec<String> = serde_json::from_str(&std::fs::read_to_string(dir.join("responses.json"))?)?;
    let mut provider = RecordingProvider::new(ScriptedProvider::new(responses));
    let cfg = PipelineConfig { timestamp: Some("recorded".into()), ..Default::default() };
    let report = run_pipeline(&spec, &model, &corpus, &mut provider, &cfg)?;
    provider.save(dir.join("transcript.json"))?;
    print!("{}", report.render_text());
    eprintln!("{} exchanges recorded, exit code {}", provider.exchanges.len(), report.exit_code());
    Ok(())
}
