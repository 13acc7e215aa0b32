//! Record generation. The backend writes field content only; the record
//! itself is assembled here with fixed key names, then validated.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cases::MergedCase;
use super::schema::*;
use crate::retry::RetryPolicy;

pub const PROMPT_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Input,
    Output,
    Instruction,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Input => "input",
            FieldKind::Output => "output",
            FieldKind::Instruction => "instruction",
        })
    }
}

pub struct GenRequest<'a> {
    pub field: FieldKind,
    /// The rendered prompt for text-completion backends.
    pub prompt: String,
    pub case: &'a MergedCase,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("empty response")]
    Empty,
}

impl BackendError {
    fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status(s) => *s == 429 || *s >= 500,
            BackendError::Decode(_) | BackendError::Empty => false,
        }
    }
}

pub trait GenBackend: Send + Sync {
    fn name(&self) -> String;
    fn generate(&self, request: &GenRequest<'_>) -> Result<String, BackendError>;
}

/// Replaces each `{key}` in `template`; unknown placeholders stay as they are.
pub fn fill(template: &str, values: &BTreeMap<&str, String>) -> String {
    let mut out = template.to_string();
    for (key, value) in values {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

fn case_values(case: &MergedCase) -> BTreeMap<&'static str, String> {
    let narrative = case.narrative_fields.iter().map(|f| format!("{}: {}", f.name, f.text)).collect::<Vec<_>>().join("\n");
    BTreeMap::from([
        ("visit_id", case.visit_id.to_string()),
        ("gender", case.gender.clone()),
        ("age", case.age.clone()),
        ("age_unit", case.age_unit.clone()),
        ("department", case.department.clone()),
        ("clinic_type", case.clinic_type.clone()),
        ("record_type", case.record_type.clone()),
        ("diagnoses", case.diagnosis_line()),
        ("narrative", narrative),
        ("treatment_plan", case.field("Treatment Plan").unwrap_or("to be decided").to_string()),
    ])
}

/// Prompt templates for text-completion backends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub version: String,
    pub input: String,
    pub output: String,
    pub instruction: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            version: PROMPT_VERSION.into(),
            input: include_str!("../../templates/v1/input.txt").into(),
            output: include_str!("../../templates/v1/output.txt").into(),
            instruction: include_str!("../../templates/v1/instruction.txt").into(),
        }
    }
}

impl PromptTemplates {
    /// Loads `input.txt`, `output.txt` and `instruction.txt` from `dir`.
    pub fn from_dir(dir: &std::path::Path) -> std::io::Result<Self> {
        let read = |name: &str| std::fs::read_to_string(dir.join(name));
        Ok(PromptTemplates {
            version: dir.file_name().map_or_else(|| "custom".into(), |n| n.to_string_lossy().into_owned()),
            input: read("input.txt")?,
            output: read("output.txt")?,
            instruction: read("instruction.txt")?,
        })
    }

    pub fn render(&self, field: FieldKind, case: &MergedCase) -> String {
        let template = match field {
            FieldKind::Input => &self.input,
            FieldKind::Output => &self.output,
            FieldKind::Instruction => &self.instruction,
        };
        fill(template, &case_values(case))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct TurnTemplate {
    pub question: String,
    pub speaker: String,
}

/// Response templates of [`MockBackend`].
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct MockTemplates {
    pub instruction: String,
    pub output: String,
    pub opener: String,
    pub closing: String,
    pub fields: BTreeMap<String, TurnTemplate>,
    pub default: TurnTemplate,
}

impl Default for MockTemplates {
    fn default() -> Self {
        toml::from_str(include_str!("../../templates/v1/mock.toml")).expect("bundled mock templates parse")
    }
}

/// Offline backend: fills fixed response templates from the case, ignoring
/// the prompt. Output depends only on the case.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    pub templates: MockTemplates,
}

impl MockBackend {
    fn dialogue(&self, case: &MergedCase) -> String {
        let t = &self.templates;
        let complaint = case.field("Chief Complaint").unwrap_or("");
        let mut lines = vec![fill(&t.opener, &BTreeMap::from([("text", complaint.to_string())])).trim_end().to_string()];
        for f in case.narrative_fields.iter().filter(|f| !f.name.eq_ignore_ascii_case("Chief Complaint")) {
            let turn = t.fields.get(&f.name).unwrap_or(&t.default);
            let question = fill(&turn.question, &BTreeMap::from([("field", f.name.to_lowercase())]));
            lines.push(format!("[Doctor] {question}"));
            lines.push(format!("[{}] {}", turn.speaker, f.text));
        }
        lines.push(t.closing.clone());
        lines.join("\n")
    }
}

impl GenBackend for MockBackend {
    fn name(&self) -> String {
        format!("mock-{PROMPT_VERSION}")
    }

    fn generate(&self, request: &GenRequest<'_>) -> Result<String, BackendError> {
        let values = case_values(request.case);
        Ok(match request.field {
            FieldKind::Input => self.dialogue(request.case),
            FieldKind::Output => fill(&self.templates.output, &values),
            FieldKind::Instruction => fill(&self.templates.instruction, &values),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpBackendConfig {
    /// A text-completion endpoint taking `{"model", "prompt", "stream": false}`
    /// and answering `{"response": "..."}`.
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            endpoint: "http://127.0.0.1:11434/api/generate".into(),
            model: "llama3:70b".into(),
            timeout_ms: 120_000,
            retry: RetryPolicy::default(),
        }
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_millis(config.timeout_ms)).build();
        HttpBackend { config, agent }
    }

    fn call(&self, prompt: &str) -> Result<String, BackendError> {
        let body = serde_json::json!({ "model": self.config.model, "prompt": prompt, "stream": false });
        let response = match self.agent.post(&self.config.endpoint).send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) => return Err(BackendError::Status(code)),
            Err(e) => return Err(BackendError::Transport(e.to_string())),
        };
        let value: serde_json::Value = response.into_json().map_err(|e| BackendError::Decode(e.to_string()))?;
        match value.get("response").and_then(|r| r.as_str()) {
            Some(text) if !text.trim().is_empty() => Ok(text.to_string()),
            Some(_) => Err(BackendError::Empty),
            None => Err(BackendError::Decode("no string field `response`".into())),
        }
    }
}

impl GenBackend for HttpBackend {
    fn name(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn generate(&self, request: &GenRequest<'_>) -> Result<String, BackendError> {
        let attempted = self.config.retry.run(|_| self.call(&request.prompt), BackendError::is_retryable);
        attempted.result
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("visit {visit_id}: backend failed on {field}: {source}")]
    Backend { visit_id: u64, field: FieldKind, source: BackendError },
    #[error("visit {visit_id}: record rejected: {}", violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Rejected { visit_id: u64, violations: Vec<Violation> },
}

impl GenError {
    pub fn visit_id(&self) -> u64 {
        match self {
            GenError::Backend { visit_id, .. } | GenError::Rejected { visit_id, .. } => *visit_id,
        }
    }
}

/// Inserts one `[Knowledge] <path>` line per path before the final summary
/// cue, or appends them when there is no cue.
pub fn inject_knowledge(input: &str, paths: &[String]) -> String {
    if paths.is_empty() {
        return input.to_string();
    }
    let lines: String = paths.iter().map(|p| format!("\n[Knowledge] {p}")).collect();
    match input.rfind(SUMMARY_CUE) {
        Some(at) => format!("{}{}{}", &input[..at], lines, &input[at..]),
        None => format!("{input}{lines}"),
    }
}

/// Trims backend text and makes sure the dialogue ends with the summary cue.
fn finish_dialogue(text: &str) -> String {
    let text = text.trim();
    let body = text.strip_suffix("Summary:").map_or(text, str::trim_end);
    format!("{body}{SUMMARY_CUE}")
}

/// Builds one record: one backend call per field, fixed keys, visit time as
/// `data_source`, optional knowledge lines, then validation.
pub fn gen_platypus(
    case: &MergedCase,
    backend: &dyn GenBackend,
    prompts: &PromptTemplates,
    knowledge: Option<&[String]>,
) -> Result<PlatypusRecord, GenError> {
    let ask = |field: FieldKind| {
        let request = GenRequest { field, prompt: prompts.render(field, case), case };
        backend.generate(&request).map_err(|source| GenError::Backend { visit_id: case.visit_id, field, source })
    };
    let input = finish_dialogue(&ask(FieldKind::Input)?);
    let record = PlatypusRecord {
        input: inject_knowledge(&input, knowledge.unwrap_or(&[])),
        output: ask(FieldKind::Output)?.trim().to_string(),
        instruction: ask(FieldKind::Instruction)?.trim().to_string(),
        data_source: case.visit_time.clone(),
    };
    let violations = validate_value(&serde_json::to_value(&record).expect("record serializes"), Schema::Platypus);
    if violations.is_empty() {
        Ok(record)
    } else {
        Err(GenError::Rejected { visit_id: case.visit_id, violations })
    }
}

#[derive(Debug, Default)]
pub struct GenRun {
    /// (visit id, record), in input order.
    pub records: Vec<(u64, PlatypusRecord)>,
    pub failures: Vec<GenError>,
}

/// Generates records for all cases with at most `concurrency` backend calls
/// in flight. `knowledge` supplies the rendered paths for a case.
pub fn gen_all(
    cases: &[MergedCase],
    backend: &dyn GenBackend,
    prompts: &PromptTemplates,
    knowledge: &(dyn Fn(&MergedCase) -> Vec<String> + Sync),
    concurrency: usize,
) -> GenRun {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(concurrency.max(1)).build().expect("thread pool builds");
    let results: Vec<Result<(u64, PlatypusRecord), GenError>> = pool.install(|| {
        cases
            .par_iter()
            .map(|case| {
                let paths = knowledge(case);
                gen_platypus(case, backend, prompts, Some(&paths)).map(|r| (case.visit_id, r))
            })
            .collect()
    });
    let mut run = GenRun::default();
    for r in results {
        match r {
            Ok(pair) => run.records.push(pair),
            Err(e) => {
                log::warn!("{e}");
                run.failures.push(e);
            }
        }
    }
    run
}

pub fn to_esft_train(record: &PlatypusRecord, id: u64, expert_tags: &[String]) -> EsftTrainRecord {
    EsftTrainRecord {
        id,
        dataset: record.data_source.clone(),
        messages: vec![
            Message { role: "user".into(), content: format!("{USER_PREFIX}{}", record.input) },
            Message { role: "assistant".into(), content: record.output.clone() },
        ],
        length: char_len(&record.output),
        expert_tags: (!expert_tags.is_empty()).then(|| expert_tags.to_vec()),
    }
}

/// The prompt carries the input once; a trailing summary cue on the input is
/// absorbed into the required suffix rather than repeated.
pub fn to_esft_val(record: &PlatypusRecord, idx: u64, raw_answer: &str, answer: &str) -> EsftValRecord {
    let body = record.input.strip_suffix(SUMMARY_CUE).unwrap_or(&record.input);
    EsftValRecord {
        idx,
        prompt: format!("{VAL_PROMPT_PREFIX}{body}{VAL_PROMPT_SUFFIX}"),
        raw_answers: vec![raw_answer.to_string()],
        answers: vec![answer.to_string()],
        length: char_len(answer),
    }
}

/// Clinic type to expert tags, from a TOML `[expert_tags]` table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertTagMap {
    pub expert_tags: BTreeMap<String, Vec<String>>,
}

impl Default for ExpertTagMap {
    fn default() -> Self {
        let entries = [
            ("Clinical Psychology", &["psychiatry"][..]),
            ("Respiratory Medicine", &["respiratory", "infectious"][..]),
            ("Otolaryngology", &["ent", "infectious"][..]),
            ("Rheumatology", &["rheumatology"][..]),
        ];
        ExpertTagMap {
            expert_tags: entries.iter().map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect())).collect(),
        }
    }
}

impl ExpertTagMap {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn tags(&self, clinic_type: &str) -> &[String] {
        self.expert_tags.get(clinic_type).map_or(&[], Vec::as_slice)
    }
}
