//! Dialogue datasets: merged outpatient cases, schema-locked record
//! generation, ESFT conversions and JSON Lines I/O.

mod cases;
mod convert;
mod generate;
mod jsonl;
mod schema;

pub use cases::{
    is_textual_time, merge_cases, read_diagnoses, read_records, serial_to_datetime, write_diagnoses, write_records,
    CaseError, Diagnosis, DiagnosisRow, MergeOutcome, MergedCase, MissingFrom, NarrativeField, Orphan, RecordRow,
    DIAGNOSIS_COLUMNS, RECORD_COLUMNS,
};
pub use convert::{convert_to_jsonl, read_rows, write_string_parquet, ConvertError, ConvertReport};
pub use generate::{
    fill, gen_all, gen_platypus, inject_knowledge, to_esft_train, to_esft_val, BackendError, ExpertTagMap, FieldKind,
    GenBackend, GenError, GenRequest, GenRun, HttpBackend, HttpBackendConfig, MockBackend, MockTemplates,
    PromptTemplates, TurnTemplate, PROMPT_VERSION,
};
pub use jsonl::{read_jsonl, read_values, write_jsonl, BadLine, JsonlRead};
pub use schema::{
    char_len, validate_record, validate_value, EsftTrainRecord, EsftValRecord, Message, PlatypusRecord, Schema,
    SchemaRecord, Violation, DOCTOR, PATIENT, SUMMARY_CUE, USER_PREFIX, VAL_PROMPT_PREFIX, VAL_PROMPT_SUFFIX,
};
