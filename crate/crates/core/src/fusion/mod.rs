//! Expert gating scores, diagnosis fusion and text-generation metrics.

mod fuse;
mod gating;
mod metrics;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use fuse::{
    fuse, fuse_weighted, majority_vote, sweep_weights, DiagnosisDistribution, Fused, FusionConfig, Strategy, SweepPoint,
    SUM_TOLERANCE,
};
pub use gating::{gate_score, moe_output, score_experts, select_experts, token_rate, ExpertScores, GatingMatrix, ScoreMetric};
pub use metrics::{
    bleu_n, brevity_penalty, cosine_sim, effective_reference_length, lcs_len, modified_precision, rouge_l, text_cosine,
    tokenize, BagOfWords, Embedder, RougeL, TokenizerOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("{0}")]
    Empty(&'static str),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize, what: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),
}

/// Turns free text into a distribution over `labels`.
///
/// A text equal to a label (trimmed, case-insensitive) puts all mass on it.
/// Otherwise each label gets its non-negative cosine similarity to the text,
/// renormalized; with no overlap at all the result is uniform.
pub fn text_to_distribution(
    text: &str,
    labels: &[&str],
    embedder: &dyn Embedder,
) -> Result<DiagnosisDistribution, FusionError> {
    if labels.is_empty() {
        return Err(FusionError::Empty("no labels"));
    }
    let wanted = text.trim().to_lowercase();
    if let Some(hit) = labels.iter().find(|l| l.trim().to_lowercase() == wanted) {
        let mut map: BTreeMap<String, f64> = labels.iter().map(|l| (l.to_string(), 0.0)).collect();
        map.insert(hit.to_string(), 1.0);
        return DiagnosisDistribution::new(map);
    }
    let mut batch = vec![text];
    batch.extend_from_slice(labels);
    let vectors = embedder.embed(&batch);
    let mut weights = BTreeMap::new();
    for (label, v) in labels.iter().zip(&vectors[1..]) {
        let sim = cosine_sim(&vectors[0], v)?.max(0.0);
        *weights.entry(label.to_string()).or_insert(0.0) += sim;
    }
    if weights.values().all(|w| *w == 0.0) {
        weights.values_mut().for_each(|w| *w = 1.0);
    }
    DiagnosisDistribution::from_weights(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairScores {
    /// BLEU-1 through BLEU-4.
    pub bleu: [f64; 4],
    pub rouge_l: RougeL,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub records: Vec<PairScores>,
    /// Arithmetic means over `records`.
    pub corpus: PairScores,
}

pub fn score_pair(
    candidate: &str,
    reference: &str,
    tokenizer: TokenizerOptions,
    embedder: &dyn Embedder,
) -> PairScores {
    let c = tokenize(candidate, tokenizer);
    let r = tokenize(reference, tokenizer);
    let b = bleu_n(&c, std::slice::from_ref(&r), 4).expect("one reference, max_n 4");
    PairScores { bleu: [b[0], b[1], b[2], b[3]], rouge_l: rouge_l(&c, &r), cosine: text_cosine(embedder, candidate, reference) }
}

/// Scores candidates against references paired by position.
pub fn evaluate(
    candidates: &[String],
    references: &[String],
    tokenizer: TokenizerOptions,
    embedder: &dyn Embedder,
) -> Result<EvalReport, FusionError> {
    if candidates.len() != references.len() {
        return Err(FusionError::Dimension { expected: candidates.len(), found: references.len(), what: "references".into() });
    }
    if candidates.is_empty() {
        return Err(FusionError::Empty("nothing to evaluate"));
    }
    let records: Vec<PairScores> =
        candidates.iter().zip(references).map(|(c, r)| score_pair(c, r, tokenizer, embedder)).collect();
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&PairScores) -> f64| records.iter().map(f).sum::<f64>() / n;
    let corpus = PairScores {
        bleu: [mean(&|s| s.bleu[0]), mean(&|s| s.bleu[1]), mean(&|s| s.bleu[2]), mean(&|s| s.bleu[3])],
        rouge_l: RougeL {
            precision: mean(&|s| s.rouge_l.precision),
            recall: mean(&|s| s.rouge_l.recall),
            f1: mean(&|s| s.rouge_l.f1),
        },
        cosine: mean(&|s| s.cosine),
    };
    Ok(EvalReport { records, corpus })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<&'static str> {
        vec!["acute pharyngitis", "pneumonia", "anxiety disorder"]
    }

    #[test]
    fn exact_label_takes_all_mass() {
        let d = text_to_distribution("  Pneumonia ", &labels(), &BagOfWords::default()).unwrap();
        assert_eq!(d.get("pneumonia"), 1.0);
        assert_eq!(d.get("acute pharyngitis"), 0.0);
    }

    #[test]
    fn soft_assignment_prefers_overlap() {
        let d = text_to_distribution("likely pharyngitis, acute onset", &labels(), &BagOfWords::default()).unwrap();
        assert!((d.sum() - 1.0).abs() < 1e-12);
        assert_eq!(d.argmax(), "acute pharyngitis");
        assert_eq!(d.get("pneumonia"), 0.0);
    }

    #[test]
    fn no_overlap_is_uniform() {
        let d = text_to_distribution("xyz", &labels(), &BagOfWords::default()).unwrap();
        for l in labels() {
            assert!((d.get(l) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_pairs_by_position_and_averages() {
        let c = vec!["the cat".to_string(), "a b c".to_string()];
        let r = vec!["the cat sat".to_string(), "a c d".to_string()];
        let report = evaluate(&c, &r, TokenizerOptions::default(), &BagOfWords::default()).unwrap();
        assert!((report.records[0].bleu[0] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((report.records[1].rouge_l.f1 - 2.0 / 3.0).abs() < 1e-12);
        let mean_f1 = (report.records[0].rouge_l.f1 + report.records[1].rouge_l.f1) / 2.0;
        assert!((report.corpus.rouge_l.f1 - mean_f1).abs() < 1e-15);
        assert!(evaluate(&c, &r[..1], TokenizerOptions::default(), &BagOfWords::default()).is_err());
    }
}
