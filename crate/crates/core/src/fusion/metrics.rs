//! BLEU, ROUGE-L and cosine similarity, plus the tokenizer and the default
//! bag-of-words embedder they run on.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::FusionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerOptions {
    pub lowercase: bool,
    /// Split every non-alphanumeric character off as its own token.
    pub detach_punctuation: bool,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        TokenizerOptions { lowercase: false, detach_punctuation: true }
    }
}

pub fn tokenize(text: &str, options: TokenizerOptions) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = if options.lowercase { chunk.to_lowercase() } else { chunk.to_string() };
        if !options.detach_punctuation {
            tokens.push(chunk);
            continue;
        }
        let mut word = String::new();
        for c in chunk.chars() {
            if c.is_alphanumeric() {
                word.push(c);
            } else {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and the candidate's n-gram total.
pub fn modified_precision<T: AsRef<str>>(candidate: &[T], references: &[Vec<T>], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
    for r in references {
        for (gram, c) in ngram_counts(r, n) {
            let slot = max_ref.entry(gram).or_default();
            *slot = (*slot).max(c);
        }
    }
    let matched = cand.iter().map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0))).sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

/// The reference length closest to `c`; ties go to the shorter.
pub fn effective_reference_length(c: usize, reference_lengths: impl IntoIterator<Item = usize>) -> usize {
    reference_lengths.into_iter().min_by_key(|&r| (r.abs_diff(c), r)).unwrap_or(0)
}

pub fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

/// BLEU-1 ..= BLEU-`max_n` for one candidate against its references.
///
/// BLEU-n = BP · exp((1/n) Σ_{k≤n} ln p_k), and 0 as soon as any p_k is 0.
pub fn bleu_n<T: AsRef<str>>(candidate: &[T], references: &[Vec<T>], max_n: usize) -> Result<Vec<f64>, FusionError> {
    if !(1..=4).contains(&max_n) {
        return Err(FusionError::InvalidValue(format!("max_n {max_n} is outside [1, 4]")));
    }
    if references.is_empty() {
        return Err(FusionError::Empty("no references"));
    }
    if candidate.is_empty() {
        log::warn!("empty candidate; BLEU is 0");
        return Ok(vec![0.0; max_n]);
    }
    let c = candidate.len();
    let bp = brevity_penalty(c, effective_reference_length(c, references.iter().map(Vec::len)));
    let mut log_sum = 0.0;
    let mut zero = false;
    let mut out = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let (matched, total) = modified_precision(candidate, references, n);
        if matched == 0 || total == 0 {
            zero = true;
        } else {
            log_sum += (matched as f64 / total as f64).ln();
        }
        out.push(if zero { 0.0 } else { bp * (log_sum / n as f64).exp() });
    }
    Ok(out)
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RougeL {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T]) -> RougeL {
    let l = lcs_len(candidate, reference) as f64;
    let ratio = |len: usize| if len == 0 { 0.0 } else { l / len as f64 };
    let (precision, recall) = (ratio(candidate.len()), ratio(reference.len()));
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    RougeL { precision, recall, f1 }
}

/// x·y / (‖x‖‖y‖); a zero vector gives 0 with a warning.
pub fn cosine_sim(x: &[f64], y: &[f64]) -> Result<f64, FusionError> {
    if x.len() != y.len() {
        return Err(FusionError::Dimension { expected: x.len(), found: y.len(), what: "second vector".into() });
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        log::warn!("cosine similarity with a zero vector; returning 0");
        return Ok(0.0);
    }
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// Maps a batch of texts into one shared vector space.
pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[&str]) -> Vec<Vec<f64>>;
}

/// L2-normalized term frequencies over the batch's vocabulary.
#[derive(Debug, Clone, Copy)]
pub struct BagOfWords {
    pub tokenizer: TokenizerOptions,
}

impl Default for BagOfWords {
    fn default() -> Self {
        BagOfWords { tokenizer: TokenizerOptions { lowercase: true, detach_punctuation: true } }
    }
}

impl Embedder for BagOfWords {
    fn embed(&self, texts: &[&str]) -> Vec<Vec<f64>> {
        let tokenized: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t, self.tokenizer)).collect();
        let vocab: BTreeMap<&str, usize> = {
            let words: std::collections::BTreeSet<&str> = tokenized.iter().flatten().map(String::as_str).collect();
            words.into_iter().enumerate().map(|(i, w)| (w, i)).collect()
        };
        tokenized
            .iter()
            .map(|tokens| {
                let mut v = vec![0.0; vocab.len()];
                for t in tokens {
                    v[vocab[t.as_str()]] += 1.0;
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                v
            })
            .collect()
    }
}

pub fn text_cosine(embedder: &dyn Embedder, a: &str, b: &str) -> f64 {
    let v = embedder.embed(&[a, b]);
    cosine_sim(&v[0], &v[1]).expect("one embedding space")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, TokenizerOptions::default())
    }

    /// Clipped precision by explicit enumeration of candidate n-gram positions.
    fn naive_precision(c: &[String], refs: &[Vec<String>], n: usize) -> (usize, usize) {
        if c.len() < n {
            return (0, 0);
        }
        let count = |seq: &[String], g: &[String]| (0..=seq.len().saturating_sub(n)).filter(|&i| seq.len() >= n && &seq[i..i + n] == g).count();
        let mut seen: Vec<&[String]> = Vec::new();
        let mut matched = 0;
        for i in 0..=c.len() - n {
            let g = &c[i..i + n];
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            let max_ref = refs.iter().map(|r| count(r, g)).max().unwrap_or(0);
            matched += count(c, g).min(max_ref);
        }
        (matched, c.len() - n + 1)
    }

    fn naive_bleu(c: &[String], refs: &[Vec<String>], n: usize) -> f64 {
        if c.is_empty() {
            return 0.0;
        }
        let mut best_r = usize::MAX;
        for r in refs {
            let d = r.len().abs_diff(c.len());
            let bd = best_r.abs_diff(c.len());
            if best_r == usize::MAX || d < bd || (d == bd && r.len() < best_r) {
                best_r = r.len();
            }
        }
        let bp = if c.len() > best_r { 1.0 } else { (1.0 - best_r as f64 / c.len() as f64).exp() };
        let mut product = 1.0;
        for k in 1..=n {
            let (m, t) = naive_precision(c, refs, k);
            if m == 0 {
                return 0.0;
            }
            product *= m as f64 / t as f64;
        }
        bp * product.powf(1.0 / n as f64)
    }

    /// LCS length by trying every subsequence of the shorter side.
    fn naive_lcs(a: &[String], b: &[String]) -> usize {
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let mut best = 0;
        for mask in 0u32..(1 << short.len()) {
            let sub: Vec<&String> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| &short[i]).collect();
            let mut it = long.iter();
            if sub.iter().all(|s| it.any(|x| x == *s)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    #[test]
    fn tokenizer_detaches_punctuation() {
        assert_eq!(toks("Cough, fever.\tX-ray"), vec!["Cough", ",", "fever", ".", "X", "-", "ray"]);
        let keep = TokenizerOptions { lowercase: true, detach_punctuation: false };
        assert_eq!(tokenize("Cough, fever", keep), vec!["cough,", "fever"]);
        assert!(toks(" \u{3000}\n").is_empty());
    }

    #[test]
    fn hand_cases() {
        let b = bleu_n(&toks("the cat"), &[toks("the cat sat")], 1).unwrap();
        assert!((b[0] - 0.60653).abs() < 1e-5);
        let r = rouge_l(&toks("a b c"), &toks("a c d"));
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
        let c = cosine_sim(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(bleu_n::<String>(&[], &[toks("a")], 4).unwrap(), vec![0.0; 4]);
        assert!(bleu_n(&toks("a"), &[], 1).is_err());
        assert!(bleu_n(&toks("a"), &[toks("a")], 5).is_err());
        assert_eq!(bleu_n(&toks("a b"), &[toks("a b")], 4).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(rouge_l::<String>(&[], &[]).f1, 0.0);
        assert_eq!(cosine_sim(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(cosine_sim(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn closest_reference_ties_to_shorter() {
        assert_eq!(effective_reference_length(5, [3, 7, 9]), 3);
        assert_eq!(effective_reference_length(5, [6, 4]), 4);
    }

    #[test]
    fn bag_of_words_is_unit_length() {
        let v = BagOfWords::default().embed(&["Cough cough fever", "fever"]);
        assert_eq!(v[0].len(), 2);
        let norm: f64 = v[0].iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!((text_cosine(&BagOfWords::default(), "fever", "FEVER") - 1.0).abs() < 1e-12);
    }

    fn sentence() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(String::from), 0..9)
    }

    proptest! {
        #[test]
        fn bleu_matches_oracle(c in sentence(), refs in prop::collection::vec(sentence(), 1..4), n in 1usize..=4) {
            let got = bleu_n(&c, &refs, n).unwrap();
            for k in 1..=n {
                prop_assert!((got[k - 1] - naive_bleu(&c, &refs, k)).abs() < 1e-9);
            }
        }

        #[test]
        fn rouge_matches_oracle(c in sentence(), r in sentence()) {
            let got = rouge_l(&c, &r);
            let l = naive_lcs(&c, &r) as f64;
            let p = if c.is_empty() { 0.0 } else { l / c.len() as f64 };
            let rc = if r.is_empty() { 0.0 } else { l / r.len() as f64 };
            let f = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
            prop_assert!((got.precision - p).abs() < 1e-9);
            prop_assert!((got.recall - rc).abs() < 1e-9);
            prop_assert!((got.f1 - f).abs() < 1e-9);
            prop_assert_eq!(rouge_l(&r, &c).recall, got.precision);
        }

        #[test]
        fn cosine_is_bounded_and_scale_free(
            x in prop::collection::vec(-10.0..10.0f64, 3),
            y in prop::collection::vec(-10.0..10.0f64, 3),
            s in 0.01..100.0f64,
        ) {
            let c = cosine_sim(&x, &y).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
            prop_assert!((cosine_sim(&scaled, &y).unwrap() - c).abs() < 1e-9);
        }
    }
}
