//! Diagnosis distributions and their weighted or voted combination.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FusionError;

pub const SUM_TOLERANCE: f64 = 1e-9;

/// Label → probability, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct DiagnosisDistribution(BTreeMap<String, f64>);

impl DiagnosisDistribution {
    pub fn new(probabilities: BTreeMap<String, f64>) -> Result<Self, FusionError> {
        if probabilities.is_empty() {
            return Err(FusionError::Empty("distribution has no labels"));
        }
        if let Some((label, p)) = probabilities.iter().find(|(_, p)| !p.is_finite() || !(0.0..=1.0).contains(*p)) {
            return Err(FusionError::InvalidValue(format!("probability {p} for `{label}`")));
        }
        let sum: f64 = probabilities.values().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(FusionError::InvalidValue(format!("probabilities sum to {sum}")));
        }
        Ok(DiagnosisDistribution(probabilities))
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: BTreeMap<String, f64>) -> Result<Self, FusionError> {
        let sum: f64 = weights.values().sum();
        if weights.values().any(|w| !w.is_finite() || *w < 0.0) || sum <= 0.0 {
            return Err(FusionError::InvalidValue("weights must be non-negative with a positive sum".into()));
        }
        Ok(DiagnosisDistribution(weights.into_iter().map(|(k, w)| (k, w / sum)).collect()))
    }

    pub fn get(&self, label: &str) -> f64 {
        self.0.get(label).copied().unwrap_or(0.0)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn probabilities(&self) -> &BTreeMap<String, f64> {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.values().sum()
    }

    /// The most probable label; ties go to the lexicographically smallest.
    pub fn argmax(&self) -> &str {
        let mut best: Option<(&str, f64)> = None;
        for (label, &p) in &self.0 {
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((label, p));
            }
        }
        best.expect("distributions are non-empty").0
    }
}

impl TryFrom<BTreeMap<String, f64>> for DiagnosisDistribution {
    type Error = FusionError;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        DiagnosisDistribution::new(map)
    }
}

impl From<DiagnosisDistribution> for BTreeMap<String, f64> {
    fn from(d: DiagnosisDistribution) -> Self {
        d.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Weighted,
    Vote,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted" => Ok(Strategy::Weighted),
            "vote" => Ok(Strategy::Vote),
            other => Err(format!("unknown strategy `{other}` (expected weighted or vote)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub strategy: Strategy,
    pub w_moe: f64,
    pub w_esft: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { strategy: Strategy::Weighted, w_moe: 0.6, w_esft: 0.4 }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        let ok = self.w_moe.is_finite() && self.w_esft.is_finite() && self.w_moe >= 0.0 && self.w_esft >= 0.0;
        if !ok || (self.w_moe + self.w_esft - 1.0).abs() > SUM_TOLERANCE {
            return Err(FusionError::InvalidValue(format!(
                "weights ({}, {}) must be non-negative and sum to 1",
                self.w_moe, self.w_esft
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fused {
    pub distribution: DiagnosisDistribution,
    pub winner: String,
}

/// fused(l) = w_moe·P_moe(l) + w_esft·P_esft(l) over the union of labels.
pub fn fuse_weighted(
    p_moe: &DiagnosisDistribution,
    p_esft: &DiagnosisDistribution,
    config: &FusionConfig,
) -> Result<Fused, FusionError> {
    config.validate()?;
    let labels: BTreeSet<&str> = p_moe.labels().chain(p_esft.labels()).collect();
    let fused: BTreeMap<String, f64> = labels
        .into_iter()
        .map(|l| (l.to_string(), config.w_moe * p_moe.get(l) + config.w_esft * p_esft.get(l)))
        .collect();
    let distribution = DiagnosisDistribution(fused);
    let winner = distribution.argmax().to_string();
    Ok(Fused { distribution, winner })
}

/// The most frequent label. With two voters, or a tie for first place, the
/// weighted winner decides.
pub fn majority_vote(labels: &[&str], weighted_winner: &str) -> Result<String, FusionError> {
    if labels.is_empty() {
        return Err(FusionError::Empty("no votes"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let top = *counts.values().max().expect("non-empty");
    let leaders: Vec<&str> = counts.iter().filter(|(_, c)| **c == top).map(|(l, _)| *l).collect();
    if labels.len() == 2 || leaders.len() > 1 {
        return Ok(weighted_winner.to_string());
    }
    Ok(leaders[0].to_string())
}

/// Combines the two distributions by the configured strategy.
pub fn fuse(p_moe: &DiagnosisDistribution, p_esft: &DiagnosisDistribution, config: &FusionConfig) -> Result<Fused, FusionError> {
    let weighted = fuse_weighted(p_moe, p_esft, config)?;
    match config.strategy {
        Strategy::Weighted => Ok(weighted),
        Strategy::Vote => {
            let winner = majority_vote(&[p_moe.argmax(), p_esft.argmax()], &weighted.winner)?;
            Ok(Fused { winner, ..weighted })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub w_moe: f64,
    pub w_esft: f64,
    pub winner: String,
    pub distribution: DiagnosisDistribution,
}

/// Weighted fusion at w_moe = 0, step, 2·step, ..., 1.
pub fn sweep_weights(
    p_moe: &DiagnosisDistribution,
    p_esft: &DiagnosisDistribution,
    step: f64,
) -> Result<Vec<SweepPoint>, FusionError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(FusionError::InvalidValue(format!("sweep step {step} must lie in (0, 1]")));
    }
    let n = (1.0 / step).round() as usize;
    (0..=n)
        .map(|k| {
            let w_moe = (k as f64 / n as f64).clamp(0.0, 1.0);
            let config = FusionConfig { strategy: Strategy::Weighted, w_moe, w_esft: 1.0 - w_moe };
            let fused = fuse_weighted(p_moe, p_esft, &config)?;
            Ok(SweepPoint { w_moe, w_esft: config.w_esft, winner: fused.winner, distribution: fused.distribution })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, proptest, Strategy as _};
    use proptest::prop_assert;
    use proptest::prop_assert_eq;

    fn dist(pairs: &[(&str, f64)]) -> DiagnosisDistribution {
        DiagnosisDistribution::new(pairs.iter().map(|(l, p)| (l.to_string(), *p)).collect()).unwrap()
    }

    #[test]
    fn worked_fusion() {
        let f = fuse_weighted(&dist(&[("A", 0.8), ("B", 0.2)]), &dist(&[("A", 0.3), ("B", 0.7)]), &FusionConfig::default())
            .unwrap();
        assert!((f.distribution.get("A") - 0.6).abs() < 1e-12);
        assert!((f.distribution.get("B") - 0.4).abs() < 1e-12);
        assert_eq!(f.winner, "A");
    }

    #[test]
    fn missing_labels_count_as_zero() {
        let f = fuse_weighted(&dist(&[("A", 1.0)]), &dist(&[("B", 1.0)]), &FusionConfig::default()).unwrap();
        assert_eq!(f.distribution.labels().collect::<Vec<_>>(), vec!["A", "B"]);
        assert!((f.distribution.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_smallest_label() {
        let config = FusionConfig { w_moe: 0.5, w_esft: 0.5, ..Default::default() };
        let f = fuse_weighted(&dist(&[("B", 1.0)]), &dist(&[("A", 1.0)]), &config).unwrap();
        assert_eq!(f.winner, "A");
    }

    #[test]
    fn invalid_inputs() {
        assert!(DiagnosisDistribution::new([("A".to_string(), 0.7)].into()).is_err());
        assert!(DiagnosisDistribution::new(BTreeMap::new()).is_err());
        let bad = FusionConfig { w_moe: 0.7, w_esft: 0.7, ..Default::default() };
        assert!(fuse_weighted(&dist(&[("A", 1.0)]), &dist(&[("A", 1.0)]), &bad).is_err());
        assert!(serde_json::from_str::<DiagnosisDistribution>(r#"{"A":0.5}"#).is_err());
    }

    #[test]
    fn voting() {
        assert_eq!(majority_vote(&["A"], "Z").unwrap(), "A");
        assert_eq!(majority_vote(&["A", "A"], "Z").unwrap(), "Z");
        assert_eq!(majority_vote(&["A", "B", "A"], "Z").unwrap(), "A");
        assert_eq!(majority_vote(&["A", "B", "C"], "Z").unwrap(), "Z");
        assert!(majority_vote(&[], "Z").is_err());
        let config = FusionConfig { strategy: Strategy::Vote, ..Default::default() };
        let f = fuse(&dist(&[("A", 0.8), ("B", 0.2)]), &dist(&[("A", 0.3), ("B", 0.7)]), &config).unwrap();
        assert_eq!(f.winner, "A");
    }

    #[test]
    fn sweep_has_eleven_points() {
        let s = sweep_weights(&dist(&[("A", 0.8), ("B", 0.2)]), &dist(&[("A", 0.3), ("B", 0.7)]), 0.1).unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s[0].winner, "B");
        assert_eq!(s[10].winner, "A");
        assert!(sweep_weights(&dist(&[("A", 1.0)]), &dist(&[("A", 1.0)]), 0.0).is_err());
    }

    fn distribution() -> impl proptest::strategy::Strategy<Value = DiagnosisDistribution> {
        prop::collection::btree_map("[A-E]", 0.01..1.0f64, 1..5)
            .prop_map(|w| DiagnosisDistribution::from_weights(w).unwrap())
    }

    proptest! {
        #[test]
        fn weighted_matches_oracle(a in distribution(), b in distribution(), w in 0.0..=1.0f64) {
            let config = FusionConfig { w_moe: w, w_esft: 1.0 - w, ..Default::default() };
            let f = fuse_weighted(&a, &b, &config).unwrap();
            let mut labels: Vec<String> = a.labels().chain(b.labels()).map(String::from).collect();
            labels.sort();
            labels.dedup();
            let mut best = (String::new(), f64::NEG_INFINITY);
            for l in &labels {
                let p = w * a.probabilities().get(l).copied().unwrap_or(0.0)
                    + (1.0 - w) * b.probabilities().get(l).copied().unwrap_or(0.0);
                prop_assert!((f.distribution.get(l) - p).abs() < 1e-12);
                if p > best.1 { best = (l.clone(), p); }
            }
            prop_assert_eq!(f.winner, best.0);
            prop_assert!((f.distribution.sum() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn unit_weight_returns_input(a in distribution(), b in distribution()) {
            let config = FusionConfig { w_moe: 1.0, w_esft: 0.0, ..Default::default() };
            let f = fuse_weighted(&a, &b, &config).unwrap();
            for l in a.labels() {
                prop_assert_eq!(f.distribution.get(l), a.get(l));
            }
            prop_assert_eq!(f.winner.as_str(), a.argmax());
        }
    }
}
