//! Mixture-of-experts gating statistics and expert selection.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FusionError;

/// T×N gate values: one row per token, one column per expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct GatingMatrix {
    rows: Vec<Vec<f64>>,
}

impl GatingMatrix {
    /// Accepts any rectangular matrix of finite, non-negative values.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, FusionError> {
        if let Some(first) = rows.first() {
            if first.is_empty() {
                return Err(FusionError::Empty("gating matrix has no experts"));
            }
            for (t, row) in rows.iter().enumerate() {
                if row.len() != first.len() {
                    return Err(FusionError::Dimension { expected: first.len(), found: row.len(), what: format!("row {t}") });
                }
                if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(FusionError::InvalidValue(format!("gate value {v} in row {t}")));
                }
            }
        }
        Ok(GatingMatrix { rows })
    }

    /// Scales each row to sum to 1, as a softmax gate would produce.
    pub fn normalized(rows: Vec<Vec<f64>>) -> Result<Self, FusionError> {
        let mut m = GatingMatrix::new(rows)?;
        for (t, row) in m.rows.iter_mut().enumerate() {
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(FusionError::InvalidValue(format!("row {t} sums to zero")));
            }
            row.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(m)
    }

    pub fn tokens(&self) -> usize {
        self.rows.len()
    }

    pub fn experts(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Whether every row sums to 1 within `tolerance`.
    pub fn is_row_stochastic(&self, tolerance: f64) -> bool {
        self.rows.iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= tolerance)
    }

    fn column_means(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>, FusionError> {
        if self.rows.is_empty() {
            return Err(FusionError::Empty("gating matrix has no tokens"));
        }
        let t = self.rows.len() as f64;
        Ok((0..self.experts()).map(|i| self.rows.iter().map(|r| f(r[i])).sum::<f64>() / t).collect())
    }
}

impl TryFrom<Vec<Vec<f64>>> for GatingMatrix {
    type Error = FusionError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        GatingMatrix::new(rows)
    }
}

impl From<GatingMatrix> for Vec<Vec<f64>> {
    fn from(m: GatingMatrix) -> Self {
        m.rows
    }
}

/// y = Σ_i G_i · E_i: the gate-weighted sum of expert output vectors.
pub fn moe_output(gates: &[f64], expert_outputs: &[Vec<f64>]) -> Result<Vec<f64>, FusionError> {
    if gates.len() != expert_outputs.len() {
        return Err(FusionError::Dimension { expected: gates.len(), found: expert_outputs.len(), what: "expert outputs".into() });
    }
    let dim = expert_outputs.first().map_or(0, Vec::len);
    let mut y = vec![0.0; dim];
    for (i, (g, e)) in gates.iter().zip(expert_outputs).enumerate() {
        if e.len() != dim {
            return Err(FusionError::Dimension { expected: dim, found: e.len(), what: format!("output of expert {i}") });
        }
        for (acc, v) in y.iter_mut().zip(e) {
            *acc += g * v;
        }
    }
    Ok(y)
}

/// Score_Gate(E_i) = (1/T) Σ_t G_i^t
pub fn gate_score(g: &GatingMatrix) -> Result<Vec<f64>, FusionError> {
    g.column_means(|v| v)
}

/// Score_Token(E_i) = (1/T) Σ_t 1{G_i^t > 0}
pub fn token_rate(g: &GatingMatrix) -> Result<Vec<f64>, FusionError> {
    g.column_means(|v| if v > 0.0 { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMetric {
    #[default]
    Gate,
    Token,
}

impl FromStr for ScoreMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gate" => Ok(ScoreMetric::Gate),
            "token" => Ok(ScoreMetric::Token),
            other => Err(format!("unknown metric `{other}` (expected gate or token)")),
        }
    }
}

/// Experts whose score is at least `p`.
pub fn select_experts(scores: &[f64], p: f64) -> Result<BTreeSet<usize>, FusionError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(FusionError::InvalidValue(format!("threshold {p} is outside [0, 1]")));
    }
    Ok(scores.iter().enumerate().filter(|(_, s)| **s >= p).map(|(i, _)| i).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertScores {
    pub gate_scores: Vec<f64>,
    pub token_rates: Vec<f64>,
    pub threshold: f64,
    pub metric: ScoreMetric,
    pub selected: BTreeSet<usize>,
}

pub fn score_experts(g: &GatingMatrix, p: f64, metric: ScoreMetric) -> Result<ExpertScores, FusionError> {
    let gate_scores = gate_score(g)?;
    let token_rates = token_rate(g)?;
    let chosen = match metric {
        ScoreMetric::Gate => &gate_scores,
        ScoreMetric::Token => &token_rates,
    };
    let selected = select_experts(chosen, p)?;
    Ok(ExpertScores { gate_scores, token_rates, threshold: p, metric, selected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked() -> GatingMatrix {
        GatingMatrix::new(vec![vec![0.6, 0.4], vec![0.8, 0.2]]).unwrap()
    }

    #[test]
    fn worked_scores() {
        let g = gate_score(&worked()).unwrap();
        assert!((g[0] - 0.7).abs() < 1e-12 && (g[1] - 0.3).abs() < 1e-12);
        assert_eq!(token_rate(&worked()).unwrap(), vec![1.0, 1.0]);
        assert_eq!(select_experts(&g, 0.5).unwrap(), BTreeSet::from([0]));
        assert_eq!(select_experts(&g, 0.0).unwrap(), BTreeSet::from([0, 1]));
        assert!(select_experts(&g, 1.0).unwrap().is_empty());
        assert!(select_experts(&g, 1.5).is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(select_experts(&[0.5, 0.49], 0.5).unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn empty_and_malformed_matrices() {
        assert!(gate_score(&GatingMatrix::new(vec![]).unwrap()).is_err());
        assert!(GatingMatrix::new(vec![vec![0.5], vec![0.2, 0.3]]).is_err());
        assert!(GatingMatrix::new(vec![vec![-0.1, 1.1]]).is_err());
        let raw = GatingMatrix::new(vec![vec![2.0, 2.0]]).unwrap();
        assert!(!raw.is_row_stochastic(1e-9));
        let n = GatingMatrix::normalized(vec![vec![2.0, 2.0]]).unwrap();
        assert!(n.is_row_stochastic(1e-12));
        assert_eq!(n.rows()[0], vec![0.5, 0.5]);
    }

    #[test]
    fn moe_output_cases() {
        let e = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        assert_eq!(moe_output(&[0.0, 1.0, 0.0], &e).unwrap(), e[1]);
        let v = vec![1.5, -2.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_eq!(moe_output(&[0.5, 0.5], &[v, neg]).unwrap(), vec![0.0, 0.0]);
        assert!(moe_output(&[1.0], &e).is_err());
        assert!(moe_output(&[0.5, 0.5], &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..8, 1usize..6).prop_flat_map(|(t, n)| {
            prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n), t)
        })
    }

    proptest! {
        #[test]
        fn scores_match_naive_loops(rows in matrix(), p in 0.0..=1.0f64) {
            let g = GatingMatrix::new(rows.clone()).unwrap();
            let s = score_experts(&g, p, ScoreMetric::Token).unwrap();
            for i in 0..rows[0].len() {
                let mut sum = 0.0;
                let mut hits = 0usize;
                for r in &rows {
                    sum += r[i];
                    if r[i] > 0.0 { hits += 1; }
                }
                prop_assert!((s.gate_scores[i] - sum / rows.len() as f64).abs() < 1e-12);
                prop_assert_eq!(s.token_rates[i], hits as f64 / rows.len() as f64);
                prop_assert_eq!(s.selected.contains(&i), s.token_rates[i] >= p);
            }
        }

        #[test]
        fn moe_output_matches_naive(gates in prop::collection::vec(0.0..1.0f64, 1..6), dim in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let outs: Vec<Vec<f64>> = gates.iter().map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
            let y = moe_output(&gates, &outs).unwrap();
            for d in 0..dim {
                let mut acc = 0.0;
                for i in 0..gates.len() { acc += gates[i] * outs[i][d]; }
                prop_assert!((y[d] - acc).abs() < 1e-12);
            }
        }
    }
}
