//! Weighted-mean prediction from a selected rule base.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::it2::{IntervalReduction, MembershipInterval};
use crate::kb::KnowledgeBase;
use crate::rule::HybridRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    /// How a firing interval becomes a scalar weight.
    pub reduction: IntervalReduction,
    /// Multiply each weight by the rule's error dominance.
    pub use_error_dominance: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            reduction: IntervalReduction::Midpoint,
            use_error_dominance: true,
        }
    }
}

impl InferenceConfig {
    pub fn weight(&self, rule: &HybridRule, firing: MembershipInterval) -> f64 {
        let w = firing.reduce(self.reduction);
        if self.use_error_dominance {
            w * rule.error_dominance()
        } else {
            w
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredRule {
    /// Index into the model's rule list.
    pub rule: usize,
    pub firing: MembershipInterval,
    /// Clamped rule output.
    pub output: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    /// Rules whose firing upper bound is positive.
    pub fired_rules: Vec<FiredRule>,
    pub fallback_used: bool,
}

/// `sum(w * y) / sum(w)`, or `None` when the weights sum to zero. The
/// result is clamped to the outputs with positive weight so rounding
/// cannot leave their convex hull.
pub fn defuzzify(terms: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (w, y) in terms {
        num += w * y;
        den += w;
        if w > 0.0 {
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    (den > 0.0).then(|| (num / den).clamp(lo, hi))
}

/// Root mean squared difference of two equal-length slices.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} targets",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidInput("rmse of zero rows".into()));
    }
    let sse: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    knowledge_base: KnowledgeBase,
    rules: Vec<HybridRule>,
    /// Prediction when no rule carries weight.
    fallback: f64,
    inference: InferenceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPrediction {
    pub predictions: Vec<Prediction>,
    pub rmse: f64,
}

impl BatchPrediction {
    pub fn values(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.value).collect()
    }

    pub fn fallback_rate(&self) -> f64 {
        let n = self.predictions.len().max(1) as f64;
        self.predictions.iter().filter(|p| p.fallback_used).count() as f64 / n
    }
}

impl Model {
    pub fn new(
        knowledge_base: KnowledgeBase,
        rules: Vec<HybridRule>,
        fallback: f64,
        inference: InferenceConfig,
    ) -> Result<Self> {
        if !fallback.is_finite() {
            return Err(Error::InvalidInput(format!("fallback value {fallback} is not finite")));
        }
        for r in &rules {
            knowledge_base.check_antecedent(r.antecedent())?;
            knowledge_base.target_set(r.consequent_set())?;
        }
        Ok(Model {
            knowledge_base,
            rules,
            fallback,
            inference,
        })
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.knowledge_base
    }

    pub fn rules(&self) -> &[HybridRule] {
        &self.rules
    }

    pub fn fallback(&self) -> f64 {
        self.fallback
    }

    pub fn inference(&self) -> &InferenceConfig {
        &self.inference
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if self.rules.is_empty() {
            return Err(Error::Untrained("model has no rules".into()));
        }
        let mut fired = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            let firing = self.knowledge_base.firing(r.antecedent(), x)?;
            if firing.is_zero() {
                continue;
            }
            fired.push(FiredRule {
                rule: i,
                firing,
                output: r.evaluate(x),
                weight: self.inference.weight(r, firing),
            });
        }
        Ok(match defuzzify(fired.iter().map(|f| (f.weight, f.output))) {
            Some(value) => Prediction {
                value,
                fired_rules: fired,
                fallback_used: false,
            },
            None => Prediction {
                value: self.fallback,
                fired_rules: fired,
                fallback_used: true,
            },
        })
    }

    pub fn predict_batch(&self, data: &Dataset) -> Result<BatchPrediction> {
        if data.num_features() != self.knowledge_base.num_features() {
            return Err(Error::InvalidInput(format!(
                "dataset has {} features, model expects {}",
                data.num_features(),
                self.knowledge_base.num_features()
            )));
        }
        let predictions = (0..data.len())
            .into_par_iter()
            .map(|i| self.predict(data.row(i)))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = predictions.iter().map(|p| p.value).collect();
        let rmse = rmse(&values, data.targets())?;
        Ok(BatchPrediction { predictions, rmse })
    }

    /// The same knowledge base, fallback and weighting with other rules.
    pub fn with_rules(&self, rules: Vec<HybridRule>) -> Result<Model> {
        Model::new(self.knowledge_base.clone(), rules, self.fallback, self.inference.clone())
    }
}

/// Sparse per-rule responses on a fixed dataset, so that the prediction
/// RMSE of any rule subset is a cheap sum.
#[derive(Debug, Clone)]
pub struct ResponseTable {
    /// `entries[rule]` = `(row, weight, clamped output)` for rows with
    /// positive weight.
    entries: Vec<Vec<(u32, f64, f64)>>,
    targets: Vec<f64>,
    fallback: f64,
}

/// Cost of a rule subset, minimized by the ant colony.
pub trait SubsetCost: Sync {
    fn num_rules(&self) -> usize;
    fn cost(&self, subset: &[usize]) -> f64;
}

impl ResponseTable {
    pub fn build(
        kb: &KnowledgeBase,
        rules: &[HybridRule],
        data: &Dataset,
        inference: &InferenceConfig,
        fallback: f64,
    ) -> Result<Self> {
        let table = kb.membership_table(data)?;
        let entries = rules
            .par_iter()
            .map(|r| {
                (0..data.len())
                    .filter_map(|row| {
                        let f = table.firing(r.antecedent(), row);
                        let w = inference.weight(r, f);
                        (w > 0.0).then(|| (row as u32, w, r.evaluate(data.row(row))))
                    })
                    .collect()
            })
            .collect();
        Ok(ResponseTable {
            entries,
            targets: data.targets().to_vec(),
            fallback,
        })
    }

    /// Predictions of the subset on every row of the table's dataset.
    pub fn predictions(&self, subset: &[usize]) -> Vec<f64> {
        let n = self.targets.len();
        let mut num = vec![0.0; n];
        let mut den = vec![0.0; n];
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for &r in subset {
            for &(row, w, y) in &self.entries[r] {
                let i = row as usize;
                num[i] += w * y;
                den[i] += w;
                lo[i] = lo[i].min(y);
                hi[i] = hi[i].max(y);
            }
        }
        (0..n)
            .map(|i| if den[i] > 0.0 { (num[i] / den[i]).clamp(lo[i], hi[i]) } else { self.fallback })
            .collect()
    }

    pub fn rmse(&self, subset: &[usize]) -> f64 {
        let p = self.predictions(subset);
        let sse: f64 = p.iter().zip(&self.targets).map(|(p, t)| (p - t).powi(2)).sum();
        (sse / self.targets.len().max(1) as f64).sqrt()
    }
}

impl SubsetCost for ResponseTable {
    fn num_rules(&self) -> usize {
        self.entries.len()
    }

    fn cost(&self, subset: &[usize]) -> f64 {
        self.rmse(subset)
    }
}
