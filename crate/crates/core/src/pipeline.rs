//! End-to-end training: partitions, rule universe, ant colony selection.

use serde::{Deserialize, Serialize};

use crate::aco::{select_rules, AcoConfig, TracePoint};
use crate::data::{split_holdout, Dataset};
use crate::error::{Error, Result};
use crate::inference::{InferenceConfig, Model, ResponseTable};
use crate::it2::{PartitionConfig, TNorm};
use crate::kb::KnowledgeBase;
use crate::universe::{generate_candidates, GenerationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Consequent polynomial degree.
    pub degree: u32,
    pub tnorm: TNorm,
    pub partition: PartitionConfig,
    pub generation: GenerationConfig,
    pub aco: AcoConfig,
    pub inference: InferenceConfig,
    /// Share of the training rows held out from rule fitting and used,
    /// together with the fitting rows, to score rule subsets.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            degree: 3,
            tnorm: TNorm::Minimum,
            partition: PartitionConfig::default(),
            generation: GenerationConfig::default(),
            aco: AcoConfig::default(),
            inference: InferenceConfig::default(),
            validation_fraction: 0.2,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.degree) {
            return Err(Error::Config(format!("degree must be 1, 2 or 3, got {}", self.degree)));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        self.partition.validate()?;
        self.generation.validate()?;
        // The size range is clipped to the real universe later.
        self.aco.validate(self.aco.max_rules)
    }
}

/// Provenance recorded with every trained artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub dataset: String,
    pub fingerprint: String,
    pub rows: usize,
    pub seed: u64,
    pub config: PipelineConfig,
}

impl Manifest {
    pub fn new(data: &Dataset, config: &PipelineConfig) -> Self {
        Manifest {
            tool: "it2tsk".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            dataset: data.name().to_string(),
            fingerprint: data.fingerprint(),
            rows: data.len(),
            seed: config.seed,
            config: config.clone(),
        }
    }

    /// Single-line JSON, for comment headers in tabular outputs.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub manifest: Manifest,
    pub model: Model,
    /// Candidate rules available to the colony.
    pub universe_size: usize,
    pub trace: Vec<TracePoint>,
    /// RMSE of the selected subset on the scoring rows.
    pub selection_rmse: f64,
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Trains a model on `data`.
///
/// Partitions come from all of `data`. Rules are generated and fitted on
/// a seeded `1 - validation_fraction` share of the rows, and the colony
/// scores subsets on all rows.
pub fn train(data: &Dataset, config: &PipelineConfig) -> Result<TrainedModel> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let kb = KnowledgeBase::build(data, &config.partition, config.tnorm)?;
    let (fit, _) = split_holdout(data, config.validation_fraction, config.seed)?;
    let universe = generate_candidates(&fit, &kb, config.degree, &config.generation, config.seed)?;
    let rules = universe.into_rules();

    let fallback = data.target_mean();
    let table = ResponseTable::build(&kb, &rules, data, &config.inference, fallback)?;
    let heuristic: Vec<f64> = rules.iter().map(|r| r.error_dominance()).collect();
    let aco = config.aco.clipped(rules.len());
    let outcome = select_rules(&table, &heuristic, &aco, config.seed)?;

    let universe_size = rules.len();
    let selected = outcome.state.best_solution.iter().map(|&i| rules[i].clone()).collect();
    let model = Model::new(kb, selected, fallback, config.inference.clone())?;
    Ok(TrainedModel {
        manifest: Manifest::new(data, config),
        model,
        universe_size,
        trace: outcome.trace,
        selection_rmse: outcome.state.best_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                vec![t * 10.0, ((i * 7) % 13) as f64]
            })
            .collect();
        let y = rows.iter().map(|r| (r[0] * 0.6).sin() * 3.0 + 0.2 * r[1]).collect();
        Dataset::from_rows("wave", vec!["a".into(), "b".into()], "y", rows, y).unwrap()
    }

    fn quick() -> PipelineConfig {
        PipelineConfig {
            degree: 2,
            aco: AcoConfig {
                num_iterations: 30,
                num_ants: 10,
                min_rules: 2,
                max_rules: 12,
                ..AcoConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn trains_and_beats_the_mean() {
        let data = wave(200);
        let m = train(&data, &quick()).unwrap();
        let batch = m.model.predict_batch(&data).unwrap();
        let sd = {
            let mu = data.target_mean();
            (data.targets().iter().map(|y| (y - mu).powi(2)).sum::<f64>() / data.len() as f64).sqrt()
        };
        assert!(batch.rmse < 0.5 * sd, "rmse {} vs sd {}", batch.rmse, sd);
        assert!((batch.rmse - m.selection_rmse).abs() < 1e-9);
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let data = wave(150);
        let a = train(&data, &quick()).unwrap().to_json();
        let b = train(&data, &quick()).unwrap().to_json();
        assert_eq!(a, b);
        let back = TrainedModel::from_json(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }

    #[test]
    fn bad_config_is_a_config_error() {
        let data = wave(50);
        let cfg = PipelineConfig { degree: 5, ..quick() };
        assert!(matches!(train(&data, &cfg), Err(Error::Config(_))));
        let cfg = PipelineConfig { validation_fraction: 1.0, ..quick() };
        assert!(matches!(train(&data, &cfg), Err(Error::Config(_))));
    }
}
