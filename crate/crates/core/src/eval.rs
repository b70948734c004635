//! Cross-validated benchmarking, explainability metrics, noise
//! robustness and the centroid-output baseline.

use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_holdout, Dataset, FoldSplit};
use crate::dominance::{error_dominance, firing_rows, rule_rmse};
use crate::error::{Error, Result};
use crate::inference::{BatchPrediction, Model};
use crate::pipeline::{train, PipelineConfig, TrainedModel};
use crate::poly::Polynomial;
use crate::reference::{references, ReferenceResult};

pub const ACTIVE_RULE_THRESHOLDS: [f64; 3] = [0.15, 0.25, 0.5];
pub const NOISE_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_index: usize,
    pub test_rmse: Option<f64>,
    pub train_rmse: Option<f64>,
    pub rule_count: usize,
    pub universe_size: usize,
    pub fallback_rate: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCount {
    pub threshold: f64,
    pub mean_rules: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDelta {
    pub level: f64,
    pub mean_change_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Share of output sets used as some rule's consequent.
    pub classes_covered: f64,
    /// Share of rows on which at least one rule fires.
    pub dataset_coverage: f64,
    /// `(max - min)` of predictions over `(max - min)` of targets.
    pub prediction_range_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explainability {
    pub coverage: Coverage,
    pub active_rules: Vec<ThresholdCount>,
    pub rule_count: usize,
    pub mean_antecedents: f64,
    pub noise: Vec<NoiseDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    /// `D1`, `D2` or `D3` after the consequent degree.
    pub variant: String,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Mean test RMSE over completed folds.
    pub mean_rmse: Option<f64>,
    /// Set when at least one fold failed.
    pub incomplete: bool,
    pub fallback_rate: f64,
    pub references: Vec<ReferenceResult>,
    pub explainability: Option<Explainability>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text comparison of the mean RMSE with stored references.
    pub fn comparison_table(&self) -> String {
        let mut s = format!("dataset: {}  variant: {}\n", self.dataset, self.variant);
        for f in &self.folds {
            match (f.test_rmse, &f.error) {
                (Some(r), _) => s.push_str(&format!("  fold {}: {r:.4}\n", f.fold_index)),
                (None, Some(e)) => s.push_str(&format!("  fold {}: failed ({e})\n", f.fold_index)),
                (None, None) => s.push_str(&format!("  fold {}: failed\n", f.fold_index)),
            }
        }
        s.push_str(&format!("{:<16} {:>10}\n", "method", "rmse"));
        match self.mean_rmse {
            Some(m) => s.push_str(&format!("{:<16} {:>10.4}\n", "this run", m)),
            None => s.push_str(&format!("{:<16} {:>10}\n", "this run", "n/a")),
        }
        for r in &self.references {
            s.push_str(&format!("{:<16} {:>10}\n", r.method, r.rmse));
        }
        if self.incomplete {
            s.push_str("warning: some folds failed; mean covers completed folds only\n");
        }
        s
    }
}

/// A trained fold with its test-set predictions.
#[derive(Debug, Clone)]
pub struct FoldModel {
    pub fold_index: usize,
    pub trained: TrainedModel,
    pub test: BatchPrediction,
    pub test_targets: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CvRun {
    pub report: EvalReport,
    pub models: Vec<Option<FoldModel>>,
}

/// Trains on every fold and reports per-fold and mean test RMSE.
pub fn run_cv(dataset: &str, folds: &[FoldSplit], config: &PipelineConfig) -> Result<EvalReport> {
    Ok(run_cv_detailed(dataset, folds, config)?.report)
}

pub fn run_cv_detailed(dataset: &str, folds: &[FoldSplit], config: &PipelineConfig) -> Result<CvRun> {
    if folds.is_empty() {
        return Err(Error::Data("no folds to evaluate".into()));
    }
    config.validate()?;
    let outcomes: Vec<(FoldResult, Option<FoldModel>)> = folds
        .par_iter()
        .map(|f| {
            let run = || -> Result<(TrainedModel, BatchPrediction, f64)> {
                let trained = train(&f.train, config)?;
                let test = trained.model.predict_batch(&f.test)?;
                let fit = trained.model.predict_batch(&f.train)?;
                Ok((trained, test, fit.rmse))
            };
            match run() {
                Ok((trained, test, train_rmse)) => (
                    FoldResult {
                        fold_index: f.fold_index,
                        test_rmse: Some(test.rmse),
                        train_rmse: Some(train_rmse),
                        rule_count: trained.model.rules().len(),
                        universe_size: trained.universe_size,
                        fallback_rate: test.fallback_rate(),
                        error: None,
                    },
                    Some(FoldModel {
                        fold_index: f.fold_index,
                        trained,
                        test,
                        test_targets: f.test.targets().to_vec(),
                    }),
                ),
                Err(e) => (
                    FoldResult {
                        fold_index: f.fold_index,
                        test_rmse: None,
                        train_rmse: None,
                        rule_count: 0,
                        universe_size: 0,
                        fallback_rate: 0.0,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();
    let (results, models): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let done: Vec<&FoldResult> = results.iter().filter(|r| r.test_rmse.is_some()).collect();
    let mean_rmse = (!done.is_empty())
        .then(|| done.iter().map(|r| r.test_rmse.unwrap()).sum::<f64>() / done.len() as f64);
    let fallback_rate = if done.is_empty() {
        0.0
    } else {
        done.iter().map(|r| r.fallback_rate).sum::<f64>() / done.len() as f64
    };
    let report = EvalReport {
        dataset: dataset.to_string(),
        variant: format!("D{}", config.degree),
        seed: config.seed,
        incomplete: done.len() < results.len(),
        folds: results,
        mean_rmse,
        fallback_rate,
        references: references(dataset).unwrap_or_default(),
        explainability: None,
    };
    Ok(CvRun { report, models })
}

/// Mean number of rules per row whose firing-strength midpoint exceeds
/// each threshold.
pub fn active_rules_per_prediction(model: &Model, data: &Dataset, thresholds: &[f64]) -> Result<Vec<ThresholdCount>> {
    if data.is_empty() {
        return Err(Error::Data("active-rule count over an empty dataset".into()));
    }
    let table = model.knowledge_base().membership_table(data)?;
    let mut counts = vec![0usize; thresholds.len()];
    for r in model.rules() {
        for row in 0..data.len() {
            let m = table.firing(r.antecedent(), row).midpoint();
            for (c, &t) in counts.iter_mut().zip(thresholds) {
                if m > t {
                    *c += 1;
                }
            }
        }
    }
    Ok(thresholds
        .iter()
        .zip(counts)
        .map(|(&threshold, c)| ThresholdCount {
            threshold,
            mean_rules: c as f64 / data.len() as f64,
        })
        .collect())
}

/// For each level, perturbs every feature by Gaussian noise with standard
/// deviation `level * feature_std[j]` and reports the mean absolute change
/// in prediction as a percentage of the mean target. All levels share the
/// same standard-normal draws.
pub fn noise_robustness(
    model: &Model,
    data: &Dataset,
    feature_std: &[f64],
    levels: &[f64],
    seed: u64,
) -> Result<Vec<NoiseDelta>> {
    if data.is_empty() {
        return Err(Error::Data("noise test over an empty dataset".into()));
    }
    if feature_std.len() != data.num_features() {
        return Err(Error::InvalidInput("one standard deviation per feature required".into()));
    }
    let scale = data.target_mean().abs();
    if scale == 0.0 {
        return Err(Error::Data("mean target is zero; percentage change undefined".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..data.len() * data.num_features())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let base = model.predict_batch(data)?.values();
    let w = data.num_features();
    levels
        .iter()
        .map(|&level| {
            let changes = (0..data.len())
                .into_par_iter()
                .map(|i| {
                    let x: Vec<f64> = data
                        .row(i)
                        .iter()
                        .enumerate()
                        .map(|(j, v)| v + level * feature_std[j] * z[i * w + j])
                        .collect();
                    Ok((model.predict(&x)?.value - base[i]).abs())
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = changes.iter().sum::<f64>() / changes.len() as f64;
            Ok(NoiseDelta {
                level,
                mean_change_pct: 100.0 * mean / scale,
            })
        })
        .collect()
}

pub fn coverage_metrics(model: &Model, data: &Dataset) -> Result<Coverage> {
    if data.is_empty() {
        return Err(Error::Data("coverage over an empty dataset".into()));
    }
    let n_sets = model.knowledge_base().target_partition().len();
    let mut used = vec![false; n_sets];
    for r in model.rules() {
        used[r.consequent_set()] = true;
    }
    let batch = model.predict_batch(data)?;
    let fired = batch.predictions.iter().filter(|p| !p.fired_rules.is_empty()).count();
    let span = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        hi - lo
    };
    let pred_span = span(&mut batch.predictions.iter().map(|p| p.value));
    let target_span = span(&mut data.targets().iter().copied());
    Ok(Coverage {
        classes_covered: used.iter().filter(|&&u| u).count() as f64 / n_sets as f64,
        dataset_coverage: fired as f64 / data.len() as f64,
        prediction_range_fraction: if target_span > 0.0 { pred_span / target_span } else { 1.0 },
    })
}

/// All explainability metrics of `model`: coverage and active rules on
/// `data`, noise robustness scaled by the spread of `train`.
pub fn explainability(model: &Model, train: &Dataset, data: &Dataset, seed: u64) -> Result<Explainability> {
    let rules = model.rules();
    Ok(Explainability {
        coverage: coverage_metrics(model, data)?,
        active_rules: active_rules_per_prediction(model, data, &ACTIVE_RULE_THRESHOLDS)?,
        rule_count: rules.len(),
        mean_antecedents: rules.iter().map(|r| r.antecedent().len()).sum::<usize>() as f64
            / rules.len().max(1) as f64,
        noise: noise_robustness(model, data, &train.feature_std(), &NOISE_LEVELS, seed)?,
    })
}

/// A model with the same rules as `hybrid` whose outputs are the
/// midpoints of the consequent sets' upper plateaus. Error dominance is
/// recomputed from those constant outputs on `train`.
pub fn mamdani_baseline(hybrid: &Model, train: &Dataset) -> Result<Model> {
    let kb = hybrid.knowledge_base();
    let rules = hybrid
        .rules()
        .iter()
        .map(|r| {
            let centroid = kb.target_set(r.consequent_set())?.plateau_midpoint();
            let vars = r.antecedent().iter().map(|c| c.feature).collect();
            let rule = r.clone().with_consequent(Polynomial::constant(vars, centroid))?;
            let rows = firing_rows(kb, &rule, train)?;
            let ed = if rows.is_empty() {
                rule.error_dominance()
            } else {
                error_dominance(rule_rmse(&rule, train, &rows)?)?
            };
            let fd = *rule.fuzzy_dominance();
            rule.with_dominance(fd, ed)
        })
        .collect::<Result<Vec<_>>>()?;
    hybrid.with_rules(rules)
}

/// Holdout comparison of the hybrid model and its centroid baseline.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub train: Dataset,
    pub test: Dataset,
    pub hybrid: TrainedModel,
    pub baseline: Model,
    pub hybrid_test: BatchPrediction,
    pub baseline_test: BatchPrediction,
    pub explainability: Explainability,
}

pub fn case_study(data: &Dataset, config: &PipelineConfig, test_fraction: f64) -> Result<CaseStudy> {
    let (train_set, test) = split_holdout(data, test_fraction, config.seed)?;
    let test = test.ok_or_else(|| Error::Config("case study needs a non-empty test split".into()))?;
    let hybrid = train(&train_set, config)?;
    let baseline = mamdani_baseline(&hybrid.model, &train_set)?;
    let hybrid_test = hybrid.model.predict_batch(&test)?;
    let baseline_test = baseline.predict_batch(&test)?;
    let explainability = explainability(&hybrid.model, &train_set, &test, config.seed)?;
    Ok(CaseStudy {
        train: train_set,
        test,
        hybrid,
        baseline,
        hybrid_test,
        baseline_test,
        explainability,
    })
}

/// Writes one row per prediction: actual, predicted, residual, number of
/// fired rules and the fallback flag, under a `# manifest:` comment line.
pub fn write_predictions_csv(path: &Path, manifest: &str, targets: &[f64], batch: &BatchPrediction) -> Result<()> {
    if targets.len() != batch.predictions.len() {
        return Err(Error::InvalidInput("targets and predictions differ in length".into()));
    }
    let mut out = Vec::new();
    let _ = writeln!(out, "# manifest: {manifest}");
    let _ = writeln!(out, "actual,predicted,residual,fired_rules,fallback");
    for (t, p) in targets.iter().zip(&batch.predictions) {
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            p.value,
            t - p.value,
            p.fired_rules.len(),
            u8::from(p.fallback_used)
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
