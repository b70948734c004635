//! Published RMSE figures for comparison tables. Stored verbatim, never
//! recomputed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceResult {
    pub method: String,
    pub rmse: f64,
}

/// `(dataset, [(method, rmse)])`. Hybrid results are listed as
/// `hybrid-d2` / `hybrid-d3` for the two polynomial degrees.
const TABLE: &[(&str, &[(&str, f64)])] = &[
    ("concrete", &[("hybrid-d3", 7.29), ("GLD-WM", 7.32), ("MP", 7.86)]),
    (
        "diabetes",
        &[("hybrid-d3", 0.80), ("hybrid-d2", 0.79), ("MP", 0.63), ("SMOreg", 0.65)],
    ),
    ("ele-2", &[("hybrid-d3", 189.28), ("MP", 158.05)]),
    (
        "mortgage",
        &[("hybrid-d3", 0.13), ("hybrid-d2", 0.15), ("WM", 0.92), ("MP", 0.11)],
    ),
    ("treasury", &[("hybrid-d3", 0.27), ("MP", 0.25)]),
    (
        "wankara",
        &[("hybrid-d2", 1.58), ("hybrid-d3", 1.58), ("SMOreg", 1.58)],
    ),
    (
        "california",
        &[
            ("LR", 0.728),
            ("CART (RF)", 0.720),
            ("NAM", 0.562),
            ("EBM", 0.557),
            ("XGBoost", 0.532),
            ("DNN", 0.492),
            ("Mamdani FRBS", 0.751),
            ("hybrid", 0.695),
        ],
    ),
];

/// Dataset names with stored references.
pub fn available_datasets() -> Vec<&'static str> {
    TABLE.iter().map(|(n, _)| *n).collect()
}

/// Normalizes names like `ELE2`, `ele-2` or `Concrete_Data` to the table key.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    let squash = |s: &str| {
        s.chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase()
    };
    let n = squash(name);
    TABLE
        .iter()
        .map(|(k, _)| *k)
        .find(|k| n == squash(k) || n.starts_with(&squash(k)))
}

pub fn references(dataset: &str) -> Option<Vec<ReferenceResult>> {
    let key = canonical_name(dataset)?;
    TABLE.iter().find(|(k, _)| *k == key).map(|(_, rows)| {
        rows.iter()
            .map(|(m, r)| ReferenceResult {
                method: (*m).to_string(),
                rmse: *r,
            })
            .collect()
    })
}

/// Published hybrid RMSE for a polynomial degree, if listed.
pub fn hybrid_reference(dataset: &str, degree: u32) -> Option<f64> {
    let method = format!("hybrid-d{degree}");
    references(dataset)?
        .into_iter()
        .find(|r| r.method == method || r.method == "hybrid")
        .map(|r| r.rmse)
}

/// Explainability figures reported for the California housing case study.
pub mod california {
    /// Thresholds and mean rules with firing strength above each.
    pub const ACTIVE_RULES: [(f64, f64); 3] = [(0.15, 8.38), (0.25, 6.33), (0.5, 3.83)];
    /// Noise level and mean absolute prediction change, percent of mean target.
    pub const NOISE_CHANGE_PCT: [(f64, f64); 3] = [(0.01, 1.18), (0.05, 5.84), (0.10, 12.24)];
    pub const RULE_COUNT: usize = 75;
    pub const MEAN_ANTECEDENTS: f64 = 2.67;
    pub const CLASSES_COVERED: f64 = 1.0;
    pub const DATASET_COVERAGE: f64 = 1.0;
    /// Predictions spanned 0.78 to 4.93 against targets 0.15 to 5.00.
    pub const PREDICTION_RANGE_FRACTION: f64 = 0.96;
    pub const ROWS: usize = 20640;
    pub const FEATURES: usize = 8;
}

/// Worked example of the cement rule.
pub mod cement_rule {
    pub const OUTPUT: f64 = 72.62;
    pub const HIGH_BOUNDS: (f64, f64) = (37.91, 82.6);
    pub const RMSE: f64 = 14.3;
    pub const ERROR_DOMINANCE: f64 = 0.065;
    pub const FUZZY_DOMINANCE: (f64, f64) = (0.436, 0.457);
    pub const TARGET_SUPPORTS: [(f64, f64); 3] = [(2.33, 32.04), (16.89, 54.9), (37.91, 82.6)];
}
