//! The fuzzy knowledge base: one partition per usable feature plus the
//! target partition, and a per-row membership cache for training passes.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::it2::{build_partition, It2Set, MembershipInterval, Partition, PartitionConfig, TNorm};

/// `feature is set`, by index into the knowledge base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Clause {
    pub feature: usize,
    pub set: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    feature_names: Vec<String>,
    target_name: String,
    /// `None` for features whose training column is constant.
    features: Vec<Option<Partition>>,
    target: Partition,
    tnorm: TNorm,
}

impl KnowledgeBase {
    /// Builds partitions for every feature and the target of `data`.
    /// Constant feature columns are left without a partition and never
    /// appear in antecedents; a constant target is an error.
    pub fn build(data: &Dataset, config: &PartitionConfig, tnorm: TNorm) -> Result<Self> {
        config.validate()?;
        let mut features = Vec::with_capacity(data.num_features());
        for (j, name) in data.feature_names().iter().enumerate() {
            match build_partition(name, &data.column(j), config) {
                Ok(p) => features.push(Some(p)),
                Err(Error::DegeneratePartition { .. }) => features.push(None),
                Err(e) => return Err(e),
            }
        }
        if features.iter().all(Option::is_none) {
            return Err(Error::Data("every feature column is constant".into()));
        }
        let target = build_partition(data.target_name(), data.targets(), config)?;
        Ok(KnowledgeBase {
            feature_names: data.feature_names().to_vec(),
            target_name: data.target_name().to_string(),
            features,
            target,
            tnorm,
        })
    }

    pub fn from_parts(
        feature_names: Vec<String>,
        target_name: String,
        features: Vec<Option<Partition>>,
        target: Partition,
        tnorm: TNorm,
    ) -> Result<Self> {
        if feature_names.len() != features.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature names but {} partitions",
                feature_names.len(),
                features.len()
            )));
        }
        Ok(KnowledgeBase {
            feature_names,
            target_name,
            features,
            target,
            tnorm,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_partition(&self, feature: usize) -> Option<&Partition> {
        self.features.get(feature).and_then(Option::as_ref)
    }

    pub fn target_partition(&self) -> &Partition {
        &self.target
    }

    pub fn tnorm(&self) -> TNorm {
        self.tnorm
    }

    /// Indices of features that carry a partition.
    pub fn usable_features(&self) -> Vec<usize> {
        (0..self.features.len())
            .filter(|&j| self.features[j].is_some())
            .collect()
    }

    pub fn clause_set(&self, clause: Clause) -> Result<&It2Set> {
        self.feature_partition(clause.feature)
            .and_then(|p| p.sets().get(clause.set))
            .ok_or_else(|| {
                Error::InvalidRule(format!(
                    "clause references feature {} set {} which does not exist",
                    clause.feature, clause.set
                ))
            })
    }

    pub fn target_set(&self, index: usize) -> Result<&It2Set> {
        self.target.sets().get(index).ok_or_else(|| {
            Error::InvalidRule(format!("target set {index} does not exist"))
        })
    }

    /// Checks that an antecedent is non-empty, sorted by feature, free of
    /// repeated features and resolvable against this knowledge base.
    pub fn check_antecedent(&self, antecedent: &[Clause]) -> Result<()> {
        if antecedent.is_empty() {
            return Err(Error::InvalidRule("empty antecedent".into()));
        }
        for w in antecedent.windows(2) {
            if w[0].feature >= w[1].feature {
                return Err(Error::InvalidRule(
                    "antecedent clauses must be sorted by feature without repeats".into(),
                ));
            }
        }
        for &c in antecedent {
            self.clause_set(c)?;
        }
        Ok(())
    }

    /// Firing-strength interval of `antecedent` at `x`.
    pub fn firing(&self, antecedent: &[Clause], x: &[f64]) -> Result<MembershipInterval> {
        if x.len() != self.features.len() {
            return Err(Error::InvalidInput(format!(
                "input has {} values, expected {}",
                x.len(),
                self.features.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite input value {v}")));
        }
        if antecedent.is_empty() {
            return Err(Error::InvalidRule("empty antecedent".into()));
        }
        let mut acc = MembershipInterval::ONE;
        for &c in antecedent {
            acc = self
                .tnorm
                .combine(acc, self.clause_set(c)?.membership_unchecked(x[c.feature]));
        }
        Ok(acc)
    }

    /// Memberships of every row of `data` in every set, for fast repeated
    /// firing-strength evaluation.
    pub fn membership_table(&self, data: &Dataset) -> Result<MembershipTable> {
        if data.num_features() != self.features.len() {
            return Err(Error::InvalidInput(format!(
                "dataset has {} features, knowledge base expects {}",
                data.num_features(),
                self.features.len()
            )));
        }
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(j, p)| {
                p.as_ref().map(|p| {
                    p.sets()
                        .iter()
                        .map(|s| data.rows().map(|r| s.membership_unchecked(r[j])).collect())
                        .collect()
                })
            })
            .collect();
        let target = self
            .target
            .sets()
            .iter()
            .map(|s| data.targets().iter().map(|&y| s.membership_unchecked(y)).collect())
            .collect();
        Ok(MembershipTable {
            rows: data.len(),
            tnorm: self.tnorm,
            features,
            target,
        })
    }
}

/// Cached memberships of a fixed dataset: `features[j][set][row]` and
/// `target[set][row]`.
#[derive(Debug, Clone)]
pub struct MembershipTable {
    rows: usize,
    tnorm: TNorm,
    features: Vec<Option<Vec<Vec<MembershipInterval>>>>,
    target: Vec<Vec<MembershipInterval>>,
}

impl MembershipTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn clause(&self, clause: Clause, row: usize) -> MembershipInterval {
        self.features[clause.feature].as_ref().expect("clause on unusable feature")[clause.set][row]
    }

    pub fn target(&self, set: usize, row: usize) -> MembershipInterval {
        self.target[set][row]
    }

    pub fn firing(&self, antecedent: &[Clause], row: usize) -> MembershipInterval {
        antecedent
            .iter()
            .fold(MembershipInterval::ONE, |acc, &c| self.tnorm.combine(acc, self.clause(c, row)))
    }

    /// Firing interval of `antecedent` on every row.
    pub fn firing_column(&self, antecedent: &[Clause]) -> Vec<MembershipInterval> {
        (0..self.rows).map(|r| self.firing(antecedent, r)).collect()
    }
}
