//! Candidate rule generation: every training row seeds a rule from its
//! best-matching sets, shorter rules are derived by dropping clauses, and
//! the survivors are fitted and weighted.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dominance::{error_dominance, fuzzy_dominance, rule_rmse, FuzzyDominance};
use crate::error::{Error, Result};
use crate::kb::{Clause, KnowledgeBase, MembershipTable};
use crate::poly::{fit_consequent, monomial_count, FitConfig};
use crate::rule::HybridRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Longest antecedent produced by clause deletion.
    pub max_antecedents: usize,
    /// Candidates kept before coverage repair, by descending upper
    /// fuzzy dominance.
    pub max_candidates: usize,
    /// Minimum upper fuzzy dominance.
    pub min_dominance: f64,
    /// Minimum number of firing rows. `None` means the monomial count of
    /// the rule's consequent, so every kept fit is determined.
    pub min_rows: Option<usize>,
    /// Fraction of rows that must stay covered after pruning.
    pub min_coverage: f64,
    pub fit: FitConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_antecedents: 3,
            max_candidates: 2000,
            min_dominance: 0.01,
            min_rows: None,
            min_coverage: 0.99,
            fit: FitConfig::default(),
        }
    }
}

impl GenerationConfig {
    /// Keeps every seeded candidate that can be fitted at all.
    pub fn unpruned() -> Self {
        GenerationConfig {
            max_candidates: usize::MAX,
            min_dominance: 0.0,
            min_rows: Some(1),
            min_coverage: 1.0,
            ..GenerationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_antecedents == 0 {
            return Err(Error::Config("max_antecedents must be >= 1".into()));
        }
        if self.max_candidates == 0 {
            return Err(Error::Config("max_candidates must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_dominance) {
            return Err(Error::Config("min_dominance must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.min_coverage) {
            return Err(Error::Config("min_coverage must lie in [0, 1]".into()));
        }
        if self.min_rows == Some(0) {
            return Err(Error::Config("min_rows must be >= 1".into()));
        }
        if self.fit.ridge.is_nan() || self.fit.ridge < 0.0 {
            return Err(Error::Config("ridge must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleUniverse {
    rules: Vec<HybridRule>,
    knowledge_base: KnowledgeBase,
    degree: u32,
    config: GenerationConfig,
    seed: u64,
    /// Distinct (antecedent, consequent) pairs seeded before pruning.
    seeded: usize,
}

impl RuleUniverse {
    pub fn rules(&self) -> &[HybridRule] {
        &self.rules
    }

    pub fn into_rules(self) -> Vec<HybridRule> {
        self.rules
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.knowledge_base
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn seeded(&self) -> usize {
        self.seeded
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Fraction of rows of `data` on which at least one rule fires.
    pub fn coverage(&self, data: &Dataset) -> Result<f64> {
        let table = self.knowledge_base.membership_table(data)?;
        let covered = covered_rows(&table, self.rules.iter().map(HybridRule::antecedent));
        Ok(covered.iter().filter(|&&c| c).count() as f64 / data.len().max(1) as f64)
    }
}

fn covered_rows<'a>(table: &MembershipTable, antecedents: impl Iterator<Item = &'a [Clause]>) -> Vec<bool> {
    let mut covered = vec![false; table.rows()];
    for a in antecedents {
        mark(table, a, &mut covered);
    }
    covered
}

fn mark(table: &MembershipTable, antecedent: &[Clause], covered: &mut [bool]) -> usize {
    let mut newly = 0;
    for (r, c) in covered.iter_mut().enumerate() {
        if !*c && !table.firing(antecedent, r).is_zero() {
            *c = true;
            newly += 1;
        }
    }
    newly
}

/// Index subsets of `0..n` with sizes `1..=max_len`, shortest first.
fn combinations(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, len, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for len in 1..=max_len.min(n) {
        go(0, n, len, &mut Vec::with_capacity(len), &mut out);
    }
    out
}

type Key = (Vec<Clause>, usize);

/// Distinct (antecedent, consequent) pairs seeded by the rows of `data`.
pub fn seed_candidates(data: &Dataset, kb: &KnowledgeBase, max_antecedents: usize) -> Result<Vec<Key>> {
    if data.is_empty() {
        return Err(Error::Data("cannot generate rules from an empty dataset".into()));
    }
    if data.num_features() != kb.num_features() {
        return Err(Error::InvalidInput("dataset and knowledge base disagree on features".into()));
    }
    let usable = kb.usable_features();
    let combos = combinations(usable.len(), max_antecedents);
    let mut keys = BTreeSet::new();
    let mut best = vec![0usize; usable.len()];
    for (x, &y) in data.rows().zip(data.targets()) {
        for (k, &j) in usable.iter().enumerate() {
            best[k] = kb.feature_partition(j).expect("usable").best_set(x[j]);
        }
        let out = kb.target_partition().best_set(y);
        for combo in &combos {
            let ante = combo
                .iter()
                .map(|&k| Clause {
                    feature: usable[k],
                    set: best[k],
                })
                .collect();
            keys.insert((ante, out));
        }
    }
    Ok(keys.into_iter().collect())
}

struct Scored {
    key: Key,
    dominance: FuzzyDominance,
}

/// Builds the rule universe from the training rows in `data`.
///
/// Candidates firing on fewer than the minimum row count are discarded.
/// The rest are ranked by upper fuzzy dominance; those above the
/// threshold are kept up to `max_candidates`, then lower-ranked ones are
/// re-admitted while they cover rows nothing else covers, until the
/// coverage target is met. Each kept rule gets a fitted consequent and an
/// error dominance from its clamped RMSE on its firing rows. The process
/// is deterministic; `seed` is recorded only.
pub fn generate_candidates(
    data: &Dataset,
    kb: &KnowledgeBase,
    degree: u32,
    config: &GenerationConfig,
    seed: u64,
) -> Result<RuleUniverse> {
    config.validate()?;
    if !(1..=3).contains(&degree) {
        return Err(Error::Config(format!("degree must be 1, 2 or 3, got {degree}")));
    }
    let keys = seed_candidates(data, kb, config.max_antecedents)?;
    let seeded = keys.len();
    let table = kb.membership_table(data)?;
    let min_rows = |len: usize| config.min_rows.unwrap_or_else(|| monomial_count(len, degree));

    let mut pool: Vec<Scored> = keys
        .into_par_iter()
        .map(|key| -> Result<Option<Scored>> {
            let firing = table.firing_column(&key.0);
            let fired = firing.iter().filter(|f| !f.is_zero()).count();
            if fired < min_rows(key.0.len()) {
                return Ok(None);
            }
            let cons: Vec<_> = (0..table.rows()).map(|r| table.target(key.1, r)).collect();
            let dominance = fuzzy_dominance(&firing, &cons)?;
            Ok(Some(Scored { key, dominance }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    pool.sort_by(|a, b| b.dominance.dominance().upper().total_cmp(&a.dominance.dominance().upper()));

    let mut admitted = Vec::new();
    let mut rest = Vec::new();
    for s in pool {
        if admitted.len() < config.max_candidates && s.dominance.dominance().upper() >= config.min_dominance {
            admitted.push(s);
        } else {
            rest.push(s);
        }
    }
    let mut covered = covered_rows(&table, admitted.iter().map(|s| s.key.0.as_slice()));
    let mut count = covered.iter().filter(|&&c| c).count();
    let target = (config.min_coverage * table.rows() as f64).ceil() as usize;
    for s in rest {
        if count >= target {
            break;
        }
        let newly = mark(&table, &s.key.0, &mut covered);
        if newly > 0 {
            count += newly;
            admitted.push(s);
        }
    }

    let rules: Vec<HybridRule> = admitted
        .into_par_iter()
        .map(|s| fit_rule(data, kb, &table, s, degree, &config.fit))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if rules.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    Ok(RuleUniverse {
        rules,
        knowledge_base: kb.clone(),
        degree,
        config: config.clone(),
        seed,
        seeded,
    })
}

fn fit_rule(
    data: &Dataset,
    kb: &KnowledgeBase,
    table: &MembershipTable,
    s: Scored,
    degree: u32,
    fit: &FitConfig,
) -> Result<Option<HybridRule>> {
    let (antecedent, out) = s.key;
    let mut rows = Vec::new();
    let mut mids = Vec::new();
    for r in 0..table.rows() {
        let f = table.firing(&antecedent, r);
        if !f.is_zero() {
            rows.push(r);
            mids.push(f.midpoint());
        }
    }
    let variables: Vec<usize> = antecedent.iter().map(|c| c.feature).collect();
    let poly = match fit_consequent(data, &rows, &mids, &variables, degree, fit) {
        Ok(p) => p,
        Err(Error::Unfittable(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let bounds = kb.target_set(out)?.support();
    let rule = HybridRule::new(antecedent, out, poly, bounds)?;
    let ed = error_dominance(rule_rmse(&rule, data, &rows)?)?;
    Ok(Some(rule.with_dominance(s.dominance, ed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::it2::{PartitionConfig, TNorm};

    fn one_feature() -> Dataset {
        let rows = (0..60).map(|i| vec![i as f64]).collect();
        let y = (0..60).map(|i| (i as f64 / 10.0).sin() * 5.0 + i as f64 * 0.3).collect();
        Dataset::from_rows("one", vec!["x".into()], "y", rows, y).unwrap()
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(8, 3).len(), 8 + 28 + 56);
        assert_eq!(combinations(2, 3).len(), 3);
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn single_feature_pairs_are_bounded() {
        let data = one_feature();
        let kb = KnowledgeBase::build(&data, &PartitionConfig::default(), TNorm::Minimum).unwrap();
        let keys = seed_candidates(&data, &kb, 3).unwrap();
        assert!(keys.len() <= 9);
        let sets: BTreeSet<usize> = keys.iter().map(|k| k.0[0].set).collect();
        assert_eq!(sets.len(), 3);
        let u = generate_candidates(&data, &kb, 2, &GenerationConfig::default(), 1).unwrap();
        assert!(!u.is_empty() && u.len() <= 9);
        for r in u.rules() {
            let set = kb.target_set(r.consequent_set()).unwrap();
            assert_eq!(r.clamp_bounds(), set.support());
        }
    }

    #[test]
    fn constant_feature_never_in_antecedent() {
        let rows = (0..40).map(|i| vec![i as f64, 3.0]).collect();
        let y = (0..40).map(|i| i as f64).collect();
        let data = Dataset::from_rows("c", vec!["x".into(), "k".into()], "y", rows, y).unwrap();
        let kb = KnowledgeBase::build(&data, &PartitionConfig::default(), TNorm::Minimum).unwrap();
        let u = generate_candidates(&data, &kb, 2, &GenerationConfig::default(), 0).unwrap();
        assert!(u.rules().iter().all(|r| r.antecedent().iter().all(|c| c.feature == 0)));
    }

    #[test]
    fn unpruned_universe_covers_every_row() {
        let data = one_feature();
        let kb = KnowledgeBase::build(&data, &PartitionConfig::default(), TNorm::Minimum).unwrap();
        let u = generate_candidates(&data, &kb, 3, &GenerationConfig::unpruned(), 0).unwrap();
        assert_eq!(u.coverage(&data).unwrap(), 1.0);
        assert_eq!(u.len(), u.seeded());
    }

    #[test]
    fn config_rejects_bad_values() {
        let bad = GenerationConfig { max_antecedents: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = GenerationConfig { min_coverage: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let data = one_feature();
        let kb = KnowledgeBase::build(&data, &PartitionConfig::default(), TNorm::Minimum).unwrap();
        assert!(generate_candidates(&data, &kb, 4, &GenerationConfig::default(), 0).is_err());
    }
}
