//! Rule weights: interval fuzzy dominance (support times confidence) and
//! error dominance `1 / (1 + rmse)`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::it2::MembershipInterval;
use crate::kb::KnowledgeBase;
use crate::rule::HybridRule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyDominance {
    support: MembershipInterval,
    confidence: MembershipInterval,
    dominance: MembershipInterval,
}

impl FuzzyDominance {
    pub fn zero() -> Self {
        FuzzyDominance {
            support: MembershipInterval::ZERO,
            confidence: MembershipInterval::ZERO,
            dominance: MembershipInterval::ZERO,
        }
    }

    /// Dominance is the bound-wise product of support and confidence.
    pub fn new(support: MembershipInterval, confidence: MembershipInterval) -> Self {
        let dominance = MembershipInterval::saturating(
            support.lower() * confidence.lower(),
            support.upper() * confidence.upper(),
        );
        FuzzyDominance {
            support,
            confidence,
            dominance,
        }
    }

    pub fn support(&self) -> MembershipInterval {
        self.support
    }

    pub fn confidence(&self) -> MembershipInterval {
        self.confidence
    }

    pub fn dominance(&self) -> MembershipInterval {
        self.dominance
    }
}

fn check_lengths(firing: &[MembershipInterval], consequent: &[MembershipInterval]) -> Result<()> {
    if firing.len() != consequent.len() {
        return Err(Error::InvalidInput(format!(
            "{} firing intervals but {} consequent memberships",
            firing.len(),
            consequent.len()
        )));
    }
    if firing.is_empty() {
        return Err(Error::InvalidInput("support over an empty dataset".into()));
    }
    Ok(())
}

/// Per-bound sums `(sum f*mu, sum f)` over rows.
fn bound_sums(firing: &[MembershipInterval], consequent: &[MembershipInterval]) -> [(f64, f64); 2] {
    let mut s = [(0.0, 0.0); 2];
    for (f, c) in firing.iter().zip(consequent) {
        s[0].0 += f.lower() * c.lower();
        s[0].1 += f.lower();
        s[1].0 += f.upper() * c.upper();
        s[1].1 += f.upper();
    }
    s
}

/// Rule support from per-row firing intervals and consequent-set
/// memberships of the targets: the mean of `firing * membership` per bound.
pub fn support_interval(
    firing: &[MembershipInterval],
    consequent: &[MembershipInterval],
) -> Result<MembershipInterval> {
    check_lengths(firing, consequent)?;
    let n = firing.len() as f64;
    let [lo, hi] = bound_sums(firing, consequent);
    Ok(MembershipInterval::saturating(lo.0 / n, hi.0 / n))
}

/// Rule confidence: per bound, `sum f*mu / sum f`. A bound whose firing
/// sum is zero contributes 0; when rounding leaves the lower ratio above
/// the upper one the two are swapped.
pub fn confidence_interval(
    firing: &[MembershipInterval],
    consequent: &[MembershipInterval],
) -> Result<MembershipInterval> {
    check_lengths(firing, consequent)?;
    let [lo, hi] = bound_sums(firing, consequent);
    if lo.1 <= 0.0 && hi.1 <= 0.0 {
        return Err(Error::ZeroSupport);
    }
    let ratio = |(num, den): (f64, f64)| if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 };
    let (a, b) = (ratio(lo), ratio(hi));
    Ok(MembershipInterval::saturating(a.min(b), a.max(b)))
}

/// Support, confidence and their product. A rule that fires nowhere has
/// zero dominance.
pub fn fuzzy_dominance(
    firing: &[MembershipInterval],
    consequent: &[MembershipInterval],
) -> Result<FuzzyDominance> {
    let support = support_interval(firing, consequent)?;
    match confidence_interval(firing, consequent) {
        Ok(confidence) => Ok(FuzzyDominance::new(support, confidence)),
        Err(Error::ZeroSupport) => Ok(FuzzyDominance::zero()),
        Err(e) => Err(e),
    }
}

fn rule_columns(
    kb: &KnowledgeBase,
    rule: &HybridRule,
    data: &Dataset,
) -> Result<(Vec<MembershipInterval>, Vec<MembershipInterval>)> {
    let set = kb.target_set(rule.consequent_set())?;
    let mut firing = Vec::with_capacity(data.len());
    let mut cons = Vec::with_capacity(data.len());
    for (x, &y) in data.rows().zip(data.targets()) {
        firing.push(kb.firing(rule.antecedent(), x)?);
        cons.push(set.membership(y)?);
    }
    Ok((firing, cons))
}

pub fn rule_support(kb: &KnowledgeBase, rule: &HybridRule, data: &Dataset) -> Result<MembershipInterval> {
    let (f, c) = rule_columns(kb, rule, data)?;
    support_interval(&f, &c)
}

pub fn rule_confidence(kb: &KnowledgeBase, rule: &HybridRule, data: &Dataset) -> Result<MembershipInterval> {
    let (f, c) = rule_columns(kb, rule, data)?;
    confidence_interval(&f, &c)
}

pub fn rule_fuzzy_dominance(kb: &KnowledgeBase, rule: &HybridRule, data: &Dataset) -> Result<FuzzyDominance> {
    let (f, c) = rule_columns(kb, rule, data)?;
    fuzzy_dominance(&f, &c)
}

/// `1 / (1 + rmse)`.
pub fn error_dominance(rmse: f64) -> Result<f64> {
    if rmse.is_nan() || rmse < 0.0 || rmse.is_infinite() {
        return Err(Error::InvalidInput(format!("rmse must be finite and >= 0, got {rmse}")));
    }
    Ok(1.0 / (1.0 + rmse))
}

/// RMSE of the rule's clamped output against the targets of `rows`.
pub fn rule_rmse(rule: &HybridRule, data: &Dataset, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::ZeroSupport);
    }
    let sse: f64 = rows
        .iter()
        .map(|&r| (rule.evaluate(data.row(r)) - data.targets()[r]).powi(2))
        .sum();
    Ok((sse / rows.len() as f64).sqrt())
}

/// Rows of `data` on which the rule's firing upper bound is positive.
pub fn firing_rows(kb: &KnowledgeBase, rule: &HybridRule, data: &Dataset) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for (i, x) in data.rows().enumerate() {
        if !kb.firing(rule.antecedent(), x)?.is_zero() {
            rows.push(i);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(a: f64, b: f64) -> MembershipInterval {
        MembershipInterval::new(a, b).unwrap()
    }

    #[test]
    fn worked_error_dominance() {
        let d = error_dominance(14.3).unwrap();
        assert_eq!(format!("{d:.3}"), "0.065");
        assert_eq!(error_dominance(0.0).unwrap(), 1.0);
        assert_eq!(error_dominance(1.0).unwrap(), 0.5);
        assert!(error_dominance(-0.1).is_err());
        assert!(error_dominance(f64::NAN).is_err());
    }

    #[test]
    fn nowhere_firing_rule() {
        let f = vec![MembershipInterval::ZERO; 3];
        let c = vec![iv(0.5, 1.0); 3];
        assert_eq!(support_interval(&f, &c).unwrap(), MembershipInterval::ZERO);
        assert!(matches!(confidence_interval(&f, &c), Err(Error::ZeroSupport)));
        assert_eq!(fuzzy_dominance(&f, &c).unwrap().dominance(), MembershipInterval::ZERO);
    }

    #[test]
    fn single_full_instance() {
        let d = fuzzy_dominance(&[MembershipInterval::ONE], &[MembershipInterval::ONE]).unwrap();
        assert_eq!(d.support(), MembershipInterval::ONE);
        assert_eq!(d.confidence(), MembershipInterval::ONE);
        assert_eq!(d.dominance(), MembershipInterval::ONE);
    }

    #[test]
    fn confidence_edge_cases() {
        let f = [iv(0.2, 0.5), iv(0.0, 0.3)];
        assert_eq!(confidence_interval(&f, &[MembershipInterval::ONE; 2]).unwrap(), MembershipInterval::ONE);
        assert_eq!(confidence_interval(&f, &[MembershipInterval::ZERO; 2]).unwrap(), MembershipInterval::ZERO);
    }

    #[test]
    fn hand_listed_four_rows() {
        let f = [iv(0.2, 0.4), iv(0.5, 0.9), iv(0.0, 0.1), iv(1.0, 1.0)];
        let c = [iv(0.9, 1.0), iv(0.0, 0.3), iv(0.4, 0.6), iv(0.45, 0.5)];
        // lower: 0.18 + 0 + 0 + 0.45 = 0.63, sum f = 1.7
        // upper: 0.4 + 0.27 + 0.06 + 0.5 = 1.23, sum f = 2.4
        let s = support_interval(&f, &c).unwrap();
        assert!((s.lower() - 0.63 / 4.0).abs() < 1e-15);
        assert!((s.upper() - 1.23 / 4.0).abs() < 1e-15);
        let k = confidence_interval(&f, &c).unwrap();
        // 0.63/1.7 = 0.3706 < 1.23/2.4 = 0.5125
        assert!((k.lower() - 0.63 / 1.7).abs() < 1e-15);
        assert!((k.upper() - 1.23 / 2.4).abs() < 1e-15);
        let d = fuzzy_dominance(&f, &c).unwrap().dominance();
        assert!((d.lower() - 0.63 / 4.0 * 0.63 / 1.7).abs() < 1e-15);
        assert!((d.upper() - 1.23 / 4.0 * 1.23 / 2.4).abs() < 1e-15);
    }

    #[test]
    fn confidence_bounds_swap_when_crossed() {
        // lower ratio 1.0, upper ratio 0.5
        let f = [iv(0.5, 0.5), iv(0.0, 0.5)];
        let c = [iv(1.0, 1.0), iv(0.0, 0.0)];
        let k = confidence_interval(&f, &c).unwrap();
        assert_eq!((k.lower(), k.upper()), (0.5, 1.0));
    }

    fn interval() -> impl Strategy<Value = MembershipInterval> {
        (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b)| iv(a.min(b), a.max(b)))
    }

    proptest! {
        #[test]
        fn error_dominance_decreasing_and_bounded(a in 0.0f64..1e6, b in 0.0f64..1e6) {
            let (da, db) = (error_dominance(a).unwrap(), error_dominance(b).unwrap());
            prop_assert!(da > 0.0 && da <= 1.0);
            if a < b {
                prop_assert!(da > db);
            }
        }

        #[test]
        fn duplication_leaves_weights_unchanged(rows in prop::collection::vec((interval(), interval()), 1..10)) {
            let (f, c): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            let f2: Vec<_> = f.iter().chain(&f).copied().collect();
            let c2: Vec<_> = c.iter().chain(&c).copied().collect();
            let (s1, s2) = (support_interval(&f, &c).unwrap(), support_interval(&f2, &c2).unwrap());
            prop_assert!((s1.lower() - s2.lower()).abs() < 1e-12 && (s1.upper() - s2.upper()).abs() < 1e-12);
            match (confidence_interval(&f, &c), confidence_interval(&f2, &c2)) {
                (Ok(a), Ok(b)) => prop_assert!((a.lower() - b.lower()).abs() < 1e-12 && (a.upper() - b.upper()).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "confidence defined on only one copy"),
            }
        }

        #[test]
        fn dominance_is_ordered(rows in prop::collection::vec((interval(), interval()), 1..10)) {
            let (f, c): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            let d = fuzzy_dominance(&f, &c).unwrap();
            prop_assert!(d.dominance().lower() <= d.dominance().upper());
            prop_assert!(d.support().lower() <= d.support().upper());
        }
    }
}
