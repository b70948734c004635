//! Hybrid rules: linguistic antecedent, output set, and a polynomial whose
//! value is clamped to the output set's upper support.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dominance::FuzzyDominance;
use crate::error::{Error, Result};
use crate::kb::{Clause, KnowledgeBase};
use crate::poly::{Polynomial, Term};

/// Clamps `value` into `[lo, hi]`.
pub fn clamp_output(value: f64, bounds: (f64, f64)) -> f64 {
    value.max(bounds.0).min(bounds.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridRule {
    antecedent: Vec<Clause>,
    consequent_set: usize,
    consequent: Polynomial,
    clamp_bounds: (f64, f64),
    fuzzy_dominance: FuzzyDominance,
    error_dominance: f64,
}

impl HybridRule {
    /// A rule with zero fuzzy dominance and unit error dominance; use
    /// [`HybridRule::with_dominance`] once both are known.
    pub fn new(
        antecedent: Vec<Clause>,
        consequent_set: usize,
        consequent: Polynomial,
        clamp_bounds: (f64, f64),
    ) -> Result<Self> {
        if antecedent.is_empty() {
            return Err(Error::InvalidRule("empty antecedent".into()));
        }
        if !(clamp_bounds.0.is_finite() && clamp_bounds.1.is_finite() && clamp_bounds.0 <= clamp_bounds.1)
        {
            return Err(Error::InvalidRule(format!(
                "clamp bounds [{}, {}] are not an ordered finite interval",
                clamp_bounds.0, clamp_bounds.1
            )));
        }
        if let Some(v) = consequent
            .variables()
            .iter()
            .find(|v| !antecedent.iter().any(|c| c.feature == **v))
        {
            return Err(Error::InvalidRule(format!(
                "consequent uses feature {v} which is not in the antecedent"
            )));
        }
        Ok(HybridRule {
            antecedent,
            consequent_set,
            consequent,
            clamp_bounds,
            fuzzy_dominance: FuzzyDominance::zero(),
            error_dominance: 1.0,
        })
    }

    pub fn with_dominance(mut self, fuzzy: FuzzyDominance, error_dominance: f64) -> Result<Self> {
        if !(error_dominance > 0.0 && error_dominance <= 1.0) {
            return Err(Error::InvalidRule(format!(
                "error dominance must lie in (0, 1], got {error_dominance}"
            )));
        }
        self.fuzzy_dominance = fuzzy;
        self.error_dominance = error_dominance;
        Ok(self)
    }

    pub fn with_consequent(mut self, consequent: Polynomial) -> Result<Self> {
        let r = HybridRule::new(self.antecedent, self.consequent_set, consequent, self.clamp_bounds)?;
        self = r.with_dominance(self.fuzzy_dominance, self.error_dominance)?;
        Ok(self)
    }

    pub fn antecedent(&self) -> &[Clause] {
        &self.antecedent
    }

    pub fn consequent_set(&self) -> usize {
        self.consequent_set
    }

    pub fn consequent(&self) -> &Polynomial {
        &self.consequent
    }

    pub fn clamp_bounds(&self) -> (f64, f64) {
        self.clamp_bounds
    }

    pub fn fuzzy_dominance(&self) -> &FuzzyDominance {
        &self.fuzzy_dominance
    }

    pub fn error_dominance(&self) -> f64 {
        self.error_dominance
    }

    /// Unclamped polynomial value.
    pub fn raw_output(&self, x: &[f64]) -> f64 {
        self.consequent.eval(x)
    }

    /// Polynomial value clamped to the output set's upper support.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        clamp_output(self.consequent.eval(x), self.clamp_bounds)
    }

    /// `IF x1 is A AND x2 is B THEN y is C`. The polynomial never appears.
    pub fn linguistic(&self, kb: &KnowledgeBase) -> Result<String> {
        let mut s = String::from("IF ");
        for (i, &c) in self.antecedent.iter().enumerate() {
            if i > 0 {
                s.push_str(" AND ");
            }
            let set = kb.clause_set(c)?;
            let _ = write!(s, "{} is {}", kb.feature_names()[c.feature], set.name());
        }
        let out = kb.target_set(self.consequent_set)?;
        let _ = write!(s, " THEN {} is {}", kb.target_name(), out.name());
        Ok(s)
    }

    /// Raw-unit polynomial as `y = c0 + c1*x1 + ...`, zero terms omitted.
    pub fn formula(&self, kb: &KnowledgeBase) -> String {
        let names: Vec<&str> = self
            .consequent
            .variables()
            .iter()
            .map(|&v| kb.feature_names().get(v).map_or("?", String::as_str))
            .collect();
        format_polynomial(kb.target_name(), &names, &self.consequent.raw_terms())
    }
}

fn format_coefficient(c: f64) -> String {
    let a = c.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{a:.4e}")
    } else {
        format!("{a:.4}")
    }
}

fn format_polynomial(target: &str, names: &[&str], terms: &[Term]) -> String {
    let mut s = format!("{target} = ");
    let mut first = true;
    for t in terms.iter().filter(|t| t.coefficient != 0.0) {
        let sign = if t.coefficient < 0.0 { "-" } else { "+" };
        if first {
            if t.coefficient < 0.0 {
                s.push('-');
            }
        } else {
            let _ = write!(s, " {sign} ");
        }
        first = false;
        s.push_str(&format_coefficient(t.coefficient));
        for (name, &e) in names.iter().zip(&t.exponents) {
            match e {
                0 => {}
                1 => {
                    let _ = write!(s, "*{name}");
                }
                _ => {
                    let _ = write!(s, "*{name}^{e}");
                }
            }
        }
    }
    if first {
        s.push('0');
    }
    s
}

/// Human-readable rule listing: one block per rule.
pub fn export_rules(kb: &KnowledgeBase, rules: &[HybridRule]) -> Result<String> {
    let mut s = String::new();
    for (i, r) in rules.iter().enumerate() {
        let fd = r.fuzzy_dominance().dominance();
        let _ = writeln!(s, "Rule {}: {}", i + 1, r.linguistic(kb)?);
        let _ = writeln!(s, "  {}", r.formula(kb));
        let _ = writeln!(s, "  bounds: [{:.4}, {:.4}]", r.clamp_bounds.0, r.clamp_bounds.1);
        let _ = writeln!(
            s,
            "  fuzzy dominance: [{:.3}, {:.3}]  error dominance: {:.3}",
            fd.lower(),
            fd.upper(),
            r.error_dominance()
        );
        s.push('\n');
    }
    Ok(s)
}
