//! Interval type-2 fuzzy sets with trapezoidal lower/upper membership
//! functions, data-driven partitions and interval firing strengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A membership degree interval `[lower, upper]` with
/// `0 <= lower <= upper <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct MembershipInterval {
    lower: f64,
    upper: f64,
}

impl MembershipInterval {
    pub const ZERO: MembershipInterval = MembershipInterval {
        lower: 0.0,
        upper: 0.0,
    };
    pub const ONE: MembershipInterval = MembershipInterval {
        lower: 1.0,
        upper: 1.0,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "membership bounds must be finite, got [{lower}, {upper}]"
            )));
        }
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(Error::InvalidInput(format!(
                "membership interval [{lower}, {upper}] violates 0 <= lower <= upper <= 1"
            )));
        }
        Ok(MembershipInterval { lower, upper })
    }

    /// Builds an interval from values that are correct up to rounding.
    pub(crate) fn saturating(lower: f64, upper: f64) -> Self {
        let upper = upper.clamp(0.0, 1.0);
        let lower = lower.clamp(0.0, upper);
        MembershipInterval { lower, upper }
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// True when the upper bound is zero, i.e. the point is outside the
    /// footprint of uncertainty entirely.
    #[inline]
    pub fn is_zero(&self) -> bool {
        self.upper <= 0.0
    }

    /// Both bounds of `self` are at least those of `other`.
    pub fn dominates(&self, other: &MembershipInterval) -> bool {
        self.lower >= other.lower && self.upper >= other.upper
    }

    pub fn reduce(&self, reduction: IntervalReduction) -> f64 {
        match reduction {
            IntervalReduction::Midpoint => self.midpoint(),
            IntervalReduction::Lower => self.lower,
            IntervalReduction::Upper => self.upper,
        }
    }
}

impl TryFrom<(f64, f64)> for MembershipInterval {
    type Error = Error;

    fn try_from((lower, upper): (f64, f64)) -> Result<Self> {
        MembershipInterval::new(lower, upper)
    }
}

impl From<MembershipInterval> for (f64, f64) {
    fn from(m: MembershipInterval) -> Self {
        (m.lower, m.upper)
    }
}

/// How an interval degree is collapsed into a single weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalReduction {
    #[default]
    Midpoint,
    Lower,
    Upper,
}

/// Triangular norm used to conjoin antecedent clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TNorm {
    #[default]
    Minimum,
    Product,
}

impl TNorm {
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Minimum => a.min(b),
            TNorm::Product => a * b,
        }
    }

    /// Bound-wise t-norm of two intervals.
    #[inline]
    pub fn combine(self, a: MembershipInterval, b: MembershipInterval) -> MembershipInterval {
        MembershipInterval::saturating(self.apply(a.lower, b.lower), self.apply(a.upper, b.upper))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetShape {
    LeftShoulder,
    Trapezoid,
    RightShoulder,
}

/// Breakpoints `a <= b <= c <= d` of a trapezoidal membership function.
///
/// For a left shoulder `a` and `b` mark the observed left edge of the
/// domain; the function is 1 for every `x <= c`. A right shoulder is the
/// mirror image, with `c` and `d` marking the right edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let t = Trapezoid { a, b, c, d };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let Trapezoid { a, b, c, d } = *self;
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "trapezoid breakpoints must be finite: ({a}, {b}, {c}, {d})"
            )));
        }
        if !(a <= b && b <= c && c <= d) {
            return Err(Error::InvalidInput(format!(
                "trapezoid breakpoints must satisfy a <= b <= c <= d: ({a}, {b}, {c}, {d})"
            )));
        }
        Ok(())
    }

    fn eval(&self, shape: SetShape, x: f64) -> f64 {
        let Trapezoid { a, b, c, d } = *self;
        match shape {
            SetShape::LeftShoulder => {
                if x <= c {
                    1.0
                } else if x >= d {
                    0.0
                } else {
                    (d - x) / (d - c)
                }
            }
            SetShape::RightShoulder => {
                if x >= b {
                    1.0
                } else if x <= a {
                    0.0
                } else {
                    (x - a) / (b - a)
                }
            }
            SetShape::Trapezoid => {
                if x < a || x > d {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else if x <= c {
                    1.0
                } else {
                    (d - x) / (d - c)
                }
            }
        }
    }

    fn points(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

#[derive(Deserialize)]
struct It2SetRecord {
    name: String,
    shape: SetShape,
    upper: Trapezoid,
    lower: Trapezoid,
    fou_scale: f64,
}

/// One linguistic term: an interval type-2 set bounded by an upper and a
/// (scaled) lower trapezoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "It2SetRecord")]
pub struct It2Set {
    name: String,
    shape: SetShape,
    upper: Trapezoid,
    lower: Trapezoid,
    fou_scale: f64,
}

impl TryFrom<It2SetRecord> for It2Set {
    type Error = Error;

    fn try_from(r: It2SetRecord) -> Result<Self> {
        It2Set::new(r.name, r.shape, r.upper, r.lower, r.fou_scale)
    }
}

impl It2Set {
    pub fn new(
        name: impl Into<String>,
        shape: SetShape,
        upper: Trapezoid,
        lower: Trapezoid,
        fou_scale: f64,
    ) -> Result<Self> {
        upper.validate()?;
        lower.validate()?;
        if !(fou_scale > 0.0 && fou_scale <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "fou_scale must lie in (0, 1], got {fou_scale}"
            )));
        }
        let set = It2Set {
            name: name.into(),
            shape,
            upper,
            lower,
            fou_scale,
        };
        let (ul, uh) = set.support();
        let (ll, lh) = set.lower_support();
        if ll < ul || lh > uh {
            return Err(Error::InvalidInput(format!(
                "lower support [{ll}, {lh}] of `{}` escapes upper support [{ul}, {uh}]",
                set.name
            )));
        }
        // Both functions are piecewise linear and constant outside their
        // breakpoints, so checking every breakpoint checks every x.
        for x in upper.points().into_iter().chain(lower.points()) {
            let m = set.raw_membership(x);
            if m.0 > m.1 + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "lower membership exceeds upper at x = {x} in `{}`",
                    set.name
                )));
            }
        }
        Ok(set)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> SetShape {
        self.shape
    }

    pub fn upper(&self) -> &Trapezoid {
        &self.upper
    }

    pub fn lower(&self) -> &Trapezoid {
        &self.lower
    }

    pub fn fou_scale(&self) -> f64 {
        self.fou_scale
    }

    fn raw_membership(&self, x: f64) -> (f64, f64) {
        (
            self.fou_scale * self.lower.eval(self.shape, x),
            self.upper.eval(self.shape, x),
        )
    }

    /// Lower and upper membership degrees of `x`.
    pub fn membership(&self, x: f64) -> Result<MembershipInterval> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "membership of non-finite value {x} in `{}`",
                self.name
            )));
        }
        Ok(self.membership_unchecked(x))
    }

    #[inline]
    pub(crate) fn membership_unchecked(&self, x: f64) -> MembershipInterval {
        let (lo, hi) = self.raw_membership(x);
        MembershipInterval::saturating(lo, hi)
    }

    /// Endpoints of the non-zero support of the upper function. For
    /// shoulders the open side is reported at the observed domain edge.
    pub fn support(&self) -> (f64, f64) {
        (self.upper.a, self.upper.d)
    }

    pub fn lower_support(&self) -> (f64, f64) {
        (self.lower.a, self.lower.d)
    }

    /// Midpoint of the upper plateau `[b, c]`.
    pub fn plateau_midpoint(&self) -> f64 {
        0.5 * (self.upper.b + self.upper.c)
    }

    /// Reference point used to order sets inside a partition.
    pub fn center(&self) -> f64 {
        self.plateau_midpoint()
    }
}

/// Parameters of data-driven partition construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionConfig {
    pub num_sets: usize,
    /// Half-width of each crossover ramp as a fraction of the gap between
    /// neighbouring centers.
    pub overlap: f64,
    /// Inward shift of the lower function's feet as a fraction of the
    /// upper support width.
    pub fou_width: f64,
    /// Height of the lower function.
    pub fou_scale: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            num_sets: 3,
            overlap: 0.4,
            fou_width: 0.15,
            fou_scale: 0.9,
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_sets < 2 {
            return Err(Error::Config(format!(
                "num_sets must be >= 2, got {}",
                self.num_sets
            )));
        }
        if !(self.overlap > 0.0 && self.overlap <= 0.5) {
            return Err(Error::Config(format!(
                "overlap must lie in (0, 0.5], got {}",
                self.overlap
            )));
        }
        if !(0.0..0.5).contains(&self.fou_width) {
            return Err(Error::Config(format!(
                "fou_width must lie in [0, 0.5), got {}",
                self.fou_width
            )));
        }
        if !(self.fou_scale > 0.0 && self.fou_scale <= 1.0) {
            return Err(Error::Config(format!(
                "fou_scale must lie in (0, 1], got {}",
                self.fou_scale
            )));
        }
        Ok(())
    }
}

/// Linguistic labels for a partition of `k` sets.
pub fn default_labels(k: usize) -> Vec<String> {
    let named: &[&str] = match k {
        2 => &["Low", "High"],
        3 => &["Low", "Medium", "High"],
        4 => &["Low", "MediumLow", "MediumHigh", "High"],
        5 => &["VeryLow", "Low", "Medium", "High", "VeryHigh"],
        7 => &[
            "ExtremelyLow",
            "VeryLow",
            "Low",
            "Medium",
            "High",
            "VeryHigh",
            "ExtremelyHigh",
        ],
        _ => &[],
    };
    if named.is_empty() {
        (1..=k).map(|i| format!("S{i}")).collect()
    } else {
        named.iter().map(|s| s.to_string()).collect()
    }
}

/// The ordered linguistic terms of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    variable: String,
    sets: Vec<It2Set>,
    domain: (f64, f64),
}

impl Partition {
    pub fn new(variable: impl Into<String>, sets: Vec<It2Set>, domain: (f64, f64)) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidInput("partition without sets".into()));
        }
        if sets.windows(2).any(|w| w[0].center() > w[1].center()) {
            return Err(Error::InvalidInput(
                "partition sets must be ordered by center".into(),
            ));
        }
        Ok(Partition {
            variable: variable.into(),
            sets,
            domain,
        })
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn sets(&self) -> &[It2Set] {
        &self.sets
    }

    pub fn set(&self, index: usize) -> &It2Set {
        &self.sets[index]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Index of the set with the largest upper membership at `x`; ties go
    /// to the leftmost set.
    pub fn best_set(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for (i, set) in self.sets.iter().enumerate() {
            let m = set.membership_unchecked(x).upper();
            if m > best_value {
                best = i;
                best_value = m;
            }
        }
        best
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.sets.iter().position(|s| s.name() == name)
    }
}

/// Linear-interpolation quantile of sorted data (`q` in [0, 1]).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn partition_centers(sorted: &[f64], k: usize) -> Vec<f64> {
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let range = max - min;
    let quantiles: Vec<f64> = (0..k)
        .map(|i| quantile_sorted(sorted, i as f64 / (k - 1) as f64))
        .collect();
    let uniform: Vec<f64> = (0..k)
        .map(|i| min + range * i as f64 / (k - 1) as f64)
        .collect();
    // Point masses (e.g. a column that is mostly zero) collapse quantile
    // centers; pull them towards uniform spacing until gaps reopen.
    for weight in [1.0, 0.5, 0.0] {
        let centers: Vec<f64> = quantiles
            .iter()
            .zip(&uniform)
            .map(|(q, u)| weight * q + (1.0 - weight) * u)
            .collect();
        if centers.windows(2).all(|w| w[1] - w[0] >= 0.05 * range) {
            return centers;
        }
    }
    uniform
}

/// Builds a partition of `num_sets` interval type-2 sets whose centers sit
/// at evenly spaced sample quantiles. The outermost sets are shoulders.
pub fn build_partition(variable: &str, values: &[f64], config: &PartitionConfig) -> Result<Partition> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::InvalidInput(format!(
            "cannot partition `{variable}`: no samples"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "cannot partition `{variable}`: non-finite sample"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if max == min {
        return Err(Error::DegeneratePartition {
            variable: variable.to_string(),
            value: min,
        });
    }

    let k = config.num_sets;
    let centers = partition_centers(&sorted, k);
    let crossovers: Vec<(f64, f64)> = centers
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let half = config.overlap * (w[1] - w[0]);
            (mid - half, mid + half)
        })
        .collect();

    let labels = default_labels(k);
    let mut sets = Vec::with_capacity(k);
    for (i, label) in labels.into_iter().enumerate() {
        let (a, b) = if i == 0 { (min, min) } else { crossovers[i - 1] };
        let (c, d) = if i == k - 1 { (max, max) } else { crossovers[i] };
        // At full overlap the plateau shrinks to a point; keep rounding
        // from inverting it.
        let c = c.max(b);
        let d = d.max(c);
        let shape = match i {
            0 => SetShape::LeftShoulder,
            i if i == k - 1 => SetShape::RightShoulder,
            _ => SetShape::Trapezoid,
        };
        let upper = Trapezoid::new(a, b, c, d)?;
        let inset = config.fou_width * (d - a);
        let la = if shape == SetShape::LeftShoulder {
            a
        } else {
            (a + inset).min(b)
        };
        let ld = if shape == SetShape::RightShoulder {
            d
        } else {
            (d - inset).max(c)
        };
        let lower = Trapezoid::new(la, b, c, ld)?;
        sets.push(It2Set::new(label, shape, upper, lower, config.fou_scale)?);
    }
    Partition::new(variable, sets, (min, max))
}

/// Interval firing strength of an antecedent: the bound-wise t-norm of the
/// clause memberships. Each clause pairs a feature index into `x` with the
/// set that feature must belong to.
pub fn firing_strength(
    antecedent: &[(usize, &It2Set)],
    x: &[f64],
    tnorm: TNorm,
) -> Result<MembershipInterval> {
    if antecedent.is_empty() {
        return Err(Error::InvalidRule("empty antecedent".into()));
    }
    let mut acc = MembershipInterval::ONE;
    for &(feature, set) in antecedent {
        let value = *x.get(feature).ok_or_else(|| {
            Error::InvalidInput(format!(
                "antecedent references feature {feature} but input has {} values",
                x.len()
            ))
        })?;
        acc = tnorm.combine(acc, set.membership(value)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_trapezoid() -> It2Set {
        It2Set::new(
            "Medium",
            SetShape::Trapezoid,
            Trapezoid::new(0.0, 1.0, 2.0, 3.0).unwrap(),
            Trapezoid::new(0.25, 1.0, 2.0, 2.75).unwrap(),
            0.9,
        )
        .unwrap()
    }

    fn close(m: MembershipInterval, lo: f64, hi: f64) -> bool {
        (m.lower() - lo).abs() < 1e-12 && (m.upper() - hi).abs() < 1e-12
    }

    #[test]
    fn trapezoid_membership_examples() {
        let set = sample_trapezoid();
        assert!(close(set.membership(1.5).unwrap(), 0.9, 1.0));
        assert!(close(set.membership(0.5).unwrap(), 0.3, 0.5));
        assert!(close(set.membership(-1.0).unwrap(), 0.0, 0.0));
        assert!(close(set.membership(3.0).unwrap(), 0.0, 0.0));
    }

    #[test]
    fn non_finite_membership_is_rejected() {
        let set = sample_trapezoid();
        assert!(matches!(
            set.membership(f64::NAN),
            Err(Error::InvalidInput(_))
        ));
        assert!(set.membership(f64::INFINITY).is_err());
    }

    #[test]
    fn left_shoulder_plateau_extends_left() {
        let set = It2Set::new(
            "Low",
            SetShape::LeftShoulder,
            Trapezoid::new(0.0, 0.0, 2.0, 3.0).unwrap(),
            Trapezoid::new(0.0, 0.0, 2.0, 2.5).unwrap(),
            0.9,
        )
        .unwrap();
        assert_eq!(set.membership(0.0).unwrap().upper(), 1.0);
        assert_eq!(set.membership(-1e6).unwrap().upper(), 1.0);
        assert!(close(set.membership(2.5).unwrap(), 0.0, 0.5));
        assert_eq!(set.support(), (0.0, 3.0));
    }

    #[test]
    fn rejects_lower_above_upper() {
        let err = It2Set::new(
            "bad",
            SetShape::Trapezoid,
            Trapezoid::new(0.0, 1.0, 2.0, 3.0).unwrap(),
            Trapezoid::new(0.0, 0.2, 2.0, 3.0).unwrap(),
            1.0,
        );
        assert!(err.is_err());
        assert!(Trapezoid::new(0.0, 2.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn firing_strength_tnorms() {
        let m1 = MembershipInterval::new(0.4, 0.6).unwrap();
        let m2 = MembershipInterval::new(0.5, 0.7).unwrap();
        let min = TNorm::Minimum.combine(m1, m2);
        assert!(close(min, 0.4, 0.6));
        let prod = TNorm::Product.combine(m1, m2);
        assert!(close(prod, 0.20, 0.42));
        let zero = TNorm::Product.combine(m1, MembershipInterval::ZERO);
        assert!(close(zero, 0.0, 0.0));
        assert!(close(TNorm::Minimum.combine(m2, MembershipInterval::ZERO), 0.0, 0.0));
    }

    #[test]
    fn firing_strength_over_sets() {
        let set = sample_trapezoid();
        let f = firing_strength(&[(0, &set), (1, &set)], &[1.5, 0.5], TNorm::Minimum).unwrap();
        assert!(close(f, 0.3, 0.5));
        let f = firing_strength(&[(0, &set), (1, &set)], &[1.5, 0.5], TNorm::Product).unwrap();
        assert!(close(f, 0.27, 0.5));
        assert!(matches!(
            firing_strength(&[], &[1.0], TNorm::Minimum),
            Err(Error::InvalidRule(_))
        ));
        assert!(firing_strength(&[(3, &set)], &[1.0], TNorm::Minimum).is_err());
    }

    #[test]
    fn uniform_partition_covers_domain() {
        let values: Vec<f64> = (0..=100).map(f64::from).collect();
        let p = build_partition("x", &values, &PartitionConfig::default()).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.set(0).shape(), SetShape::LeftShoulder);
        assert_eq!(p.set(1).shape(), SetShape::Trapezoid);
        assert_eq!(p.set(2).shape(), SetShape::RightShoulder);
        assert_eq!(p.set(0).support().0, 0.0);
        assert_eq!(p.set(2).support().1, 100.0);
        for w in p.sets().windows(2) {
            assert!(w[0].support().1 > w[1].support().0, "adjacent sets overlap");
        }
        for i in 0..=1000 {
            let x = i as f64 / 10.0;
            assert!(p.sets().iter().any(|s| s.membership(x).unwrap().upper() > 0.0));
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let err = build_partition("x", &[4.0, 4.0, 4.0], &PartitionConfig::default());
        assert!(matches!(err, Err(Error::DegeneratePartition { .. })));
        assert!(build_partition("x", &[], &PartitionConfig::default()).is_err());
        assert!(build_partition("x", &[1.0, f64::NAN], &PartitionConfig::default()).is_err());
    }

    #[test]
    fn point_mass_columns_still_partition() {
        // Half zeros, like the slag and fly-ash columns of the concrete data.
        let mut values = vec![0.0; 60];
        values.extend((1..=40).map(|i| i as f64 * 5.0));
        let p = build_partition("x", &values, &PartitionConfig::default()).unwrap();
        let centers: Vec<f64> = p.sets().iter().map(|s| s.center()).collect();
        assert!(centers.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn full_overlap_builds_point_plateaus() {
        let cfg = PartitionConfig { overlap: 0.5, ..PartitionConfig::default() };
        for values in [vec![108.3, 200.0, 275.05, 350.0, 540.0], vec![2.33, 2.33, 2.33, 10.0, 34.5, 80.0]] {
            let p = build_partition("x", &values, &cfg).unwrap();
            assert_eq!(p.len(), 3);
        }
    }

    #[test]
    fn partition_serde_round_trip() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64).sqrt()).collect();
        let p = build_partition("x", &values, &PartitionConfig::default()).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: Partition = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        let tampered = text.replace("\"fou_scale\":0.9", "\"fou_scale\":1.5");
        assert!(serde_json::from_str::<Partition>(&tampered).is_err());
    }

    fn arb_partition() -> impl Strategy<Value = Partition> {
        (
            prop::collection::vec(-1e3f64..1e3, 2..60),
            2usize..7,
            prop_oneof![0.05f64..0.5, Just(0.5)],
            0.0f64..0.45,
            0.1f64..=1.0,
        )
            .prop_filter_map("non-constant", |(values, k, overlap, fou_width, fou_scale)| {
                let cfg = PartitionConfig {
                    num_sets: k,
                    overlap,
                    fou_width,
                    fou_scale,
                };
                match build_partition("x", &values, &cfg) {
                    Ok(p) => Some(p),
                    Err(Error::DegeneratePartition { .. }) => None,
                    Err(e) => panic!("construction failed: {e}"),
                }
            })
    }

    proptest! {
        #[test]
        fn membership_interval_invariant(p in arb_partition(), t in -0.2f64..1.2) {
            let (lo, hi) = p.domain();
            let x = lo + t * (hi - lo);
            for set in p.sets() {
                let m = set.membership(x).unwrap();
                prop_assert!(0.0 <= m.lower() && m.lower() <= m.upper() && m.upper() <= 1.0);
            }
        }

        #[test]
        fn partition_full_coverage(p in arb_partition(), t in 0.0f64..=1.0) {
            let (lo, hi) = p.domain();
            let x = lo + t * (hi - lo);
            let best = p.sets().iter().map(|s| s.membership(x).unwrap().upper()).fold(0.0, f64::max);
            prop_assert!(best > 0.0);
        }

        #[test]
        fn shoulders_are_monotone(p in arb_partition(), t1 in -0.2f64..1.2, t2 in -0.2f64..1.2) {
            let (lo, hi) = p.domain();
            let (x1, x2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let (x1, x2) = (lo + x1 * (hi - lo), lo + x2 * (hi - lo));
            let left = &p.sets()[0];
            let right = &p.sets()[p.len() - 1];
            prop_assert!(left.membership(x1).unwrap().dominates(&left.membership(x2).unwrap()));
            prop_assert!(right.membership(x2).unwrap().dominates(&right.membership(x1).unwrap()));
        }

        #[test]
        fn lower_support_inside_upper(p in arb_partition()) {
            for set in p.sets() {
                let (ul, uh) = set.support();
                let (ll, lh) = set.lower_support();
                prop_assert!(ul <= ll && lh <= uh);
            }
        }

        #[test]
        fn firing_strength_is_monotone(
            base in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..5),
            bumps in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 5),
        ) {
            let weak: Vec<MembershipInterval> = base
                .iter()
                .map(|&(a, b)| MembershipInterval::new(a.min(b), a.max(b)).unwrap())
                .collect();
            let strong: Vec<MembershipInterval> = weak
                .iter()
                .zip(&bumps)
                .map(|(m, &(u, v))| {
                    let hi = m.upper() + (1.0 - m.upper()) * v;
                    let lo = (m.lower() + (hi - m.lower()) * u).min(hi);
                    MembershipInterval::new(lo, hi).unwrap()
                })
                .collect();
            for tnorm in [TNorm::Minimum, TNorm::Product] {
                let fw = weak.iter().fold(MembershipInterval::ONE, |a, &m| tnorm.combine(a, m));
                let fs = strong.iter().fold(MembershipInterval::ONE, |a, &m| tnorm.combine(a, m));
                prop_assert!(fs.dominates(&fw));
            }
        }
    }
}
