//! Polynomial rule consequents: monomial expansion, ridge least-squares
//! fitting on a rule's firing rows, and conversion to raw-unit terms.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Exponent vectors of every monomial of total degree `<= degree` over
/// `num_vars` variables, in graded lexicographic order: by total degree,
/// then lexicographically descending (`1, x1, x2, x1^2, x1*x2, x2^2`).
pub fn monomial_exponents(num_vars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn fill(prefix: &mut Vec<u32>, remaining_vars: usize, remaining_deg: u32, out: &mut Vec<Vec<u32>>) {
        if remaining_vars == 1 {
            prefix.push(remaining_deg);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining_deg).rev() {
            prefix.push(e);
            fill(prefix, remaining_vars - 1, remaining_deg - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if num_vars == 0 {
        out.push(Vec::new());
        return out;
    }
    for d in 0..=degree {
        fill(&mut Vec::with_capacity(num_vars), num_vars, d, &mut out);
    }
    out
}

/// `C(num_vars + degree, degree)`.
pub fn monomial_count(num_vars: usize, degree: u32) -> usize {
    let (n, k) = (num_vars as u64 + degree as u64, degree as u64);
    let mut c = 1u64;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c as usize
}

fn monomials_into(values: &[f64], exponents: &[Vec<u32>], degree: u32, out: &mut Vec<f64>) {
    // powers[v][e] = values[v]^e
    let d = degree as usize + 1;
    let mut powers = vec![1.0; values.len() * d];
    for (v, &x) in values.iter().enumerate() {
        for e in 1..d {
            powers[v * d + e] = powers[v * d + e - 1] * x;
        }
    }
    out.clear();
    out.extend(exponents.iter().map(|exp| {
        exp.iter()
            .enumerate()
            .map(|(v, &e)| powers[v * d + e as usize])
            .product::<f64>()
    }));
}

/// All monomials of total degree `<= degree` of the selected features of
/// `x`, including the constant 1, in graded lexicographic order.
pub fn expand_features(x: &[f64], variables: &[usize], degree: u32) -> Result<Vec<f64>> {
    let values = variables
        .iter()
        .map(|&v| {
            x.get(v).copied().ok_or_else(|| {
                Error::InvalidInput(format!("feature {v} missing from input of length {}", x.len()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exps = monomial_exponents(variables.len(), degree);
    let mut out = Vec::with_capacity(exps.len());
    monomials_into(&values, &exps, degree, &mut out);
    Ok(out)
}

/// One raw-unit term: `coefficient * prod(x_v ^ exponents[v])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

/// A polynomial over a subset of features, stored in standardized
/// coordinates `z_v = (x_v - center_v) / scale_v`. Raw-unit coefficients
/// are available through [`Polynomial::raw_terms`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    degree: u32,
    variables: Vec<usize>,
    exponents: Vec<Vec<u32>>,
    coefficients: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Polynomial {
    pub fn constant(variables: Vec<usize>, value: f64) -> Self {
        let n = variables.len();
        Polynomial {
            degree: 0,
            variables,
            exponents: vec![vec![0; n]],
            coefficients: vec![value],
            center: vec![0.0; n],
            scale: vec![1.0; n],
        }
    }

    /// Builds a polynomial from raw-unit terms; exponents left out get a
    /// zero coefficient.
    pub fn from_raw_terms(variables: Vec<usize>, degree: u32, terms: &[Term]) -> Result<Self> {
        let n = variables.len();
        let exponents = monomial_exponents(n, degree);
        let mut coefficients = vec![0.0; exponents.len()];
        let mut seen = vec![false; exponents.len()];
        for t in terms {
            let pos = exponents.iter().position(|e| *e == t.exponents).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "term exponents {:?} not valid for {n} variables at degree {degree}",
                    t.exponents
                ))
            })?;
            if seen[pos] {
                return Err(Error::InvalidInput(format!(
                    "duplicate term exponents {:?}",
                    t.exponents
                )));
            }
            seen[pos] = true;
            coefficients[pos] = t.coefficient;
        }
        Ok(Polynomial {
            degree,
            variables,
            exponents,
            coefficients,
            center: vec![0.0; n],
            scale: vec![1.0; n],
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn num_terms(&self) -> usize {
        self.coefficients.len()
    }

    /// Evaluates at a full feature vector.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.degree as usize + 1;
        let n = self.variables.len();
        let mut powers = [1.0f64; 64];
        let mut heap;
        let powers: &mut [f64] = if n * d <= powers.len() {
            &mut powers[..n * d]
        } else {
            heap = vec![1.0; n * d];
            &mut heap
        };
        for (i, &v) in self.variables.iter().enumerate() {
            let z = (x[v] - self.center[i]) / self.scale[i];
            for e in 1..d {
                powers[i * d + e] = powers[i * d + e - 1] * z;
            }
        }
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(exp, c)| {
                c * exp
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| powers[i * d + e as usize])
                    .product::<f64>()
            })
            .sum()
    }

    /// Coefficients with respect to raw (unstandardized) monomials, in
    /// graded lexicographic order, including zero terms.
    pub fn raw_terms(&self) -> Vec<Term> {
        let n = self.variables.len();
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exp, &coef) in self.exponents.iter().zip(&self.coefficients) {
            if coef == 0.0 {
                continue;
            }
            // prod_v ((x_v - c_v) / s_v)^e_v expanded binomially per variable.
            let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(n), coef)];
            for (v, &e) in exp.iter().enumerate() {
                let (c, s) = (self.center[v], self.scale[v]);
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (prefix, w) in &partial {
                    for k in 0..=e {
                        let term = w * binomial(e, k) * (-c).powi((e - k) as i32) / s.powi(e as i32);
                        let mut p = prefix.clone();
                        p.push(k);
                        next.push((p, term));
                    }
                }
                partial = next;
            }
            for (p, w) in partial {
                *acc.entry(p).or_insert(0.0) += w;
            }
        }
        monomial_exponents(n, self.degree)
            .into_iter()
            .map(|e| {
                let coefficient = acc.get(&e).copied().unwrap_or(0.0);
                Term {
                    exponents: e,
                    coefficient,
                }
            })
            .collect()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Least-squares settings for consequent fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// L2 penalty on non-constant standardized coefficients.
    pub ridge: f64,
    /// Weight each row by its firing-strength midpoint.
    pub weighted: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ridge: 1e-6,
            weighted: false,
        }
    }
}

/// Fits the consequent polynomial over `variables` on the given rows.
///
/// `firing` holds each row's firing-strength midpoint; it weights the
/// constant fallback and, when `config.weighted` is set, the fit itself.
/// With fewer rows than monomials the degree drops to 1, and below that
/// to a firing-weighted mean of the targets.
pub fn fit_consequent(
    data: &Dataset,
    rows: &[usize],
    firing: &[f64],
    variables: &[usize],
    degree: u32,
    config: &FitConfig,
) -> Result<Polynomial> {
    if rows.is_empty() {
        return Err(Error::Unfittable("no rows with positive firing strength".into()));
    }
    if rows.len() != firing.len() {
        return Err(Error::InvalidInput("rows and firing weights differ in length".into()));
    }
    if variables.is_empty() {
        return Err(Error::InvalidRule("consequent without variables".into()));
    }
    if let Some(&v) = variables.iter().find(|&&v| v >= data.num_features()) {
        return Err(Error::InvalidInput(format!("feature {v} out of range")));
    }
    if config.ridge < 0.0 || !config.ridge.is_finite() {
        return Err(Error::Config(format!("ridge must be >= 0, got {}", config.ridge)));
    }
    let y: Vec<f64> = rows.iter().map(|&r| data.targets()[r]).collect();
    let (ymin, ymax) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if ymax - ymin <= 1e-12 * ymax.abs().max(1.0) {
        return Ok(Polynomial::constant(variables.to_vec(), y[0]));
    }

    let nv = variables.len();
    let mut degree = degree.max(1);
    if rows.len() < monomial_count(nv, degree) {
        degree = 1;
    }
    if rows.len() < monomial_count(nv, degree) {
        let wsum: f64 = firing.iter().sum();
        let mean = if wsum > 0.0 {
            y.iter().zip(firing).map(|(v, w)| v * w).sum::<f64>() / wsum
        } else {
            y.iter().sum::<f64>() / y.len() as f64
        };
        return Ok(Polynomial::constant(variables.to_vec(), mean));
    }

    let n = rows.len() as f64;
    let mut center = vec![0.0; nv];
    let mut scale = vec![1.0; nv];
    for (i, &v) in variables.iter().enumerate() {
        let mean = rows.iter().map(|&r| data.row(r)[v]).sum::<f64>() / n;
        let var = rows.iter().map(|&r| (data.row(r)[v] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        center[i] = mean;
        scale[i] = if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 };
    }

    let exponents = monomial_exponents(nv, degree);
    let m = exponents.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut z = vec![0.0; nv];
    let mut phi = Vec::with_capacity(m);
    for (k, &r) in rows.iter().enumerate() {
        let row = data.row(r);
        for (i, &v) in variables.iter().enumerate() {
            z[i] = (row[v] - center[i]) / scale[i];
        }
        monomials_into(&z, &exponents, degree, &mut phi);
        let w = if config.weighted { firing[k] } else { 1.0 };
        for a in 0..m {
            let wa = w * phi[a];
            rhs[a] += wa * y[k];
            for b in a..m {
                gram[(a, b)] += wa * phi[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        if a > 0 {
            gram[(a, a)] += config.ridge;
        }
    }

    // Minimum-norm solution through the eigenpairs of the Gram matrix,
    // dropping directions below a relative cutoff.
    let eig = gram.symmetric_eigen();
    let cutoff = eig.eigenvalues.amax() * 1e-12;
    let mut coef = DVector::<f64>::zeros(m);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(i);
            coef += v * (v.dot(&rhs) / lambda);
        }
    }
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::Unfittable("non-finite coefficients".into()));
    }
    Ok(Polynomial {
        degree,
        variables: variables.to_vec(),
        exponents,
        coefficients: coef.iter().copied().collect(),
        center,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
        let names = (0..rows[0].len()).map(|i| format!("x{i}")).collect();
        Dataset::from_rows("t", names, "y", rows, y).unwrap()
    }

    /// Independent oracle: raw-unit normal equations solved by Gaussian
    /// elimination with partial pivoting.
    fn normal_equations_oracle(x: &[Vec<f64>], y: &[f64], degree: u32) -> Vec<f64> {
        let exps = monomial_exponents(x[0].len(), degree);
        let m = exps.len();
        let phi: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                exps.iter()
                    .map(|e| e.iter().zip(r).map(|(&k, v)| v.powi(k as i32)).product())
                    .collect()
            })
            .collect();
        let mut a = vec![vec![0.0; m + 1]; m];
        for (p, row) in phi.iter().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    a[i][j] += row[i] * row[j];
                }
                a[i][m] += row[i] * y[p];
            }
        }
        for col in 0..m {
            let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            for r in 0..m {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..m).map(|i| a[i][m] / a[i][i]).collect()
    }

    #[test]
    fn monomial_order_and_counts() {
        assert_eq!(
            monomial_exponents(2, 2),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(monomial_exponents(2, 3).len(), 10);
        assert_eq!(monomial_exponents(1, 1), vec![vec![0], vec![1]]);
        for v in 1..5 {
            for n in 0..4 {
                assert_eq!(monomial_exponents(v, n).len(), monomial_count(v, n));
            }
        }
    }

    #[test]
    fn expand_features_values() {
        let m = expand_features(&[9.0, 2.0, 3.0], &[1, 2], 2).unwrap();
        assert_eq!(m, vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
        assert_eq!(expand_features(&[5.0], &[0], 1).unwrap(), vec![1.0, 5.0]);
        assert_eq!(expand_features(&[1.0, 2.0], &[0, 1], 3).unwrap().len(), 10);
        assert!(expand_features(&[1.0], &[3], 1).is_err());
    }

    #[test]
    fn affine_fit_is_exact() {
        let xs: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64 / 10.0]).collect();
        let y = xs.iter().map(|r| 2.0 + 3.0 * r[0]).collect();
        let ds = dataset(xs, y);
        let rows: Vec<usize> = (0..11).collect();
        let cfg = FitConfig { ridge: 0.0, weighted: false };
        let p = fit_consequent(&ds, &rows, &[1.0; 11], &[0], 1, &cfg).unwrap();
        let t = p.raw_terms();
        assert!((t[0].coefficient - 2.0).abs() < 1e-9);
        assert!((t[1].coefficient - 3.0).abs() < 1e-9);
    }

    #[test]
    fn cross_term_fit_matches_oracle() {
        let mut xs = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                xs.push(vec![i as f64 / 5.0, 0.5 + j as f64 / 4.0]);
            }
        }
        let y: Vec<f64> = xs.iter().map(|r| r[0] * r[1]).collect();
        let oracle = normal_equations_oracle(&xs, &y, 2);
        let ds = dataset(xs, y);
        let rows: Vec<usize> = (0..ds.len()).collect();
        let cfg = FitConfig { ridge: 0.0, weighted: false };
        let p = fit_consequent(&ds, &rows, &vec![1.0; rows.len()], &[0, 1], 2, &cfg).unwrap();
        let fitted: Vec<f64> = p.raw_terms().iter().map(|t| t.coefficient).collect();
        // 1, x1, x2, x1^2, x1*x2, x2^2
        assert!((fitted[4] - 1.0).abs() < 1e-9);
        for (i, c) in fitted.iter().enumerate() {
            if i != 4 {
                assert!(c.abs() < 1e-9, "coefficient {i} = {c}");
            }
            assert!((c - oracle[i]).abs() <= 1e-8 * oracle[i].abs().max(1.0));
        }
    }

    #[test]
    fn underdetermined_fits_fall_back() {
        let xs = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
        let ds = dataset(xs, vec![1.0, 2.0, 4.0]);
        let cfg = FitConfig::default();
        // Six degree-2 monomials but three rows: degree 1 has exactly three.
        let p = fit_consequent(&ds, &[0, 1, 2], &[1.0; 3], &[0, 1], 2, &cfg).unwrap();
        assert_eq!(p.degree(), 1);
        // Two rows cannot determine three degree-1 monomials.
        let p = fit_consequent(&ds, &[0, 2], &[0.25, 0.75], &[0, 1], 2, &cfg).unwrap();
        assert_eq!(p.degree(), 0);
        assert!((p.eval(&[7.0, 7.0]) - (0.25 * 1.0 + 0.75 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_targets_give_constant() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ds = dataset(xs, vec![5.5; 10]);
        let rows: Vec<usize> = (0..10).collect();
        let p = fit_consequent(&ds, &rows, &[1.0; 10], &[0], 3, &FitConfig::default()).unwrap();
        assert_eq!(p.degree(), 0);
        assert_eq!(p.eval(&[100.0]), 5.5);
    }

    #[test]
    fn empty_rows_are_unfittable() {
        let ds = dataset(vec![vec![1.0]], vec![1.0]);
        assert!(matches!(
            fit_consequent(&ds, &[], &[], &[0], 2, &FitConfig::default()),
            Err(Error::Unfittable(_))
        ));
    }

    #[test]
    fn raw_terms_round_trip_through_from_raw_terms() {
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![100.0 + 11.0 * i as f64, 300.0 - 7.0 * (i % 9) as f64])
            .collect();
        let y: Vec<f64> = xs.iter().map(|r| 0.01 * r[0] * r[1] - 0.3 * r[1] + 4.0).collect();
        let ds = dataset(xs.clone(), y);
        let rows: Vec<usize> = (0..40).collect();
        let p = fit_consequent(&ds, &rows, &[1.0; 40], &[0, 1], 3, &FitConfig::default()).unwrap();
        let raw = Polynomial::from_raw_terms(vec![0, 1], 3, &p.raw_terms()).unwrap();
        for r in &xs {
            let (a, b) = (p.eval(r), raw.eval(r));
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn from_raw_terms_rejects_bad_terms() {
        let dup = [
            Term { exponents: vec![1], coefficient: 1.0 },
            Term { exponents: vec![1], coefficient: 2.0 },
        ];
        assert!(Polynomial::from_raw_terms(vec![0], 2, &dup).is_err());
        let bad = [Term { exponents: vec![3], coefficient: 1.0 }];
        assert!(Polynomial::from_raw_terms(vec![0], 2, &bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn affine_data_reproduced(
            w0 in -10.0f64..10.0,
            w1 in -10.0f64..10.0,
            w2 in -10.0f64..10.0,
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..30),
        ) {
            let xs: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            // Skip near-collinear designs; exactness needs full rank.
            let oracle_ok = {
                let (mx, my) = (xs.iter().map(|r| r[0]).sum::<f64>() / xs.len() as f64,
                                xs.iter().map(|r| r[1]).sum::<f64>() / xs.len() as f64);
                let (sxx, syy, sxy) = xs.iter().fold((0.0, 0.0, 0.0), |(a, b, c), r| {
                    (a + (r[0] - mx).powi(2), b + (r[1] - my).powi(2), c + (r[0] - mx) * (r[1] - my))
                });
                sxx * syy - sxy * sxy > 1e-3 * (sxx * syy).max(1e-12) && sxx > 1e-6 && syy > 1e-6
            };
            prop_assume!(oracle_ok);
            let y: Vec<f64> = xs.iter().map(|r| w0 + w1 * r[0] + w2 * r[1]).collect();
            let n = xs.len();
            let ds = dataset(xs, y);
            let rows: Vec<usize> = (0..n).collect();
            let cfg = FitConfig { ridge: 0.0, weighted: false };
            let p = fit_consequent(&ds, &rows, &vec![1.0; n], &[0, 1], 1, &cfg).unwrap();
            let t = p.raw_terms();
            for (got, want) in t.iter().map(|t| t.coefficient).zip([w0, w1, w2]) {
                prop_assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{} vs {}", got, want);
            }
        }
    }
}
