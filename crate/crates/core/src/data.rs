//! Dataset ingestion (KEEL `.dat` and CSV), holdout and k-fold splits, and
//! content fingerprints.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense numeric table: named features in row-major order plus one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    target_name: String,
    /// Row-major, `rows * feature_names.len()` values.
    x: Vec<f64>,
    y: Vec<f64>,
    /// Declared `[min, max]` per feature, when the source carried one.
    #[serde(default)]
    feature_ranges: Vec<Option<(f64, f64)>>,
    #[serde(default)]
    target_range: Option<(f64, f64)>,
}

impl Dataset {
    pub fn from_rows(
        name: impl Into<String>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        let width = feature_names.len();
        if rows.len() != targets.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let mut x = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::Data(format!(
                    "row {i} has {} values, expected {width}",
                    row.len()
                )));
            }
            x.extend(row);
        }
        let ds = Dataset {
            name: name.into(),
            feature_ranges: vec![None; width],
            feature_names,
            target_name: target_name.into(),
            x,
            y: targets,
            target_range: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.y.is_empty() {
            return Err(Error::Data(format!("dataset `{}` has no rows", self.name)));
        }
        if self.feature_names.is_empty() {
            return Err(Error::Data(format!(
                "dataset `{}` has no features",
                self.name
            )));
        }
        if self.x.len() != self.y.len() * self.feature_names.len() {
            return Err(Error::Data("feature matrix shape mismatch".into()));
        }
        if let Some(i) = self.x.iter().chain(&self.y).position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "dataset `{}` contains a non-finite value (flat index {i})",
                self.name
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.feature_names.len();
        &self.x[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.feature_names.len())
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn feature_ranges(&self) -> &[Option<(f64, f64)>] {
        &self.feature_ranges
    }

    pub fn target_range(&self) -> Option<(f64, f64)> {
        self.target_range
    }

    pub fn target_mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.y.len() as f64
    }

    /// Population standard deviation of every feature.
    pub fn feature_std(&self) -> Vec<f64> {
        (0..self.num_features())
            .map(|j| {
                let col = self.column(j);
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt()
            })
            .collect()
    }

    /// Rows picked by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut x = Vec::with_capacity(indices.len() * self.num_features());
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Data(format!(
                    "row index {i} out of range for {} rows",
                    self.len()
                )));
            }
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        let ds = Dataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            x,
            y,
            feature_ranges: self.feature_ranges.clone(),
            target_range: self.target_range,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Appends the rows of `other`, which must share this dataset's schema.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.feature_names != other.feature_names || self.target_name != other.target_name {
            return Err(Error::Data("cannot concatenate datasets with different schemas".into()));
        }
        let mut out = self.clone();
        out.x.extend_from_slice(&other.x);
        out.y.extend_from_slice(&other.y);
        Ok(out)
    }

    /// SHA-256 over the schema and the little-endian bit patterns of every
    /// value; identical content hashes identically on every platform.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for name in &self.feature_names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        h.update(self.target_name.as_bytes());
        h.update([0u8]);
        h.update((self.len() as u64).to_le_bytes());
        for v in self.x.iter().chain(&self.y) {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Writes the internal tabular format: a CSV with a header, features
    /// first and the target last. Values are written in shortest
    /// round-trip form, so reloading reproduces them exactly.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let header: Vec<&str> = self
            .feature_names
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(self.target_name.as_str()))
            .collect();
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for (row, y) in self.rows().zip(&self.y) {
            let rec: Vec<String> = row.iter().chain(std::iter::once(y)).map(|v| v.to_string()).collect();
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Loads a KEEL `.dat` file. The declared `@outputs` attribute becomes the
/// target; every other declared attribute is a feature.
pub fn load_keel(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keel(&text, path)
}

struct KeelAttribute {
    name: String,
    range: Option<(f64, f64)>,
}

fn parse_name_list(rest: &str) -> Vec<String> {
    rest.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_attribute(rest: &str, path: &Path, line: usize) -> Result<KeelAttribute> {
    let perr = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let rest = rest.trim();
    let (name, tail) = rest
        .split_once(char::is_whitespace)
        .ok_or_else(|| perr(format!("malformed attribute declaration `{rest}`")))?;
    let tail = tail.trim();
    if tail.starts_with('{') {
        return Err(perr(format!("nominal attribute `{name}` is not supported")));
    }
    let (kind, range_text) = match tail.find('[') {
        Some(i) => (tail[..i].trim(), Some(&tail[i..])),
        None => (tail, None),
    };
    let kind = kind.to_ascii_lowercase();
    if kind != "real" && kind != "integer" && kind != "numeric" {
        return Err(perr(format!("attribute `{name}` has unsupported type `{kind}`")));
    }
    let range = match range_text {
        Some(r) => {
            let inner = r.trim().trim_start_matches('[').trim_end_matches(']');
            let bounds: Vec<&str> = inner.split(',').map(str::trim).collect();
            match bounds.as_slice() {
                [lo, hi] => {
                    let lo = lo.parse::<f64>().map_err(|_| perr(format!("bad range bound `{lo}`")))?;
                    let hi = hi.parse::<f64>().map_err(|_| perr(format!("bad range bound `{hi}`")))?;
                    Some((lo, hi))
                }
                _ => return Err(perr(format!("bad range `{r}`"))),
            }
        }
        None => None,
    };
    Ok(KeelAttribute {
        name: name.to_string(),
        range,
    })
}

fn is_missing_token(cell: &str) -> bool {
    matches!(cell, "?" | "<null>" | "null" | "NA" | "nan" | "NaN" | "")
}

/// Parses KEEL text; `path` is only used in error messages.
pub fn parse_keel(text: &str, path: &Path) -> Result<Dataset> {
    let mut relation = None;
    let mut attributes: Vec<KeelAttribute> = Vec::new();
    let mut inputs: Option<Vec<String>> = None;
    let mut outputs: Option<Vec<String>> = None;
    let mut data_line = None;

    let mut lines = text.lines().enumerate();
    for (i, raw) in lines.by_ref() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !line.starts_with('@') {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: "data row before @data marker".into(),
            });
        }
        let (keyword, rest) = line
            .split_once(char::is_whitespace)
            .unwrap_or((line, ""));
        match keyword.to_ascii_lowercase().as_str() {
            "@relation" => relation = Some(rest.trim().to_string()),
            "@attribute" => attributes.push(parse_attribute(rest, path, lineno)?),
            "@inputs" | "@input" => inputs = Some(parse_name_list(rest)),
            "@outputs" | "@output" => outputs = Some(parse_name_list(rest)),
            "@data" => {
                data_line = Some(lineno);
                break;
            }
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("unknown header keyword `{other}`"),
                })
            }
        }
    }

    let Some(data_line) = data_line else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: text.lines().count(),
            message: "missing @data marker".into(),
        });
    };
    let header_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: data_line,
        message,
    };
    let outputs = outputs.ok_or_else(|| header_err("no @outputs declaration".into()))?;
    let [output] = outputs.as_slice() else {
        return Err(header_err(format!(
            "expected exactly one output attribute, found {}",
            outputs.len()
        )));
    };
    let target_idx = attributes
        .iter()
        .position(|a| &a.name == output)
        .ok_or_else(|| header_err(format!("output `{output}` is not a declared attribute")))?;
    let input_idx: Vec<usize> = match inputs {
        Some(names) => names
            .iter()
            .map(|n| {
                attributes
                    .iter()
                    .position(|a| &a.name == n)
                    .ok_or_else(|| header_err(format!("input `{n}` is not a declared attribute")))
            })
            .collect::<Result<_>>()?,
        None => (0..attributes.len()).filter(|&i| i != target_idx).collect(),
    };

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != attributes.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!(
                    "expected {} values, found {}",
                    attributes.len(),
                    cells.len()
                ),
            });
        }
        let mut values = Vec::with_capacity(cells.len());
        for (col, cell) in cells.iter().enumerate() {
            let bad = |what: &str| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!(
                    "{what} `{cell}` in column {} (`{}`)",
                    col + 1,
                    attributes[col].name
                ),
            };
            if is_missing_token(cell) {
                return Err(bad("missing value"));
            }
            let v: f64 = cell.parse().map_err(|_| bad("non-numeric value"))?;
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
            values.push(v);
        }
        rows.push(input_idx.iter().map(|&j| values[j]).collect::<Vec<_>>());
        targets.push(values[target_idx]);
    }
    if rows.is_empty() {
        return Err(header_err("no data rows after @data".into()));
    }

    let name = relation.unwrap_or_else(|| file_stem(path));
    let mut ds = Dataset::from_rows(
        name,
        input_idx.iter().map(|&j| attributes[j].name.clone()).collect(),
        attributes[target_idx].name.clone(),
        rows,
        targets,
    )?;
    ds.feature_ranges = input_idx.iter().map(|&j| attributes[j].range).collect();
    ds.target_range = attributes[target_idx].range;
    Ok(ds)
}

/// Loads a CSV file with a header row. `target` names the target column;
/// when `None` the last column is used.
pub fn load_csv(path: &Path, target: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => csv_err(path, e),
        })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "empty file or missing header".into(),
        });
    }
    if header.len() < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "need at least one feature column and a target column".into(),
        });
    }
    let target_idx = match target {
        Some(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            Error::Data(format!(
                "target column `{name}` not found in {}",
                path.display()
            ))
        })?,
        None => header.len() - 1,
    };
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut row = Vec::with_capacity(header.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("non-numeric value `{cell}` in column `{}`", header[col]),
            })?;
            if col == target_idx {
                targets.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no data rows".into(),
        });
    }
    let features = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::from_rows(file_stem(path), features, header[target_idx].clone(), rows, targets)
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx
}

/// Deterministic shuffle, then the first `round(n * (1 - fraction))` rows
/// train and the rest test. `fraction` is the held-out share.
pub fn split_holdout(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Option<Dataset>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "holdout fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let idx = shuffled_indices(data.len(), seed);
    let n_test = (data.len() as f64 * fraction).round() as usize;
    let n_train = data.len() - n_test;
    if n_train == 0 {
        return Err(Error::Data("holdout split leaves no training rows".into()));
    }
    let train = data.subset(&idx[..n_train])?;
    let test = if n_test == 0 {
        None
    } else {
        Some(data.subset(&idx[n_train..])?)
    };
    Ok((train, test))
}

/// One cross-validation fold.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train: Dataset,
    pub test: Dataset,
}

/// Shuffled k-fold partition; fold sizes differ by at most one row.
pub fn kfold(data: &Dataset, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 || k > data.len() {
        return Err(Error::Config(format!(
            "cannot make {k} folds from {} rows",
            data.len()
        )));
    }
    let idx = shuffled_indices(data.len(), seed);
    let n = data.len();
    (0..k)
        .map(|f| {
            let (start, end) = (f * n / k, (f + 1) * n / k);
            let test: Vec<usize> = idx[start..end].to_vec();
            let train: Vec<usize> = idx[..start].iter().chain(&idx[end..]).copied().collect();
            Ok(FoldSplit {
                fold_index: f + 1,
                train: data.subset(&train)?,
                test: data.subset(&test)?,
            })
        })
        .collect()
}

/// Paths of KEEL's pre-split `<name>-5-<i>tra.dat` / `<name>-5-<i>tst.dat`
/// files inside `dir`, ordered by fold index.
pub fn find_keel_folds(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut folds = Vec::new();
    for i in 1.. {
        let tra_suffix = format!("-5-{i}tra.dat");
        let Some(tra) = names.iter().find(|n| n.ends_with(&tra_suffix)) else {
            break;
        };
        let tst = tra.replace(&tra_suffix, &format!("-5-{i}tst.dat"));
        if !names.contains(&tst) {
            return Err(Error::Data(format!(
                "fold {i}: found {tra} but not {tst} in {}",
                dir.display()
            )));
        }
        folds.push((dir.join(tra), dir.join(tst)));
    }
    if folds.is_empty() {
        return Err(Error::Data(format!(
            "no KEEL fold files (*-5-<i>tra.dat) in {}",
            dir.display()
        )));
    }
    Ok(folds)
}

/// Loads KEEL fold files verbatim.
pub fn load_keel_folds(dir: &Path) -> Result<Vec<FoldSplit>> {
    find_keel_folds(dir)?
        .into_iter()
        .enumerate()
        .map(|(i, (tra, tst))| {
            Ok(FoldSplit {
                fold_index: i + 1,
                train: load_keel(&tra)?,
                test: load_keel(&tst)?,
            })
        })
        .collect()
}
