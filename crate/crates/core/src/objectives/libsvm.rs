use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{HatError, Result};

/// Largest feature count densified without an explicit truncation request.
pub const MAX_DENSE_FEATURES: usize = 5000;

/// How source labels are mapped to numeric labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMap {
    /// Accept `+1`/`1` and `-1` as is.
    PlusMinusOne,
    /// `0 -> -1`, `1 -> +1`.
    ZeroOne,
    /// mushrooms convention: `1 -> +1`, `2 -> -1`.
    Mushrooms,
    /// Non-negative integers kept as class indices.
    ClassIndex,
    /// Explicit table from source label text to value.
    Explicit(BTreeMap<String, f64>),
}

impl LabelMap {
    fn map(&self, token: &str) -> Option<f64> {
        if let LabelMap::Explicit(table) = self {
            return table.get(token).copied();
        }
        let v: f64 = token.parse().ok()?;
        match self {
            LabelMap::PlusMinusOne => (v == 1.0 || v == -1.0).then_some(v),
            LabelMap::ZeroOne => match v {
                0.0 => Some(-1.0),
                1.0 => Some(1.0),
                _ => None,
            },
            LabelMap::Mushrooms => match v {
                1.0 => Some(1.0),
                2.0 => Some(-1.0),
                _ => None,
            },
            LabelMap::ClassIndex => (v >= 0.0 && v.fract() == 0.0 && v < 1e9).then_some(v),
            LabelMap::Explicit(_) => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibsvmOptions {
    pub label_map: LabelMap,
    /// Fixed feature count; inferred from the largest index when absent.
    #[serde(default)]
    pub num_features: Option<usize>,
    /// Drop features beyond `num_features` (or beyond the densification cap)
    /// instead of rejecting the file.
    #[serde(default)]
    pub truncate: bool,
    /// Read at most this many rows.
    #[serde(default)]
    pub max_rows: Option<usize>,
}

impl LibsvmOptions {
    pub fn new(label_map: LabelMap) -> Self {
        LibsvmOptions {
            label_map,
            num_features: None,
            truncate: false,
            max_rows: None,
        }
    }
}

pub fn load_libsvm(path: impl AsRef<Path>, options: &LibsvmOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HatError::Io(format!("{}: {e}", path.display())))?;
    parse_libsvm(&text, options)
}

/// Parses LIBSVM sparse text (`label idx:val ...`, 1-based indices).
pub fn parse_libsvm(text: &str, options: &LibsvmOptions) -> Result<LabeledDataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if options.max_rows.is_some_and(|m| rows.len() >= m) {
            break;
        }
        let parse_err = |message: String| HatError::Parse { line: line_no, message };
        let mut tokens = content.split_whitespace();
        let label_token = tokens.next().expect("non-empty line has a token");
        let label = options.label_map.map(label_token).ok_or_else(|| {
            HatError::Data(format!("line {line_no}: label `{label_token}` is not mapped"))
        })?;

        let mut entries = Vec::new();
        let mut last_index = 0usize;
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected `index:value`, found `{token}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_err("feature indices are 1-based".into()));
            }
            if idx <= last_index {
                return Err(parse_err(format!("feature index {idx} is not increasing")));
            }
            last_index = idx;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(parse_err(format!("non-finite feature value `{val}`")));
            }
            entries.push((idx, val));
        }
        max_index = max_index.max(last_index);
        labels.push(label);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(HatError::Data("no samples in LIBSVM input".into()));
    }

    let d = match options.num_features {
        Some(0) => return Err(HatError::Data("num_features must be positive".into())),
        Some(d) => {
            if max_index > d && !options.truncate {
                return Err(HatError::Data(format!(
                    "feature index {max_index} exceeds num_features = {d}; enable truncation to drop it"
                )));
            }
            d
        }
        None => max_index.max(1),
    };
    if d > MAX_DENSE_FEATURES && !options.truncate {
        return Err(HatError::Data(format!(
            "{d} features exceed the densification cap of {MAX_DENSE_FEATURES}; enable truncation"
        )));
    }
    let d = if options.num_features.is_none() { d.min(MAX_DENSE_FEATURES) } else { d };

    let mut features = DMatrix::zeros(rows.len(), d);
    for (i, entries) in rows.iter().enumerate() {
        for &(idx, val) in entries.iter().take_while(|(idx, _)| *idx <= d) {
            features[(i, idx - 1)] = val;
        }
    }
    LabeledDataset::new(features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1() -> LibsvmOptions {
        LibsvmOptions::new(LabelMap::PlusMinusOne)
    }

    #[test]
    fn single_row_densifies() {
        let opts = LibsvmOptions { num_features: Some(4), ..pm1() };
        let ds = parse_libsvm("+1 3:0.5\n", &opts).unwrap();
        assert_eq!(ds.features.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.5, 0.0]);
        assert_eq!(ds.labels, vec![1.0]);
    }

    #[test]
    fn empty_input_is_data_error() {
        assert!(matches!(parse_libsvm("", &pm1()), Err(HatError::Data(_))));
        assert!(matches!(parse_libsvm("\n  \n", &pm1()), Err(HatError::Data(_))));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_libsvm("+1 1:1\n-1 2:x\n", &pm1()).unwrap_err();
        assert_eq!(err, HatError::Parse { line: 2, message: "bad feature value `x`".into() });
        let err = parse_libsvm("+1 1:1\n\n-1 0:1\n", &pm1()).unwrap_err();
        assert!(matches!(err, HatError::Parse { line: 3, .. }));
        assert!(matches!(parse_libsvm("+1 3\n", &pm1()), Err(HatError::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("+1 3:1 2:1\n", &pm1()), Err(HatError::Parse { line: 1, .. })));
    }

    #[test]
    fn unmapped_label_is_data_error() {
        assert!(matches!(parse_libsvm("2 1:1\n", &pm1()), Err(HatError::Data(_))));
    }

    #[test]
    fn label_maps() {
        let m = LibsvmOptions::new(LabelMap::Mushrooms);
        assert_eq!(parse_libsvm("1 1:1\n2 1:1\n", &m).unwrap().labels, vec![1.0, -1.0]);
        let z = LibsvmOptions::new(LabelMap::ZeroOne);
        assert_eq!(parse_libsvm("0 1:1\n1 1:1\n", &z).unwrap().labels, vec![-1.0, 1.0]);
        let c = LibsvmOptions::new(LabelMap::ClassIndex);
        assert_eq!(parse_libsvm("0 1:1\n2 1:1\n", &c).unwrap().labels, vec![0.0, 2.0]);
        assert!(parse_libsvm("1.5 1:1\n", &c).is_err());
        let table = BTreeMap::from([("yes".to_string(), 1.0), ("no".to_string(), -1.0)]);
        let e = LibsvmOptions::new(LabelMap::Explicit(table));
        assert_eq!(parse_libsvm("no 1:1\nyes 1:2\n", &e).unwrap().labels, vec![-1.0, 1.0]);
    }

    #[test]
    fn width_inferred_and_truncated() {
        let ds = parse_libsvm("+1 2:1\n-1 5:2\n", &pm1()).unwrap();
        assert_eq!(ds.num_features(), 5);
        let strict = LibsvmOptions { num_features: Some(3), ..pm1() };
        assert!(parse_libsvm("+1 2:1\n-1 5:2\n", &strict).is_err());
        let trunc = LibsvmOptions { truncate: true, ..strict };
        let ds = parse_libsvm("+1 2:1\n-1 5:2\n", &trunc).unwrap();
        assert_eq!(ds.num_features(), 3);
        assert_eq!(ds.features.row(1).sum(), 0.0);
    }

    #[test]
    fn densification_cap() {
        let line = format!("+1 {}:1\n", MAX_DENSE_FEATURES + 1);
        assert!(matches!(parse_libsvm(&line, &pm1()), Err(HatError::Data(_))));
        let trunc = LibsvmOptions { truncate: true, ..pm1() };
        assert_eq!(parse_libsvm(&line, &trunc).unwrap().num_features(), MAX_DENSE_FEATURES);
    }

    #[test]
    fn max_rows_and_comments() {
        let opts = LibsvmOptions { max_rows: Some(2), ..pm1() };
        let ds = parse_libsvm("# header\n+1 1:1\n-1 1:2 # trailing\n+1 1:3\n", &opts).unwrap();
        assert_eq!(ds.labels, vec![1.0, -1.0]);
        assert_eq!(ds.features[(1, 0)], 2.0);
    }
}
