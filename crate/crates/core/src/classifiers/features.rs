use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::PeriodRecord;
use crate::error::{Error, Result};

/// Dense row-major feature matrix with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    names: Vec<String>,
    rows: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, rows: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * names.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {rows} rows of {} columns",
                data.len(),
                names.len()
            )));
        }
        let unique: HashSet<&str> = names.iter().map(String::as_str).collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidInput("duplicate feature names".into()));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in row {}, column `{}`",
                pos / names.len(),
                names[pos % names.len()]
            )));
        }
        Ok(FeatureMatrix { names, rows, data })
    }

    /// Build from per-row vectors that all share `names`.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let width = names.len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::WidthMismatch {
                expected: width,
                got: r.len(),
            });
        }
        FeatureMatrix::new(names, rows.len(), rows.concat())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            names: self.names.clone(),
            rows: idx.len(),
            data,
        }
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.rows != other.rows {
            return Err(Error::InvalidInput(format!(
                "cannot join {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        FeatureMatrix::new(names, self.rows, data)
    }
}

pub const STRUCTURED_COLUMNS: [&str; 10] = [
    "age_admission",
    "gender_male",
    "gender_female",
    "num_words",
    "first_note_offset_h",
    "last_note_offset_h",
    "n_meds_prescribed",
    "n_meds_administered",
    "has_diagnosis",
    "admission_start_hour",
];

fn offset_hours(record: &PeriodRecord, ts: Option<chrono::DateTime<chrono::Utc>>) -> f64 {
    ts.map(|t| (t - record.start).num_seconds() as f64 / 3600.0)
        .unwrap_or(0.0)
}

/// Structured variables of each period, one row per record. Gender becomes
/// two indicators so unknown values map to both zero; note offsets are hours
/// relative to the admission start.
pub fn structured_features(records: &[PeriodRecord]) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            let s = &r.structured;
            let g = s.gender.trim().to_ascii_lowercase();
            let male = matches!(g.as_str(), "m" | "male" | "man") as u8 as f64;
            let female = matches!(g.as_str(), "f" | "v" | "female" | "vrouw") as u8 as f64;
            vec![
                s.age_admission,
                male,
                female,
                s.num_words as f64,
                offset_hours(r, s.first_note_ts),
                offset_hours(r, s.last_note_ts),
                s.n_meds_prescribed as f64,
                s.n_meds_administered as f64,
                s.has_diagnosis as u8 as f64,
                s.admission_start_hour as f64,
            ]
        })
        .collect();
    FeatureMatrix::from_rows(STRUCTURED_COLUMNS.iter().map(|s| s.to_string()).collect(), &rows)
}

/// Matrix of dense vectors with columns `{prefix}{index}`.
pub fn vector_features(prefix: &str, vectors: &[Vec<f64>]) -> Result<FeatureMatrix> {
    let width = vectors.first().map_or(0, Vec::len);
    let names = (0..width).map(|i| format!("{prefix}{i}")).collect();
    FeatureMatrix::from_rows(names, vectors)
}

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StandardScaler {
    /// Fit on `x` using the population standard deviation. Constant columns
    /// keep scale 1 and are only centred.
    pub fn fit(x: &FeatureMatrix) -> StandardScaler {
        let (n, p) = (x.n_rows(), x.n_cols());
        let mut mean = vec![0.0; p];
        let mut scale = vec![1.0; p];
        if n == 0 {
            return StandardScaler { mean, scale };
        }
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                let d = x.get(i, j) - mean[j];
                var[j] += d * d;
            }
        }
        for j in 0..p {
            let sd = (var[j] / n as f64).sqrt();
            if sd > 1e-12 * mean[j].abs().max(1.0) {
                scale[j] = sd;
            } else {
                log::warn!("feature `{}` has zero variance; centring only", x.names()[j]);
            }
        }
        StandardScaler { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(row.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) / s));
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.n_cols() != self.mean.len() {
            return Err(Error::WidthMismatch {
                expected: self.mean.len(),
                got: x.n_cols(),
            });
        }
        let mut data = Vec::with_capacity(x.data().len());
        let mut buf = Vec::new();
        for i in 0..x.n_rows() {
            self.transform_row(x.row(i), &mut buf);
            data.extend_from_slice(&buf);
        }
        FeatureMatrix::new(x.names().to_vec(), x.n_rows(), data)
    }
}

/// Fit scaling on `train` and apply it to both matrices.
pub fn standardize(train: &FeatureMatrix, apply: &FeatureMatrix) -> Result<(StandardScaler, FeatureMatrix, FeatureMatrix)> {
    let scaler = StandardScaler::fit(train);
    let t = scaler.transform(train)?;
    let a = scaler.transform(apply)?;
    Ok((scaler, t, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(names: &[&str], rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(names.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn rejects_bad_matrices() {
        let names = vec!["a".to_string(), "a".to_string()];
        assert!(FeatureMatrix::new(names, 1, vec![1.0, 2.0]).is_err());
        assert!(FeatureMatrix::new(vec!["a".into()], 1, vec![f64::NAN]).is_err());
        assert!(matches!(
            FeatureMatrix::from_rows(vec!["a".into()], &[vec![1.0, 2.0]]),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn standardized_train_columns_are_unit() {
        let x = m(&["a", "b"], &[vec![1.0, 10.0], vec![2.0, 30.0], vec![6.0, 20.0], vec![3.0, -4.0]]);
        let (_, t, _) = standardize(&x, &x).unwrap();
        for j in 0..2 {
            let col = t.column(j);
            let mean = col.iter().sum::<f64>() / 4.0;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_column_becomes_zero() {
        let x = m(&["c"], &[vec![5.0], vec![5.0], vec![5.0]]);
        let (s, t, _) = standardize(&x, &x).unwrap();
        assert_eq!(s.scale, vec![1.0]);
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn test_rows_use_train_statistics() {
        let train = m(&["a"], &[vec![0.0], vec![2.0]]);
        let test = m(&["a"], &[vec![10.0], vec![12.0]]);
        let (_, _, applied) = standardize(&train, &test).unwrap();
        assert_eq!(applied.data(), &[9.0, 11.0]);
        let (_, own, _) = standardize(&test, &test).unwrap();
        assert_ne!(own.data(), applied.data());
    }

    #[test]
    fn hstack_keeps_names() {
        let a = m(&["a"], &[vec![1.0], vec![2.0]]);
        let b = m(&["b", "c"], &[vec![3.0, 4.0], vec![5.0, 6.0]]);
        let h = a.hstack(&b).unwrap();
        assert_eq!(h.names(), &["a", "b", "c"]);
        assert_eq!(h.row(1), &[2.0, 5.0, 6.0]);
        assert!(a.hstack(&a).is_err());
    }
}
