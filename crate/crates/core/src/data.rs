use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "classes", rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification(usize),
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Regression => f.write_str("regression"),
            Task::Classification(k) => write!(f, "{k}-class classification"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Response {
    Regression(Vec<f64>),
    Classification { labels: Vec<usize>, classes: usize },
}

/// Design matrix plus response. Columns are stored contiguously
/// (column-major), which is how every criterion reads them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    response: Response,
    standardized: bool,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// `x` is column-major: feature `j` occupies `x[j*n..(j+1)*n]`.
    pub fn new(n: usize, p: usize, x: Vec<f64>, response: Response) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidData(format!("need at least 5 observations, got {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidData("need at least one feature".into()));
        }
        if x.len() != n * p {
            return Err(Error::InvalidData(format!(
                "design has {} entries, expected {n}x{p}",
                x.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at row {}, feature {}",
                pos % n,
                pos / n
            )));
        }
        match &response {
            Response::Regression(y) => {
                if y.len() != n {
                    return Err(Error::InvalidData(format!("response has {} rows, expected {n}", y.len())));
                }
                if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidData(format!("non-finite response at row {i}")));
                }
            }
            Response::Classification { labels, classes } => {
                if labels.len() != n {
                    return Err(Error::InvalidData(format!(
                        "response has {} rows, expected {n}",
                        labels.len()
                    )));
                }
                if *classes < 2 {
                    return Err(Error::InvalidData("classification needs at least 2 classes".into()));
                }
                let mut counts = vec![0usize; *classes];
                for &l in labels {
                    if l >= *classes {
                        return Err(Error::InvalidData(format!("label {l} outside 0..{classes}")));
                    }
                    counts[l] += 1;
                }
                if let Some(k) = counts.iter().position(|&c| c == 0) {
                    return Err(Error::InvalidData(format!("class {k} has no observations")));
                }
            }
        }
        Ok(Self {
            n,
            p,
            x,
            response,
            standardized: false,
            feature_names: None,
        })
    }

    /// Builds a dataset from row-major observations.
    pub fn from_rows(rows: &[Vec<f64>], response: Response) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidData(format!("row {i} has {} features, expected {p}", rows[i].len())));
        }
        let mut x = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                x[j * n + i] = *v;
            }
        }
        Self::new(n, p, x, response)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::InvalidData(format!(
                "{} feature names for {} features",
                names.len(),
                self.p
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn task(&self) -> Task {
        match &self.response {
            Response::Regression(_) => Task::Regression,
            Response::Classification { classes, .. } => Task::Classification(*classes),
        }
    }

    pub fn response(&self) -> &Response {
        &self.response
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// 1-based display name of feature `j`.
    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("f{}", j + 1),
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    pub fn columns(&self) -> &[f64] {
        &self.x
    }

    /// Response as reals; class labels are cast to their integer codes.
    pub fn response_values(&self) -> Vec<f64> {
        match &self.response {
            Response::Regression(y) => y.clone(),
            Response::Classification { labels, .. } => labels.iter().map(|&l| l as f64).collect(),
        }
    }

    /// Centers every column and scales it to unit sample standard deviation
    /// (denominator n-1). Constant columns are only centered.
    pub fn standardize(&self) -> Self {
        let mut out = self.clone();
        let n = self.n as f64;
        for j in 0..self.p {
            let col = &mut out.x[j * self.n..(j + 1) * self.n];
            let mean = col.iter().sum::<f64>() / n;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1.0)).sqrt();
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            for v in col.iter_mut() {
                *v = (*v - mean) * scale;
            }
        }
        out.standardized = true;
        out
    }

    /// Keeps the observations at `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let m = rows.len();
        let mut x = Vec::with_capacity(m * self.p);
        for j in 0..self.p {
            let col = self.column(j);
            x.extend(rows.iter().map(|&i| col[i]));
        }
        let response = match &self.response {
            Response::Regression(y) => Response::Regression(rows.iter().map(|&i| y[i]).collect()),
            Response::Classification { labels, classes } => Response::Classification {
                labels: rows.iter().map(|&i| labels[i]).collect(),
                classes: *classes,
            },
        };
        let mut out = Self::new(m, self.p, x, response)?;
        out.standardized = self.standardized;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    /// Keeps the features at `cols`, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut x = Vec::with_capacity(self.n * cols.len());
        for &j in cols {
            x.extend_from_slice(self.column(j));
        }
        let mut out = Self::new(self.n, cols.len(), x, self.response.clone())?;
        out.standardized = self.standardized;
        out.feature_names = self
            .feature_names
            .as_ref()
            .map(|names| cols.iter().map(|&j| names[j].clone()).collect());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0, 3.0]).collect();
        Dataset::from_rows(&rows, Response::Regression((0..6).map(|i| i as f64).collect())).unwrap()
    }

    #[test]
    fn column_major_layout() {
        let d = toy();
        assert_eq!(d.column(1), &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
        assert_eq!(d.task(), Task::Regression);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let y = Response::Regression(vec![0.0; 4]);
        assert!(Dataset::new(4, 1, vec![0.0; 4], y).is_err());
        let y = Response::Regression(vec![0.0; 5]);
        assert!(Dataset::new(5, 1, vec![0.0, 1.0, f64::NAN, 0.0, 0.0], y).is_err());
        let labels = Response::Classification { labels: vec![0, 0, 0, 0, 0], classes: 2 };
        assert!(Dataset::new(5, 1, vec![0.0; 5], labels).is_err());
        let labels = Response::Classification { labels: vec![0, 1, 0, 1, 0], classes: 1 };
        assert!(Dataset::new(5, 1, vec![0.0; 5], labels).is_err());
    }

    #[test]
    fn standardize_centers_and_scales() {
        let d = toy().standardize();
        assert!(d.is_standardized());
        for j in 0..2 {
            let c = d.column(j);
            let mean: f64 = c.iter().sum::<f64>() / 6.0;
            let var: f64 = c.iter().map(|v| v * v).sum::<f64>() / 5.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
        assert!(d.column(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn row_and_column_selection() {
        let d = toy();
        let r = d.select_rows(&[5, 4, 3, 2, 1]).unwrap();
        assert_eq!(r.column(0), &[5.0, 4.0, 3.0, 2.0, 1.0]);
        let c = d.select_columns(&[2, 0]).unwrap();
        assert_eq!(c.column(1), d.column(0));
    }
}
