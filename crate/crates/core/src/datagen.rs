//! Synthetic benchmark designs with known signal sets.
//!
//! Every generator draws observations row by row from a single
//! [`RngStream`], so a dataset is a pure function of its seed.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Response};
use crate::error::{invalid, Result};
use crate::rng::{tag, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rho", rename_all = "snake_case")]
pub enum Covariance {
    Identity,
    Equicorrelated(f64),
    /// `Sigma_ij = rho^|i-j|`.
    Ar(f64),
}

/// Draws `n` rows of `N(0, Sigma)` without forming `Sigma`. Returns a
/// column-major `n x p` matrix.
pub fn sample_mvn<R: Rng + ?Sized>(n: usize, cov: Covariance, p: usize, rng: &mut R) -> Result<Vec<f64>> {
    match cov {
        Covariance::Equicorrelated(rho) if !(0.0..1.0).contains(&rho) => {
            return Err(invalid("rho", format!("equicorrelation must lie in [0, 1), got {rho}")))
        }
        Covariance::Ar(rho) if !(rho.abs() < 1.0) => {
            return Err(invalid("rho", format!("|rho| must be < 1, got {rho}")))
        }
        _ => {}
    }
    let mut x = vec![0.0; n * p];
    let mut row = vec![0.0; p];
    for i in 0..n {
        fill_mvn_row(cov, &mut row, rng);
        for (j, v) in row.iter().enumerate() {
            x[j * n + i] = *v;
        }
    }
    Ok(x)
}

fn fill_mvn_row<R: Rng + ?Sized>(cov: Covariance, row: &mut [f64], rng: &mut R) {
    match cov {
        Covariance::Identity => row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
        Covariance::Equicorrelated(rho) => {
            let w: f64 = rng.sample(StandardNormal);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            for v in row.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v = a * w + b * z;
            }
        }
        Covariance::Ar(rho) => {
            let b = (1.0 - rho * rho).sqrt();
            let mut prev = 0.0;
            for (j, v) in row.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                prev = if j == 0 { z } else { rho * prev + b * z };
                *v = prev;
            }
        }
    }
}

/// Student t with 2 degrees of freedom: `Z / sqrt(chi2_2 / 2)`.
fn student_t2<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    // chi2 with 2 df is 2 * Exp(1); 1 - U lies in (0, 1].
    let chi2 = -2.0 * (1.0 - rng.random::<f64>()).ln();
    z / (chi2 / 2.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
    Ex6,
    Ex8,
}

impl ExampleId {
    pub const ALL: [ExampleId; 7] = [
        ExampleId::Ex1,
        ExampleId::Ex2,
        ExampleId::Ex3,
        ExampleId::Ex4,
        ExampleId::Ex5,
        ExampleId::Ex6,
        ExampleId::Ex8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Ex3 => "ex3",
            ExampleId::Ex4 => "ex4",
            ExampleId::Ex5 => "ex5",
            ExampleId::Ex6 => "ex6",
            ExampleId::Ex8 => "ex8",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s.to_ascii_lowercase())
    }

    /// Default `(n, p)`.
    pub fn default_shape(self) -> (usize, usize) {
        match self {
            ExampleId::Ex1 => (100, 1000),
            ExampleId::Ex4 => (300, 1000),
            _ => (200, 2000),
        }
    }

    pub fn signal_count(self) -> usize {
        match self {
            ExampleId::Ex1 | ExampleId::Ex3 | ExampleId::Ex4 => 4,
            ExampleId::Ex5 => 2,
            ExampleId::Ex2 | ExampleId::Ex6 | ExampleId::Ex8 => 5,
        }
    }

    fn min_p(self) -> usize {
        match self {
            ExampleId::Ex3 => 22,
            ExampleId::Ex8 => 10,
            other => other.signal_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub id: ExampleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl ExampleSpec {
    pub fn new(id: ExampleId, seed: u64) -> Self {
        Self { id, n: None, p: None, seed }
    }

    pub fn shape(&self) -> (usize, usize) {
        let (n, p) = self.id.default_shape();
        (self.n.unwrap_or(n), self.p.unwrap_or(p))
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = self.shape();
        if n < 5 {
            return Err(invalid("n", format!("must be at least 5, got {n}")));
        }
        if p < self.id.min_p() {
            return Err(invalid("p", format!("{} needs p >= {}, got {p}", self.id.name(), self.id.min_p())));
        }
        if self.id == ExampleId::Ex8 && p % 5 != 0 {
            return Err(invalid("p", "p must be divisible by 5"));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<LabeledDataset> {
        self.validate()?;
        let (n, p) = self.shape();
        let mut rng = RngStream::new(self.seed, &[tag::DATA]);
        match self.id {
            ExampleId::Ex1 => gen_ex1(n, p, &mut rng),
            ExampleId::Ex2 => gen_ex2(n, p, &mut rng),
            ExampleId::Ex3 => gen_ex3(n, p, &mut rng),
            ExampleId::Ex4 => gen_ex4(n, p, &mut rng),
            ExampleId::Ex5 => gen_ex5(n, p, &mut rng),
            ExampleId::Ex6 => gen_ex6(n, p, &mut rng),
            ExampleId::Ex8 => gen_ex8(n, p, &mut rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub data: Dataset,
    /// True signal features, 0-based and sorted.
    pub signal_set: Vec<usize>,
}

fn check_shape(n: usize, p: usize, min_p: usize) -> Result<()> {
    if n < 5 {
        return Err(invalid("n", format!("must be at least 5, got {n}")));
    }
    if p < min_p {
        return Err(invalid("p", format!("must be at least {min_p}, got {p}")));
    }
    Ok(())
}

/// Column-major buffer filled row by row.
struct Rows {
    n: usize,
    x: Vec<f64>,
}

impl Rows {
    fn new(n: usize, p: usize) -> Self {
        Self { n, x: vec![0.0; n * p] }
    }

    fn put(&mut self, i: usize, row: &[f64]) {
        for (j, v) in row.iter().enumerate() {
            self.x[j * self.n + i] = *v;
        }
    }
}

/// Linear model with a hidden signal: every feature except the fourth has
/// pairwise correlation 0.5, the fourth has correlation `sqrt(0.5)` with
/// all others, and its coefficient exactly cancels its marginal covariance
/// with the response.
pub fn gen_ex1<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LabeledDataset> {
    check_shape(n, p, 4)?;
    let rho: f64 = 0.5;
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let hidden = -15.0 * rho.sqrt();
    let mut rows = Rows::new(n, p);
    let mut row = vec![0.0; p];
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let w: f64 = rng.sample(StandardNormal);
        for (j, v) in row.iter_mut().enumerate() {
            *v = if j == 3 {
                w
            } else {
                let z: f64 = rng.sample(StandardNormal);
                a * w + b * z
            };
        }
        let eps: f64 = rng.sample(StandardNormal);
        y.push(5.0 * row[0] + 5.0 * row[1] + 5.0 * row[2] + hidden * row[3] + eps);
        rows.put(i, &row);
    }
    Ok(LabeledDataset {
        data: Dataset::new(n, p, rows.x, Response::Regression(y))?,
        signal_set: vec![0, 1, 2, 3],
    })
}

/// Response shared by the latent-cluster designs: half the sum of the first
/// five unshifted coordinates plus noise.
pub fn latent_cluster_response(unshifted: &[f64], eps: f64) -> f64 {
    0.5 * (unshifted[..5].iter().sum::<f64>() + eps)
}

/// Latent clusters: AR(0.5) features shifted by a common `+-3`, heavy-tailed noise.
pub fn gen_ex2<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LabeledDataset> {
    check_shape(n, p, 5)?;
    let mut rows = Rows::new(n, p);
    let mut row = vec![0.0; p];
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        fill_mvn_row(Covariance::Ar(0.5), &mut row, rng);
        let shift = if rng.random::<bool>() { 3.0 } else { -3.0 };
        let eps = student_t2(rng);
        y.push(latent_cluster_response(&row, eps));
        row.iter_mut().for_each(|v| *v += shift);
        rows.put(i, &row);
    }
    Ok(LabeledDataset {
        data: Dataset::new(n, p, rows.x, Response::Regression(y))?,
        signal_set: (0..5).collect(),
    })
}

/// Random coefficient `(-1)^U (4 ln n / sqrt n + |Z|)`, `U ~ Bernoulli(0.4)`.
fn ex3_coefficient<R: Rng + ?Sized>(n: usize, rng: &mut R) -> f64 {
    let flip = rng.random_bool(0.4);
    let z: f64 = rng.sample(StandardNormal);
    let nf = n as f64;
    let magnitude = 4.0 * nf.ln() / nf.sqrt() + z.abs();
    if flip {
        -magnitude
    } else {
        magnitude
    }
}

/// Interaction and indicator terms over AR(0.8) features. The two
/// coefficients are redrawn for every dataset.
pub fn gen_ex3<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LabeledDataset> {
    check_shape(n, p, 22)?;
    let beta1 = ex3_coefficient(n, rng);
    let beta2 = ex3_coefficient(n, rng);
    let mut rows = Rows::new(n, p);
    let mut row = vec![0.0; p];
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        fill_mvn_row(Covariance::Ar(0.8), &mut row, rng);
        let eps: f64 = rng.sample(StandardNormal);
        let indicator = if row[11] < 0.0 { 1.0 } else { 0.0 };
        y.push(2.0 * beta1 * row[0] * row[1] + 3.0 * beta2 * indicator * row[21] + eps);
        rows.put(i, &row);
    }
    Ok(LabeledDataset {
        data: Dataset::new(n, p, rows.x, Response::Regression(y))?,
        signal_set: vec![0, 1, 11, 21],
    })
}

/// Ex3's pair of random coefficients for a given seed stream, exposed for
/// moment checks.
pub fn ex3_coefficients<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (f64, f64) {
    let b1 = ex3_coefficient(n, rng);
    let b2 = ex3_coefficient(n, rng);
    (b1, b2)
}

/// Fourth-order interactions among independent normals.
pub fn gen_ex4<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LabeledDataset> {
    check_shape(n, p, 4)?;
    let mut rows = Rows::new(n, p);
    let mut row = vec![0.0; p];
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        fill_mvn_row(Covariance::Identity, &mut row, rng);
        let eps: f64 = rng.sample(StandardNormal);
        y.push(ex4_response(&row, eps));
        rows.put(i, &row);
    }
    Ok(LabeledDataset {
        data: Dataset::new(n, p, rows.x, Response::Regression(y))?,
        signal_set: vec![0, 1, 2, 3],
    })
}

pub fn ex4_response(x: &[f64], eps: f64) -> f64 {
    let r0 = x[0].abs().sqrt();
    let s2 = x[2].sin();
    3.0 * r0
        + 2.0 * r0 * x[1] * x[1]
        + 4.0 * x[0].sin() * x[1].sin() * s2 * s2
        + 12.0 * x[0].sin() * x[1].abs() * s2 * x[3] * x[3]
        + 0.5 * eps
}

/// Two-class symmetric Gaussian mixture: each class is an equal mixture at
/// `+mu_r` and `-mu_r`, so no single feature separates the classes.
pub fn gen_ex5<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LabeledDataset> {
    check_shape(n, p, 2)?;
    loop {
        let mut rows = Rows::new(n, p);
        let mut row = vec![0.0; p];
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = usize::from(rng.random::<bool>());
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            fill_mvn_row(Covariance::Identity, &mut row, rng);
            row[0] += sign * 2.0;
            row[1] += sign * if label == 1 { 2.0 } else { -2.0 };
            labels.push(label);
            rows.put(i, &row);
        }
        // Redraw the (astronomically rare) single-class sample.
        if labels.contains(&0) && labels.contains(&1) {
            return Ok(LabeledDataset {
                data: Dataset::new(n, p, rows.x, Response::Classification { labels, classes: 2 })?,
                signal_set: vec![0, 1],
            });
        }
    }
}

/// Four-class multinomial logistic model; the fifth feature enters only
/// through the other four and is marginally independent of the label.
pub fn gen_ex6<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LabeledDataset> {
    check_shape(n, p, 5)?;
    let root3 = 3.0f64.sqrt();
    let a = 5.0 / root3;
    loop {
        let mut rows = Rows::new(n, p);
        let mut row = vec![0.0; p];
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let mut latent = [0.0; 4];
            for v in latent.iter_mut() {
                *v = rng.random_range(-root3..root3);
            }
            for v in row[4..].iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let shared = row[4];
            row[0] = latent[0] - SQRT_2 * shared;
            row[1] = latent[1] + SQRT_2 * shared;
            row[2] = latent[2] - SQRT_2 * shared;
            row[3] = latent[3] + SQRT_2 * shared;
            let f = [
                -a * latent[0] + a * latent[3],
                a * latent[0] - a * latent[1],
                a * latent[1] - a * latent[2],
                a * latent[2] - a * latent[3],
            ];
            let top = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = f.iter().map(|v| (v - top).exp()).collect();
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut label = 3;
            for (r, wr) in w.iter().enumerate() {
                if u < *wr {
                    label = r;
                    break;
                }
                u -= wr;
            }
            labels.push(label);
            rows.put(i, &row);
        }
        let mut present = [false; 4];
        labels.iter().for_each(|&l| present[l] = true);
        if present.iter().all(|&b| b) {
            return Ok(LabeledDataset {
                data: Dataset::new(n, p, rows.x, Response::Classification { labels, classes: 4 })?,
                signal_set: (0..5).collect(),
            });
        }
    }
}

/// Latent clusters with mixed feature types: every fifth feature (positions
/// 4, 9, ...) is uniform on `{-2, ..., 2}`, the rest are AR(0.5) normals;
/// all are shifted by a common `+-3`.
pub fn gen_ex8<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LabeledDataset> {
    check_shape(n, p, 10)?;
    if p % 5 != 0 {
        return Err(invalid("p", "p must be divisible by 5"));
    }
    let continuous = p - p / 5;
    let mut rows = Rows::new(n, p);
    let mut normals = vec![0.0; continuous];
    let mut row = vec![0.0; p];
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        fill_mvn_row(Covariance::Ar(0.5), &mut normals, rng);
        let mut next = normals.iter();
        for (j, v) in row.iter_mut().enumerate() {
            *v = if j % 5 == 4 {
                rng.random_range(-2i32..=2) as f64
            } else {
                *next.next().expect("continuous slot")
            };
        }
        let shift = if rng.random::<bool>() { 3.0 } else { -3.0 };
        let eps = student_t2(rng);
        y.push(latent_cluster_response(&row, eps));
        row.iter_mut().for_each(|v| *v += shift);
        rows.put(i, &row);
    }
    Ok(LabeledDataset {
        data: Dataset::new(n, p, rows.x, Response::Regression(y))?,
        signal_set: (0..5).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn var(v: &[f64]) -> f64 {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    fn regression(d: &Dataset) -> &[f64] {
        match d.response() {
            Response::Regression(y) => y,
            _ => panic!("expected regression"),
        }
    }

    fn labels(d: &Dataset) -> &[usize] {
        match d.response() {
            Response::Classification { labels, .. } => labels,
            _ => panic!("expected classification"),
        }
    }

    /// Trapezoid rule on `[a, b]` with `m` panels.
    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let inner: f64 = (1..m).map(|i| f(a + i as f64 * h)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    }

    fn phi(t: f64) -> f64 {
        (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn identity_sample_covariance() {
        let (n, p) = (100_000, 5);
        let x = sample_mvn(n, Covariance::Identity, p, &mut RngStream::from_seed(1)).unwrap();
        for i in 0..p {
            for j in 0..p {
                let (a, b) = (&x[i * n..(i + 1) * n], &x[j * n..(j + 1) * n]);
                let c = a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() / n as f64;
                let target = if i == j { 1.0 } else { 0.0 };
                let sd = ((1.0 + target) / n as f64).sqrt();
                assert!((c - target).abs() < 4.0 * sd, "cov[{i}][{j}] = {c}");
            }
        }
    }

    #[test]
    fn equicorrelated_and_ar_correlations() {
        let n = 100_000;
        let x = sample_mvn(n, Covariance::Equicorrelated(0.5), 4, &mut RngStream::from_seed(2)).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                let r = corr(&x[i * n..(i + 1) * n], &x[j * n..(j + 1) * n]);
                assert!((r - 0.5).abs() < 0.01, "corr[{i}][{j}] = {r}");
            }
        }
        let x = sample_mvn(n, Covariance::Ar(0.8), 3, &mut RngStream::from_seed(3)).unwrap();
        let r = corr(&x[..n], &x[2 * n..]);
        assert!((r - 0.64).abs() < 0.01, "{r}");
    }

    #[test]
    fn rejects_out_of_range_correlation() {
        let mut rng = RngStream::from_seed(0);
        assert!(sample_mvn(10, Covariance::Ar(1.0), 3, &mut rng).is_err());
        assert!(sample_mvn(10, Covariance::Ar(-1.2), 3, &mut rng).is_err());
        assert!(sample_mvn(10, Covariance::Equicorrelated(1.0), 3, &mut rng).is_err());
        assert!(sample_mvn(10, Covariance::Ar(-0.5), 3, &mut rng).is_ok());
    }

    #[test]
    fn ex1_hidden_signal_is_uncorrelated_with_response() {
        let n = 100_000;
        let d = gen_ex1(n, 10, &mut RngStream::from_seed(4)).unwrap();
        let y = regression(&d.data);
        let r = corr(y, d.data.column(3));
        assert!(r.abs() < 0.02, "{r}");
        // The visible signals do correlate with the response.
        assert!(corr(y, d.data.column(0)) > 0.3);
        assert_eq!(d.signal_set, vec![0, 1, 2, 3]);
    }

    #[test]
    fn ex1_million_draws_are_finite() {
        let d = gen_ex1(1_000_000, 4, &mut RngStream::from_seed(5)).unwrap();
        let y = regression(&d.data);
        assert!(y.iter().all(|v| v.is_finite()));
        let v = var(y);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn ex2_shared_shift() {
        let (n, p) = (20_000, 2000);
        let d = gen_ex2(n, p, &mut RngStream::from_seed(6)).unwrap();
        // The AR(0.5) row mean has sd ~0.04 at p = 2000, so the row mean
        // reveals the common shift.
        let mut unshifted = vec![vec![0.0; n]; 2];
        for i in 0..n {
            let row_mean = (0..p).map(|j| d.data.column(j)[i]).sum::<f64>() / p as f64;
            let shift = 3.0f64.copysign(row_mean);
            assert!((row_mean - shift).abs() < 0.3, "row {i}: {row_mean}");
            for (j, col) in unshifted.iter_mut().enumerate() {
                col[i] = d.data.column(j)[i] - shift;
            }
        }
        assert!((var(&unshifted[0]) - 1.0).abs() < 0.05);
        assert!((corr(&unshifted[0], &unshifted[1]) - 0.5).abs() < 0.03);
        assert_eq!(d.signal_set, (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn ex2_moments() {
        let n = 100_000;
        let d = gen_ex2(n, 101, &mut RngStream::from_seed(7)).unwrap();
        let sd = (10.0 / n as f64).sqrt();
        for j in [0, 50, 100] {
            assert!(mean(d.data.column(j)).abs() < 4.0 * sd);
        }
        let r = corr(d.data.column(0), d.data.column(100));
        assert!((r - 0.9).abs() < 0.02, "{r}");
    }

    #[test]
    fn ex3_coefficients_and_mean() {
        let floor = 4.0 * 200f64.ln() / 200f64.sqrt();
        assert!((floor - 1.4985).abs() < 1e-4);
        let mut rng = RngStream::from_seed(8);
        for _ in 0..1000 {
            let (b1, b2) = ex3_coefficients(200, &mut rng);
            assert!(b1.abs() >= floor && b2.abs() >= floor);
        }

        let n = 100_000;
        let mut rng = RngStream::from_seed(9);
        let (b1, b2) = ex3_coefficients(n, &mut rng.clone());
        let d = gen_ex3(n, 22, &mut rng).unwrap();
        assert_eq!(d.signal_set, vec![0, 1, 11, 21]);
        // E[1(x11 < 0) x21] = 0.8^10 * E[x11 1(x11 < 0)].
        let half_moment = integrate(|t| t * phi(t), -12.0, 0.0, 200_000);
        let expected = 2.0 * b1 * 0.8 + 3.0 * b2 * 0.8f64.powi(10) * half_moment;
        let y = regression(&d.data);
        let se = (var(y) / n as f64).sqrt();
        assert!((mean(y) - expected).abs() < 4.0 * se, "{} vs {expected}", mean(y));
    }

    #[test]
    fn ex4_response_and_mean() {
        let mut x = [0.0, 1.3, -0.7, 2.1];
        assert_eq!(ex4_response(&x, 0.8), 0.4);
        x[0] = 0.5;
        assert_ne!(ex4_response(&x, 0.8), 0.4);

        let root_abs = 2.0 * integrate(|t| t.sqrt() * phi(t), 0.0, 12.0, 400_000);
        let closed = 2f64.powf(0.25) * libm::tgamma(0.75) / std::f64::consts::PI.sqrt();
        assert!((root_abs - closed).abs() < 1e-4, "{root_abs} vs {closed}");
        assert!((closed - 0.822179).abs() < 1e-6);

        let n = 1_000_000;
        let d = gen_ex4(n, 4, &mut RngStream::from_seed(10)).unwrap();
        let y = regression(&d.data);
        assert!(y.iter().all(|v| v.is_finite()));
        let se = (var(y) / n as f64).sqrt();
        assert!((mean(y) - 5.0 * closed).abs() < 4.0 * se, "{}", mean(y));
    }

    /// Two-sample Kolmogorov-Smirnov statistic.
    fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut best) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let t = a[i].min(b[j]);
            while i < a.len() && a[i] <= t {
                i += 1;
            }
            while j < b.len() && b[j] <= t {
                j += 1;
            }
            best = best.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        best
    }

    #[test]
    fn ex5_marginals_hide_the_label() {
        let n = 100_000;
        let d = gen_ex5(n, 3, &mut RngStream::from_seed(11)).unwrap();
        let l = labels(&d.data);
        let ones = l.iter().filter(|&&v| v == 1).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());

        let split = |j: usize, class: usize| -> Vec<f64> {
            d.data.column(j).iter().zip(l).filter(|(_, &c)| c == class).map(|(v, _)| *v).collect()
        };
        let (a, b) = (split(0, 0), split(0, 1));
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let critical = 1.95 * ((na + nb) / (na * nb)).sqrt();
        assert!(ks(a, b) < critical);

        for (class, target) in [(1, 4.0), (0, -4.0)] {
            let prod: Vec<f64> = (0..n)
                .filter(|&i| l[i] == class)
                .map(|i| d.data.column(0)[i] * d.data.column(1)[i])
                .collect();
            let se = (var(&prod) / prod.len() as f64).sqrt();
            assert!((mean(&prod) - target).abs() < 4.0 * se, "class {class}: {}", mean(&prod));
        }
    }

    #[test]
    fn ex6_balance_and_structure() {
        let n = 100_000;
        let d = gen_ex6(n, 6, &mut RngStream::from_seed(12)).unwrap();
        let l = labels(&d.data);
        for class in 0..4 {
            let freq = l.iter().filter(|&&v| v == class).count() as f64 / n as f64;
            assert!((freq - 0.25).abs() < 4.0 * (0.25 * 0.75 / n as f64).sqrt(), "class {class}: {freq}");
        }
        let shared = d.data.column(4);
        let latent: Vec<f64> = d.data.column(0).iter().zip(shared).map(|(x, s)| x + SQRT_2 * s).collect();
        assert!((var(&latent) - 1.0).abs() < 0.02);
        assert!(latent.iter().all(|v| v.abs() <= 3f64.sqrt()));
        let r = corr(d.data.column(0), shared);
        assert!((r + SQRT_2 / 3f64.sqrt()).abs() < 0.02, "{r}");
    }

    #[test]
    fn ex8_mixed_columns() {
        let (n, p) = (1000, 2000);
        let d = gen_ex8(n, p, &mut RngStream::from_seed(13)).unwrap();
        let mut discrete = 0;
        for j in 0..p {
            let col = d.data.column(j);
            let is_discrete = col.iter().all(|v| v.fract() == 0.0 && v.abs() <= 5.0 && *v != 0.0);
            if j % 5 == 4 {
                assert!(is_discrete, "column {j}");
                discrete += 1;
            } else {
                let mut sorted = col.to_vec();
                sorted.sort_by(f64::total_cmp);
                assert!(sorted.windows(2).all(|w| w[0] != w[1]), "column {j} repeats");
            }
        }
        assert_eq!(discrete, p / 5);

        // The shift is visible in the sign of a discrete column; undoing it
        // recovers the unshifted signals and the noise term.
        let y = regression(&d.data);
        for i in 0..n {
            let shift = 3.0f64.copysign(d.data.column(4)[i]);
            let unshifted: Vec<f64> = (0..5).map(|j| d.data.column(j)[i] - shift).collect();
            let eps = 2.0 * y[i] - unshifted.iter().sum::<f64>();
            assert!((latent_cluster_response(&unshifted, eps) - y[i]).abs() < 1e-9);
            assert!((-2.0..=2.0).contains(&unshifted[4]));
        }
    }

    #[test]
    fn noise_free_responses_agree_across_latent_cluster_designs() {
        let signals = [0.3, -1.2, 2.5, 0.0, 1.0];
        assert_eq!(latent_cluster_response(&signals, 0.0), 0.5 * signals.iter().sum::<f64>());
    }

    #[test]
    fn specs_validate_and_replay() {
        for id in ExampleId::ALL {
            let mut spec = ExampleSpec::new(id, 3);
            spec.n = Some(30);
            spec.p = Some(40);
            let a = spec.generate().unwrap();
            assert_eq!(a.signal_set.len(), id.signal_count());
            assert!(a.signal_set.iter().all(|&j| j < 40));
            assert_eq!(a, spec.generate().unwrap());
            spec.seed = 4;
            assert_ne!(a.data, spec.generate().unwrap().data);
            assert_eq!(ExampleId::parse(id.name()), Some(id));
        }
        let counts: Vec<usize> = ExampleId::ALL.iter().map(|e| e.signal_count()).collect();
        assert_eq!(counts, vec![4, 5, 4, 4, 2, 5, 5]);

        let mut ex8 = ExampleSpec::new(ExampleId::Ex8, 0);
        ex8.p = Some(1001);
        assert!(ex8.generate().unwrap_err().to_string().contains("p must be divisible by 5"));
        let mut ex6 = ExampleSpec::new(ExampleId::Ex6, 0);
        ex6.p = Some(4);
        assert!(ex6.generate().is_err());
        assert_eq!(ExampleSpec::new(ExampleId::Ex1, 0).shape(), (100, 1000));
    }
}
