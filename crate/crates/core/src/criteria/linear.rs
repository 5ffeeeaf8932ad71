//! Gaussian linear-model BIC and extended BIC.

use crate::data::Dataset;
use crate::linalg::{dot, Cholesky};
use crate::subspace::ln_choose;

use super::Score;

/// Smallest RSS/n admitted before taking the log, so an exact fit scores a
/// finite (very small) value instead of negative infinity.
pub const RSS_FLOOR: f64 = 1e-300;

const RANK_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct LinearBic {
    n: usize,
    p: usize,
    centered: Vec<f64>,
    y: Vec<f64>,
    ln_n: f64,
    gamma: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LinearWork {
    gram: Vec<f64>,
    coef: Vec<f64>,
    resid: Vec<f64>,
    chol: Cholesky,
}

impl LinearBic {
    pub fn new(data: &Dataset, y: &[f64], gamma: f64) -> Self {
        let n = data.n();
        let p = data.p();
        let mut centered = data.columns().to_vec();
        for col in centered.chunks_exact_mut(n) {
            let mean = col.iter().sum::<f64>() / n as f64;
            col.iter_mut().for_each(|v| *v -= mean);
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        Self {
            n,
            p,
            centered,
            y: y.iter().map(|v| v - mean).collect(),
            ln_n: (n as f64).ln(),
            gamma,
        }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.centered[j * self.n..(j + 1) * self.n]
    }

    /// Residual sum of squares of the least-squares fit of the response on
    /// the subspace columns plus an intercept.
    pub fn rss(&self, s: &[usize], work: &mut LinearWork) -> f64 {
        let d = s.len();
        work.gram.clear();
        work.gram.resize(d * d, 0.0);
        work.coef.clear();
        for (a, &ja) in s.iter().enumerate() {
            let ca = self.col(ja);
            for (b, &jb) in s[..=a].iter().enumerate() {
                let g = dot(ca, self.col(jb));
                work.gram[a * d + b] = g;
                work.gram[b * d + a] = g;
            }
            work.coef.push(dot(ca, &self.y));
        }
        work.chol.factor(&work.gram, d, RANK_TOL);
        work.chol.solve(&mut work.coef);
        work.resid.clear();
        work.resid.extend_from_slice(&self.y);
        for (&j, &b) in s.iter().zip(&work.coef) {
            if b != 0.0 {
                for (r, x) in work.resid.iter_mut().zip(self.col(j)) {
                    *r -= b * x;
                }
            }
        }
        work.resid.iter().map(|r| r * r).sum()
    }

    pub fn score(&self, s: &[usize], work: &mut LinearWork) -> Score {
        let d = s.len();
        if d + 1 >= self.n {
            return Score::disqualified();
        }
        let n = self.n as f64;
        let rss = self.rss(s, work);
        let mut value = n * (rss / n).max(RSS_FLOOR).ln() + d as f64 * self.ln_n;
        if self.gamma != 0.0 {
            value += 2.0 * self.gamma * ln_choose(self.p, d);
        }
        Score::converged(value)
    }
}
