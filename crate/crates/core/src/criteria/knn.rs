//! Leave-one-out k-nearest-neighbour error.
//!
//! Distances are squared Euclidean over the subspace columns, summed in
//! increasing feature order. Equal distances prefer the smaller row index;
//! equal vote counts prefer the smaller label.

use crate::data::{Dataset, Response};

use super::{Cutoff, Score};

#[derive(Clone, Debug)]
enum Target {
    Regression(Vec<f64>),
    Classes { labels: Vec<usize>, classes: usize },
}

#[derive(Clone, Debug)]
pub struct KnnLoo {
    n: usize,
    k: usize,
    cols: Vec<f64>,
    target: Target,
}

#[derive(Clone, Debug, Default)]
pub struct KnnWork {
    row: Vec<f64>,
    /// Running `k` nearest of every row, `(distance, index)` ascending.
    nearest: Vec<(f64, usize)>,
    filled: Vec<usize>,
    /// Largest distance that can still enter each row's list.
    reach: Vec<f64>,
    votes: Vec<usize>,
}

/// Offers `cand` to a sorted list of at most `k` entries, keeping the
/// lexicographically smallest `(distance, index)` pairs. Returns the
/// distance a later candidate must not exceed to have a chance.
#[inline]
fn offer(list: &mut [(f64, usize)], filled: &mut usize, cand: (f64, usize)) -> f64 {
    let k = list.len();
    let worse = |a: (f64, usize), b: (f64, usize)| a.0 > b.0 || (a.0 == b.0 && a.1 > b.1);
    let mut pos = if *filled < k {
        *filled += 1;
        *filled - 1
    } else if worse(list[k - 1], cand) {
        k - 1
    } else {
        return list[k - 1].0;
    };
    while pos > 0 && worse(list[pos - 1], cand) {
        list[pos] = list[pos - 1];
        pos -= 1;
    }
    list[pos] = cand;
    if *filled < k {
        f64::INFINITY
    } else {
        list[k - 1].0
    }
}

impl KnnLoo {
    pub fn new(data: &Dataset, k: usize) -> Self {
        let target = match data.response() {
            Response::Regression(y) => Target::Regression(y.clone()),
            Response::Classification { labels, classes } => Target::Classes {
                labels: labels.clone(),
                classes: *classes,
            },
        };
        Self {
            n: data.n(),
            k,
            cols: data.columns().to_vec(),
            target,
        }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    /// Squared distances from row `i` to rows `i+1..n`, written to `out[i+1..n]`.
    fn fill_distances(&self, s: &[usize], i: usize, out: &mut [f64]) {
        let out = &mut out[i + 1..self.n];
        out.iter_mut().for_each(|v| *v = 0.0);
        for &j in s {
            let col = self.col(j);
            let xi = col[i];
            for (acc, xv) in out.iter_mut().zip(&col[i + 1..]) {
                let diff = xi - xv;
                *acc += diff * diff;
            }
        }
    }

    /// Every pair is visited once, from its smaller row, and offered to
    /// both rows' lists; a row's neighbours are final once the row itself
    /// has been visited, so its error can be counted right away.
    pub fn score_within(&self, s: &[usize], work: &mut KnnWork, cutoff: Option<Cutoff>) -> Option<Score> {
        let n = self.n;
        let k = self.k;
        work.row.resize(n, 0.0);
        work.nearest.clear();
        work.nearest.resize(n * k, (f64::INFINITY, usize::MAX));
        work.filled.clear();
        work.filled.resize(n, 0);
        work.reach.clear();
        work.reach.resize(n, f64::INFINITY);
        if let Target::Classes { classes, .. } = &self.target {
            work.votes.resize(*classes, 0);
        }
        let mut loss = 0.0;
        for i in 0..n {
            self.fill_distances(s, i, &mut work.row);
            let (done, rest) = work.nearest.split_at_mut((i + 1) * k);
            let own = &mut done[i * k..];
            let (own_filled, later_filled) = work.filled.split_at_mut(i + 1);
            let own_filled = &mut own_filled[i];
            let mut own_reach = work.reach[i];
            let later_reach = &mut work.reach[i + 1..n];
            for (off, &d) in work.row[i + 1..n].iter().enumerate() {
                if d <= own_reach {
                    own_reach = offer(own, own_filled, (d, i + 1 + off));
                }
                if d <= later_reach[off] {
                    later_reach[off] = offer(&mut rest[off * k..(off + 1) * k], &mut later_filled[off], (d, i));
                }
            }
            let nearest = &done[i * k..];

            match &self.target {
                Target::Regression(y) => {
                    let mut sum = 0.0;
                    for &(_, j) in nearest.iter() {
                        sum += y[j];
                    }
                    let err = y[i] - sum / k as f64;
                    loss += err * err;
                }
                Target::Classes { labels, .. } => {
                    work.votes.iter_mut().for_each(|v| *v = 0);
                    for &(_, j) in nearest.iter() {
                        work.votes[labels[j]] += 1;
                    }
                    let mut pred = 0;
                    for (label, &v) in work.votes.iter().enumerate() {
                        if v > work.votes[pred] {
                            pred = label;
                        }
                    }
                    if pred != labels[i] {
                        loss += 1.0;
                    }
                }
            }
            if let Some(c) = cutoff {
                if c.exceeded(loss / n as f64) {
                    return None;
                }
            }
        }
        Some(Score::converged(loss / n as f64))
    }
}
