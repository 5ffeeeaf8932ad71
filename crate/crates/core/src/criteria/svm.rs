//! K-fold cross-validated RBF support vector machines: C-SVC for binary
//! labels and epsilon-SVR for real responses, both trained by SMO with
//! second-order working-set selection.

use rand::seq::SliceRandom;

use crate::data::{Dataset, Response};
use crate::rng::{tag, RngStream};

use super::{Cutoff, Score};

const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;
/// SMO gives up after this many passes, a pass being one update per variable.
const MAX_PASSES: usize = 10_000;

#[derive(Clone, Debug)]
enum Target {
    Regression(Vec<f64>),
    Binary(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct SvmCv {
    n: usize,
    cols: Vec<f64>,
    target: Target,
    folds: Vec<Vec<usize>>,
    c_penalty: f64,
    epsilon: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SvmWork {
    train: Vec<usize>,
    kernel: Vec<f64>,
}

/// Result of one SMO run on `min 0.5 a'Qa + p'a, y'a = const, 0 <= a <= C`.
#[derive(Clone, Debug)]
pub(crate) struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub objective: f64,
    pub converged: bool,
}

/// SMO over a dual whose Hessian is `Q_ij = y_i y_j K(i mod m, j mod m)`,
/// with `kernel` the `m x m` Gram matrix. The variable count `l` may be `m`
/// (classification) or `2m` (regression).
pub(crate) fn smo(kernel: &[f64], m: usize, y: &[f64], linear: &[f64], c: f64) -> SmoSolution {
    let l = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[(i % m) * m + (j % m)];
    let mut alpha = vec![0.0; l];
    let mut grad = linear.to_vec();
    let max_iter = MAX_PASSES.saturating_mul(l.max(1));
    let mut converged = false;
    for _ in 0..max_iter {
        // Maximal violating pair, second-order choice of j.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..l {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..l {
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel != usize::MAX {
                let b = gmax - v;
                if b > 0.0 {
                    let mut a = q(i_sel, i_sel) + q(t, t) - 2.0 * y[i_sel] * y[t] * q(i_sel, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let gain = -(b * b) / a;
                    if gain <= best_gain {
                        best_gain = gain;
                        j_sel = t;
                    }
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax - gmin < KKT_TOL {
            converged = true;
            break;
        }
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..l {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    let objective = 0.5 * (0..l).map(|t| alpha[t] * (grad[t] + linear[t])).sum::<f64>();
    SmoSolution {
        alpha,
        rho,
        objective,
        converged,
    }
}

impl SvmCv {
    pub fn new(data: &Dataset, folds: usize, c_penalty: f64, epsilon: f64, seed: u64) -> Self {
        let n = data.n();
        let mut rng = RngStream::new(seed, &[tag::FOLDS]);
        let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); folds];
        let target = match data.response() {
            Response::Regression(y) => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                for (f, chunk) in assignment.iter_mut().enumerate() {
                    let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
                    chunk.extend_from_slice(&order[lo..hi]);
                }
                Target::Regression(y.clone())
            }
            Response::Classification { labels, classes } => {
                let mut next = 0;
                for class in 0..*classes {
                    let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                    members.shuffle(&mut rng);
                    for i in members {
                        assignment[next % folds].push(i);
                        next += 1;
                    }
                }
                Target::Binary(labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect())
            }
        };
        for f in assignment.iter_mut() {
            f.sort_unstable();
        }
        Self {
            n,
            cols: data.columns().to_vec(),
            target,
            folds: assignment,
            c_penalty,
            epsilon,
        }
    }

    #[inline]
    fn value(&self, j: usize, i: usize) -> f64 {
        self.cols[j * self.n + i]
    }

    fn sq_dist(&self, s: &[usize], a: usize, b: usize) -> f64 {
        s.iter()
            .map(|&j| {
                let d = self.value(j, a) - self.value(j, b);
                d * d
            })
            .sum()
    }

    /// `1 / (|s| * mean column variance)` over the training rows.
    fn kernel_width(&self, s: &[usize], train: &[usize]) -> f64 {
        let m = train.len() as f64;
        let mut total = 0.0;
        for &j in s {
            let mean = train.iter().map(|&i| self.value(j, i)).sum::<f64>() / m;
            total += train.iter().map(|&i| (self.value(j, i) - mean).powi(2)).sum::<f64>() / m;
        }
        let mean_var = total / s.len() as f64;
        if mean_var > 0.0 {
            1.0 / (s.len() as f64 * mean_var)
        } else {
            1.0
        }
    }

    pub fn score_within(&self, s: &[usize], work: &mut SvmWork, cutoff: Option<Cutoff>) -> Option<Score> {
        let mut loss = 0.0;
        let mut converged = true;
        for (f, held_out) in self.folds.iter().enumerate() {
            work.train.clear();
            for (g, fold) in self.folds.iter().enumerate() {
                if g != f {
                    work.train.extend_from_slice(fold);
                }
            }
            let train = &work.train;
            let m = train.len();
            let gamma = self.kernel_width(s, train);
            work.kernel.resize(m * m, 0.0);
            for a in 0..m {
                work.kernel[a * m + a] = 1.0;
                for b in 0..a {
                    let k = (-gamma * self.sq_dist(s, train[a], train[b])).exp();
                    work.kernel[a * m + b] = k;
                    work.kernel[b * m + a] = k;
                }
            }
            match &self.target {
                Target::Binary(y) => {
                    let ys: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                    let sol = smo(&work.kernel, m, &ys, &vec![-1.0; m], self.c_penalty);
                    converged &= sol.converged;
                    for &i in held_out {
                        let mut dec = -sol.rho;
                        for (a, &t) in train.iter().enumerate() {
                            if sol.alpha[a] != 0.0 {
                                dec += ys[a] * sol.alpha[a] * (-gamma * self.sq_dist(s, t, i)).exp();
                            }
                        }
                        let pred = if dec > 0.0 { 1.0 } else { -1.0 };
                        if pred != y[i] {
                            loss += 1.0;
                        }
                    }
                }
                Target::Regression(z) => {
                    let mut ys = vec![1.0; 2 * m];
                    let mut lin = vec![0.0; 2 * m];
                    for (a, &t) in train.iter().enumerate() {
                        ys[m + a] = -1.0;
                        lin[a] = self.epsilon - z[t];
                        lin[m + a] = self.epsilon + z[t];
                    }
                    let sol = smo(&work.kernel, m, &ys, &lin, self.c_penalty);
                    converged &= sol.converged;
                    for &i in held_out {
                        let mut pred = -sol.rho;
                        for (a, &t) in train.iter().enumerate() {
                            let coef = sol.alpha[a] - sol.alpha[m + a];
                            if coef != 0.0 {
                                pred += coef * (-gamma * self.sq_dist(s, t, i)).exp();
                            }
                        }
                        loss += (z[i] - pred).powi(2);
                    }
                }
            }
            if let Some(c) = cutoff {
                if c.exceeded(loss / self.n as f64) {
                    return None;
                }
            }
        }
        Some(Score {
            value: loss / self.n as f64,
            converged,
        })
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }
}
