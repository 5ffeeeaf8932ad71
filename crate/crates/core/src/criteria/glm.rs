//! BIC and extended BIC of binary and multinomial logistic regression.
//!
//! Fits use damped Newton steps on the negative log-likelihood with the
//! last class as reference. Columns are standardized internally and every
//! coefficient is clamped to `[-COEF_CAP, COEF_CAP]`, which keeps separable
//! data finite.
//!
//! With a cutoff, two lower bounds on the attainable minimum are checked at
//! every iterate: the linearisation over the coefficient box, and the
//! entropy of a dual-feasible point obtained by projecting the current
//! residuals off the column space. The second is tight for subspaces that
//! explain little, so most hopeless candidates stop before the first
//! Hessian is built.

use crate::data::Dataset;
use crate::linalg::{dot, Cholesky};
use crate::subspace::ln_choose;

use super::{Cutoff, Score};

pub const COEF_CAP: f64 = 30.0;
pub const MAX_ITER: usize = 25;
pub const TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;

#[derive(Clone, Debug)]
pub struct GlmBic {
    n: usize,
    p: usize,
    classes: usize,
    cols: Vec<f64>,
    labels: Vec<usize>,
    /// Intercepts of the intercept-only fit, used as the starting point.
    base_logit: Vec<f64>,
    ln_n: f64,
    gamma: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GlmWork {
    x: Vec<f64>,
    eta: Vec<f64>,
    prob: Vec<f64>,
    resid: Vec<f64>,
    weighted: Vec<f64>,
    beta: Vec<f64>,
    trial: Vec<f64>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    step: Vec<f64>,
    chol: Cholesky,
    gram: Vec<f64>,
    gram_chol: Cholesky,
    dual: Vec<f64>,
    coef: Vec<f64>,
}

impl GlmBic {
    pub fn new(data: &Dataset, labels: &[usize], classes: usize, gamma: f64) -> Self {
        let n = data.n();
        let mut cols = data.columns().to_vec();
        for col in cols.chunks_exact_mut(n) {
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / n as f64).sqrt();
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            col.iter_mut().for_each(|v| *v = (*v - mean) * scale);
        }
        let mut counts = vec![0usize; classes];
        for &y in labels {
            counts[y] += 1;
        }
        let reference = counts[classes - 1].max(1) as f64;
        let base_logit = counts[..classes - 1]
            .iter()
            .map(|&c| (c.max(1) as f64 / reference).ln())
            .collect();
        Self {
            n,
            p: data.p(),
            classes,
            cols,
            labels: labels.to_vec(),
            base_logit,
            ln_n: (n as f64).ln(),
            gamma,
        }
    }

    fn penalty(&self, d: usize) -> f64 {
        let df = d * (self.classes - 1);
        let mut pen = df as f64 * self.ln_n;
        if self.gamma != 0.0 {
            pen += 2.0 * self.gamma * ln_choose(self.p, d);
        }
        pen
    }

    /// Negative log-likelihood at `beta`, filling `eta` and `prob`.
    /// `beta` is laid out class-major: coefficient `a` of class `k` sits at
    /// `k * q + a`, with `a = 0` the intercept.
    fn objective(&self, x: &[f64], q: usize, beta: &[f64], eta: &mut [f64], prob: &mut [f64]) -> f64 {
        let n = self.n;
        let m = self.classes - 1;
        for k in 0..m {
            let e = &mut eta[k * n..(k + 1) * n];
            let bk = &beta[k * q..(k + 1) * q];
            e.iter_mut().for_each(|v| *v = bk[0]);
            for a in 1..q {
                let coef = bk[a];
                if coef != 0.0 {
                    for (v, xv) in e.iter_mut().zip(&x[a * n..(a + 1) * n]) {
                        *v += coef * xv;
                    }
                }
            }
        }
        let mut nll = 0.0;
        for i in 0..n {
            let mut top = 0.0f64;
            for k in 0..m {
                top = top.max(eta[k * n + i]);
            }
            let mut total = (-top).exp();
            for k in 0..m {
                let ex = (eta[k * n + i] - top).exp();
                prob[k * n + i] = ex;
                total += ex;
            }
            let inv = 1.0 / total;
            for k in 0..m {
                prob[k * n + i] *= inv;
            }
            let lse = top + total.ln();
            let y = self.labels[i];
            let own = if y < m { eta[y * n + i] } else { 0.0 };
            nll += lse - own;
        }
        nll
    }

    /// Lower bound on the minimum negative log-likelihood over the
    /// coefficient box. For probabilities `pi` on the simplex the bound is
    /// `sum_i H(pi_i) - COEF_CAP * |X'(pi - Y)|_1`; taking the current
    /// probabilities with their residuals projected off the column space
    /// nearly zeroes the second term. Rows the projection pushes off the
    /// simplex are pulled back toward the current probabilities.
    fn dual_bound(&self, x: &[f64], q: usize, prob: &[f64], gram_chol: &mut Cholesky, dual: &mut [f64], coef: &mut [f64]) -> f64 {
        let n = self.n;
        let m = self.classes - 1;
        for k in 0..m {
            let dk = &mut dual[k * n..(k + 1) * n];
            dk.copy_from_slice(&prob[k * n..(k + 1) * n]);
            for (i, &y) in self.labels.iter().enumerate() {
                if y == k {
                    dk[i] -= 1.0;
                }
            }
            for (a, c) in coef.iter_mut().enumerate() {
                *c = dot(&x[a * n..(a + 1) * n], dk);
            }
            gram_chol.solve(coef);
            dk.iter_mut().for_each(|v| *v = 0.0);
            for (a, &c) in coef.iter().enumerate() {
                if c != 0.0 {
                    for (v, xv) in dk.iter_mut().zip(&x[a * n..(a + 1) * n]) {
                        *v += c * xv;
                    }
                }
            }
        }
        // dual holds the projected correction; turn it into probabilities.
        for i in 0..n {
            let mut scale = 1.0f64;
            let mut rest_p = 1.0;
            let mut rest_d = 0.0;
            for k in 0..m {
                let (p, d) = (prob[k * n + i], dual[k * n + i]);
                if d > p {
                    scale = scale.min(p / d);
                }
                rest_p -= p;
                rest_d -= d;
            }
            let rest_p = rest_p.max(0.0);
            if rest_d > rest_p {
                scale = scale.min(rest_p / rest_d);
            }
            for k in 0..m {
                let v = &mut dual[k * n + i];
                *v = (prob[k * n + i] - scale * *v).max(0.0);
            }
        }
        let entropy = self.entropy(dual);
        // Charge whatever remains of X'(pi - Y) at the box edge.
        let mut slack = 0.0;
        for k in 0..m {
            let dk = &mut dual[k * n..(k + 1) * n];
            for (i, &y) in self.labels.iter().enumerate() {
                if y == k {
                    dk[i] -= 1.0;
                }
            }
            for a in 0..q {
                slack += dot(&x[a * n..(a + 1) * n], dk).abs();
            }
        }
        entropy - COEF_CAP * slack
    }

    /// Total entropy of the rows of `pi`, the last class taking the rest.
    fn entropy(&self, pi: &[f64]) -> f64 {
        let n = self.n;
        let m = self.classes - 1;
        let mut total = 0.0;
        for i in 0..n {
            let mut rest = 1.0;
            for k in 0..m {
                let v = pi[k * n + i];
                rest -= v;
                if v > 0.0 {
                    total -= v * v.ln();
                }
            }
            if rest > 0.0 {
                total -= rest * rest.ln();
            }
        }
        total
    }

    /// Criterion value, or `None` once it provably exceeds `cutoff`.
    pub fn score_within(&self, s: &[usize], work: &mut GlmWork, cutoff: Option<Cutoff>) -> Option<Score> {
        let n = self.n;
        let d = s.len();
        let m = self.classes - 1;
        if d * m >= n {
            return Some(Score::disqualified());
        }
        let pen = self.penalty(d);
        if let Some(c) = cutoff {
            if c.exceeded(pen) {
                return None;
            }
        }
        let q = d + 1;
        let dim = m * q;

        work.x.clear();
        work.x.resize(n, 1.0);
        for &j in s {
            work.x.extend_from_slice(&self.cols[j * n..(j + 1) * n]);
        }
        work.eta.resize(m * n, 0.0);
        work.prob.resize(m * n, 0.0);
        work.resid.resize(m * n, 0.0);
        work.weighted.resize(n, 0.0);
        work.beta.resize(dim, 0.0);
        work.trial.resize(dim, 0.0);
        work.grad.resize(dim, 0.0);
        work.step.resize(dim, 0.0);
        work.hess.resize(dim * dim, 0.0);

        if cutoff.is_some() {
            let GlmWork { x, gram, gram_chol, dual, coef, .. } = work;
            gram.clear();
            gram.resize(q * q, 0.0);
            for a in 0..q {
                for b in 0..=a {
                    let g = dot(&x[a * n..(a + 1) * n], &x[b * n..(b + 1) * n]);
                    gram[a * q + b] = g;
                    gram[b * q + a] = g;
                }
            }
            gram_chol.factor(gram, q, 1e-11);
            dual.resize(m * n, 0.0);
            coef.resize(q, 0.0);
        }

        self.cold_start(q, &mut work.beta);
        let (nll, converged) = self.descend(work, q, pen, cutoff)?;
        Some(Score {
            value: 2.0 * nll + pen,
            converged,
        })
    }

    fn cold_start(&self, q: usize, beta: &mut [f64]) {
        beta.iter_mut().for_each(|v| *v = 0.0);
        for (k, &b) in self.base_logit.iter().enumerate() {
            beta[k * q] = b;
        }
    }

    /// Damped Newton from `work.beta`. Returns the final negative
    /// log-likelihood and whether it converged, or `None` once a lower bound
    /// shows the criterion exceeds `cutoff`.
    fn descend(&self, work: &mut GlmWork, q: usize, pen: f64, cutoff: Option<Cutoff>) -> Option<(f64, bool)> {
        let n = self.n;
        let m = self.classes - 1;
        let dim = m * q;
        let GlmWork {
            x,
            eta,
            prob,
            resid,
            weighted,
            beta,
            trial,
            grad,
            hess,
            step,
            chol,
            gram_chol,
            dual,
            coef,
            ..
        } = work;

        let mut nll = self.objective(x, q, beta, eta, prob);
        let mut converged = false;
        for _ in 0..MAX_ITER {
            // Gradient of the negative log-likelihood.
            for k in 0..m {
                let r = &mut resid[k * n..(k + 1) * n];
                r.copy_from_slice(&prob[k * n..(k + 1) * n]);
                for (i, &y) in self.labels.iter().enumerate() {
                    if y == k {
                        r[i] -= 1.0;
                    }
                }
                for a in 0..q {
                    grad[k * q + a] = dot(&x[a * n..(a + 1) * n], r);
                }
            }

            // Convexity over the coefficient box bounds the attainable
            // minimum from below; stop as soon as it cannot beat the cutoff.
            if let Some(c) = cutoff {
                let lin: f64 = dot(grad, beta);
                let l1: f64 = grad.iter().map(|g| g.abs()).sum();
                let mut floor = nll - lin - COEF_CAP * l1;
                floor = floor.max(self.dual_bound(x, q, prob, gram_chol, dual, coef));

                let bound = 2.0 * floor.max(0.0) + pen;
                if c.exceeded(bound - 1e-9 * (1.0 + bound.abs())) {
                    return None;
                }
            }

            // Hessian, block (k, l) = X' diag(pi_k (delta_kl - pi_l)) X.
            for k in 0..m {
                for l in k..m {
                    let pk = &prob[k * n..(k + 1) * n];
                    let pl = &prob[l * n..(l + 1) * n];
                    for a in 0..q {
                        let xa = &x[a * n..(a + 1) * n];
                        if k == l {
                            for i in 0..n {
                                weighted[i] = pk[i] * (1.0 - pk[i]) * xa[i];
                            }
                        } else {
                            for i in 0..n {
                                weighted[i] = -pk[i] * pl[i] * xa[i];
                            }
                        }
                        // Every block is X' D X with D diagonal, hence
                        // symmetric in (a, b).
                        for b in 0..=a {
                            let h = dot(weighted, &x[b * n..(b + 1) * n]);
                            let (ka, kb, la, lb) = (k * q + a, k * q + b, l * q + a, l * q + b);
                            hess[ka * dim + lb] = h;
                            hess[lb * dim + ka] = h;
                            hess[kb * dim + la] = h;
                            hess[la * dim + kb] = h;
                        }
                    }
                }
            }

            step.copy_from_slice(grad);
            chol.factor(hess, dim, 1e-12);
            chol.solve(step);

            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                for ((tr, b), s) in trial.iter_mut().zip(beta.iter()).zip(step.iter()) {
                    *tr = (b - t * s).clamp(-COEF_CAP, COEF_CAP);
                }
                let cand = self.objective(x, q, trial, eta, prob);
                if cand <= nll {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some(cand) => {
                    let gain = nll - cand;
                    beta.copy_from_slice(trial);
                    nll = cand;
                    if gain < TOL {
                        converged = true;
                        break;
                    }
                }
                None => {
                    // No descent along the Newton direction: numerically at
                    // the optimum. Restore eta/prob for the current beta.
                    nll = self.objective(x, q, beta, eta, prob);
                    converged = true;
                    break;
                }
            }
        }
        Some((nll, converged))
    }
}
