//! Subspace criteria. Every criterion maps a subspace to a real number,
//! smaller meaning better; over-parameterized subspaces score `+inf`.

mod glm;
mod knn;
mod linear;
mod svm;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Response, Task};
use crate::error::{invalid, Error, Result};
use crate::subspace::Subspace;

pub use glm::{GlmBic, GlmWork, COEF_CAP};
pub use knn::{KnnLoo, KnnWork};
pub use linear::{LinearBic, LinearWork, RSS_FLOOR};
pub use svm::{SvmCv, SvmWork};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriterionSpec {
    LinearBic,
    LinearEbic { gamma: f64 },
    GlmBic,
    GlmEbic { gamma: f64 },
    KnnLoo { k: usize },
    SvmCv { folds: usize, c_penalty: f64, epsilon: f64 },
}

impl CriterionSpec {
    pub const DEFAULT_GAMMA: f64 = 0.5;
    pub const DEFAULT_K: usize = 5;

    pub fn linear_ebic() -> Self {
        Self::LinearEbic { gamma: Self::DEFAULT_GAMMA }
    }

    pub fn glm_ebic() -> Self {
        Self::GlmEbic { gamma: Self::DEFAULT_GAMMA }
    }

    pub fn knn() -> Self {
        Self::KnnLoo { k: Self::DEFAULT_K }
    }

    pub fn svm() -> Self {
        Self::SvmCv {
            folds: 5,
            c_penalty: 1.0,
            epsilon: 0.1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LinearBic => "bic",
            Self::LinearEbic { .. } => "ebic",
            Self::GlmBic => "glm-bic",
            Self::GlmEbic { .. } => "glm-ebic",
            Self::KnnLoo { .. } => "knn",
            Self::SvmCv { .. } => "svm",
        }
    }

    /// Parses a criterion name with default hyperparameters.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "bic" => Self::LinearBic,
            "ebic" => Self::linear_ebic(),
            "glm-bic" => Self::GlmBic,
            "glm-ebic" => Self::glm_ebic(),
            "knn" => Self::knn(),
            "svm" => Self::svm(),
            _ => return None,
        })
    }

    /// Checks hyperparameters and compatibility with a task.
    pub fn check(&self, task: Task, n: usize) -> Result<()> {
        let unsupported = || Error::UnsupportedCriterion {
            criterion: self.name().to_string(),
            task: task.to_string(),
        };
        match *self {
            Self::LinearBic | Self::LinearEbic { .. } if task != Task::Regression => return Err(unsupported()),
            Self::GlmBic | Self::GlmEbic { .. } if task == Task::Regression => return Err(unsupported()),
            Self::SvmCv { .. } if matches!(task, Task::Classification(k) if k > 2) => return Err(unsupported()),
            _ => {}
        }
        match *self {
            Self::LinearEbic { gamma } | Self::GlmEbic { gamma } if !(0.0..=1.0).contains(&gamma) => {
                Err(invalid("gamma", format!("{gamma} outside [0, 1]")))
            }
            Self::KnnLoo { k } if k == 0 || k >= n => Err(invalid("k", format!("need 1 <= k < n = {n}, got {k}"))),
            Self::SvmCv {
                folds,
                c_penalty,
                epsilon,
            } => {
                if folds < 2 || n < 2 * folds {
                    Err(invalid("folds", format!("need 2 <= folds <= n/2, got {folds} for n = {n}")))
                } else if !(c_penalty > 0.0) {
                    Err(invalid("c_penalty", "must be positive"))
                } else if !(epsilon >= 0.0) {
                    Err(invalid("epsilon", "must be non-negative"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// One criterion evaluation. `converged` is false when an inner solver
/// stopped at its iteration limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub value: f64,
    pub converged: bool,
}

impl Score {
    pub fn converged(value: f64) -> Self {
        Self { value, converged: true }
    }

    pub fn disqualified() -> Self {
        Self::converged(f64::INFINITY)
    }
}

/// Early-abandon threshold. An evaluation may stop once a lower bound on
/// its final value exceeds `value`, or reaches it when `inclusive` (the
/// candidate would lose a tie).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub value: f64,
    pub inclusive: bool,
}

impl Cutoff {
    #[inline]
    pub fn exceeded(&self, lower_bound: f64) -> bool {
        lower_bound > self.value || (self.inclusive && lower_bound >= self.value)
    }
}

/// A criterion prepared for one dataset.
#[derive(Clone, Debug)]
pub enum Evaluator {
    Linear(LinearBic),
    Glm(GlmBic),
    Knn(KnnLoo),
    Svm(SvmCv),
}

/// Per-thread scratch space for [`Evaluator`].
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    linear: LinearWork,
    glm: GlmWork,
    knn: KnnWork,
    svm: SvmWork,
}

impl Evaluator {
    /// `seed` only affects criteria with internal randomness (the SVM fold
    /// assignment).
    pub fn new(data: &Dataset, spec: &CriterionSpec, seed: u64) -> Result<Self> {
        spec.check(data.task(), data.n())?;
        Ok(match (spec, data.response()) {
            (CriterionSpec::LinearBic, Response::Regression(y)) => Self::Linear(LinearBic::new(data, y, 0.0)),
            (CriterionSpec::LinearEbic { gamma }, Response::Regression(y)) => {
                Self::Linear(LinearBic::new(data, y, *gamma))
            }
            (CriterionSpec::GlmBic, Response::Classification { labels, classes }) => {
                Self::Glm(GlmBic::new(data, labels, *classes, 0.0))
            }
            (CriterionSpec::GlmEbic { gamma }, Response::Classification { labels, classes }) => {
                Self::Glm(GlmBic::new(data, labels, *classes, *gamma))
            }
            (CriterionSpec::KnnLoo { k }, _) => Self::Knn(KnnLoo::new(data, *k)),
            (
                CriterionSpec::SvmCv {
                    folds,
                    c_penalty,
                    epsilon,
                },
                _,
            ) => Self::Svm(SvmCv::new(data, *folds, *c_penalty, *epsilon, seed)),
            _ => unreachable!("task compatibility checked above"),
        })
    }

    pub fn score(&self, s: &[usize], ws: &mut Workspace) -> Score {
        self.score_within(s, ws, None)
            .expect("evaluation without cutoff always completes")
    }

    /// Like [`score`](Self::score) but may return `None` once the value is
    /// certain to exceed `cutoff`.
    pub fn score_within(&self, s: &[usize], ws: &mut Workspace, cutoff: Option<Cutoff>) -> Option<Score> {
        let score = match self {
            Self::Linear(c) => Some(c.score(s, &mut ws.linear)),
            Self::Glm(c) => c.score_within(s, &mut ws.glm, cutoff),
            Self::Knn(c) => c.score_within(s, &mut ws.knn, cutoff),
            Self::Svm(c) => c.score_within(s, &mut ws.svm, cutoff),
        }?;
        Some(if score.value.is_nan() {
            Score {
                value: f64::INFINITY,
                ..score
            }
        } else {
            score
        })
    }
}

fn evaluate(data: &Dataset, spec: CriterionSpec, s: &Subspace) -> Result<f64> {
    if let Some(&j) = s.indices().last() {
        if j >= data.p() {
            return Err(invalid("subspace", format!("feature {j} out of range for p = {}", data.p())));
        }
    }
    let eval = Evaluator::new(data, &spec, 0)?;
    Ok(eval.score(s.indices(), &mut Workspace::default()).value)
}

/// `n log(RSS/n) + |s| log n` of the OLS fit with intercept.
pub fn cr_linear_bic(data: &Dataset, s: &Subspace) -> Result<f64> {
    evaluate(data, CriterionSpec::LinearBic, s)
}

/// Linear BIC plus `2 gamma log C(p, |s|)`.
pub fn cr_linear_ebic(data: &Dataset, s: &Subspace, gamma: f64) -> Result<f64> {
    evaluate(data, CriterionSpec::LinearEbic { gamma }, s)
}

/// `-2 loglik + |s|(K-1) log n` of the (multinomial) logistic fit.
pub fn cr_glm_bic(data: &Dataset, s: &Subspace) -> Result<f64> {
    evaluate(data, CriterionSpec::GlmBic, s)
}

pub fn cr_glm_ebic(data: &Dataset, s: &Subspace, gamma: f64) -> Result<f64> {
    evaluate(data, CriterionSpec::GlmEbic { gamma }, s)
}

/// Leave-one-out MSE (regression) or misclassification rate.
pub fn cr_knn_loo(data: &Dataset, s: &Subspace, k: usize) -> Result<f64> {
    evaluate(data, CriterionSpec::KnnLoo { k }, s)
}

/// Cross-validated RBF-SVM error; folds are drawn from `seed`.
pub fn cr_svm_cv(data: &Dataset, s: &Subspace, spec: &CriterionSpec, seed: u64) -> Result<f64> {
    if !matches!(spec, CriterionSpec::SvmCv { .. }) {
        return Err(invalid("spec", "expected an SVM criterion"));
    }
    if let Some(&j) = s.indices().last() {
        if j >= data.p() {
            return Err(invalid("subspace", format!("feature {j} out of range for p = {}", data.p())));
        }
    }
    let eval = Evaluator::new(data, spec, seed)?;
    Ok(eval.score(s.indices(), &mut Workspace::default()).value)
}
