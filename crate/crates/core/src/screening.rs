//! Vanilla and iterative random-subspace screening.
//!
//! Each of `b1` groups draws `b2` subspaces and keeps the one with the
//! smallest criterion value; a feature's selected proportion `eta_hat` is
//! the fraction of group winners containing it. The iterative variant
//! re-weights the subspace law toward features with large proportions and
//! repeats.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::criteria::{CriterionSpec, Cutoff, Evaluator, Workspace};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::parallel::{map_indexed, with_workers};
use crate::rng::{tag, RngStream};
use crate::subspace::{Subspace, SubspaceDistribution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaseConfig {
    pub b1: usize,
    /// Defaults to `20 * floor(p / d_max)`.
    pub b2: Option<usize>,
    /// Defaults to `floor(sqrt(n))`; always clamped to `[1, min(p, n - 2)]`.
    pub d_max: Option<usize>,
    pub iterations: usize,
    pub c0: f64,
    /// Defaults to `floor(n / ln n)`.
    pub n_select: Option<usize>,
    pub seed: u64,
    pub criterion: CriterionSpec,
    /// Thread count; 0 uses every available core.
    #[serde(skip_serializing_if = "is_zero")]
    pub workers: usize,
    /// Test hook: every group scores all subsets of size `<= d_max` instead
    /// of sampling `b2` of them.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub exhaustive: bool,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl Default for RaseConfig {
    fn default() -> Self {
        Self {
            b1: 200,
            b2: None,
            d_max: None,
            iterations: 0,
            c0: 0.1,
            n_select: None,
            seed: 0,
            criterion: CriterionSpec::LinearBic,
            workers: 0,
            exhaustive: false,
        }
    }
}

/// A [`RaseConfig`] with every data-dependent default materialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub b1: usize,
    pub b2: usize,
    pub d_max: usize,
    pub iterations: usize,
    pub c0: f64,
    pub n_select: usize,
    pub seed: u64,
    pub criterion: CriterionSpec,
    pub exhaustive: bool,
}

impl RaseConfig {
    pub fn new(criterion: CriterionSpec) -> Self {
        Self {
            criterion,
            ..Self::default()
        }
    }

    pub fn resolve(&self, n: usize, p: usize) -> Result<ResolvedConfig> {
        if self.b1 == 0 {
            return Err(invalid("b1", "must be positive"));
        }
        if self.b2 == Some(0) {
            return Err(invalid("b2", "must be positive"));
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(invalid("c0", "must be positive"));
        }
        if self.d_max == Some(0) {
            return Err(invalid("d_max", "must be positive"));
        }
        let cap = p.min(n.saturating_sub(2)).max(1);
        let d_max = self.d_max.unwrap_or_else(|| (n as f64).sqrt().floor() as usize).clamp(1, cap);
        let b2 = self.b2.unwrap_or_else(|| (20 * (p / d_max)).max(1));
        let n_select = match self.n_select {
            Some(0) => return Err(invalid("n_select", "must be positive")),
            Some(k) if k > p => return Err(invalid("n_select", format!("{k} exceeds feature count {p}"))),
            Some(k) => k,
            None => ((n as f64 / (n as f64).ln()).floor() as usize).clamp(1, p),
        };
        Ok(ResolvedConfig {
            b1: self.b1,
            b2,
            d_max,
            iterations: self.iterations,
            c0: self.c0,
            n_select,
            seed: self.seed,
            criterion: self.criterion.clone(),
            exhaustive: self.exhaustive,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Every candidate of a group scored `+inf`; the smallest one was kept.
    AllDisqualified { iteration: usize, group: usize },
    /// Inner solvers hit their iteration limits this many times.
    SolverNotConverged { iteration: usize, evaluations: usize },
    /// No proportion exceeded the threshold; the next law is uniform.
    WeightsCollapsed { iteration: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub warnings: Vec<Warning>,
    pub elapsed_secs: f64,
    pub config: ResolvedConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub eta_hat: Vec<f64>,
    /// All features, best first.
    pub ranking: Vec<usize>,
    /// The first `n_select` entries of `ranking`.
    pub selected: Vec<usize>,
    pub eta_history: Vec<Vec<f64>>,
    pub chosen_subspaces: Vec<Subspace>,
    pub diagnostics: Diagnostics,
}

impl ScreeningResult {
    /// Equality of everything except wall-clock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.eta_hat == other.eta_hat
            && self.ranking == other.ranking
            && self.selected == other.selected
            && self.eta_history == other.eta_history
            && self.chosen_subspaces == other.chosen_subspaces
            && self.diagnostics.warnings == other.diagnostics.warnings
            && self.diagnostics.config == other.diagnostics.config
    }

    /// Checks the arithmetic invariants of the selected proportions: each is
    /// a multiple of `1/b1` in `[0, 1]` and they sum to at most `d_max`.
    pub fn check_invariants(&self) -> Result<()> {
        let b1 = self.diagnostics.config.b1 as f64;
        let d_max = self.diagnostics.config.d_max;
        for eta in std::iter::once(&self.eta_hat).chain(&self.eta_history) {
            let mut count_total = 0usize;
            for (j, &e) in eta.iter().enumerate() {
                let count = (e * b1).round();
                if !(0.0..=1.0).contains(&e) || count / b1 != e {
                    return Err(invalid("eta_hat", format!("entry {j} = {e} is not a multiple of 1/{b1}")));
                }
                count_total += count as usize;
            }
            if count_total > d_max * self.diagnostics.config.b1 {
                return Err(invalid("eta_hat", format!("sums to more than d_max = {d_max}")));
            }
        }
        let mut seen = vec![false; self.eta_hat.len()];
        for &j in &self.ranking {
            if j >= seen.len() || std::mem::replace(&mut seen[j], true) {
                return Err(invalid("ranking", "not a permutation"));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("ranking", "not a permutation"));
        }
        for w in self.ranking.windows(2) {
            if self.eta_hat[w[0]] < self.eta_hat[w[1]] {
                return Err(invalid("ranking", "not sorted by eta_hat"));
            }
        }
        if self.selected.len() != self.diagnostics.config.n_select {
            return Err(invalid("selected", "wrong size"));
        }
        Ok(())
    }
}

/// Total order on candidates: criterion value, then size, then indices.
fn candidate_cmp(a_value: f64, a: &Subspace, b_value: f64, b: &Subspace) -> Ordering {
    a_value
        .partial_cmp(&b_value)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.len().cmp(&b.len()))
        .then_with(|| a.indices().cmp(b.indices()))
}

struct GroupOutcome {
    winner: Subspace,
    value: f64,
    unconverged: usize,
}

fn pick_winner(evaluator: &Evaluator, ws: &mut Workspace, candidates: impl Iterator<Item = Subspace>) -> GroupOutcome {
    let mut best: Option<(f64, Subspace)> = None;
    let mut unconverged = 0;
    // A repeat cannot win: it already lost to an incumbent no worse than
    // the current one, or was the incumbent and has since been beaten.
    let mut seen = HashSet::new();
    for cand in candidates {
        if !seen.insert(cand.clone()) {
            continue;
        }
        let cutoff = match &best {
            Some((value, inc)) => Some(Cutoff {
                value: *value,
                inclusive: (cand.len(), cand.indices()) > (inc.len(), inc.indices()),
            }),
            None => None,
        };
        let Some(score) = evaluator.score_within(cand.indices(), ws, cutoff) else {
            continue;
        };
        if !score.converged {
            unconverged += 1;
        }
        let better = match &best {
            None => true,
            Some((value, inc)) => candidate_cmp(score.value, &cand, *value, inc) == Ordering::Less,
        };
        if better {
            best = Some((score.value, cand));
        }
    }
    let (value, winner) = best.expect("groups have at least one candidate");
    GroupOutcome {
        winner,
        value,
        unconverged,
    }
}

/// All subsets of `{0, ..., p-1}` with size in `1..=d_max`.
pub fn all_subspaces(p: usize, d_max: usize) -> impl Iterator<Item = Subspace> {
    (1..=d_max.min(p)).flat_map(move |d| {
        let mut idx: Vec<usize> = (0..d).collect();
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = Subspace::from_sorted(idx.clone());
            // Advance to the next combination in lexicographic order.
            let mut i = d;
            loop {
                if i == 0 {
                    done = true;
                    break;
                }
                i -= 1;
                if idx[i] < p - d + i {
                    idx[i] += 1;
                    for k in i + 1..d {
                        idx[k] = idx[k - 1] + 1;
                    }
                    break;
                }
            }
            Some(out)
        })
    })
}

/// Sampling weights for the next iteration: proportions above
/// `c0 / ln p` are kept, the rest are replaced by `c0 / p`, then the vector
/// is normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightUpdate {
    pub weights: Vec<f64>,
    /// True when no proportion cleared the threshold (uniform weights).
    pub collapsed: bool,
}

pub fn iteration_weights(eta_hat: &[f64], c0: f64) -> Result<WeightUpdate> {
    let p = eta_hat.len();
    if p < 3 {
        return Err(invalid("p", "iterative screening needs at least 3 features"));
    }
    if !(c0 > 0.0) {
        return Err(invalid("c0", "must be positive"));
    }
    let threshold = c0 / (p as f64).ln();
    let floor = c0 / p as f64;
    let mut collapsed = true;
    let raw: Vec<f64> = eta_hat
        .iter()
        .map(|&e| {
            if e > threshold {
                collapsed = false;
                e
            } else {
                floor
            }
        })
        .collect();
    let weights = if collapsed {
        vec![1.0 / p as f64; p]
    } else {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    };
    Ok(WeightUpdate { weights, collapsed })
}

/// Orders features by `eta_hat`, descending; equal values are ordered by a
/// uniform shuffle drawn from `rng`.
pub fn rank_features(eta_hat: &[f64], rng: &mut RngStream) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eta_hat.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| eta_hat[b].partial_cmp(&eta_hat[a]).unwrap_or(Ordering::Equal));
    order
}

/// The `n_select` features with the largest proportions, best first. Ties
/// straddling the cutoff are resolved by a shuffle drawn from `rng`.
pub fn select_top_n(eta_hat: &[f64], n_select: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut ranking = rank_features(eta_hat, rng);
    ranking.truncate(n_select.min(eta_hat.len()));
    ranking
}

/// Top `floor(alpha * d_max)` features (at most `p`), for `alpha > 1`.
pub fn select_top_alpha(eta_hat: &[f64], alpha: f64, d_max: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("must exceed 1, got {alpha}")));
    }
    let count = ((alpha * d_max as f64).floor() as usize).min(eta_hat.len());
    Ok(select_top_n(eta_hat, count, rng))
}

fn run_iteration(
    evaluator: &Evaluator,
    dist: &SubspaceDistribution,
    cfg: &ResolvedConfig,
    iteration: usize,
    warnings: &mut Vec<Warning>,
) -> (Vec<f64>, Vec<Subspace>) {
    let p = dist.p();
    let outcomes = map_indexed(
        cfg.b1,
        || (Workspace::default(), dist.sampler()),
        |(ws, sampler), group| {
            if cfg.exhaustive {
                pick_winner(evaluator, ws, all_subspaces(p, cfg.d_max))
            } else {
                let mut rng = RngStream::new(cfg.seed, &[tag::GROUP, iteration as u64, group as u64]);
                let draws = (0..cfg.b2).map(|_| sampler.sample(&mut rng));
                pick_winner(evaluator, ws, draws)
            }
        },
    );
    let mut counts = vec![0usize; p];
    let mut unconverged = 0;
    let mut winners = Vec::with_capacity(cfg.b1);
    for (group, out) in outcomes.into_iter().enumerate() {
        if out.value == f64::INFINITY {
            warnings.push(Warning::AllDisqualified { iteration, group });
        }
        unconverged += out.unconverged;
        for &j in out.winner.indices() {
            counts[j] += 1;
        }
        winners.push(out.winner);
    }
    if unconverged > 0 {
        warnings.push(Warning::SolverNotConverged {
            iteration,
            evaluations: unconverged,
        });
    }
    let eta = counts.iter().map(|&c| c as f64 / cfg.b1 as f64).collect();
    (eta, winners)
}

fn run(data: &Dataset, cfg: &RaseConfig) -> Result<ScreeningResult> {
    let clock = Stopwatch::start();
    let resolved = cfg.resolve(data.n(), data.p())?;
    let p = data.p();
    if resolved.iterations > 0 && p < 3 {
        return Err(invalid("p", "iterative screening needs at least 3 features"));
    }
    let evaluator = Evaluator::new(data, &resolved.criterion, resolved.seed)?;
    let mut warnings = Vec::new();
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(resolved.iterations + 1);
    let mut dist = SubspaceDistribution::uniform(p, resolved.d_max)?;
    let mut winners = Vec::new();
    for t in 0..=resolved.iterations {
        if t > 0 {
            let update = iteration_weights(history.last().expect("previous iteration"), resolved.c0)?;
            if update.collapsed {
                warnings.push(Warning::WeightsCollapsed { iteration: t });
                dist = SubspaceDistribution::uniform(p, resolved.d_max)?;
            } else {
                dist = SubspaceDistribution::weighted(p, resolved.d_max, update.weights)?;
            }
        }
        let (eta, chosen) = with_workers(cfg.workers, || run_iteration(&evaluator, &dist, &resolved, t, &mut warnings))?;
        history.push(eta);
        winners = chosen;
    }
    let eta_hat = history.last().cloned().expect("at least one iteration");
    let mut rng = RngStream::new(resolved.seed, &[tag::RANKING]);
    let ranking = rank_features(&eta_hat, &mut rng);
    let selected = ranking[..resolved.n_select].to_vec();
    Ok(ScreeningResult {
        eta_hat,
        ranking,
        selected,
        eta_history: history,
        chosen_subspaces: winners,
        diagnostics: Diagnostics {
            warnings,
            elapsed_secs: clock.seconds(),
            seed: resolved.seed,
            config: resolved,
        },
    })
}

/// Single-pass screening under the hierarchical uniform law.
pub fn rase_screen(data: &Dataset, cfg: &RaseConfig) -> Result<ScreeningResult> {
    if cfg.iterations != 0 {
        return Err(invalid("iterations", "vanilla screening runs with iterations = 0"));
    }
    run(data, cfg)
}

/// Screening with `cfg.iterations >= 1` re-weighting rounds.
pub fn rase_screen_iterative(data: &Dataset, cfg: &RaseConfig) -> Result<ScreeningResult> {
    if cfg.iterations == 0 {
        return Err(invalid("iterations", "iterative screening needs iterations >= 1"));
    }
    run(data, cfg)
}

/// Dispatches on `cfg.iterations`.
pub fn screen(data: &Dataset, cfg: &RaseConfig) -> Result<ScreeningResult> {
    run(data, cfg)
}
