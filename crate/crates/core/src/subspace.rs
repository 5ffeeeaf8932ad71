//! Feature subspaces and the two laws used to draw them.
//!
//! A draw first picks a size `d` uniformly from `{1, ..., D}` and then a
//! size-`d` set of features: uniformly at random for
//! [`SubspaceDistribution::HierUniform`], or by successive weighted draws
//! without replacement for [`SubspaceDistribution::HierWeighted`].

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sumtree::SumTree;

/// A sorted set of distinct 0-based feature indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subspace(Vec<usize>);

impl Subspace {
    /// Builds a subspace from indices in any order. Duplicates are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("subspace", "must contain at least one feature"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("subspace", "duplicate feature index"));
        }
        Ok(Self(indices))
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl AsRef<[usize]> for Subspace {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubspaceDistribution {
    HierUniform {
        p: usize,
        d_max: usize,
    },
    HierWeighted {
        p: usize,
        d_max: usize,
        weights: Vec<f64>,
    },
}

fn check_sizes(p: usize, d_max: usize) -> Result<()> {
    if d_max < 1 {
        return Err(invalid("d_max", "must be at least 1"));
    }
    if d_max > p {
        return Err(invalid("d_max", format!("{d_max} exceeds feature count {p}")));
    }
    Ok(())
}

fn check_weights(p: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != p {
        return Err(invalid(
            "weights",
            format!("expected {p} weights, got {}", weights.len()),
        ));
    }
    if let Some(j) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(invalid(
            "weights",
            format!("weight {j} is {} (must be > 0)", weights[j]),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid("weights", format!("sum to {total}, not 1")));
    }
    Ok(())
}

impl SubspaceDistribution {
    pub fn uniform(p: usize, d_max: usize) -> Result<Self> {
        check_sizes(p, d_max)?;
        Ok(Self::HierUniform { p, d_max })
    }

    pub fn weighted(p: usize, d_max: usize, weights: Vec<f64>) -> Result<Self> {
        check_sizes(p, d_max)?;
        check_weights(p, &weights)?;
        Ok(Self::HierWeighted { p, d_max, weights })
    }

    pub fn p(&self) -> usize {
        match self {
            Self::HierUniform { p, .. } | Self::HierWeighted { p, .. } => *p,
        }
    }

    pub fn d_max(&self) -> usize {
        match self {
            Self::HierUniform { d_max, .. } | Self::HierWeighted { d_max, .. } => *d_max,
        }
    }

    /// A reusable sampler. The weighted law keeps a sum tree that each
    /// thread should own.
    pub fn sampler(&self) -> Sampler {
        match self {
            Self::HierUniform { p, d_max } => Sampler {
                p: *p,
                d_max: *d_max,
                tree: None,
                taken: Vec::new(),
            },
            Self::HierWeighted { p, d_max, weights } => Sampler {
                p: *p,
                d_max: *d_max,
                tree: Some(SumTree::new(weights)),
                taken: Vec::with_capacity(*d_max),
            },
        }
    }
}

/// Draws subspaces from a [`SubspaceDistribution`].
#[derive(Clone, Debug)]
pub struct Sampler {
    p: usize,
    d_max: usize,
    tree: Option<SumTree>,
    taken: Vec<(usize, f64)>,
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Subspace {
        let d = rng.random_range(1..=self.d_max);
        match &mut self.tree {
            None => {
                let mut picked = index::sample(rng, self.p, d).into_vec();
                picked.sort_unstable();
                Subspace::from_sorted(picked)
            }
            Some(tree) => {
                self.taken.clear();
                for _ in 0..d {
                    let mass = rng.random::<f64>() * tree.total();
                    let j = tree.find(mass);
                    self.taken.push((j, tree.get(j)));
                    tree.set(j, 0.0);
                }
                // Restore in reverse so every intermediate sum matches the
                // original tree exactly.
                for &(j, w) in self.taken.iter().rev() {
                    tree.set(j, w);
                }
                let mut picked: Vec<usize> = self.taken.iter().map(|&(j, _)| j).collect();
                picked.sort_unstable();
                Subspace::from_sorted(picked)
            }
        }
    }
}

pub fn sample_hier_uniform<R: Rng + ?Sized>(p: usize, d_max: usize, rng: &mut R) -> Result<Subspace> {
    Ok(SubspaceDistribution::uniform(p, d_max)?.sampler().sample(rng))
}

pub fn sample_hier_weighted<R: Rng + ?Sized>(
    p: usize,
    d_max: usize,
    weights: &[f64],
    rng: &mut R,
) -> Result<Subspace> {
    Ok(SubspaceDistribution::weighted(p, d_max, weights.to_vec())?
        .sampler()
        .sample(rng))
}

/// `ln C(n, k)` through log-gamma.
pub fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// Probability that a hierarchical-uniform subspace over `p` features with
/// maximum size `d_max` contains a fixed set of `s` features.
pub fn inclusion_probability(p: usize, d_max: usize, s: usize) -> Result<f64> {
    if s < 1 {
        return Err(invalid("s", "target set must be nonempty"));
    }
    check_sizes(p, d_max)?;
    if s > d_max {
        return Ok(0.0);
    }
    let total: f64 = (s..=d_max)
        .map(|d| (ln_choose(p - s, d - s) - ln_choose(p, d)).exp())
        .sum();
    Ok(total / d_max as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn binomial_sigma(prob: f64, n: usize) -> f64 {
        (prob * (1.0 - prob) / n as f64).sqrt()
    }

    #[test]
    fn single_feature_space() {
        let mut rng = RngStream::from_seed(3);
        for _ in 0..50 {
            assert_eq!(sample_hier_uniform(1, 1, &mut rng).unwrap().indices(), &[0]);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        let mut rng = RngStream::from_seed(3);
        assert!(sample_hier_uniform(4, 0, &mut rng).is_err());
        assert!(sample_hier_uniform(4, 5, &mut rng).is_err());
        assert!(sample_hier_weighted(3, 1, &[0.5, 0.5, 0.0], &mut rng).is_err());
        assert!(sample_hier_weighted(3, 1, &[0.5, 0.5, -0.1], &mut rng).is_err());
        assert!(sample_hier_weighted(3, 1, &[0.5, 0.5, 0.5], &mut rng).is_err());
        assert!(sample_hier_weighted(3, 1, &[0.5, 0.5], &mut rng).is_err());
    }

    #[test]
    fn uniform_inclusion_matches_closed_form() {
        let draws = 100_000;
        let mut rng = RngStream::from_seed(11);
        let mut sampler = SubspaceDistribution::uniform(4, 2).unwrap().sampler();
        let hits = (0..draws).filter(|_| sampler.sample(&mut rng).contains(0)).count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.375).abs() < 4.0 * binomial_sigma(0.375, draws));
    }

    #[test]
    fn uniform_size_is_uniform() {
        let draws = 100_000;
        let mut rng = RngStream::from_seed(12);
        let mut sampler = SubspaceDistribution::uniform(5, 3).unwrap().sampler();
        let hits = (0..draws).filter(|_| sampler.sample(&mut rng).len() == 2).count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 1.0 / 3.0).abs() < 4.0 * binomial_sigma(1.0 / 3.0, draws));
    }

    #[test]
    fn weighted_single_draw_with_flat_weights() {
        let draws = 100_000;
        let mut rng = RngStream::from_seed(13);
        let w = vec![1.0 / 3.0; 3];
        let mut sampler = SubspaceDistribution::weighted(3, 1, w).unwrap().sampler();
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let s = sampler.sample(&mut rng);
            assert_eq!(s.len(), 1);
            counts[s.indices()[0]] += 1;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 3.0).abs() < 4.0 * binomial_sigma(1.0 / 3.0, draws));
        }
    }

    #[test]
    fn weighted_full_size_takes_everything() {
        let mut rng = RngStream::from_seed(14);
        let mut sampler = SubspaceDistribution::weighted(3, 3, vec![0.8, 0.1, 0.1])
            .unwrap()
            .sampler();
        let mut saw_full = false;
        for _ in 0..1000 {
            let s = sampler.sample(&mut rng);
            if s.len() == 3 {
                assert_eq!(s.indices(), &[0, 1, 2]);
                saw_full = true;
            }
        }
        assert!(saw_full);
    }

    /// Exact P(0 in S) for successive weighted draws without replacement,
    /// by enumerating every ordered draw sequence.
    fn enumerate_weighted_inclusion(weights: &[f64], d_max: usize, target: usize) -> f64 {
        fn walk(weights: &[f64], taken: &mut Vec<usize>, depth: usize, prob: f64, target: usize) -> f64 {
            if depth == 0 {
                return if taken.contains(&target) { prob } else { 0.0 };
            }
            let rest: f64 = (0..weights.len())
                .filter(|j| !taken.contains(j))
                .map(|j| weights[j])
                .sum();
            let mut acc = 0.0;
            for j in 0..weights.len() {
                if taken.contains(&j) {
                    continue;
                }
                taken.push(j);
                acc += walk(weights, taken, depth - 1, prob * weights[j] / rest, target);
                taken.pop();
            }
            acc
        }
        (1..=d_max)
            .map(|d| walk(weights, &mut Vec::new(), d, 1.0 / d_max as f64, target))
            .sum()
    }

    #[test]
    fn weighted_inclusion_matches_enumeration() {
        let w = [0.7, 0.1, 0.1, 0.1];
        let exact = enumerate_weighted_inclusion(&w, 2, 0);
        // 0.5 * 0.7 + 0.5 * (0.7 + 3 * 0.1 * 0.7 / 0.9)
        assert!((exact - (0.35 + 0.5 * (0.7 + 0.7 / 3.0))).abs() < 1e-12);
        let draws = 200_000;
        let mut rng = RngStream::from_seed(15);
        let mut sampler = SubspaceDistribution::weighted(4, 2, w.to_vec()).unwrap().sampler();
        let hits = (0..draws).filter(|_| sampler.sample(&mut rng).contains(0)).count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - exact).abs() < 4.0 * binomial_sigma(exact, draws), "{freq} vs {exact}");
    }

    #[test]
    fn inclusion_probability_examples() {
        assert!((inclusion_probability(4, 2, 1).unwrap() - 0.375).abs() < 1e-15);
        assert!((inclusion_probability(10, 1, 1).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(inclusion_probability(10, 2, 3).unwrap(), 0.0);
        assert!(inclusion_probability(10, 2, 0).is_err());
    }

    #[test]
    fn inclusion_probability_closed_form_for_singletons() {
        for p in 1..=200 {
            for d in 1..=p {
                let got = inclusion_probability(p, d, 1).unwrap();
                let want = (d + 1) as f64 / (2 * p) as f64;
                assert!((got - want).abs() <= 1e-12 * want, "p={p} d={d}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn pair_inclusion_matches_monte_carlo() {
        let exact = inclusion_probability(6, 3, 2).unwrap();
        let draws = 1_000_000;
        let mut rng = RngStream::from_seed(16);
        let mut sampler = SubspaceDistribution::uniform(6, 3).unwrap().sampler();
        let hits = (0..draws)
            .filter(|_| {
                let s = sampler.sample(&mut rng);
                s.contains(0) && s.contains(1)
            })
            .count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - exact).abs() < 4.0 * binomial_sigma(exact, draws));
    }

    #[test]
    fn uniform_inclusion_is_exchangeable() {
        let (p, d, draws) = (8, 3, 100_000);
        let mut rng = RngStream::from_seed(17);
        let mut sampler = SubspaceDistribution::uniform(p, d).unwrap().sampler();
        let mut counts = vec![0usize; p];
        for _ in 0..draws {
            for &j in sampler.sample(&mut rng).indices() {
                counts[j] += 1;
            }
        }
        let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
        let max = freqs.iter().cloned().fold(f64::MIN, f64::max);
        let min = freqs.iter().cloned().fold(f64::MAX, f64::min);
        let prob = (d + 1) as f64 / (2 * p) as f64;
        assert!(max - min < 5.0 * binomial_sigma(prob, draws));
    }

    #[test]
    fn same_stream_same_sequence() {
        let w: Vec<f64> = (1..=20).map(|i| i as f64 / 210.0).collect();
        let dist = SubspaceDistribution::weighted(20, 5, w).unwrap();
        let run = || {
            let mut rng = RngStream::new(99, &[1, 2]);
            let mut s = dist.sampler();
            (0..200).map(|_| s.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn draws_satisfy_invariants(
                p in 1usize..60,
                d_frac in 0.0f64..1.0,
                raw in proptest::collection::vec(0.01f64..10.0, 60),
                seed in any::<u64>(),
            ) {
                let d_max = 1 + ((p - 1) as f64 * d_frac) as usize;
                let total: f64 = raw[..p].iter().sum();
                let weights: Vec<f64> = raw[..p].iter().map(|w| w / total).collect();
                let sum: f64 = weights.iter().sum();
                let mut rng = RngStream::from_seed(seed);
                let mut uni = SubspaceDistribution::uniform(p, d_max).unwrap().sampler();
                let mut wtd = if (sum - 1.0).abs() <= 1e-12 {
                    Some(SubspaceDistribution::weighted(p, d_max, weights).unwrap().sampler())
                } else {
                    None
                };
                for _ in 0..20 {
                    let mut draws = vec![uni.sample(&mut rng)];
                    if let Some(w) = wtd.as_mut() {
                        draws.push(w.sample(&mut rng));
                    }
                    for s in draws {
                        prop_assert!(!s.is_empty() && s.len() <= d_max);
                        prop_assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
                        prop_assert!(*s.indices().last().unwrap() < p);
                    }
                }
            }
        }
    }
}
