//! Marginal correlation screening (SIS), the comparison baseline.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRanking {
    /// Larger is more important.
    pub scores: Vec<f64>,
    /// Features by descending score; ties keep the smaller index first.
    pub ranking: Vec<usize>,
    /// Set when the response has zero variance and every score is 0.
    pub degenerate_response: bool,
}

/// Single-pass (Welford) centered co-moments of two equal-length slices.
fn comoments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mut mx, mut my) = (0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let k = (i + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / k;
        my += dy / k;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    (sxx, syy, sxy)
}

/// Ranks features by absolute Pearson correlation with the response.
/// Classification labels are used as their integer codes.
pub fn sis_rank(data: &Dataset) -> BaselineRanking {
    let y = data.response_values();
    let (_, syy, _) = comoments(&y, &y);
    let degenerate_response = !(syy > 0.0);
    let scores: Vec<f64> = (0..data.p())
        .map(|j| {
            if degenerate_response {
                return 0.0;
            }
            let (sxx, syy, sxy) = comoments(data.column(j), &y);
            if sxx > 0.0 {
                (sxy / (sxx * syy).sqrt()).abs().min(1.0)
            } else {
                0.0
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..data.p()).collect();
    ranking.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));
    BaselineRanking {
        scores,
        ranking,
        degenerate_response,
    }
}
