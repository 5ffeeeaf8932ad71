/// Binary sum tree over non-negative weights.
///
/// Leaves hold the weights; every internal node holds the sum of its two
/// children. Updates recompute ancestors from their children instead of
/// propagating deltas, so zeroing a leaf and restoring it later leaves the
/// tree bit-for-bit unchanged.
#[derive(Clone, Debug)]
pub struct SumTree {
    nodes: Vec<f64>,
    leaves: usize,
    len: usize,
}

impl SumTree {
    pub fn new(weights: &[f64]) -> Self {
        let len = weights.len();
        let leaves = len.max(1).next_power_of_two();
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + len].copy_from_slice(weights);
        for i in (1..leaves).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self { nodes, leaves, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, ix: usize) -> f64 {
        self.nodes[self.leaves + ix]
    }

    pub fn set(&mut self, ix: usize, value: f64) {
        let mut i = self.leaves + ix;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Returns the leaf whose cumulative-weight interval contains `mass`,
    /// where `0 <= mass < total()`. Never returns a zero-weight leaf while
    /// the total is positive.
    pub fn find(&self, mass: f64) -> usize {
        let mut i = 1;
        let mut rest = mass;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            let right = self.nodes[2 * i + 1];
            if (rest < left || right <= 0.0) && left > 0.0 {
                i *= 2;
            } else {
                rest -= left;
                i = 2 * i + 1;
            }
        }
        i - self.leaves
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn find_respects_cumulative_bounds() {
        let tree = SumTree::new(&[1.0, 0.0, 2.0, 1.0, 4.0]);
        assert_eq!(tree.total(), 8.0);
        assert_eq!(tree.find(0.0), 0);
        assert_eq!(tree.find(0.999), 0);
        assert_eq!(tree.find(1.0), 2);
        assert_eq!(tree.find(2.999), 2);
        assert_eq!(tree.find(3.5), 3);
        assert_eq!(tree.find(4.0), 4);
        assert_eq!(tree.find(7.999), 4);
    }

    #[test]
    fn rounding_past_total_lands_on_positive_leaf() {
        let tree = SumTree::new(&[0.5, 0.25, 0.0, 0.0]);
        assert_eq!(tree.find(10.0), 1);
    }

    #[test]
    fn zero_and_restore_is_exact() {
        let w = [0.1, 0.7, 1e-4, 0.3, 0.123456789, 2.5, 0.0];
        let original = SumTree::new(&w);
        let mut tree = original.clone();
        for ix in [3, 0, 5] {
            tree.set(ix, 0.0);
        }
        for ix in [5, 3, 0] {
            tree.set(ix, w[ix]);
        }
        assert_eq!(tree.nodes, original.nodes);
    }
}
