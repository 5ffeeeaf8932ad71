//! Small dense kernels for the per-subspace fits.

/// Cholesky factorisation with diagonal pivoting of a symmetric positive
/// semi-definite matrix, kept for repeated solves.
///
/// Columns whose pivot falls below `rel_tol * max(diag(a))` are treated as
/// linearly dependent on the earlier ones and get a zero coefficient, which
/// yields a least-squares solution with the same residual as the
/// minimum-norm one.
#[derive(Clone, Debug, Default)]
pub struct Cholesky {
    m: usize,
    rank: usize,
    factor: Vec<f64>,
    perm: Vec<usize>,
    tmp: Vec<f64>,
}

impl Cholesky {
    /// Factors the row-major `m x m` matrix `a` and returns its numerical rank.
    ///
    /// A plain factorisation of the lower triangle is tried first; pivoting
    /// only runs when some pivot falls below the tolerance.
    pub fn factor(&mut self, a: &[f64], m: usize, rel_tol: f64) -> usize {
        debug_assert_eq!(a.len(), m * m);
        self.m = m;
        if self.factor_plain(a, m, rel_tol) {
            self.rank = m;
            return m;
        }
        self.factor_pivoted(a, m, rel_tol)
    }

    fn factor_plain(&mut self, a: &[f64], m: usize, rel_tol: f64) -> bool {
        self.factor.clear();
        self.factor.extend_from_slice(a);
        self.perm.clear();
        self.perm.extend(0..m);
        let max_diag = (0..m).map(|i| a[i * m + i]).fold(0.0f64, f64::max);
        if !(max_diag > 0.0) {
            return false;
        }
        let tol = rel_tol * max_diag;
        let l = &mut self.factor[..m * m];
        for j in 0..m {
            let (done, rest) = l.split_at_mut(j * m);
            let row_j = &mut rest[..m];
            // Row j of L from the rows above it.
            for k in 0..j {
                let row_k = &done[k * m..k * m + k + 1];
                let s = row_j[k] - dot(&row_j[..k], &row_k[..k]);
                row_j[k] = s / row_k[k];
            }
            let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
            if !(d > tol) {
                return false;
            }
            row_j[j] = d.sqrt();
        }
        true
    }

    fn factor_pivoted(&mut self, a: &[f64], m: usize, rel_tol: f64) -> usize {
        self.factor.clear();
        self.factor.extend_from_slice(a);
        self.perm.clear();
        self.perm.extend(0..m);
        let a = &mut self.factor;
        let max_diag = (0..m).map(|i| a[i * m + i]).fold(0.0f64, f64::max);
        if !(max_diag > 0.0) {
            self.rank = 0;
            return 0;
        }
        let tol = rel_tol * max_diag;
        let mut rank = m;
        for k in 0..m {
            let mut q = k;
            for i in k + 1..m {
                if a[i * m + i] > a[q * m + q] {
                    q = i;
                }
            }
            if !(a[q * m + q] > tol) {
                rank = k;
                break;
            }
            if q != k {
                // Symmetric swap of rows and columns k and q.
                for j in 0..m {
                    a.swap(k * m + j, q * m + j);
                }
                for i in 0..m {
                    a.swap(i * m + k, i * m + q);
                }
                self.perm.swap(k, q);
            }
            let pivot = a[k * m + k].sqrt();
            a[k * m + k] = pivot;
            for i in k + 1..m {
                a[i * m + k] /= pivot;
            }
            // The trailing block is kept symmetric so later pivot swaps read
            // current values from either triangle.
            for i in k + 1..m {
                let lik = a[i * m + k];
                for j in k + 1..=i {
                    let v = a[i * m + j] - lik * a[j * m + k];
                    a[i * m + j] = v;
                    a[j * m + i] = v;
                }
            }
        }
        self.rank = rank;
        rank
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Overwrites `b` with the solution for the last factored matrix.
    pub fn solve(&mut self, b: &mut [f64]) {
        let (m, rank, a) = (self.m, self.rank, &self.factor);
        debug_assert_eq!(b.len(), m);
        let x = &mut self.tmp;
        x.clear();
        x.extend(self.perm.iter().map(|&p| b[p]));
        // Forward then back substitution on the leading rank x rank block.
        for i in 0..rank {
            let mut s = x[i];
            for j in 0..i {
                s -= a[i * m + j] * x[j];
            }
            x[i] = s / a[i * m + i];
        }
        for i in (0..rank).rev() {
            let mut s = x[i];
            for j in i + 1..rank {
                s -= a[j * m + i] * x[j];
            }
            x[i] = s / a[i * m + i];
        }
        for v in x[rank..].iter_mut() {
            *v = 0.0;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = x[i];
        }
    }
}

/// Inner product with eight independent partial sums, which lets the
/// compiler vectorise the loop.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let (a, b) = (&a[..len], &b[..len]);
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for t in 0..8 {
            acc[t] += x[t] * y[t];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
