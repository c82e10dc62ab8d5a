//! Sampling an island with probability proportional to `(t - birth)^p`.

use crate::branching::binom;

/// Fenwick tree over birth times holding `sum birth^k` for `k = 0..=p`, so
/// that prefix sums of `(t - birth)^p` are available for any `t`.
#[derive(Debug, Clone)]
pub struct PowerSumTree {
    p: usize,
    /// Node `i` (1-based) stores `p + 1` sums at `tree[i * (p + 1)..]`.
    tree: Vec<f64>,
    len: usize,
}

impl PowerSumTree {
    pub fn new(p: usize) -> Self {
        PowerSumTree { p, tree: vec![0.0; p + 1], len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, birth: f64) {
        let w = self.p + 1;
        self.len += 1;
        let i = self.len;
        // A new node covers (i - lowbit(i), i]; rebuild it from its children.
        let mut node = [0.0f64; 16];
        let mut pw = 1.0;
        for v in node.iter_mut().take(w) {
            *v = pw;
            pw *= birth;
        }
        let low = i & i.wrapping_neg();
        let mut step = 1;
        while step < low {
            let child = i - step;
            for k in 0..w {
                node[k] += self.tree[child * w + k];
            }
            step <<= 1;
        }
        self.tree.extend_from_slice(&node[..w]);
    }

    /// Coefficients `c_k` with `(t - b)^p = sum_k c_k b^k`.
    fn coefs(&self, t: f64) -> [f64; 16] {
        let mut c = [0.0; 16];
        for (k, ck) in c.iter_mut().enumerate().take(self.p + 1) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *ck = sign * binom(self.p, k) * t.powi((self.p - k) as i32);
        }
        c
    }

    fn node_weight(&self, node: usize, c: &[f64; 16]) -> f64 {
        let w = self.p + 1;
        let s = &self.tree[node * w..node * w + w];
        s.iter().zip(c).map(|(a, b)| a * b).sum::<f64>().max(0.0)
    }

    /// `sum_j (t - birth_j)^p` over all entries.
    pub fn total(&self, t: f64) -> f64 {
        let c = self.coefs(t);
        let mut i = self.len;
        let mut sum = 0.0;
        while i > 0 {
            sum += self.node_weight(i, &c);
            i &= i - 1;
        }
        sum
    }

    /// Index `j` of the entry whose cumulative weight interval contains `target`,
    /// for `0 <= target < total(t)`.
    pub fn find(&self, t: f64, mut target: f64) -> usize {
        let c = self.coefs(t);
        let mut pos = 0;
        let mut step = if self.len == 0 { 0 } else { 1 << (usize::BITS - 1 - self.len.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= self.len {
                let w = self.node_weight(next, &c);
                if w <= target {
                    target -= w;
                    pos = next;
                }
            }
            step >>= 1;
        }
        pos.min(self.len.saturating_sub(1))
    }
}
