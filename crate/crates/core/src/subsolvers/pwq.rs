//! Exact minimization of the strictly convex piecewise quadratic
//! `f(x) = w Σ_i |x − b_i| + (σ/2) x² − c x`.

/// Breakpoints sorted once, with prefix sums so that `Σ|x − b_i|` costs
/// `O(log n)` at any `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedBreakpoints {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl SortedBreakpoints {
    pub fn new(mut b: Vec<f64>) -> Self {
        b.sort_by(|a, c| a.total_cmp(c));
        let mut prefix = Vec::with_capacity(b.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in &b {
            acc += v;
            prefix.push(acc);
        }
        SortedBreakpoints { sorted: b, prefix }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.sorted
    }

    /// `Σ_i |x − b_i|` given that exactly `below` breakpoints are `≤ x`.
    fn abs_sum_split(&self, x: f64, below: usize) -> f64 {
        let n = self.sorted.len();
        let total = self.prefix[n];
        let lower = below as f64 * x - self.prefix[below];
        let upper = (total - self.prefix[below]) - (n - below) as f64 * x;
        lower + upper
    }

    pub fn abs_sum(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&b| b <= x);
        self.abs_sum_split(x, below)
    }

    pub fn value(&self, weight: f64, sigma: f64, c: f64, x: f64) -> f64 {
        weight * self.abs_sum(x) + 0.5 * sigma * x * x - c * x
    }

    /// Global minimizer of `f`. Candidates are the stationary points of each open
    /// interval between consecutive breakpoints plus every breakpoint; exact ties in
    /// value go to the smaller `x`.
    pub fn minimize(&self, weight: f64, sigma: f64, c: f64) -> f64 {
        debug_assert!(sigma > 0.0);
        let n = self.sorted.len();
        if n == 0 {
            return c / sigma;
        }
        let quad = |x: f64| 0.5 * sigma * x * x - c * x;
        let mut best_x = f64::NAN;
        let mut best_f = f64::INFINITY;
        let mut consider = |x: f64, f: f64| {
            if f < best_f || (f == best_f && x < best_x) {
                best_f = f;
                best_x = x;
            }
        };
        let nf = n as f64;
        for m in 0..=n {
            // On (b_(m), b_(m+1)) the sign sum is 2m − n.
            let xm = (c - weight * (2.0 * m as f64 - nf)) / sigma;
            let lo = if m == 0 { f64::NEG_INFINITY } else { self.sorted[m - 1] };
            let hi = if m == n { f64::INFINITY } else { self.sorted[m] };
            if lo < xm && xm < hi {
                consider(xm, weight * self.abs_sum_split(xm, m) + quad(xm));
            }
        }
        for j in 0..n {
            let x = self.sorted[j];
            if j + 1 < n && self.sorted[j + 1] == x {
                continue;
            }
            consider(x, weight * self.abs_sum_split(x, j + 1) + quad(x));
        }
        best_x
    }
}

/// One-dimensional subproblem `(1/n)Σ|x − b_i| + (σ/2)x² − c x` (general weight).
#[derive(Clone, Debug, PartialEq)]
pub struct Pwq1dProblem {
    pub b: SortedBreakpoints,
    pub sigma: f64,
    pub c: f64,
    pub weight: f64,
}

impl Pwq1dProblem {
    /// Weight defaults to `1/n`; breakpoints need not be sorted.
    pub fn new(b: Vec<f64>, sigma: f64, c: f64) -> Self {
        let weight = if b.is_empty() { 0.0 } else { 1.0 / b.len() as f64 };
        Pwq1dProblem {
            b: SortedBreakpoints::new(b),
            sigma,
            c,
            weight,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.b.value(self.weight, self.sigma, self.c, x)
    }
}

pub fn solve_1d_pwq(p: &Pwq1dProblem) -> f64 {
    p.b.minimize(p.weight, p.sigma, p.c)
}
