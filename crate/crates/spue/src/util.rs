//! Small numerical helpers shared across modules.

/// Neumaier-compensated sum. Keeps mass and potential audits from
/// accumulating O(n) rounding noise on long grids.
pub(crate) fn sum_compensated<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Piecewise-linear cumulative curve over sorted breakpoints.
///
/// Built from per-interval constant rates, so interval integrals of the
/// underlying step function are exact: `integral(a, b) = eval(b) - eval(a)`.
/// Evaluation clamps to the first/last value outside the breakpoint range.
pub(crate) struct CumCurve {
    edges: Vec<f64>,
    values: Vec<f64>,
}

impl CumCurve {
    /// Cumulative curve of a step function: `edges` has n+1 entries,
    /// `rates` has n, and the mass on interval i is `rates[i] * width_i`.
    pub fn from_rates(edges: Vec<f64>, rates: &[f64]) -> Self {
        debug_assert_eq!(edges.len(), rates.len() + 1);
        let mut values = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        values.push(0.0);
        for (i, r) in rates.iter().enumerate() {
            acc += r * (edges[i + 1] - edges[i]);
            values.push(acc);
        }
        Self { edges, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.edges.len();
        if n == 0 {
            return 0.0;
        }
        if x <= self.edges[0] {
            return self.values[0];
        }
        if x >= self.edges[n - 1] {
            return self.values[n - 1];
        }
        // partition_point returns the first edge strictly above x.
        let hi = self.edges.partition_point(|&e| e <= x);
        let lo = hi - 1;
        let width = self.edges[hi] - self.edges[lo];
        if width <= 0.0 {
            return self.values[lo];
        }
        let frac = (x - self.edges[lo]) / width;
        self.values[lo] + frac * (self.values[hi] - self.values[lo])
    }

    /// Exact mass of the underlying step function on `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.eval(b) - self.eval(a)
    }
}
