//! Cost constants and the scalar cost functions of arrival time.
//!
//! All times are clock hours, costs are money units, flows are veh/hr.
//! The generalized scheduling cost folds the free-flow travel cost into
//! the usual earliness/lateness penalty, so it is bounded below by
//! `alpha * upsilon0` and minimized exactly at the ideal arrival time.

use crate::error::{Error, Result};

/// Behavioral and physical constants of the single-bottleneck problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Value of travel time ($/hr).
    pub alpha: f64,
    /// Earliness penalty rate ($/hr).
    pub beta: f64,
    /// Lateness penalty rate ($/hr).
    pub gamma: f64,
    /// Ideal arrival time (clock hr).
    pub t_star: f64,
    /// Free-flow travel time (hr).
    pub upsilon0: f64,
    /// Bottleneck service rate C (veh/hr).
    pub capacity: f64,
    /// Total demand N (veh).
    pub demand_total: f64,
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParam {
            name,
            value,
            reason: "must be finite and > 0",
        });
    }
    Ok(())
}

impl CostParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: f64,
        t_star: f64,
        upsilon0: f64,
        capacity: f64,
        demand_total: f64,
    ) -> Result<Self> {
        require_positive("alpha", alpha)?;
        require_positive("beta", beta)?;
        require_positive("gamma", gamma)?;
        require_positive("capacity", capacity)?;
        require_positive("demand_total", demand_total)?;
        if !t_star.is_finite() {
            return Err(Error::InvalidParam {
                name: "t_star",
                value: t_star,
                reason: "must be finite",
            });
        }
        if !(upsilon0 >= 0.0) || !upsilon0.is_finite() {
            return Err(Error::InvalidParam {
                name: "upsilon0",
                value: upsilon0,
                reason: "must be finite and >= 0",
            });
        }
        // Without beta < alpha a driver could always gain by departing
        // earlier, and no equilibrium exists downstream of here.
        if beta >= alpha {
            return Err(Error::BetaNotBelowAlpha { beta, alpha });
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            t_star,
            upsilon0,
            capacity,
            demand_total,
        })
    }

    /// Generalized scheduling cost: free-flow travel cost plus the
    /// earliness/lateness penalty. Piecewise linear with slope `-beta`
    /// before `t_star` and `gamma` after.
    pub fn scheduling_cost(&self, t: f64) -> f64 {
        self.alpha * self.upsilon0
            + self.beta * (self.t_star - t).max(0.0)
            + self.gamma * (t - self.t_star).max(0.0)
    }

    /// Total cost of arriving at `t` after `queue_time` hours in queue.
    ///
    /// Decomposes as `scheduling_cost(t) + alpha * queue_time`.
    pub fn total_cost(&self, t: f64, queue_time: f64) -> Result<f64> {
        if !(queue_time >= 0.0) {
            return Err(Error::NegativeQueueTime(queue_time));
        }
        Ok(self.scheduling_cost(t) + self.alpha * queue_time)
    }

    /// Right wall of the payoff axis, `-alpha * upsilon0`. No arrival
    /// time has a scheduling payoff above this.
    pub fn wall_payoff(&self) -> f64 {
        -self.alpha * self.upsilon0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64, gamma: f64, t_star: f64, upsilon0: f64) -> CostParams {
        CostParams::new(alpha, beta, gamma, t_star, upsilon0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn scheduling_cost_at_ideal_time_is_freeflow_cost() {
        let p = params(2.0, 1.0, 3.0, 8.5, 0.25);
        assert!((p.scheduling_cost(p.t_star) - p.alpha * p.upsilon0).abs() < 1e-15);
    }

    #[test]
    fn scheduling_cost_half_hour_early() {
        let p = params(2.0, 1.0, 1.0, 0.0, 0.0);
        assert!((p.scheduling_cost(-0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scheduling_cost_one_hour_late_morning_commute_rates() {
        // Empirical morning-commute coefficients; one hour late costs gamma.
        let p = params(6.4, 3.9, 15.21, 0.0, 0.0);
        assert!((p.scheduling_cost(1.0) - 15.21).abs() < 1e-12);
    }

    #[test]
    fn total_cost_without_queue_equals_scheduling_cost() {
        let p = params(2.0, 1.0, 3.0, 1.0, 0.5);
        for t in [-3.0, -0.1, 1.0, 2.7, 10.0] {
            let total = p.total_cost(t, 0.0).unwrap();
            assert!((total - p.scheduling_cost(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn total_cost_adds_queueing_cost() {
        let p = params(2.0, 1.0, 3.0, 0.0, 0.25);
        let expected = p.alpha * p.upsilon0 + 0.5;
        assert!((p.total_cost(0.0, 0.25).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn total_cost_decomposition_random_points() {
        let p = params(6.4, 3.9, 15.21, 9.0, 0.1);
        // Deterministic pseudo-random sweep is enough for an algebraic identity.
        let mut x = 0.123_f64;
        for _ in 0..100 {
            x = (x * 9301.0 + 49297.0) % 233.0;
            let t = x / 23.3 - 5.0;
            let q = (x % 7.0) / 7.0;
            let lhs = p.total_cost(t, q).unwrap() - p.scheduling_cost(t);
            assert!((lhs - p.alpha * q).abs() < 1e-12, "t={t} q={q}");
        }
    }

    #[test]
    fn total_cost_rejects_negative_queue_time() {
        let p = params(2.0, 1.0, 3.0, 0.0, 0.0);
        assert!(matches!(
            p.total_cost(0.0, -0.1),
            Err(Error::NegativeQueueTime(_))
        ));
    }

    #[test]
    fn scheduling_cost_slopes_via_finite_differences() {
        let p = params(6.4, 3.9, 15.21, 2.0, 0.3);
        let h = 1e-6;
        for t in [-4.0, -1.0, 0.5, 1.9] {
            let slope = (p.scheduling_cost(t + h) - p.scheduling_cost(t)) / h;
            assert!((slope + p.beta).abs() < 1e-6, "early side slope at {t}");
        }
        for t in [2.1, 3.0, 7.5] {
            let slope = (p.scheduling_cost(t + h) - p.scheduling_cost(t)) / h;
            assert!((slope - p.gamma).abs() < 1e-6, "late side slope at {t}");
        }
        // Convexity: midpoint never above the chord endpoints' average.
        for (a, b) in [(-3.0, 5.0), (1.0, 2.5), (-0.5, 2.0)] {
            let mid = p.scheduling_cost(0.5 * (a + b));
            let chord = 0.5 * (p.scheduling_cost(a) + p.scheduling_cost(b));
            assert!(mid <= chord + 1e-12);
        }
    }

    #[test]
    fn constructor_rejects_beta_not_below_alpha() {
        let err = CostParams::new(2.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::BetaNotBelowAlpha { .. }));
        let err = CostParams::new(2.0, 3.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::BetaNotBelowAlpha { .. }));
    }

    #[test]
    fn constructor_rejects_nonpositive_rates() {
        assert!(CostParams::new(0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(CostParams::new(2.0, -1.0, 1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(CostParams::new(2.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(CostParams::new(2.0, 1.0, 1.0, 0.0, -0.1, 1.0, 1.0).is_err());
        assert!(CostParams::new(2.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(CostParams::new(2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }
}
