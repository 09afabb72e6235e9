//! Point-queue propagation of a departure profile through the bottleneck.
//!
//! Departures feed a vertical queue served at the capacity rate; arrivals
//! are what leaves the server. The discrete recursion below is the O(n)
//! production path; the classical cumulative-curve formula
//! `G(t) = min over s <= t of (F(s) + C (t - s))` is kept in the tests as
//! an independent oracle.

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::util::{sum_compensated, CumCurve};
use rand::Rng;

/// Uniform discretization of the clock-time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub dt: f64,
    pub n_bins: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, dt: f64, n_bins: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParam {
                name: "dt",
                value: dt,
                reason: "must be finite and > 0",
            });
        }
        if n_bins == 0 {
            return Err(Error::InvalidParam {
                name: "n_bins",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        if !t_min.is_finite() {
            return Err(Error::InvalidParam {
                name: "t_min",
                value: t_min,
                reason: "must be finite",
            });
        }
        Ok(Self { t_min, dt, n_bins })
    }

    /// Smallest grid of step `dt` whose bins cover `[t_lo, t_hi]`.
    pub fn covering(t_lo: f64, t_hi: f64, dt: f64) -> Result<Self> {
        if !(t_hi > t_lo) {
            return Err(Error::InvalidParam {
                name: "t_hi",
                value: t_hi,
                reason: "must exceed t_lo",
            });
        }
        let n = ((t_hi - t_lo) / dt).ceil().max(1.0) as usize;
        Self::new(t_lo, dt, n)
    }

    pub fn left(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.dt
    }

    pub fn right(&self, i: usize) -> f64 {
        self.t_min + (i + 1) as f64 * self.dt
    }

    pub fn center(&self, i: usize) -> f64 {
        self.t_min + (i as f64 + 0.5) * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.left(self.n_bins)
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_bins).map(|i| self.left(i)).collect()
    }
}

fn check_rates(rates: &[f64], grid: &TimeGrid) -> Result<()> {
    if rates.len() != grid.n_bins {
        return Err(Error::MalformedInput(format!(
            "rate vector has {} bins, grid has {}",
            rates.len(),
            grid.n_bins
        )));
    }
    for (i, r) in rates.iter().enumerate() {
        if !r.is_finite() || *r < 0.0 {
            return Err(Error::InvalidParam {
                name: "rate",
                value: *r,
                reason: "must be finite and >= 0",
            });
        }
        let _ = i;
    }
    Ok(())
}

/// Departure flow-rates f'(t) on a uniform time grid (veh/hr).
#[derive(Debug, Clone, PartialEq)]
pub struct DepartureProfile {
    grid: TimeGrid,
    rates: Vec<f64>,
}

impl DepartureProfile {
    pub fn new(grid: TimeGrid, rates: Vec<f64>) -> Result<Self> {
        check_rates(&rates, &grid)?;
        Ok(Self { grid, rates })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Total vehicles, `sum(rate * dt)`.
    pub fn mass(&self) -> f64 {
        sum_compensated(self.rates.iter().map(|r| r * self.grid.dt))
    }

    pub fn validate_mass(&self, n_total: f64) -> Result<()> {
        let got = self.mass();
        let tol = 1e-9 * n_total;
        if (got - n_total).abs() > tol {
            return Err(Error::MassMismatch {
                context: "departure profile",
                got,
                expected: n_total,
                tol,
            });
        }
        Ok(())
    }
}

/// Arrival flow-rates g(t) at the destination (veh/hr), capped at capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProfile {
    grid: TimeGrid,
    rates: Vec<f64>,
}

impl ArrivalProfile {
    pub fn new(grid: TimeGrid, rates: Vec<f64>) -> Result<Self> {
        check_rates(&rates, &grid)?;
        Ok(Self { grid, rates })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn mass(&self) -> f64 {
        sum_compensated(self.rates.iter().map(|r| r * self.grid.dt))
    }

    /// Cumulative arrivals at bin edges, exact for the step profile.
    pub(crate) fn cumulative(&self) -> CumCurve {
        CumCurve::from_rates(self.grid.edges(), &self.rates)
    }

    pub fn validate_capacity(&self, capacity: f64) -> Result<()> {
        for r in &self.rates {
            if *r > capacity {
                return Err(Error::InvalidParam {
                    name: "arrival rate",
                    value: *r,
                    reason: "exceeds bottleneck capacity",
                });
            }
        }
        Ok(())
    }
}

/// Queue size (veh) and queueing time (hr) per bin, sampled at bin end.
///
/// Sampling at the bin's right edge keeps the trace consistent with the
/// under-utilization rule: whenever a bin's outflow is below capacity the
/// queue has fully drained inside that bin, so its traced wait is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    grid: TimeGrid,
    queue_size: Vec<f64>,
    queue_time: Vec<f64>,
}

impl QueueTrace {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn queue_size(&self) -> &[f64] {
        &self.queue_size
    }

    pub fn queue_time(&self) -> &[f64] {
        &self.queue_time
    }

    pub fn max_queue(&self) -> f64 {
        self.queue_size.iter().copied().fold(0.0, f64::max)
    }
}

/// Shift a departure profile right by the free-flow travel time, moving it
/// from origin clock to bottleneck-entrance clock. Mass is untouched.
pub fn shift_departures(f_prime: &DepartureProfile, p: &CostParams) -> DepartureProfile {
    let grid = TimeGrid {
        t_min: f_prime.grid.t_min + p.upsilon0,
        ..f_prime.grid
    };
    DepartureProfile {
        grid,
        rates: f_prime.rates.clone(),
    }
}

/// Run the point-queue recursion: per bin, inflow joins the queue, the
/// server releases at most `C * dt`, and the leftover queue carries over.
/// The output grid is extended past the input until the queue drains, so
/// total arrivals equal total departures.
///
/// `f` must already be expressed at the bottleneck entrance (apply
/// [`shift_departures`] first when starting from origin departures).
pub fn propagate(f: &DepartureProfile, p: &CostParams) -> (ArrivalProfile, QueueTrace) {
    let dt = f.grid.dt;
    let cap_mass = p.capacity * dt;
    let mut queue = 0.0_f64;
    let mut rates = Vec::with_capacity(f.rates.len() + 4);
    let mut queue_size = Vec::with_capacity(f.rates.len() + 4);

    // Saturated bins emit exactly C and an uncongested profile passes
    // through bit-identically; the epsilon keeps rounding in the queue
    // bookkeeping from spawning a spurious final drain bin.
    let push_bin = |inflow_rate: f64, queue: &mut f64, rates: &mut Vec<f64>, qs: &mut Vec<f64>| {
        let available = *queue + inflow_rate * dt;
        if available <= cap_mass * (1.0 + 1e-12) {
            let rate = if *queue == 0.0 {
                inflow_rate
            } else {
                available / dt
            };
            rates.push(rate.min(p.capacity));
            *queue = 0.0;
        } else {
            rates.push(p.capacity);
            *queue = available - cap_mass;
        }
        qs.push(*queue);
    };

    for &r in &f.rates {
        push_bin(r, &mut queue, &mut rates, &mut queue_size);
    }
    while queue > 0.0 {
        push_bin(0.0, &mut queue, &mut rates, &mut queue_size);
    }

    let grid = TimeGrid {
        t_min: f.grid.t_min,
        dt,
        n_bins: rates.len(),
    };
    let queue_time = queue_size.iter().map(|d| d / p.capacity).collect();
    (
        ArrivalProfile { grid, rates },
        QueueTrace {
            grid,
            queue_size,
            queue_time,
        },
    )
}

/// Outcome of a randomized scan for the under-utilization cost property.
#[derive(Debug, Clone)]
pub struct VacancyReport {
    pub pairs_checked: usize,
    pub violations: usize,
    pub max_violation: f64,
    /// Worst offending pair as (t1, t2, total_cost1, total_cost2).
    pub worst: Option<(f64, f64, f64, f64)>,
}

impl VacancyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Sample arrival-time pairs (t1, t2) with the bottleneck under-utilized
/// at t1 and the scheduling cost at t2 no smaller, and check that the
/// total cost at t2 is no smaller either. Expected violations: zero.
pub fn vacancy_property_check<R: Rng>(
    g: &ArrivalProfile,
    q: &QueueTrace,
    p: &CostParams,
    trials: usize,
    rng: &mut R,
) -> VacancyReport {
    assert_eq!(g.grid, q.grid, "arrival profile and queue trace disagree");
    let n = g.grid.n_bins;
    let mut report = VacancyReport {
        pairs_checked: 0,
        violations: 0,
        max_violation: 0.0,
        worst: None,
    };
    // Absolute slack for float roundoff in the cost comparison.
    let slack = 1e-12 * (1.0 + p.alpha + p.beta + p.gamma);
    for _ in 0..trials {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if g.rates[i] >= p.capacity {
            continue;
        }
        let t1 = g.grid.center(i);
        let t2 = g.grid.center(j);
        let phi2_1 = p.scheduling_cost(t1);
        let phi2_2 = p.scheduling_cost(t2);
        if phi2_2 < phi2_1 {
            continue;
        }
        report.pairs_checked += 1;
        let phi1 = phi2_1 + p.alpha * q.queue_time[i];
        let phi2 = phi2_2 + p.alpha * q.queue_time[j];
        if phi2 < phi1 - slack {
            report.violations += 1;
            let gap = phi1 - phi2;
            if gap > report.max_violation {
                report.max_violation = gap;
                report.worst = Some((t1, t2, phi1, phi2));
            }
        }
    }
    report
}
