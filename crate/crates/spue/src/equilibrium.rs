//! Closed-form equilibrium quantities for verification and reporting.
//!
//! At equilibrium all mass packs against the right wall of the payoff
//! axis at jam density: a block of length `L* = N / kappa` whose common
//! total cost is `alpha * upsilon0 + L*`. Everything here is analytic;
//! the LP oracle and the PDE path are checked against it.

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::payoff::{times_of_payoff, DensityField, PayoffGrid};
use crate::point_queue::{ArrivalProfile, TimeGrid};

/// Jam density of the payoff axis, `(1/beta + 1/gamma) * C` (veh/$).
pub fn jam_density(p: &CostParams) -> f64 {
    (1.0 / p.beta + 1.0 / p.gamma) * p.capacity
}

/// Analytic equilibrium summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSummary {
    /// Jam density (veh/$).
    pub kappa: f64,
    /// Length of the occupied payoff interval, `N / kappa` ($).
    pub l_star: f64,
    /// Common equilibrium total cost, `alpha * upsilon0 + L*` ($).
    pub phi_star: f64,
    /// Earliest used arrival time (hr).
    pub t_first: f64,
    /// Latest used arrival time (hr).
    pub t_last: f64,
}

pub fn spue_summary(p: &CostParams) -> EquilibriumSummary {
    let kappa = jam_density(p);
    let l_star = p.demand_total / kappa;
    let boundary = p.wall_payoff() - l_star;
    let (t_first, t_last) =
        times_of_payoff(boundary, p).expect("equilibrium boundary payoff is below the wall");
    EquilibriumSummary {
        kappa,
        l_star,
        phi_star: p.alpha * p.upsilon0 + l_star,
        t_first,
        t_last,
    }
}

/// Equilibrium potential `-integral of x k*(x)`, in closed form:
/// `kappa/2 * (wall_minus_lstar^2 - wall^2)` evaluated stably.
pub fn phi_star_potential(p: &CostParams) -> f64 {
    let s = spue_summary(p);
    let wall = p.wall_payoff();
    // -kappa * [x^2/2] from wall - L* to wall
    0.5 * s.kappa * ((wall - s.l_star).powi(2) - wall.powi(2))
}

/// Fold the remaining mass error into a partially filled entry so the
/// total hits `target` exactly, without creating new support or breaking
/// the upper bound. Sub-rounding residuals on fully aligned patterns are
/// dropped rather than smeared onto an empty entry.
fn distribute_residual(values: &mut [f64], target: f64, width: f64, upper: f64) {
    let mass = |vals: &[f64]| crate::util::sum_compensated(vals.iter().map(|v| v * width));
    let residual = target - mass(values);
    if residual == 0.0 {
        return;
    }
    let fits = |v: f64| v + residual / width >= 0.0 && v + residual / width <= upper;
    let partial = (0..values.len())
        .find(|&i| values[i] > 1e-12 * upper && values[i] < upper * (1.0 - 1e-12) && fits(values[i]));
    if let Some(i) = partial {
        values[i] += residual / width;
    } else if residual.abs() > 1e-12 * target.abs() {
        if let Some(i) = (0..values.len()).find(|&i| fits(values[i])) {
            values[i] += residual / width;
        }
    }
}

/// Sample the equilibrium density on a grid: `kappa` inside
/// `[wall - L*, wall]`, zero outside, with the shock cell holding the
/// fractional remainder so the total mass is exactly `N`.
pub fn spue_density(grid: &PayoffGrid, p: &CostParams) -> Result<DensityField> {
    let wall = p.wall_payoff();
    let s = spue_summary(p);
    let lo = wall - s.l_star;
    if (grid.x_max - wall).abs() > 1e-9 * (1.0 + wall.abs()) {
        return Err(Error::GridTooShort {
            context: "equilibrium density (grid wall misplaced)",
            needed: wall,
            available: grid.x_max,
        });
    }
    if grid.x_min > lo + 1e-12 * (1.0 + lo.abs()) {
        return Err(Error::GridTooShort {
            context: "equilibrium density (grid does not reach the shock)",
            needed: lo,
            available: grid.x_min,
        });
    }
    let mut k = Vec::with_capacity(grid.n_cells);
    for i in 0..grid.n_cells {
        let a = grid.left(i).max(lo);
        let b = grid.right(i).min(wall);
        let frac = ((b - a) / grid.dx).max(0.0);
        // Snap cells that are covered (or missed) up to rounding, so an
        // aligned shock yields a bit-exact 0/kappa pattern.
        k.push(if frac >= 1.0 - 1e-12 {
            s.kappa
        } else if frac <= 1e-12 {
            0.0
        } else {
            s.kappa * frac
        });
    }
    distribute_residual(&mut k, p.demand_total, grid.dx, s.kappa);
    Ok(DensityField::from_raw(*grid, k))
}

/// Equilibrium arrival profile: `C` inside `[t_first, t_last]`, zero
/// outside, boundary bins fractional so the mass is exactly `N`.
pub fn equilibrium_arrivals(tg: &TimeGrid, p: &CostParams) -> Result<ArrivalProfile> {
    let s = spue_summary(p);
    if tg.t_min > s.t_first + 1e-12 || tg.t_max() < s.t_last - 1e-12 {
        return Err(Error::GridTooShort {
            context: "equilibrium arrivals (time grid misses the used window)",
            needed: s.t_last - s.t_first,
            available: tg.t_max() - tg.t_min,
        });
    }
    let mut rates = Vec::with_capacity(tg.n_bins);
    for i in 0..tg.n_bins {
        let a = tg.left(i).max(s.t_first);
        let b = tg.right(i).min(s.t_last);
        let frac = ((b - a) / tg.dt).max(0.0);
        rates.push(if frac >= 1.0 - 1e-12 {
            p.capacity
        } else if frac <= 1e-12 {
            0.0
        } else {
            p.capacity * frac
        });
    }
    distribute_residual(&mut rates, p.demand_total, tg.dt, p.capacity);
    ArrivalProfile::new(*tg, rates)
}
