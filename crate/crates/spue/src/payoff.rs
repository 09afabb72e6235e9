//! Mapping between the arrival-time domain and the scheduling-payoff axis.
//!
//! The payoff `x = -scheduling_cost(t)` folds the two arrival times with
//! equal scheduling cost onto one axis point, turning day-to-day arrival
//! time switching into one-dimensional transport toward the right wall at
//! `-alpha * upsilon0`. Density on that axis is measured in veh/$;
//! a payoff cell collects the arrivals of its early-side and late-side
//! time preimages, scaled by `1/beta` and `1/gamma`.

use crate::cost::CostParams;
use crate::equilibrium::jam_density;
use crate::error::{Error, Result};
use crate::point_queue::{ArrivalProfile, TimeGrid};
use crate::util::{sum_compensated, CumCurve};

/// Uniform discretization of the payoff axis `[x_min, x_max]`, with the
/// right wall `x_max` at the highest attainable payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub n_cells: usize,
}

impl PayoffGrid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidParam {
                name: "n_cells",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParam {
                name: "x_min",
                value: x_min,
                reason: "must be finite and < x_max",
            });
        }
        let dx = (x_max - x_min) / n_cells as f64;
        Ok(Self {
            x_min,
            x_max,
            dx,
            n_cells,
        })
    }

    /// Grid ending at `x_max` whose cell width divides the span evenly;
    /// the span is widened up to one cell so `dx` is honored exactly.
    pub fn with_cell_width(x_max: f64, span: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidParam {
                name: "dx",
                value: dx,
                reason: "must be finite and > 0",
            });
        }
        let n = (span / dx).ceil().max(1.0) as usize;
        let x_min = x_max - n as f64 * dx;
        Ok(Self {
            x_min,
            x_max,
            dx,
            n_cells: n,
        })
    }

    pub fn left(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn right(&self, i: usize) -> f64 {
        self.x_min + (i + 1) as f64 * self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn span(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|i| self.left(i)).collect()
    }
}

/// Cell-averaged density over a payoff grid (veh/$).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: PayoffGrid,
    k: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: PayoffGrid, k: Vec<f64>) -> Result<Self> {
        if k.len() != grid.n_cells {
            return Err(Error::MalformedInput(format!(
                "density vector has {} cells, grid has {}",
                k.len(),
                grid.n_cells
            )));
        }
        for v in &k {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::DensityOutOfRange {
                    k: *v,
                    kappa: f64::INFINITY,
                });
            }
        }
        Ok(Self { grid, k })
    }

    /// Solver-internal constructor; callers guarantee feasibility.
    pub(crate) fn from_raw(grid: PayoffGrid, k: Vec<f64>) -> Self {
        debug_assert_eq!(k.len(), grid.n_cells);
        Self { grid, k }
    }

    pub fn grid(&self) -> &PayoffGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.k
    }

    /// Total vehicles, `sum(k * dx)`.
    pub fn mass(&self) -> f64 {
        sum_compensated(self.k.iter().map(|k| k * self.grid.dx))
    }

    /// Check `0 <= k <= kappa` cell-wise within `tol` and total mass.
    pub fn validate(&self, kappa: f64, n_total: f64) -> Result<()> {
        for v in &self.k {
            if *v < -1e-12 * kappa || *v > kappa * (1.0 + 1e-12) {
                return Err(Error::DensityOutOfRange { k: *v, kappa });
            }
        }
        let got = self.mass();
        let tol = 1e-9 * n_total;
        if (got - n_total).abs() > tol {
            return Err(Error::MassMismatch {
                context: "density field",
                got,
                expected: n_total,
                tol,
            });
        }
        Ok(())
    }

    pub(crate) fn cumulative(&self) -> CumCurve {
        CumCurve::from_rates(self.grid.edges(), &self.k)
    }
}

/// The two arrival times sharing the scheduling payoff `x`: one early
/// (`t1 <= t_star`) and one late (`t2 >= t_star`). Rejects payoffs above
/// the right wall, which no arrival time attains.
pub fn times_of_payoff(x: f64, p: &CostParams) -> Result<(f64, f64)> {
    let wall = p.wall_payoff();
    if x > wall {
        return Err(Error::PayoffAboveWall { x, wall });
    }
    Ok(times_unchecked(x, p))
}

#[inline]
fn times_unchecked(x: f64, p: &CostParams) -> (f64, f64) {
    let excess = x + p.alpha * p.upsilon0;
    (p.t_star + excess / p.beta, p.t_star - excess / p.gamma)
}

/// Payoff of arriving at `t`: the negative generalized scheduling cost.
pub fn payoff_of_time(t: f64, p: &CostParams) -> f64 {
    -p.scheduling_cost(t)
}

/// Fold an arrival profile onto the payoff axis.
///
/// Each cell's mass is the exact integral of `g` over the cell's two time
/// preimages, so the transform conserves mass up to grid truncation; a
/// mismatch beyond one time bin's mass means the grid is too short or too
/// coarse for the profile and is rejected.
pub fn density_from_arrivals(
    g: &ArrivalProfile,
    grid: &PayoffGrid,
    p: &CostParams,
) -> Result<DensityField> {
    g.validate_capacity(p.capacity * (1.0 + 1e-12))?;
    let wall = p.wall_payoff();
    if (grid.x_max - wall).abs() > 1e-9 * (1.0 + wall.abs()) {
        return Err(Error::MalformedInput(format!(
            "payoff grid right wall {} must sit at {}",
            grid.x_max, wall
        )));
    }
    let cum = g.cumulative();
    let mut k = Vec::with_capacity(grid.n_cells);
    for i in 0..grid.n_cells {
        let x_l = grid.left(i);
        let x_r = if i + 1 == grid.n_cells { wall } else { grid.right(i) };
        let (t1_l, t2_l) = times_unchecked(x_l, p);
        let (t1_r, t2_r) = times_unchecked(x_r.min(wall), p);
        // Early-side preimage [t1(x_l), t1(x_r)], late-side [t2(x_r), t2(x_l)];
        // the 1/beta and 1/gamma scalings cancel against the substitution
        // Jacobians, leaving plain time integrals of g.
        let mass = cum.integral(t1_l, t1_r) + cum.integral(t2_r, t2_l);
        k.push(mass / grid.dx);
    }
    let field = DensityField::from_raw(*grid, k);
    let expected = g.mass();
    let tol = (1e-9 * expected.abs()).max(p.capacity * g.grid().dt);
    let got = field.mass();
    if (got - expected).abs() > tol {
        return Err(Error::MassMismatch {
            context: "arrival-to-payoff transform (grid clips or aliases the profile)",
            got,
            expected,
            tol,
        });
    }
    let kappa = jam_density(p);
    for v in field.values() {
        if *v > kappa * (1.0 + 1e-9) {
            return Err(Error::DensityOutOfRange { k: *v, kappa });
        }
    }
    Ok(field)
}

/// Unfold a density field into an arrival profile with the symmetric
/// split: both preimage times of a payoff receive `k * C / kappa`, which
/// matches the density definition exactly and respects capacity because
/// `k <= kappa`. Any split with those two properties yields the same
/// payoff dynamics; this one is the canonical rendering choice here.
pub fn arrivals_from_density(
    k: &DensityField,
    p: &CostParams,
    tg: &TimeGrid,
) -> Result<ArrivalProfile> {
    let kappa = jam_density(p);
    let cum = k.cumulative();
    let factor_early = p.capacity / (kappa * p.beta);
    let factor_late = p.capacity / (kappa * p.gamma);
    let mut rates = Vec::with_capacity(tg.n_bins);
    for i in 0..tg.n_bins {
        let a = tg.left(i);
        let b = tg.right(i);
        let mut mass = 0.0;
        // Early side: payoff increases with t up to t_star.
        let b_early = b.min(p.t_star);
        if b_early > a {
            mass += factor_early
                * (cum.eval(payoff_of_time(b_early, p)) - cum.eval(payoff_of_time(a, p)));
        }
        // Late side: payoff decreases with t past t_star.
        let a_late = a.max(p.t_star);
        if b > a_late {
            mass += factor_late
                * (cum.eval(payoff_of_time(a_late, p)) - cum.eval(payoff_of_time(b, p)));
        }
        let rate = mass / tg.dt;
        if rate > p.capacity * (1.0 + 1e-9) {
            return Err(Error::InvalidParam {
                name: "split arrival rate",
                value: rate,
                reason: "exceeds capacity; density field is above jam density",
            });
        }
        rates.push(rate.min(p.capacity));
    }
    let profile = ArrivalProfile::new(*tg, rates)?;
    let expected = k.mass();
    let tol = (1e-9 * expected.abs()).max(kappa * k.grid().dx);
    if (profile.mass() - expected).abs() > tol {
        return Err(Error::MassMismatch {
            context: "payoff-to-arrival split (time grid clips the preimages)",
            got: profile.mass(),
            expected,
            tol,
        });
    }
    Ok(profile)
}

/// Discretized arrival-side objective: `sum(g * scheduling_cost * dt)`
/// with midpoint evaluation.
pub fn atue_objective(g: &ArrivalProfile, p: &CostParams) -> f64 {
    let dt = g.grid().dt;
    sum_compensated(
        g.rates()
            .iter()
            .enumerate()
            .map(|(i, r)| r * p.scheduling_cost(g.grid().center(i)) * dt),
    )
}

/// Default left truncation of the payoff axis: four stationary queue
/// lengths below the wall, or the initial condition's span plus 10%,
/// whichever is wider. The dynamics only push mass toward the wall, so a
/// grid this wide never clips it.
pub fn default_x_min(p: &CostParams, ic_span_below_wall: Option<f64>) -> f64 {
    let l_star = p.demand_total / jam_density(p);
    let mut span = 4.0 * l_star;
    if let Some(s) = ic_span_below_wall {
        span = span.max(1.1 * s);
    }
    p.wall_payoff() - span
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_queue::TimeGrid;

    fn canonical() -> CostParams {
        // beta = gamma = 1, C = 1, N = 2; alpha only has to exceed beta.
        CostParams::new(2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn wall_payoff_maps_to_ideal_time_twice() {
        let p = CostParams::new(2.0, 1.0, 3.0, 8.0, 0.5, 1.0, 1.0).unwrap();
        let (t1, t2) = times_of_payoff(p.wall_payoff(), &p).unwrap();
        assert!((t1 - p.t_star).abs() < 1e-12);
        assert!((t2 - p.t_star).abs() < 1e-12);
    }

    #[test]
    fn times_of_payoff_hand_example() {
        // alpha * upsilon0 = 1, beta = 2, gamma = 4, t_star = 9, x = -3.
        let p = CostParams::new(4.0, 2.0, 4.0, 9.0, 0.25, 1.0, 1.0).unwrap();
        let (t1, t2) = times_of_payoff(-3.0, &p).unwrap();
        assert!((t1 - 8.0).abs() < 1e-12);
        assert!((t2 - 9.5).abs() < 1e-12);
    }

    #[test]
    fn times_of_payoff_rejects_above_wall() {
        let p = CostParams::new(2.0, 1.0, 1.0, 0.0, 0.5, 1.0, 1.0).unwrap();
        assert!(matches!(
            times_of_payoff(p.wall_payoff() + 0.1, &p),
            Err(Error::PayoffAboveWall { .. })
        ));
    }

    #[test]
    fn scheduling_cost_inverts_payoff_roundtrip() {
        let p = CostParams::new(6.4, 3.9, 15.21, 2.0, 0.3, 1.0, 1.0).unwrap();
        let wall = p.wall_payoff();
        for i in 0..100 {
            let x = wall - 0.07 * (i as f64 + 0.5);
            let (t1, t2) = times_of_payoff(x, &p).unwrap();
            assert!((p.scheduling_cost(t1) + x).abs() < 1e-10, "t1 at x={x}");
            assert!((p.scheduling_cost(t2) + x).abs() < 1e-10, "t2 at x={x}");
            assert!(t1 <= p.t_star && p.t_star <= t2);
        }
    }

    #[test]
    fn zero_profile_maps_to_zero_density() {
        let p = canonical();
        let tg = TimeGrid::new(-2.0, 0.1, 40).unwrap();
        let g = ArrivalProfile::new(tg, vec![0.0; 40]).unwrap();
        let grid = PayoffGrid::new(-4.0, 0.0, 80).unwrap();
        let k = density_from_arrivals(&g, &grid, &p).unwrap();
        assert!(k.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_block_profile_doubles_on_payoff_axis() {
        // beta = gamma = 1, g = 1 on [-1, 1]: both preimages contribute 1,
        // so k = 2 on [-1, 0].
        let p = canonical();
        let tg = TimeGrid::new(-1.0, 0.05, 40).unwrap();
        let g = ArrivalProfile::new(tg, vec![1.0; 40]).unwrap();
        let grid = PayoffGrid::new(-2.0, 0.0, 40).unwrap();
        let k = density_from_arrivals(&g, &grid, &p).unwrap();
        for i in 0..grid.n_cells {
            let expected = if grid.center(i) > -1.0 { 2.0 } else { 0.0 };
            assert!(
                (k.values()[i] - expected).abs() < 1e-12,
                "cell {i} at x={}: {}",
                grid.center(i),
                k.values()[i]
            );
        }
        assert!((k.mass() - g.mass()).abs() < 1e-12);
    }

    #[test]
    fn saturated_block_gives_jam_density() {
        // g = C on the equilibrium window maps to k = kappa on [-L*, 0].
        let p = canonical();
        let kappa = jam_density(&p);
        let l_star = p.demand_total / kappa; // = 1
        let tg = TimeGrid::new(-l_star, 0.05, 40).unwrap(); // [-1, 1]
        let g = ArrivalProfile::new(tg, vec![p.capacity; 40]).unwrap();
        let grid = PayoffGrid::new(-3.0, 0.0, 60).unwrap();
        let k = density_from_arrivals(&g, &grid, &p).unwrap();
        for i in 0..grid.n_cells {
            let x = grid.center(i);
            let expected = if x > -l_star { kappa } else { 0.0 };
            assert!(
                (k.values()[i] - expected).abs() < 1e-12,
                "x={x}: {}",
                k.values()[i]
            );
        }
    }

    #[test]
    fn symmetric_split_of_jam_block_saturates_both_preimages() {
        let p = canonical();
        let kappa = jam_density(&p);
        let grid = PayoffGrid::new(-2.0, 0.0, 40).unwrap();
        let k: Vec<f64> = (0..40)
            .map(|i| if grid.center(i) > -1.0 { kappa } else { 0.0 })
            .collect();
        let field = DensityField::new(grid, k).unwrap();
        let tg = TimeGrid::new(-2.0, 0.05, 80).unwrap();
        let g = arrivals_from_density(&field, &p, &tg).unwrap();
        for i in 0..tg.n_bins {
            let t = tg.center(i);
            let expected = if t.abs() < 1.0 { p.capacity } else { 0.0 };
            assert!(
                (g.rates()[i] - expected).abs() < 1e-12,
                "t={t}: {}",
                g.rates()[i]
            );
        }
    }

    #[test]
    fn split_of_zero_density_is_zero() {
        let p = canonical();
        let grid = PayoffGrid::new(-2.0, 0.0, 10).unwrap();
        let field = DensityField::new(grid, vec![0.0; 10]).unwrap();
        let tg = TimeGrid::new(-3.0, 0.1, 60).unwrap();
        let g = arrivals_from_density(&field, &p, &tg).unwrap();
        assert!(g.rates().iter().all(|r| *r == 0.0));
    }

    #[test]
    fn split_then_fold_recovers_density_to_first_order() {
        let p = CostParams::new(6.4, 3.9, 15.21, 1.0, 0.2, 1.0, 2.0).unwrap();
        let kappa = jam_density(&p);
        let wall = p.wall_payoff();
        let grid = PayoffGrid::new(wall - 3.0, wall, 150).unwrap();
        // Smooth-ish feasible density bump.
        let k: Vec<f64> = (0..150)
            .map(|i| {
                let s = (grid.center(i) - grid.x_min) / grid.span();
                kappa * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * s).cos()) * 0.9
            })
            .collect();
        let field = DensityField::new(grid, k).unwrap();
        let (t_lo, t_hi) = times_of_payoff(grid.x_min, &p).unwrap();
        let tg = TimeGrid::covering(t_lo - 0.05, t_hi + 0.05, 0.002).unwrap();
        let g = arrivals_from_density(&field, &p, &tg).unwrap();
        // Boundary bins straddle the grid's preimage window, so mass is
        // preserved to one time bin, not to rounding.
        let one_bin = p.capacity * tg.dt;
        assert!((g.mass() - field.mass()).abs() < one_bin + 1e-9 * field.mass());
        let back = density_from_arrivals(&g, &grid, &p).unwrap();
        let max_err = field
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // First-order reconstruction: error O(dx + dt) in density units.
        assert!(
            max_err < kappa * 0.1,
            "round trip error {max_err} vs kappa {kappa}"
        );
        assert!((back.mass() - field.mass()).abs() < one_bin + 1e-9 * field.mass());
    }

    #[test]
    fn fold_rejects_a_grid_that_clips_the_profile() {
        // Arrivals out to |t| = 2 need payoff down to -2; a grid stopping
        // at -1 drops their mass and must say so.
        let p = canonical();
        let tg = TimeGrid::new(-2.0, 0.05, 80).unwrap();
        let g = ArrivalProfile::new(tg, vec![0.8; 80]).unwrap();
        let short = PayoffGrid::new(-1.0, 0.0, 20).unwrap();
        assert!(matches!(
            density_from_arrivals(&g, &short, &p),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn split_rejects_a_time_grid_that_clips_the_preimages() {
        let p = canonical();
        let kappa = jam_density(&p);
        let grid = PayoffGrid::new(-2.0, 0.0, 40).unwrap();
        let k: Vec<f64> = (0..40).map(|_| 0.7 * kappa).collect();
        let field = DensityField::new(grid, k).unwrap();
        // Density reaches payoff -2, i.e. arrival times out to |t| = 2,
        // but the grid only covers [-0.5, 0.5].
        let tg = TimeGrid::new(-0.5, 0.05, 20).unwrap();
        assert!(matches!(
            arrivals_from_density(&field, &p, &tg),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn objective_zero_for_zero_profile() {
        let p = canonical();
        let tg = TimeGrid::new(-1.0, 0.1, 20).unwrap();
        let g = ArrivalProfile::new(tg, vec![0.0; 20]).unwrap();
        assert_eq!(atue_objective(&g, &p), 0.0);
    }

    #[test]
    fn objective_of_unit_block_is_one() {
        // integral of |t| over [-1, 1] = 1; midpoint rule is exact on a
        // grid aligned with the kink at t = 0.
        let p = canonical();
        let tg = TimeGrid::new(-1.0, 0.05, 40).unwrap();
        let g = ArrivalProfile::new(tg, vec![1.0; 40]).unwrap();
        assert!((atue_objective(&g, &p) - 1.0).abs() < 1e-12);
    }
}
