//! Randomized property batteries behind the `verify` subcommand.
//!
//! Each battery draws its own seeded generator, so runs are reproducible
//! and independent batteries can execute in any order. `tol_scale`
//! multiplies the pass tolerances: 1.0 is the calibrated gate, smaller
//! values tighten it (useful as a negative control).

use crate::config::RunConfig;
use crate::cost::CostParams;
use crate::equilibrium::{spue_density, spue_summary};
use crate::error::Result;
use crate::lp::{cross_check, solve_spue_lp};
use crate::lwr::{run, FundamentalDiagram, RunOptions, SimState};
use crate::lyapunov::{potential, LyapunovMonitor};
use crate::payoff::{atue_objective, density_from_arrivals, default_x_min, PayoffGrid};
use crate::point_queue::{propagate, ArrivalProfile, DepartureProfile, TimeGrid};
use crate::presets::random_density;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct BatteryResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl BatteryResult {
    fn pass(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: true,
            detail,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: false,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub tol_scale: f64,
    pub transform_profiles: usize,
    pub vacancy_instances: usize,
    pub descent_trajectories: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            tol_scale: 1.0,
            transform_profiles: 100,
            vacancy_instances: 500,
            descent_trajectories: 5,
        }
    }
}

/// Random arrival profile with rates in `[0, C]` on a window around the
/// equilibrium arrival times.
fn random_arrivals<R: Rng>(p: &CostParams, dt: f64, rng: &mut R) -> ArrivalProfile {
    let s = spue_summary(p);
    let window = s.t_last - s.t_first;
    let pad = rng.random_range(0.1..0.6) * window;
    let tg = TimeGrid::covering(s.t_first - pad, s.t_last + pad, dt).unwrap();
    let rates: Vec<f64> = (0..tg.n_bins)
        .map(|_| rng.random_range(0.0..p.capacity))
        .collect();
    ArrivalProfile::new(tg, rates).unwrap()
}

/// Payoff grid wide enough to hold everything `g` maps onto.
fn grid_for_profile(p: &CostParams, g: &ArrivalProfile, dx: f64) -> PayoffGrid {
    let wall = p.wall_payoff();
    let worst = p
        .scheduling_cost(g.grid().t_min)
        .max(p.scheduling_cost(g.grid().t_max()));
    let x_min = default_x_min(p, Some(worst - p.alpha * p.upsilon0));
    PayoffGrid::with_cell_width(wall, wall - x_min, dx).unwrap()
}

/// `|Phi(fold(g)) - Phi'(g)| <= mass * (dx + dt)` over random profiles.
pub fn transform_identity_battery(p: &CostParams, opts: &VerifyOptions) -> BatteryResult {
    let name = "transform_identity";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x7472616e);
    let mut worst_ratio = 0.0_f64;
    for case in 0..opts.transform_profiles {
        let dt = rng.random_range(0.005..0.05);
        let dx = rng.random_range(0.005..0.05);
        let g = random_arrivals(p, dt, &mut rng);
        let grid = grid_for_profile(p, &g, dx);
        let field = match density_from_arrivals(&g, &grid, p) {
            Ok(f) => f,
            Err(e) => return BatteryResult::fail(name, format!("case {case}: {e}")),
        };
        let gap = (potential(&field) - atue_objective(&g, p)).abs();
        let bound = g.mass().max(1e-9) * (dx + dt) * opts.tol_scale;
        worst_ratio = worst_ratio.max(gap / bound);
        if gap > bound {
            return BatteryResult::fail(
                name,
                format!("case {case}: |Phi - Phi'| = {gap:.3e} > bound {bound:.3e}"),
            );
        }
    }
    BatteryResult::pass(
        name,
        format!(
            "{} profiles, worst gap at {:.1}% of bound",
            opts.transform_profiles,
            100.0 * worst_ratio
        ),
    )
}

/// Random bursty departure profile for the vacancy scan.
fn random_departures<R: Rng>(p: &CostParams, rng: &mut R) -> DepartureProfile {
    let n = rng.random_range(40..150);
    let dt = rng.random_range(0.02..0.08);
    let t_min = p.t_star - rng.random_range(0.5..2.0);
    let grid = TimeGrid::new(t_min, dt, n).unwrap();
    let mut rates = vec![0.0; n];
    for _ in 0..rng.random_range(1..5) {
        let lo = rng.random_range(0..n);
        let hi = (lo + rng.random_range(1..n / 2 + 1)).min(n);
        let rate = rng.random_range(0.2..3.0) * p.capacity;
        for r in rates[lo..hi].iter_mut() {
            *r += rate;
        }
    }
    DepartureProfile::new(grid, rates).unwrap()
}

/// Exhaustive under-utilization scan: an under-utilized arrival time is
/// never costlier than any time with scheduling cost at or above its own.
pub fn vacancy_battery(p: &CostParams, opts: &VerifyOptions) -> BatteryResult {
    let name = "vacancy_property";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x76616361);
    let slack = 1e-12 * (1.0 + p.alpha + p.beta + p.gamma);
    let mut congested = 0usize;
    for case in 0..opts.vacancy_instances {
        let f = random_departures(p, &mut rng);
        let shifted = crate::point_queue::shift_departures(&f, p);
        let (g, q) = propagate(&shifted, p);
        if q.max_queue() > 0.0 {
            congested += 1;
        }
        let n = g.grid().n_bins;
        for i in 0..n {
            if g.rates()[i] >= p.capacity {
                continue;
            }
            let phi2_1 = p.scheduling_cost(g.grid().center(i));
            let phi1 = phi2_1 + p.alpha * q.queue_time()[i];
            for j in 0..n {
                let phi2_2 = p.scheduling_cost(g.grid().center(j));
                if phi2_2 < phi2_1 {
                    continue;
                }
                let phi2 = phi2_2 + p.alpha * q.queue_time()[j];
                if phi2 < phi1 - slack {
                    return BatteryResult::fail(
                        name,
                        format!(
                            "case {case}: bins ({i},{j}) cost {phi1:.12} > {phi2:.12}"
                        ),
                    );
                }
            }
        }
    }
    BatteryResult::pass(
        name,
        format!(
            "{} instances ({congested} congested), zero violations",
            opts.vacancy_instances
        ),
    )
}

/// LP optimum vs analytic density vs converged PDE state.
pub fn oracle_agreement_battery(
    cfg: &RunConfig,
    p: &CostParams,
    fd: &FundamentalDiagram,
    opts: &VerifyOptions,
) -> Result<BatteryResult> {
    let name = "oracle_agreement";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x6f726163);
    let s = spue_summary(p);
    let wall = p.wall_payoff();
    let dx = cfg.resolved_dx(p);
    let x_min = cfg.x_min.unwrap_or_else(|| default_x_min(p, None));
    let grid = PayoffGrid::with_cell_width(wall, wall - x_min, dx)?;
    let dt = cfg.resolved_dt(p);
    let pad = cfg.resolved_t_pad(s.t_last - s.t_first);
    let tg = TimeGrid::covering(s.t_first - pad, s.t_last + pad, dt)?;

    let lp = solve_spue_lp(&grid, p)?;
    let k_star = spue_density(&grid, p)?;
    let phi_star = potential(&k_star);
    let lp_gap = (lp.objective - phi_star).abs();
    let lp_tol = 1e-12 * phi_star.abs().max(1.0) * opts.tol_scale;
    if lp_gap > lp_tol {
        return Ok(BatteryResult::fail(
            name,
            format!("LP objective vs analytic potential: {lp_gap:.3e} > {lp_tol:.3e}"),
        ));
    }

    let report = cross_check(p, &grid, &tg)?;
    if !report.passed() {
        return Ok(BatteryResult::fail(
            name,
            format!(
                "cross-check failed: objective gap {:.3e} (tol {:.3e}), cell gap {:.3e} (tol {:.3e}), support {:?}",
                report.objective_gap,
                report.objective_tol,
                report.max_cell_mass_gap,
                report.cell_mass_tol,
                report.support_window
            ),
        ));
    }

    // PDE steady state from one random start agrees cell-wise.
    let k0 = random_density(&grid, fd.kappa, p.demand_total, &mut rng)?;
    let traj = run(
        SimState::new(k0, *fd)?,
        &RunOptions {
            horizon: 400.0 * (wall - grid.x_min) / fd.max_speed(),
            cfl_factor: cfg.cfl_factor,
            snapshot_stride: usize::MAX,
            convergence_tol: cfg.convergence_tol,
            ..Default::default()
        },
        &mut [],
    )?;
    if traj.converged_at.is_none() {
        return Ok(BatteryResult::fail(name, "PDE run did not converge".into()));
    }
    let end = traj.final_state();
    let cell_tol = fd.kappa * grid.dx * (1.0 + 1e-9) * opts.tol_scale;
    let worst = end
        .field
        .values()
        .iter()
        .zip(&lp.variables)
        .map(|(a, b)| (a - b).abs() * grid.dx)
        .fold(0.0, f64::max);
    if worst > cell_tol {
        return Ok(BatteryResult::fail(
            name,
            format!("PDE steady state vs LP: cell mass gap {worst:.3e} > {cell_tol:.3e}"),
        ));
    }
    Ok(BatteryResult::pass(
        name,
        format!(
            "LP = analytic within {lp_gap:.1e}; PDE = LP within {worst:.1e} per cell; cross-check ok"
        ),
    ))
}

/// Monotone Lyapunov descent from random starts; the monitor hard-fails
/// on any violation of descent or the flux identity.
pub fn descent_battery(
    cfg: &RunConfig,
    p: &CostParams,
    fd: &FundamentalDiagram,
    opts: &VerifyOptions,
) -> Result<BatteryResult> {
    let name = "lyapunov_descent";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x64657363);
    let wall = p.wall_payoff();
    let dx = cfg.resolved_dx(p);
    let x_min = cfg.x_min.unwrap_or_else(|| default_x_min(p, None));
    let grid = PayoffGrid::with_cell_width(wall, wall - x_min, dx)?;
    let k_star = spue_density(&grid, p)?;
    let phi_star = potential(&k_star);
    let gap_tol = 1e-6 * phi_star.abs().max(1.0) * opts.tol_scale;
    let mut total_steps = 0usize;
    for case in 0..opts.descent_trajectories {
        let k0 = random_density(&grid, fd.kappa, p.demand_total, &mut rng)?;
        let mut monitor = LyapunovMonitor::new();
        let traj = run(
            SimState::new(k0, *fd)?,
            &RunOptions {
                horizon: 400.0 * (wall - grid.x_min) / fd.max_speed(),
                cfl_factor: cfg.cfl_factor,
                snapshot_stride: usize::MAX,
                convergence_tol: cfg.convergence_tol,
                ..Default::default()
            },
            &mut [&mut monitor],
        )?;
        total_steps += traj.steps;
        let summary = monitor.report(phi_star, gap_tol);
        if !summary.monotone {
            return Ok(BatteryResult::fail(name, format!("case {case}: not monotone")));
        }
        if summary.final_gap > gap_tol {
            return Ok(BatteryResult::fail(
                name,
                format!(
                    "case {case}: final gap {:.3e} above {gap_tol:.3e}",
                    summary.final_gap
                ),
            ));
        }
    }
    Ok(BatteryResult::pass(
        name,
        format!(
            "{} trajectories, {total_steps} steps, monotone, all gaps below {gap_tol:.1e}",
            opts.descent_trajectories
        ),
    ))
}

/// Run every battery; any failure flips the aggregate verdict.
pub fn run_all(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Vec<BatteryResult>> {
    let p = cfg.cost_params()?;
    let fd = cfg.fundamental_diagram()?;
    Ok(vec![
        transform_identity_battery(&p, opts),
        vacancy_battery(&p, opts),
        oracle_agreement_battery(cfg, &p, &fd, opts)?,
        descent_battery(cfg, &p, &fd, opts)?,
    ])
}
