//! Implementations behind the CLI subcommands. Each command returns a
//! structured outcome plus a human-readable report; the binary decides
//! exit codes from the verdict flags.

use crate::config::{Preset, RunConfig};
use crate::cost::CostParams;
use crate::equilibrium::{
    equilibrium_arrivals, jam_density, spue_density, spue_summary, EquilibriumSummary,
};
use crate::error::{Error, Result};
use crate::io;
use crate::lp::{cross_check, solve_atue_lp, solve_spue_lp, CrossCheckReport};
use crate::lwr::{run, RunOptions, SimState, Trajectory};
use crate::lyapunov::{potential, DescentSummary, LyapunovMonitor};
use crate::payoff::{
    arrivals_from_density, default_x_min, density_from_arrivals, DensityField, PayoffGrid,
};
use crate::point_queue::{propagate, shift_departures, TimeGrid};
use crate::presets::{bimodal_density, random_density, uniform_density};
use crate::svg::LineChart;
use crate::verify::{run_all, BatteryResult, VerifyOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;

fn payoff_grid_for(cfg: &RunConfig, p: &CostParams, ic_span: Option<f64>) -> Result<PayoffGrid> {
    let wall = p.wall_payoff();
    let x_min = cfg.x_min.unwrap_or_else(|| default_x_min(p, ic_span));
    if x_min >= wall {
        return Err(Error::Config(format!(
            "x_min = {x_min} must lie below the payoff wall {wall}"
        )));
    }
    PayoffGrid::with_cell_width(wall, wall - x_min, cfg.resolved_dx(p))
}

fn time_grid_for(cfg: &RunConfig, p: &CostParams) -> Result<TimeGrid> {
    let s = spue_summary(p);
    let pad = cfg.resolved_t_pad(s.t_last - s.t_first);
    TimeGrid::covering(s.t_first - pad, s.t_last + pad, cfg.resolved_dt(p))
}

#[derive(Debug)]
pub struct EquilibriumOutcome {
    pub summary: EquilibriumSummary,
    pub cross_check: CrossCheckReport,
    pub files: Vec<PathBuf>,
    pub report: String,
}

impl EquilibriumOutcome {
    pub fn passed(&self) -> bool {
        self.cross_check.passed()
    }
}

pub fn cmd_equilibrium(cfg: &RunConfig) -> Result<EquilibriumOutcome> {
    let p = cfg.cost_params()?;
    let summary = spue_summary(&p);
    let grid = payoff_grid_for(cfg, &p, None)?;
    let tg = time_grid_for(cfg, &p)?;

    let k_star = spue_density(&grid, &p)?;
    let g_star = equilibrium_arrivals(&tg, &p)?;
    let lp_k = solve_spue_lp(&grid, &p)?;
    let lp_g = solve_atue_lp(&tg, &p)?;
    let check = cross_check(&p, &grid, &tg)?;

    let out = &cfg.out_dir;
    let mut files = Vec::new();
    for (name, content) in [
        ("equilibrium_summary.csv", io::summary_to_csv(&summary)),
        ("spue_density.csv", io::density_to_csv(&k_star)),
        (
            "equilibrium_arrivals.csv",
            io::profile_to_csv(g_star.grid(), g_star.rates()),
        ),
        (
            "spue_lp_density.csv",
            io::density_to_csv(&DensityField::new(grid, lp_k.variables.clone())?),
        ),
        (
            "atue_lp_arrivals.csv",
            io::profile_to_csv(&tg, &lp_g.variables),
        ),
    ] {
        let path = out.join(name);
        io::save(&path, &content)?;
        files.push(path);
    }

    let mut report = String::new();
    let _ = writeln!(report, "equilibrium summary");
    let _ = writeln!(report, "  kappa    = {:.9} veh/$", summary.kappa);
    let _ = writeln!(report, "  L*       = {:.9} $", summary.l_star);
    let _ = writeln!(report, "  phi*     = {:.9} $", summary.phi_star);
    let _ = writeln!(report, "  t_first  = {:.9} hr", summary.t_first);
    let _ = writeln!(report, "  t_last   = {:.9} hr", summary.t_last);
    let _ = writeln!(report, "linear programs");
    let _ = writeln!(report, "  Phi  (payoff axis)  = {:.12}", lp_k.objective);
    let _ = writeln!(report, "  Phi' (arrival time) = {:.12}", lp_g.objective);
    let _ = writeln!(
        report,
        "  objective gap = {:.3e} (tol {:.3e}) -> {}",
        check.objective_gap,
        check.objective_tol,
        verdict(check.objectives_agree())
    );
    let _ = writeln!(
        report,
        "  cell mass gap = {:.3e} (tol {:.3e}) -> {}",
        check.max_cell_mass_gap,
        check.cell_mass_tol,
        verdict(check.densities_agree())
    );
    let _ = writeln!(
        report,
        "  LP support [{:.6}, {:.6}] vs analytic window -> {}",
        check.support_window.0,
        check.support_window.1,
        verdict(check.support_matches)
    );
    let _ = writeln!(report, "verdict: {}", verdict(check.passed()));

    Ok(EquilibriumOutcome {
        summary,
        cross_check: check,
        files,
        report,
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn initial_condition(cfg: &RunConfig, p: &CostParams) -> Result<(PayoffGrid, DensityField)> {
    let kappa = jam_density(p);
    match &cfg.preset {
        Preset::Uniform => {
            let grid = payoff_grid_for(cfg, p, None)?;
            Ok((grid, uniform_density(&grid, kappa, p.demand_total)?))
        }
        Preset::Bimodal { centers } => {
            let grid = payoff_grid_for(cfg, p, None)?;
            Ok((
                grid,
                bimodal_density(&grid, kappa, p.demand_total, *centers)?,
            ))
        }
        Preset::Random => {
            let grid = payoff_grid_for(cfg, p, None)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Ok((grid, random_density(&grid, kappa, p.demand_total, &mut rng)?))
        }
        Preset::FromDepartures { csv } => {
            let departures = io::load_departures(csv)?;
            departures.validate_mass(p.demand_total)?;
            let shifted = shift_departures(&departures, p);
            let (arrivals, _trace) = propagate(&shifted, p);
            // Widest scheduling cost reached by the arrival window fixes
            // how far below the wall the grid must go.
            let worst = p
                .scheduling_cost(arrivals.grid().t_min)
                .max(p.scheduling_cost(arrivals.grid().t_max()));
            let grid = payoff_grid_for(cfg, p, Some(worst - p.alpha * p.upsilon0))?;
            let k0 = density_from_arrivals(&arrivals, &grid, p)?;
            // The truncation must not clip the initial condition.
            if k0.values()[0] >= 1e-12 * kappa {
                return Err(Error::GridTooShort {
                    context: "initial condition touches the left wall; lower x_min",
                    needed: grid.x_min - grid.dx,
                    available: grid.x_min,
                });
            }
            Ok((grid, k0))
        }
    }
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub trajectory_steps: usize,
    pub converged: bool,
    pub descent: DescentSummary,
    /// Max density gap to the analytic equilibrium outside a 2-cell
    /// neighborhood of the shock, in units of kappa.
    pub final_gap_from_equilibrium: f64,
    pub files: Vec<PathBuf>,
    pub report: String,
}

impl SimulateOutcome {
    pub fn passed(&self) -> bool {
        self.converged && self.descent.monotone && self.final_gap_from_equilibrium <= 0.05
    }
}

/// Max |k - k*| / kappa excluding `exclude` cells on each side of the
/// equilibrium shock cell.
pub fn gap_outside_shock(field: &DensityField, k_star: &DensityField, exclude: usize) -> f64 {
    let kappa_scale = k_star.values().iter().copied().fold(0.0, f64::max).max(1e-300);
    let shock = k_star
        .values()
        .iter()
        .position(|v| *v > 0.0)
        .unwrap_or(0);
    field
        .values()
        .iter()
        .zip(k_star.values())
        .enumerate()
        .filter(|(i, _)| i.abs_diff(shock) > exclude)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max)
        / kappa_scale
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutcome> {
    let p = cfg.cost_params()?;
    let fd = cfg.fundamental_diagram()?;
    let (grid, k0) = initial_condition(cfg, &p)?;
    let k_star = spue_density(&grid, &p)?;
    let phi_star = potential(&k_star);

    let mut monitor = LyapunovMonitor::new();
    let opts = RunOptions {
        horizon: cfg.days,
        dr: None,
        cfl_factor: cfg.cfl_factor,
        snapshot_stride: cfg.snapshot_stride,
        convergence_tol: cfg.convergence_tol,
        convergence_run: 10,
    };
    let traj: Trajectory = run(SimState::new(k0.clone(), fd)?, &opts, &mut [&mut monitor])?;
    let end = traj.final_state();
    // A zero-step run never primes the monitor; seed the report with the
    // initial potential so it still has a trajectory to summarize.
    let initial = monitor.initial().or(Some((0.0, potential(&k0))));
    let descent = crate::lyapunov::descent_report(
        initial,
        monitor.records(),
        phi_star,
        1e-6 * phi_star.abs().max(1e-12),
    );
    let gap = gap_outside_shock(&end.field, &k_star, 2);

    // Render the final state back in arrival-time coordinates with the
    // symmetric split (a visualization choice; any split satisfying the
    // density definition gives the same payoff dynamics). The window
    // covers the whole grid's preimage in case the run stopped early.
    let (t_lo, t_hi) = crate::payoff::times_of_payoff(grid.x_min, &p)?;
    let tg = TimeGrid::covering(t_lo, t_hi, cfg.resolved_dt(&p))?;
    let g_final = arrivals_from_density(&end.field, &p, &tg)?;

    let out = &cfg.out_dir;
    let mut files = Vec::new();
    for (name, content) in [
        ("trajectory.csv", io::trajectory_to_csv(&traj)),
        ("descent.csv", io::descent_to_csv(monitor.records())),
        ("density_initial.csv", io::density_to_csv(&k0)),
        ("density_final.csv", io::density_to_csv(&end.field)),
        ("density_equilibrium.csv", io::density_to_csv(&k_star)),
        (
            "arrivals_final.csv",
            io::profile_to_csv(g_final.grid(), g_final.rates()),
        ),
    ] {
        let path = out.join(name);
        io::save(&path, &content)?;
        files.push(path);
    }

    if cfg.svg {
        let mut density_chart = LineChart::new(
            "density snapshots vs analytic equilibrium",
            "scheduling payoff x ($)",
            "density k (veh/$)",
        );
        let pick: Vec<usize> = snapshot_picks(traj.snapshots.len());
        for &idx in &pick {
            let snap = &traj.snapshots[idx];
            density_chart.add_series(
                &format!("day {:.2}", snap.day),
                series_of(&snap.field),
            );
        }
        density_chart.add_series("equilibrium", series_of(&k_star));
        let path = out.join("density_snapshots.svg");
        io::save(&path, &density_chart.render())?;
        files.push(path);

        let mut phi_chart = LineChart::new("potential descent", "day r", "Phi (veh*$)");
        let mut points: Vec<(f64, f64)> = Vec::new();
        if let Some(initial) = monitor.initial() {
            points.push(initial);
        }
        points.extend(monitor.records().iter().map(|r| (r.day, r.phi)));
        let days = points.last().map(|p| p.0).unwrap_or(0.0);
        phi_chart.add_series("Phi(day)", points);
        phi_chart.add_series("Phi*", vec![(0.0, phi_star), (days, phi_star)]);
        let path = out.join("phi_descent.svg");
        io::save(&path, &phi_chart.render())?;
        files.push(path);
    }

    let mut report = String::new();
    let _ = writeln!(report, "simulation ({} preset)", cfg.preset.name());
    let _ = writeln!(
        report,
        "  grid: {} cells, dx = {:.6}, x in [{:.6}, {:.6}]",
        grid.n_cells, grid.dx, grid.x_min, grid.x_max
    );
    let _ = writeln!(report, "  steps: {}", traj.steps);
    let _ = writeln!(
        report,
        "  converged: {} (day {:?})",
        traj.converged_at.is_some(),
        traj.converged_at
    );
    let _ = writeln!(
        report,
        "  Lyapunov monotone: {} ({} records)",
        descent.monotone, descent.steps
    );
    let _ = writeln!(
        report,
        "  Phi gap to Phi* = {:.3e}; first day within 1e-6: {:?}",
        descent.final_gap, descent.first_day_within
    );
    let _ = writeln!(
        report,
        "  final |k - k*|/kappa outside shock = {gap:.3e} (tol 5e-2)"
    );
    let outcome = SimulateOutcome {
        trajectory_steps: traj.steps,
        converged: traj.converged_at.is_some(),
        descent,
        final_gap_from_equilibrium: gap,
        files,
        report: String::new(),
    };
    let _ = writeln!(report, "verdict: {}", verdict(outcome.passed()));
    Ok(SimulateOutcome { report, ..outcome })
}

fn series_of(field: &DensityField) -> Vec<(f64, f64)> {
    (0..field.grid().n_cells)
        .map(|i| (field.grid().center(i), field.values()[i]))
        .collect()
}

fn snapshot_picks(n: usize) -> Vec<usize> {
    if n <= 4 {
        return (0..n).collect();
    }
    vec![0, n / 4, n / 2, 3 * n / 4, n - 1]
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub results: Vec<BatteryResult>,
    pub report: String,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

pub fn cmd_verify(cfg: &RunConfig, opts: &VerifyOptions) -> Result<VerifyOutcome> {
    let results = run_all(cfg, opts)?;
    let mut report = String::new();
    for r in &results {
        let _ = writeln!(report, "{} {} — {}", verdict(r.passed), r.name, r.detail);
    }
    let all = results.iter().all(|r| r.passed);
    let _ = writeln!(
        report,
        "verdict: {} ({}/{} batteries passed)",
        verdict(all),
        results.iter().filter(|r| r.passed).count(),
        results.len()
    );
    let path = cfg.out_dir.join("verify_report.txt");
    io::save(&path, &report)?;
    Ok(VerifyOutcome { results, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn test_config(dir: &std::path::Path) -> RunConfig {
        RunConfig {
            out_dir: dir.to_path_buf(),
            days: 60.0,
            dx: Some(0.02),
            ..Default::default()
        }
    }

    #[test]
    fn equilibrium_command_reproduces_canonical_values() {
        let dir = tempdir().unwrap();
        let cfg = test_config(dir.path());
        let out = cmd_equilibrium(&cfg).unwrap();
        assert!(out.passed(), "{}", out.report);
        assert!((out.summary.kappa - 2.0).abs() < 1e-12);
        assert!((out.summary.l_star - 1.0).abs() < 1e-12);
        assert!((out.summary.phi_star - 1.0).abs() < 1e-12);
        for f in &out.files {
            assert!(f.exists(), "missing artifact {f:?}");
        }
    }

    #[test]
    fn simulate_command_converges_from_uniform() {
        let dir = tempdir().unwrap();
        let cfg = test_config(dir.path());
        let out = cmd_simulate(&cfg).unwrap();
        assert!(out.passed(), "{}", out.report);
        assert!(out.files.iter().any(|f| f.ends_with("descent.csv")));
        assert!(out.files.iter().any(|f| f.ends_with("phi_descent.svg")));
    }

    #[test]
    fn simulate_from_departures_reaches_same_equilibrium() {
        let dir = tempdir().unwrap();
        let mut cfg = test_config(dir.path());
        // Two-pulse departure profile carrying the full demand.
        let grid = TimeGrid::new(-1.5, 0.05, 40).unwrap();
        let mut rates = vec![0.0; 40];
        for r in rates.iter_mut().take(8) {
            *r = 2.5; // early burst, 1.0 veh
        }
        for r in rates.iter_mut().take(35).skip(25) {
            *r = 2.0; // late burst, 1.0 veh
        }
        let f = crate::point_queue::DepartureProfile::new(grid, rates).unwrap();
        assert!((f.mass() - 2.0).abs() < 1e-12);
        let csv_path = dir.path().join("departures.csv");
        io::save(&csv_path, &io::profile_to_csv(f.grid(), f.rates())).unwrap();
        cfg.preset = Preset::FromDepartures { csv: csv_path };
        let out = cmd_simulate(&cfg).unwrap();
        assert!(out.passed(), "{}", out.report);
    }

    #[test]
    fn simulate_is_deterministic_for_fixed_seed() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let mut cfg_a = test_config(dir_a.path());
        let mut cfg_b = test_config(dir_b.path());
        for cfg in [&mut cfg_a, &mut cfg_b] {
            cfg.preset = Preset::Random;
            cfg.seed = 1234;
            cfg.svg = false;
        }
        let out_a = cmd_simulate(&cfg_a).unwrap();
        let out_b = cmd_simulate(&cfg_b).unwrap();
        for (a, b) in out_a.files.iter().zip(&out_b.files) {
            let ca = std::fs::read(a).unwrap();
            let cb = std::fs::read(b).unwrap();
            assert_eq!(ca, cb, "artifact mismatch: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn simulate_with_zero_horizon_reports_without_converging() {
        let dir = tempdir().unwrap();
        let mut cfg = test_config(dir.path());
        cfg.days = 0.0;
        cfg.svg = false;
        let out = cmd_simulate(&cfg).unwrap();
        assert!(!out.passed());
        assert_eq!(out.trajectory_steps, 0);
        assert!(!out.converged);
    }

    #[test]
    fn verify_command_writes_report() {
        let dir = tempdir().unwrap();
        let cfg = test_config(dir.path());
        let opts = VerifyOptions {
            transform_profiles: 5,
            vacancy_instances: 5,
            descent_trajectories: 1,
            ..Default::default()
        };
        let out = cmd_verify(&cfg, &opts).unwrap();
        assert!(out.passed(), "{}", out.report);
        assert!(dir.path().join("verify_report.txt").exists());
    }
}
