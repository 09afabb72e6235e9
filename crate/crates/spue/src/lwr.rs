//! First-order Godunov integrator for the day-to-day conservation law
//! `dk/dr + dQ(k)/dx = 0` on the payoff axis.
//!
//! Interface fluxes take the demand/supply form
//! `q = min(demand(k_left), supply(k_right))`, which is monotone and
//! non-negative, and both ends of the axis are hard zero-flux walls: no
//! vehicle can enter or leave, only drift toward higher payoff. With a
//! CFL-respecting day step the update preserves the box `[0, kappa]` and
//! total mass to rounding.

use crate::error::{Error, Result};
use crate::payoff::DensityField;

/// Triangular flux `Q(k) = min(u k, w (kappa - k))` with free-flow speed
/// `u`, congested wave speed `w` (both $/day) and jam density `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalDiagram {
    pub u: f64,
    pub w: f64,
    pub kappa: f64,
    /// Critical density `w kappa / (u + w)` where Q peaks.
    pub kappa_c: f64,
    /// Peak flux `u kappa_c`.
    pub q_max: f64,
}

impl FundamentalDiagram {
    pub fn new(u: f64, w: f64, kappa: f64) -> Result<Self> {
        for (name, value) in [("u", u), ("w", w), ("kappa", kappa)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        let kappa_c = w * kappa / (u + w);
        Ok(Self {
            u,
            w,
            kappa,
            kappa_c,
            q_max: u * kappa_c,
        })
    }

    fn check_density(&self, k: f64) -> Result<()> {
        if !(k >= 0.0) || k > self.kappa {
            return Err(Error::DensityOutOfRange { k, kappa: self.kappa });
        }
        Ok(())
    }

    pub fn flow(&self, k: f64) -> Result<f64> {
        self.check_density(k)?;
        Ok(self.flow_unchecked(k))
    }

    #[inline]
    fn flow_unchecked(&self, k: f64) -> f64 {
        (self.u * k).min(self.w * (self.kappa - k))
    }

    /// Upstream demand: flux the cell wants to send, non-decreasing in k.
    pub fn demand(&self, k: f64) -> Result<f64> {
        self.check_density(k)?;
        Ok(self.demand_unchecked(k))
    }

    #[inline]
    fn demand_unchecked(&self, k: f64) -> f64 {
        self.flow_unchecked(k.min(self.kappa_c))
    }

    /// Downstream supply: flux the cell can absorb, non-increasing in k.
    pub fn supply(&self, k: f64) -> Result<f64> {
        self.check_density(k)?;
        Ok(self.supply_unchecked(k))
    }

    #[inline]
    fn supply_unchecked(&self, k: f64) -> f64 {
        self.flow_unchecked(k.max(self.kappa_c))
    }

    /// Godunov flux across an interface, `min(demand(left), supply(right))`.
    /// Callers keep both densities inside `[0, kappa]`; the floor at zero
    /// only absorbs sub-ulp excursions above `kappa`, so vehicles never
    /// move toward lower payoff.
    #[inline]
    pub fn interface_flux(&self, k_left: f64, k_right: f64) -> f64 {
        debug_assert!((-1e-12..=self.kappa * (1.0 + 1e-12)).contains(&k_left));
        debug_assert!((-1e-12..=self.kappa * (1.0 + 1e-12)).contains(&k_right));
        self.demand_unchecked(k_left)
            .min(self.supply_unchecked(k_right))
            .max(0.0)
    }

    pub fn max_speed(&self) -> f64 {
        self.u.max(self.w)
    }
}

/// Simulation state: the density field on day `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub day: f64,
    pub field: DensityField,
    pub fd: FundamentalDiagram,
}

impl SimState {
    pub fn new(field: DensityField, fd: FundamentalDiagram) -> Result<Self> {
        for v in field.values() {
            if *v > fd.kappa * (1.0 + 1e-12) {
                return Err(Error::DensityOutOfRange {
                    k: *v,
                    kappa: fd.kappa,
                });
            }
        }
        Ok(Self {
            day: 0.0,
            field,
            fd,
        })
    }
}

/// Fluxes at all n+1 interfaces, with hard zeros at both walls.
pub fn interface_fluxes(field: &DensityField, fd: &FundamentalDiagram) -> Vec<f64> {
    let k = field.values();
    let n = k.len();
    let mut fluxes = vec![0.0; n + 1];
    for i in 1..n {
        fluxes[i] = fd.interface_flux(k[i - 1], k[i]);
    }
    fluxes
}

/// Conservative update `k_i -= dr/dx * (flux_right - flux_left)`.
pub fn apply_fluxes(field: &DensityField, fluxes: &[f64], dr: f64) -> DensityField {
    let k = field.values();
    let lambda = dr / field.grid().dx;
    let next: Vec<f64> = k
        .iter()
        .enumerate()
        .map(|(i, v)| v - lambda * (fluxes[i + 1] - fluxes[i]))
        .collect();
    DensityField::from_raw(*field.grid(), next)
}

/// Largest stable day step for the grid and diagram, `dx / max(u, w)`.
pub fn max_stable_dr(field: &DensityField, fd: &FundamentalDiagram) -> f64 {
    field.grid().dx / fd.max_speed()
}

/// One explicit day step. Rejects day steps above the CFL limit before
/// touching the state.
pub fn step(s: &SimState, dr: f64) -> Result<SimState> {
    let limit = max_stable_dr(&s.field, &s.fd);
    if !(dr > 0.0) || dr > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dr, limit });
    }
    let fluxes = interface_fluxes(&s.field, &s.fd);
    let field = apply_fluxes(&s.field, &fluxes, dr);
    debug_assert!(field
        .values()
        .iter()
        .all(|v| *v >= -1e-12 * s.fd.kappa && *v <= s.fd.kappa * (1.0 + 1e-12)));
    Ok(SimState {
        day: s.day + dr,
        field,
        fd: s.fd,
    })
}

/// True when every interface flux vanishes (within `tol`), i.e. every
/// interface is empty-empty, jam-jam, or an empty-to-jam standing shock.
pub fn is_stationary(field: &DensityField, fd: &FundamentalDiagram, tol: f64) -> bool {
    interface_fluxes(field, fd).iter().all(|q| q.abs() <= tol)
}

/// Hook invoked after every accepted step with the pre/post states and the
/// interface fluxes that produced the update. Observers must not mutate
/// simulation state; multiple observers compose.
pub trait StepObserver {
    fn on_step(&mut self, prev: &SimState, next: &SimState, fluxes: &[f64], dr: f64) -> Result<()>;
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Simulated horizon in days.
    pub horizon: f64,
    /// Explicit day step; `None` derives `cfl_factor * dx / max(u, w)`.
    pub dr: Option<f64>,
    pub cfl_factor: f64,
    /// Keep every `snapshot_stride`-th state (first and last always kept).
    pub snapshot_stride: usize,
    /// Early stop when `max |k_next - k|` stays below
    /// `convergence_tol * kappa` for `convergence_run` consecutive steps.
    pub convergence_tol: f64,
    pub convergence_run: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            horizon: 50.0,
            dr: None,
            cfl_factor: 0.9,
            snapshot_stride: 100,
            convergence_tol: 1e-12,
            convergence_run: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Snapshots in day order; always holds the initial and final states.
    pub snapshots: Vec<SimState>,
    pub steps: usize,
    /// Day on which the convergence detector fired, if it did.
    pub converged_at: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimState {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

/// March the state to the horizon (or convergence), invoking observers on
/// every step and collecting strided snapshots.
pub fn run(
    s0: SimState,
    opts: &RunOptions,
    observers: &mut [&mut dyn StepObserver],
) -> Result<Trajectory> {
    if !(opts.cfl_factor > 0.0) || opts.cfl_factor > 1.0 {
        return Err(Error::InvalidParam {
            name: "cfl_factor",
            value: opts.cfl_factor,
            reason: "must lie in (0, 1]",
        });
    }
    if opts.horizon < 0.0 {
        return Err(Error::InvalidParam {
            name: "horizon",
            value: opts.horizon,
            reason: "must be >= 0",
        });
    }
    let limit = max_stable_dr(&s0.field, &s0.fd);
    let dr = opts.dr.unwrap_or(opts.cfl_factor * limit);
    if !(dr > 0.0) || dr > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dr, limit });
    }

    let stride = opts.snapshot_stride.max(1);
    let change_tol = opts.convergence_tol * s0.fd.kappa;
    let mut snapshots = vec![s0.clone()];
    let mut state = s0;
    let mut steps = 0usize;
    let mut quiet_steps = 0usize;
    let mut converged_at = None;

    while state.day < opts.horizon - 1e-12 * opts.horizon.max(1.0) {
        let this_dr = dr.min(opts.horizon - state.day);
        let fluxes = interface_fluxes(&state.field, &state.fd);
        let next = SimState {
            day: state.day + this_dr,
            field: apply_fluxes(&state.field, &fluxes, this_dr),
            fd: state.fd,
        };
        for obs in observers.iter_mut() {
            obs.on_step(&state, &next, &fluxes, this_dr)?;
        }
        let max_change = state
            .field
            .values()
            .iter()
            .zip(next.field.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        state = next;
        steps += 1;
        if steps % stride == 0 {
            snapshots.push(state.clone());
        }
        if max_change <= change_tol {
            quiet_steps += 1;
            if quiet_steps >= opts.convergence_run {
                converged_at = Some(state.day);
                break;
            }
        } else {
            quiet_steps = 0;
        }
    }

    if snapshots.last().map(|s| s.day) != Some(state.day) {
        snapshots.push(state.clone());
    }
    Ok(Trajectory {
        snapshots,
        steps,
        converged_at,
    })
}
