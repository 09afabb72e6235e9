//! Day-to-day departure-time choice at a single traffic bottleneck.
//!
//! Arrival times with equal scheduling cost fold onto a single
//! scheduling-payoff axis, where day-to-day switching becomes a scalar
//! conservation law with a triangular fundamental diagram. The crate
//! provides:
//!
//! - the cost model and point-queue bottleneck ([`cost`], [`point_queue`]),
//! - transforms between arrival profiles and payoff densities ([`payoff`]),
//! - a Godunov finite-volume integrator with zero-flux walls ([`lwr`]),
//! - closed-form equilibrium quantities ([`equilibrium`]),
//! - a potential/Lyapunov monitor certifying monotone descent to the
//!   equilibrium ([`lyapunov`]),
//! - greedy LP oracles for both equilibrium programs ([`lp`]),
//! - CSV/SVG output and the `spue` command-line front end ([`io`],
//!   [`svg`], [`config`], [`commands`]).
//!
//! ```
//! use spue::{CostParams, FundamentalDiagram, PayoffGrid, SimState};
//! use spue::equilibrium::{jam_density, spue_density, spue_summary};
//! use spue::lwr::{run, RunOptions};
//! use spue::lyapunov::{potential, LyapunovMonitor};
//! use spue::presets::uniform_density;
//!
//! // beta = gamma = 1 $/hr, C = 1 veh/hr, N = 2 veh.
//! let p = CostParams::new(2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 2.0)?;
//! let summary = spue_summary(&p);
//! assert_eq!(summary.kappa, 2.0);
//! assert_eq!(summary.l_star, 1.0);
//!
//! // Everyone starts spread out; day-to-day re-timing packs the density
//! // against the wall, and the potential descends monotonically.
//! let kappa = jam_density(&p);
//! let grid = PayoffGrid::with_cell_width(p.wall_payoff(), 4.0, 0.05)?;
//! let k0 = uniform_density(&grid, kappa, p.demand_total)?;
//! let fd = FundamentalDiagram::new(1.0, 1.0, kappa)?;
//! let mut monitor = LyapunovMonitor::new();
//! let traj = run(
//!     SimState::new(k0, fd)?,
//!     &RunOptions { horizon: 50.0, ..Default::default() },
//!     &mut [&mut monitor],
//! )?;
//! assert!(traj.converged_at.is_some());
//!
//! let k_star = spue_density(&grid, &p)?;
//! let report = monitor.report(potential(&k_star), 1e-6);
//! assert!(report.monotone && report.final_gap < 1e-6);
//! # Ok::<(), spue::Error>(())
//! ```

pub mod commands;
pub mod config;
pub mod cost;
pub mod equilibrium;
pub mod error;
pub mod io;
pub mod lp;
pub mod lwr;
pub mod lyapunov;
pub mod payoff;
pub mod point_queue;
pub mod presets;
pub mod svg;
mod util;
pub mod verify;

pub use cost::CostParams;
pub use error::{Error, Result};
pub use lwr::{FundamentalDiagram, SimState};
pub use payoff::{DensityField, PayoffGrid};
pub use point_queue::{ArrivalProfile, DepartureProfile, QueueTrace, TimeGrid};
