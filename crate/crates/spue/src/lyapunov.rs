//! Potential tracking and monotone-descent certification.
//!
//! The potential `Phi(k) = -integral(x k dx)` is simultaneously the LP
//! objective and a Lyapunov function for the payoff dynamics: with zero
//! wall fluxes, summation by parts turns the conservative update into the
//! exact discrete identity `dPhi/dr = -sum(flux * dx)`, which is
//! non-positive because Godunov fluxes never run backwards. The observer
//! asserts both facts every step and hard-fails on any violation.

use crate::error::{Error, Result};
use crate::lwr::{SimState, StepObserver};
use crate::payoff::DensityField;
use crate::util::sum_compensated;

/// Midpoint-rule potential `-sum(x_center * k * dx)`.
pub fn potential(k: &DensityField) -> f64 {
    let grid = k.grid();
    sum_compensated(
        k.values()
            .iter()
            .enumerate()
            .map(|(i, v)| -grid.center(i) * v * grid.dx),
    )
}

/// Per-step descent bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct DescentRecord {
    /// Day of the post-step state.
    pub day: f64,
    /// Potential of the post-step state.
    pub phi: f64,
    /// `sum(interface_flux * dx)` over the step's fluxes.
    pub flux_integral: f64,
    /// `(Phi(next) - Phi(prev)) / dr`.
    pub phi_discrete_rate: f64,
}

fn descent_slack(phi: f64) -> f64 {
    1e-12 * phi.abs() + 1e-12
}

fn identity_slack(flux_integral: f64) -> f64 {
    1e-10 * (1.0 + flux_integral.abs())
}

impl DescentRecord {
    /// Non-increase of the potential, up to rounding slack.
    pub fn descent_ok(&self) -> bool {
        self.phi_discrete_rate <= descent_slack(self.phi)
    }

    /// Discrete twin of the integration-by-parts identity.
    pub fn identity_ok(&self) -> bool {
        (self.phi_discrete_rate + self.flux_integral).abs() <= identity_slack(self.flux_integral)
    }
}

/// Build and validate the descent record for one step. Fails hard with
/// the offending day and potentials if descent or the flux identity is
/// broken, since both hold to rounding for a correct update.
pub fn observe(prev: &SimState, next: &SimState, fluxes: &[f64], dr: f64) -> Result<DescentRecord> {
    let dx = prev.field.grid().dx;
    let phi_prev = potential(&prev.field);
    let phi_next = potential(&next.field);
    let flux_integral = sum_compensated(fluxes.iter().map(|q| q * dx));
    let record = DescentRecord {
        day: next.day,
        phi: phi_next,
        flux_integral,
        phi_discrete_rate: (phi_next - phi_prev) / dr,
    };
    if !record.descent_ok() || !record.identity_ok() {
        return Err(Error::DescentViolation {
            day: next.day,
            phi_prev,
            phi_next,
            rate: record.phi_discrete_rate,
            flux_integral,
        });
    }
    Ok(record)
}

/// Step observer that collects [`DescentRecord`]s along a trajectory.
#[derive(Debug, Default)]
pub struct LyapunovMonitor {
    initial: Option<(f64, f64)>,
    records: Vec<DescentRecord>,
}

impl LyapunovMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    /// `(day, phi)` of the state before the first observed step.
    pub fn initial(&self) -> Option<(f64, f64)> {
        self.initial
    }

    pub fn records(&self) -> &[DescentRecord] {
        &self.records
    }

    pub fn report(&self, phi_star: f64, gap_tol: f64) -> DescentSummary {
        descent_report(self.initial, &self.records, phi_star, gap_tol)
    }
}

impl StepObserver for LyapunovMonitor {
    fn on_step(&mut self, prev: &SimState, next: &SimState, fluxes: &[f64], dr: f64) -> Result<()> {
        if self.initial.is_none() {
            self.initial = Some((prev.day, potential(&prev.field)));
        }
        self.records.push(observe(prev, next, fluxes, dr)?);
        Ok(())
    }
}

/// Verdict over a recorded trajectory.
#[derive(Debug, Clone, Copy)]
pub struct DescentSummary {
    /// All records valid and the potential never increased beyond slack.
    pub monotone: bool,
    /// `Phi(end) - phi_star`.
    pub final_gap: f64,
    /// First day on which the gap dropped to `gap_tol` or below.
    pub first_day_within: Option<f64>,
    pub steps: usize,
}

/// Summarize a descent history against the equilibrium potential.
/// `initial` carries the day-zero potential when available; `records` may
/// be empty for a trajectory that never stepped.
pub fn descent_report(
    initial: Option<(f64, f64)>,
    records: &[DescentRecord],
    phi_star: f64,
    gap_tol: f64,
) -> DescentSummary {
    let series: Vec<(f64, f64)> = initial
        .into_iter()
        .chain(records.iter().map(|r| (r.day, r.phi)))
        .collect();
    assert!(!series.is_empty(), "descent_report needs a non-empty trajectory");

    let mut monotone = records.iter().all(|r| r.descent_ok() && r.identity_ok());
    for pair in series.windows(2) {
        if pair[1].1 > pair[0].1 + descent_slack(pair[0].1) {
            monotone = false;
        }
    }
    let final_gap = series.last().unwrap().1 - phi_star;
    let first_day_within = series
        .iter()
        .find(|(_, phi)| phi - phi_star <= gap_tol)
        .map(|(day, _)| *day);
    DescentSummary {
        monotone,
        final_gap,
        first_day_within,
        steps: records.len(),
    }
}
