//! Initial-condition builders for the simulator.

use crate::error::{Error, Result};
use crate::payoff::{DensityField, PayoffGrid};
use crate::util::sum_compensated;
use rand::Rng;

/// Rescale non-negative weights into a feasible density: total mass
/// `total`, box `[0, kappa]`. Clipping losses are refilled proportionally
/// to the remaining headroom, which converges in a handful of passes.
pub fn normalize_to_mass(
    grid: &PayoffGrid,
    weights: &[f64],
    kappa: f64,
    total: f64,
) -> Result<DensityField> {
    let n = grid.n_cells;
    assert_eq!(weights.len(), n);
    let capacity = kappa * grid.dx * n as f64;
    if capacity < total * (1.0 - 1e-12) {
        return Err(Error::Infeasible {
            context: "initial condition",
            capacity,
            demand: total,
        });
    }
    let weight_mass = sum_compensated(weights.iter().map(|w| w * grid.dx));
    let mut k: Vec<f64> = if weight_mass > 0.0 {
        let s = total / weight_mass;
        weights.iter().map(|w| (w * s).min(kappa)).collect()
    } else {
        vec![(total / (grid.dx * n as f64)).min(kappa); n]
    };
    for _ in 0..64 {
        let mass = sum_compensated(k.iter().map(|v| v * grid.dx));
        let deficit = total - mass;
        if deficit.abs() <= 1e-13 * total {
            break;
        }
        if deficit > 0.0 {
            let headroom = sum_compensated(k.iter().map(|v| (kappa - v) * grid.dx));
            if headroom <= 0.0 {
                break;
            }
            let f = (deficit / headroom).min(1.0);
            for v in &mut k {
                *v += f * (kappa - *v);
            }
        } else {
            let s = total / mass;
            for v in &mut k {
                *v *= s;
            }
        }
    }
    DensityField::new(*grid, k)
}

/// Flat density `total / span` over the whole grid.
pub fn uniform_density(grid: &PayoffGrid, kappa: f64, total: f64) -> Result<DensityField> {
    normalize_to_mass(grid, &vec![1.0; grid.n_cells], kappa, total)
}

/// Two rectangular pulses centered at the given span fractions, each
/// carrying half the mass at 80% jam density (wider if that overflows).
pub fn bimodal_density(
    grid: &PayoffGrid,
    kappa: f64,
    total: f64,
    centers: (f64, f64),
) -> Result<DensityField> {
    let width = total / (2.0 * 0.8 * kappa);
    let mut weights = vec![0.0; grid.n_cells];
    for &frac in [centers.0, centers.1].iter() {
        let c = grid.x_min + frac.clamp(0.0, 1.0) * grid.span();
        for (i, w) in weights.iter_mut().enumerate() {
            if (grid.center(i) - c).abs() <= 0.5 * width {
                *w += 1.0;
            }
        }
    }
    normalize_to_mass(grid, &weights, kappa, total)
}

/// Independent uniform draws per cell, rescaled to the target mass.
pub fn random_density<R: Rng>(
    grid: &PayoffGrid,
    kappa: f64,
    total: f64,
    rng: &mut R,
) -> Result<DensityField> {
    let weights: Vec<f64> = (0..grid.n_cells).map(|_| rng.random_range(0.0..kappa)).collect();
    normalize_to_mass(grid, &weights, kappa, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_preset_hits_mass_and_box() {
        let grid = PayoffGrid::new(-4.0, 0.0, 100).unwrap();
        let k = uniform_density(&grid, 2.0, 2.0).unwrap();
        k.validate(2.0, 2.0).unwrap();
        assert!((k.values()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_preset_is_feasible_for_many_seeds() {
        let grid = PayoffGrid::new(-4.0, 0.0, 123).unwrap();
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = random_density(&grid, 2.0, 2.0, &mut rng).unwrap();
            k.validate(2.0, 2.0).unwrap();
        }
    }

    #[test]
    fn bimodal_preset_has_two_pulses() {
        let grid = PayoffGrid::new(-4.0, 0.0, 200).unwrap();
        let k = bimodal_density(&grid, 2.0, 2.0, (0.2, 0.6)).unwrap();
        k.validate(2.0, 2.0).unwrap();
        // Mass sits away from the wall and splits into two humps.
        let vals = k.values();
        let occupied: Vec<usize> = (0..200).filter(|&i| vals[i] > 1e-9).collect();
        assert!(!occupied.is_empty());
        let gaps = occupied.windows(2).filter(|w| w[1] - w[0] > 1).count();
        assert_eq!(gaps, 1, "expected exactly one gap between pulses");
    }

    #[test]
    fn infeasible_mass_is_rejected() {
        let grid = PayoffGrid::new(-1.0, 0.0, 10).unwrap();
        assert!(matches!(
            uniform_density(&grid, 2.0, 5.0),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn near_capacity_mass_saturates_cleanly() {
        let grid = PayoffGrid::new(-1.0, 0.0, 10).unwrap();
        let k = uniform_density(&grid, 2.0, 2.0 * (1.0 - 1e-13)).unwrap();
        for v in k.values() {
            assert!(*v <= 2.0 && *v >= 2.0 - 1e-9);
        }
    }
}
