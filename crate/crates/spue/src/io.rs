//! CSV serialization for profiles, density fields, and descent records.
//!
//! Every writer emits a `#` metadata line carrying the exact grid
//! parameters, then a header, then one row per bin or cell with the bin
//! center in the first column. Floats are printed with 17 significant
//! digits, so reading a file back reproduces the original values bit for
//! bit; the metadata line is what makes the grid itself round-trip
//! exactly. Readers accept files without metadata by inferring the grid
//! from the center column.

use crate::equilibrium::EquilibriumSummary;
use crate::error::{Error, Result};
use crate::lwr::Trajectory;
use crate::lyapunov::DescentRecord;
use crate::payoff::{DensityField, PayoffGrid};
use crate::point_queue::{ArrivalProfile, DepartureProfile, TimeGrid};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::MalformedInput(format!("cannot parse {what} from {s:?}")))
}

fn series_to_csv(meta: &str, header: &str, centers: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{meta}");
    let _ = writeln!(out, "{header}");
    for (c, v) in centers {
        let _ = writeln!(out, "{},{}", fmt(c), fmt(v));
    }
    out
}

pub fn profile_to_csv(grid: &TimeGrid, rates: &[f64]) -> String {
    let meta = format!(
        "# t_min={} dt={} n_bins={}",
        fmt(grid.t_min),
        fmt(grid.dt),
        grid.n_bins
    );
    series_to_csv(
        &meta,
        "t,rate",
        rates.iter().enumerate().map(|(i, r)| (grid.center(i), *r)),
    )
}

pub fn density_to_csv(field: &DensityField) -> String {
    let grid = field.grid();
    // x_max is carried explicitly: it marks the payoff wall, and
    // recomputing it from x_min + n*dx can land an ulp off.
    let meta = format!(
        "# x_min={} x_max={} dx={} n_cells={}",
        fmt(grid.x_min),
        fmt(grid.x_max),
        fmt(grid.dx),
        grid.n_cells
    );
    series_to_csv(
        &meta,
        "x,k",
        field
            .values()
            .iter()
            .enumerate()
            .map(|(i, k)| (grid.center(i), *k)),
    )
}

pub fn descent_to_csv(records: &[DescentRecord]) -> String {
    let mut out = String::from("day,phi,flux_integral,phi_rate\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt(r.day),
            fmt(r.phi),
            fmt(r.flux_integral),
            fmt(r.phi_discrete_rate)
        );
    }
    out
}

/// Long-format trajectory dump, one `day,x,k` row per snapshot cell.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    if let Some(first) = traj.snapshots.first() {
        let grid = first.field.grid();
        let _ = writeln!(
            out,
            "# x_min={} x_max={} dx={} n_cells={}",
            fmt(grid.x_min),
            fmt(grid.x_max),
            fmt(grid.dx),
            grid.n_cells
        );
    }
    out.push_str("day,x,k\n");
    for snap in &traj.snapshots {
        let grid = snap.field.grid();
        for (i, k) in snap.field.values().iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt(snap.day), fmt(grid.center(i)), fmt(*k));
        }
    }
    out
}

/// Parse a long-format trajectory back into per-day density fields.
pub fn trajectory_from_csv(text: &str) -> Result<Vec<(f64, DensityField)>> {
    let mut meta: Vec<(String, f64)> = Vec::new();
    let mut rows: Vec<(f64, f64)> = Vec::new(); // (day, k)
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for token in rest.split_whitespace() {
                if let Some((key, value)) = token.split_once('=') {
                    meta.push((key.to_string(), parse_f64(value, key)?));
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::MalformedInput(format!("expected day,x,k: {line:?}")));
        }
        if cols[0].trim().parse::<f64>().is_err() {
            continue; // header
        }
        rows.push((parse_f64(cols[0], "day")?, parse_f64(cols[2], "k")?));
    }
    let (Some(x_min), Some(x_max), Some(dx), Some(n)) = (
        meta_value(&meta, "x_min"),
        meta_value(&meta, "x_max"),
        meta_value(&meta, "dx"),
        meta_value(&meta, "n_cells"),
    ) else {
        return Err(Error::MalformedInput(
            "trajectory csv needs its grid metadata line".into(),
        ));
    };
    let n = n as usize;
    if n == 0 || rows.len() % n != 0 {
        return Err(Error::MalformedInput(format!(
            "{} rows do not tile {} cells per snapshot",
            rows.len(),
            n
        )));
    }
    let grid = PayoffGrid {
        x_min,
        x_max,
        dx,
        n_cells: n,
    };
    rows.chunks(n)
        .map(|chunk| {
            let day = chunk[0].0;
            let k: Vec<f64> = chunk.iter().map(|(_, v)| *v).collect();
            Ok((day, DensityField::new(grid, k)?))
        })
        .collect()
}

pub fn summary_to_csv(s: &EquilibriumSummary) -> String {
    format!(
        "kappa,l_star,phi_star,t_first,t_last\n{},{},{},{},{}\n",
        fmt(s.kappa),
        fmt(s.l_star),
        fmt(s.phi_star),
        fmt(s.t_first),
        fmt(s.t_last)
    )
}

pub fn summary_from_csv(text: &str) -> Result<EquilibriumSummary> {
    let row = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && l.split(',').next().unwrap_or("").parse::<f64>().is_ok())
        .ok_or_else(|| Error::MalformedInput("no summary row found".into()))?;
    let cols: Vec<&str> = row.split(',').collect();
    if cols.len() != 5 {
        return Err(Error::MalformedInput(format!("summary row needs 5 columns: {row:?}")));
    }
    Ok(EquilibriumSummary {
        kappa: parse_f64(cols[0], "kappa")?,
        l_star: parse_f64(cols[1], "l_star")?,
        phi_star: parse_f64(cols[2], "phi_star")?,
        t_first: parse_f64(cols[3], "t_first")?,
        t_last: parse_f64(cols[4], "t_last")?,
    })
}

pub fn descent_from_csv(text: &str) -> Result<Vec<DescentRecord>> {
    let mut records = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols[0].parse::<f64>().is_err() {
            continue; // header
        }
        if cols.len() != 4 {
            return Err(Error::MalformedInput(format!(
                "descent row needs 4 columns: {line:?}"
            )));
        }
        records.push(DescentRecord {
            day: parse_f64(cols[0], "day")?,
            phi: parse_f64(cols[1], "phi")?,
            flux_integral: parse_f64(cols[2], "flux_integral")?,
            phi_discrete_rate: parse_f64(cols[3], "phi_rate")?,
        });
    }
    Ok(records)
}

struct ParsedSeries {
    meta: Vec<(String, f64)>,
    centers: Vec<f64>,
    values: Vec<f64>,
}

fn parse_series(text: &str) -> Result<ParsedSeries> {
    let mut parsed = ParsedSeries {
        meta: Vec::new(),
        centers: Vec::new(),
        values: Vec::new(),
    };
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for token in rest.split_whitespace() {
                if let Some((key, value)) = token.split_once('=') {
                    parsed.meta.push((key.to_string(), parse_f64(value, key)?));
                }
            }
            continue;
        }
        let mut cols = line.split(',');
        let first = cols
            .next()
            .ok_or_else(|| Error::MalformedInput(format!("empty row: {line:?}")))?;
        if first.trim().parse::<f64>().is_err() {
            continue; // header row
        }
        let second = cols
            .next()
            .ok_or_else(|| Error::MalformedInput(format!("row needs two columns: {line:?}")))?;
        parsed.centers.push(parse_f64(first, "center column")?);
        parsed.values.push(parse_f64(second, "value column")?);
    }
    if parsed.values.is_empty() {
        return Err(Error::MalformedInput("no data rows found".into()));
    }
    Ok(parsed)
}

fn meta_value(meta: &[(String, f64)], key: &str) -> Option<f64> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

/// Grid origin and step from metadata when present, otherwise inferred
/// from the centers column.
fn grid_params(parsed: &ParsedSeries, origin_key: &str, step_key: &str) -> Result<(f64, f64)> {
    if let (Some(origin), Some(step)) = (
        meta_value(&parsed.meta, origin_key),
        meta_value(&parsed.meta, step_key),
    ) {
        return Ok((origin, step));
    }
    if parsed.centers.len() < 2 {
        return Err(Error::MalformedInput(
            "need metadata or at least two rows to infer the grid".into(),
        ));
    }
    let n = parsed.centers.len() as f64;
    let step = (parsed.centers[parsed.centers.len() - 1] - parsed.centers[0]) / (n - 1.0);
    if !(step > 0.0) {
        return Err(Error::MalformedInput(
            "center column must be strictly increasing".into(),
        ));
    }
    Ok((parsed.centers[0] - 0.5 * step, step))
}

pub fn profile_from_csv(text: &str) -> Result<(TimeGrid, Vec<f64>)> {
    let parsed = parse_series(text)?;
    let (t_min, dt) = grid_params(&parsed, "t_min", "dt")?;
    let grid = TimeGrid::new(t_min, dt, parsed.values.len())?;
    Ok((grid, parsed.values))
}

pub fn density_from_csv(text: &str) -> Result<DensityField> {
    let parsed = parse_series(text)?;
    let (x_min, dx) = grid_params(&parsed, "x_min", "dx")?;
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::MalformedInput(format!("bad cell width {dx}")));
    }
    let n = parsed.values.len();
    // Construct directly so the stored dx is the file's dx, not a
    // recomputed one an ulp away.
    let x_max = meta_value(&parsed.meta, "x_max").unwrap_or(x_min + n as f64 * dx);
    let grid = PayoffGrid {
        x_min,
        x_max,
        dx,
        n_cells: n,
    };
    DensityField::new(grid, parsed.values)
}

pub fn save(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, content)?;
    Ok(())
}

pub fn load_departures(path: &Path) -> Result<DepartureProfile> {
    let text = fs::read_to_string(path)?;
    let (grid, rates) = profile_from_csv(&text)?;
    DepartureProfile::new(grid, rates)
}

pub fn load_arrivals(path: &Path) -> Result<ArrivalProfile> {
    let text = fs::read_to_string(path)?;
    let (grid, rates) = profile_from_csv(&text)?;
    ArrivalProfile::new(grid, rates)
}
