//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! The format is deliberately diff-friendly; see `configs/canonical.conf`
//! in the repository for a commented example. Unknown sections or keys
//! are rejected so typos surface instead of silently using defaults.
//! Command-line flags override file values.

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::lwr::FundamentalDiagram;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Uniform,
    Bimodal { centers: (f64, f64) },
    Random,
    FromDepartures { csv: PathBuf },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Uniform => "uniform",
            Preset::Bimodal { .. } => "bimodal",
            Preset::Random => "random",
            Preset::FromDepartures { .. } => "from_departures",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    // [cost]
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t_star: f64,
    pub upsilon0: f64,
    pub capacity: f64,
    pub demand_total: f64,
    // [fd]
    pub u: f64,
    pub w: f64,
    // [grid]
    pub dx: Option<f64>,
    pub x_min: Option<f64>,
    pub dt: Option<f64>,
    pub t_pad: Option<f64>,
    // [solver]
    pub cfl_factor: f64,
    pub days: f64,
    pub convergence_tol: f64,
    pub snapshot_stride: usize,
    // [initial]
    pub preset: Preset,
    // [output]
    pub out_dir: PathBuf,
    pub seed: u64,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 1.0,
            gamma: 1.0,
            t_star: 0.0,
            upsilon0: 0.0,
            capacity: 1.0,
            demand_total: 2.0,
            u: 1.0,
            w: 1.0,
            dx: None,
            x_min: None,
            dt: None,
            t_pad: None,
            cfl_factor: 0.9,
            days: 50.0,
            convergence_tol: 1e-12,
            snapshot_stride: 100,
            preset: Preset::Uniform,
            out_dir: default_out_dir(),
            seed: 42,
            svg: true,
        }
    }
}

/// `SPUE_OUT` env var, falling back to `./out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("SPUE_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

impl RunConfig {
    pub fn cost_params(&self) -> Result<CostParams> {
        CostParams::new(
            self.alpha,
            self.beta,
            self.gamma,
            self.t_star,
            self.upsilon0,
            self.capacity,
            self.demand_total,
        )
    }

    pub fn fundamental_diagram(&self) -> Result<FundamentalDiagram> {
        let p = self.cost_params()?;
        FundamentalDiagram::new(self.u, self.w, crate::equilibrium::jam_density(&p))
    }

    /// Payoff cell width; defaults to `L* / 100`.
    pub fn resolved_dx(&self, p: &CostParams) -> f64 {
        self.dx.unwrap_or_else(|| {
            let l_star = p.demand_total / crate::equilibrium::jam_density(p);
            l_star / 100.0
        })
    }

    /// Time bin width; defaults to the payoff-equivalent resolution
    /// `dx / max(beta, gamma)`.
    pub fn resolved_dt(&self, p: &CostParams) -> f64 {
        self.dt
            .unwrap_or_else(|| self.resolved_dx(p) / p.beta.max(p.gamma))
    }

    /// Padding added around the equilibrium arrival window when building
    /// time grids; defaults to a quarter of the window.
    pub fn resolved_t_pad(&self, window: f64) -> f64 {
        self.t_pad.unwrap_or(0.25 * window)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path.parent())?;
        Ok(cfg)
    }

    /// Parse `key = value` lines under `[section]` headers into `self`.
    /// Relative CSV paths resolve against `base` (the config's directory).
    pub fn apply_text(&mut self, text: &str, base: Option<&Path>) -> Result<()> {
        let mut section = String::new();
        let mut bimodal_centers = (0.2, 0.55);
        let mut departures_csv: Option<PathBuf> = None;
        let mut preset_name: Option<String> = None;

        for (lineno, raw) in text.lines().enumerate() {
            // `#` starts a comment anywhere in the line.
            let uncommented = raw.split('#').next().unwrap_or("");
            let line = uncommented.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_lowercase();
                match section.as_str() {
                    "cost" | "fd" | "grid" | "solver" | "initial" | "output" => {}
                    other => {
                        return Err(Error::Config(format!(
                            "line {}: unknown section [{other}]",
                            lineno + 1
                        )))
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_lowercase();
            let value = value.trim();
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    Error::Config(format!("line {}: `{key}` needs a number, got {value:?}", lineno + 1))
                })
            };
            match (section.as_str(), key.as_str()) {
                ("cost", "alpha") => self.alpha = num()?,
                ("cost", "beta") => self.beta = num()?,
                ("cost", "gamma") => self.gamma = num()?,
                ("cost", "t_star") => self.t_star = num()?,
                ("cost", "upsilon0") => self.upsilon0 = num()?,
                ("cost", "capacity") => self.capacity = num()?,
                ("cost", "demand_total") => self.demand_total = num()?,
                ("fd", "u") => self.u = num()?,
                ("fd", "w") => self.w = num()?,
                ("grid", "dx") => self.dx = Some(num()?),
                ("grid", "x_min") => self.x_min = Some(num()?),
                ("grid", "dt") => self.dt = Some(num()?),
                ("grid", "t_pad") => self.t_pad = Some(num()?),
                ("solver", "cfl_factor") => self.cfl_factor = num()?,
                ("solver", "days") => self.days = num()?,
                ("solver", "convergence_tol") => self.convergence_tol = num()?,
                ("solver", "snapshot_stride") => self.snapshot_stride = num()? as usize,
                ("initial", "preset") => preset_name = Some(value.to_lowercase()),
                ("initial", "centers") => {
                    let (a, b) = value.split_once(',').ok_or_else(|| {
                        Error::Config(format!("line {}: centers wants `a,b`", lineno + 1))
                    })?;
                    bimodal_centers = (
                        a.trim().parse().map_err(|_| {
                            Error::Config(format!("line {}: bad center {a:?}", lineno + 1))
                        })?,
                        b.trim().parse().map_err(|_| {
                            Error::Config(format!("line {}: bad center {b:?}", lineno + 1))
                        })?,
                    );
                }
                ("initial", "csv") => {
                    let p = PathBuf::from(value);
                    departures_csv = Some(match (p.is_relative(), base) {
                        (true, Some(dir)) => dir.join(p),
                        _ => p,
                    });
                }
                ("output", "dir") => self.out_dir = PathBuf::from(value),
                ("output", "seed") => {
                    self.seed = value.parse().map_err(|_| {
                        Error::Config(format!("line {}: seed wants a u64", lineno + 1))
                    })?
                }
                ("output", "svg") => {
                    self.svg = match value {
                        "true" | "yes" | "1" => true,
                        "false" | "no" | "0" => false,
                        other => {
                            return Err(Error::Config(format!(
                                "line {}: svg wants true/false, got {other:?}",
                                lineno + 1
                            )))
                        }
                    }
                }
                (sec, k) => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{k}` in section [{sec}]",
                        lineno + 1
                    )))
                }
            }
        }

        if let Some(name) = preset_name {
            self.preset = match name.as_str() {
                "uniform" => Preset::Uniform,
                "bimodal" => Preset::Bimodal {
                    centers: bimodal_centers,
                },
                "random" => Preset::Random,
                "from_departures" => Preset::FromDepartures {
                    csv: departures_csv.ok_or_else(|| {
                        Error::Config("preset from_departures needs `csv = PATH`".into())
                    })?,
                },
                other => return Err(Error::Config(format!("unknown preset {other:?}"))),
            };
        }
        Ok(())
    }
}
