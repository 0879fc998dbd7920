//! Run configuration: model file plus run keys, with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use decaylab::config::{model_keys, KeyValues, ModelSpec};
use decaylab::survival::{linear_grid, log_grid, QuadratureSpec};
use decaylab::{TimePoint, HBAR_GEV_S};

use crate::failure::Failure;

/// Keys accepted in a model file besides the model's own keys.
pub const RUN_KEYS: &[&str] = &[
    "tmin",
    "tmax",
    "unit",
    "points",
    "grid",
    "eps",
    "outdir",
    "render",
    "r_values",
    "poles",
    "tail_from",
    "rel_tol",
    "abs_tol",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Lifetimes,
    Gevinv,
    Seconds,
}

impl FromStr for Unit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Unit as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridKind {
    Log,
    Linear,
}

impl FromStr for GridKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <GridKind as ValueEnum>::from_str(s, false)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Lifetimes => "lifetimes",
            Unit::Gevinv => "gevinv",
            Unit::Seconds => "seconds",
        })
    }
}

/// Run options as given on the command line; `None` defers to the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// Model file (`key = value` lines).
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Start of the time grid.
    #[arg(long)]
    pub tmin: Option<f64>,
    /// End of the time grid.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Unit of --tmin/--tmax.
    #[arg(long, value_enum)]
    pub unit: Option<Unit>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Grid spacing.
    #[arg(long, value_enum)]
    pub grid: Option<GridKind>,
    /// Relative deviation from exp(-Γt) that ends the exponential regime.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    pub outdir: Option<PathBuf>,
    /// Run gnuplot on the emitted scripts.
    #[arg(long)]
    pub render: bool,
    /// Relative quadrature tolerance.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    pub abs_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub kind: GridKind,
    pub tmin: f64,
    pub tmax: f64,
    pub unit: Unit,
    pub points: usize,
}

impl GridSpec {
    /// Grid values in the configured unit.
    pub fn values(&self) -> Vec<f64> {
        match self.kind {
            GridKind::Log => log_grid(self.tmin, self.tmax, self.points),
            GridKind::Linear => linear_grid(self.tmin, self.tmax, self.points),
        }
    }

    pub fn time_points(&self, tau: f64) -> Result<Vec<TimePoint>, Failure> {
        self.values()
            .into_iter()
            .map(|v| {
                let t = match self.unit {
                    Unit::Lifetimes => v * tau,
                    Unit::Gevinv => v,
                    Unit::Seconds => v / HBAR_GEV_S,
                };
                TimePoint::new(t).map_err(Failure::from)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model_path: PathBuf,
    pub kv: KeyValues,
    pub spec: ModelSpec,
    pub grid: GridSpec,
    pub eps: f64,
    pub outdir: PathBuf,
    pub render: bool,
    pub quad: QuadratureSpec,
    pub tail_from: f64,
}

/// Where an effective value came from, for error messages.
enum Origin {
    Flag(&'static str),
    Key(&'static str),
    Default,
}

struct Resolver<'a> {
    kv: &'a KeyValues,
}

impl Resolver<'_> {
    fn pick<T: FromStr>(
        &self,
        cli: Option<T>,
        flag: &'static str,
        key: &'static str,
    ) -> Result<(Option<T>, Origin), Failure> {
        if let Some(v) = cli {
            return Ok((Some(v), Origin::Flag(flag)));
        }
        match self.kv.get::<T>(key)? {
            Some(v) => Ok((Some(v), Origin::Key(key))),
            None => Ok((None, Origin::Default)),
        }
    }

    fn invalid(&self, origin: &Origin, msg: String) -> Failure {
        match origin {
            Origin::Flag(flag) => Failure::usage(format!("{flag}: {msg}")),
            Origin::Key(key) => self.kv.error_at(key, msg).into(),
            Origin::Default => Failure::usage(msg),
        }
    }
}

/// Loads the model file and checks that every key is known.
pub fn load_model_file(path: &Path) -> Result<(KeyValues, ModelSpec), Failure> {
    let kv = KeyValues::load(path)?;
    let kind: String = kv.require("model")?;
    let allowed = model_keys(&kind);
    if allowed.is_empty() {
        return Err(kv
            .error_at(
                "model",
                format!("unknown model '{kind}' (bw | bugg | phaseshift)"),
            )
            .into());
    }
    for key in kv.keys() {
        if !allowed.contains(&key) && !RUN_KEYS.contains(&key) {
            return Err(kv
                .error_at(key, format!("unknown key '{key}' for model '{kind}'"))
                .into());
        }
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let spec = ModelSpec::from_key_values(&kv, base)?;
    Ok((kv, spec))
}

/// Resolves a path-valued run key relative to the model file's directory.
pub fn file_key(kv: &KeyValues, model_path: &Path, key: &str) -> Option<PathBuf> {
    kv.get_str(key)
        .map(|v| model_path.parent().unwrap_or(Path::new(".")).join(v))
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, Failure> {
        let model_path = args
            .model
            .clone()
            .ok_or_else(|| Failure::usage("--model <FILE> is required".into()))?;
        let (kv, spec) = load_model_file(&model_path)?;
        let r = Resolver { kv: &kv };

        let (unit, _) = r.pick(args.unit, "--unit", "unit")?;
        let unit = unit.unwrap_or(Unit::Lifetimes);
        let (kind, _) = r.pick(args.grid, "--grid", "grid")?;
        let kind = kind.unwrap_or(GridKind::Log);
        let (tmin, tmin_origin) = r.pick(args.tmin, "--tmin", "tmin")?;
        let (tmax, tmax_origin) = r.pick(args.tmax, "--tmax", "tmax")?;
        let (points, points_origin) = r.pick(args.points, "--points", "points")?;
        let grid = GridSpec {
            kind,
            tmin: tmin.unwrap_or(0.01),
            tmax: tmax.unwrap_or(100.0),
            unit,
            points: points.unwrap_or(300),
        };
        if !grid.tmin.is_finite() || grid.tmin < 0.0 || (kind == GridKind::Log && grid.tmin <= 0.0)
        {
            let need = if kind == GridKind::Log {
                "> 0 for a log grid"
            } else {
                ">= 0"
            };
            return Err(r.invalid(&tmin_origin, format!("tmin = {} must be {need}", grid.tmin)));
        }
        if !(grid.tmax > grid.tmin) || !grid.tmax.is_finite() {
            return Err(r.invalid(
                &tmax_origin,
                format!("tmax = {} must exceed tmin = {}", grid.tmax, grid.tmin),
            ));
        }
        if grid.points < 2 {
            return Err(r.invalid(
                &points_origin,
                format!("points = {} must be at least 2", grid.points),
            ));
        }

        let (eps, eps_origin) = r.pick(args.eps, "--eps", "eps")?;
        let eps = eps.unwrap_or(0.5);
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(r.invalid(&eps_origin, format!("eps = {eps} must be positive")));
        }
        let (tail_from, tail_origin) = r.pick(None, "", "tail_from")?;
        let tail_from = tail_from.unwrap_or(100.0);
        if !(tail_from > 0.0) {
            return Err(r.invalid(
                &tail_origin,
                format!("tail_from = {tail_from} must be positive"),
            ));
        }

        let (outdir, _) = r.pick(args.outdir.clone(), "--outdir", "outdir")?;
        let render = args.render || kv.get::<bool>("render")?.unwrap_or(false);

        let mut quad = QuadratureSpec::default();
        let (rel, rel_origin) = r.pick(args.rel_tol, "--rel-tol", "rel_tol")?;
        let (abs, abs_origin) = r.pick(args.abs_tol, "--abs-tol", "abs_tol")?;
        if let Some(v) = rel {
            quad.rel_tol = v;
        }
        if let Some(v) = abs {
            quad.abs_tol = v;
        }
        if let Err(e) = quad.validate() {
            let origin = if rel.is_some() {
                rel_origin
            } else {
                abs_origin
            };
            return Err(r.invalid(&origin, e.to_string()));
        }

        Ok(Self {
            model_path,
            kv,
            spec,
            grid,
            eps,
            outdir: outdir.unwrap_or_else(|| PathBuf::from(".")),
            render,
            quad,
            tail_from,
        })
    }

    /// Error located at a run key of the model file.
    pub fn key_error(&self, key: &str, msg: impl Into<String>) -> Failure {
        self.kv.error_at(key, msg).into()
    }
}
