//! Flat `key = value` model files.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a trailing comment. Energies are in GeV and s-like quantities in
//! GeV². Recognized keys, by `model`:
//!
//! - `bw`: `e_r`, `gamma_r` or `r` (= Γ_R/(E_R - E_th)), `e_th` (default
//!   `2 m_pi`), `m_pi`, `e0`, `gamma_exp` (default 0.5)
//! - `bugg`: `version` (must be 1), `m`, `a`, `s_a` or `s_a_mpi2` (in units
//!   of `m_pi²`), `b1` (GeV), `b2` (GeV⁻¹), `m_pi`, `branch` (`principal`)
//! - `phaseshift`: `table` (relative to the model file), `l`, `e_th`,
//!   `gamma_exp` (default `max(l - 1/2, 1/2)`), `diff` (`spline` | `fd`),
//!   `dos` (`bu` | `dwell`; default `dwell` for `l = 0`, else `bu`)

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::models::bugg::M_PI_CHARGED;
use crate::models::phase_shift::{default_gamma_exp, FitReport, SampledDensity};
use crate::models::{
    beth_uhlenbeck_dos, dwell_time_dos, fit_spectral_density, make_breit_wigner, make_bugg_sigma,
    BreitWignerParams, BuggParams, Differentiation, PhaseShiftTable,
};
use crate::spectral::{Energy, SpectralDensity};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    column: usize,
}

/// Parsed `key = value` pairs with their source positions.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValues {
    path: String,
    entries: Vec<Entry>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let err = |column: usize, msg: String| Error::Config {
                path: path.to_string(),
                line,
                column,
                msg,
            };
            let indent = content.len() - content.trim_start().len();
            let Some(eq) = content.find('=') else {
                return Err(err(indent + 1, "expected 'key = value'".into()));
            };
            let key = content[..eq].trim();
            if key.is_empty() {
                return Err(err(indent + 1, "missing key before '='".into()));
            }
            if let Some(bad) = key.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
                return Err(err(
                    indent + bad + 1,
                    format!("invalid character in key '{key}'"),
                ));
            }
            let after = &content[eq + 1..];
            let value = after.trim();
            let column = eq + 2 + (after.len() - after.trim_start().len());
            if value.is_empty() {
                return Err(err(eq + 2, format!("missing value for '{key}'")));
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(err(
                    indent + 1,
                    format!("duplicate key '{key}' (first set on line {})", prev.line),
                ));
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
                column,
            });
        }
        Ok(Self {
            path: path.to_string(),
            entries,
        })
    }

    /// Reads and parses a file; a missing or empty file is an error naming
    /// the path.
    pub fn load(path: &Path) -> Result<Self> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: shown.clone(),
            msg: e.to_string(),
        })?;
        let kv = Self::parse(&text, &shown)?;
        if kv.entries.is_empty() {
            return Err(Error::Config {
                path: shown,
                line: 1,
                column: 1,
                msg: "file contains no settings".into(),
            });
        }
        Ok(kv)
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.key.as_str())
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Error located at `key`'s value (or at line 1 if the key is absent).
    pub fn error_at(&self, key: &str, msg: impl Into<String>) -> Error {
        let (line, column) = self.entry(key).map_or((1, 1), |e| (e.line, e.column));
        Error::Config {
            path: self.path.clone(),
            line,
            column,
            msg: msg.into(),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                self.error_at(key, format!("cannot parse value '{}' of '{key}'", e.value))
            }),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config {
            path: self.path.clone(),
            line: 1,
            column: 1,
            msg: format!("missing required key '{key}'"),
        })
    }

    /// Comma-separated list of numbers.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get_str(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    self.error_at(key, format!("cannot parse '{}' in list '{key}'", s.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DosKind {
    BethUhlenbeck,
    DwellTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftSpec {
    pub table: PathBuf,
    pub l: Option<u32>,
    pub e_th: Option<f64>,
    pub gamma_exp: Option<f64>,
    pub diff: Differentiation,
    pub dos: Option<DosKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    BreitWigner(BreitWignerParams),
    Bugg(BuggParams),
    PhaseShift(PhaseShiftSpec),
}

const BW_KEYS: &[&str] = &[
    "model",
    "e_r",
    "gamma_r",
    "r",
    "e_th",
    "m_pi",
    "e0",
    "gamma_exp",
];
const BUGG_KEYS: &[&str] = &[
    "model", "version", "m", "a", "s_a", "s_a_mpi2", "b1", "b2", "m_pi", "branch",
];
const PS_KEYS: &[&str] = &["model", "table", "l", "e_th", "gamma_exp", "diff", "dos"];

/// Model keys accepted for the given `model` value.
pub fn model_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "bw" => BW_KEYS,
        "bugg" => BUGG_KEYS,
        "phaseshift" => PS_KEYS,
        _ => &[],
    }
}

/// A density ready for survival computations.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub density: SpectralDensity,
    /// Present for phase-shift models.
    pub fit: Option<FitReport>,
    pub sampled: Option<SampledDensity>,
}

impl ModelSpec {
    /// Reads the model section. Parameter invariants are checked here so
    /// that invalid files fail before any computation.
    pub fn from_key_values(kv: &KeyValues, base_dir: &Path) -> Result<Self> {
        let kind: String = kv.require("model")?;
        match kind.as_str() {
            "bw" => {
                let m_pi = kv.get("m_pi")?.unwrap_or(M_PI_CHARGED);
                let e_th = kv.get("e_th")?.unwrap_or(2.0 * m_pi);
                let e_r: f64 = kv.require("e_r")?;
                let gamma_r = match (kv.get::<f64>("gamma_r")?, kv.get::<f64>("r")?) {
                    (Some(g), None) => g,
                    (None, Some(r)) => r * (e_r - e_th),
                    (Some(_), Some(_)) => {
                        return Err(kv.error_at("r", "give either 'gamma_r' or 'r', not both"))
                    }
                    (None, None) => return Err(kv.error_at("e_r", "missing 'gamma_r' (or 'r')")),
                };
                let p = BreitWignerParams {
                    e_r,
                    gamma_r,
                    e_th,
                    e0: kv.require("e0")?,
                    gamma_exp: kv.get("gamma_exp")?.unwrap_or(0.5),
                };
                p.validate()
                    .map_err(|e| kv.error_at("e_r", e.to_string()))?;
                Ok(ModelSpec::BreitWigner(p))
            }
            "bugg" => {
                if let Some(v) = kv.get::<u32>("version")? {
                    if v != 1 {
                        return Err(kv.error_at(
                            "version",
                            format!("unsupported parameter-file version {v}"),
                        ));
                    }
                }
                if let Some(b) = kv.get_str("branch") {
                    if b != "principal" {
                        return Err(kv.error_at(
                            "branch",
                            format!("unknown branch '{b}' (only 'principal' is supported)"),
                        ));
                    }
                }
                let m_pi = kv.get("m_pi")?.unwrap_or(M_PI_CHARGED);
                let s_a = match (kv.get::<f64>("s_a")?, kv.get::<f64>("s_a_mpi2")?) {
                    (Some(v), None) => v,
                    (None, Some(k)) => k * m_pi * m_pi,
                    (Some(_), Some(_)) => {
                        return Err(
                            kv.error_at("s_a_mpi2", "give either 's_a' or 's_a_mpi2', not both")
                        )
                    }
                    (None, None) => return Err(kv.error_at("m", "missing 's_a' (or 's_a_mpi2')")),
                };
                let p = BuggParams {
                    m: kv.require("m")?,
                    a: kv.require("a")?,
                    s_a,
                    b1: kv.require("b1")?,
                    b2: kv.require("b2")?,
                    m_pi,
                };
                p.validate().map_err(|e| kv.error_at("m", e.to_string()))?;
                Ok(ModelSpec::Bugg(p))
            }
            "phaseshift" => {
                let table: String = kv.require("table")?;
                let diff = match kv.get_str("diff").unwrap_or("spline") {
                    "spline" => Differentiation::Spline,
                    "fd" => Differentiation::FiniteDifference,
                    other => {
                        return Err(kv.error_at(
                            "diff",
                            format!("unknown differentiation '{other}' (spline | fd)"),
                        ))
                    }
                };
                let dos = match kv.get_str("dos") {
                    None => None,
                    Some("bu") => Some(DosKind::BethUhlenbeck),
                    Some("dwell") => Some(DosKind::DwellTime),
                    Some(other) => {
                        return Err(
                            kv.error_at("dos", format!("unknown density '{other}' (bu | dwell)"))
                        )
                    }
                };
                Ok(ModelSpec::PhaseShift(PhaseShiftSpec {
                    table: base_dir.join(table),
                    l: kv.get("l")?,
                    e_th: kv.get("e_th")?,
                    gamma_exp: kv.get("gamma_exp")?,
                    diff,
                    dos,
                }))
            }
            other => Err(kv.error_at(
                "model",
                format!("unknown model '{other}' (bw | bugg | phaseshift)"),
            )),
        }
    }

    /// Constructs and normalizes the density.
    pub fn build(&self, e_cut_offset: f64) -> Result<BuiltModel> {
        let finish = |rho: SpectralDensity| -> Result<SpectralDensity> {
            let hint = Energy(rho.e_th() + e_cut_offset);
            rho.normalize(hint)
        };
        match self {
            ModelSpec::BreitWigner(p) => Ok(BuiltModel {
                density: finish(make_breit_wigner(*p)?)?,
                fit: None,
                sampled: None,
            }),
            ModelSpec::Bugg(p) => Ok(BuiltModel {
                density: finish(make_bugg_sigma(*p)?)?,
                fit: None,
                sampled: None,
            }),
            ModelSpec::PhaseShift(ps) => {
                let table = PhaseShiftTable::from_file(&ps.table, ps.l, ps.e_th)?;
                let sampled = sampled_dos(&table, ps)?;
                let gamma = ps.gamma_exp.unwrap_or_else(|| default_gamma_exp(table.l()));
                let (rho, report) = fit_spectral_density(&sampled, table.e_th(), gamma)?;
                Ok(BuiltModel {
                    density: finish(rho)?,
                    fit: Some(report),
                    sampled: Some(sampled),
                })
            }
        }
    }
}

/// The density of states selected by `ps.dos`, defaulting by `l`.
pub fn sampled_dos(table: &PhaseShiftTable, ps: &PhaseShiftSpec) -> Result<SampledDensity> {
    let kind = ps.dos.clone().unwrap_or(if table.l() == 0 {
        DosKind::DwellTime
    } else {
        DosKind::BethUhlenbeck
    });
    match kind {
        DosKind::BethUhlenbeck => beth_uhlenbeck_dos(table, ps.diff),
        DosKind::DwellTime => dwell_time_dos(table, ps.diff),
    }
}
