//! Phenomenology extracted from survival curves: critical times, tail
//! exponents, dips, and parameter scans.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{make_breit_wigner, BreitWignerParams};
use crate::spectral::{Energy, TimePoint};
use crate::survival::{
    compute_survival_curve, lifetimes_to_points, log_grid, QuadratureSpec, SurvivalResult,
};

/// Earliest time, in lifetimes, considered by [`find_critical_time`].
/// Before one lifetime the short-time quadratic law makes every state
/// deviate from the exponential.
pub const CRITICAL_WINDOW_START: f64 = 1.0;

fn deviation(r: &SurvivalResult, i: usize) -> f64 {
    let reference = r.p_exp_ref(i);
    if reference > 0.0 {
        (r.p_total[i] / reference - 1.0).abs()
    } else {
        f64::INFINITY
    }
}

/// Smallest `t ≥ τ` beyond which `|P/e^{-Γt} - 1| > ε` on every remaining
/// grid point, interpolated in `log t`.
///
/// Returns `None` when the first considered point already deviates (no
/// exponential regime) or when the last point is still within `ε`.
pub fn find_critical_time(r: &SurvivalResult, epsilon: f64) -> Result<Option<TimePoint>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let start_t = CRITICAL_WINDOW_START * r.tau() * (1.0 - 1e-12);
    let idx: Vec<usize> = (0..r.len()).filter(|&i| r.t_grid[i] >= start_t).collect();
    if idx.len() < 2 {
        return Err(Error::Resolution(format!(
            "need at least 2 grid points beyond {CRITICAL_WINDOW_START} lifetime(s)"
        )));
    }
    let dev: Vec<f64> = idx.iter().map(|&i| deviation(r, i)).collect();
    if dev[0] > epsilon {
        return Ok(None);
    }
    let k = dev
        .iter()
        .rposition(|&d| d <= epsilon)
        .expect("dev[0] is within epsilon");
    if k == dev.len() - 1 {
        return Ok(None);
    }
    let (t0, t1) = (r.t_grid[idx[k]], r.t_grid[idx[k + 1]]);
    if t1 / t0 > 2.0 {
        return Err(Error::Resolution(format!(
            "grid ratio {:.3} around {:.3} lifetimes is too coarse to bracket the crossing",
            t1 / t0,
            t0 / r.tau()
        )));
    }
    let (d0, d1) = (dev[k], dev[k + 1]);
    let frac = if d1.is_finite() && d1 > d0 {
        (epsilon - d0) / (d1 - d0)
    } else {
        0.5
    };
    let t = (t0.ln() + frac * (t1.ln() - t0.ln())).exp();
    Ok(Some(TimePoint::new(t)?))
}

/// Least-squares slope of `log P` against `log t` for `t ≥ t_min`, with its
/// standard error.
pub fn fit_tail_exponent(r: &SurvivalResult, t_min: TimePoint) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = (0..r.len())
        .filter(|&i| r.t_grid[i] >= t_min.gev_inv() && r.t_grid[i] > 0.0)
        .map(|i| (r.t_grid[i], r.p_total[i]))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Resolution(format!(
            "tail fit needs at least 10 points beyond t = {:.4e} GeV^-1, found {}",
            t_min.gev_inv(),
            pts.len()
        )));
    }
    if let Some((t, _)) = pts.iter().find(|(_, p)| !(*p > 0.0)) {
        return Err(Error::Resolution(format!(
            "P is not positive at t = {t:.4e} GeV^-1"
        )));
    }
    let x: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, p)| p.ln()).collect();
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let resid: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(a, b)| b - intercept - slope * a)
        .collect();
    let s_r = (resid.iter().map(|v| v * v).sum::<f64>() / (n - 2.0)).sqrt();
    let stderr = s_r / sxx.sqrt();
    let threshold = (3.0 * stderr).max(1e-10);
    for (k, w) in y.windows(2).enumerate() {
        if w[1] - w[0] > threshold {
            return Err(Error::WindowTooEarly(format!(
                "log P rises by {:.3e} near t = {:.4e} GeV^-1; the tail is still oscillating",
                w[1] - w[0],
                pts[k + 1].0
            )));
        }
    }
    Ok((slope, stderr))
}

/// Deepest strict local minimum of `P` after the last crossing of
/// `e^{-Γt}`, measured relative to the lower of its two flanking maxima.
/// Minima shallower than three times the local error estimate are ignored.
pub fn detect_dip(r: &SurvivalResult) -> Option<(TimePoint, f64)> {
    let n = r.len();
    if n < 3 {
        return None;
    }
    let diff: Vec<f64> = (0..n).map(|i| r.p_total[i] - r.p_exp_ref(i)).collect();
    let start = (0..n - 1)
        .rev()
        .find(|&i| diff[i] * diff[i + 1] < 0.0 || diff[i] == 0.0)
        .map_or(0, |i| i + 1);
    let p = &r.p_total;
    let mut best: Option<(usize, f64)> = None;
    for i in start.max(1)..n - 1 {
        if !(p[i] < p[i - 1] && p[i] < p[i + 1]) {
            continue;
        }
        let mut l = i;
        while l > 0 && p[l - 1] > p[l] {
            l -= 1;
        }
        let mut h = i;
        while h + 1 < n && p[h + 1] > p[h] {
            h += 1;
        }
        let depth = p[l].min(p[h]) - p[i];
        let noise = 3.0 * r.p_err[i - 1].max(r.p_err[i]).max(r.p_err[i + 1]);
        if !(depth > noise) || !(p[i] > 0.0) {
            continue;
        }
        let rel = depth / p[i];
        if best.is_none_or(|(_, b)| rel > b) {
            best = Some((i, rel));
        }
    }
    best.and_then(|(i, _)| TimePoint::new(r.t_grid[i]).ok().map(|t| (t, p[i])))
}

/// Time grid and thresholds shared by scan entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub t_min_lifetimes: f64,
    pub t_max_lifetimes: f64,
    pub points: usize,
    pub epsilon: f64,
    pub tail_fit_from_lifetimes: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            t_min_lifetimes: 0.01,
            t_max_lifetimes: 1000.0,
            points: 400,
            epsilon: 0.5,
            tail_fit_from_lifetimes: 100.0,
        }
    }
}

/// Default R grid.
pub const DEFAULT_R_VALUES: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub label: String,
    pub params: BreitWignerParams,
    pub r_ratio: f64,
    /// In lifetimes.
    pub t_critical: Option<f64>,
    pub tail_slope: f64,
    pub tail_stderr: f64,
    /// `(t in lifetimes, P)`.
    pub dip: Option<(f64, f64)>,
    /// Interval in lifetimes where `P` follows the exponential within `ε`.
    pub exp_region: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub entries: Vec<ScanEntry>,
    pub curves: Vec<SurvivalResult>,
}

impl ScanReport {
    /// CSV with header `R,Gamma_GeV,t_critical_lifetimes,tail_slope,tail_stderr,t_dip,p_dip`;
    /// missing values are empty fields, `t_dip` is in lifetimes.
    pub fn to_csv_string(&self) -> String {
        let mut out =
            String::from("R,Gamma_GeV,t_critical_lifetimes,tail_slope,tail_stderr,t_dip,p_dip\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{},{}",
                e.r_ratio,
                e.params.gamma_r,
                opt(e.t_critical),
                e.tail_slope,
                e.tail_stderr,
                opt(e.dip.map(|d| d.0)),
                opt(e.dip.map(|d| d.1)),
            );
        }
        out
    }
}

fn settings_grid(s: &ScanSettings, tau: f64) -> Result<Vec<TimePoint>> {
    if !(s.t_min_lifetimes > 0.0 && s.t_max_lifetimes > s.t_min_lifetimes && s.points >= 3) {
        return Err(Error::InvalidParameters(
            "scan grid needs 0 < t_min < t_max and >= 3 points".into(),
        ));
    }
    lifetimes_to_points(
        &log_grid(s.t_min_lifetimes, s.t_max_lifetimes, s.points),
        tau,
    )
}

/// Computes one scan entry and its curve for a Breit-Wigner parameter set.
pub fn analyze_breit_wigner(
    label: String,
    params: BreitWignerParams,
    q: &QuadratureSpec,
    s: &ScanSettings,
) -> Result<(ScanEntry, SurvivalResult)> {
    let rho = make_breit_wigner(params)?.normalize(Energy(params.e_th + q.e_cut_offset))?;
    let tau = rho.principal_pole()?.tau;
    let curve = compute_survival_curve(&rho, &settings_grid(s, tau)?, q)?;
    let t_critical = find_critical_time(&curve, s.epsilon)?.map(|t| t.lifetimes(tau));
    let (tail_slope, tail_stderr) = fit_tail_exponent(
        &curve,
        TimePoint::from_lifetimes(s.tail_fit_from_lifetimes, tau)?,
    )?;
    let dip = detect_dip(&curve).map(|(t, p)| (t.lifetimes(tau), p));
    let exp_region = t_critical.map(|tc| {
        let first = curve
            .t_grid
            .iter()
            .map(|t| t / tau)
            .find(|&n| n >= CRITICAL_WINDOW_START * (1.0 - 1e-12));
        (first.unwrap_or(CRITICAL_WINDOW_START), tc)
    });
    let entry = ScanEntry {
        label,
        params,
        r_ratio: params.r_ratio(),
        t_critical,
        tail_slope,
        tail_stderr,
        dip,
        exp_region,
    };
    Ok((entry, curve))
}

fn assemble(results: Vec<(ScanEntry, SurvivalResult)>) -> ScanReport {
    let (entries, curves) = results.into_iter().unzip();
    ScanReport { entries, curves }
}

/// One entry per `R`, sorted by `R`, with `Γ_R = R (E_R - E_th)`.
pub fn scan_r_grid(
    base: &BreitWignerParams,
    r_values: &[f64],
    q: &QuadratureSpec,
    s: &ScanSettings,
) -> Result<ScanReport> {
    if r_values.is_empty() || r_values.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameters(
            "R values must be positive and finite".into(),
        ));
    }
    let mut rs = r_values.to_vec();
    rs.sort_by(f64::total_cmp);
    let results = rs
        .par_iter()
        .map(|&r| analyze_breit_wigner(format!("R={r}"), base.with_r_ratio(r), q, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(results))
}

/// A labelled pole `E_R - iΓ_R/2` used as Breit-Wigner input.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleEntry {
    pub label: String,
    pub e_r: f64,
    pub gamma_r: f64,
}

/// Parses CSV with header `label,E_R_GeV,Gamma_R_GeV`; `#` starts a comment.
pub fn parse_pole_list(text: &str) -> Result<Vec<PoleEntry>> {
    let mut out = Vec::new();
    let mut header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header {
            let h: String = line.chars().filter(|c| !c.is_whitespace()).collect();
            if h != "label,E_R_GeV,Gamma_R_GeV" {
                return Err(Error::Data {
                    row: idx + 1,
                    msg: format!("expected header 'label,E_R_GeV,Gamma_R_GeV', found '{line}'"),
                });
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(Error::Data {
                row: idx + 1,
                msg: format!("expected 3 fields, found {}", f.len()),
            });
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Data {
                row: idx + 1,
                msg: format!("cannot parse number from '{s}'"),
            })
        };
        out.push(PoleEntry {
            label: f[0].to_string(),
            e_r: num(f[1])?,
            gamma_r: num(f[2])?,
        });
    }
    if out.is_empty() {
        return Err(Error::Data {
            row: 0,
            msg: "pole list is empty".into(),
        });
    }
    Ok(out)
}

/// One Breit-Wigner entry per pole, sharing threshold, form factor and `γ`
/// with `base`. Entries keep the input order.
pub fn scan_poles(
    base: &BreitWignerParams,
    poles: &[PoleEntry],
    q: &QuadratureSpec,
    s: &ScanSettings,
) -> Result<ScanReport> {
    let results = poles
        .par_iter()
        .map(|p| {
            let params = BreitWignerParams {
                e_r: p.e_r,
                gamma_r: p.gamma_r,
                ..*base
            };
            analyze_breit_wigner(p.label.clone(), params, q, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(results))
}
