//! Densities of states from tabulated phase shifts, and the fit that turns a
//! sampled density into an analytic [`SpectralDensity`].

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ResonancePole, SpectralDensity, SpectralModel};
use crate::spline::SmoothingSpline;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShiftRow {
    pub e: f64,
    pub delta: f64,
    pub re_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftTable {
    rows: Vec<PhaseShiftRow>,
    l: u32,
    e_th: f64,
}

/// Header required in table files.
pub const TABLE_HEADER: &str = "E_GeV,delta_rad,reT";

/// Values given in `# key = value` comment lines of a table file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableDirectives {
    pub l: Option<u32>,
    pub e_th: Option<f64>,
}

impl PhaseShiftTable {
    pub fn new(rows: Vec<PhaseShiftRow>, l: u32, e_th: f64) -> Result<Self> {
        if !e_th.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "threshold {e_th} is not finite"
            )));
        }
        for (i, r) in rows.iter().enumerate() {
            if !r.e.is_finite() || !r.delta.is_finite() || r.re_t.is_some_and(|v| !v.is_finite()) {
                return Err(Error::Data {
                    row: i,
                    msg: "non-finite value".into(),
                });
            }
            if r.e < e_th {
                return Err(Error::Data {
                    row: i,
                    msg: format!("energy {} GeV below threshold {e_th} GeV", r.e),
                });
            }
            if i > 0 && !(r.e > rows[i - 1].e) {
                return Err(Error::Data {
                    row: i,
                    msg: "energies must be strictly increasing".into(),
                });
            }
            if let Some(t) = r.re_t {
                if t.abs() > 0.5 + 1e-6 {
                    return Err(Error::Data {
                        row: i,
                        msg: format!(
                            "|Re T| = {} violates the elastic unitarity bound 1/2",
                            t.abs()
                        ),
                    });
                }
            }
        }
        Ok(Self { rows, l, e_th })
    }

    pub fn rows(&self) -> &[PhaseShiftRow] {
        &self.rows
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn e_th(&self) -> f64 {
        self.e_th
    }

    /// Parses CSV text. Row numbers in errors are 1-based file line numbers.
    pub fn parse_csv(text: &str) -> Result<(Vec<PhaseShiftRow>, TableDirectives)> {
        let mut rows = Vec::new();
        let mut directives = TableDirectives::default();
        let mut header_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    let (k, v) = (k.trim(), v.trim());
                    let bad = |what: &str| Error::Data {
                        row: line_no,
                        msg: format!("cannot parse {what} from '{v}'"),
                    };
                    match k {
                        "l" => directives.l = Some(v.parse().map_err(|_| bad("l"))?),
                        "e_th" => directives.e_th = Some(v.parse().map_err(|_| bad("e_th"))?),
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                let normalized: String = line.chars().filter(|c| !c.is_whitespace()).collect();
                if normalized != TABLE_HEADER {
                    return Err(Error::Data {
                        row: line_no,
                        msg: format!("expected header '{TABLE_HEADER}', found '{line}'"),
                    });
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Data {
                    row: line_no,
                    msg: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let num = |s: &str, name: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::Data {
                    row: line_no,
                    msg: format!("cannot parse {name} from '{s}'"),
                })
            };
            let re_t = if fields[2].is_empty() {
                None
            } else {
                Some(num(fields[2], "reT")?)
            };
            rows.push(PhaseShiftRow {
                e: num(fields[0], "E_GeV")?,
                delta: num(fields[1], "delta_rad")?,
                re_t,
            });
        }
        if !header_seen {
            return Err(Error::Data {
                row: 0,
                msg: format!("missing header '{TABLE_HEADER}'"),
            });
        }
        Ok((rows, directives))
    }

    /// Reads a table file; explicit `l`/`e_th` override the file's directives.
    pub fn from_file(path: &Path, l: Option<u32>, e_th: Option<f64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let (rows, dir) = Self::parse_csv(&text).map_err(|e| match e {
            Error::Data { row, msg } => Error::Data {
                row,
                msg: format!("{}: {msg}", path.display()),
            },
            other => other,
        })?;
        let l = l.or(dir.l).ok_or_else(|| {
            Error::InvalidParameters(format!(
                "{}: partial wave l not given (use '# l = ...' or an explicit value)",
                path.display()
            ))
        })?;
        let e_th = e_th.or(dir.e_th).ok_or_else(|| {
            Error::InvalidParameters(format!(
                "{}: threshold not given (use '# e_th = ...' or an explicit value)",
                path.display()
            ))
        })?;
        Self::new(rows, l, e_th)
    }
}

/// How `dδ/dE` is obtained from the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Differentiation {
    /// Smoothing spline, λ by generalized cross-validation.
    #[default]
    Spline,
    /// Central differences; diagnostic only.
    FiniteDifference,
}

/// A density of states sampled on the table's interior energies.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDensity {
    pub energies: Vec<f64>,
    pub dn_de: Vec<f64>,
    /// Smoothing parameter used, if a spline was fitted.
    pub lambda: Option<f64>,
    /// Indices into `energies` where the density is negative.
    pub negative: Vec<usize>,
}

impl SampledDensity {
    fn from_interior(energies: Vec<f64>, dn_de: Vec<f64>, lambda: Option<f64>) -> Self {
        let negative = dn_de
            .iter()
            .enumerate()
            .filter(|(_, v)| **v < 0.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            energies,
            dn_de,
            lambda,
            negative,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("E_GeV,dn_dE\n");
        for (e, v) in self.energies.iter().zip(&self.dn_de) {
            out.push_str(&format!("{e:.16e},{v:.16e}\n"));
        }
        out
    }
}

fn derivative(x: &[f64], y: &[f64], how: Differentiation) -> Result<(Vec<f64>, Option<f64>)> {
    match how {
        Differentiation::Spline => {
            let s = SmoothingSpline::fit_gcv(x, y)?;
            Ok((s.derivative_at_knots(), Some(s.lambda())))
        }
        Differentiation::FiniteDifference => {
            let n = x.len();
            let mut d = vec![f64::NAN; n];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                // second-order on non-uniform grids
                d[i] = (y[i + 1] * h0 * h0 - y[i - 1] * h1 * h1 + y[i] * (h1 * h1 - h0 * h0))
                    / (h0 * h1 * (h0 + h1));
            }
            Ok((d, None))
        }
    }
}

/// `((2l+1)/π) dδ/dE` on the interior rows of the table.
pub fn beth_uhlenbeck_dos(table: &PhaseShiftTable, how: Differentiation) -> Result<SampledDensity> {
    if table.l == 0 {
        return Err(Error::ThresholdSingularity { l: 0 });
    }
    let rows = table.rows();
    if rows.len() < 5 {
        return Err(Error::Data {
            row: rows.len(),
            msg: format!("need at least 5 rows, got {}", rows.len()),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.e).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let (d, lambda) = derivative(&x, &y, how)?;
    let factor = (2 * table.l + 1) as f64 / PI;
    let n = rows.len();
    Ok(SampledDensity::from_interior(
        x[1..n - 1].to_vec(),
        d[1..n - 1].iter().map(|v| factor * v).collect(),
        lambda,
    ))
}

/// Dwell-time density `2 dδ/dE - 2 Re T E/(E² - E_th²)` on the interior rows.
///
/// With `q = (E² - E_th²)^{1/2}` this equals `(2E/q²)(q dδ/dq - Re T)`; δ is
/// differentiated in `q`, where it is regular at threshold, and the bracket
/// is formed before dividing by `q²`.
pub fn dwell_time_dos(table: &PhaseShiftTable, how: Differentiation) -> Result<SampledDensity> {
    let e_th = table.e_th();
    let rows: Vec<(usize, &PhaseShiftRow)> = table
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.e > e_th)
        .collect();
    if rows.len() < 5 {
        return Err(Error::Data {
            row: rows.len(),
            msg: format!("need at least 5 rows above threshold, got {}", rows.len()),
        });
    }
    let mut re_t = Vec::with_capacity(rows.len());
    for (i, r) in &rows {
        re_t.push(r.re_t.ok_or_else(|| Error::Data {
            row: *i,
            msg: "Re T missing (required by the dwell-time density)".into(),
        })?);
    }
    let q: Vec<f64> = rows
        .iter()
        .map(|(_, r)| ((r.e - e_th) * (r.e + e_th)).sqrt())
        .collect();
    let delta: Vec<f64> = rows.iter().map(|(_, r)| r.delta).collect();
    let (dq, lambda) = derivative(&q, &delta, how)?;
    let n = rows.len();
    let mut energies = Vec::with_capacity(n - 2);
    let mut values = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let e = rows[k].1.e;
        let v = 2.0 * e / (q[k] * q[k]) * (q[k] * dq[k] - re_t[k]);
        if !v.is_finite() {
            return Err(Error::Data {
                row: rows[k].0,
                msg: format!("dwell-time density is not finite at E = {e} GeV"),
            });
        }
        energies.push(e);
        values.push(v);
    }
    Ok(SampledDensity::from_interior(energies, values, lambda))
}

/// Analytic density fitted to a sampled one:
/// `(E - E_th)^γ / ((E - E_R)² + Γ²/4) · (a0 + a1 (E - E_th)) e^{-(E - E_th)/E0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedDensity {
    pub e_th: f64,
    pub gamma_exp: f64,
    pub e_r: f64,
    pub gamma_r: f64,
    pub e0: f64,
    pub a0: f64,
    pub a1: f64,
}

/// Quality of a [`fit_spectral_density`] result.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: FittedDensity,
    /// Root-mean-square of `(fit - data)/max(data)` over all samples.
    pub rms_residual: f64,
    pub max_residual: f64,
    pub points: usize,
}

impl FittedDensity {
    fn shape(&self, z: Complex64) -> Complex64 {
        let xi = z - self.e_th;
        (self.a0 + self.a1 * xi) * (-xi / self.e0).exp()
    }
}

impl SpectralModel for FittedDensity {
    fn id(&self) -> String {
        format!(
            "phaseshift-fit(E_R={},Gamma_R={},E0={},a0={},a1={},E_th={},gamma={})",
            self.e_r, self.gamma_r, self.e0, self.a0, self.a1, self.e_th, self.gamma_exp
        )
    }

    fn threshold(&self) -> f64 {
        self.e_th
    }

    fn gamma_exp(&self) -> f64 {
        self.gamma_exp
    }

    fn pole_part(&self, z: Complex64) -> Complex64 {
        1.0 / self.inverse_pole_part(z)
    }

    fn form_factor(&self, z: Complex64) -> Complex64 {
        self.shape(z)
    }

    fn inverse_pole_part(&self, z: Complex64) -> Complex64 {
        let d = z - self.e_r;
        d * d + 0.25 * self.gamma_r * self.gamma_r
    }

    fn inverse_pole_part_derivative(&self, z: Complex64) -> Option<Complex64> {
        Some(2.0 * (z - self.e_r))
    }

    fn feature_energies(&self) -> Vec<f64> {
        vec![self.e_r]
    }

    fn rotated_axis_scale(&self) -> f64 {
        self.e0.min(1.0)
    }
}

/// Lorentzian `c / ((E - E_R)² + Γ²/4)` fitted by Levenberg-Marquardt to
/// the samples above half maximum. Returns `(c, E_R, Γ)`.
fn fit_lorentzian(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Model("empty sampled density".into()))?;
    if !(ymax > 0.0) {
        return Err(Error::Model("sampled density has no positive peak".into()));
    }
    let half = 0.5 * ymax;
    let lo = (0..imax).rev().find(|&k| y[k] < half);
    let hi = (imax..y.len()).find(|&k| y[k] < half);
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
    let left = lo.map(|k| cross(k, k + 1));
    let right = hi.map(|k| cross(k - 1, k));
    let e_peak = x[imax];
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (e_peak - l),
        (None, Some(r)) => 2.0 * (r - e_peak),
        (None, None) => x[x.len() - 1] - x[0],
    };
    let first = lo.map_or(0, |k| k + 1);
    let last = hi.map_or(y.len(), |k| k);
    let (xs, ys) = (&x[first..last], &y[first..last]);
    if xs.len() < 3 {
        return Err(Error::Model(
            "resonance peak is resolved by fewer than 3 samples".into(),
        ));
    }

    let mut p = [ymax * fwhm * fwhm / 4.0, e_peak, fwhm];
    let cost = |p: &[f64; 3]| -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(&e, &v)| (p[0] / ((e - p[1]).powi(2) + p[2] * p[2] / 4.0) - v).powi(2))
            .sum()
    };
    let mut mu = 1e-3;
    let mut c0 = cost(&p);
    for _ in 0..200 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&e, &v) in xs.iter().zip(ys) {
            let den = (e - p[1]).powi(2) + p[2] * p[2] / 4.0;
            let f = p[0] / den;
            let g = [
                1.0 / den,
                2.0 * p[0] * (e - p[1]) / (den * den),
                -p[0] * p[2] / (2.0 * den * den),
            ];
            for a in 0..3 {
                jtr[a] += g[a] * (v - f);
                for b in 0..3 {
                    jtj[a][b] += g[a] * g[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] *= 1.0 + mu;
            }
            let Some(step) = solve3(m, jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let c1 = if trial[2] > 0.0 {
                cost(&trial)
            } else {
                f64::INFINITY
            };
            if c1 < c0 {
                let rel = (c0 - c1) / c0.max(f64::MIN_POSITIVE);
                p = trial;
                c0 = c1;
                mu = (mu / 10.0).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok((p[0], p[1], p[2].abs()))
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        out[k] = det(&mk) / d;
    }
    Some(out)
}

/// Fits the sampled density to a threshold factor, a single Breit-Wigner pole
/// and a form factor `(a0 + a1 ξ) e^{-ξ/E0}`, `ξ = E - E_th`. The pole comes
/// from a local Lorentzian fit; `E0` is scanned and `(a0, a1)` solved by
/// linear least squares on the relative residual. Returns the unnormalized
/// density and the fit report.
pub fn fit_spectral_density(
    sampled: &SampledDensity,
    e_th: f64,
    gamma_exp: f64,
) -> Result<(SpectralDensity, FitReport)> {
    let x = &sampled.energies;
    let y = &sampled.dn_de;
    if x.len() < 5 {
        return Err(Error::Model(format!(
            "need at least 5 samples to fit, got {}",
            x.len()
        )));
    }
    let (_, e_r, gamma_r) = fit_lorentzian(x, y)?;
    if !(e_r > e_th) || !(gamma_r > 0.0) {
        return Err(Error::Model(format!(
            "local Breit-Wigner fit gives E_R = {e_r}, Gamma_R = {gamma_r}; no resonance above threshold"
        )));
    }
    let ymax = y.iter().cloned().fold(f64::MIN, f64::max);
    let weight = |v: f64| 1.0 / v.abs().max(1e-2 * ymax);
    let basis = |e: f64, e0: f64| -> (f64, f64) {
        let xi = e - e_th;
        let b = xi.max(0.0).powf(gamma_exp) / ((e - e_r).powi(2) + gamma_r * gamma_r / 4.0)
            * (-xi / e0).exp();
        (b, b * xi)
    };
    let solve = |e0: f64| -> Option<(f64, f64, f64)> {
        let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&e, &v) in x.iter().zip(y) {
            let w = weight(v);
            let (b0, b1) = basis(e, e0);
            let (b0, b1, v) = (b0 * w, b1 * w, v * w);
            s00 += b0 * b0;
            s01 += b0 * b1;
            s11 += b1 * b1;
            r0 += b0 * v;
            r1 += b1 * v;
        }
        let det = s00 * s11 - s01 * s01;
        let (mut a0, mut a1) = if det.abs() > 0.0 {
            ((r0 * s11 - r1 * s01) / det, (s00 * r1 - s01 * r0) / det)
        } else {
            (f64::NAN, f64::NAN)
        };
        // a negative slope would make F change sign beyond the data
        if !(a1 >= 0.0) {
            a0 = r0 / s00;
            a1 = 0.0;
        }
        if !(a0 > 0.0) || !a0.is_finite() {
            return None;
        }
        let cost: f64 = x
            .iter()
            .zip(y)
            .map(|(&e, &v)| {
                let (b0, b1) = basis(e, e0);
                ((a0 * b0 + a1 * b1 - v) * weight(v)).powi(2)
            })
            .sum();
        Some((a0, a1, cost))
    };
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 0..=120 {
        let e0 = 0.02 * 10f64.powf(k as f64 / 30.0);
        if let Some((a0, a1, c)) = solve(e0) {
            if best.is_none_or(|b| c < b.3) {
                best = Some((e0, a0, a1, c));
            }
        }
    }
    let (mut e0, mut a0, mut a1, mut c) =
        best.ok_or_else(|| Error::Model("no admissible form factor found".into()))?;
    // golden-section refinement in log E0
    let (mut lo, mut hi) = (
        (e0 / 10f64.powf(1.0 / 30.0)).ln(),
        (e0 * 10f64.powf(1.0 / 30.0)).ln(),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        let c1 = solve(m1.exp()).map_or(f64::INFINITY, |s| s.2);
        let c2 = solve(m2.exp()).map_or(f64::INFINITY, |s| s.2);
        if c1 < c2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    if let Some((b0, b1, bc)) = solve((0.5 * (lo + hi)).exp()) {
        if bc < c {
            e0 = (0.5 * (lo + hi)).exp();
            a0 = b0;
            a1 = b1;
            c = bc;
        }
    }
    let _ = c;
    let params = FittedDensity {
        e_th,
        gamma_exp,
        e_r,
        gamma_r,
        e0,
        a0,
        a1,
    };
    let mut sq = 0.0;
    let mut max_res: f64 = 0.0;
    for (&e, &v) in x.iter().zip(y) {
        let (b0, b1) = basis(e, e0);
        let r = (a0 * b0 + a1 * b1 - v) / ymax;
        sq += r * r;
        max_res = max_res.max(r.abs());
    }
    let report = FitReport {
        params: params.clone(),
        rms_residual: (sq / x.len() as f64).sqrt(),
        max_residual: max_res,
        points: x.len(),
    };
    let residue = 1.0 / Complex64::new(0.0, -gamma_r);
    let pole = ResonancePole::new(Complex64::new(e_r, -0.5 * gamma_r), residue, e_th)?;
    Ok((SpectralDensity::new(Arc::new(params), vec![pole]), report))
}

/// Default threshold exponent for partial wave `l`: `max(l - 1/2, 1/2)`.
pub fn default_gamma_exp(l: u32) -> f64 {
    (l as f64 - 0.5).max(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz_table(l: u32, n: usize) -> PhaseShiftTable {
        let (e_r, g) = (0.8f64, 0.1f64);
        let rows = (0..n)
            .map(|k| {
                let e = 0.5 + 0.6 * k as f64 / (n - 1) as f64;
                PhaseShiftRow {
                    e,
                    delta: (0.5 * g).atan2(e_r - e),
                    re_t: None,
                }
            })
            .collect();
        PhaseShiftTable::new(rows, l, 0.3).unwrap()
    }

    #[test]
    fn parses_csv_with_directives() {
        let text = "# l = 1\n# e_th = 0.27914\nE_GeV,delta_rad,reT\n0.3,0.1,0.05\n0.4,0.2,\n";
        let (rows, dir) = PhaseShiftTable::parse_csv(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].re_t, None);
        assert_eq!(dir.l, Some(1));
        assert_eq!(dir.e_th, Some(0.27914));
    }

    #[test]
    fn bad_row_reports_line_number() {
        let text = "E_GeV,delta_rad,reT\n0.3,0.1,0.05\n0.4,abc,0.1\n";
        match PhaseShiftTable::parse_csv(text) {
            Err(Error::Data { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unsorted_and_unitarity_violations() {
        let r = |e: f64, t: f64| PhaseShiftRow {
            e,
            delta: 0.0,
            re_t: Some(t),
        };
        assert!(PhaseShiftTable::new(vec![r(0.5, 0.0), r(0.4, 0.0)], 1, 0.3).is_err());
        assert!(PhaseShiftTable::new(vec![r(0.5, 0.6)], 1, 0.3).is_err());
        assert!(PhaseShiftTable::new(vec![r(0.2, 0.0)], 1, 0.3).is_err());
    }

    #[test]
    fn s_wave_beth_uhlenbeck_is_refused() {
        assert!(matches!(
            beth_uhlenbeck_dos(&lorentz_table(0, 50), Differentiation::Spline),
            Err(Error::ThresholdSingularity { l: 0 })
        ));
    }

    #[test]
    fn constant_phase_gives_zero_density() {
        let rows = (0..30)
            .map(|k| PhaseShiftRow {
                e: 0.4 + 0.01 * k as f64,
                delta: 0.7,
                re_t: None,
            })
            .collect();
        let t = PhaseShiftTable::new(rows, 2, 0.3).unwrap();
        for how in [Differentiation::Spline, Differentiation::FiniteDifference] {
            let d = beth_uhlenbeck_dos(&t, how).unwrap();
            assert!(d.dn_de.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn peak_within_one_grid_spacing() {
        let t = lorentz_table(1, 200);
        let d = beth_uhlenbeck_dos(&t, Differentiation::Spline).unwrap();
        let (i, _) = d
            .dn_de
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((d.energies[i] - 0.8).abs() <= 0.6 / 199.0 + 1e-12);
    }

    #[test]
    fn zero_re_t_reduces_to_twice_phase_derivative() {
        let rows: Vec<PhaseShiftRow> = (1..80)
            .map(|k| {
                let e = 0.3 + 0.01 * k as f64;
                PhaseShiftRow {
                    e,
                    delta: (0.05f64).atan2(0.8 - e),
                    re_t: Some(0.0),
                }
            })
            .collect();
        let t = PhaseShiftTable::new(rows, 0, 0.3).unwrap();
        let d = dwell_time_dos(&t, Differentiation::Spline).unwrap();
        for (e, v) in d.energies.iter().zip(&d.dn_de).skip(10).take(50) {
            let exact = 2.0 * 0.05 / ((e - 0.8).powi(2) + 0.0025);
            assert!(
                (v - exact).abs() < 1e-3 * exact.abs().max(1.0),
                "E={e}: {v} vs {exact}"
            );
        }
    }

    #[test]
    fn fit_recovers_breit_wigner_shape() {
        let (e_th, e_r, g, e0) = (0.28, 0.75, 0.15, 0.9);
        let energies: Vec<f64> = (1..400).map(|k| e_th + 0.004 * k as f64).collect();
        let dn_de: Vec<f64> = energies
            .iter()
            .map(|e| {
                (e - e_th).sqrt() / ((e - e_r).powi(2) + g * g / 4.0) * (-(e - e_th) / e0).exp()
            })
            .collect();
        let sampled = SampledDensity::from_interior(energies, dn_de, None);
        let (rho, report) = fit_spectral_density(&sampled, e_th, 0.5).unwrap();
        assert!((report.params.e_r - e_r).abs() < 0.01, "{report:?}");
        assert!((report.params.gamma_r - g).abs() < 0.02, "{report:?}");
        assert!(report.max_residual < 0.05, "{report:?}");
        assert_eq!(rho.poles().len(), 1);
    }
}
