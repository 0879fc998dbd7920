//! Survival amplitude by contour decomposition and by direct Fourier
//! transform.
//!
//! Closing the real-axis integral `∫ρ(E) e^{-iEt} dE` through the lower-right
//! quadrant picks up the resonance pole and leaves an integral along
//! `E = E_th - ix`:
//!
//! ```text
//! A(t) = -2πi Res[ρ(z) e^{-izt}, z_R]
//!        + N e^{-iE_th t} (-i)^{γ+1} ∫_0^∞ P F(E_th - ix) x^γ e^{-xt} dx
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poles::residue_term_at;
use crate::quadrature::{self, Tolerance};
use crate::spectral::{ResonancePole, SpectralDensity, TimePoint};

/// How far the rotated-axis integral extends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailCutoff {
    /// Integrate `x ∈ [0, x_max]` directly.
    FixedXMax(f64),
    /// Integrate in `u = xt` and extend until the weight `u^γ e^{-u}` has
    /// decayed below the tolerance.
    AdaptiveDecay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_cutoff: TailCutoff,
    /// Cutoff in `x` (GeV) used for the decomposition at `t = 0`.
    pub x_max_at_zero: f64,
    /// Direct transform integrates up to `E_th + e_cut_offset` (GeV).
    pub e_cut_offset: f64,
    /// Direct transform refuses `t` beyond this many lifetimes.
    pub t_max_direct_lifetimes: f64,
    /// Direct transform refuses more oscillation periods than this.
    pub max_direct_periods: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_subdivisions: 2_000_000,
            tail_cutoff: TailCutoff::AdaptiveDecay,
            x_max_at_zero: 1e5,
            e_cut_offset: 20.0,
            t_max_direct_lifetimes: 50.0,
            max_direct_periods: 2e5,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameters(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 2 {
            return Err(Error::InvalidParameters(
                "max_subdivisions must be at least 2".into(),
            ));
        }
        if let TailCutoff::FixedXMax(x) = self.tail_cutoff {
            if !(x > 0.0) {
                return Err(Error::InvalidParameters("x_max must be positive".into()));
            }
        }
        if !(self.x_max_at_zero > 0.0
            && self.e_cut_offset > 0.0
            && self.t_max_direct_lifetimes > 0.0)
        {
            return Err(Error::InvalidParameters("cutoffs must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.abs_tol, self.rel_tol)
    }
}

/// Weight in `u` beyond which the tail integral is truncated.
const U_WINDOW: f64 = 40.0;

/// Rotated-axis integral `∫ g(x) x^γ e^{-xt} dx` over `[0, x_max]` in `x`,
/// with `x = w²` on the first panel.
fn tail_integral_x(
    rho: &SpectralDensity,
    t: f64,
    x_max: f64,
    tol: Tolerance,
    max: usize,
) -> Result<(Complex64, f64)> {
    let gamma = rho.gamma_exp();
    let scale = rho.model().rotated_axis_scale();
    let g = |x: f64| rho.continue_to_rotated_axis(x);
    let mut width = PI * scale;
    if t > 0.0 {
        width = width.min(1.0 / t);
    }
    let x1 = width.min(x_max);
    let head = quadrature::integrate(
        |w| {
            let x = w * w;
            g(x).map_or(Complex64::new(f64::NAN, 0.0), |v| {
                v * (2.0 * w.powf(2.0 * gamma + 1.0) * (-x * t).exp())
            })
        },
        &[0.0, x1.sqrt()],
        Tolerance::new(0.5 * tol.abs, tol.rel),
        max,
    )?;
    let mut pts = Vec::new();
    if x_max > x1 {
        quadrature::uniform_panels(x1, x_max, width, &mut pts);
    } else {
        pts.extend([x1, x1]);
    }
    let body = quadrature::integrate(
        |x| {
            g(x).map_or(Complex64::new(f64::NAN, 0.0), |v| {
                v * (x.powf(gamma) * (-x * t).exp())
            })
        },
        &pts,
        Tolerance::new(0.5 * tol.abs, tol.rel),
        max,
    )?;
    Ok((head.value + body.value, head.error + body.error))
}

/// Rotated-axis integral in `u = xt`, returned as `∫ g(u/t) u^γ e^{-u} du`
/// (without the `t^{-(γ+1)}` factor).
fn tail_integral_u(
    rho: &SpectralDensity,
    t: f64,
    tol: Tolerance,
    max: usize,
) -> Result<(Complex64, f64)> {
    let gamma = rho.gamma_exp();
    let scale = rho.model().rotated_axis_scale();
    let g = |x: f64| rho.continue_to_rotated_axis(x);
    let du = (PI * scale * t).min(1.0);
    let part = Tolerance::new(0.5 * tol.abs, tol.rel);

    let head = quadrature::integrate(
        |v| {
            let u = v * v;
            g(u / t).map_or(Complex64::new(f64::NAN, 0.0), |gv| {
                gv * (2.0 * v.powf(2.0 * gamma + 1.0) * (-u).exp())
            })
        },
        &[0.0, du.sqrt()],
        part,
        max,
    )?;
    let integrand = |u: f64| {
        g(u / t).map_or(Complex64::new(f64::NAN, 0.0), |gv| {
            gv * (u.powf(gamma) * (-u).exp())
        })
    };
    let mut pts = Vec::new();
    quadrature::uniform_panels(du, U_WINDOW.max(2.0 * du), du, &mut pts);
    let body = quadrature::integrate(integrand, &pts, part, max)?;
    let mut value = head.value + body.value;
    let mut error = head.error + body.error;

    // extend while the next window still matters
    let mut lo = *pts.last().unwrap_or(&U_WINDOW);
    for _ in 0..8 {
        let hi = 2.0 * lo;
        let mut p = Vec::new();
        quadrature::uniform_panels(lo, hi, du.max((hi - lo) / 64.0), &mut p);
        let ext =
            quadrature::integrate(integrand, &p, Tolerance::new(0.5 * tol.abs, tol.rel), max)?;
        value += ext.value;
        error += ext.error;
        if ext.value.norm() <= 1e-2 * tol.abs.max(tol.rel * value.norm()) {
            return Ok((value, error));
        }
        lo = hi;
    }
    Err(Error::Quadrature {
        requested: tol.abs.max(tol.rel * value.norm()),
        achieved: error,
        intervals: 0,
    })
}

fn tail_with_error(
    rho: &SpectralDensity,
    t: TimePoint,
    q: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    q.validate()?;
    let t = t.gev_inv();
    let gamma = rho.gamma_exp();
    let phase =
        Complex64::new(0.0, -1.0).powf(gamma + 1.0) * Complex64::from_polar(1.0, -rho.e_th() * t);
    // tolerances apply to A_L; convert to the bare integral
    let (integral, err, scale) = match (q.tail_cutoff, t > 0.0) {
        (TailCutoff::FixedXMax(x_max), _) => {
            let tol = Tolerance::new(q.abs_tol, q.rel_tol);
            let (v, e) = tail_integral_x(rho, t, x_max, tol, q.max_subdivisions)?;
            (v, e, 1.0)
        }
        (TailCutoff::AdaptiveDecay, false) => {
            let tol = Tolerance::new(q.abs_tol, q.rel_tol);
            let (v, e) = tail_integral_x(rho, 0.0, q.x_max_at_zero, tol, q.max_subdivisions)?;
            (v, e, 1.0)
        }
        (TailCutoff::AdaptiveDecay, true) => {
            let scale = t.powf(-(gamma + 1.0));
            let tol = Tolerance::new(q.abs_tol / scale, q.rel_tol);
            let (v, e) = tail_integral_u(rho, t, tol, q.max_subdivisions)?;
            (v, e, scale)
        }
    };
    // the integrand already carries N through continue_to_rotated_axis
    Ok((phase * integral * scale, err * scale))
}

/// `A_L(t)`, the rotated-axis part of the amplitude.
///
/// At `t = 0` the integral is truncated at `q.x_max_at_zero`; this value is
/// only used for the contour-closure check.
pub fn tail_term(rho: &SpectralDensity, t: TimePoint, q: &QuadratureSpec) -> Result<Complex64> {
    tail_with_error(rho, t, q).map(|(v, _)| v)
}

/// `(A_exp(t), A_L(t))` for the principal pole of `rho`.
pub fn survival_amplitude(
    rho: &SpectralDensity,
    t: TimePoint,
    q: &QuadratureSpec,
) -> Result<(Complex64, Complex64)> {
    let pole = rho.principal_pole()?;
    let a_exp = residue_term_at(pole, rho, t)?;
    let a_tail = tail_term(rho, t, q)?;
    Ok((a_exp, a_tail))
}

/// `∫ρ(E) e^{-iEt} dE` on the real axis, the independent oracle.
pub fn survival_amplitude_direct(
    rho: &SpectralDensity,
    t: TimePoint,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    q.validate()?;
    let t = t.gev_inv();
    let tau = rho.principal_pole()?.tau;
    if t > q.t_max_direct_lifetimes * tau {
        return Err(Error::OracleRange(format!(
            "t = {:.4} lifetimes exceeds the direct-transform limit of {} lifetimes",
            t / tau,
            q.t_max_direct_lifetimes
        )));
    }
    let periods = q.e_cut_offset * t / (2.0 * PI);
    if periods > q.max_direct_periods {
        return Err(Error::OracleRange(format!(
            "{periods:.3e} oscillation periods exceed the budget of {:.3e}",
            q.max_direct_periods
        )));
    }
    let r = rho.real_axis_transform(
        t,
        rho.e_th() + q.e_cut_offset,
        q.tolerance(),
        q.max_subdivisions,
    )?;
    Ok(r.value)
}

/// Amplitudes and probabilities on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalResult {
    pub model_id: String,
    pub pole: ResonancePole,
    /// Times in GeV⁻¹.
    pub t_grid: Vec<f64>,
    pub a_exp: Vec<Complex64>,
    pub a_tail: Vec<Complex64>,
    pub a_total: Vec<Complex64>,
    pub p_total: Vec<f64>,
    pub p_exp: Vec<f64>,
    pub p_tail: Vec<f64>,
    /// `2 Re(conj(a_exp) a_tail)`, signed.
    pub p_interf: Vec<f64>,
    /// Error estimate of `p_total` propagated from the quadrature.
    pub p_err: Vec<f64>,
}

impl SurvivalResult {
    /// Builds all derived channels from the two amplitudes.
    pub fn from_amplitudes(
        model_id: String,
        pole: ResonancePole,
        t_grid: Vec<f64>,
        a_exp: Vec<Complex64>,
        a_tail: Vec<Complex64>,
        a_err: Vec<f64>,
    ) -> Self {
        let a_total: Vec<Complex64> = a_exp.iter().zip(&a_tail).map(|(a, b)| a + b).collect();
        let p_total = a_total.iter().map(|a| a.norm_sqr()).collect();
        let p_exp = a_exp.iter().map(|a| a.norm_sqr()).collect();
        let p_tail = a_tail.iter().map(|a| a.norm_sqr()).collect();
        let p_interf = a_exp
            .iter()
            .zip(&a_tail)
            .map(|(a, b)| 2.0 * (a.conj() * b).re)
            .collect();
        let p_err = a_total
            .iter()
            .zip(&a_err)
            .map(|(a, e)| 2.0 * a.norm() * e + e * e)
            .collect();
        Self {
            model_id,
            pole,
            t_grid,
            a_exp,
            a_tail,
            a_total,
            p_total,
            p_exp,
            p_tail,
            p_interf,
            p_err,
        }
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.pole.tau
    }

    pub fn t_lifetimes(&self) -> Vec<f64> {
        self.t_grid.iter().map(|t| t / self.pole.tau).collect()
    }

    /// Unit-intercept exponential `e^{-Γ_R t}`.
    pub fn p_exp_ref(&self, i: usize) -> f64 {
        (-self.pole.gamma_r * self.t_grid[i]).exp()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t_GeV_inv,t_lifetimes,P,P_exp,P_tail,P_interf,ReA,ImA\n");
        for i in 0..self.len() {
            let t = self.t_grid[i];
            let a = self.a_total[i];
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                t / self.pole.tau,
                self.p_total[i],
                self.p_exp[i],
                self.p_tail[i],
                self.p_interf[i],
                a.re,
                a.im
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }
}

/// Evaluates the decomposition on every grid point (in parallel). At
/// `t = 0` the total amplitude is set to 1 and the tail to `1 - A_exp(0)`.
pub fn compute_survival_curve(
    rho: &SpectralDensity,
    t_grid: &[TimePoint],
    q: &QuadratureSpec,
) -> Result<SurvivalResult> {
    q.validate()?;
    let pole = *rho.principal_pole()?;
    for w in t_grid.windows(2) {
        if w[1].gev_inv() < w[0].gev_inv() {
            return Err(Error::InvalidParameters("time grid must be sorted".into()));
        }
    }
    let rows: Vec<(Complex64, Complex64, f64)> = t_grid
        .par_iter()
        .map(|&t| -> Result<(Complex64, Complex64, f64)> {
            let a_exp = residue_term_at(&pole, rho, t)?;
            if t.gev_inv() == 0.0 {
                return Ok((a_exp, Complex64::new(1.0, 0.0) - a_exp, 0.0));
            }
            let (a_tail, err) = tail_with_error(rho, t, q)?;
            Ok((a_exp, a_tail, err))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut a_exp, mut a_tail, mut err) = (Vec::new(), Vec::new(), Vec::new());
    for (e, l, r) in rows {
        a_exp.push(e);
        a_tail.push(l);
        err.push(r);
    }
    Ok(SurvivalResult::from_amplitudes(
        rho.id(),
        pole,
        t_grid.iter().map(|t| t.gev_inv()).collect(),
        a_exp,
        a_tail,
        err,
    ))
}

/// `n` points from `lo` to `hi`, logarithmically spaced.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` points from `lo` to `hi`, evenly spaced.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Converts times in lifetimes to [`TimePoint`]s.
pub fn lifetimes_to_points(lifetimes: &[f64], tau: f64) -> Result<Vec<TimePoint>> {
    lifetimes
        .iter()
        .map(|&n| TimePoint::from_lifetimes(n, tau))
        .collect()
}
