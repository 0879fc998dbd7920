//! Spectral densities of unstable states.
//!
//! A density is stored in the factorized form
//! `ρ(E) = N (E - E_th)^γ P(E) F(E)` where `P` carries the resonance pole(s)
//! and `F` is a smooth form factor. Both factors are analytic functions that
//! a model evaluates at complex energies; the contour decomposition of the
//! survival amplitude continues them onto the ray `E_th - ix`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{self, Integral, Tolerance};

/// ℏ in GeV·s.
pub const HBAR_GEV_S: f64 = 6.582_119_569e-25;

/// Real energy in GeV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Energy(pub f64);

impl From<f64> for Energy {
    fn from(v: f64) -> Self {
        Energy(v)
    }
}

/// Complex energy in GeV. Resonance poles live at `E_R - iΓ_R/2`.
pub type ComplexEnergy = Complex64;

/// Time in GeV⁻¹ (ℏ = 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TimePoint(f64);

impl TimePoint {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t >= 0.0 {
            Ok(TimePoint(t))
        } else {
            Err(Error::InvalidParameters(format!(
                "time must be finite and non-negative, got {t}"
            )))
        }
    }

    pub fn from_lifetimes(n: f64, tau: f64) -> Result<Self> {
        Self::new(n * tau)
    }

    pub fn gev_inv(self) -> f64 {
        self.0
    }

    pub fn lifetimes(self, tau: f64) -> f64 {
        self.0 / tau
    }

    pub fn seconds(self) -> f64 {
        self.0 * HBAR_GEV_S
    }
}

/// The analytic ingredients of a spectral density.
///
/// `pole_part` and `form_factor` must be analytic in the closed lower-right
/// quadrant `Re z ≥ E_th, Im z ≤ 0` apart from the poles of `pole_part`.
pub trait SpectralModel: Send + Sync + fmt::Debug {
    fn id(&self) -> String;

    fn threshold(&self) -> f64;

    fn gamma_exp(&self) -> f64;

    fn pole_part(&self, z: Complex64) -> Complex64;

    fn form_factor(&self, z: Complex64) -> Complex64;

    /// `P(z) F(z)`. Models whose factors overflow separately while the
    /// product stays finite override this with a combined evaluation.
    fn pole_form_product(&self, z: Complex64) -> Complex64 {
        self.pole_part(z) * self.form_factor(z)
    }

    /// `D(z) = 1 / P(z)`, the function whose zeros are the poles.
    fn inverse_pole_part(&self, z: Complex64) -> Complex64 {
        1.0 / self.pole_part(z)
    }

    /// Analytic `D'(z)` when the model can provide it.
    fn inverse_pole_part_derivative(&self, _z: Complex64) -> Option<Complex64> {
        None
    }

    /// Real energies where the density has structure (quadrature breakpoints).
    fn feature_energies(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Length scale (GeV) of oscillation of `P F` along `E_th - ix`, used to
    /// seed the rotated-axis quadrature partition.
    fn rotated_axis_scale(&self) -> f64 {
        1.0
    }

    /// True when `P(conj z) = conj P(z)` and likewise for `F`.
    fn has_real_parameters(&self) -> bool {
        true
    }
}

/// A resonance pole of the pole part together with its derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePole {
    pub z_r: ComplexEnergy,
    pub residue_of_pole_part: Complex64,
    pub e_r: f64,
    pub gamma_r: f64,
    pub tau: f64,
    pub r_ratio: f64,
}

impl ResonancePole {
    pub fn new(z_r: ComplexEnergy, residue_of_pole_part: Complex64, e_th: f64) -> Result<Self> {
        let e_r = z_r.re;
        let gamma_r = -2.0 * z_r.im;
        if !(gamma_r > 0.0) || !gamma_r.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "pole {z_r} is not in the lower half plane"
            )));
        }
        if !(e_r > e_th) {
            return Err(Error::InvalidParameters(format!(
                "pole mass {e_r} GeV must lie above threshold {e_th} GeV"
            )));
        }
        Ok(Self {
            z_r,
            residue_of_pole_part,
            e_r,
            gamma_r,
            tau: 1.0 / gamma_r,
            r_ratio: gamma_r / (e_r - e_th),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDensity {
    model: Arc<dyn SpectralModel>,
    norm: f64,
    poles: Vec<ResonancePole>,
}

impl SpectralDensity {
    pub fn new(model: Arc<dyn SpectralModel>, poles: Vec<ResonancePole>) -> Self {
        Self {
            model,
            norm: 1.0,
            poles,
        }
    }

    pub fn with_norm(mut self, norm: f64) -> Self {
        self.norm = norm;
        self
    }

    pub fn model(&self) -> &dyn SpectralModel {
        self.model.as_ref()
    }

    pub fn id(&self) -> String {
        self.model.id()
    }

    pub fn e_th(&self) -> f64 {
        self.model.threshold()
    }

    pub fn gamma_exp(&self) -> f64 {
        self.model.gamma_exp()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn poles(&self) -> &[ResonancePole] {
        &self.poles
    }

    /// The unique pole used by the contour decomposition.
    pub fn principal_pole(&self) -> Result<&ResonancePole> {
        match self.poles.as_slice() {
            [p] => Ok(p),
            [] => Err(Error::Model(format!(
                "{}: no physical pole registered",
                self.id()
            ))),
            many => Err(Error::PoleAmbiguity {
                in_window: many.iter().map(|p| p.z_r).collect(),
                all_roots: many.iter().map(|p| p.z_r).collect(),
            }),
        }
    }

    /// `N (E - E_th)^γ P(E) F(E)` for real `E ≥ E_th`.
    pub fn evaluate_density(&self, e: Energy) -> Result<f64> {
        let e_th = self.e_th();
        if !e.0.is_finite() || e.0 < e_th {
            return Err(Error::Domain {
                energy: e.0,
                threshold: e_th,
            });
        }
        Ok(self.density_unchecked(e.0))
    }

    pub(crate) fn density_unchecked(&self, e: f64) -> f64 {
        let dx = e - self.e_th();
        if dx <= 0.0 {
            return if self.gamma_exp() > 0.0 {
                0.0
            } else {
                f64::NAN
            };
        }
        self.norm
            * dx.powf(self.gamma_exp())
            * self.model.pole_form_product(Complex64::new(e, 0.0)).re
    }

    /// Copy of the density rescaled so that `∫ρ dE = 1`.
    pub fn normalize(&self, e_max_hint: Energy) -> Result<SpectralDensity> {
        let e_th = self.e_th();
        let e_cut = e_max_hint.0.max(e_th + 1.0);
        let raw = self.clone().with_norm(1.0);
        raw.check_positivity(e_cut)?;
        let tol = Tolerance::new(1e-16, 1e-12);
        let integral = raw
            .real_axis_transform(0.0, e_cut, tol, 200_000)
            .map_err(|e| Error::Model(format!("{}: density not integrable ({e})", self.id())))?;
        let total = integral.value.re;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Model(format!(
                "{}: density integrates to {total}",
                self.id()
            )));
        }
        Ok(raw.with_norm(1.0 / total))
    }

    fn check_positivity(&self, e_cut: f64) -> Result<()> {
        let e_th = self.e_th();
        let mut grid: Vec<f64> = (1..=4000)
            .map(|k| e_th + (e_cut - e_th) * (k as f64 / 4000.0).powi(2))
            .collect();
        grid.extend(self.feature_points(e_cut));
        for e in grid {
            let v = self.density_unchecked(e);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Model(format!(
                    "{}: density is {v} at E = {e} GeV (must be finite and non-negative)",
                    self.id()
                )));
            }
        }
        Ok(())
    }

    /// `N P(E_th - ix) F(E_th - ix)` on the rotated integration axis.
    pub fn continue_to_rotated_axis(&self, x: f64) -> Result<Complex64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "rotated-axis coordinate must be >= 0, got {x}"
            )));
        }
        let z = Complex64::new(self.e_th(), -x);
        let v = self.norm * self.model.pole_form_product(z);
        if !v.re.is_finite() || !v.im.is_finite() {
            let nearest = self
                .poles
                .iter()
                .map(|p| p.z_r)
                .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
                .unwrap_or(z);
            return Err(Error::Continuation {
                z,
                pole: nearest,
                distance: (nearest - z).norm(),
            });
        }
        Ok(v)
    }

    /// Energy moments `(mean, variance)` of the density.
    pub fn energy_moments(&self, e_cut: f64) -> Result<(f64, f64)> {
        let tol = Tolerance::new(1e-15, 1e-12);
        let e_th = self.e_th();
        let raw = |k: i32| -> Result<f64> {
            let pts = self.breakpoints(e_th, e_cut, 0.0);
            let (v, _) = quadrature::integrate_real(
                |e| self.density_unchecked(e) * e.powi(k),
                &pts,
                tol,
                200_000,
            )?;
            Ok(v)
        };
        let m0 = raw(0)?;
        let m1 = raw(1)? / m0;
        let m2 = raw(2)? / m0;
        Ok((m1, m2 - m1 * m1))
    }

    pub(crate) fn feature_points(&self, e_cut: f64) -> Vec<f64> {
        let e_th = self.e_th();
        let mut pts = self.model.feature_energies();
        for p in &self.poles {
            pts.push(p.e_r);
            for k in [0.5, 2.0, 10.0, 50.0] {
                pts.push(p.e_r - k * p.gamma_r);
                pts.push(p.e_r + k * p.gamma_r);
            }
        }
        pts.retain(|&e| e > e_th && e < e_cut && e.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn breakpoints(&self, lo: f64, hi: f64, t: f64) -> Vec<f64> {
        let mut fixed = vec![lo];
        fixed.extend(self.feature_points(hi).into_iter().filter(|&e| e > lo));
        fixed.push(hi);
        if t <= 0.0 {
            return fixed;
        }
        let period = 2.0 * PI / t;
        let mut pts = Vec::new();
        for w in fixed.windows(2) {
            quadrature::uniform_panels(w[0], w[1], period, &mut pts);
        }
        pts
    }

    /// `∫_{E_th}^{∞} ρ(E) e^{-iEt} dE`, integrated numerically up to `e_cut`
    /// and closed with a local exponential fit of the density beyond it.
    pub(crate) fn real_axis_transform(
        &self,
        t: f64,
        e_cut: f64,
        tol: Tolerance,
        max_intervals: usize,
    ) -> Result<Integral> {
        let e_th = self.e_th();
        let gamma = self.gamma_exp();
        let half = Tolerance::new(0.5 * tol.abs, tol.rel);

        // threshold panel in w = sqrt(E - E_th) removes the algebraic endpoint
        let first_feature = self.feature_points(e_cut).first().copied().unwrap_or(e_cut);
        let mut delta = (0.5 * (first_feature - e_th)).min(0.05).min(e_cut - e_th);
        if t > 0.0 {
            delta = delta.min(8.0 * PI / t);
        }
        let phase = |e: f64| Complex64::from_polar(1.0, -e * t);
        let head = quadrature::integrate(
            |w| {
                let e = e_th + w * w;
                let pf = self.model.pole_form_product(Complex64::new(e, 0.0)).re;
                phase(e) * (2.0 * self.norm * w.powf(2.0 * gamma + 1.0) * pf)
            },
            &[0.0, delta.sqrt()],
            half,
            max_intervals,
        )?;

        let pts = self.breakpoints(e_th + delta, e_cut, t);
        let body = quadrature::integrate(
            |e| phase(e) * self.density_unchecked(e),
            &pts,
            half,
            max_intervals,
        )?;

        // exponential extrapolation beyond the cut
        let rho_c = self.density_unchecked(e_cut);
        let mut tail = Complex64::new(0.0, 0.0);
        if rho_c > 0.0 {
            let h = 1e-3 * (e_cut - e_th);
            let lo = self.density_unchecked(e_cut - h);
            let hi = self.density_unchecked(e_cut + h);
            let kappa = if lo > 0.0 && hi > 0.0 {
                -(hi.ln() - lo.ln()) / (2.0 * h)
            } else {
                f64::INFINITY
            };
            if !(kappa > 0.0) {
                return Err(Error::Model(format!(
                    "{}: density does not decay at the cutoff {e_cut} GeV",
                    self.id()
                )));
            }
            if kappa.is_finite() {
                tail = phase(e_cut) * rho_c / Complex64::new(kappa, t);
            }
        }

        Ok(Integral {
            value: head.value + body.value + tail,
            error: head.error + body.error + 1e-3 * tail.norm(),
            intervals: head.intervals + body.intervals,
        })
    }
}
