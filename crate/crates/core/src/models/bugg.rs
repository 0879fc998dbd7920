use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poles::{find_model_pole, PoleSearchSpec, SearchWindow};
use crate::spectral::{SpectralDensity, SpectralModel};

/// Charged pion mass in GeV.
pub const M_PI_CHARGED: f64 = 0.139_57;

/// Parameters of the Bugg σ amplitude.
///
/// Units: `m`, `m_pi` in GeV; `a`, `s_a` in GeV²; `b1` in GeV and `b2` in
/// GeV⁻¹, so that `b1 + b2 s` is a width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuggParams {
    pub m: f64,
    pub a: f64,
    pub s_a: f64,
    pub b1: f64,
    pub b2: f64,
    pub m_pi: f64,
}

impl BuggParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m, self.a, self.s_a, self.b1, self.b2, self.m_pi];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameters(
                "Bugg parameters must be finite".into(),
            ));
        }
        if !(self.m_pi > 0.0) || !(self.m > 2.0 * self.m_pi) {
            return Err(Error::InvalidParameters(format!(
                "need M > 2 m_pi > 0 (M = {}, m_pi = {})",
                self.m, self.m_pi
            )));
        }
        if !(self.a > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "A = {} must be positive",
                self.a
            )));
        }
        if !(self.s_a < self.m * self.m) {
            return Err(Error::InvalidParameters(format!(
                "s_A = {} must be below M^2",
                self.s_a
            )));
        }
        if self.b2 == 0.0 {
            return Err(Error::InvalidParameters("b2 must be non-zero".into()));
        }
        Ok(())
    }

    pub fn e_th(&self) -> f64 {
        2.0 * self.m_pi
    }
}

/// Bugg σ density `(E - 2m_π)^{1/2} P_σ(E) F_σ(E)` continued to complex `E`
/// through `s = E²`.
#[derive(Debug, Clone)]
pub struct BuggSigma {
    p: BuggParams,
}

impl BuggSigma {
    pub fn new(p: BuggParams) -> Result<Self> {
        p.validate()?;
        Ok(Self { p })
    }

    pub fn params(&self) -> &BuggParams {
        &self.p
    }

    fn m2(&self) -> f64 {
        self.p.m * self.p.m
    }

    /// `Γ²(s)` without the factor `e^{-2(s-M²)/A}`.
    fn width_sq_base(&self, s: Complex64) -> Complex64 {
        let p = &self.p;
        let four_m2 = 4.0 * p.m_pi * p.m_pi;
        let ratio = (s - p.s_a) / (self.m2() - p.s_a);
        let b = s * p.b2 + p.b1;
        (s - four_m2) / s * ratio * ratio * b * b
    }

    /// `-(s - M²)/A`; the form factor carries `e^{ℓ}` and `Γ²` carries `e^{2ℓ}`.
    fn log_weight(&self, s: Complex64) -> Complex64 {
        -(s - self.m2()) / self.p.a
    }

    /// `Γ²(s)`.
    pub fn width_sq(&self, s: Complex64) -> Complex64 {
        self.width_sq_base(s) * (2.0 * self.log_weight(s)).exp()
    }

    /// `D(s) = (M² - s)² + M² Γ²(s)`.
    fn denominator(&self, s: Complex64) -> Complex64 {
        let d = self.m2() - s;
        d * d + self.m2() * self.width_sq(s)
    }

    /// Form factor without `e^{-(s-M²)/A}`. The `1/(M² - s)` and `1/(s - s_A)`
    /// terms of the bracket are multiplied through so no cancellation occurs
    /// at `s = M²` or `s = s_A`.
    fn form_factor_base(&self, e: Complex64) -> Complex64 {
        let p = &self.p;
        let s = e * e;
        let u = s - p.s_a;
        let v = self.m2() - s;
        let c = (s * p.b2 + p.b1) / p.b2;
        let bracket = u * v + c * (u + v + u * v * (-0.5 / s - 1.0 / p.a));
        (e + 2.0 * p.m_pi).sqrt() / (self.m2() - p.s_a) * bracket
    }

    /// Phase shift `atan2(M Γ(s), M² - s)` on the physical axis, with
    /// `Γ(s) = ρ(s) (s - s_A)/(M² - s_A) (b1 + b2 s) e^{-(s-M²)/A}`.
    pub fn phase_shift(&self, e: f64) -> f64 {
        let p = &self.p;
        let s = e * e;
        let rho = (1.0 - 4.0 * p.m_pi * p.m_pi / s).max(0.0).sqrt();
        let width = rho * (s - p.s_a) / (self.m2() - p.s_a)
            * (p.b1 + p.b2 * s)
            * (-(s - self.m2()) / p.a).exp();
        (p.m * width).atan2(self.m2() - s)
    }

    /// `Re T = sin(2δ)/2` for the elastic amplitude with phase shift `δ`.
    pub fn re_t(&self, e: f64) -> f64 {
        0.5 * (2.0 * self.phase_shift(e)).sin()
    }
}

impl SpectralModel for BuggSigma {
    fn id(&self) -> String {
        let p = &self.p;
        format!(
            "bugg(M={},A={},s_A={},b1={},b2={},m_pi={})",
            p.m, p.a, p.s_a, p.b1, p.b2, p.m_pi
        )
    }

    fn threshold(&self) -> f64 {
        self.p.e_th()
    }

    fn gamma_exp(&self) -> f64 {
        0.5
    }

    fn pole_part(&self, z: Complex64) -> Complex64 {
        4.0 * self.p.m * self.p.b2 / self.denominator(z * z)
    }

    fn form_factor(&self, z: Complex64) -> Complex64 {
        self.form_factor_base(z) * self.log_weight(z * z).exp()
    }

    fn pole_form_product(&self, z: Complex64) -> Complex64 {
        // Along E_th - ix the weight w = e^{ℓ} grows like e^{x²/A}; dividing
        // numerator and denominator by w keeps both finite.
        let s = z * z;
        let ell = self.log_weight(s);
        let g0 = self.width_sq_base(s);
        let f0 = self.form_factor_base(z);
        let d = self.m2() - s;
        let c = 4.0 * self.p.m * self.p.b2;
        if ell.re <= 0.0 {
            let w = ell.exp();
            c * f0 * w / (d * d + self.m2() * g0 * w * w)
        } else {
            let winv = (-ell).exp();
            c * f0 * winv / (d * d * winv * winv + self.m2() * g0)
        }
    }

    fn inverse_pole_part(&self, z: Complex64) -> Complex64 {
        self.denominator(z * z) / (4.0 * self.p.m * self.p.b2)
    }

    fn inverse_pole_part_derivative(&self, z: Complex64) -> Option<Complex64> {
        let p = &self.p;
        let s = z * z;
        let m2 = self.m2();
        let four_m2 = 4.0 * p.m_pi * p.m_pi;
        let r = 1.0 - four_m2 / s;
        let dr = four_m2 / (s * s);
        let a = (s - p.s_a) / (m2 - p.s_a);
        let da = 1.0 / (m2 - p.s_a);
        let b = s * p.b2 + p.b1;
        let db = p.b2;
        let e = (-2.0 * (s - m2) / p.a).exp();
        let de = -2.0 * e / p.a;
        let dg2 = dr * a * a * b * b * e
            + r * (2.0 * a * da * b * b * e + 2.0 * a * a * b * db * e + a * a * b * b * de);
        let dd_ds = -2.0 * (m2 - s) + m2 * dg2;
        Some(2.0 * z * dd_ds / (4.0 * p.m * p.b2))
    }

    fn feature_energies(&self) -> Vec<f64> {
        vec![self.p.m]
    }
}

/// Window in which the physical σ pole is searched: `E_th < Re z < 1 GeV`,
/// `-1 GeV < Im z < 0`. Poles of the parametrization outside it are dropped.
pub fn physical_window(p: &BuggParams) -> SearchWindow {
    SearchWindow {
        re_min: p.e_th(),
        re_max: 1.0,
        im_min: -1.0,
        im_max: 0.0,
    }
}

/// Unnormalized Bugg density with the single pole found in
/// [`physical_window`].
pub fn make_bugg_sigma(p: BuggParams) -> Result<SpectralDensity> {
    let model = Arc::new(BuggSigma::new(p)?);
    let bare = SpectralDensity::new(model.clone(), Vec::new());
    let spec = PoleSearchSpec::new(physical_window(&p), 1e-12, 100)?;
    let pole =
        find_model_pole(&bare, &spec).map_err(|e| Error::Model(format!("{}: {e}", model.id())))?;
    Ok(SpectralDensity::new(model, vec![pole]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> BuggParams {
        BuggParams {
            m: 0.9264,
            a: 1.082,
            s_a: 0.41 * M_PI_CHARGED * M_PI_CHARGED,
            b1: 0.5843,
            b2: 1.6663,
            m_pi: M_PI_CHARGED,
        }
    }

    #[test]
    fn width_vanishes_at_threshold_and_adler_zero() {
        let m = BuggSigma::new(params()).unwrap();
        let p = params();
        assert_eq!(
            m.width_sq(Complex64::new(4.0 * p.m_pi * p.m_pi, 0.0)),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            m.width_sq(Complex64::new(p.s_a, 0.0)),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn form_factor_continuous_through_mass() {
        let m = BuggSigma::new(params()).unwrap();
        let m2 = params().m * params().m;
        let eps = 1e-8;
        let lo = m.form_factor(Complex64::new((m2 - eps).sqrt(), 0.0));
        let hi = m.form_factor(Complex64::new((m2 + eps).sqrt(), 0.0));
        assert!((lo - hi).norm() < 1e-4 * lo.norm());
    }

    #[test]
    fn combined_product_matches_factors() {
        let m = BuggSigma::new(params()).unwrap();
        for z in [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.7, -0.3),
            Complex64::new(0.27914, -1.2),
        ] {
            let direct = m.pole_part(z) * m.form_factor(z);
            let combined = m.pole_form_product(z);
            assert!((direct - combined).norm() < 1e-12 * direct.norm(), "{z}");
        }
    }

    #[test]
    fn product_stays_finite_far_down_the_rotated_axis() {
        let m = BuggSigma::new(params()).unwrap();
        for x in [10.0, 30.0, 100.0] {
            let v = m.pole_form_product(Complex64::new(params().e_th(), -x));
            assert!(v.re.is_finite() && v.im.is_finite(), "x = {x}: {v}");
        }
    }

    #[test]
    fn analytic_derivative_matches_difference_quotient() {
        let m = BuggSigma::new(params()).unwrap();
        let z = Complex64::new(0.55, -0.2);
        let h = 1e-6;
        let fd = (m.inverse_pole_part(z + h) - m.inverse_pole_part(z - h)) / (2.0 * h);
        let an = m.inverse_pole_part_derivative(z).unwrap();
        assert!((fd - an).norm() < 1e-7 * an.norm());
    }

    #[test]
    fn rejects_invalid_parameters() {
        let mut p = params();
        p.a = -1.0;
        assert!(BuggSigma::new(p).is_err());
        let mut p = params();
        p.m = 0.2;
        assert!(BuggSigma::new(p).is_err());
    }

    #[test]
    fn phase_shift_passes_ninety_degrees_at_mass() {
        let m = BuggSigma::new(params()).unwrap();
        let p = params();
        let below = m.phase_shift(p.m - 1e-6);
        let above = m.phase_shift(p.m + 1e-6);
        assert!(below < std::f64::consts::FRAC_PI_2 && above > std::f64::consts::FRAC_PI_2);
    }
}
