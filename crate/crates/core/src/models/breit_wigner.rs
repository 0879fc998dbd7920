use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ResonancePole, SpectralDensity, SpectralModel};

/// Breit-Wigner resonance with a threshold factor and an exponential form
/// factor `e^{-E/E_0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreitWignerParams {
    pub e_r: f64,
    pub gamma_r: f64,
    pub e_th: f64,
    pub e0: f64,
    pub gamma_exp: f64,
}

impl BreitWignerParams {
    pub fn new(e_r: f64, gamma_r: f64, e_th: f64, e0: f64) -> Self {
        Self {
            e_r,
            gamma_r,
            e_th,
            e0,
            gamma_exp: 0.5,
        }
    }

    /// Same mass, threshold and form factor with `Γ_R = R (E_R - E_th)`.
    pub fn with_r_ratio(&self, r: f64) -> Self {
        Self {
            gamma_r: r * (self.e_r - self.e_th),
            ..*self
        }
    }

    pub fn with_gamma_exp(self, gamma_exp: f64) -> Self {
        Self { gamma_exp, ..self }
    }

    pub fn r_ratio(&self) -> f64 {
        self.gamma_r / (self.e_r - self.e_th)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.e_r, self.gamma_r, self.e_th, self.e0, self.gamma_exp]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameters(
                "Breit-Wigner parameters must be finite".into(),
            ));
        }
        if !(self.e_r > self.e_th) {
            return Err(Error::InvalidParameters(format!(
                "E_R = {} GeV must exceed E_th = {} GeV",
                self.e_r, self.e_th
            )));
        }
        if !(self.gamma_r > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "Gamma_R = {} must be positive",
                self.gamma_r
            )));
        }
        if !(self.e0 > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "E0 = {} must be positive",
                self.e0
            )));
        }
        if !(self.gamma_exp >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "threshold exponent {} must be non-negative",
                self.gamma_exp
            )));
        }
        Ok(())
    }

    pub fn pole(&self) -> Complex64 {
        Complex64::new(self.e_r, -0.5 * self.gamma_r)
    }
}

#[derive(Debug, Clone)]
pub struct BreitWigner {
    params: BreitWignerParams,
}

impl BreitWigner {
    pub fn params(&self) -> &BreitWignerParams {
        &self.params
    }
}

impl SpectralModel for BreitWigner {
    fn id(&self) -> String {
        let p = &self.params;
        format!(
            "bw(E_R={},Gamma_R={},E_th={},E0={},gamma={})",
            p.e_r, p.gamma_r, p.e_th, p.e0, p.gamma_exp
        )
    }

    fn threshold(&self) -> f64 {
        self.params.e_th
    }

    fn gamma_exp(&self) -> f64 {
        self.params.gamma_exp
    }

    fn pole_part(&self, z: Complex64) -> Complex64 {
        1.0 / self.inverse_pole_part(z)
    }

    fn form_factor(&self, z: Complex64) -> Complex64 {
        (-z / self.params.e0).exp()
    }

    fn inverse_pole_part(&self, z: Complex64) -> Complex64 {
        let d = z - self.params.e_r;
        d * d + 0.25 * self.params.gamma_r * self.params.gamma_r
    }

    fn inverse_pole_part_derivative(&self, z: Complex64) -> Option<Complex64> {
        Some(2.0 * (z - self.params.e_r))
    }

    fn feature_energies(&self) -> Vec<f64> {
        vec![self.params.e_r]
    }

    fn rotated_axis_scale(&self) -> f64 {
        // e^{-z/E0} turns by one radian per E0 along E_th - ix
        self.params.e0.min(1.0)
    }
}

/// Unnormalized Breit-Wigner density with its pole `E_R - iΓ_R/2` and the
/// closed-form residue `1/(-iΓ_R)` of the pole part.
pub fn make_breit_wigner(p: BreitWignerParams) -> Result<SpectralDensity> {
    p.validate()?;
    let residue = 1.0 / Complex64::new(0.0, -p.gamma_r);
    let pole = ResonancePole::new(p.pole(), residue, p.e_th)?;
    Ok(SpectralDensity::new(
        Arc::new(BreitWigner { params: p }),
        vec![pole],
    ))
}
