//! Pole search on `D(z) = 1/P(z)` and residues of `ρ(z) e^{-izt}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ResonancePole, SpectralDensity, SpectralModel, TimePoint};

/// Open rectangle `re_min < Re z < re_max`, `im_min < Im z < im_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchWindow {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleSearchSpec {
    pub window: SearchWindow,
    /// Extra seeds tried before the default ones.
    pub seeds: Vec<Complex64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl PoleSearchSpec {
    pub fn new(window: SearchWindow, tol: f64, max_iter: usize) -> Result<Self> {
        if !(window.im_max <= 0.0) {
            return Err(Error::InvalidParameters(
                "pole search window must lie in the lower half plane".into(),
            ));
        }
        if !(window.re_min < window.re_max && window.im_min < window.im_max) {
            return Err(Error::InvalidParameters(
                "pole search window is empty".into(),
            ));
        }
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidParameters(
                "pole search needs tol > 0 and max_iter > 0".into(),
            ));
        }
        Ok(Self {
            window,
            seeds: Vec::new(),
            tol,
            max_iter,
        })
    }

    pub fn with_seeds(mut self, seeds: Vec<Complex64>) -> Self {
        self.seeds = seeds;
        self
    }

    /// Explicit seeds, then window corners (pulled 5% inside), the center,
    /// and a Breit-Wigner estimate from the real-axis peak of `|P F|`.
    fn all_seeds(&self, model: &dyn SpectralModel) -> Vec<Complex64> {
        let w = &self.window;
        let mut seeds = self.seeds.clone();
        let dre = 0.05 * (w.re_max - w.re_min);
        let dim = 0.05 * (w.im_max - w.im_min);
        for re in [w.re_min + dre, w.re_max - dre] {
            for im in [w.im_min + dim, w.im_max - dim] {
                seeds.push(Complex64::new(re, im));
            }
        }
        seeds.push(w.center());
        if let Some(z) = peak_estimate(model, w) {
            seeds.push(z);
        }
        seeds
    }
}

/// `E_peak - i FWHM/2` from a scan of `|P(E)|` over the window's real range.
fn peak_estimate(model: &dyn SpectralModel, w: &SearchWindow) -> Option<Complex64> {
    const N: usize = 2000;
    let xs: Vec<f64> = (0..=N)
        .map(|k| w.re_min + (w.re_max - w.re_min) * k as f64 / N as f64)
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&e| model.pole_part(Complex64::new(e, 0.0)).norm())
        .collect();
    let (imax, &ymax) = ys
        .iter()
        .enumerate()
        .filter(|(_, y)| y.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if imax == 0 || imax == N {
        return None;
    }
    let half = 0.5 * ymax;
    let left = (0..imax).rev().find(|&k| ys[k] < half).map(|k| xs[k]);
    let right = (imax..=N).find(|&k| ys[k] < half).map(|k| xs[k]);
    let e = xs[imax];
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (e - l),
        (None, Some(r)) => 2.0 * (r - e),
        (None, None) => return None,
    };
    Some(Complex64::new(e, -0.5 * fwhm))
}

/// `D'(z)`, analytic when the model provides it, otherwise a Richardson
/// extrapolated central difference.
pub fn inverse_derivative(model: &dyn SpectralModel, z: Complex64) -> Complex64 {
    model.inverse_pole_part_derivative(z).unwrap_or_else(|| {
        richardson_derivative(|w| model.inverse_pole_part(w), z, 1e-3 * z.norm().max(1e-3))
    })
}

/// Derivative of an analytic function by central differences with three
/// levels of Richardson extrapolation (error `O(h^8)`).
pub fn richardson_derivative<F: Fn(Complex64) -> Complex64>(
    f: F,
    z: Complex64,
    h: f64,
) -> Complex64 {
    let central = |h: f64| (f(z + h) - f(z - h)) / (2.0 * h);
    let mut table = [
        central(h),
        central(h / 2.0),
        central(h / 4.0),
        central(h / 8.0),
    ];
    let mut factor = 4.0;
    for level in 1..4 {
        for k in 0..4 - level {
            table[k] = (table[k + 1] * factor - table[k]) / (factor - 1.0);
        }
        factor *= 4.0;
    }
    table[0]
}

fn newton(model: &dyn SpectralModel, seed: Complex64, spec: &PoleSearchSpec) -> Option<Complex64> {
    let w = &spec.window;
    let max_step = (w.re_max - w.re_min).hypot(w.im_max - w.im_min);
    let mut z = seed;
    for _ in 0..spec.max_iter {
        let d = model.inverse_pole_part(z);
        let dp = inverse_derivative(model, z);
        if !(d.re.is_finite() && d.im.is_finite() && dp.norm() > 0.0 && dp.norm().is_finite()) {
            return None;
        }
        let mut step = d / dp;
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        z -= step;
        if step.norm() <= spec.tol * z.norm().max(1.0) {
            let d = model.inverse_pole_part(z);
            let dp = inverse_derivative(model, z);
            if d.norm() <= spec.tol * dp.norm() * z.norm().max(1.0) {
                return Some(z);
            }
        }
    }
    None
}

/// All distinct roots of `D` reached from the seeds, in discovery order.
pub fn find_roots(model: &dyn SpectralModel, spec: &PoleSearchSpec) -> Vec<Complex64> {
    let mut roots: Vec<Complex64> = Vec::new();
    for seed in spec.all_seeds(model) {
        if let Some(z) = newton(model, seed, spec) {
            if roots
                .iter()
                .all(|r| (r - z).norm() >= 10.0 * spec.tol * z.norm().max(1.0))
            {
                roots.push(z);
            }
        }
    }
    roots
}

/// Ratio of mean `|D|` on circles of radius `r` and `r/2` around `z`;
/// about 2 for a simple zero, 4 for a double one.
fn growth_ratio(model: &dyn SpectralModel, z: Complex64, r: f64) -> f64 {
    let mean = |radius: f64| {
        (0..16)
            .map(|k| {
                model
                    .inverse_pole_part(
                        z + Complex64::from_polar(radius, 2.0 * PI * k as f64 / 16.0),
                    )
                    .norm()
            })
            .sum::<f64>()
            / 16.0
    };
    mean(r) / mean(0.5 * r)
}

/// Locates the unique simple pole of `P` inside the window.
pub fn find_model_pole(rho: &SpectralDensity, spec: &PoleSearchSpec) -> Result<ResonancePole> {
    let model = rho.model();
    let roots = find_roots(model, spec);
    if roots.is_empty() {
        return Err(Error::PoleSearch(format!(
            "Newton iteration did not converge from any seed for {}",
            model.id()
        )));
    }
    let inside: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|z| spec.window.contains(*z))
        .collect();
    if inside.len() != 1 {
        return Err(Error::PoleAmbiguity {
            in_window: inside,
            all_roots: roots,
        });
    }
    let z = inside[0];
    let r = 1e-4 * (-z.im).max(1e-6);
    let ratio = growth_ratio(model, z, r);
    if !(1.5..3.0).contains(&ratio) {
        return Err(Error::PoleSearch(format!(
            "root {z} is not simple (|D| growth ratio {ratio:.3})"
        )));
    }
    let residue = 1.0 / inverse_derivative(model, z);
    ResonancePole::new(z, residue, rho.e_th())
}

/// Residue of `P` at `z` from the trapezoid rule for `(1/2πi)∮P dz` on a
/// circle of the given radius.
pub fn contour_residue(
    model: &dyn SpectralModel,
    z: Complex64,
    radius: f64,
    nodes: usize,
) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..nodes {
        let u = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
        sum += model.pole_part(z + radius * u) * u;
    }
    sum * radius / nodes as f64
}

/// `-2πi N (z_R - E_th)^γ Res[P, z_R] F(z_R) e^{-i z_R t}`.
pub fn residue_term_at(
    pole: &ResonancePole,
    rho: &SpectralDensity,
    t: TimePoint,
) -> Result<Complex64> {
    let base = pole.z_r - rho.e_th();
    if base.im == 0.0 && base.re <= 0.0 {
        return Err(Error::Branch(pole.z_r));
    }
    debug_assert!(pole.z_r.im < 0.0);
    let threshold = base.powf(rho.gamma_exp());
    let ff = rho.model().form_factor(pole.z_r);
    let phase = (Complex64::new(0.0, -1.0) * pole.z_r * t.gev_inv()).exp();
    Ok(Complex64::new(0.0, -2.0 * PI)
        * rho.norm()
        * threshold
        * pole.residue_of_pole_part
        * ff
        * phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::breit_wigner::{make_breit_wigner, BreitWignerParams};

    fn bw() -> SpectralDensity {
        make_breit_wigner(BreitWignerParams::new(0.542, 0.498, 0.27914, 1.1)).unwrap()
    }

    fn window() -> SearchWindow {
        SearchWindow {
            re_min: 0.27914,
            re_max: 1.0,
            im_min: -1.0,
            im_max: 0.0,
        }
    }

    #[test]
    fn breit_wigner_pole_is_closed_form() {
        let rho = bw();
        let spec = PoleSearchSpec::new(window(), 1e-13, 100).unwrap();
        let pole = find_model_pole(&rho, &spec).unwrap();
        assert!((pole.z_r - Complex64::new(0.542, -0.249)).norm() < 1e-12);
        let exact = 1.0 / Complex64::new(0.0, -0.498);
        assert!((pole.residue_of_pole_part - exact).norm() < 1e-12 * exact.norm());
    }

    #[test]
    fn empty_window_is_ambiguity() {
        let rho = bw();
        let w = SearchWindow {
            re_min: 0.7,
            re_max: 1.0,
            im_min: -1.0,
            im_max: 0.0,
        };
        let spec = PoleSearchSpec::new(w, 1e-12, 100).unwrap();
        match find_model_pole(&rho, &spec) {
            Err(Error::PoleAmbiguity {
                in_window,
                all_roots,
            }) => {
                assert!(in_window.is_empty());
                assert!(!all_roots.is_empty());
            }
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn spec_rejects_upper_half_plane() {
        let mut w = window();
        w.im_max = 0.5;
        assert!(PoleSearchSpec::new(w, 1e-12, 10).is_err());
        assert!(PoleSearchSpec::new(window(), 0.0, 10).is_err());
    }

    #[test]
    fn richardson_matches_exp_derivative() {
        let z = Complex64::new(0.3, -0.7);
        let d = richardson_derivative(|w| w.exp(), z, 1e-2);
        assert!((d - z.exp()).norm() < 1e-13);
    }

    #[test]
    fn contour_residue_matches_closed_form() {
        let rho = bw();
        let pole = *rho.principal_pole().unwrap();
        let r = contour_residue(rho.model(), pole.z_r, pole.gamma_r / 10.0, 64);
        assert!((r - pole.residue_of_pole_part).norm() < 1e-10 * r.norm());
    }

    #[test]
    fn residue_term_decays_with_half_width() {
        let rho = bw().normalize(crate::spectral::Energy(20.0)).unwrap();
        let pole = *rho.principal_pole().unwrap();
        let a0 = residue_term_at(&pole, &rho, TimePoint::new(0.0).unwrap()).unwrap();
        for n in [1.0, 5.0, 15.0] {
            let t = TimePoint::from_lifetimes(n, pole.tau).unwrap();
            let a = residue_term_at(&pole, &rho, t).unwrap();
            assert!((a.norm() / a0.norm() - (-n / 2.0f64).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn mirror_zero_for_real_parameters() {
        let rho = bw();
        let z = rho.principal_pole().unwrap().z_r;
        assert!(rho.model().inverse_pole_part(z.conj()).norm() < 1e-14);
    }
}
