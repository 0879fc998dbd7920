//! Cubic smoothing spline (Reinsch form) with generalized cross-validation.
//!
//! Minimizes `Σ (y_i - g(x_i))² + λ ∫ g''²` over natural cubic splines.
//! With `h_i = x_{i+1} - x_i`, the second derivatives at interior knots solve
//! the pentadiagonal system `(R + λ QᵀQ) γ = Qᵀ y`, and `g = y - λ Q γ`.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SmoothingSpline {
    x: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    lambda: f64,
    gcv_score: f64,
}

/// Symmetric pentadiagonal matrix stored by diagonals.
struct Banded {
    d0: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

/// `L D Lᵀ` factor of a [`Banded`] matrix.
struct Factor {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl Banded {
    fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match j - i {
            0 => self.d0[i],
            1 => self.d1[i],
            2 => self.d2[i],
            _ => 0.0,
        }
    }

    fn factor(&self) -> Option<Factor> {
        let m = self.d0.len();
        let mut d = vec![0.0; m];
        let mut l1 = vec![0.0; m]; // L[i][i-1]
        let mut l2 = vec![0.0; m]; // L[i][i-2]
        for i in 0..m {
            if i >= 2 {
                l2[i] = self.get(i, i - 2) / d[i - 2];
            }
            if i >= 1 {
                let mut v = self.get(i, i - 1);
                if i >= 2 {
                    v -= l2[i] * l1[i - 1] * d[i - 2];
                }
                l1[i] = v / d[i - 1];
            }
            let mut v = self.d0[i];
            if i >= 1 {
                v -= l1[i] * l1[i] * d[i - 1];
            }
            if i >= 2 {
                v -= l2[i] * l2[i] * d[i - 2];
            }
            if !(v > 0.0) || !v.is_finite() {
                return None;
            }
            d[i] = v;
        }
        Some(Factor { d, l1, l2 })
    }
}

impl Factor {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut z = b.to_vec();
        for i in 0..m {
            if i >= 1 {
                z[i] -= self.l1[i] * z[i - 1];
            }
            if i >= 2 {
                z[i] -= self.l2[i] * z[i - 2];
            }
        }
        for i in 0..m {
            z[i] /= self.d[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                z[i] -= self.l1[i + 1] * z[i + 1];
            }
            if i + 2 < m {
                z[i] -= self.l2[i + 2] * z[i + 2];
            }
        }
        z
    }
}

struct Setup {
    h: Vec<f64>,
    // Q columns: entries at rows c, c+1, c+2 for interior knot c+1
    qa: Vec<f64>,
    qb: Vec<f64>,
    qc: Vec<f64>,
}

impl Setup {
    fn new(x: &[f64]) -> Self {
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let m = x.len() - 2;
        let qa = (0..m).map(|c| 1.0 / h[c]).collect();
        let qb = (0..m).map(|c| -1.0 / h[c] - 1.0 / h[c + 1]).collect();
        let qc = (0..m).map(|c| 1.0 / h[c + 1]).collect();
        Self { h, qa, qb, qc }
    }

    fn m(&self) -> usize {
        self.qa.len()
    }

    fn qtq(&self) -> Banded {
        let m = self.m();
        let (a, b, c) = (&self.qa, &self.qb, &self.qc);
        let d0 = (0..m)
            .map(|k| a[k] * a[k] + b[k] * b[k] + c[k] * c[k])
            .collect();
        let d1 = (0..m)
            .map(|k| {
                if k + 1 < m {
                    b[k] * a[k + 1] + c[k] * b[k + 1]
                } else {
                    0.0
                }
            })
            .collect();
        let d2 = (0..m)
            .map(|k| if k + 2 < m { c[k] * a[k + 2] } else { 0.0 })
            .collect();
        Banded { d0, d1, d2 }
    }

    fn system(&self, lambda: f64, qtq: &Banded) -> Banded {
        let m = self.m();
        let h = &self.h;
        let d0 = (0..m)
            .map(|k| (h[k] + h[k + 1]) / 3.0 + lambda * qtq.d0[k])
            .collect();
        let d1 = (0..m)
            .map(|k| if k + 1 < m { h[k + 1] / 6.0 } else { 0.0 } + lambda * qtq.d1[k])
            .collect();
        let d2 = (0..m).map(|k| lambda * qtq.d2[k]).collect();
        Banded { d0, d1, d2 }
    }

    fn qt(&self, y: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|c| self.qa[c] * y[c] + self.qb[c] * y[c + 1] + self.qc[c] * y[c + 2])
            .collect()
    }

    fn q(&self, g: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for c in 0..self.m() {
            out[c] += self.qa[c] * g[c];
            out[c + 1] += self.qb[c] * g[c];
            out[c + 2] += self.qc[c] * g[c];
        }
        out
    }
}

impl SmoothingSpline {
    /// Fits with a fixed smoothing parameter `λ ≥ 0`.
    pub fn fit(x: &[f64], y: &[f64], lambda: f64) -> Result<Self> {
        validate(x, y)?;
        let setup = Setup::new(x);
        let qtq = setup.qtq();
        let (spline, _) = Self::solve(&setup, &qtq, x, y, lambda, false)?;
        Ok(spline)
    }

    /// Chooses `λ = h̄³ 10^{k/4}`, `k = -40..=24`, minimizing the GCV score
    /// `n RSS / (n - tr A)²`.
    pub fn fit_gcv(x: &[f64], y: &[f64]) -> Result<Self> {
        validate(x, y)?;
        let setup = Setup::new(x);
        let qtq = setup.qtq();
        let hbar = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        let mut best: Option<SmoothingSpline> = None;
        for k in -40..=24 {
            let lambda = hbar.powi(3) * 10f64.powf(k as f64 / 4.0);
            let Ok((s, score)) = Self::solve(&setup, &qtq, x, y, lambda, true) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| score < b.gcv_score) {
                best = Some(SmoothingSpline {
                    gcv_score: score,
                    ..s
                });
            }
        }
        best.ok_or_else(|| Error::Data {
            row: 0,
            msg: "smoothing spline system is singular for every λ".into(),
        })
    }

    fn solve(
        setup: &Setup,
        qtq: &Banded,
        x: &[f64],
        y: &[f64],
        lambda: f64,
        gcv: bool,
    ) -> Result<(Self, f64)> {
        let n = x.len();
        let factor = setup
            .system(lambda, qtq)
            .factor()
            .ok_or_else(|| Error::Data {
                row: 0,
                msg: format!("smoothing spline system not positive definite at λ = {lambda:e}"),
            })?;
        let gamma_inner = factor.solve(&setup.qt(y));
        let correction = setup.q(&gamma_inner, n);
        let values: Vec<f64> = (0..n).map(|i| y[i] - lambda * correction[i]).collect();
        let mut second = vec![0.0; n];
        second[1..n - 1].copy_from_slice(&gamma_inner);

        let mut score = f64::NAN;
        if gcv {
            // tr A = n - λ tr(M⁻¹ QᵀQ), one banded solve per column
            let m = setup.m();
            let mut tr = 0.0;
            let mut col = vec![0.0; m];
            for j in 0..m {
                col.iter_mut().for_each(|v| *v = 0.0);
                for i in j.saturating_sub(2)..(j + 3).min(m) {
                    col[i] = qtq.get(i, j);
                }
                tr += factor.solve(&col)[j];
            }
            let denom = lambda * tr;
            let rss: f64 = (0..n).map(|i| (y[i] - values[i]).powi(2)).sum();
            score = n as f64 * rss / (denom * denom);
        }
        Ok((
            Self {
                x: x.to_vec(),
                values,
                second,
                lambda,
                gcv_score: score,
            },
            score,
        ))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First derivative of the spline at each knot.
    pub fn derivative_at_knots(&self) -> Vec<f64> {
        let n = self.x.len();
        let (g, c) = (&self.values, &self.second);
        let mut out = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let h = self.x[i + 1] - self.x[i];
            out.push((g[i + 1] - g[i]) / h - h * (2.0 * c[i] + c[i + 1]) / 6.0);
        }
        let h = self.x[n - 1] - self.x[n - 2];
        out.push((g[n - 1] - g[n - 2]) / h + h * (c[n - 2] + 2.0 * c[n - 1]) / 6.0);
        out
    }
}

fn validate(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(Error::Data {
            row: 0,
            msg: format!("smoothing spline needs at least 4 points, got {}", x.len()),
        });
    }
    for (i, w) in x.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Data {
                row: i + 1,
                msg: "abscissae must be strictly increasing".into(),
            });
        }
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data {
            row: i,
            msg: "non-finite ordinate".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lambda_interpolates() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = SmoothingSpline::fit(&x, &y, 0.0).unwrap();
        for (a, b) in s.values().iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn large_lambda_tends_to_regression_line() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 2.0 * v + 1.0 + if (*v as i32) % 2 == 0 { 0.5 } else { -0.5 })
            .collect();
        let s = SmoothingSpline::fit(&x, &y, 1e12).unwrap();
        for d in s.derivative_at_knots() {
            assert!((d - 2.0).abs() < 1e-2, "{d}");
        }
    }

    #[test]
    fn cubic_derivative_is_accurate_with_gcv() {
        let x: Vec<f64> = (0..200).map(|i| 1.0 + i as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let s = SmoothingSpline::fit_gcv(&x, &y).unwrap();
        let d = s.derivative_at_knots();
        for i in 10..190 {
            assert!((d[i] - 1.0 / x[i]).abs() < 1e-6, "i={i}");
        }
    }

    #[test]
    fn rejects_unsorted_input() {
        assert!(SmoothingSpline::fit(&[0.0, 1.0, 0.5, 2.0], &[0.0; 4], 1.0).is_err());
    }
}
