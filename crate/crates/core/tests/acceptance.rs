//! Acceptance criteria C1-C10.
//!
//! Each criterion is one test that prints a single `C<n> PASS|FAIL` line
//! (run with `--nocapture` to see them) and then asserts. Tolerances are
//! pinned below and are not adjusted to make a criterion pass.

mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use decaylab::analysis::{
    detect_dip, find_critical_time, fit_tail_exponent, scan_r_grid, ScanReport, ScanSettings,
};
use decaylab::models::phase_shift::{PhaseShiftRow, PhaseShiftTable};
use decaylab::models::{
    beth_uhlenbeck_dos, dwell_time_dos, make_breit_wigner, BreitWignerParams, Differentiation,
};
use decaylab::poles::{
    contour_residue, find_model_pole, inverse_derivative, richardson_derivative, PoleSearchSpec,
    SearchWindow,
};
use decaylab::spectral::{SpectralDensity, TimePoint};
use decaylab::survival::{
    compute_survival_curve, lifetimes_to_points, linear_grid, log_grid, survival_amplitude,
    survival_amplitude_direct, QuadratureSpec, SurvivalResult,
};

use common::{bugg, bw, bw_r, sigma_bw_params, E_TH};

// C1: largest allowed |A_direct - (A_exp + A_tail)|.
const ORACLE_TOL: f64 = 1e-6;
// C2: pole mass and width windows (GeV).
const POLE_MASS: f64 = 0.542;
const POLE_MASS_TOL: f64 = 0.015;
const POLE_WIDTH: f64 = 0.498;
const POLE_WIDTH_TOL: f64 = 0.020;
// C3: minimum relative deviation from e^{-Γt} at every grid point.
const NEVER_EXP_DEV: f64 = 0.1;
// C3, C6: critical-time threshold.
const EPSILON: f64 = 0.5;
// C4: tail-dominance fraction.
const TAIL_FRACTION: f64 = 0.95;
// C5: slope tolerance.
const SLOPE_TOL: f64 = 0.05;
// C6: classical-limit band on [τ, 10τ].
const CLASSICAL_TOL: f64 = 0.02;
// C7: dip must lie within this factor of the crossover time.
const DIP_WINDOW_FACTOR: f64 = 2.0;
// C8: normalization and short-time coefficient.
const P0_TOL: f64 = 1e-6;
const VARIANCE_REL_TOL: f64 = 0.01;
// C9: residue agreement.
const BW_RESIDUE_REL_TOL: f64 = 1e-10;
const CONTOUR_RESIDUE_REL_TOL: f64 = 1e-8;
// C10: Beth-Uhlenbeck relative accuracy on interior points.
const BU_REL_TOL: f64 = 1e-3;
// C10: rows dropped at each end of the table before comparing.
const BU_EDGE_ROWS: usize = 10;

const R_SCAN: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 2.0];

fn report(id: &str, pass: bool, detail: String) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn r_scan() -> &'static ScanReport {
    static SCAN: OnceLock<ScanReport> = OnceLock::new();
    SCAN.get_or_init(|| {
        scan_r_grid(
            &sigma_bw_params(),
            &R_SCAN,
            &QuadratureSpec::default(),
            &ScanSettings::default(),
        )
        .unwrap()
    })
}

fn curve(rho: &SpectralDensity, lifetimes: &[f64], q: &QuadratureSpec) -> SurvivalResult {
    let tau = rho.principal_pole().unwrap().tau;
    compute_survival_curve(rho, &lifetimes_to_points(lifetimes, tau).unwrap(), q).unwrap()
}

fn shipped_models() -> Vec<(String, SpectralDensity)> {
    let mut v: Vec<(String, SpectralDensity)> = [0.01, 0.1, 1.0, 2.0]
        .iter()
        .map(|&r| (format!("BW R={r}"), bw_r(r)))
        .collect();
    v.push(("Bugg sigma".into(), bugg()));
    v
}

#[test]
fn c1_oracle_equivalence() {
    let q = QuadratureSpec::default();
    let start = std::time::Instant::now();
    let mut worst = Vec::new();
    for (name, rho) in shipped_models() {
        let tau = rho.principal_pole().unwrap().tau;
        let mut max_diff: f64 = 0.0;
        let mut at = 0.0;
        for n in log_grid(0.1, 20.0, 12) {
            let t = TimePoint::from_lifetimes(n, tau).unwrap();
            let (e, l) = survival_amplitude(&rho, t, &q).unwrap();
            let d = survival_amplitude_direct(&rho, t, &q).unwrap();
            let diff = (e + l - d).norm();
            if diff > max_diff {
                max_diff = diff;
                at = n;
            }
        }
        worst.push((name, max_diff, at));
    }
    let pass = worst.iter().all(|w| w.1 <= ORACLE_TOL);
    let detail: Vec<String> = worst
        .iter()
        .map(|(n, d, t)| format!("{n}: {d:.2e} at {t:.2}τ"))
        .collect();
    report(
        "C1",
        pass,
        format!(
            "max |ΔA| (tol {ORACLE_TOL:e}) [{}] in {:.1?}",
            detail.join("; "),
            start.elapsed()
        ),
    );
}

#[test]
fn c2_sigma_pole_reproduction() {
    let pole = *bugg().principal_pole().unwrap();
    let pass = (pole.e_r - POLE_MASS).abs() <= POLE_MASS_TOL
        && (pole.gamma_r - POLE_WIDTH).abs() <= POLE_WIDTH_TOL;
    report(
        "C2",
        pass,
        format!(
            "Bugg pole E_R = {:.2} MeV, Γ_R = {:.2} MeV (targets {}±{} / {}±{} MeV)",
            pole.e_r * 1e3,
            pole.gamma_r * 1e3,
            POLE_MASS * 1e3,
            POLE_MASS_TOL * 1e3,
            POLE_WIDTH * 1e3,
            POLE_WIDTH_TOL * 1e3
        ),
    );
}

#[test]
fn c3_sigma_never_exponential() {
    let rho = bugg();
    let r = curve(&rho, &log_grid(0.05, 50.0, 200), &QuadratureSpec::default());
    let close: Vec<f64> = (0..r.len())
        .filter(|&i| (r.p_total[i] / r.p_exp_ref(i) - 1.0).abs() <= NEVER_EXP_DEV)
        .map(|i| r.t_grid[i] / r.tau())
        .collect();
    let tc = find_critical_time(&r, EPSILON).unwrap();
    let pass = close.is_empty() && tc.is_none();
    let span = match (close.first(), close.last()) {
        (Some(a), Some(b)) => format!(" spanning {a:.2}τ..{b:.2}τ"),
        _ => String::new(),
    };
    report(
        "C3",
        pass,
        format!(
            "{} of 200 grid points within {NEVER_EXP_DEV} of e^(-Γt){span}; critical time at ε={EPSILON}: {:?}",
            close.len(),
            tc.map(|t| t.lifetimes(r.tau()))
        ),
    );
}

#[test]
fn c4_power_law_onset() {
    let rho = bugg();
    let r = curve(
        &rho,
        &log_grid(0.05, 1000.0, 400),
        &QuadratureSpec::default(),
    );
    let tn = r.t_lifetimes();
    let frac = |i: usize| r.p_tail[i] / r.p_total[i];
    let late_min = (0..r.len())
        .filter(|&i| tn[i] >= 20.0)
        .map(frac)
        .fold(f64::INFINITY, f64::min);
    let mid_min = (0..r.len())
        .filter(|&i| tn[i] >= 5.0 && tn[i] <= 15.0)
        .map(frac)
        .fold(f64::INFINITY, f64::min);
    let pass = late_min > TAIL_FRACTION && mid_min < TAIL_FRACTION;
    report(
        "C4",
        pass,
        format!("min P_tail/P over t >= 20τ = {late_min:.4}; min over [5τ, 15τ] = {mid_min:.4} (threshold {TAIL_FRACTION})"),
    );
}

#[test]
fn c5_tail_exponent() {
    let q = QuadratureSpec::default();
    let mut rows = Vec::new();
    for e in &r_scan().entries {
        rows.push((format!("BW R={}", e.r_ratio), 0.5, e.tail_slope));
    }
    let grid = log_grid(100.0, 1000.0, 60);
    let b = bugg();
    let slope = fit_tail_exponent(
        &curve(&b, &grid, &q),
        TimePoint::from_lifetimes(100.0, b.principal_pole().unwrap().tau).unwrap(),
    )
    .unwrap()
    .0;
    rows.push(("Bugg sigma".into(), 0.5, slope));
    for gamma in [1.5, 2.5] {
        let rho = bw(sigma_bw_params().with_gamma_exp(gamma));
        let tau = rho.principal_pole().unwrap().tau;
        let s = fit_tail_exponent(
            &curve(&rho, &grid, &q),
            TimePoint::from_lifetimes(100.0, tau).unwrap(),
        )
        .unwrap()
        .0;
        rows.push((format!("BW γ={gamma}"), gamma, s));
    }
    let pass = rows
        .iter()
        .all(|(_, g, s)| (s + 2.0 * g + 2.0).abs() <= SLOPE_TOL);
    let detail: Vec<String> = rows
        .iter()
        .map(|(n, g, s)| format!("{n}: {s:.4} (expect {:.0})", -(2.0 * g + 2.0)))
        .collect();
    report(
        "C5",
        pass,
        format!("log-log slopes over [100τ, 1000τ]: {}", detail.join("; ")),
    );
}

#[test]
fn c6_narrow_state_classical_limit() {
    let rho = bw_r(0.01);
    let r = curve(
        &rho,
        &linear_grid(1.0, 10.0, 200),
        &QuadratureSpec::default(),
    );
    let band = (0..r.len())
        .map(|i| (r.p_total[i] / r.p_exp_ref(i) - 1.0).abs())
        .fold(0.0, f64::max);
    let scan = r_scan();
    let tcs: Vec<Option<f64>> = scan.entries.iter().map(|e| e.t_critical).collect();
    let narrow_finite = tcs[0].is_some();
    let defined: Vec<f64> = tcs.iter().flatten().copied().collect();
    let decreasing = defined.windows(2).all(|w| w[1] < w[0]);
    // once undefined, stays undefined towards larger R, and the largest R is undefined
    let first_none = tcs.iter().position(Option::is_none);
    let tail_none = first_none.is_some_and(|k| tcs[k..].iter().all(Option::is_none));
    let pass = band < CLASSICAL_TOL && narrow_finite && decreasing && tail_none;
    let list: Vec<String> = scan
        .entries
        .iter()
        .map(|e| {
            format!(
                "R={}: {}",
                e.r_ratio,
                e.t_critical.map_or("none".into(), |t| format!("{t:.2}τ"))
            )
        })
        .collect();
    report(
        "C6",
        pass,
        format!(
            "R=0.01 max |P/e^(-Γt) - 1| on [τ, 10τ] = {band:.2e} (tol {CLASSICAL_TOL}); critical times at ε={EPSILON}: {}",
            list.join(", ")
        ),
    );
}

/// First grid time (lifetimes) where the power-law channel overtakes the
/// exponential one.
fn crossover(r: &SurvivalResult) -> Option<f64> {
    (0..r.len())
        .find(|&i| r.t_grid[i] > 0.0 && r.p_tail[i] >= r.p_exp[i])
        .map(|i| r.t_grid[i] / r.tau())
}

#[test]
fn c7_dip_phenomenology() {
    let q = QuadratureSpec::default();
    // width 544 MeV above a 542 MeV mass
    let broad = bw(BreitWignerParams::new(0.542, 0.544, E_TH, 1.1));
    let rb = curve(&broad, &log_grid(0.01, 1000.0, 2000), &q);
    let dip_b = detect_dip(&rb).map(|(t, p)| (t.lifetimes(rb.tau()), p));
    let cross_b = crossover(&rb);
    let broad_ok = match (dip_b, cross_b) {
        (Some((td, _)), Some(tc)) => td >= tc / DIP_WINDOW_FACTOR && td <= tc * DIP_WINDOW_FACTOR,
        _ => false,
    };

    let narrow = bw_r(0.01);
    let tc_narrow = r_scan().entries[0].t_critical;
    let rn = curve(&narrow, &linear_grid(25.0, 45.0, 4000), &q);
    let dip_n = detect_dip(&rn).map(|(t, p)| (t.lifetimes(rn.tau()), p));
    let narrow_ok = match (dip_n, tc_narrow) {
        (Some((td, _)), Some(tc)) => td >= tc / DIP_WINDOW_FACTOR && td <= tc * DIP_WINDOW_FACTOR,
        _ => false,
    };
    report(
        "C7",
        broad_ok && narrow_ok,
        format!(
            "Γ_R > E_R: dip {:?} vs crossover {:?}τ; R=0.01: dip {:?} vs critical time {:?}τ (window factor {DIP_WINDOW_FACTOR})",
            dip_b, cross_b, dip_n, tc_narrow
        ),
    );
}

/// `Var(E)` of `ρ` by composite Simpson in `w = (E - E_th)^{1/2}`.
fn simpson_variance(rho: &SpectralDensity) -> f64 {
    let e_th = rho.e_th();
    let w_max = 40f64.sqrt();
    let n = 400_000;
    let h = w_max / n as f64;
    let mut m = [0.0; 3];
    for k in 0..=n {
        let w = k as f64 * h;
        let e = e_th + w * w;
        let c = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = c * rho.evaluate_density(decaylab::Energy(e)).unwrap() * 2.0 * w;
        m[0] += f;
        m[1] += f * e;
        m[2] += f * e * e;
    }
    let mean = m[1] / m[0];
    m[2] / m[0] - mean * mean
}

/// Least-squares `a` in `1 - P = a t² + b t⁴`.
fn quadratic_coefficient(t: &[f64], p: &[f64]) -> f64 {
    let (mut s22, mut s24, mut s44, mut r2, mut r4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &pi) in t.iter().zip(p) {
        let (x2, x4, y) = (ti * ti, ti.powi(4), 1.0 - pi);
        s22 += x2 * x2;
        s24 += x2 * x4;
        s44 += x4 * x4;
        r2 += x2 * y;
        r4 += x4 * y;
    }
    (r2 * s44 - r4 * s24) / (s22 * s44 - s24 * s24)
}

#[test]
fn c8_normalization_and_short_time() {
    let q = QuadratureSpec::default();
    let fine = QuadratureSpec {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        ..Default::default()
    };
    let mut worst_p0: f64 = 0.0;
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, rho) in shipped_models() {
        let tau = rho.principal_pole().unwrap().tau;
        let zero = TimePoint::new(0.0).unwrap();
        let p0_curve = compute_survival_curve(&rho, &[zero], &q).unwrap().p_total[0];
        let p0_direct = survival_amplitude_direct(&rho, zero, &q)
            .unwrap()
            .norm_sqr();
        worst_p0 = worst_p0
            .max((p0_curve - 1.0).abs())
            .max((p0_direct - 1.0).abs());

        let lifetimes = log_grid(1e-4, 1e-3, 16);
        let r = curve(&rho, &lifetimes, &fine);
        let a = quadratic_coefficient(&r.t_grid, &r.p_total);
        let var = simpson_variance(&rho);
        let rel = (a / var - 1.0).abs();
        pass &= rel <= VARIANCE_REL_TOL;
        lines.push(format!(
            "{name}: coeff {a:.6e} vs Var {var:.6e} (rel {rel:.1e}, τ = {tau:.3})"
        ));
    }
    pass &= worst_p0 <= P0_TOL;
    report(
        "C8",
        pass,
        format!(
            "max |P(0) - 1| = {worst_p0:.1e} (tol {P0_TOL:e}); short-time: {}",
            lines.join("; ")
        ),
    );
}

#[test]
fn c9_residue_cross_check() {
    let p = sigma_bw_params();
    let bw_raw = make_breit_wigner(p).unwrap();
    let window = SearchWindow {
        re_min: E_TH,
        re_max: 1.0,
        im_min: -1.0,
        im_max: 0.0,
    };
    let found =
        find_model_pole(&bw_raw, &PoleSearchSpec::new(window, 1e-13, 100).unwrap()).unwrap();
    let exact = 1.0 / Complex64::new(0.0, -p.gamma_r);
    let bw_rel = (found.residue_of_pole_part - exact).norm() / exact.norm();

    let b = bugg();
    let pole = *b.principal_pole().unwrap();
    let analytic = 1.0 / inverse_derivative(b.model(), pole.z_r);
    let contour = contour_residue(b.model(), pole.z_r, pole.gamma_r / 10.0, 64);
    let stepped = 1.0 / richardson_derivative(|z| b.model().inverse_pole_part(z), pole.z_r, 1e-3);
    let bugg_rel = (contour - stepped).norm() / stepped.norm();
    let fd_rel = (stepped - analytic).norm() / analytic.norm();
    let pass = bw_rel <= BW_RESIDUE_REL_TOL
        && bugg_rel <= CONTOUR_RESIDUE_REL_TOL
        && fd_rel <= CONTOUR_RESIDUE_REL_TOL;
    report(
        "C9",
        pass,
        format!(
            "BW residue rel err {bw_rel:.1e} (tol {BW_RESIDUE_REL_TOL:e}); Bugg contour vs stepped-difference residue {bugg_rel:.1e}, stepped vs analytic derivative {fd_rel:.1e} (tol {CONTOUR_RESIDUE_REL_TOL:e})"
        ),
    );
}

#[test]
fn c10_density_of_states() {
    // p-wave resonance: δ = atan2(Γ/2, E_R - E)
    let (e_r, g, e_th) = (0.8f64, 0.1f64, 0.3f64);
    let rows: Vec<PhaseShiftRow> = (0..200)
        .map(|k| {
            let e = 0.5 + 0.6 * k as f64 / 199.0;
            PhaseShiftRow {
                e,
                delta: (0.5 * g).atan2(e_r - e),
                re_t: None,
            }
        })
        .collect();
    let table = PhaseShiftTable::new(rows, 1, e_th).unwrap();
    let bu = beth_uhlenbeck_dos(&table, Differentiation::Spline).unwrap();
    let n = bu.energies.len();
    let bu_err = (BU_EDGE_ROWS..n - BU_EDGE_ROWS)
        .map(|i| {
            let e = bu.energies[i];
            let exact = 3.0 / PI * (0.5 * g) / ((e - e_r).powi(2) + 0.25 * g * g);
            (bu.dn_de[i] / exact - 1.0).abs()
        })
        .fold(0.0, f64::max);

    // s-wave hard sphere: δ = -a q / 2, Re T = sin(2δ)/2, q = (E² - E_th²)^{1/2}
    let a = 2.0;
    let rows: Vec<PhaseShiftRow> = (1..=400)
        .map(|k| {
            let e = e_th + 1e-6 * (k as f64).powi(2);
            let q = ((e - e_th) * (e + e_th)).sqrt();
            PhaseShiftRow {
                e,
                delta: -0.5 * a * q,
                re_t: Some(-0.5 * (a * q).sin()),
            }
        })
        .collect();
    let table = PhaseShiftTable::new(rows, 0, e_th).unwrap();
    let dwell = dwell_time_dos(&table, Differentiation::Spline).unwrap();
    let mut dwell_ok = true;
    let mut detail = Vec::new();
    for i in 0..5 {
        let e = dwell.energies[i];
        let q = ((e - e_th) * (e + e_th)).sqrt();
        let series = -e * a.powi(3) * q / 6.0;
        let naive = -a * e / q;
        let v = dwell.dn_de[i];
        dwell_ok &= v.is_finite() && (v - series).abs() <= 1e-3 * naive.abs();
        detail.push(format!(
            "E-E_th={:.1e}: {v:.3e} (series {series:.3e}, 2dδ/dE {naive:.2e})",
            e - e_th
        ));
    }
    let pass = bu_err <= BU_REL_TOL && dwell_ok;
    report(
        "C10",
        pass,
        format!(
            "Beth-Uhlenbeck max rel err {bu_err:.2e} on interior (tol {BU_REL_TOL:e}); dwell-time near threshold: {}",
            detail.join("; ")
        ),
    );
}
