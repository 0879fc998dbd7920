use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use decaylab::analysis::{
    detect_dip, find_critical_time, fit_tail_exponent, parse_pole_list, scan_poles, scan_r_grid,
    ScanSettings, DEFAULT_R_VALUES,
};
use decaylab::config::{sampled_dos, BuiltModel, DosKind, ModelSpec, PhaseShiftSpec};
use decaylab::models::{Differentiation, PhaseShiftTable};
use decaylab::survival::{
    compute_survival_curve, lifetimes_to_points, log_grid, survival_amplitude,
    survival_amplitude_direct, SurvivalResult,
};
use decaylab::{Energy, Error, SpectralDensity, TimePoint, HBAR_GEV_S};

use crate::failure::Failure;
use crate::plots;
use crate::settings::{file_key, load_model_file, GridKind, RunConfig, Unit};

/// Oracle comparison points, in lifetimes.
const ORACLE_SPAN: (f64, f64, usize) = (0.1, 20.0, 12);
const ORACLE_TOL: f64 = 1e-6;
const NORMALIZATION_TOL: f64 = 1e-6;
const CLOSURE_TOL: f64 = 1e-6;
const SLOPE_TOL: f64 = 0.05;
const POSITIVITY_SAMPLES: usize = 10_000;

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn prepare_outdir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn render(outdir: &Path, script: &str) -> Result<(), Failure> {
    match Command::new("gnuplot")
        .arg(script)
        .current_dir(outdir)
        .status()
    {
        Ok(s) if s.success() => Ok(()),
        Ok(s) => Err(Failure::numeric(format!(
            "gnuplot {script} exited with {s}"
        ))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            eprintln!("warning: gnuplot not found; {script} was written but not rendered");
            Ok(())
        }
        Err(e) => Err(Failure::numeric(format!("cannot run gnuplot: {e}"))),
    }
}

fn build(cfg: &RunConfig) -> Result<BuiltModel, Failure> {
    Ok(cfg.spec.build(cfg.quad.e_cut_offset)?)
}

/// Largest oracle residual over the comparison points; points outside the
/// direct transform's range are counted as skipped.
struct OracleSummary {
    max_diff: f64,
    at_lifetimes: f64,
    checked: usize,
    skipped: usize,
}

fn oracle(rho: &SpectralDensity, cfg: &RunConfig) -> Result<OracleSummary, Failure> {
    let tau = rho.principal_pole()?.tau;
    let (lo, hi, n) = ORACLE_SPAN;
    let mut s = OracleSummary {
        max_diff: 0.0,
        at_lifetimes: f64::NAN,
        checked: 0,
        skipped: 0,
    };
    for tn in log_grid(lo, hi, n) {
        let t = TimePoint::from_lifetimes(tn, tau)?;
        let direct = match survival_amplitude_direct(rho, t, &cfg.quad) {
            Ok(v) => v,
            Err(Error::OracleRange(_)) => {
                s.skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let (e, l) = survival_amplitude(rho, t, &cfg.quad)?;
        let d = (e + l - direct).norm();
        s.checked += 1;
        if !(d <= s.max_diff) {
            s.max_diff = d;
            s.at_lifetimes = tn;
        }
    }
    Ok(s)
}

fn curve_meta(
    cfg: &RunConfig,
    built: &BuiltModel,
    r: &SurvivalResult,
    o: &OracleSummary,
) -> Result<String, Failure> {
    let rho = &built.density;
    let p = r.pole;
    let mut m = String::new();
    let _ = writeln!(m, "model_file = {}", cfg.model_path.display());
    let _ = writeln!(m, "model = {}", rho.id());
    let _ = writeln!(m, "pole_gev = {:.12e} {:+.12e}i", p.z_r.re, p.z_r.im);
    let _ = writeln!(m, "e_r_gev = {:.12e}", p.e_r);
    let _ = writeln!(m, "gamma_r_gev = {:.12e}", p.gamma_r);
    let _ = writeln!(m, "tau_gev_inv = {:.12e}", p.tau);
    let _ = writeln!(m, "tau_s = {:.12e}", p.tau * HBAR_GEV_S);
    let _ = writeln!(m, "r_ratio = {:.12e}", p.r_ratio);
    let _ = writeln!(
        m,
        "residue_of_pole_part = {:.12e} {:+.12e}i",
        p.residue_of_pole_part.re, p.residue_of_pole_part.im
    );
    let _ = writeln!(m, "normalization = {:.12e}", rho.norm());
    let _ = writeln!(m, "gamma_exp = {}", rho.gamma_exp());
    let _ = writeln!(
        m,
        "grid = {:?} {} .. {} {} ({} points)",
        cfg.grid.kind, cfg.grid.tmin, cfg.grid.tmax, cfg.grid.unit, cfg.grid.points
    );
    let _ = writeln!(
        m,
        "quadrature = rel {:e}, abs {:e}",
        cfg.quad.rel_tol, cfg.quad.abs_tol
    );
    let critical = match find_critical_time(r, cfg.eps) {
        Ok(Some(t)) => format!("{:.6e}", t.lifetimes(p.tau)),
        Ok(None) => "none".into(),
        Err(e) => format!("unresolved ({e})"),
    };
    let _ = writeln!(
        m,
        "critical_time_lifetimes (eps = {}) = {critical}",
        cfg.eps
    );
    let dip = detect_dip(r).map_or("none".into(), |(t, pd)| {
        format!("{:.6e} lifetimes, P = {pd:.6e}", t.lifetimes(p.tau))
    });
    let _ = writeln!(m, "dip = {dip}");
    let _ = writeln!(
        m,
        "oracle_max_abs_diff = {:.3e} at {:.3} lifetimes ({} points, {} outside direct range)",
        o.max_diff, o.at_lifetimes, o.checked, o.skipped
    );
    if let Some(f) = &built.fit {
        let q = &f.params;
        let _ = writeln!(
            m,
            "fit = E_R {:.6e}, Gamma {:.6e}, E0 {:.6e}, a0 {:.6e}, a1 {:.6e}",
            q.e_r, q.gamma_r, q.e0, q.a0, q.a1
        );
        let _ = writeln!(
            m,
            "fit_residual = rms {:.3e}, max {:.3e} over {} points",
            f.rms_residual, f.max_residual, f.points
        );
    }
    Ok(m)
}

pub fn curve(cfg: &RunConfig) -> Result<(), Failure> {
    let built = build(cfg)?;
    let rho = &built.density;
    let tau = rho.principal_pole()?.tau;
    let grid = cfg.grid.time_points(tau)?;
    let r = compute_survival_curve(rho, &grid, &cfg.quad)?;
    let o = oracle(rho, cfg)?;

    prepare_outdir(&cfg.outdir)?;
    write(&cfg.outdir.join("curve.csv"), &r.to_csv_string())?;
    write(
        &cfg.outdir.join("curve_meta.txt"),
        &curve_meta(cfg, &built, &r, &o)?,
    )?;
    write(
        &cfg.outdir.join("plot_fig1.gp"),
        &plots::curve_script("curve.csv", "fig1.png"),
    )?;
    if let Some(s) = &built.sampled {
        write(&cfg.outdir.join("dos.csv"), &s.to_csv_string())?;
    }
    println!(
        "pole {:.6} {:+.6}i GeV, tau = {:.4} GeV^-1; {} points written to {}",
        r.pole.z_r.re,
        r.pole.z_r.im,
        tau,
        r.len(),
        cfg.outdir.join("curve.csv").display()
    );
    if cfg.render {
        render(&cfg.outdir, "plot_fig1.gp")?;
    }
    Ok(())
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn scan(
    cfg: &RunConfig,
    r_values: Option<Vec<f64>>,
    poles: Option<PathBuf>,
) -> Result<(), Failure> {
    let ModelSpec::BreitWigner(base) = cfg.spec else {
        return Err(cfg.key_error("model", "scan needs a Breit-Wigner model (model = bw)"));
    };
    if cfg.grid.unit != Unit::Lifetimes || cfg.grid.kind != GridKind::Log {
        return Err(Failure::usage(
            "scan runs on a log grid in lifetimes (unit = lifetimes, grid = log)".into(),
        ));
    }
    let settings = ScanSettings {
        t_min_lifetimes: cfg.grid.tmin,
        t_max_lifetimes: cfg.grid.tmax,
        points: cfg.grid.points,
        epsilon: cfg.eps,
        tail_fit_from_lifetimes: cfg.tail_from,
    };
    let r_values = match r_values {
        Some(v) => Some(v),
        None => cfg.kv.get_list("r_values")?,
    };
    let poles = poles.or_else(|| file_key(&cfg.kv, &cfg.model_path, "poles"));
    let report = match (r_values, poles) {
        (Some(_), Some(_)) => {
            return Err(Failure::usage(
                "give either R values or a pole list, not both".into(),
            ))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let list = parse_pole_list(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            scan_poles(&base, &list, &cfg.quad, &settings)?
        }
        (r, None) => scan_r_grid(
            &base,
            r.as_deref().unwrap_or(&DEFAULT_R_VALUES),
            &cfg.quad,
            &settings,
        )?,
    };

    prepare_outdir(&cfg.outdir)?;
    write(&cfg.outdir.join("scan.csv"), &report.to_csv_string())?;
    let mut files = Vec::new();
    for (k, (e, c)) in report.entries.iter().zip(&report.curves).enumerate() {
        let name = format!("scan_curve_{k:02}_{}.csv", file_label(&e.label));
        write(&cfg.outdir.join(&name), &c.to_csv_string())?;
        files.push(name);
    }
    write(
        &cfg.outdir.join("scan_overlay.gp"),
        &plots::overlay_script(&files, &report.entries, "scan_overlay.png"),
    )?;
    for e in &report.entries {
        let tc = e.t_critical.map_or("none".into(), |t| format!("{t:.3}"));
        let dip = e.dip.map_or("none".into(), |(t, _)| format!("{t:.3}"));
        println!(
            "{:>16}  R = {:<8.4} t_critical = {tc:>9}  slope = {:+.4}  dip = {dip}",
            e.label, e.r_ratio, e.tail_slope
        );
    }
    if cfg.render {
        render(&cfg.outdir, "scan_overlay.gp")?;
    }
    Ok(())
}

struct Check {
    name: &'static str,
    measured: String,
    tolerance: String,
    pass: bool,
    /// Measured value over tolerance, to pick the worst offender.
    severity: f64,
}

pub fn verify(cfg: &RunConfig) -> Result<bool, Failure> {
    let built = build(cfg)?;
    let rho = &built.density;
    let pole = *rho.principal_pole()?;
    let mut checks = Vec::new();

    let o = oracle(rho, cfg)?;
    checks.push(Check {
        name: "oracle |A_direct - (A_exp + A_tail)|",
        measured: format!(
            "{:.2e} at {:.2} tau ({} pts)",
            o.max_diff, o.at_lifetimes, o.checked
        ),
        tolerance: format!("{ORACLE_TOL:e}"),
        pass: o.checked > 0 && o.max_diff <= ORACLE_TOL,
        severity: o.max_diff / ORACLE_TOL,
    });

    let zero = TimePoint::new(0.0)?;
    let norm_err = (survival_amplitude_direct(rho, zero, &cfg.quad)? - 1.0).norm();
    checks.push(Check {
        name: "normalization |A_direct(0) - 1|",
        measured: format!("{norm_err:.2e}"),
        tolerance: format!("{NORMALIZATION_TOL:e}"),
        pass: norm_err <= NORMALIZATION_TOL,
        severity: norm_err / NORMALIZATION_TOL,
    });

    let e_th = rho.e_th();
    let mut min_rho = f64::INFINITY;
    for k in 0..POSITIVITY_SAMPLES {
        let e = e_th + 5.0 * k as f64 / (POSITIVITY_SAMPLES - 1) as f64;
        min_rho = min_rho.min(rho.evaluate_density(Energy(e))?);
    }
    checks.push(Check {
        name: "positivity min rho on [E_th, E_th + 5]",
        measured: format!("{min_rho:.2e}"),
        tolerance: ">= 0".into(),
        pass: min_rho >= 0.0,
        severity: if min_rho >= 0.0 { 0.0 } else { f64::INFINITY },
    });

    let (a_exp, a_tail) = survival_amplitude(rho, zero, &cfg.quad)?;
    let closure = ((a_exp + a_tail).norm() - 1.0).abs();
    checks.push(Check {
        name: "contour closure ||A_exp(0) + A_tail(0)| - 1|",
        measured: format!("{closure:.2e}"),
        tolerance: format!("{CLOSURE_TOL:e}"),
        pass: closure <= CLOSURE_TOL,
        severity: closure / CLOSURE_TOL,
    });

    let tail = compute_survival_curve(
        rho,
        &lifetimes_to_points(&log_grid(100.0, 1000.0, 60), pole.tau)?,
        &cfg.quad,
    )?;
    let (slope, _) = fit_tail_exponent(&tail, TimePoint::from_lifetimes(100.0, pole.tau)?)?;
    let expected = -(2.0 * rho.gamma_exp() + 2.0);
    let dev = (slope - expected).abs();
    checks.push(Check {
        name: "tail slope over [100, 1000] tau",
        measured: format!("{slope:.4} (expect {expected})"),
        tolerance: format!("+-{SLOPE_TOL}"),
        pass: dev <= SLOPE_TOL,
        severity: dev / SLOPE_TOL,
    });

    println!("{}", rho.id());
    println!(
        "{:<48} {:<32} {:<10} result",
        "check", "measured", "tolerance"
    );
    for c in &checks {
        println!(
            "{:<48} {:<32} {:<10} {}",
            c.name,
            c.measured,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let worst = checks
        .iter()
        .filter(|c| !c.pass)
        .max_by(|a, b| a.severity.total_cmp(&b.severity));
    match worst {
        None => Ok(true),
        Some(c) => {
            eprintln!(
                "verification failed; worst offender: {} = {}",
                c.name, c.measured
            );
            Ok(false)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DosArgs {
    pub model: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub l: Option<u32>,
    pub method: Option<DosKind>,
    pub diff: Option<Differentiation>,
    pub outdir: Option<PathBuf>,
}

pub fn dos(a: &DosArgs) -> Result<(), Failure> {
    let (spec, outdir) = match (&a.model, &a.table) {
        (Some(_), Some(_)) => {
            return Err(Failure::usage(
                "give either --model or --table, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Failure::usage(
                "dos needs --table <FILE> or a phase-shift --model <FILE>".into(),
            ))
        }
        (Some(path), None) => {
            let (kv, spec) = load_model_file(path)?;
            let ModelSpec::PhaseShift(mut ps) = spec else {
                return Err(kv
                    .error_at(
                        "model",
                        "dos needs a phase-shift model (model = phaseshift)",
                    )
                    .into());
            };
            ps.l = a.l.or(ps.l);
            ps.dos = a.method.clone().or(ps.dos);
            ps.diff = a.diff.unwrap_or(ps.diff);
            let outdir = a
                .outdir
                .clone()
                .or_else(|| kv.get_str("outdir").map(PathBuf::from));
            (ps, outdir)
        }
        (None, Some(table)) => (
            PhaseShiftSpec {
                table: table.clone(),
                l: a.l,
                e_th: None,
                gamma_exp: None,
                diff: a.diff.unwrap_or(Differentiation::Spline),
                dos: a.method.clone(),
            },
            a.outdir.clone(),
        ),
    };
    let table = PhaseShiftTable::from_file(&spec.table, spec.l, spec.e_th)?;
    let sampled = sampled_dos(&table, &spec)?;
    let outdir = outdir.unwrap_or_else(|| PathBuf::from("."));
    prepare_outdir(&outdir)?;
    write(&outdir.join("dos.csv"), &sampled.to_csv_string())?;
    if !sampled.negative.is_empty() {
        eprintln!(
            "warning: density is negative at {} of {} energies (first at E = {} GeV)",
            sampled.negative.len(),
            sampled.energies.len(),
            sampled.energies[sampled.negative[0]]
        );
    }
    let lambda = sampled.lambda.map_or("none".into(), |l| format!("{l:.3e}"));
    println!(
        "{} energies written to {} (smoothing lambda {lambda})",
        sampled.energies.len(),
        outdir.join("dos.csv").display()
    );
    Ok(())
}
