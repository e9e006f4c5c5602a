//! Convergence runs and their report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{ExperimentConfig, ExperimentError, Prepared};
use crate::fock::{coherent_overlap, tail_bound};
use crate::propagator::{
    convergence_study, convergence_study_against, ConvergenceReport, Construction, SliceConfig,
    HERMITIAN_TOLERANCE, QUADRATURE_TOLERANCE, TAIL_TOLERANCE,
};
use crate::quadrature::build_rule;
use crate::symbols::{ellipticity_estimate, ELLIPTIC_THRESHOLD};
use crate::C64;

pub const CSV_NAME: &str = "convergence.csv";
pub const SUMMARY_NAME: &str = "summary.txt";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ConvergenceReport,
    /// Which oracle the errors are measured against.
    pub oracle_kind: &'static str,
    pub summary: String,
    pub csv: String,
    /// Failed threshold descriptions; empty when everything passed.
    pub failures: Vec<String>,
}

/// Free evolution has a closed-form coherent kernel, `exp(sum_k e^{-i omega_k t} conj(psi''_k) psi'_k)`.
fn closed_form_oracle(prep: &Prepared, t: f64) -> Option<C64> {
    if !prep.symbol.is_zero() {
        return None;
    }
    match prep.construction {
        Construction::Theorem2 | Construction::TrotterExact => {
            let rotated: Vec<C64> = prep
                .psi_in
                .iter()
                .zip(prep.space.frequencies())
                .map(|(z, w)| z * C64::from_polar(1.0, -w * t))
                .collect();
            Some(coherent_overlap(&prep.psi_out, &rotated))
        }
        Construction::Theorem1 | Construction::Resolvent => Some(coherent_overlap(&prep.psi_out, &prep.psi_in)),
    }
}

/// Validates the configuration, runs the study and renders both reports.
/// Nothing is written to disk; see [`write_outputs`].
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    let prep = cfg.prepare(true)?;
    let quad = Arc::new(build_rule(cfg.modes, cfg.radial_order, cfg.angular_order)?);
    let base = SliceConfig::new(cfg.t, cfg.n_list[0], quad, prep.psi_in.clone(), prep.psi_out.clone());
    let (report, oracle_kind) = match closed_form_oracle(&prep, cfg.t) {
        Some(oracle) => (
            convergence_study_against(&prep.symbol, prep.construction, &base, &cfg.n_list, &prep.space, oracle)?,
            "closed-form free kernel",
        ),
        None => (
            convergence_study(&prep.symbol, prep.construction, &base, &cfg.n_list, &prep.space)?,
            "exact diagonalization",
        ),
    };

    let mut failures = Vec::new();
    let mut checks = String::new();
    let mut check = |name: &str, measured: String, tolerance: String, ok: bool| {
        let _ = writeln!(
            checks,
            "  {:<26} measured {:<24} required {:<16} {}",
            name,
            measured,
            tolerance,
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failures.push(format!("{name}: measured {measured}, required {tolerance}"));
        }
    };
    let th = &cfg.thresholds;
    if let Some(min) = th.min_order {
        match report.fitted_order {
            Some(o) => check("fitted_order", format!("{o:.4}"), format!(">= {min}"), o >= min),
            None => check("fitted_order", "skipped (zero error)".into(), format!(">= {min}"), false),
        }
    }
    if let Some(max) = th.max_final_error {
        let e = report.final_error();
        check("final_abs_error", format!("{e:.3e}"), format!("< {max:e}"), e < max);
    }
    if let Some(max) = th.max_final_relative_error {
        let e = report.final_error() / report.oracle.norm();
        check("final_relative_error", format!("{e:.3e}"), format!("< {max:e}"), e < max);
    }
    if th.require_decreasing == Some(true) {
        let ok = report.strictly_decreasing();
        check("strictly_decreasing", ok.to_string(), "true".into(), ok);
    }

    let ellipticity = ellipticity_estimate(
        &prep.symbol,
        prep.space.scale_weights(),
        cfg.rho,
        256,
        cfg.seed,
    )?;

    let mut s = String::new();
    let _ = writeln!(s, "fockslice run");
    let _ = writeln!(s, "symbol              {}", prep.label);
    let _ = writeln!(s, "construction        {}", prep.construction.name());
    let _ = writeln!(s, "modes               {}", cfg.modes);
    let _ = writeln!(s, "cutoff              {} (dimension {})", cfg.cutoff, prep.space.dim());
    let _ = writeln!(s, "t                   {}", cfg.t);
    let _ = writeln!(s, "quadrature          radial {} x angular {} per mode", cfg.radial_order, cfg.angular_order);
    let _ = writeln!(s, "oracle              {} = {:.12e} {:+.12e}i", oracle_kind, report.oracle.re, report.oracle.im);
    let _ = writeln!(s);
    let _ = writeln!(s, "tolerances");
    for (name, v) in [("psi_in", &prep.psi_in), ("psi_out", &prep.psi_out)] {
        let tb = tail_bound(&prep.space, v);
        let _ = writeln!(s, "  tail_bound {name:<15} measured {tb:<24.3e} required < {TAIL_TOLERANCE:e}");
    }
    let _ = writeln!(s, "  quadrature refinement      required <= {QUADRATURE_TOLERANCE:e} per slice factor");
    let _ = writeln!(s, "  hermiticity (relative)     required <= {HERMITIAN_TOLERANCE:e}");
    let _ = writeln!(
        s,
        "  ellipticity (advisory)     measured {:<24.4e} required > {ELLIPTIC_THRESHOLD:e} {}",
        ellipticity.constant,
        if ellipticity.is_elliptic { "elliptic" } else { "not elliptic" }
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "convergence");
    let _ = writeln!(s, "  {:>6}  {:>22}  {:>22}  {:>12}", "N", "re", "im", "abs_error");
    for p in &report.points {
        let _ = writeln!(
            s,
            "  {:>6}  {:>22.15e}  {:>22.15e}  {:>12.4e}",
            p.slices, p.element.re, p.element.im, p.abs_error
        );
    }
    let _ = writeln!(
        s,
        "fitted order        {}",
        report
            .fitted_order
            .map_or("skipped: some errors are exactly zero".to_string(), |o| format!("{o:.4}"))
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "thresholds");
    if checks.is_empty() {
        let _ = writeln!(s, "  none configured");
    } else {
        s.push_str(&checks);
    }
    let _ = writeln!(s, "result              {}", if failures.is_empty() { "PASS" } else { "FAIL" });

    let csv = render_csv(&report).map_err(|e| ExperimentError::Numeric(e.to_string()))?;
    Ok(RunOutcome {
        report,
        oracle_kind,
        summary: s,
        csv,
        failures,
    })
}

fn render_csv(report: &ConvergenceReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["construction", "N", "re", "im", "abs_error", "runtime_ms"])?;
    for p in &report.points {
        w.write_record([
            report.construction.name().to_string(),
            p.slices.to_string(),
            format!("{:.17e}", p.element.re),
            format!("{:.17e}", p.element.im),
            format!("{:.17e}", p.abs_error),
            format!("{:.3}", p.runtime_ms),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// Writes `convergence.csv` and `summary.txt` into `dir`, creating it if needed.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(CSV_NAME);
    let summary = dir.join(SUMMARY_NAME);
    std::fs::write(&csv, &outcome.csv)?;
    std::fs::write(&summary, &outcome.summary)?;
    Ok((csv, summary))
}
