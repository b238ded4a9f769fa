//! CSV and JSON artifact writers.
//!
//! Every CSV starts with a comment block echoing the config hash, then a
//! header row. Floats are written with Rust's shortest round-trip
//! formatting, so identical runs produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use spincorr_core::fit::FitResult;

use crate::config::CliError;
use crate::pipeline::JobArtifacts;

fn io_err(path: &Path, err: std::io::Error) -> CliError {
    CliError::numerical(format!("cannot write {}: {err}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))
}

fn comment_block(hash: &str) -> String {
    format!("# spincorr run artifact\n# config_hash: {hash}\n")
}

#[derive(Serialize)]
struct EnsembleEcho {
    n_s: usize,
    n_a: usize,
    j: f64,
    d: String,
    gamma0: f64,
    atom_count: usize,
}

#[derive(Serialize)]
struct FitEcho {
    law: &'static str,
    parameter: f64,
    amplitude: f64,
    offset: f64,
    r_squared: f64,
    fit_range: (usize, usize),
    dropped_points: usize,
}

impl FitEcho {
    fn from(fit: &FitResult) -> Self {
        FitEcho {
            law: match fit.law {
                spincorr_core::fit::DecayLaw::Exponential => "exponential",
                spincorr_core::fit::DecayLaw::Algebraic => "algebraic",
            },
            parameter: fit.parameter,
            amplitude: fit.amplitude,
            offset: fit.offset,
            r_squared: fit.r_squared,
            fit_range: fit.fit_range,
            dropped_points: fit.dropped_points,
        }
    }
}

#[derive(Serialize)]
struct FitsJson {
    config_hash: String,
    ensemble: EnsembleEcho,
    target: String,
    c_max: f64,
    order_policy: String,
    clipped_mass: f64,
    design_scale: f64,
    max_coupling: f64,
    active_wavevectors: usize,
    pulses: usize,
    total_eta: f64,
    /// Primary decay fit, offset extracted from the fit itself.
    fit: Option<FitEcho>,
    /// Two-stage reference fit with the trailing-mean offset.
    fit_trailing_offset: Option<FitEcho>,
    fit_error: Option<String>,
    spectrum_match: Option<f64>,
    spectrum_minimum_p: usize,
    spectrum_minimum_k: f64,
    witness_min_w: f64,
    witness_min_delta_r: usize,
    witness_negative_through: Option<usize>,
    order_policy_deviation: f64,
    wall_time_ms: f64,
    feedback_events: usize,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct TraceEntry {
    index: usize,
    p: usize,
    component: &'static str,
    coupling: f64,
    eta: f64,
    gamma22_out: f64,
    achieved_fraction: f64,
    variance_before: f64,
    variance_after: f64,
}

/// Writes all artifacts of one job into `dir`.
pub fn write_artifacts(dir: &Path, job: &JobArtifacts) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let hash = &job.config_hash;

    // correlation.csv: dr, C(dr), |C - C_inf| using the fitted offset
    // (falls back to the last fifth mean when no fit is available).
    let offset = job
        .fit
        .as_ref()
        .map(|f| f.offset)
        .unwrap_or_else(|| {
            let values = &job.report.correlation;
            let tail = (values.len() / 5).max(1);
            values[values.len() - tail..].iter().sum::<f64>() / tail as f64
        });
    let mut corr = comment_block(hash);
    corr.push_str("delta_r,C,abs_C_minus_Cinf\n");
    for (dr, &value) in job.report.correlation.iter().enumerate() {
        corr.push_str(&format!("{dr},{value},{}\n", (value - offset).abs()));
    }
    write_file(&dir.join("correlation.csv"), &corr)?;

    // spectrum.csv over the full mode grid, normalized by gamma0, with
    // the designed profile (3 components, reflection-symmetric).
    let g0 = job.ensemble.gamma0();
    let n_s = job.ensemble.n_s;
    let mut spec = comment_block(hash);
    spec.push_str("m,k,gamma_xx,gamma_yy,gamma_zz,summed,target_profile\n");
    for m in 0..n_s {
        let k = 2.0 * std::f64::consts::PI * m as f64 / n_s as f64;
        let p = m.min(n_s - m);
        let target = 3.0 * (1.0 - job.design.fractions[p] / 4.0);
        spec.push_str(&format!(
            "{m},{k},{},{},{},{},{target}\n",
            job.report.spectrum.x[m] / g0,
            job.report.spectrum.y[m] / g0,
            job.report.spectrum.z[m] / g0,
            job.report.spectrum.summed[m] / g0,
        ));
    }
    write_file(&dir.join("spectrum.csv"), &spec)?;

    // witness.csv (full grid) and witness_min.csv (per separation).
    let mut witness = comment_block(hash);
    witness.push_str("delta_r,phi,W\n");
    for point in &job.witness.points {
        witness.push_str(&format!("{},{},{}\n", point.delta_r, point.phi, point.w));
    }
    write_file(&dir.join("witness.csv"), &witness)?;

    let mut witness_min = comment_block(hash);
    witness_min.push_str("delta_r,phi_min,W_min,W_at_phi0,W_phi_mean\n");
    for min in &job.witness.minima {
        witness_min.push_str(&format!(
            "{},{},{},{},{}\n",
            min.delta_r, min.phi, min.w, min.w_at_zero, min.w_phi_mean
        ));
    }
    write_file(&dir.join("witness_min.csv"), &witness_min)?;

    // fits.json: scalar summary of the run.
    let witness_best = job
        .witness
        .minima
        .iter()
        .min_by(|a, b| a.w.partial_cmp(&b.w).expect("witness values are finite"))
        .expect("scan is non-empty");
    let negative_through = job
        .witness
        .minima
        .iter()
        .take_while(|m| m.w_at_zero < 0.0)
        .last()
        .map(|m| m.delta_r);
    let fits = FitsJson {
        config_hash: hash.clone(),
        ensemble: EnsembleEcho {
            n_s,
            n_a: job.ensemble.n_a,
            j: job.ensemble.j,
            d: job.run_config.d.clone(),
            gamma0: g0,
            atom_count: job.ensemble.atom_count(),
        },
        target: job.run_config.target.clone(),
        c_max: job.run_config.c_max,
        order_policy: job.run_config.order_policy.clone(),
        clipped_mass: job.design.clipped_mass,
        design_scale: job.design.scale,
        max_coupling: job.design.max_coupling(),
        active_wavevectors: job.design.active_modes().len(),
        pulses: job.plan.pulses.len(),
        total_eta: job.plan.total_eta,
        fit: job.fit.as_ref().map(FitEcho::from),
        fit_trailing_offset: job.fit_trailing.as_ref().map(FitEcho::from),
        fit_error: job.fit_error.clone(),
        spectrum_match: job.spectrum_match,
        spectrum_minimum_p: job.spectrum_minimum.0,
        spectrum_minimum_k: job.spectrum_minimum.1,
        witness_min_w: witness_best.w,
        witness_min_delta_r: witness_best.delta_r,
        witness_negative_through: negative_through,
        order_policy_deviation: job.order_deviation,
        wall_time_ms: job.report.wall_time_ms,
        feedback_events: job.report.feedback_events,
        warnings: job.warnings.clone(),
    };
    let json = serde_json::to_string_pretty(&fits).expect("fits serialize");
    write_file(&dir.join("fits.json"), &(json + "\n"))?;

    // trace.json: one record per pulse.
    let trace: Vec<TraceEntry> = job
        .plan
        .pulses
        .iter()
        .zip(&job.report.trace)
        .enumerate()
        .map(|(index, (pulse, diag))| TraceEntry {
            index,
            p: pulse.p,
            component: pulse.component.name(),
            coupling: pulse.coupling,
            eta: pulse.eta,
            gamma22_out: diag.gamma22_out,
            achieved_fraction: diag.achieved_fraction,
            variance_before: diag.variance_before,
            variance_after: diag.variance_after,
        })
        .collect();
    let json = serde_json::to_string_pretty(&trace).expect("trace serialize");
    write_file(&dir.join("trace.json"), &(json + "\n"))?;

    Ok(())
}

/// Merged long-format correlation table for a sweep.
pub fn write_sweep_correlation(
    path: &Path,
    hash: &str,
    members: &[(String, Vec<f64>)],
) -> Result<(), CliError> {
    let mut out = comment_block(hash);
    out.push_str("d,delta_r,C\n");
    for (label, correlation) in members {
        for (dr, &value) in correlation.iter().enumerate() {
            out.push_str(&format!("{label},{dr},{value}\n"));
        }
    }
    write_file(path, &out)
}

#[derive(Serialize)]
pub struct SweepJson {
    pub config_hash: String,
    pub depths: Vec<String>,
    pub monotonicity: MonotonicityReport,
}

#[derive(Serialize)]
pub struct MonotonicityReport {
    /// |C(dr)| must not decrease with optical depth for dr in 1..=20.
    pub pass: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
}

pub fn write_sweep_json(path: &Path, sweep: &SweepJson) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(sweep).expect("sweep serialize");
    write_file(path, &(json + "\n"))
}
