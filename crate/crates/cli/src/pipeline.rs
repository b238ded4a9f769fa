//! One complete job: design, schedule, execution, final-state checks,
//! fits and witness scan.

use std::path::Path;
use std::time::Instant;

use spincorr_core::fit::{
    fit_algebraic, fit_decay_free_offset, fit_exponential, series_from_values, spectrum_match,
    spectrum_minimum, DecayLaw, FitResult,
};
use spincorr_core::spectrum::{k_spectrum, SpectrumComponent};
use spincorr_core::witness::{witness_scan, ScanGeometry, WitnessScan};
use spincorr_core::{
    build_plan, design_sequence, order_policy_deviation, run, Axis, CovarianceState, DesignResult,
    EnsembleConfig, PulsePlan, RunReport, TargetSpec,
};

use crate::config::{map_core_error, CliError, RunConfig};

/// Threshold above which the clipped transform mass triggers a warning.
pub const CLIPPED_MASS_WARN: f64 = 0.05;

pub struct JobArtifacts {
    pub run_config: RunConfig,
    pub config_hash: String,
    pub ensemble: EnsembleConfig,
    pub design: DesignResult,
    pub plan: PulsePlan,
    pub state: CovarianceState,
    pub report: RunReport,
    pub fit: Option<FitResult>,
    pub fit_trailing: Option<FitResult>,
    pub fit_error: Option<String>,
    pub spectrum_match: Option<f64>,
    pub spectrum_minimum: (usize, f64),
    pub witness: WitnessScan,
    pub order_deviation: f64,
    pub warnings: Vec<String>,
}

/// Decay law used for reporting, from the target kind.
pub fn report_law(target: &str) -> DecayLaw {
    match target {
        "exponential" => DecayLaw::Exponential,
        _ => DecayLaw::Algebraic,
    }
}

/// Law-dependent default fit window.
pub fn fit_range(config: &RunConfig) -> (usize, usize) {
    if config.fit_dr_max != 0 {
        return (config.fit_dr_min.max(1), config.fit_dr_max.min(config.n_s / 2));
    }
    match report_law(&config.target) {
        DecayLaw::Exponential => (1, ((3.0 * config.xi).ceil() as usize).min(config.n_s / 2)),
        DecayLaw::Algebraic => (2, (config.n_s / 6).max(6)),
    }
}

pub fn run_job(run_config: &RunConfig, base_dir: &Path) -> Result<JobArtifacts, CliError> {
    run_config.validate()?;
    let ensemble = run_config.ensemble()?;
    let target: TargetSpec = run_config.target_spec(base_dir)?;
    let order = run_config.order_policy()?;
    let config_hash = run_config.hash();

    let started = Instant::now();
    let design = design_sequence(&target, &ensemble).map_err(|e| map_core_error(e, "design"))?;
    let plan = build_plan(&design, &ensemble, order).map_err(|e| map_core_error(e, "plan"))?;
    let (state, mut report) = run(&plan, &ensemble).map_err(|e| map_core_error(e, "run"))?;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    // Numerical invariants of the final state.
    state
        .validate(&ensemble)
        .map_err(|e| map_core_error(e, "final state"))?;
    let g0 = ensemble.gamma0();
    for component in [
        SpectrumComponent::Axis(Axis::X),
        SpectrumComponent::Axis(Axis::Y),
        SpectrumComponent::Axis(Axis::Z),
    ] {
        let spec = k_spectrum(&state, component);
        if spec.max_imag_residue >= 1e-10 * g0 || spec.reflection_defect() >= 1e-10 * g0 {
            return Err(CliError::numerical(format!(
                "spectrum realness/reflection violated (residue {:.2e}, defect {:.2e})",
                spec.max_imag_residue,
                spec.reflection_defect()
            )));
        }
    }

    let mut warnings = Vec::new();
    if design.clipped_mass >= CLIPPED_MASS_WARN {
        warnings.push(format!(
            "clipped transform mass {:.3} exceeds {CLIPPED_MASS_WARN}",
            design.clipped_mass
        ));
    }

    let law = report_law(&run_config.target);
    let range = fit_range(run_config);
    let series = series_from_values(0, &report.correlation);
    let fit = fit_decay_free_offset(&series, range, law);
    let fit_trailing = match law {
        DecayLaw::Exponential => fit_exponential(&series, range),
        DecayLaw::Algebraic => fit_algebraic(&series, range),
    };
    let fit_error = fit.as_ref().err().map(|e| e.to_string());
    if let Some(err) = &fit_error {
        warnings.push(format!("decay fit failed: {err}"));
    }

    let match_value = spectrum_match(&report.spectrum.summed, &design, &ensemble);
    if let Err(err) = &match_value {
        warnings.push(format!("spectrum match unavailable: {err}"));
    }
    let minimum = spectrum_minimum(&report.spectrum.summed, &ensemble);

    let geometry = ScanGeometry {
        origin: 0,
        m: run_config.witness_m,
        n: run_config.witness_n,
        delta_r: run_config.witness_dr_min..=run_config.witness_dr_max,
        phi_points: run_config.phi_grid,
    };
    let witness = witness_scan(&state, &ensemble, &geometry)
        .map_err(|e| map_core_error(e, "witness scan"))?;

    let order_deviation =
        order_policy_deviation(&design, &ensemble).map_err(|e| map_core_error(e, "order sweep"))?;

    Ok(JobArtifacts {
        run_config: run_config.clone(),
        config_hash,
        ensemble,
        design,
        plan,
        state,
        report,
        fit: fit.ok(),
        fit_trailing: fit_trailing.ok(),
        fit_error,
        spectrum_match: match_value.ok(),
        spectrum_minimum: minimum,
        witness,
        order_deviation,
        warnings,
    })
}
