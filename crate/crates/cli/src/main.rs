use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;

use spincorr_cli::config::{
    format_depth, load_config_file, member_dir, parse_depth, CliError, RunConfig,
};
use spincorr_cli::output::{
    write_artifacts, write_sweep_correlation, write_sweep_json, MonotonicityReport, SweepJson,
};
use spincorr_cli::pipeline::{run_job, JobArtifacts};

/// Tolerance for the |C| ordering across optical depths in a sweep.
const MONOTONICITY_TOL: f64 = 1e-6;

/// Deterministic simulator that engineers spin-spin correlations in a 1D
/// lattice with sequences of standing-wave QND measurement pulses.
#[derive(Parser, Debug)]
#[command(name = "spincorr", version, about)]
struct Cli {
    /// Flat TOML config file overlaying the preset.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Base preset: paper-a, paper-b or paper-critical.
    #[arg(long)]
    preset: Option<String>,

    /// Optical depth override; "inf" disables decoherence.
    #[arg(long)]
    d: Option<String>,

    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Two-column tabulated target file (implies target = tabulated).
    #[arg(long)]
    target_file: Option<PathBuf>,

    /// Wavevector ordering: ascending-p, descending-p, descending-coupling.
    #[arg(long)]
    order_policy: Option<String>,

    /// Comma-separated optical depths to sweep in parallel, e.g.
    /// "inf,300,99,33".
    #[arg(long)]
    sweep: Option<String>,
}

fn resolve(cli: &Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let mut config = match &cli.preset {
        Some(name) => RunConfig::preset(name)?,
        None => RunConfig::preset_paper_a(),
    };
    // Paths inside the config file resolve relative to its directory.
    let mut base_dir = PathBuf::from(".");
    if let Some(path) = &cli.config {
        config.apply_file(load_config_file(path)?);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                base_dir = parent.to_path_buf();
            }
        }
    }
    if let Some(d) = &cli.d {
        config.d = format_depth(parse_depth(d)?);
    }
    // The only environment knob: output-path override, below --out.
    if let Ok(dir) = std::env::var("SPINCORR_OUT") {
        if !dir.is_empty() {
            config.out_dir = dir;
        }
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.display().to_string();
    }
    if let Some(file) = &cli.target_file {
        // Flag paths resolve against the working directory, not the
        // config file location.
        let absolute = if file.is_absolute() {
            file.clone()
        } else {
            std::env::current_dir()
                .map_err(|e| CliError::config(format!("cannot resolve working directory: {e}")))?
                .join(file)
        };
        config.target = "tabulated".to_string();
        config.target_file = Some(absolute.display().to_string());
    }
    if let Some(policy) = &cli.order_policy {
        config.order_policy = policy.clone();
    }
    config.validate()?;
    Ok((config, base_dir))
}

fn summarize(job: &JobArtifacts, dir: &Path) {
    println!(
        "run {} (target {}, d = {}): {} pulses over {} wavevectors, max C = {:.4}, total eta = {:.4}",
        job.config_hash.get(..12).unwrap_or(&job.config_hash),
        job.run_config.target,
        job.run_config.d,
        job.plan.pulses.len(),
        job.design.active_modes().len(),
        job.design.max_coupling(),
        job.plan.total_eta,
    );
    match &job.fit {
        Some(fit) => println!(
            "  fit: {} parameter = {:.4}, r2 = {:.5}, offset = {:.5}",
            match fit.law {
                spincorr_core::fit::DecayLaw::Exponential => "xi",
                spincorr_core::fit::DecayLaw::Algebraic => "zeta",
            },
            fit.parameter,
            fit.r_squared,
            fit.offset
        ),
        None => println!("  fit: unavailable ({})", job.fit_error.as_deref().unwrap_or("?")),
    }
    if let Some(m) = job.spectrum_match {
        println!("  spectrum match = {m:.4}");
    }
    let best = job
        .witness
        .minima
        .iter()
        .min_by(|a, b| a.w.partial_cmp(&b.w).expect("finite"))
        .expect("non-empty scan");
    println!(
        "  witness: min W = {:.4} at dr = {}, phi = {:.3}",
        best.w, best.delta_r, best.phi
    );
    for warning in &job.warnings {
        println!("  warning: {warning}");
    }
    println!("  artifacts in {}", dir.display());
}

fn single_run(config: &RunConfig, base_dir: &Path) -> Result<(), CliError> {
    let job = run_job(config, base_dir)?;
    let dir = PathBuf::from(&config.out_dir);
    write_artifacts(&dir, &job)?;
    summarize(&job, &dir);
    Ok(())
}

fn sweep(config: &RunConfig, base_dir: &Path, list: &str) -> Result<(), CliError> {
    let depths: Vec<f64> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_depth)
        .collect::<Result<_, _>>()?;
    if depths.is_empty() {
        return Err(CliError::config("sweep list is empty"));
    }
    if let [only] = depths[..] {
        let mut single = config.clone();
        single.d = format_depth(only);
        return single_run(&single, base_dir);
    }

    let base_out = PathBuf::from(&config.out_dir);
    let jobs: Vec<Result<JobArtifacts, CliError>> = depths
        .par_iter()
        .map(|&d| {
            let mut member = config.clone();
            member.d = format_depth(d);
            member.out_dir = member_dir(&base_out, d).display().to_string();
            run_job(&member, base_dir)
        })
        .collect();

    let mut members = Vec::with_capacity(jobs.len());
    for job in jobs {
        let job = job?;
        let dir = PathBuf::from(&job.run_config.out_dir);
        write_artifacts(&dir, &job)?;
        summarize(&job, &dir);
        members.push(job);
    }

    // Merge and check the |C| ordering across depths (finite ascending,
    // infinity last).
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| {
        let da = parse_depth(&members[a].run_config.d).expect("validated");
        let db = parse_depth(&members[b].run_config.d).expect("validated");
        da.partial_cmp(&db).expect("depths are comparable")
    });
    let merged: Vec<(String, Vec<f64>)> = order
        .iter()
        .map(|&i| {
            (
                members[i].run_config.d.clone(),
                members[i].report.correlation.clone(),
            )
        })
        .collect();

    let mut worst: f64 = 0.0;
    for pair in order.windows(2) {
        let shallow = &members[pair[0]].report.correlation;
        let deep = &members[pair[1]].report.correlation;
        for dr in 1..=20.min(shallow.len() - 1) {
            worst = worst.max(shallow[dr].abs() - deep[dr].abs());
        }
    }
    let pass = worst < MONOTONICITY_TOL;

    let hash = config.hash();
    std::fs::create_dir_all(&base_out)
        .map_err(|e| CliError::numerical(format!("cannot create {}: {e}", base_out.display())))?;
    write_sweep_correlation(&base_out.join("sweep_correlation.csv"), &hash, &merged)?;
    write_sweep_json(
        &base_out.join("sweep.json"),
        &SweepJson {
            config_hash: hash,
            depths: merged.iter().map(|(label, _)| label.clone()).collect(),
            monotonicity: MonotonicityReport {
                pass,
                worst_violation: worst,
                tolerance: MONOTONICITY_TOL,
            },
        },
    )?;
    println!(
        "sweep monotonicity (|C| non-decreasing in d, dr 1..=20): {} (worst violation {worst:.2e})",
        if pass { "pass" } else { "FAIL" }
    );
    if !pass {
        return Err(CliError::numerical(format!(
            "optical-depth ordering violated by {worst:.2e}"
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|(config, base_dir)| match &cli.sweep {
        Some(list) => sweep(&config, &base_dir, list),
        None => single_run(&config, &base_dir),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}
