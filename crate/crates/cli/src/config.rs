//! Run configuration: presets, the flat TOML config file, flag overrides
//! and validation.
//!
//! Precedence, lowest to highest: preset defaults (paper-a unless chosen
//! otherwise), config file, command-line flags. Infinite optical depth is
//! written as the literal `inf` in both the config file and `--d`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spincorr_core::{EnsembleConfig, OrderPolicy, TargetKind, TargetSpec};

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: 4,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

/// Maps a core error to the CLI exit code taxonomy: bad inputs are
/// configuration errors, unreachable targets are infeasible, everything
/// that breaks mid-run is a numerical failure.
pub fn map_core_error(err: spincorr_core::Error, stage: &str) -> CliError {
    use spincorr_core::Error as E;
    let message = format!("{stage}: {err}");
    match err {
        E::DegenerateTarget | E::InfeasibleTarget { .. } | E::EtaOutOfRange(_) => {
            CliError::infeasible(message)
        }
        E::InvalidEnsemble(_)
        | E::InvalidTarget(_)
        | E::TabulatedGridIncomplete { .. }
        | E::BadBins(_)
        | E::GeometryOverflow(_)
        | E::ModeOutOfRange { .. }
        | E::BadCoupling(_) => CliError::config(message),
        _ => CliError::numerical(message),
    }
}

/// All knobs of one run, fully resolved. Serialized (with `d` as a
/// label) to compute the config hash echoed into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub n_s: usize,
    pub n_a: usize,
    pub j: f64,
    /// Optical depth label: "inf" or a number.
    pub d: String,
    pub target: String,
    pub xi: f64,
    pub zeta: f64,
    pub period: usize,
    pub target_file: Option<String>,
    pub c_max: f64,
    pub order_policy: String,
    pub witness_m: usize,
    pub witness_n: usize,
    pub witness_dr_min: usize,
    pub witness_dr_max: usize,
    pub phi_grid: usize,
    /// Fit range; zeros mean law-dependent defaults.
    pub fit_dr_min: usize,
    pub fit_dr_max: usize,
    /// Excluded from the config hash: where artifacts land is not part
    /// of the computation.
    #[serde(skip)]
    pub out_dir: String,
}

/// Partial overlay read from a TOML file; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n_s: Option<usize>,
    pub n_a: Option<usize>,
    pub j: Option<f64>,
    pub d: Option<f64>,
    pub target: Option<String>,
    pub xi: Option<f64>,
    pub zeta: Option<f64>,
    pub period: Option<usize>,
    pub target_file: Option<String>,
    pub c_max: Option<f64>,
    pub order_policy: Option<String>,
    pub witness_m: Option<usize>,
    pub witness_n: Option<usize>,
    pub witness_dr_min: Option<usize>,
    pub witness_dr_max: Option<usize>,
    pub phi_grid: Option<usize>,
    pub fit_dr_min: Option<usize>,
    pub fit_dr_max: Option<usize>,
    pub out_dir: Option<String>,
}

pub fn format_depth(d: f64) -> String {
    if d.is_infinite() {
        "inf".to_string()
    } else if d.fract() == 0.0 {
        format!("{}", d as i64)
    } else {
        format!("{d}")
    }
}

pub fn parse_depth(text: &str) -> Result<f64, CliError> {
    let d: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("cannot parse optical depth '{text}'")))?;
    if d.is_nan() || d <= 0.0 {
        return Err(CliError::config(format!(
            "optical depth must be positive (or inf), got {text}"
        )));
    }
    Ok(d)
}

impl RunConfig {
    /// Exponential preset: 200 sites, 10 spin-1 atoms per bin,
    /// correlation length 5, max coupling 0.95, no decoherence.
    pub fn preset_paper_a() -> Self {
        RunConfig {
            n_s: 200,
            n_a: 10,
            j: 1.0,
            d: "inf".to_string(),
            target: "exponential".to_string(),
            xi: 5.0,
            zeta: 0.7,
            period: 3,
            target_file: None,
            c_max: 0.95,
            order_policy: "ascending-p".to_string(),
            witness_m: 1,
            witness_n: 106,
            witness_dr_min: 1,
            witness_dr_max: 40,
            phi_grid: 64,
            fit_dr_min: 0,
            fit_dr_max: 0,
            out_dir: "out".to_string(),
        }
    }

    /// Algebraic preset (decay exponent 0.7), otherwise as paper-a.
    pub fn preset_paper_b() -> Self {
        RunConfig {
            target: "algebraic".to_string(),
            ..Self::preset_paper_a()
        }
    }

    /// Period-3 modulated algebraic preset, otherwise as paper-a.
    pub fn preset_paper_critical() -> Self {
        RunConfig {
            target: "modulated".to_string(),
            ..Self::preset_paper_a()
        }
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            "paper-a" => Ok(Self::preset_paper_a()),
            "paper-b" => Ok(Self::preset_paper_b()),
            "paper-critical" => Ok(Self::preset_paper_critical()),
            other => Err(CliError::config(format!(
                "unknown preset '{other}' (available: paper-a, paper-b, paper-critical)"
            ))),
        }
    }

    pub fn apply_file(&mut self, file: ConfigFile) {
        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(value) = file.$field { self.$field = value; })*
            };
        }
        overlay!(
            n_s, n_a, j, target, xi, zeta, period, c_max, order_policy, witness_m, witness_n,
            witness_dr_min, witness_dr_max, phi_grid, fit_dr_min, fit_dr_max, out_dir
        );
        if let Some(d) = file.d {
            self.d = format_depth(d);
        }
        if file.target_file.is_some() {
            self.target_file = file.target_file;
        }
    }

    pub fn depth(&self) -> Result<f64, CliError> {
        parse_depth(&self.d)
    }

    pub fn ensemble(&self) -> Result<EnsembleConfig, CliError> {
        EnsembleConfig::new(self.n_s, self.n_a, self.j, self.depth()?)
            .map_err(|e| map_core_error(e, "ensemble"))
    }

    pub fn order_policy(&self) -> Result<OrderPolicy, CliError> {
        match self.order_policy.as_str() {
            "ascending-p" => Ok(OrderPolicy::AscendingP),
            "descending-p" => Ok(OrderPolicy::DescendingP),
            "descending-coupling" => Ok(OrderPolicy::DescendingCoupling),
            other => Err(CliError::config(format!(
                "unknown order policy '{other}' (ascending-p, descending-p, descending-coupling)"
            ))),
        }
    }

    /// Builds the target spec, reading the tabulated file when needed.
    pub fn target_spec(&self, base_dir: &Path) -> Result<TargetSpec, CliError> {
        let kind = match self.target.as_str() {
            "exponential" => TargetKind::Exponential { xi: self.xi },
            "algebraic" => TargetKind::Algebraic { zeta: self.zeta },
            "modulated" => TargetKind::ModulatedAlgebraic {
                zeta: self.zeta,
                period: self.period,
            },
            "tabulated" => {
                let file = self.target_file.as_ref().ok_or_else(|| {
                    CliError::config("target = \"tabulated\" requires target_file")
                })?;
                let path = base_dir.join(file);
                let samples = read_target_file(&path)?;
                validate_tabulated(&samples, self.n_s)?;
                TargetKind::Tabulated { samples }
            }
            other => {
                return Err(CliError::config(format!(
                    "unknown target '{other}' (exponential, algebraic, modulated, tabulated)"
                )))
            }
        };
        let spec = TargetSpec {
            kind,
            c_max: self.c_max,
        };
        spec.validate().map_err(|e| map_core_error(e, "target"))?;
        Ok(spec)
    }

    /// Validates everything that does not require running the design.
    pub fn validate(&self) -> Result<(), CliError> {
        self.ensemble()?;
        self.order_policy()?;
        if self.witness_m == 0 || self.witness_n == 0 {
            return Err(CliError::config("witness bin counts must be positive"));
        }
        if self.witness_dr_min == 0 || self.witness_dr_min > self.witness_dr_max {
            return Err(CliError::config(format!(
                "witness separation range {}..={} is invalid",
                self.witness_dr_min, self.witness_dr_max
            )));
        }
        let last = self.witness_m - 1 + self.witness_dr_max + self.witness_n - 1;
        if last >= self.n_s {
            return Err(CliError::config(format!(
                "witness geometry overflows the lattice: last bin {last} >= n_s {}",
                self.n_s
            )));
        }
        if self.phi_grid == 0 {
            return Err(CliError::config("phi grid must have at least one point"));
        }
        if self.fit_dr_max != 0 && self.fit_dr_min > self.fit_dr_max {
            return Err(CliError::config("fit range is inverted"));
        }
        Ok(())
    }

    /// Hash of the fully resolved configuration, echoed in every output.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Reads a two-column tabulated target: `dr value` per line, whitespace
/// or comma separated, `#` comments.
pub fn read_target_file(path: &Path) -> Result<BTreeMap<usize, f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read target file {}: {e}", path.display())))?;
    let mut samples = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty());
        let err = |what: &str| {
            CliError::config(format!(
                "{}:{}: {what} in '{raw}'",
                path.display(),
                lineno + 1
            ))
        };
        let dr: usize = fields
            .next()
            .ok_or_else(|| err("missing separation column"))?
            .parse()
            .map_err(|_| err("separation must be a non-negative integer"))?;
        let value: f64 = fields
            .next()
            .ok_or_else(|| err("missing value column"))?
            .parse()
            .map_err(|_| err("value must be a real number"))?;
        if fields.next().is_some() {
            return Err(err("expected exactly two columns"));
        }
        if samples.insert(dr, value).is_some() {
            return Err(err("duplicate separation"));
        }
    }
    if samples.is_empty() {
        return Err(CliError::config(format!(
            "{}: no samples found",
            path.display()
        )));
    }
    Ok(samples)
}

fn validate_tabulated(samples: &BTreeMap<usize, f64>, n_s: usize) -> Result<(), CliError> {
    for dr in 1..=n_s / 2 {
        if !samples.contains_key(&dr) {
            return Err(CliError::config(format!(
                "tabulated target misses separation {dr} (grid must cover 1..={})",
                n_s / 2
            )));
        }
    }
    Ok(())
}

/// Loads a TOML config file as a partial overlay.
pub fn load_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Output directory for one sweep member.
pub fn member_dir(base: &Path, d: f64) -> PathBuf {
    base.join(format!("d_{}", format_depth(d)))
}
