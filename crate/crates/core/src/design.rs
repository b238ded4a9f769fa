//! Inverse design of the pulse sequence: from a desired correlation
//! signature to per-wavevector squeezing fractions and couplings.
//!
//! The engineered correlation shape is carried by the squeezing fractions
//! `f_p`, which are (up to an overall scale fixed later) the inverse
//! cosine transform of the target signature, closed at zero separation so
//! the cosine basis is orthogonal on the half grid. Each fraction is then
//! turned into a coupling by inverting the mixed-state self-consistency
//! relation
//!
//! ```text
//! f = gamma0 C^2 / (4 j g22_out(C)),    g22_out(C) = g22_in + C^2 gamma0 w / j,
//! ```
//!
//! where `w = c^T c / n_s` is the mean squared standing-wave weight (3/8
//! for a generic wavevector, 1 for the uniform mode, 1/2 at the zone
//! edge). Solving for the coupling gives
//!
//! ```text
//! C^2 = 4 j g22_in f / (gamma0 (1 - 4 w f)),
//! ```
//!
//! with a pole at `f = 1/(4w)`; fractions are kept strictly below it. The
//! overall amplitude of the target is not free: QND squeezing only
//! removes variance, so a single positive scale is chosen by bisection
//! such that the largest coupling equals `c_max`. The engineered
//! real-space correlations are anticorrelations whose magnitude follows
//! the requested shape; the analysis layer fits magnitudes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::ensemble::EnsembleConfig;
use crate::error::Error;
use crate::pulse::{standing_wave_weights, GAMMA22_IN};
use crate::spectrum::cos_sin_table;
use crate::Result;

/// Default cap on the largest coupling strength; conservative enough that
/// the single-mode design approximations stay valid.
pub const DEFAULT_C_MAX: f64 = 0.95;

/// Bisection tolerance on the realized maximum coupling.
const C_MAX_TOL: f64 = 1e-10;

/// Functional form of the desired correlation signature.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    /// `exp(-dr / xi)`.
    Exponential { xi: f64 },
    /// `dr^(-zeta)`.
    Algebraic { zeta: f64 },
    /// `cos(2 pi dr / period) * dr^(-zeta)`.
    ModulatedAlgebraic { zeta: f64, period: usize },
    /// Explicit samples on the separation grid `1 ..= n_s/2`.
    Tabulated { samples: BTreeMap<usize, f64> },
}

/// A correlation target plus the coupling budget used to realize it.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    /// Target maximum coupling, in `(0, 2)`.
    pub c_max: f64,
}

impl TargetSpec {
    pub fn exponential(xi: f64) -> Self {
        TargetSpec {
            kind: TargetKind::Exponential { xi },
            c_max: DEFAULT_C_MAX,
        }
    }

    pub fn algebraic(zeta: f64) -> Self {
        TargetSpec {
            kind: TargetKind::Algebraic { zeta },
            c_max: DEFAULT_C_MAX,
        }
    }

    pub fn modulated_algebraic(zeta: f64, period: usize) -> Self {
        TargetSpec {
            kind: TargetKind::ModulatedAlgebraic { zeta, period },
            c_max: DEFAULT_C_MAX,
        }
    }

    pub fn tabulated(samples: BTreeMap<usize, f64>) -> Self {
        TargetSpec {
            kind: TargetKind::Tabulated { samples },
            c_max: DEFAULT_C_MAX,
        }
    }

    pub fn with_c_max(mut self, c_max: f64) -> Self {
        self.c_max = c_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_max.is_nan() || self.c_max <= 0.0 || self.c_max >= 2.0 {
            return Err(Error::InvalidTarget(format!(
                "c_max must lie in (0, 2), got {}",
                self.c_max
            )));
        }
        match &self.kind {
            TargetKind::Exponential { xi } => {
                if !(xi.is_finite() && *xi > 0.0) {
                    return Err(Error::InvalidTarget(format!("xi must be positive, got {xi}")));
                }
            }
            TargetKind::Algebraic { zeta } => {
                if !(zeta.is_finite() && *zeta > 0.0) {
                    return Err(Error::InvalidTarget(format!("zeta must be positive, got {zeta}")));
                }
            }
            TargetKind::ModulatedAlgebraic { zeta, period } => {
                if !(zeta.is_finite() && *zeta > 0.0) {
                    return Err(Error::InvalidTarget(format!("zeta must be positive, got {zeta}")));
                }
                if *period == 0 {
                    return Err(Error::InvalidTarget("period must be positive".into()));
                }
            }
            TargetKind::Tabulated { samples } => {
                if samples.values().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidTarget("tabulated samples must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// Target shape sampled on the separation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTarget {
    /// Zero-separation sample closing the cosine transform (half weight).
    /// For shapes finite at the origin this is the shape value itself;
    /// divergent shapes use a quadratic extrapolation, clamped at zero.
    pub closure: f64,
    /// Samples for `dr = 1 ..= n_s/2` (index 0 is `dr = 1`).
    pub decay: Vec<f64>,
}

/// Raw (already clipped) squeezing fractions before amplitude scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFractions {
    /// One entry per wavevector `p = 0 ..= n_s/2`.
    pub values: Vec<f64>,
    /// Fraction of the absolute transform mass that was negative and got
    /// clipped to zero.
    pub clipped_mass: f64,
}

/// Finished design: fractions and couplings per wavevector.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DesignResult {
    /// Squeezing fractions `f_p` for `p = 0 ..= n_s/2`.
    pub fractions: Vec<f64>,
    /// Coupling strengths `C_p` on the same grid.
    pub couplings: Vec<f64>,
    /// Clipped negative transform mass, forwarded from the transform.
    pub clipped_mass: f64,
    /// Amplitude applied to the raw fractions to meet `c_max`.
    pub scale: f64,
}

impl DesignResult {
    pub fn max_coupling(&self) -> f64 {
        self.couplings.iter().cloned().fold(0.0, f64::max)
    }

    /// Wavevector indices with a non-zero coupling.
    pub fn active_modes(&self) -> Vec<usize> {
        (0..self.couplings.len())
            .filter(|&p| self.couplings[p] > 0.0)
            .collect()
    }
}

/// Samples the target shape on the separation grid `dr = 1 ..= n_s/2`
/// and subtracts the mean over the trailing 10% of the grid so the
/// transform carries no spurious small-k weight.
///
/// The zero-separation closure sample is carried alongside: the shape
/// value at `dr = 0` when it is finite (exponential, tabulated targets
/// with an explicit 0 row), otherwise a quadratic extrapolation of the
/// first three samples, clamped at zero. Without it the half-range
/// transform of any decay shape picks up a negative plateau across the
/// whole wavevector grid (the cosine basis is only orthogonal with the
/// zero-separation term included at half weight).
pub fn sample_target(spec: &TargetSpec, n_s: usize) -> Result<SampledTarget> {
    spec.validate()?;
    let m = n_s / 2;
    let mut decay = Vec::with_capacity(m);
    for dr in 1..=m {
        let r = dr as f64;
        let value = match &spec.kind {
            TargetKind::Exponential { xi } => libm::exp(-r / xi),
            TargetKind::Algebraic { zeta } => libm::pow(r, -zeta),
            TargetKind::ModulatedAlgebraic { zeta, period } => {
                libm::cos(2.0 * core::f64::consts::PI * r / *period as f64) * libm::pow(r, -zeta)
            }
            TargetKind::Tabulated { samples } => *samples.get(&dr).ok_or(
                Error::TabulatedGridIncomplete {
                    missing: dr,
                    needed: m,
                },
            )?,
        };
        decay.push(value);
    }
    let tail = m.max(10) / 10; // 10% of the grid, at least one point
    let offset: f64 = decay[m - tail..].iter().sum::<f64>() / tail as f64;
    for v in &mut decay {
        *v -= offset;
    }
    let at_zero = match &spec.kind {
        TargetKind::Exponential { .. } => Some(1.0),
        TargetKind::Tabulated { samples } => samples.get(&0).copied(),
        _ => None, // power-law shapes diverge at the origin
    };
    let closure = match at_zero {
        Some(value) => value - offset,
        None => 3.0 * decay[0] - 3.0 * decay[1] + decay[2],
    };
    Ok(SampledTarget {
        closure: closure.max(0.0),
        decay,
    })
}

/// Inverse cosine transform of the target signature onto the wavevector
/// grid,
///
/// ```text
/// f_raw(p) = (2/n_s) sum_dr w(dr) cos(2 pi p dr / n_s) (4 samples(dr) / gamma0),
/// ```
///
/// summed over `dr = 0 ..= n_s/2` with half weight on both end points
/// (the zero-separation sample is the target's closure value). Negative
/// entries are clipped to zero (squeezing fractions cannot be negative)
/// and the clipped mass is reported.
pub fn target_to_fractions(target: &SampledTarget, config: &EnsembleConfig) -> RawFractions {
    let n_s = config.n_s;
    let m = n_s / 2;
    assert_eq!(target.decay.len(), m, "samples must cover dr = 1..=n_s/2");
    let (cos, _) = cos_sin_table(n_s);
    let g0 = config.gamma0();
    let mut values = Vec::with_capacity(m + 1);
    for p in 0..=m {
        let mut acc = 0.5 * 4.0 * target.closure / g0;
        for (idx, &sample) in target.decay.iter().enumerate() {
            let dr = idx + 1;
            let weight = if dr == m { 0.5 } else { 1.0 };
            acc += weight * cos[(p * dr) % n_s] * 4.0 * sample / g0;
        }
        values.push(2.0 * acc / n_s as f64);
    }
    let total: f64 = values.iter().map(|v| v.abs()).sum();
    // An empty f64 sum is -0.0; canonicalize so the mass is a plain zero.
    let negative: f64 = values
        .iter()
        .filter(|v| **v < 0.0)
        .map(|v| -*v)
        .sum::<f64>()
        .max(0.0);
    for v in &mut values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let clipped_mass = if total > 0.0 { negative / total } else { 0.0 };
    RawFractions {
        values,
        clipped_mass,
    }
}

/// Mean squared standing-wave weight `w = c^T c / n_s` of a wavevector,
/// evaluated from the actual profile (3/8 generic, 1 uniform, 1/2 zone
/// edge).
pub fn mode_weight(p: usize, n_s: usize) -> Result<f64> {
    let c = standing_wave_weights(p, n_s)?;
    Ok(c.dot(&c) / n_s as f64)
}

/// Largest admissible squeezing fraction for a mode of weight `w`.
pub fn fraction_pole(w: f64) -> f64 {
    1.0 / (4.0 * w)
}

/// Closed-form coupling realizing fraction `f` on the mixed state,
/// `C = 2 sqrt(j) sqrt(g22_in f / (gamma0 (1 - 4 w f)))`.
pub fn coupling_for_fraction(f: f64, w: f64, config: &EnsembleConfig) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    2.0 * libm::sqrt(config.j) * libm::sqrt(GAMMA22_IN * f / (config.gamma0() * (1.0 - 4.0 * w * f)))
}

/// Numeric inversion of the same relation by bisection on the coupling;
/// diagnostic cross-check for the closed form (they agree to 1e-8).
pub fn coupling_for_fraction_bisect(f: f64, w: f64, config: &EnsembleConfig) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    let g0 = config.gamma0();
    let fraction_of = |c: f64| {
        let g22 = GAMMA22_IN + c * c * g0 * w / config.j;
        g0 * c * c / (4.0 * config.j * g22)
    };
    let mut hi = 1.0;
    while fraction_of(hi) < f {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fraction_of(mid) < f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scales the raw fractions so that the largest resulting coupling equals
/// `c_max`, then solves every wavevector for its coupling.
pub fn fractions_to_couplings(raw: &RawFractions, config: &EnsembleConfig, c_max: f64) -> Result<DesignResult> {
    let n_s = config.n_s;
    let modes = config.mode_count();
    if raw.values.len() != modes {
        return Err(Error::ShapeMismatch(format!(
            "expected {modes} fractions, got {}",
            raw.values.len()
        )));
    }
    if raw.values.iter().any(|f| *f < 0.0 || !f.is_finite()) {
        return Err(Error::InvalidTarget("fractions must be finite and non-negative".into()));
    }
    if c_max.is_nan() || c_max <= 0.0 || c_max >= 2.0 {
        return Err(Error::InvalidTarget(format!("c_max must lie in (0, 2), got {c_max}")));
    }
    let weights: Vec<f64> = (0..modes)
        .map(|p| mode_weight(p, n_s))
        .collect::<Result<_>>()?;

    // Largest admissible amplitude: every scaled fraction must stay
    // strictly below its pole.
    let mut scale_cap = f64::INFINITY;
    for (p, &f) in raw.values.iter().enumerate() {
        if f > 0.0 {
            scale_cap = scale_cap.min(fraction_pole(weights[p]) * (1.0 - 1e-9) / f);
        }
    }
    if !scale_cap.is_finite() {
        return Err(Error::DegenerateTarget);
    }

    let max_coupling = |scale: f64| -> f64 {
        raw.values
            .iter()
            .zip(&weights)
            .map(|(&f, &w)| coupling_for_fraction(scale * f, w, config))
            .fold(0.0, f64::max)
    };

    let achievable = max_coupling(scale_cap);
    if achievable < c_max {
        return Err(Error::InfeasibleTarget {
            requested: c_max,
            achievable,
        });
    }

    let mut lo = 0.0;
    let mut hi = scale_cap;
    let mut scale = 0.5 * scale_cap;
    for _ in 0..200 {
        scale = 0.5 * (lo + hi);
        let c = max_coupling(scale);
        if (c - c_max).abs() <= C_MAX_TOL {
            break;
        }
        if c < c_max {
            lo = scale;
        } else {
            hi = scale;
        }
    }

    let fractions: Vec<f64> = raw.values.iter().map(|&f| scale * f).collect();
    let couplings: Vec<f64> = fractions
        .iter()
        .zip(&weights)
        .map(|(&f, &w)| coupling_for_fraction(f, w, config))
        .collect();
    Ok(DesignResult {
        fractions,
        couplings,
        clipped_mass: raw.clipped_mass,
        scale,
    })
}

/// Full chain: sample the target, transform to fractions, and solve for
/// the couplings.
pub fn design_sequence(spec: &TargetSpec, config: &EnsembleConfig) -> Result<DesignResult> {
    let target = sample_target(spec, config.n_s)?;
    let raw = target_to_fractions(&target, config);
    fractions_to_couplings(&raw, config, spec.c_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fig2(n_s: usize) -> EnsembleConfig {
        EnsembleConfig::new(n_s, 10, 1.0, f64::INFINITY).unwrap()
    }

    #[test]
    fn exponential_samples_carry_small_tail_offset() {
        let spec = TargetSpec::exponential(5.0);
        let target = sample_target(&spec, 200).unwrap();
        assert_eq!(target.decay.len(), 100);
        let tail: f64 = (91..=100).map(|dr| (-(dr as f64) / 5.0).exp()).sum::<f64>() / 10.0;
        assert!(tail < 1e-3);
        assert_relative_eq!(target.decay[4], (-1.0f64).exp() - tail, max_relative = 1e-12);
        // Exponential shape is finite at the origin, so the closure is exact.
        assert_relative_eq!(target.closure, 1.0 - tail, max_relative = 1e-12);
    }

    #[test]
    fn algebraic_samples_subtract_tail() {
        let spec = TargetSpec::algebraic(0.7);
        let target = sample_target(&spec, 200).unwrap();
        let tail: f64 = (91..=100).map(|dr| (dr as f64).powf(-0.7)).sum::<f64>() / 10.0;
        assert_relative_eq!(target.decay[0], 1.0 - tail, max_relative = 1e-12);
        // Divergent at the origin: quadratic extrapolation of the samples.
        let expected = 3.0 * target.decay[0] - 3.0 * target.decay[1] + target.decay[2];
        assert_relative_eq!(target.closure, expected, max_relative = 1e-12);
        assert!(target.closure > 1.0);
    }

    #[test]
    fn modulated_samples_oscillate_with_period_three() {
        let spec = TargetSpec::modulated_algebraic(0.7, 3);
        let target = sample_target(&spec, 200).unwrap();
        let expected = |dr: f64| (2.0 * core::f64::consts::PI * dr / 3.0).cos() * dr.powf(-0.7);
        let tail: f64 = (91..=100).map(|dr| expected(dr as f64)).sum::<f64>() / 10.0;
        for dr in [3usize, 6, 9] {
            assert_relative_eq!(target.decay[dr - 1], expected(dr as f64) - tail, max_relative = 1e-10);
        }
        // Extrapolation lands negative for this shape and is clamped.
        assert_eq!(target.closure, 0.0);
    }

    #[test]
    fn tabulated_grid_must_be_complete() {
        let mut samples = BTreeMap::new();
        for dr in 1..=50usize {
            if dr != 17 {
                samples.insert(dr, 0.5);
            }
        }
        let spec = TargetSpec::tabulated(samples);
        assert_eq!(
            sample_target(&spec, 100).unwrap_err(),
            Error::TabulatedGridIncomplete {
                missing: 17,
                needed: 50
            }
        );
    }

    #[test]
    fn zero_samples_give_zero_fractions() {
        let config = fig2(16);
        let target = SampledTarget {
            closure: 0.0,
            decay: alloc::vec![0.0; 8],
        };
        let raw = target_to_fractions(&target, &config);
        assert!(raw.values.iter().all(|&f| f == 0.0));
        assert_eq!(raw.clipped_mass, 0.0);
    }

    #[test]
    fn single_cosine_concentrates_on_one_wavevector() {
        let config = fig2(64);
        let q = 9usize;
        let amp = 0.05;
        let target = SampledTarget {
            closure: amp, // cosine value at dr = 0
            decay: (1..=32)
                .map(|dr| amp * (2.0 * core::f64::consts::PI * q as f64 * dr as f64 / 64.0).cos())
                .collect(),
        };
        let raw = target_to_fractions(&target, &config);
        let peak = raw.values[q];
        assert!(peak > 0.0);
        for (p, &f) in raw.values.iter().enumerate() {
            if p != q {
                assert!(f <= 1e-10 * peak, "leakage at p={p}: {f:e}");
            }
        }
    }

    #[test]
    fn exponential_fractions_peak_at_zero_mode() {
        let config = fig2(200);
        let target = sample_target(&TargetSpec::exponential(5.0), 200).unwrap();
        let raw = target_to_fractions(&target, &config);
        // Direct-summation oracle for a couple of wavevectors.
        for p in [0usize, 3, 11] {
            let mut acc = 0.5 * 4.0 * target.closure / config.gamma0();
            for (idx, &s) in target.decay.iter().enumerate() {
                let dr = (idx + 1) as f64;
                let w = if idx + 1 == 100 { 0.5 } else { 1.0 };
                acc += w * (2.0 * core::f64::consts::PI * p as f64 * dr / 200.0).cos() * 4.0 * s
                    / config.gamma0();
            }
            acc *= 2.0 / 200.0;
            assert_relative_eq!(raw.values[p], acc.max(0.0), max_relative = 1e-10);
        }
        // Monotone decrease away from the Lorentzian peak at p = 0.
        assert!(raw.values[0] > raw.values[5]);
        assert!(raw.values[5] > raw.values[20]);
        assert!(raw.clipped_mass < 0.05);
    }

    #[test]
    fn paper_targets_clip_little_mass() {
        let config = fig2(200);
        for spec in [TargetSpec::exponential(5.0), TargetSpec::algebraic(0.7)] {
            let target = sample_target(&spec, 200).unwrap();
            let raw = target_to_fractions(&target, &config);
            assert!(raw.clipped_mass < 0.05, "clipped {:.3}", raw.clipped_mass);
            // Every wavevector stays active for the decay targets.
            assert!(raw.values.iter().all(|&f| f > 0.0));
        }
    }

    #[test]
    fn coupling_round_trip_example() {
        // The worked single-pulse example: f = 10/27 at a generic
        // wavevector must invert back to C = 1/2 exactly.
        let config = fig2(8);
        let w = mode_weight(1, 8).unwrap();
        assert_relative_eq!(w, 3.0 / 8.0, max_relative = 1e-12);
        let c = coupling_for_fraction(10.0 / 27.0, w, &config);
        assert_relative_eq!(c, 0.5, max_relative = 1e-12);
        assert_eq!(coupling_for_fraction(0.0, w, &config), 0.0);
    }

    #[test]
    fn closed_form_matches_bisection() {
        let config = fig2(16);
        for p in [0usize, 1, 5, 8] {
            let w = mode_weight(p, 16).unwrap();
            let pole = fraction_pole(w);
            for frac in [0.01, 0.1, 0.3, 0.6] {
                let f = frac * pole;
                let closed = coupling_for_fraction(f, w, &config);
                let numeric = coupling_for_fraction_bisect(f, w, &config);
                assert_relative_eq!(closed, numeric, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn coupling_monotone_in_fraction() {
        let config = fig2(16);
        let w = 3.0 / 8.0;
        let mut last = 0.0;
        for step in 1..60 {
            let f = step as f64 / 60.0 * fraction_pole(w) * 0.99;
            let c = coupling_for_fraction(f, w, &config);
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn design_meets_c_max_and_poles() {
        let config = fig2(200);
        let design = design_sequence(&TargetSpec::exponential(5.0), &config).unwrap();
        assert_abs_diff_eq!(design.max_coupling(), 0.95, epsilon = 1e-6);
        for (p, &f) in design.fractions.iter().enumerate() {
            let pole = fraction_pole(mode_weight(p, 200).unwrap());
            assert!(f >= 0.0 && f < pole);
            if p != 0 {
                assert!(f < 2.0 / 3.0);
            } else {
                assert!(f < 0.25);
            }
        }
        assert!(design.couplings.iter().all(|c| c.is_finite() && *c >= 0.0));
        // The uniform mode has the largest fraction and hits the budget.
        assert_relative_eq!(design.couplings[0], 0.95, max_relative = 1e-6);
    }

    #[test]
    fn design_scaling_never_decreases_couplings() {
        let config = fig2(64);
        let target = sample_target(&TargetSpec::exponential(5.0), 64).unwrap();
        let raw = target_to_fractions(&target, &config);
        let small = fractions_to_couplings(&raw, &config, 0.45).unwrap();
        let large = fractions_to_couplings(&raw, &config, 0.9).unwrap();
        for (a, b) in small.couplings.iter().zip(&large.couplings) {
            assert!(b >= a);
        }
    }

    #[test]
    fn degenerate_target_is_rejected() {
        let config = fig2(16);
        let raw = RawFractions {
            values: alloc::vec![0.0; config.mode_count()],
            clipped_mass: 0.0,
        };
        assert_eq!(
            fractions_to_couplings(&raw, &config, 0.95).unwrap_err(),
            Error::DegenerateTarget
        );
    }

    #[test]
    fn design_is_deterministic() {
        let config = fig2(200);
        let a = design_sequence(&TargetSpec::algebraic(0.7), &config).unwrap();
        let b = design_sequence(&TargetSpec::algebraic(0.7), &config).unwrap();
        assert_eq!(a, b);
        let bits = |v: &[f64]| -> Vec<u64> { v.iter().map(|x| x.to_bits()).collect() };
        assert_eq!(bits(&a.couplings), bits(&b.couplings));
    }
}
