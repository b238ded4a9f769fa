//! A single standing-wave QND pulse: probe interaction, homodyne
//! measurement conditioning, spontaneous-emission decoherence, and the
//! feedback bookkeeping no-op.
//!
//! The probe at mode index `p` couples the measured light quadrature to
//! the weighted collective spin `X = sum_i c_i J_{z,i}` with the
//! standing-wave profile `c_i = (1 + cos(2 pi p i / n_s)) / 2`, so the
//! whole interaction-plus-measurement step is a rank-one conditioning of
//! the addressed component matrix `G`:
//!
//! ```text
//! v         = G c
//! g22_out   = g22_in + g^2 (c . v),     g^2 = C^2 / (n_s j)
//! G        <- G - (g^2 / g22_out) v v^T
//! ```
//!
//! with the light quadrature shot-noise normalized to `g22_in = 1/2` and
//! fresh light for every pulse. Decoherence then mixes all three
//! components toward the fully mixed state:
//! `G_aa <- (1 - 2 eta) G_aa + 2 eta gamma0 I`.
//!
//! Transverse back-action during the interaction is dropped: only the
//! addressed component and the light variance change, which keeps the
//! cross-component covariances identically zero.

use alloc::format;
use nalgebra::DVector;

use crate::ensemble::{Axis, CovarianceState, EnsembleConfig};
use crate::error::Error;
use crate::spectrum::{cos_sin_table, spectral_entry};
use crate::Result;

/// Shot-noise-normalized variance of the measured quadrature of a fresh
/// probe pulse.
pub const GAMMA22_IN: f64 = 0.5;

/// One standing-wave probe pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Pulse {
    /// Probe mode index in `0 ..= n_s/2`; the pulse addresses the spatial
    /// mode `2 k_p = 2 pi p / n_s`.
    pub p: usize,
    /// Spin component the pulse measures.
    pub component: Axis,
    /// Dimensionless coupling strength `C_p >= 0`.
    pub coupling: f64,
    /// Spontaneous-emission probability, `eta in [0, 1/2]`.
    pub eta: f64,
}

impl Pulse {
    pub fn new(p: usize, component: Axis, coupling: f64, eta: f64, config: &EnsembleConfig) -> Result<Self> {
        let pulse = Pulse {
            p,
            component,
            coupling,
            eta,
        };
        pulse.validate(config)?;
        Ok(pulse)
    }

    /// Pulse whose decoherence follows from the configured optical depth,
    /// `eta = C^2 / d`.
    pub fn for_depth(p: usize, component: Axis, coupling: f64, config: &EnsembleConfig) -> Result<Self> {
        Pulse::new(p, component, coupling, config.eta_for(coupling), config)
    }

    pub fn validate(&self, config: &EnsembleConfig) -> Result<()> {
        let max = config.n_s / 2;
        if self.p > max {
            return Err(Error::ModeOutOfRange { p: self.p, max });
        }
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(Error::BadCoupling(self.coupling));
        }
        check_eta(self.eta)
    }
}

/// Post-pulse measurement record.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PulseDiagnostics {
    /// Variance of the measured light quadrature after the interaction.
    pub gamma22_out: f64,
    /// Realized squeezing fraction `f = gamma0 C^2 / (4 j g22_out)`.
    pub achieved_fraction: f64,
    /// Spectrum entry of the addressed mode before the pulse.
    pub variance_before: f64,
    /// Spectrum entry of the addressed mode after measurement and
    /// decoherence.
    pub variance_after: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&eta) || !eta.is_finite() {
        return Err(Error::EtaOutOfRange(eta));
    }
    Ok(())
}

/// Standing-wave intensity profile `c_i = (1 + cos(2 pi p i / n_s)) / 2`.
pub fn standing_wave_weights(p: usize, n_s: usize) -> Result<DVector<f64>> {
    if p > n_s / 2 {
        return Err(Error::ModeOutOfRange { p, max: n_s / 2 });
    }
    let (cos, _) = cos_sin_table(n_s);
    Ok(DVector::from_fn(n_s, |i, _| {
        0.5 * (1.0 + cos[(p * i) % n_s])
    }))
}

/// Applies one pulse in place: measurement conditioning of the addressed
/// component followed by the decoherence channel on all three components.
pub fn apply_pulse(state: &mut CovarianceState, config: &EnsembleConfig, pulse: &Pulse) -> Result<PulseDiagnostics> {
    pulse.validate(config)?;
    if state.n_s() != config.n_s {
        return Err(Error::ShapeMismatch(format!(
            "state has {} sites, config {}",
            state.n_s(),
            config.n_s
        )));
    }
    let n_s = config.n_s;
    let g0 = config.gamma0();
    let c = standing_wave_weights(pulse.p, n_s)?;

    let variance_before = spectral_entry(state.component(pulse.component), pulse.p);

    let g_sq = pulse.coupling * pulse.coupling / (n_s as f64 * config.j);
    let g = state.component_mut(pulse.component);
    let v = &*g * &c;
    let signal = c.dot(&v);
    if signal < -1e-9 * g0 * n_s as f64 {
        return Err(Error::InvariantViolation(format!(
            "negative probe variance c^T G c = {signal:e}"
        )));
    }
    let gamma22_out = GAMMA22_IN + g_sq * signal;
    // Conditioning on the homodyne record: rank-one downdate. The outer
    // product of v with itself is bitwise symmetric, so symmetry survives
    // exactly; the averaging below only guards hand-built states.
    g.ger(-g_sq / gamma22_out, &v, &v, 1.0);
    let achieved_fraction = g0 * pulse.coupling * pulse.coupling / (4.0 * config.j * gamma22_out);

    if pulse.eta > 0.0 {
        apply_decoherence(state, config, pulse.eta)?;
    }
    state.symmetrize();

    let variance_after = spectral_entry(state.component(pulse.component), pulse.p);

    Ok(PulseDiagnostics {
        gamma22_out,
        achieved_fraction,
        variance_before,
        variance_after,
    })
}

/// Spontaneous-emission channel,
/// `G_aa <- (1 - 2 eta) G_aa + 2 eta gamma0 I` on all three components.
/// The fully mixed state is its fixed point; `eta = 1/2` maps any state
/// onto it.
pub fn apply_decoherence(state: &mut CovarianceState, config: &EnsembleConfig, eta: f64) -> Result<()> {
    check_eta(eta)?;
    if eta == 0.0 {
        return Ok(());
    }
    let reset = 2.0 * eta * config.gamma0();
    for axis in Axis::ALL {
        let g = state.component_mut(axis);
        *g *= 1.0 - 2.0 * eta;
        for i in 0..g.nrows() {
            g[(i, i)] += reset;
        }
    }
    Ok(())
}

/// Optical-pumping feedback that nulls the addressed collective means.
/// Means are identically zero in this representation, so the covariances
/// do not change; the protocol layer records one feedback event per
/// measurement to stay faithful to the physical sequence.
pub fn zero_means(_state: &mut CovarianceState) {}
