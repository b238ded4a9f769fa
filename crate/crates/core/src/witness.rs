//! Multimode spatial entanglement witness over lattice bins.
//!
//! For a normalized spatial profile `f` (unit weight spread over two bin
//! sets, with a relative phase on the second) the witness is
//!
//! ```text
//! W = (1/n_a) sum_a sum_{i,j} conj(f_i) f_j G_aa(r_i, r_j) - 1,
//! ```
//!
//! negative values certify entanglement between the bins. The profile is
//! `1/sqrt(m+n)` on the first set and `exp(i phi)/sqrt(m+n)` on the
//! second, so over a real symmetric covariance the quadratic form reduces
//! to three indicator sums and a `cos(phi)` cross term, which is how it
//! is evaluated here (the complex path is exercised in tests).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::ensemble::{Axis, CovarianceState, EnsembleConfig};
use crate::error::Error;
use crate::Result;

/// A single witness evaluation: two disjoint bin sets and a phase.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessQuery {
    pub s_bins: Vec<usize>,
    pub w_bins: Vec<usize>,
    pub phi: f64,
}

impl WitnessQuery {
    pub fn new(s_bins: Vec<usize>, w_bins: Vec<usize>, phi: f64, config: &EnsembleConfig) -> Result<Self> {
        let query = WitnessQuery { s_bins, w_bins, phi };
        query.validate(config)?;
        Ok(query)
    }

    pub fn validate(&self, config: &EnsembleConfig) -> Result<()> {
        if self.s_bins.is_empty() && self.w_bins.is_empty() {
            return Err(Error::BadBins("both bin sets are empty".into()));
        }
        if self.s_bins.len() + self.w_bins.len() < 2 {
            return Err(Error::BadBins("need at least two bins in total".into()));
        }
        let s: BTreeSet<usize> = self.s_bins.iter().copied().collect();
        let w: BTreeSet<usize> = self.w_bins.iter().copied().collect();
        if s.len() != self.s_bins.len() || w.len() != self.w_bins.len() {
            return Err(Error::BadBins("duplicate bin indices".into()));
        }
        if !s.is_disjoint(&w) {
            return Err(Error::BadBins("bin sets overlap".into()));
        }
        if let Some(&max) = s.iter().chain(w.iter()).max() {
            if max >= config.n_s {
                return Err(Error::BadBins(format!(
                    "bin index {max} outside lattice of {} sites",
                    config.n_s
                )));
            }
        }
        Ok(())
    }
}

/// Indicator block sums of the summed-component covariance: within the
/// first set, within the second, and across.
fn block_sums(state: &CovarianceState, query: &WitnessQuery) -> (f64, f64, f64) {
    let mut q_ss = 0.0;
    let mut q_ww = 0.0;
    let mut q_sw = 0.0;
    for axis in Axis::ALL {
        let g = state.component(axis);
        for &i in &query.s_bins {
            for &k in &query.s_bins {
                q_ss += g[(i, k)];
            }
            for &k in &query.w_bins {
                q_sw += g[(i, k)];
            }
        }
        for &i in &query.w_bins {
            for &k in &query.w_bins {
                q_ww += g[(i, k)];
            }
        }
    }
    (q_ss, q_ww, q_sw)
}

/// Evaluates the witness `W`; `W < 0` implies entanglement between the
/// two bin sets.
pub fn witness_value(state: &CovarianceState, config: &EnsembleConfig, query: &WitnessQuery) -> Result<f64> {
    query.validate(config)?;
    if state.n_s() != config.n_s {
        return Err(Error::ShapeMismatch(format!(
            "state has {} sites, config {}",
            state.n_s(),
            config.n_s
        )));
    }
    let (q_ss, q_ww, q_sw) = block_sums(state, query);
    let bins = (query.s_bins.len() + query.w_bins.len()) as f64;
    let s = (q_ss + q_ww + 2.0 * libm::cos(query.phi) * q_sw) / bins;
    Ok(s / config.n_a as f64 - 1.0)
}

/// Scan geometry: a block of `m` contiguous bins at `origin`, entangled
/// with a chain of `n` bins starting `delta_r` sites past the block.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanGeometry {
    pub origin: usize,
    /// Bins in the first set (the paper geometry uses 1).
    pub m: usize,
    /// Bins in the chain.
    pub n: usize,
    pub delta_r: RangeInclusive<usize>,
    /// Uniform phase grid resolution over `[0, 2 pi)`.
    pub phi_points: usize,
}

impl ScanGeometry {
    /// Single bin against a chain, scanned over the given separations
    /// with the default 64-point phase grid.
    pub fn single_bin_vs_chain(n: usize, delta_r: RangeInclusive<usize>) -> Self {
        ScanGeometry {
            origin: 0,
            m: 1,
            n,
            delta_r,
            phi_points: 64,
        }
    }
}

/// One scan cell.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WitnessPoint {
    pub delta_r: usize,
    pub phi: f64,
    pub w: f64,
}

/// Per-separation minimum over the phase grid.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WitnessMinimum {
    pub delta_r: usize,
    /// Phase at which the grid minimum is attained.
    pub phi: f64,
    pub w: f64,
    /// Witness value at `phi = 0` for the same separation.
    pub w_at_zero: f64,
    /// Mean over the phase grid; the cosine cross term averages out, so
    /// this is the phase-independent baseline of the two bin sets, and
    /// `w_phi_mean - w_at_zero` isolates the decaying cross-correlation.
    pub w_phi_mean: f64,
}

/// Full scan table.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WitnessScan {
    pub points: Vec<WitnessPoint>,
    pub minima: Vec<WitnessMinimum>,
}

/// Scans the witness over separation and phase. `delta_r` is measured
/// from the last bin of the first set to the first bin of the chain.
pub fn witness_scan(state: &CovarianceState, config: &EnsembleConfig, geometry: &ScanGeometry) -> Result<WitnessScan> {
    if geometry.m == 0 || geometry.n == 0 {
        return Err(Error::BadBins("bin sets must be non-empty".into()));
    }
    if geometry.phi_points == 0 {
        return Err(Error::BadBins("phase grid must be non-empty".into()));
    }
    let max_dr = *geometry.delta_r.end();
    let last = geometry.origin + geometry.m - 1 + max_dr + geometry.n - 1;
    if last >= config.n_s {
        return Err(Error::GeometryOverflow(format!(
            "chain end {last} outside lattice of {} sites",
            config.n_s
        )));
    }
    let phi_grid: Vec<f64> = (0..geometry.phi_points)
        .map(|k| 2.0 * core::f64::consts::PI * k as f64 / geometry.phi_points as f64)
        .collect();
    let mut points = Vec::new();
    let mut minima = Vec::new();
    for dr in geometry.delta_r.clone() {
        let s_bins: Vec<usize> = (geometry.origin..geometry.origin + geometry.m).collect();
        let w_start = geometry.origin + geometry.m - 1 + dr;
        let w_bins: Vec<usize> = (w_start..w_start + geometry.n).collect();
        let query = WitnessQuery::new(s_bins, w_bins, 0.0, config)?;
        let (q_ss, q_ww, q_sw) = block_sums(state, &query);
        let bins = (geometry.m + geometry.n) as f64;
        let w_of = |phi: f64| ((q_ss + q_ww + 2.0 * libm::cos(phi) * q_sw) / bins) / config.n_a as f64 - 1.0;

        let mut best = (0.0f64, f64::INFINITY);
        let mut mean = 0.0;
        for &phi in &phi_grid {
            let w = w_of(phi);
            points.push(WitnessPoint { delta_r: dr, phi, w });
            mean += w;
            if w < best.1 {
                best = (phi, w);
            }
        }
        minima.push(WitnessMinimum {
            delta_r: dr,
            phi: best.0,
            w: best.1,
            w_at_zero: w_of(0.0),
            w_phi_mean: mean / phi_grid.len() as f64,
        });
    }
    Ok(WitnessScan { points, minima })
}
