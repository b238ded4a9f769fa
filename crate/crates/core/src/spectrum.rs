//! Momentum-space views of a covariance state and the real-space
//! correlation average.
//!
//! On the periodic mode grid `k_m = 2 pi m / n_s` the diagonal spectrum is
//!
//! ```text
//! S(m) = (1/n_s) sum_{i,j} cos(k_m (r_i - r_j)) G(r_i, r_j),
//! ```
//!
//! which factors into quadratic forms over cosine/sine profile vectors;
//! that factored evaluation is what [`k_spectrum`] uses. The literal
//! double sum lives in the test suite as an independent oracle. The
//! imaginary residue of the complex transform, `(s^T G c - c^T G s)/n_s`,
//! vanishes only for symmetric `G` and is tracked as a realness check.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::ensemble::{Axis, CovarianceState, EnsembleConfig};

/// Which matrix a spectrum or correlation is computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumComponent {
    Axis(Axis),
    /// Sum of the three component matrices.
    Sum,
}

/// Diagonal momentum spectrum `S(m)` over the full mode grid
/// `m = 0 .. n_s - 1`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KSpectrum {
    /// `values[m]` is the covariance of the mode pair `(k_m, -k_m)`.
    pub values: Vec<f64>,
    /// Largest imaginary residue of the complex transform across modes.
    pub max_imag_residue: f64,
}

impl KSpectrum {
    /// Largest violation of the reflection symmetry
    /// `values[m] == values[n_s - m]`.
    pub fn reflection_defect(&self) -> f64 {
        let n = self.values.len();
        let mut worst: f64 = 0.0;
        for m in 1..n {
            let d = (self.values[m] - self.values[n - m]).abs();
            if d > worst {
                worst = d;
            }
        }
        worst
    }
}

/// Tables of `cos(2 pi t / n_s)` and `sin(2 pi t / n_s)` for
/// `t = 0 .. n_s - 1`. Every trigonometric factor used by the crate is a
/// lookup `table[(m * i) % n_s]`, so end-point weights like the zone-edge
/// profile come out exactly 0/1.
pub(crate) fn cos_sin_table(n_s: usize) -> (Vec<f64>, Vec<f64>) {
    let step = 2.0 * core::f64::consts::PI / n_s as f64;
    let cos: Vec<f64> = (0..n_s).map(|t| libm::cos(step * t as f64)).collect();
    let sin: Vec<f64> = (0..n_s).map(|t| libm::sin(step * t as f64)).collect();
    (cos, sin)
}

/// Profile vectors `cos(k_m r_i)` and `sin(k_m r_i)` for one mode.
pub(crate) fn mode_profiles(m: usize, n_s: usize, cos: &[f64], sin: &[f64]) -> (DVector<f64>, DVector<f64>) {
    let c = DVector::from_fn(n_s, |i, _| cos[(m * i) % n_s]);
    let s = DVector::from_fn(n_s, |i, _| sin[(m * i) % n_s]);
    (c, s)
}

/// Spectrum entry of a single mode (real part only).
pub(crate) fn spectral_entry(g: &DMatrix<f64>, m: usize) -> f64 {
    let n_s = g.nrows();
    let (cos, sin) = cos_sin_table(n_s);
    let (c, s) = mode_profiles(m, n_s, &cos, &sin);
    let u = g * &c;
    let w = g * &s;
    (c.dot(&u) + s.dot(&w)) / n_s as f64
}

/// Diagonal momentum spectrum of one component (or the component sum)
/// over the full mode grid.
pub fn k_spectrum(state: &CovarianceState, component: SpectrumComponent) -> KSpectrum {
    let summed;
    let g = match component {
        SpectrumComponent::Axis(axis) => state.component(axis),
        SpectrumComponent::Sum => {
            summed = state.summed();
            &summed
        }
    };
    let n_s = g.nrows();
    let (cos, sin) = cos_sin_table(n_s);
    let mut values = Vec::with_capacity(n_s);
    let mut max_imag: f64 = 0.0;
    for m in 0..n_s {
        let (c, s) = mode_profiles(m, n_s, &cos, &sin);
        let u = g * &c;
        let w = g * &s;
        values.push((c.dot(&u) + s.dot(&w)) / n_s as f64);
        let imag = (s.dot(&u) - c.dot(&w)) / n_s as f64;
        max_imag = max_imag.max(imag.abs());
    }
    KSpectrum {
        values,
        max_imag_residue: max_imag,
    }
}

/// Real-space spin correlation averaged over start sites in the first
/// quarter of the chain,
///
/// ```text
/// C(dr) = (1/(n_s/4)) sum_{i=0}^{n_s/4-1} sum_a G_aa(r_i, r_i + dr) / gamma0,
/// ```
///
/// returned for every separation `dr = 0 ..= n_s/2` (no wraparound is
/// needed inside that window).
pub fn real_correlation(state: &CovarianceState, config: &EnsembleConfig) -> Vec<f64> {
    let n_s = config.n_s;
    let window = n_s / 4;
    let g0 = config.gamma0();
    let mut out = Vec::with_capacity(n_s / 2 + 1);
    for dr in 0..=n_s / 2 {
        let mut acc = 0.0;
        for axis in Axis::ALL {
            let g = state.component(axis);
            for i in 0..window {
                acc += g[(i, i + dr)];
            }
        }
        out.push(acc / (window as f64 * g0));
    }
    out
}
