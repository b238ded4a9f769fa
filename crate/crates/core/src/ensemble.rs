//! Lattice ensemble parameters and the covariance representation of the
//! collective spin state.
//!
//! `n_s` bins of `n_a` spin-`j` atoms sit at unit-spaced positions
//! `r_i = i`. At the Gaussian level the state is fully described by three
//! real symmetric `n_s x n_s` matrices, the real-space covariances
//! `G_aa(r_1, r_2)` of the collective per-bin spin components. The
//! completely mixed ensemble has `G_aa = gamma0 * I` with per-bin variance
//! `gamma0 = n_a j (j+1) / 3`. Cross-component covariances vanish in the
//! mixed state and are never populated by the pulse dynamics, so they are
//! not stored (the extended oracle verifies this).

use alloc::format;
use alloc::string::String;
use nalgebra::DMatrix;

use crate::error::Error;
use crate::Result;

/// Relative tolerance (in units of `gamma0`) for the positive
/// semidefiniteness of a covariance matrix.
pub const PSD_TOL_REL: f64 = 1e-9;

/// Spin component label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// All components, in storage order.
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Static parameters of the lattice ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnsembleConfig {
    /// Number of lattice bins; even and at least 8 so that both the
    /// uniform mode and the zone-edge mode exist.
    pub n_s: usize,
    /// Atoms per bin.
    pub n_a: usize,
    /// Spin length; positive half-integer.
    pub j: f64,
    /// On-resonance optical depth. `f64::INFINITY` disables decoherence.
    pub d: f64,
}

impl EnsembleConfig {
    pub fn new(n_s: usize, n_a: usize, j: f64, d: f64) -> Result<Self> {
        let config = EnsembleConfig { n_s, n_a, j, d };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidEnsemble(msg));
        if self.n_s < 8 || !self.n_s.is_multiple_of(2) {
            return fail(format!("n_s must be even and >= 8, got {}", self.n_s));
        }
        if self.n_a == 0 {
            return fail(format!("n_a must be positive, got {}", self.n_a));
        }
        let twice_j = 2.0 * self.j;
        if self.j.is_nan() || self.j <= 0.0 || !self.j.is_finite() || twice_j != libm::round(twice_j) {
            return fail(format!("j must be a positive half-integer, got {}", self.j));
        }
        if self.d.is_nan() || self.d <= 0.0 {
            return fail(format!("optical depth must be positive (or inf), got {}", self.d));
        }
        Ok(())
    }

    /// Per-bin, per-component variance of the completely mixed state,
    /// `gamma0 = n_a j (j+1) / 3`.
    pub fn gamma0(&self) -> f64 {
        self.n_a as f64 * self.j * (self.j + 1.0) / 3.0
    }

    /// Total atom count `N_A = n_s * n_a`.
    pub fn atom_count(&self) -> usize {
        self.n_s * self.n_a
    }

    /// Number of distinct probe wavevectors, `p = 0 ..= n_s/2`.
    pub fn mode_count(&self) -> usize {
        self.n_s / 2 + 1
    }

    /// Spontaneous-emission probability for a pulse of the given
    /// coupling, `eta = C^2 / d` (zero at infinite optical depth).
    pub fn eta_for(&self, coupling: f64) -> f64 {
        if self.d.is_infinite() {
            0.0
        } else {
            coupling * coupling / self.d
        }
    }
}

/// Real-space covariance matrices of the three spin components.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceState {
    g: [DMatrix<f64>; 3],
}

impl CovarianceState {
    /// Completely mixed state: `G_aa = gamma0 * I` for all components.
    pub fn mixed(config: &EnsembleConfig) -> Self {
        let g0 = config.gamma0();
        let m = DMatrix::identity(config.n_s, config.n_s) * g0;
        CovarianceState {
            g: [m.clone(), m.clone(), m],
        }
    }

    /// Builds a state from explicit component matrices (square, equal
    /// sized, symmetric); mainly useful for tests and tools.
    pub fn from_matrices(g: [DMatrix<f64>; 3]) -> Result<Self> {
        let n = g[0].nrows();
        for m in &g {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::ShapeMismatch(format!(
                    "component matrices must all be {n}x{n}"
                )));
            }
            if *m != m.transpose() {
                return Err(Error::ShapeMismatch(String::from(
                    "component matrices must be symmetric",
                )));
            }
        }
        Ok(CovarianceState { g })
    }

    pub fn n_s(&self) -> usize {
        self.g[0].nrows()
    }

    pub fn component(&self, axis: Axis) -> &DMatrix<f64> {
        &self.g[axis.index()]
    }

    pub(crate) fn component_mut(&mut self, axis: Axis) -> &mut DMatrix<f64> {
        &mut self.g[axis.index()]
    }

    /// Sum of the three component matrices.
    pub fn summed(&self) -> DMatrix<f64> {
        &self.g[0] + &self.g[1] + &self.g[2]
    }

    /// Largest `|G - G^T|` entry across components; exactly zero for any
    /// state produced by the pulse engine.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in &self.g {
            for i in 0..m.nrows() {
                for k in (i + 1)..m.ncols() {
                    let a = (m[(i, k)] - m[(k, i)]).abs();
                    if a > worst {
                        worst = a;
                    }
                }
            }
        }
        worst
    }

    /// Replaces every component with its symmetric part.
    pub fn symmetrize(&mut self) {
        for m in &mut self.g {
            let t = m.transpose();
            *m += t;
            *m *= 0.5;
        }
    }

    /// Smallest eigenvalue over all three components (full eigensolve;
    /// prefer [`CovarianceState::is_psd_within`] in hot paths).
    pub fn min_eigenvalue(&self) -> f64 {
        let mut min = f64::INFINITY;
        for m in &self.g {
            let eig = m.clone().symmetric_eigen();
            for &lambda in eig.eigenvalues.iter() {
                if lambda < min {
                    min = lambda;
                }
            }
        }
        min
    }

    /// Cheap PSD gate: every component must admit a Cholesky
    /// factorization after shifting by `tol`, i.e. have min eigenvalue
    /// above `-tol`.
    pub fn is_psd_within(&self, tol: f64) -> bool {
        let n = self.n_s();
        self.g.iter().all(|m| {
            let shifted = m + DMatrix::<f64>::identity(n, n) * tol;
            shifted.cholesky().is_some()
        })
    }

    /// (min, max) over the diagonal entries of all components.
    pub fn diagonal_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for m in &self.g {
            for i in 0..m.nrows() {
                lo = lo.min(m[(i, i)]);
                hi = hi.max(m[(i, i)]);
            }
        }
        (lo, hi)
    }

    /// Largest elementwise difference to another state.
    pub fn max_abs_diff(&self, other: &CovarianceState) -> Result<f64> {
        if self.n_s() != other.n_s() {
            return Err(Error::ShapeMismatch(format!(
                "states have {} and {} sites",
                self.n_s(),
                other.n_s()
            )));
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.g.iter().zip(other.g.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                let d = (x - y).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        Ok(worst)
    }

    /// Full invariant check for protocol-reachable states: exact
    /// symmetry, positive semidefiniteness within `PSD_TOL_REL * gamma0`,
    /// and diagonal entries inside `[0, gamma0 (1 + PSD_TOL_REL)]`.
    pub fn validate(&self, config: &EnsembleConfig) -> Result<()> {
        if self.n_s() != config.n_s {
            return Err(Error::ShapeMismatch(format!(
                "state has {} sites, config {}",
                self.n_s(),
                config.n_s
            )));
        }
        let asym = self.max_asymmetry();
        if asym != 0.0 {
            return Err(Error::InvariantViolation(format!(
                "covariance asymmetry {asym:e}"
            )));
        }
        let g0 = config.gamma0();
        if !self.is_psd_within(PSD_TOL_REL * g0) {
            return Err(Error::InvariantViolation(format!(
                "covariance not PSD within {:e}",
                PSD_TOL_REL * g0
            )));
        }
        let (lo, hi) = self.diagonal_range();
        if lo < 0.0 || hi > g0 * (1.0 + PSD_TOL_REL) {
            return Err(Error::InvariantViolation(format!(
                "diagonal range [{lo}, {hi}] outside [0, {}]",
                g0 * (1.0 + PSD_TOL_REL)
            )));
        }
        Ok(())
    }
}
