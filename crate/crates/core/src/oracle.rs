//! Brute-force reference for the pulse update.
//!
//! Tracks the full covariance matrix over every atomic mode plus the two
//! measured light quadratures, evolves it by an explicit congruence
//! transform of the small-angle interaction, and conditions on the
//! homodyne outcome through the Moore-Penrose projection
//!
//! ```text
//! G^(M) = G - G P (P G P)^+ G,    P = projector onto the measured quadrature,
//! ```
//!
//! whose projected block is the scalar `g22`, so the pseudoinverse is
//! `1/g22` above a threshold and zero below it. The atomic sector lives
//! in an orthonormal real Fourier basis (cosine/sine mode combinations)
//! to keep the matrix real symmetric; comparisons transform back to real
//! space, which is basis independent.
//!
//! Everything here is dense and O(n^3) per pulse, deliberately so: it is
//! the independent cross-check for the rank-one engine, gated to small
//! lattices.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::ensemble::{Axis, CovarianceState, EnsembleConfig};
use crate::error::Error;
use crate::pulse::{standing_wave_weights, Pulse, GAMMA22_IN};
use crate::Result;

/// Cost guard: the oracle refuses lattices beyond this size.
pub const MAX_ORACLE_SITES: usize = 32;

/// Relative threshold below which the projected light variance is treated
/// as uninformative (scalar Moore-Penrose cutoff).
pub const PINV_THRESHOLD_REL: f64 = 1e-12;

/// Scalar Moore-Penrose pseudoinverse with cutoff.
pub fn scalar_pinv(value: f64, threshold: f64) -> f64 {
    if value.abs() > threshold {
        1.0 / value
    } else {
        0.0
    }
}

/// Orthonormal real Fourier basis of the lattice, one row per mode:
/// the uniform mode, cosine/sine pairs for interior wavevectors, and the
/// alternating zone-edge mode (`n_s` even).
pub fn fourier_mode_basis(n_s: usize) -> DMatrix<f64> {
    let step = 2.0 * core::f64::consts::PI / n_s as f64;
    let norm1 = 1.0 / libm::sqrt(n_s as f64);
    let norm2 = libm::sqrt(2.0 / n_s as f64);
    DMatrix::from_fn(n_s, n_s, |row, i| {
        if row == 0 {
            norm1
        } else if row == n_s - 1 {
            if i.is_multiple_of(2) {
                norm1
            } else {
                -norm1
            }
        } else {
            let m = row.div_ceil(2);
            let angle = step * (m * i) as f64;
            if row % 2 == 1 {
                norm2 * libm::cos(angle)
            } else {
                norm2 * libm::sin(angle)
            }
        }
    })
}

/// Covariance matrix over all atomic modes plus the light quadratures
/// `(s_2, s_3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedCovariance {
    /// `(3 n_s + 2) x (3 n_s + 2)` real symmetric matrix.
    pub matrix: DMatrix<f64>,
    /// Basis labels in row/column order.
    pub mode_labels: Vec<String>,
    n_s: usize,
}

impl ExtendedCovariance {
    /// Embeds a covariance state: atomic blocks rotated into the mode
    /// basis, fresh uncorrelated light.
    pub fn from_state(state: &CovarianceState, config: &EnsembleConfig) -> Result<Self> {
        let n_s = config.n_s;
        if state.n_s() != n_s {
            return Err(Error::ShapeMismatch(format!(
                "state has {} sites, config {}",
                state.n_s(),
                n_s
            )));
        }
        if n_s > MAX_ORACLE_SITES {
            return Err(Error::DimensionGuard {
                n_s,
                max: MAX_ORACLE_SITES,
            });
        }
        let dim = 3 * n_s + 2;
        let q = fourier_mode_basis(n_s);
        let mut matrix = DMatrix::zeros(dim, dim);
        for axis in Axis::ALL {
            let block = &q * state.component(axis) * q.transpose();
            let off = axis.index() * n_s;
            matrix.view_mut((off, off), (n_s, n_s)).copy_from(&block);
        }
        matrix[(3 * n_s, 3 * n_s)] = GAMMA22_IN;
        matrix[(3 * n_s + 1, 3 * n_s + 1)] = GAMMA22_IN;

        let mut mode_labels = Vec::with_capacity(dim);
        for axis in Axis::ALL {
            for row in 0..n_s {
                let desc = if row == 0 {
                    String::from("k0")
                } else if row == n_s - 1 {
                    String::from("kpi")
                } else if row % 2 == 1 {
                    format!("c{}", row.div_ceil(2))
                } else {
                    format!("s{}", row.div_ceil(2))
                };
                mode_labels.push(format!("j{}:{}", axis.name(), desc));
            }
        }
        mode_labels.push(String::from("s2"));
        mode_labels.push(String::from("s3"));
        Ok(ExtendedCovariance {
            matrix,
            mode_labels,
            n_s,
        })
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    fn s2_index(&self) -> usize {
        3 * self.n_s
    }

    /// Atomic block of one component, rotated back to real space.
    pub fn atomic_block_real_space(&self, axis: Axis) -> DMatrix<f64> {
        let n_s = self.n_s;
        let off = axis.index() * n_s;
        let block = self.matrix.view((off, off), (n_s, n_s)).clone_owned();
        let q = fourier_mode_basis(n_s);
        q.transpose() * block * q
    }

    /// Largest entry of any cross-component atomic block; stays zero for
    /// states evolved from a diagonal start.
    pub fn max_cross_component(&self) -> f64 {
        let n_s = self.n_s;
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let block = self.matrix.view((a * n_s, b * n_s), (n_s, n_s));
                for v in block.iter() {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}

/// Applies one pulse through the full formalism: congruence transform of
/// the interaction, projection onto the homodyne record, decoherence, and
/// a reset of the light block for the next pulse.
pub fn oracle_apply_pulse(
    ext: &ExtendedCovariance,
    config: &EnsembleConfig,
    pulse: &Pulse,
) -> Result<ExtendedCovariance> {
    pulse.validate(config)?;
    let n_s = ext.n_s;
    if n_s != config.n_s {
        return Err(Error::ShapeMismatch(format!(
            "oracle has {} sites, config {}",
            n_s, config.n_s
        )));
    }
    if n_s > MAX_ORACLE_SITES {
        return Err(Error::DimensionGuard {
            n_s,
            max: MAX_ORACLE_SITES,
        });
    }
    let dim = 3 * n_s + 2;
    let s2 = ext.s2_index();
    let s3 = s2 + 1;
    let block_off = pulse.component.index() * n_s;

    // Small-angle interaction: s2 picks up g * sum_i c_i J_i of the
    // addressed component (the spin is rotated between measurements), a
    // single extra row in the symplectic map, expressed in the mode basis.
    let g = pulse.coupling / libm::sqrt(n_s as f64 * config.j);
    let c = standing_wave_weights(pulse.p, n_s)?;
    let q = fourier_mode_basis(n_s);
    let qc: DVector<f64> = &q * &c;
    let mut map = DMatrix::identity(dim, dim);
    for k in 0..n_s {
        map[(s2, block_off + k)] = g * qc[k];
    }
    let mut out = &map * &ext.matrix * map.transpose();

    // Homodyne projection: the projected block is the scalar g22, so the
    // pseudoinverse update is a rank-one downdate with the s2 column.
    let g22 = out[(s2, s2)];
    let pinv = scalar_pinv(g22, PINV_THRESHOLD_REL * GAMMA22_IN);
    if pinv != 0.0 {
        let col = out.column(s2).clone_owned();
        out.ger(-pinv, &col, &col, 1.0);
    }

    // Decoherence on the atomic sector (identity is basis independent).
    if pulse.eta > 0.0 {
        let damp = 1.0 - 2.0 * pulse.eta;
        let reset = 2.0 * pulse.eta * config.gamma0();
        let mut atomic = out.view_mut((0, 0), (3 * n_s, 3 * n_s));
        atomic *= damp;
        for k in 0..3 * n_s {
            out[(k, k)] += reset;
        }
    }

    // Fresh light for the next pulse.
    for k in 0..dim {
        out[(k, s2)] = 0.0;
        out[(s2, k)] = 0.0;
        out[(k, s3)] = 0.0;
        out[(s3, k)] = 0.0;
    }
    out[(s2, s2)] = GAMMA22_IN;
    out[(s3, s3)] = GAMMA22_IN;

    // Congruence products accumulate tiny asymmetries; average them away.
    let symmetric = (&out + out.transpose()) * 0.5;
    Ok(ExtendedCovariance {
        matrix: symmetric,
        mode_labels: ext.mode_labels.clone(),
        n_s,
    })
}

/// Largest elementwise discrepancy between a covariance state and the
/// oracle's atomic sector, compared in real space across the three
/// components.
pub fn compare_states(a: &CovarianceState, b: &ExtendedCovariance) -> Result<f64> {
    if a.n_s() != b.n_s {
        return Err(Error::ShapeMismatch(format!(
            "state has {} sites, oracle {}",
            a.n_s(),
            b.n_s
        )));
    }
    let mut worst: f64 = 0.0;
    for axis in Axis::ALL {
        let real = b.atomic_block_real_space(axis);
        let g = a.component(axis);
        for (x, y) in g.iter().zip(real.iter()) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}
