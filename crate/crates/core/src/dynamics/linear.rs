//! Hyperbolic integer-matrix automorphisms of the 3-torus.

use super::{DynError, HyperbolicFrame, TorusPoint};
use crate::linalg::{eigen3, mat_vec, wrap, Eigen3, Mat3};
use crate::rational::unimodular_inverse;

/// An integer matrix acting on the 3-torus with |det| = 1 and spectrum
/// `0 < λ_s < 1 < λ_c < λ_u` (three distinct real eigenvalues, one
/// contracting, two expanding). Constructed through [`LinearAnosov::new`],
/// which validates all of that.
#[derive(Debug, Clone)]
pub struct LinearAnosov {
    pub matrix: [[i64; 3]; 3],
    pub inv_matrix: [[i64; 3]; 3],
    pub(super) m_f64: Mat3,
    inv_f64: Mat3,
    pub eigen: Eigen3,
}

impl LinearAnosov {
    pub fn new(matrix: [[i64; 3]; 3]) -> Result<Self, DynError> {
        let inv_matrix = unimodular_inverse(&matrix).ok_or_else(|| {
            let det = matrix[0][0] * (matrix[1][1] * matrix[2][2] - matrix[1][2] * matrix[2][1])
                - matrix[0][1] * (matrix[1][0] * matrix[2][2] - matrix[1][2] * matrix[2][0])
                + matrix[0][2] * (matrix[1][0] * matrix[2][1] - matrix[1][1] * matrix[2][0]);
            DynError::NotUnimodular(det)
        })?;
        let m_f64 = to_f64(&matrix);
        let eigen = eigen3(&m_f64).ok_or(DynError::BadSpectrum)?;
        let [ls, lc, lu] = eigen.values;
        if !(0.0 < ls && ls < 1.0 && 1.0 < lc && lc < lu) {
            return Err(DynError::SpectrumNotHyperbolic);
        }
        Ok(LinearAnosov {
            matrix,
            inv_matrix,
            m_f64,
            inv_f64: to_f64(&inv_matrix),
            eigen,
        })
    }

    pub fn forward(&self, x: TorusPoint) -> TorusPoint {
        wrap(mat_vec(&self.m_f64, x))
    }

    pub fn backward(&self, x: TorusPoint) -> TorusPoint {
        wrap(mat_vec(&self.inv_f64, x))
    }

    pub fn frame(&self) -> HyperbolicFrame {
        HyperbolicFrame {
            v_s: self.eigen.vectors[0],
            v_c: self.eigen.vectors[1],
            v_u: self.eigen.vectors[2],
            mu_s: self.eigen.values[0],
            mu_c: self.eigen.values[1],
            mu_u: self.eigen.values[2],
        }
    }
}

fn to_f64(m: &[[i64; 3]; 3]) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[i][j] as f64;
        }
    }
    out
}
