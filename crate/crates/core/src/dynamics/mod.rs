//! Torus maps under study and their derivative cocycles.
//!
//! Two families live here: hyperbolic integer-matrix automorphisms of the
//! 3-torus, and a one-parameter deformation that pushes the middle
//! (center) eigendirection toward or through neutrality inside a small ball
//! while staying linear outside it. Both expose forward/backward application,
//! analytic Jacobians, and exact integer matrices where they exist. A float
//! matrix "synthetic" kind exists purely as a diagnostics fixture for
//! negative tests; it performs no hyperbolicity validation.
//!
//! Points are plain `[f64; 3]` with coordinates in `[0, 1)`; every map
//! application reduces mod 1.

mod linear;
mod mane;
mod mapspec;
mod splitting;

pub use linear::LinearAnosov;
pub use mane::{ManeMap, ManeParams};
pub use mapspec::{parse_mapspec, write_mapspec, MapFamily, MapSpec, MapSpecError};
pub use splitting::{
    cone_check, estimate_splitting, unstable_direction, ConeReport, SplittingFrame,
};

use crate::linalg::{mat_det, mat_inv, mat_vec, wrap, Mat3, Vec3};
use thiserror::Error;

pub type TorusPoint = [f64; 3];

/// Reference hyperbolic automorphism used throughout the bundled configs
/// and as the base of the deformed family: symmetric, determinant one,
/// with three distinct real eigenvalues straddling 1.
pub const DEFAULT_MATRIX: [[i64; 3]; 3] = [[2, 1, 0], [1, 2, 1], [0, 1, 1]];

#[derive(Debug, Error)]
pub enum DynError {
    #[error("matrix determinant is {0}, expected ±1")]
    NotUnimodular(i64),
    #[error("spectrum is not of hyperbolic type 0 < λ_s < 1 < λ_c < λ_u")]
    SpectrumNotHyperbolic,
    #[error("matrix is singular or has repeated/complex spectrum")]
    BadSpectrum,
    #[error("cone invariance fails at aperture {aperture}: margin {margin}")]
    ConeViolation { aperture: f64, margin: f64 },
    #[error("Newton inversion did not reach {tol} in {cap} steps (residual {resid})")]
    InverseDiverged { tol: f64, cap: usize, resid: f64 },
    #[error("splitting frame is degenerate (directions collapse)")]
    DegenerateFrame,
    #[error("expansion ordering violated at sample point: {0}")]
    ExpansionOrder(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Expansion data of the linear part, ordered by growth under *this* map's
/// forward direction: `mu_s < mu_c < mu_u` are absolute eigenvalues and the
/// `v_*` the matching unit eigendirections.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolicFrame {
    pub v_s: Vec3,
    pub v_c: Vec3,
    pub v_u: Vec3,
    pub mu_s: f64,
    pub mu_c: f64,
    pub mu_u: f64,
}

impl HyperbolicFrame {
    fn reversed(&self) -> Self {
        // Inverting the map swaps the roles of the extreme directions and
        // inverts all rates.
        HyperbolicFrame {
            v_s: self.v_u,
            v_c: self.v_c,
            v_u: self.v_s,
            mu_s: 1.0 / self.mu_u,
            mu_c: 1.0 / self.mu_c,
            mu_u: 1.0 / self.mu_s,
        }
    }
}

#[derive(Debug, Clone)]
enum MapKind {
    Linear(LinearAnosov),
    Mane(ManeMap),
    /// Diagnostics-only fixture: a float matrix applied mod 1 with no
    /// validation. Not a genuine torus automorphism unless integer.
    Synthetic { m: Mat3, m_inv: Mat3 },
}

/// A dynamical system on the 3-torus, possibly time-reversed.
#[derive(Debug, Clone)]
pub struct MapModel {
    kind: MapKind,
    reversed: bool,
}

impl MapModel {
    pub fn linear(matrix: [[i64; 3]; 3]) -> Result<Self, DynError> {
        Ok(MapModel {
            kind: MapKind::Linear(LinearAnosov::new(matrix)?),
            reversed: false,
        })
    }

    pub fn mane(params: ManeParams) -> Result<Self, DynError> {
        Ok(MapModel {
            kind: MapKind::Mane(ManeMap::new(params)?),
            reversed: false,
        })
    }

    /// Diagnostics fixture from a float matrix (see module docs).
    pub fn synthetic(m: Mat3) -> Result<Self, DynError> {
        if mat_det(&m).abs() < 1e-12 {
            return Err(DynError::BadSpectrum);
        }
        Ok(MapModel {
            kind: MapKind::Synthetic {
                m,
                m_inv: mat_inv(&m),
            },
            reversed: false,
        })
    }

    /// The same system run backwards in time.
    pub fn reversed(&self) -> Self {
        MapModel {
            kind: self.kind.clone(),
            reversed: !self.reversed,
        }
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, MapKind::Linear(_))
    }

    /// True when the derivative is the same matrix everywhere, so any
    /// derivative-based quantity is a single number rather than a field.
    pub fn has_constant_jacobian(&self) -> bool {
        !matches!(self.kind, MapKind::Mane(_))
    }

    /// One forward step.
    pub fn step(&self, x: TorusPoint) -> TorusPoint {
        if self.reversed {
            self.kind_backward(x)
        } else {
            self.kind_forward(x)
        }
    }

    /// One backward step.
    pub fn step_back(&self, x: TorusPoint) -> TorusPoint {
        if self.reversed {
            self.kind_forward(x)
        } else {
            self.kind_backward(x)
        }
    }

    /// Derivative of `step` at `x`.
    pub fn jacobian(&self, x: TorusPoint) -> Mat3 {
        if self.reversed {
            // D(f⁻¹)(x) = [Df(f⁻¹ x)]⁻¹
            let pre = self.kind_backward(x);
            mat_inv(&self.kind_jacobian(pre))
        } else {
            self.kind_jacobian(x)
        }
    }

    /// Derivative of `step_back` at `x`.
    pub fn jacobian_back(&self, x: TorusPoint) -> Mat3 {
        if self.reversed {
            self.kind_jacobian(x)
        } else {
            let pre = self.kind_backward(x);
            mat_inv(&self.kind_jacobian(pre))
        }
    }

    /// Integer matrix realizing `step`, when the map is linear.
    pub fn int_matrix(&self) -> Option<[[i64; 3]; 3]> {
        match &self.kind {
            MapKind::Linear(l) => Some(if self.reversed {
                l.inv_matrix
            } else {
                l.matrix
            }),
            _ => None,
        }
    }

    /// Eigen-data of the linear part, oriented for this map's forward
    /// direction. For the deformed family this is the frame of the base
    /// matrix (the deformation preserves cones around it). `None` for
    /// synthetic fixtures without hyperbolic spectrum.
    pub fn base_frame(&self) -> Option<HyperbolicFrame> {
        let f = match &self.kind {
            MapKind::Linear(l) => l.frame(),
            MapKind::Mane(m) => m.base().frame(),
            MapKind::Synthetic { m, .. } => {
                let e = crate::linalg::eigen3(m)?;
                HyperbolicFrame {
                    v_s: e.vectors[0],
                    v_c: e.vectors[1],
                    v_u: e.vectors[2],
                    mu_s: e.values[0].abs(),
                    mu_c: e.values[1].abs(),
                    mu_u: e.values[2].abs(),
                }
            }
        };
        Some(if self.reversed { f.reversed() } else { f })
    }

    /// Largest expansion rate of the linear part under this map's forward
    /// direction; governs f64 precision horizons.
    pub fn lambda_max(&self) -> f64 {
        self.base_frame().map(|f| f.mu_u).unwrap_or(1.0)
    }

    /// Uniform bound for the distance between this map and its linear part
    /// (zero for linear maps).
    pub fn linear_part_distance(&self) -> f64 {
        match &self.kind {
            MapKind::Mane(m) => m.theta().abs(),
            _ => 0.0,
        }
    }

    pub fn mane_params(&self) -> Option<&ManeParams> {
        match &self.kind {
            MapKind::Mane(m) => Some(m.params()),
            _ => None,
        }
    }

    fn kind_forward(&self, x: TorusPoint) -> TorusPoint {
        match &self.kind {
            MapKind::Linear(l) => l.forward(x),
            MapKind::Mane(m) => m.forward(x),
            MapKind::Synthetic { m, .. } => wrap(mat_vec(m, x)),
        }
    }

    fn kind_backward(&self, x: TorusPoint) -> TorusPoint {
        match &self.kind {
            MapKind::Linear(l) => l.backward(x),
            MapKind::Mane(m) => m.backward(x),
            MapKind::Synthetic { m_inv, .. } => wrap(mat_vec(m_inv, x)),
        }
    }

    fn kind_jacobian(&self, x: TorusPoint) -> Mat3 {
        match &self.kind {
            MapKind::Linear(l) => l.m_f64,
            MapKind::Mane(m) => m.jacobian(x),
            MapKind::Synthetic { m, .. } => *m,
        }
    }
}

/// `k`-fold application of the map; negative `k` runs backwards.
pub fn apply(map: &MapModel, x: TorusPoint, k: i64) -> TorusPoint {
    let mut y = wrap(x);
    if k >= 0 {
        for _ in 0..k {
            y = map.step(y);
        }
    } else {
        for _ in 0..(-k) {
            y = map.step_back(y);
        }
    }
    y
}

/// Derivative of the `n`-fold map at `x` (chain-rule product of step
/// Jacobians along the orbit); negative `n` composes backward derivatives.
pub fn cocycle(map: &MapModel, x: TorusPoint, n: i64) -> Mat3 {
    let mut j = crate::linalg::mat_identity();
    let mut y = wrap(x);
    if n >= 0 {
        for _ in 0..n {
            j = crate::linalg::mat_mul(&map.jacobian(y), &j);
            y = map.step(y);
        }
    } else {
        for _ in 0..(-n) {
            j = crate::linalg::mat_mul(&map.jacobian_back(y), &j);
            y = map.step_back(y);
        }
    }
    j
}

// ---------------------------------------------------------------------------
// Dimension-generic view used by the pressure estimators
// ---------------------------------------------------------------------------

/// Minimal interface the separated-set machinery needs: forward/backward
/// application on a flat D-torus.
pub trait TorusMap<const D: usize>: Sync {
    fn forward(&self, x: [f64; D]) -> [f64; D];
    fn backward(&self, x: [f64; D]) -> [f64; D];
}

impl TorusMap<3> for MapModel {
    fn forward(&self, x: [f64; 3]) -> [f64; 3] {
        self.step(x)
    }
    fn backward(&self, x: [f64; 3]) -> [f64; 3] {
        self.step_back(x)
    }
}

/// Hyperbolic automorphism of the 2-torus; exists to validate the pressure
/// estimator against a classical closed-form entropy value.
#[derive(Debug, Clone)]
pub struct CatMap {
    m: [[f64; 2]; 2],
    m_inv: [[f64; 2]; 2],
}

impl CatMap {
    pub fn new(matrix: [[i64; 2]; 2]) -> Result<Self, DynError> {
        let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
        if det != 1 && det != -1 {
            return Err(DynError::NotUnimodular(det));
        }
        let tr = (matrix[0][0] + matrix[1][1]) as f64;
        if (tr * tr - 4.0 * det as f64) <= 0.0 {
            return Err(DynError::BadSpectrum);
        }
        let m = [
            [matrix[0][0] as f64, matrix[0][1] as f64],
            [matrix[1][0] as f64, matrix[1][1] as f64],
        ];
        let d = det as f64;
        let m_inv = [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]];
        Ok(CatMap { m, m_inv })
    }

    /// log of the largest absolute eigenvalue (the entropy of the map).
    pub fn log_expansion(&self) -> f64 {
        let tr = self.m[0][0] + self.m[1][1];
        let det = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
        let disc = (tr * tr - 4.0 * det).sqrt();
        (0.5 * (tr.abs() + disc)).ln()
    }
}

impl TorusMap<2> for CatMap {
    fn forward(&self, x: [f64; 2]) -> [f64; 2] {
        wrap([
            self.m[0][0] * x[0] + self.m[0][1] * x[1],
            self.m[1][0] * x[0] + self.m[1][1] * x[1],
        ])
    }
    fn backward(&self, x: [f64; 2]) -> [f64; 2] {
        wrap([
            self.m_inv[0][0] * x[0] + self.m_inv[0][1] * x[1],
            self.m_inv[1][0] * x[0] + self.m_inv[1][1] * x[1],
        ])
    }
}
