//! One-parameter deformation of a linear toral automorphism.
//!
//! The map is `f_θ(x) = A x + θ ρ(|w|/r0) sin(2π ⟨w, v_c⟩) v_c  (mod 1)`,
//! where `w` is the nearest-shift lift of `x − q` and `v_c` is the unit
//! center eigendirection of the base matrix. The perturbation is a smooth
//! bump supported in the ball of radius `r0` around `q`: outside it the
//! map *is* the base automorphism, at `q` it fixes the point and shifts the
//! center derivative by `2π θ ρ(0) = 2π θ` while leaving the stable and
//! unstable eigendirections untouched (the base is symmetric, so the frame
//! is orthogonal). Admissibility of `θ` is not a formula but a check:
//! construction verifies strict cone invariance around the base frame and
//! rejects parameters that break it.

use super::{DynError, LinearAnosov, TorusPoint};
use crate::linalg::{add3, dot3, mat_inv, mat_vec, min_shift, norm3, scale3, wrap, Mat3, Vec3};

/// Newton tolerance for the inverse map.
const NEWTON_TOL: f64 = 1e-12;
/// Newton iteration cap for the inverse map.
const NEWTON_CAP: usize = 50;
/// Cone aperture used by the construction-time admissibility check.
const BUILD_CONE_APERTURE: f64 = 0.2;
/// Sample count for the construction-time cone scan.
const BUILD_CONE_SAMPLES: usize = 256;

#[derive(Debug, Clone)]
pub struct ManeParams {
    pub matrix: [[i64; 3]; 3],
    pub theta: f64,
    pub r0: f64,
    pub q: TorusPoint,
    /// Seed for the construction-time cone scan (and recorded provenance).
    pub seed: u64,
}

impl Default for ManeParams {
    fn default() -> Self {
        ManeParams {
            matrix: super::DEFAULT_MATRIX,
            theta: 0.0,
            r0: 0.2,
            q: [0.0, 0.0, 0.0],
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManeMap {
    base: LinearAnosov,
    params: ManeParams,
    v_c: Vec3,
}

impl ManeMap {
    pub fn new(params: ManeParams) -> Result<Self, DynError> {
        let base = LinearAnosov::new(params.matrix)?;
        if !(params.r0 > 0.0 && params.r0 <= 0.25) {
            return Err(DynError::BadParameter(format!(
                "r0 = {} outside (0, 0.25]",
                params.r0
            )));
        }
        if !params.theta.is_finite() || params.theta.abs() >= 1.0 {
            return Err(DynError::BadParameter(format!(
                "theta = {} not in (-1, 1)",
                params.theta
            )));
        }
        let q = wrap(params.q);
        let map = ManeMap {
            v_c: base.frame().v_c,
            base,
            params: ManeParams { q, ..params },
        };
        // Admissibility: both cones around the base frame must stay strictly
        // invariant. This is the only gate on θ.
        let frame = map.base.frame();
        let (margin, _) = super::splitting::cone_margin_raw(
            |x| map.jacobian(x),
            &frame,
            BUILD_CONE_APERTURE,
            BUILD_CONE_SAMPLES,
            map.params.seed,
        );
        if margin <= 0.0 {
            return Err(DynError::ConeViolation {
                aperture: BUILD_CONE_APERTURE,
                margin,
            });
        }
        Ok(map)
    }

    pub fn base(&self) -> &LinearAnosov {
        &self.base
    }

    pub fn params(&self) -> &ManeParams {
        &self.params
    }

    pub fn theta(&self) -> f64 {
        self.params.theta
    }

    /// Smooth bump: `exp(1 − 1/(1−t²))` on `|t| < 1`, zero outside.
    fn bump(t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }

    /// Derivative of the bump.
    fn bump_deriv(t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            let u = 1.0 - t * t;
            Self::bump(t) * (-2.0 * t / (u * u))
        }
    }

    /// The scalar perturbation amplitude at `x` (multiplies `v_c`).
    fn perturbation(&self, x: TorusPoint) -> f64 {
        let w = min_shift(self.params.q, x);
        let t = norm3(w) / self.params.r0;
        if t >= 1.0 {
            return 0.0;
        }
        let s_c = dot3(w, self.v_c);
        self.params.theta * Self::bump(t) * (2.0 * std::f64::consts::PI * s_c).sin()
    }

    pub fn forward(&self, x: TorusPoint) -> TorusPoint {
        let lin = mat_vec(&self.base_m(), x);
        wrap(add3(lin, scale3(self.v_c, self.perturbation(x))))
    }

    /// Inverse by Newton on the torus, seeded with the linear inverse.
    pub fn backward(&self, x: TorusPoint) -> TorusPoint {
        let x = wrap(x);
        let mut z = self.base.backward(x);
        let mut resid = f64::INFINITY;
        for _ in 0..NEWTON_CAP {
            let r = min_shift(x, self.forward(z));
            resid = norm3(r);
            if resid <= NEWTON_TOL {
                return z;
            }
            let j_inv = mat_inv(&self.jacobian(z));
            z = wrap(crate::linalg::sub3(z, mat_vec(&j_inv, r)));
        }
        // The perturbation is uniformly small; divergence here means the
        // parameters escaped the admissible regime after construction, which
        // the cone gate is meant to prevent. Surface it loudly.
        panic!(
            "{}",
            DynError::InverseDiverged {
                tol: NEWTON_TOL,
                cap: NEWTON_CAP,
                resid,
            }
        );
    }

    /// Analytic derivative of `forward` at `x`.
    pub fn jacobian(&self, x: TorusPoint) -> Mat3 {
        let mut j = self.base_m();
        let w = min_shift(self.params.q, x);
        let r0 = self.params.r0;
        let nw = norm3(w);
        let t = nw / r0;
        if t >= 1.0 {
            return j;
        }
        let s_c = dot3(w, self.v_c);
        let phase = 2.0 * std::f64::consts::PI * s_c;
        // ∇(ρ(t) sin φ) = sin φ ρ'(t) ∇t + ρ(t) cos φ ∇φ
        let mut grad = scale3(self.v_c, Self::bump(t) * 2.0 * std::f64::consts::PI * phase.cos());
        if nw > 1e-14 {
            let radial = scale3(w, Self::bump_deriv(t) * phase.sin() / (r0 * nw));
            grad = add3(grad, radial);
        }
        for i in 0..3 {
            for k in 0..3 {
                j[i][k] += self.params.theta * self.v_c[i] * grad[k];
            }
        }
        j
    }

    fn base_m(&self) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                out[i][k] = self.params.matrix[i][k] as f64;
            }
        }
        out
    }
}
