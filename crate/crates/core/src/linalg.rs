//! Small fixed-size linear algebra and flat-torus geometry.
//!
//! Everything here is hand-rolled for 2- and 3-dimensional problems: the maps
//! under study are 3×3 integer matrices (plus one 2×2 validation fixture), so
//! a general-purpose matrix library would be dead weight. The eigen solver
//! handles real 3×3 matrices with three distinct real eigenvalues, which is
//! exactly the hyperbolic case this crate cares about.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Maximum acceptable residual `‖A v − λ v‖` for a computed eigenpair.
pub const EIG_RESIDUAL_TOL: f64 = 1e-10;
/// Two eigenvalues closer than this are treated as a repeated root (rejected).
pub const EIG_SEPARATION_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Vector and matrix operations
// ---------------------------------------------------------------------------

pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn normalize3(a: Vec3) -> Vec3 {
    let n = norm3(a);
    scale3(a, 1.0 / n)
}

/// Angle between two directions, ignoring orientation (range `[0, π/2]`).
/// Uses the `atan2(‖a×b‖, |a·b|)` form, which stays accurate for nearly
/// parallel inputs where `acos` of the normalized dot product bottoms out
/// around 1e-8.
pub fn line_angle(a: Vec3, b: Vec3) -> f64 {
    norm3(cross3(a, b)).atan2(dot3(a, b).abs())
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot3(m[0], v), dot3(m[1], v), dot3(m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mat_transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn mat_det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse via the adjugate; callers must ensure the matrix is non-singular.
pub fn mat_inv(m: &Mat3) -> Mat3 {
    let det = mat_det(m);
    let inv_det = 1.0 / det;
    let mut adj = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // cofactor of entry (j, i), expanded by hand
            let (r0, r1) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[i][j] = sign * minor;
        }
    }
    for row in adj.iter_mut() {
        for x in row.iter_mut() {
            *x *= inv_det;
        }
    }
    adj
}

pub fn mat_identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn mat_frobenius(m: &Mat3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Flat-torus geometry, generic over dimension
// ---------------------------------------------------------------------------

/// Reduce each coordinate to `[0, 1)`.
pub fn wrap<const D: usize>(x: [f64; D]) -> [f64; D] {
    let mut out = x;
    for c in out.iter_mut() {
        *c -= c.floor();
        // `(-1e-18f64).floor()` is -1 and the sum rounds to 1.0; fold it back.
        if *c >= 1.0 {
            *c = 0.0;
        }
    }
    out
}

/// Displacement from `a` to `b` using the nearest integer shift per
/// coordinate; each component lies in `[-1/2, 1/2)`.
pub fn min_shift<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for i in 0..D {
        let mut d = b[i] - a[i];
        d -= d.round();
        out[i] = d;
    }
    out
}

/// Distance on the flat torus `R^D / Z^D`.
pub fn torus_dist<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    let d = min_shift(a, b);
    d.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Diameter of the flat D-torus (attained at the all-half-shifts corner).
pub fn torus_diameter(dim: usize) -> f64 {
    0.5 * (dim as f64).sqrt()
}

// ---------------------------------------------------------------------------
// Characteristic polynomial and eigen decomposition
// ---------------------------------------------------------------------------

/// Coefficients of `det(A − λI) = −λ³ + c2 λ² − c1 λ + c0` for an integer
/// matrix, computed exactly: `(c2, c1, c0)` = (trace, minor sum, determinant).
pub fn char_poly_i64(m: &[[i64; 3]; 3]) -> (i64, i64, i64) {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = (m[0][0] * m[1][1] - m[0][1] * m[1][0])
        + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
        + (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    (tr, minors, det)
}

/// Real roots of `λ³ − c2 λ² + c1 λ − c0`, requiring three distinct real
/// roots. Uses the trigonometric form of the depressed cubic, then polishes
/// each root with Newton iterations.
pub fn cubic_roots(c2: f64, c1: f64, c0: f64) -> Option<[f64; 3]> {
    // depressed form t³ + p t + q with λ = t + c2/3
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -2.0 * c2.powi(3) / 27.0 + c2 * c1 / 3.0 - c0;
    if p >= 0.0 {
        return None; // no three distinct real roots
    }
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    if disc <= 0.0 {
        return None;
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let mut roots = [0.0; 3];
    for (k, r) in roots.iter_mut().enumerate() {
        let t = m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
        *r = t + shift;
    }
    // Newton polish against the original cubic for full double precision.
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = ((*r - c2) * *r + c1) * *r - c0;
            let df = (3.0 * *r - 2.0 * c2) * *r + c1;
            if df.abs() < f64::MIN_POSITIVE {
                break;
            }
            *r -= f / df;
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(roots)
}

/// Eigen decomposition of a real 3×3 matrix with three distinct real
/// eigenvalues, sorted ascending. Eigenvectors are unit length with the
/// largest-magnitude component made positive (deterministic orientation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen3 {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

pub fn eigen3(m: &Mat3) -> Option<Eigen3> {
    let c2 = m[0][0] + m[1][1] + m[2][2];
    let c1 = (m[0][0] * m[1][1] - m[0][1] * m[1][0])
        + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
        + (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
    let c0 = mat_det(m);
    let values = cubic_roots(c2, c1, c0)?;
    if values[1] - values[0] < EIG_SEPARATION_TOL || values[2] - values[1] < EIG_SEPARATION_TOL {
        return None;
    }
    let mut vectors = [[0.0; 3]; 3];
    for (k, &lam) in values.iter().enumerate() {
        let b = [
            [m[0][0] - lam, m[0][1], m[0][2]],
            [m[1][0], m[1][1] - lam, m[1][2]],
            [m[2][0], m[2][1], m[2][2] - lam],
        ];
        // The null direction is orthogonal to every row; take the best-
        // conditioned cross product of two rows.
        let candidates = [
            cross3(b[0], b[1]),
            cross3(b[0], b[2]),
            cross3(b[1], b[2]),
        ];
        let v = candidates
            .into_iter()
            .max_by(|a, b| norm3(*a).partial_cmp(&norm3(*b)).unwrap())?;
        if norm3(v) < f64::MIN_POSITIVE {
            return None;
        }
        let mut v = normalize3(v);
        let lead = (0..3).max_by(|&i, &j| v[i].abs().partial_cmp(&v[j].abs()).unwrap())?;
        if v[lead] < 0.0 {
            v = scale3(v, -1.0);
        }
        let resid = norm3(sub3(mat_vec(m, v), scale3(v, lam)));
        if resid > EIG_RESIDUAL_TOL {
            return None;
        }
        vectors[k] = v;
    }
    Some(Eigen3 { values, vectors })
}
