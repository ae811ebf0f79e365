//! Exact arithmetic for integer torus automorphisms.
//!
//! A hyperbolic automorphism amplifies round-off at the rate of its largest
//! eigenvalue, so after `n` steps an orbit computed in f64 carries an error
//! of order `λ_max^n · 2⁻⁵²`: beyond roughly 25 steps for the maps studied
//! here the computed orbit says nothing about the true one. Gluing several
//! orbit blocks needs trajectories that stay meaningful over 50–100 steps,
//! which is out of reach of any fixed-width float. Because the matrices are
//! integer with |det| = 1 (so their inverses are integer too), orbits of
//! rational points are exactly computable: reduction mod 1 keeps numerators
//! bounded by the (fixed) denominator, so cost per step is constant. This
//! module provides that exact path plus arbitrarily precise eigen-directions
//! via rational Newton on the characteristic polynomial.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A point of the 3-torus with exact rational coordinates in `[0, 1)`.
pub type RatVec3 = [BigRational; 3];

/// Round a rational to `bits` binary digits (nearest).
pub fn round_bits(x: &BigRational, bits: u32) -> BigRational {
    let scale = BigInt::one() << bits;
    let scaled = x * BigRational::from_integer(scale.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded = (scaled + half).floor();
    rounded / BigRational::from_integer(scale)
}

pub fn rat_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn vec_from_f64(x: [f64; 3]) -> RatVec3 {
    [rat_from_f64(x[0]), rat_from_f64(x[1]), rat_from_f64(x[2])]
}

pub fn vec_to_f64(x: &RatVec3) -> [f64; 3] {
    [rat_to_f64(&x[0]), rat_to_f64(&x[1]), rat_to_f64(&x[2])]
}

/// Reduce each coordinate to `[0, 1)` exactly.
pub fn vec_mod1(x: &RatVec3) -> RatVec3 {
    let mut out = x.clone();
    for c in out.iter_mut() {
        let f = c.floor();
        *c -= f;
    }
    out
}

/// Apply an integer matrix and reduce mod 1.
pub fn apply_mod1(m: &[[i64; 3]; 3], x: &RatVec3) -> RatVec3 {
    let mut out = [
        BigRational::zero(),
        BigRational::zero(),
        BigRational::zero(),
    ];
    for i in 0..3 {
        let mut acc = BigRational::zero();
        for j in 0..3 {
            if m[i][j] != 0 {
                acc += &x[j] * BigRational::from_integer(BigInt::from(m[i][j]));
            }
        }
        out[i] = acc;
    }
    vec_mod1(&out)
}

/// Exact orbit: `k` applications of `m` (use the integer inverse for the
/// backward direction).
pub fn orbit_mod1(m: &[[i64; 3]; 3], x: &RatVec3, k: usize) -> Vec<RatVec3> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(x.clone());
    let mut cur = x.clone();
    for _ in 0..k {
        cur = apply_mod1(m, &cur);
        out.push(cur.clone());
    }
    out
}

/// Exact integer inverse of a unimodular matrix (|det| = 1): the adjugate
/// divided by the determinant, which stays integer.
pub fn unimodular_inverse(m: &[[i64; 3]; 3]) -> Option<[[i64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det != 1 && det != -1 {
        return None;
    }
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| -> i64 {
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let mut out = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = det * adj[i][j]; // det = ±1
        }
    }
    Some(out)
}

/// Displacement from `a` to `b` by the nearest integer shift, as f64.
pub fn min_shift_f64(a: &RatVec3, b: &RatVec3) -> [f64; 3] {
    let mut out = [0.0; 3];
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for i in 0..3 {
        let mut d = &b[i] - &a[i];
        // shift into [-1/2, 1/2)
        let shifted = (&d + &half).floor();
        d -= shifted;
        out[i] = rat_to_f64(&d);
    }
    out
}

/// Torus distance between exact points, reported in f64.
pub fn torus_dist_f64(a: &RatVec3, b: &RatVec3) -> f64 {
    let d = min_shift_f64(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Polish an eigenvalue of an integer matrix to `bits` binary digits by
/// rational Newton on the (exact) characteristic cubic, starting from an f64
/// approximation with the usual ~50 correct bits.
pub fn refine_eigenvalue(m: &[[i64; 3]; 3], lambda0: f64, bits: u32) -> BigRational {
    let (c2, c1, c0) = crate::linalg::char_poly_i64(m);
    let c2 = BigRational::from_integer(BigInt::from(c2));
    let c1 = BigRational::from_integer(BigInt::from(c1));
    let c0 = BigRational::from_integer(BigInt::from(c0));
    let mut lam = rat_from_f64(lambda0);
    // Newton doubles correct digits; cap working precision to limit blowup.
    let mut prec = 60u32;
    while prec < bits + 40 {
        prec = (prec * 2).min(bits + 40);
        let f = ((&lam - &c2) * &lam + &c1) * &lam - &c0;
        let df = (BigRational::from_integer(BigInt::from(3)) * &lam
            - BigRational::from_integer(BigInt::from(2)) * &c2)
            * &lam
            + &c1;
        lam = round_bits(&(lam - f / df), prec);
    }
    lam
}

/// Eigen-direction of an integer matrix for an eigenvalue known to high
/// precision: cross product of two rows of `A − λI` in exact arithmetic,
/// scaled so the largest component is 1.
pub fn refine_eigenvector(m: &[[i64; 3]; 3], lambda: &BigRational) -> RatVec3 {
    let b: Vec<Vec<BigRational>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let e = BigRational::from_integer(BigInt::from(m[i][j]));
                    if i == j {
                        e - lambda
                    } else {
                        e
                    }
                })
                .collect()
        })
        .collect();
    let cross = |u: &[BigRational], v: &[BigRational]| -> RatVec3 {
        [
            &u[1] * &v[2] - &u[2] * &v[1],
            &u[2] * &v[0] - &u[0] * &v[2],
            &u[0] * &v[1] - &u[1] * &v[0],
        ]
    };
    let mut best: Option<RatVec3> = None;
    let mut best_norm = BigRational::zero();
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let c = cross(&b[i], &b[j]);
        let n1 = c.iter().map(|x| x.abs()).fold(BigRational::zero(), |a, b| a + b);
        if n1 > best_norm {
            best_norm = n1;
            best = Some(c);
        }
    }
    let mut v = best.expect("nonzero cross product");
    let lead = (0..3)
        .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap())
        .unwrap();
    let scale = v[lead].clone();
    for c in v.iter_mut() {
        *c /= &scale;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    const A0: [[i64; 3]; 3] = [[2, 1, 0], [1, 2, 1], [0, 1, 1]];

    #[test]
    fn unimodular_inverse_roundtrip() {
        let inv = unimodular_inverse(&A0).unwrap();
        // multiply back in exact integers
        let mut prod = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                prod[i][j] = (0..3).map(|k| A0[i][k] * inv[k][j]).sum();
            }
        }
        assert_eq!(prod, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        // non-unimodular is rejected
        assert!(unimodular_inverse(&[[2, 0, 0], [0, 1, 0], [0, 0, 1]]).is_none());
    }

    #[test]
    fn forward_then_backward_is_identity_exactly() {
        let inv = unimodular_inverse(&A0).unwrap();
        let x = vec_from_f64([0.123456789, 0.987654321, 0.5]);
        let mut y = x.clone();
        for _ in 0..40 {
            y = apply_mod1(&A0, &y);
        }
        for _ in 0..40 {
            y = apply_mod1(&inv, &y);
        }
        assert_eq!(x, y);
    }

    #[test]
    fn refined_eigenvalue_solves_cubic_to_requested_bits() {
        let lam = refine_eigenvalue(&A0, 3.246979603717467, 300);
        // plug into λ³ − 5λ² + 6λ − 1 exactly and measure the residual
        let five = BigRational::from_integer(BigInt::from(5));
        let six = BigRational::from_integer(BigInt::from(6));
        let one = BigRational::from_integer(BigInt::from(1));
        let resid = ((&lam - &five) * &lam + &six) * &lam - &one;
        let bound = BigRational::new(BigInt::one(), BigInt::one() << 280);
        assert!(resid.abs() < bound, "residual too large");
        assert!((rat_to_f64(&lam) - 3.246979603717467).abs() < 1e-12);
    }

    #[test]
    fn refined_eigenvector_kills_matrix_action() {
        let lam = refine_eigenvalue(&A0, 0.198062264195162, 200);
        let v = refine_eigenvector(&A0, &lam);
        // A v − λ v should be ~2^-200, far beyond f64: check against 2^-150
        let mut worst = BigRational::zero();
        for i in 0..3 {
            let mut acc = BigRational::zero();
            for j in 0..3 {
                acc += BigRational::from_integer(BigInt::from(A0[i][j])) * &v[j];
            }
            acc -= &lam * &v[i];
            if acc.abs() > worst {
                worst = acc.abs();
            }
        }
        assert!(worst < BigRational::new(BigInt::one(), BigInt::one() << 150));
    }

    #[test]
    fn min_shift_wraps() {
        let a = vec_from_f64([0.95, 0.0, 0.0]);
        let b = vec_from_f64([0.05, 0.0, 0.0]);
        let d = min_shift_f64(&a, &b);
        assert!((d[0] - 0.1).abs() < 1e-15);
        assert!((torus_dist_f64(&a, &b) - 0.1).abs() < 1e-15);
    }
}
