//! Deterministic reductions and fits.
//!
//! Every floating-point reduction in this crate goes through a pairwise tree
//! whose shape depends only on the input length. That makes results
//! bit-identical regardless of how the *producing* work was scheduled across
//! worker threads: parallelism is confined to pure maps, reduction order is
//! fixed here.

/// Below this length the sum is a plain left fold; the tree above it is a
/// half-split recursion, so the overall shape is a function of `len` alone.
const PAIRWISE_LEAF: usize = 32;

/// Fixed-shape pairwise sum.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `log Σ exp(x_i)` with the usual max shift, pairwise inner sum.
/// Returns `-inf` for an empty slice (the empty sum).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let shifted: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    m + pairwise_sum(&shifted).ln()
}

/// Least-squares residual above which a growth fit is flagged as not
/// converged. Shared by every estimator that reports a slope.
pub const FIT_RESIDUAL_TOL: f64 = 0.15;

/// Ordinary least-squares line through `(x_i, y_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute vertical deviation from the fitted line.
    pub max_residual: f64,
}

/// Fit requires at least two points with distinct abscissae.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let cov: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let var: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let var = pairwise_sum(&var);
    if var <= 0.0 {
        return None;
    }
    let slope = pairwise_sum(&cov) / var;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).abs())
        .fold(0.0, f64::max);
    Some(LineFit {
        slope,
        intercept,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
    }

    #[test]
    fn pairwise_shape_is_length_only() {
        // Same data summed twice must be bitwise equal; chunked producers
        // would feed the same slice, so this is the whole guarantee.
        let xs: Vec<f64> = (0..10_001).map(|i| ((i * 2654435761_u64 as usize) as f64).sin()).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn log_sum_exp_against_direct_small() {
        let xs = [0.0, (2.0f64).ln(), (3.0f64).ln()];
        // direct: log(1 + 2 + 3)
        assert!((log_sum_exp(&xs) - 6.0f64.ln()).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        // huge shifts don't overflow
        let xs = [1000.0, 1000.0];
        assert!((log_sum_exp(&xs) - (1000.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn line_fit_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 * x - 2.0).collect();
        let f = line_fit(&xs, &ys).unwrap();
        assert!((f.slope - 3.5).abs() < 1e-12);
        assert!((f.intercept + 2.0).abs() < 1e-12);
        assert!(f.max_residual < 1e-12);
    }

    #[test]
    fn line_fit_degenerate() {
        assert!(line_fit(&[1.0], &[2.0]).is_none());
        assert!(line_fit(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }
}
