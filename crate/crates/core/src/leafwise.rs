//! Unstable leaves: construction, iteration, volume growth, and coverage.
//!
//! A leaf is a polyline traced through the estimated unstable direction
//! field. Iterating the map on a leaf and measuring how fast its arclength
//! grows gives the leafwise (unstable) entropy; scanning how much of the
//! torus a single long leaf passes near measures how far along the leaf one
//! must travel before it is ε-dense. The last estimator here reports the
//! fraction of points where the volume expansion transverse to the stable
//! direction stays at or below a given bound.

use crate::dynamics::{
    estimate_splitting, unstable_direction, DynError, MapModel, TorusPoint,
};
use crate::linalg::{add3, cross3, dot3, mat_vec, min_shift, norm3, scale3, torus_dist, wrap};
use crate::reduce::{line_fit, FIT_RESIDUAL_TOL};
use crate::sampling::{stream_seed, RdSeq};

/// Power-iteration depth used for every direction-field evaluation here.
/// The direction error decays like (center rate / unstable rate)^depth,
/// which is ~2e-10 for the reference automorphism at this depth.
const LEAF_DEPTH: usize = 30;

/// Midpoint-refinement recursion cap per segment when iterating a leaf.
/// Each level halves the preimage segment, so 20 levels resolve gaps down
/// to ~1e-8 of the starting mesh before giving up.
const REFINE_DEPTH: usize = 20;

/// Polyline approximation of a piece of unstable leaf. Vertices are stored
/// wrapped into the unit cube, ordered along the curve; consecutive gaps
/// are kept well below 1/2 so min-shift displacements are unambiguous.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub points: Vec<TorusPoint>,
}

impl Leaf {
    /// Total arclength: sum of min-shift gaps between consecutive vertices.
    pub fn arclength(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| torus_dist(w[0], w[1]))
            .sum()
    }
}

/// Trace the unstable direction field from `center`, marching `radius`
/// of arclength to each side with step `h_mesh` (midpoint rule; the field
/// is re-estimated at every half step and sign-aligned with the march so
/// the canonical orientation flips of the estimator cannot fold the curve).
pub fn grow_leaf(
    map: &MapModel,
    center: TorusPoint,
    radius: f64,
    h_mesh: f64,
) -> Result<Leaf, DynError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(DynError::BadParameter(format!(
            "leaf radius must be positive and finite, got {radius}"
        )));
    }
    if !(h_mesh > 0.0) || h_mesh > 0.05 {
        return Err(DynError::BadParameter(format!(
            "leaf mesh must lie in (0, 0.05], got {h_mesh}"
        )));
    }
    let center = wrap(center);
    let steps = (radius / h_mesh).ceil() as usize;
    let dir0 = unstable_direction(map, center, LEAF_DEPTH)?;

    let march = |sign: f64| -> Result<Vec<TorusPoint>, DynError> {
        let mut pts = Vec::with_capacity(steps);
        let mut x = center;
        let mut dir = scale3(dir0, sign);
        for _ in 0..steps {
            let mid = wrap(add3(x, scale3(dir, 0.5 * h_mesh)));
            let mut d_mid = unstable_direction(map, mid, LEAF_DEPTH)?;
            if dot3(d_mid, dir) < 0.0 {
                d_mid = scale3(d_mid, -1.0);
            }
            x = wrap(add3(x, scale3(d_mid, h_mesh)));
            pts.push(x);
            dir = d_mid;
        }
        Ok(pts)
    };

    let neg = march(-1.0)?;
    let pos = march(1.0)?;
    let mut points = Vec::with_capacity(neg.len() + pos.len() + 1);
    points.extend(neg.into_iter().rev());
    points.push(center);
    points.extend(pos);
    Ok(Leaf { points })
}

/// A mapped leaf plus a flag recording whether any segment was left
/// coarser than the requested mesh (vertex budget or recursion cap hit).
#[derive(Debug, Clone)]
pub struct IteratedLeaf {
    pub leaf: Leaf,
    pub truncated: bool,
}

/// Map every vertex forward and re-mesh by preimage midpoint insertion:
/// wherever the image of a segment is wider than `h_mesh`, split the
/// segment at the midpoint of its *preimage* and recurse. Image vertices
/// therefore stay exactly on the image of the polyline. `max_points` is a
/// soft cap; once reached, remaining segments are emitted as single chords
/// and the result is flagged truncated.
pub fn iterate_leaf(map: &MapModel, leaf: &Leaf, h_mesh: f64, max_points: usize) -> IteratedLeaf {
    let pts = &leaf.points;
    let mut out: Vec<TorusPoint> = Vec::with_capacity(pts.len());
    let mut truncated = false;
    let Some(&first) = pts.first() else {
        return IteratedLeaf {
            leaf: Leaf { points: out },
            truncated,
        };
    };
    out.push(map.step(first));
    for w in pts.windows(2) {
        let fa = *out.last().unwrap();
        let fb = map.step(w[1]);
        refine_segment(
            map,
            w[0],
            w[1],
            fa,
            fb,
            h_mesh,
            REFINE_DEPTH,
            max_points,
            &mut out,
            &mut truncated,
        );
    }
    IteratedLeaf {
        leaf: Leaf { points: out },
        truncated,
    }
}

#[allow(clippy::too_many_arguments)]
fn refine_segment(
    map: &MapModel,
    a: TorusPoint,
    b: TorusPoint,
    fa: TorusPoint,
    fb: TorusPoint,
    h_mesh: f64,
    depth: usize,
    max_points: usize,
    out: &mut Vec<TorusPoint>,
    truncated: &mut bool,
) {
    let gap = torus_dist(fa, fb);
    if gap > h_mesh && depth > 0 && out.len() < max_points {
        let m = wrap(add3(a, scale3(min_shift(a, b), 0.5)));
        let fm = map.step(m);
        refine_segment(map, a, m, fa, fm, h_mesh, depth - 1, max_points, out, truncated);
        refine_segment(map, m, b, fm, fb, h_mesh, depth - 1, max_points, out, truncated);
    } else {
        if gap > h_mesh {
            *truncated = true;
        }
        out.push(fb);
    }
}

/// Parameters for the leaf-growth entropy estimate.
#[derive(Debug, Clone, Copy)]
pub struct GrowthParams {
    /// One-sided arclength of the seed leaf.
    pub radius: f64,
    /// Target vertex spacing, kept through every iteration.
    pub h_mesh: f64,
    /// First iterate included in the slope fit (earlier rows are still
    /// reported).
    pub n_min: usize,
    /// Last iterate computed.
    pub n_max: usize,
    /// Soft cap on vertices per iterated leaf.
    pub max_points: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            radius: 0.05,
            h_mesh: 0.01,
            n_min: 1,
            n_max: 8,
            max_points: 400_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub n: usize,
    pub log_length: f64,
}

/// Leaf-volume growth estimate: log arclength per iterate and its fitted
/// slope, which is the leafwise entropy of the map at the seed point.
#[derive(Debug, Clone)]
pub struct LeafGrowth {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// Fit residual within tolerance and no iterate was truncated.
    pub converged: bool,
    pub truncated: bool,
    pub rows: Vec<GrowthRow>,
}

/// Estimate the leafwise entropy at `center` by growing a short leaf and
/// fitting the growth of `log arclength` against the iterate count.
pub fn unstable_entropy(
    map: &MapModel,
    center: TorusPoint,
    params: &GrowthParams,
) -> Result<LeafGrowth, DynError> {
    if params.n_max < params.n_min + 1 {
        return Err(DynError::BadParameter(format!(
            "growth fit needs at least two rows, got n_min {} n_max {}",
            params.n_min, params.n_max
        )));
    }
    if params.max_points < 16 {
        return Err(DynError::BadParameter(format!(
            "vertex budget too small: {}",
            params.max_points
        )));
    }
    let mut leaf = grow_leaf(map, center, params.radius, params.h_mesh)?;
    let mut truncated = false;
    let mut rows = Vec::with_capacity(params.n_max + 1);
    rows.push(GrowthRow {
        n: 0,
        log_length: leaf.arclength().ln(),
    });
    for n in 1..=params.n_max {
        let it = iterate_leaf(map, &leaf, params.h_mesh, params.max_points);
        leaf = it.leaf;
        truncated |= it.truncated;
        rows.push(GrowthRow {
            n,
            log_length: leaf.arclength().ln(),
        });
    }
    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.n >= params.n_min)
        .map(|r| r.n as f64)
        .collect();
    let ys: Vec<f64> = rows
        .iter()
        .filter(|r| r.n >= params.n_min)
        .map(|r| r.log_length)
        .collect();
    let fit = line_fit(&xs, &ys).ok_or_else(|| {
        DynError::BadParameter("degenerate growth rows; nothing to fit".to_string())
    })?;
    Ok(LeafGrowth {
        slope: fit.slope,
        intercept: fit.intercept,
        max_residual: fit.max_residual,
        converged: fit.max_residual <= FIT_RESIDUAL_TOL && !truncated,
        truncated,
        rows,
    })
}

/// One row of the coverage scan: fraction of probe points within ε of the
/// sub-leaf of the given one-sided arclength radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverRow {
    pub radius: f64,
    pub covered_fraction: f64,
}

/// Result of scanning how much leaf is needed to come ε-close to
/// everything: the smallest radius that covers every probe (if reached)
/// and the coverage fraction along a doubling radius schedule.
#[derive(Debug, Clone)]
pub struct CoverScan {
    pub covering_radius: Option<f64>,
    pub rows: Vec<CoverRow>,
}

/// Grow one leaf of one-sided arclength `max_radius` through `center` and
/// measure, for a grid of `probes` points, the arclength one must walk from
/// the center before passing within `epsilon` of each probe. Probes are
/// cube-grid cell centers, so the scan is deterministic. The mesh is tied
/// to ε so vertex proximity is a faithful proxy for curve proximity.
pub fn minimality_radius(
    map: &MapModel,
    center: TorusPoint,
    epsilon: f64,
    max_radius: f64,
    probes: usize,
) -> Result<CoverScan, DynError> {
    if !(epsilon > 0.0) || epsilon >= 0.5 {
        return Err(DynError::BadParameter(format!(
            "coverage scale must lie in (0, 0.5), got {epsilon}"
        )));
    }
    if !(max_radius > 2.0 * epsilon) || !max_radius.is_finite() {
        return Err(DynError::BadParameter(format!(
            "max radius must exceed 2ε, got {max_radius}"
        )));
    }
    if probes == 0 {
        return Err(DynError::BadParameter("need at least one probe".to_string()));
    }
    let h_mesh = (epsilon / 4.0).min(0.01);
    let leaf = grow_leaf(map, center, max_radius, h_mesh)?;

    // Arclength offset of every vertex from the center vertex. The center
    // sits between the two marches, at index = number of negative-side
    // vertices.
    let pts = &leaf.points;
    let center_idx = pts.len() / 2;
    let mut offset = vec![0.0f64; pts.len()];
    for i in (0..center_idx).rev() {
        offset[i] = offset[i + 1] + torus_dist(pts[i], pts[i + 1]);
    }
    for i in center_idx + 1..pts.len() {
        offset[i] = offset[i - 1] + torus_dist(pts[i - 1], pts[i]);
    }

    // Probe grid: cell centers of a g^3 cube grid, bucketed by ε-cells.
    let g = (probes as f64).cbrt().ceil().max(1.0) as usize;
    let cells = (1.0 / epsilon).floor().max(1.0) as usize;
    let cell_of = |x: f64| -> i64 { ((x * cells as f64) as i64).rem_euclid(cells as i64) };
    let mut probe_pts: Vec<TorusPoint> = Vec::with_capacity(g * g * g);
    for i in 0..g {
        for j in 0..g {
            for k in 0..g {
                probe_pts.push([
                    (i as f64 + 0.5) / g as f64,
                    (j as f64 + 0.5) / g as f64,
                    (k as f64 + 0.5) / g as f64,
                ]);
            }
        }
    }
    let mut buckets: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (idx, p) in probe_pts.iter().enumerate() {
        buckets
            .entry((cell_of(p[0]), cell_of(p[1]), cell_of(p[2])))
            .or_default()
            .push(idx);
    }

    // Best (smallest) covering offset per probe.
    let mut best = vec![f64::INFINITY; probe_pts.len()];
    let wrap_cell = |c: i64| c.rem_euclid(cells as i64);
    for (v, &off) in pts.iter().zip(offset.iter()) {
        let (cx, cy, cz) = (cell_of(v[0]), cell_of(v[1]), cell_of(v[2]));
        let mut seen = [(0i64, 0i64, 0i64); 27];
        let mut n_seen = 0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let key = (wrap_cell(cx + dx), wrap_cell(cy + dy), wrap_cell(cz + dz));
                    // With fewer than 3 cells per axis the wrapped
                    // neighborhood repeats; skip duplicates.
                    if seen[..n_seen].contains(&key) {
                        continue;
                    }
                    seen[n_seen] = key;
                    n_seen += 1;
                    let Some(ids) = buckets.get(&key) else {
                        continue;
                    };
                    for &id in ids {
                        if off < best[id] && torus_dist(*v, probe_pts[id]) <= epsilon {
                            best[id] = off;
                        }
                    }
                }
            }
        }
    }

    // Coverage fractions along a doubling schedule, then the exact radius.
    let mut rows = Vec::new();
    let mut r = (4.0 * epsilon).max(0.1);
    loop {
        let r_eff = r.min(max_radius);
        let covered = best.iter().filter(|&&b| b <= r_eff).count();
        rows.push(CoverRow {
            radius: r_eff,
            covered_fraction: covered as f64 / best.len() as f64,
        });
        if r >= max_radius {
            break;
        }
        r *= 2.0;
    }
    let covering_radius = if best.iter().all(|b| b.is_finite()) {
        Some(best.iter().cloned().fold(0.0, f64::max))
    } else {
        None
    };
    Ok(CoverScan {
        covering_radius,
        rows,
    })
}

/// Fraction of sampled points where the volume expansion of the map on the
/// center-unstable plane stays at or below `bound`. The expansion factor is
/// the ratio of parallelogram areas spanned by the estimated center and
/// unstable directions before and after one derivative step.
pub fn bounded_expansion_fraction(
    map: &MapModel,
    bound: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, DynError> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(DynError::BadParameter(format!(
            "expansion bound must be positive and finite, got {bound}"
        )));
    }
    if samples == 0 {
        return Err(DynError::BadParameter("need at least one sample".to_string()));
    }
    let mut seq = RdSeq::<3>::new(stream_seed(seed, "expansion-samples"));
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = seq.next_point();
        let frame = estimate_splitting(map, x, LEAF_DEPTH)?;
        let j = map.jacobian(x);
        let image_area = norm3(cross3(mat_vec(&j, frame.e_u), mat_vec(&j, frame.e_c)));
        let base_area = norm3(cross3(frame.e_u, frame.e_c));
        let factor = image_area / base_area;
        // Equality with the bound counts as inside, up to roundoff.
        if factor <= bound * (1.0 + 1e-9) {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_MATRIX;
    use crate::linalg::{mat_mul, mat_transpose};
    use proptest::prelude::*;

    fn a0_map() -> MapModel {
        MapModel::linear(DEFAULT_MATRIX).unwrap()
    }

    #[test]
    fn leaf_of_linear_map_is_a_straight_segment() {
        let map = a0_map();
        let v_u = map.base_frame().unwrap().v_u;
        let center = [0.2, 0.5, 0.8];
        let leaf = grow_leaf(&map, center, 0.1, 0.01).unwrap();
        assert_eq!(leaf.points.len(), 21);
        for &p in &leaf.points {
            let d = min_shift(center, p);
            // Displacements stay within the injectivity radius here, so a
            // straight leaf means every displacement is parallel to v_u.
            assert!(norm3(cross3(d, v_u)) < 1e-9);
        }
        // Each march step advances exactly h_mesh of arclength.
        assert!((leaf.arclength() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn iterating_a_linear_leaf_scales_length_by_the_expansion_rate() {
        let map = a0_map();
        let mu_u = map.base_frame().unwrap().mu_u;
        let leaf = grow_leaf(&map, [0.37, 0.11, 0.64], 0.05, 0.01).unwrap();
        let l0 = leaf.arclength();
        let it = iterate_leaf(&map, &leaf, 0.01, 100_000);
        assert!(!it.truncated);
        let l1 = it.leaf.arclength();
        // A linear map carries the straight leaf to a straight leaf and the
        // inserted midpoints stay on it, so the ratio is exact.
        assert!((l1 / l0 - mu_u).abs() < 1e-9);
        // The refined mesh respects the target spacing.
        let max_gap = it
            .leaf
            .points
            .windows(2)
            .map(|w| torus_dist(w[0], w[1]))
            .fold(0.0, f64::max);
        assert!(max_gap <= 0.01 + 1e-12);
    }

    #[test]
    fn growth_slope_of_linear_map_matches_eigenvalue_rate() {
        let map = a0_map();
        let log_mu_u = map.base_frame().unwrap().mu_u.ln();
        let params = GrowthParams {
            n_max: 6,
            ..GrowthParams::default()
        };
        let growth = unstable_entropy(&map, [0.3, 0.7, 0.1], &params).unwrap();
        assert!(growth.converged);
        assert!(!growth.truncated);
        assert_eq!(growth.rows.len(), 7);
        assert!((growth.slope - log_mu_u).abs() < 1e-6);
        for w in growth.rows.windows(2) {
            assert!(w[1].log_length > w[0].log_length);
        }
    }

    #[test]
    fn growth_slope_of_reversed_map_is_the_inverse_contraction_rate() {
        let map = a0_map().reversed();
        // Under the reversed map the old stable line expands by 1/mu_s.
        let log_rate = -a0_map().base_frame().unwrap().mu_s.ln();
        let params = GrowthParams {
            n_max: 5,
            ..GrowthParams::default()
        };
        let growth = unstable_entropy(&map, [0.52, 0.18, 0.95], &params).unwrap();
        assert!(growth.converged);
        assert!((growth.slope - log_rate).abs() < 1e-6);
    }

    #[test]
    fn growth_slope_of_perturbed_map_stays_near_the_base_rate() {
        use crate::dynamics::ManeParams;
        let map = MapModel::mane(ManeParams {
            theta: 0.02,
            ..ManeParams::default()
        })
        .unwrap();
        let base_rate = a0_map().base_frame().unwrap().mu_u.ln();
        let params = GrowthParams {
            n_max: 5,
            ..GrowthParams::default()
        };
        let growth = unstable_entropy(&map, [0.3, 0.7, 0.1], &params).unwrap();
        assert!(!growth.truncated);
        assert!((growth.slope - base_rate).abs() < 0.05);
    }

    #[test]
    fn growth_reports_truncation_when_the_vertex_budget_is_hit() {
        let map = a0_map();
        let params = GrowthParams {
            n_max: 6,
            max_points: 64,
            ..GrowthParams::default()
        };
        let growth = unstable_entropy(&map, [0.3, 0.7, 0.1], &params).unwrap();
        assert!(growth.truncated);
        assert!(!growth.converged);
    }

    #[test]
    fn coverage_scan_reaches_every_probe_on_the_reference_map() {
        let map = a0_map();
        let scan = minimality_radius(&map, [0.41, 0.13, 0.77], 0.1, 256.0, 1000).unwrap();
        let radius = scan.covering_radius.expect("leaf should be ε-dense");
        assert!(radius > 1.0);
        assert!(radius < 256.0);
        let last = scan.rows.last().unwrap();
        assert_eq!(last.covered_fraction, 1.0);
        for w in scan.rows.windows(2) {
            assert!(w[1].covered_fraction >= w[0].covered_fraction);
        }
    }

    #[test]
    fn coverage_scan_reports_failure_when_the_leaf_is_too_short() {
        let map = a0_map();
        let scan = minimality_radius(&map, [0.41, 0.13, 0.77], 0.05, 0.5, 1000).unwrap();
        assert!(scan.covering_radius.is_none());
        assert!(scan.rows.last().unwrap().covered_fraction < 1.0);
    }

    #[test]
    fn expansion_fraction_splits_the_reference_map_and_a_neutral_center() {
        let map = a0_map();
        let frame = map.base_frame().unwrap();
        // The reference map expands the center-unstable plane by mu_c*mu_u,
        // which exceeds mu_u everywhere, so the fraction at bound mu_u is 0.
        let f0 = bounded_expansion_fraction(&map, frame.mu_u, 60, 11).unwrap();
        assert_eq!(f0, 0.0);
        // With the bound above mu_c*mu_u everything is inside.
        let f1 = bounded_expansion_fraction(&map, frame.mu_c * frame.mu_u + 0.1, 60, 11).unwrap();
        assert_eq!(f1, 1.0);

        // A symmetric model with a genuinely neutral center direction has
        // center-unstable expansion exactly mu_u, so bound mu_u admits all.
        let v = [
            [frame.v_s[0], frame.v_c[0], frame.v_u[0]],
            [frame.v_s[1], frame.v_c[1], frame.v_u[1]],
            [frame.v_s[2], frame.v_c[2], frame.v_u[2]],
        ];
        let d = [
            [frame.mu_s, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, frame.mu_u],
        ];
        let m = mat_mul(&mat_mul(&v, &d), &mat_transpose(&v));
        let neutral = MapModel::synthetic(m).unwrap();
        let f2 = bounded_expansion_fraction(&neutral, frame.mu_u, 60, 11).unwrap();
        assert_eq!(f2, 1.0);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let map = a0_map();
        assert!(grow_leaf(&map, [0.0; 3], -1.0, 0.01).is_err());
        assert!(grow_leaf(&map, [0.0; 3], 0.1, 0.2).is_err());
        assert!(minimality_radius(&map, [0.0; 3], 0.6, 10.0, 100).is_err());
        assert!(minimality_radius(&map, [0.0; 3], 0.1, 0.1, 100).is_err());
        assert!(bounded_expansion_fraction(&map, -2.0, 10, 1).is_err());
        let params = GrowthParams {
            n_min: 3,
            n_max: 3,
            ..GrowthParams::default()
        };
        assert!(unstable_entropy(&map, [0.0; 3], &params).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        // The march advances exactly one mesh step of arclength per vertex,
        // wherever the leaf is grown from and however long it is.
        #[test]
        fn leaf_arclength_matches_the_step_count(
            cx in 0.0..1.0f64,
            cy in 0.0..1.0f64,
            cz in 0.0..1.0f64,
            radius in 0.02..0.2f64,
        ) {
            let map = a0_map();
            let h = 0.01;
            let leaf = grow_leaf(&map, [cx, cy, cz], radius, h).unwrap();
            let steps = (radius / h).ceil();
            prop_assert!((leaf.arclength() - 2.0 * steps * h).abs() < 1e-9);
        }
    }
}
