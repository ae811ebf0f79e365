//! Potentials, Birkhoff sums, center-growth segment classes, the entropy
//! gap, oscillation bounds over Bowen balls, and empirical equilibrium
//! measures.
//!
//! The segment machinery revolves around the center potential
//! `φᶜ(x) = log‖Df(x)·e_c(x)‖`: a length-n orbit segment is *prefix-class*
//! when its center Birkhoff sum ends at or above `−r·n`, and *core-class*
//! when every partial sum stays strictly below `−r·j`. Splitting a segment
//! at the last prefix-class stopping time decomposes it into a prefix-class
//! head and a core-class tail.

use crate::dynamics::{estimate_splitting, DynError, MapModel, TorusPoint};
use crate::linalg::{add3, eigen3, mat_vec, norm3, scale3, torus_dist, wrap, Vec3};
use crate::pressure::{build_separated, PressureError, Region};
use crate::rational::{
    orbit_mod1, rat_from_f64, refine_eigenvalue, refine_eigenvector, round_bits, torus_dist_f64,
    vec_mod1, vec_to_f64, RatVec3,
};
use crate::reduce::{log_sum_exp, pairwise_sum};
use crate::sampling::{indexed_rng, stream_rng};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng as _;
use rayon::prelude::*;
use std::f64::consts::TAU;
use thiserror::Error;

/// Default power-iteration depth for center-direction evaluations.
pub const CENTRAL_DEPTH: usize = 30;

/// Fixed generic sample point used when a constant-derivative map lets a
/// field collapse to a single number.
const GENERIC_POINT: TorusPoint = [0.31, 0.07, 0.73];

#[derive(Debug, Error)]
pub enum ThermoError {
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Pressure(#[from] PressureError),
    #[error("the {class} filter left no length-{n} segments; it emptied the candidate pool")]
    EmptyClass { class: &'static str, n: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// One term `amp · cos(2π⟨freq, x⟩ + phase)` of a trigonometric potential.
/// Integer frequencies keep the term well-defined on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub amp: f64,
    pub freq: [i64; 3],
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Zero,
    Constant(f64),
    Trig(Vec<TrigTerm>),
    /// `t · log‖Df(x)·e_c(x)‖` — the center potential scaled by `t`.
    CentralLog { t: f64 },
}

/// A potential together with Hölder data `|φ(x)−φ(y)| ≤ c0·d(x,y)^γ`.
/// For the analytic kinds the constants are exact; for the center potential
/// on maps with varying derivative they must be measured (see
/// [`estimate_holder`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub holder_c0: f64,
    pub holder_gamma: f64,
}

impl Potential {
    pub fn zero() -> Self {
        Potential {
            kind: PotentialKind::Zero,
            holder_c0: 0.0,
            holder_gamma: 1.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Potential {
            kind: PotentialKind::Constant(c),
            holder_c0: 0.0,
            holder_gamma: 1.0,
        }
    }

    /// Lipschitz constant from the gradient bound `Σ |amp|·2π·‖freq‖`.
    pub fn trig(terms: Vec<TrigTerm>) -> Self {
        let c0 = terms
            .iter()
            .map(|t| {
                let k = [t.freq[0] as f64, t.freq[1] as f64, t.freq[2] as f64];
                t.amp.abs() * TAU * norm3(k)
            })
            .sum();
        Potential {
            kind: PotentialKind::Trig(terms),
            holder_c0: c0,
            holder_gamma: 1.0,
        }
    }

    /// Center potential multiple. On constant-derivative maps this is a
    /// constant (c0 = 0 is exact); on deformed maps replace the Hölder data
    /// with [`estimate_holder`] before using oscillation bounds.
    pub fn central_log(t: f64) -> Self {
        Potential {
            kind: PotentialKind::CentralLog { t },
            holder_c0: 0.0,
            holder_gamma: 1.0,
        }
    }
}

enum CentralMode {
    Unused,
    Constant(f64),
    PerPoint { depth: usize },
}

/// A potential bound to a map, ready for pointwise evaluation. Binding
/// resolves the center factor once for constant-derivative maps.
pub struct PotentialField<'a> {
    map: &'a MapModel,
    pot: &'a Potential,
    central: CentralMode,
}

/// `log‖Df(x)·e_c(x)‖` at one point, with the splitting estimated on the
/// spot.
pub fn central_log_at(map: &MapModel, x: TorusPoint, depth: usize) -> Result<f64, DynError> {
    let frame = estimate_splitting(map, x, depth)?;
    Ok(norm3(mat_vec(&map.jacobian(x), frame.e_c)).ln())
}

pub fn bind_potential<'a>(
    map: &'a MapModel,
    pot: &'a Potential,
    depth: usize,
) -> Result<PotentialField<'a>, DynError> {
    let central = match pot.kind {
        PotentialKind::CentralLog { .. } => {
            if map.has_constant_jacobian() {
                CentralMode::Constant(central_log_at(map, GENERIC_POINT, depth)?)
            } else {
                CentralMode::PerPoint { depth }
            }
        }
        _ => CentralMode::Unused,
    };
    Ok(PotentialField { map, pot, central })
}

impl PotentialField<'_> {
    pub fn map(&self) -> &MapModel {
        self.map
    }

    pub fn potential(&self) -> &Potential {
        self.pot
    }

    pub fn try_eval(&self, x: TorusPoint) -> Result<f64, DynError> {
        Ok(match (&self.pot.kind, &self.central) {
            (PotentialKind::Zero, _) => 0.0,
            (PotentialKind::Constant(c), _) => *c,
            (PotentialKind::Trig(terms), _) => terms
                .iter()
                .map(|t| {
                    let k_dot = t.freq[0] as f64 * x[0]
                        + t.freq[1] as f64 * x[1]
                        + t.freq[2] as f64 * x[2];
                    t.amp * (TAU * k_dot + t.phase).cos()
                })
                .sum(),
            (PotentialKind::CentralLog { t }, CentralMode::Constant(v)) => t * v,
            (PotentialKind::CentralLog { t }, CentralMode::PerPoint { depth }) => {
                t * central_log_at(self.map, x, *depth)?
            }
            (PotentialKind::CentralLog { .. }, CentralMode::Unused) => unreachable!(),
        })
    }

    /// Infallible evaluation; panics only if the center-direction estimate
    /// fails, which the construction-time admissibility checks rule out in
    /// the supported operating range.
    pub fn eval(&self, x: TorusPoint) -> f64 {
        self.try_eval(x)
            .unwrap_or_else(|e| panic!("center direction estimate failed at {x:?}: {e}"))
    }
}

/// Measure a Lipschitz constant (`γ = 1`) for a bound field from sampled
/// pairs at mixed scales, inflated by the customary 1.5 safety factor.
pub fn estimate_holder(field: &PotentialField, pairs: usize, seed: u64) -> (f64, f64) {
    let mut rng = stream_rng(seed, "holder-pairs");
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x: TorusPoint = std::array::from_fn(|_| rng.gen::<f64>());
        let dir: Vec3 = std::array::from_fn(|_| rng.gen::<f64>() - 0.5);
        let nd = norm3(dir);
        if nd < 1e-9 {
            continue;
        }
        // log-uniform displacement scale
        let s = 10f64.powf(rng.gen_range(-3.0..-0.5));
        let y = wrap(add3(x, scale3(dir, s / nd)));
        let d = torus_dist(x, y);
        if d < 1e-12 {
            continue;
        }
        worst = worst.max((field.eval(x) - field.eval(y)).abs() / d);
    }
    (1.5 * worst, 1.0)
}

/// Partial Birkhoff sums `S_0 = 0, S_1, …, S_n` of the bound potential
/// along the forward orbit of `x` (length `n + 1`).
pub fn birkhoff_partials(
    field: &PotentialField,
    x: TorusPoint,
    n: usize,
) -> Result<Vec<f64>, DynError> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut y = x;
    for _ in 0..n {
        acc += field.try_eval(y)?;
        out.push(acc);
        y = field.map.step(y);
    }
    Ok(out)
}

/// Partial sums of the center potential (the `t = 1` center log field).
pub fn central_partials(
    map: &MapModel,
    x: TorusPoint,
    n: usize,
    depth: usize,
) -> Result<Vec<f64>, DynError> {
    let pot = Potential::central_log(1.0);
    let field = bind_potential(map, &pot, depth)?;
    birkhoff_partials(&field, x, n)
}

/// Finite-time center Lyapunov exponent: `S_n φᶜ(x) / n`.
pub fn central_exponent(
    map: &MapModel,
    x: TorusPoint,
    n: usize,
    depth: usize,
) -> Result<f64, DynError> {
    if n == 0 {
        return Err(DynError::BadParameter(
            "center exponent needs at least one step".to_string(),
        ));
    }
    let partials = central_partials(map, x, n, depth)?;
    Ok(partials[n] / n as f64)
}

/// Membership of a length-n orbit segment relative to threshold `r`:
/// prefix-class keeps its final center sum at or above `−r·n`, core-class
/// stays strictly below `−r·j` at every stopping time. The empty segment
/// belongs to both by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentClass {
    Prefix,
    Core,
    Both,
    Neither,
}

/// Classify from precomputed partial sums `[S_0, …, S_n]`.
pub fn classify_from_sums(partials: &[f64], r: f64) -> SegmentClass {
    let n = partials.len().saturating_sub(1);
    if n == 0 {
        return SegmentClass::Both;
    }
    let prefix = partials[n] >= -r * n as f64;
    let core = (1..=n).all(|j| partials[j] < -r * j as f64);
    match (prefix, core) {
        (true, true) => SegmentClass::Both,
        (true, false) => SegmentClass::Prefix,
        (false, true) => SegmentClass::Core,
        (false, false) => SegmentClass::Neither,
    }
}

pub fn classify_segment(
    map: &MapModel,
    x: TorusPoint,
    n: usize,
    r: f64,
    depth: usize,
) -> Result<SegmentClass, DynError> {
    Ok(classify_from_sums(&central_partials(map, x, n, depth)?, r))
}

/// Split of a length-n segment into a prefix-class head and a core-class
/// tail. `s_hat` is kept for the record layout and is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionResult {
    pub p_hat: usize,
    pub g_hat: usize,
    pub s_hat: usize,
}

/// Reference split: `p_hat` is the largest stopping time whose center sum
/// is still at or above `−r·p`, found by exhaustive scan. `p = 0` always
/// qualifies, so the scan cannot fail; maximality makes the remaining tail
/// core-class at the same threshold.
pub fn decompose_from_sums(partials: &[f64], r: f64) -> DecompositionResult {
    let n = partials.len().saturating_sub(1);
    let p_hat = (0..=n)
        .rev()
        .find(|&p| partials[p] >= -r * p as f64)
        .unwrap_or(0);
    DecompositionResult {
        p_hat,
        g_hat: n - p_hat,
        s_hat: 0,
    }
}

pub fn decompose(
    map: &MapModel,
    x: TorusPoint,
    n: usize,
    r: f64,
    depth: usize,
) -> Result<DecompositionResult, DynError> {
    Ok(decompose_from_sums(&central_partials(map, x, n, depth)?, r))
}

/// Range `(inf, sup)` of the bound potential. Analytic kinds are exact;
/// sampled kinds scan a `grid³` lattice and pad both ends by the Hölder
/// modulus over half a cell diagonal, so the returned interval brackets the
/// true range whenever the Hölder data is valid.
pub fn potential_range(
    map: &MapModel,
    pot: &Potential,
    grid: usize,
    depth: usize,
) -> Result<(f64, f64), DynError> {
    let field = bind_potential(map, pot, depth)?;
    match (&pot.kind, &field.central) {
        (PotentialKind::Zero, _) => Ok((0.0, 0.0)),
        (PotentialKind::Constant(c), _) => Ok((*c, *c)),
        (PotentialKind::CentralLog { t }, CentralMode::Constant(v)) => {
            let w = t * v;
            Ok((w, w))
        }
        _ => {
            if grid < 2 {
                return Err(DynError::BadParameter(format!(
                    "range scan needs a grid of at least 2, got {grid}"
                )));
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..grid {
                for j in 0..grid {
                    for k in 0..grid {
                        let x = [
                            i as f64 / grid as f64,
                            j as f64 / grid as f64,
                            k as f64 / grid as f64,
                        ];
                        let v = field.try_eval(x)?;
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
            }
            // Any point is within half a cell diagonal of the lattice.
            let pad =
                pot.holder_c0 * (3f64.sqrt() / (2.0 * grid as f64)).powf(pot.holder_gamma);
            Ok((lo - pad, hi + pad))
        }
    }
}

/// Entropy-gap check. The working hypothesis is
/// `h_unstable − h_stable > sup φ − inf φ ≥ 0`; the margin is the left side
/// minus the oscillation, positive iff the hypothesis holds.
#[derive(Debug, Clone, Copy)]
pub struct GapReport {
    pub h_unstable: f64,
    pub h_stable: f64,
    pub oscillation: f64,
    pub margin: f64,
    pub hypothesis_holds: bool,
}

pub fn gap_check(
    map: &MapModel,
    pot: &Potential,
    h_unstable: f64,
    h_stable: f64,
    grid: usize,
    depth: usize,
) -> Result<GapReport, DynError> {
    let (lo, hi) = potential_range(map, pot, grid, depth)?;
    let oscillation = hi - lo;
    let margin = h_unstable - h_stable - oscillation;
    Ok(GapReport {
        h_unstable,
        h_stable,
        oscillation,
        margin,
        hypothesis_holds: margin > 0.0,
    })
}

/// Controls for the oscillation measurement over Bowen balls.
#[derive(Debug, Clone, Copy)]
pub struct OscillationParams {
    /// Bowen-ball radius ε; probes must stay ε-close for the whole segment.
    pub epsilon: f64,
    pub probes: usize,
    /// Center-decay threshold of the core class the segment belongs to.
    pub r: f64,
    /// Leading constant of the contraction model `C·e^{−r·k/2}` for the
    /// head of the segment (a run-configuration knob, default 2).
    pub big_c: f64,
    pub seed: u64,
}

impl Default for OscillationParams {
    fn default() -> Self {
        OscillationParams {
            epsilon: 0.05,
            probes: 64,
            r: 0.2,
            big_c: 2.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OscillationReport {
    /// Largest |S_nφ(x) − S_nφ(y)| over accepted probes y.
    pub max_oscillation: f64,
    /// The a-priori bound `c0·(2δ₀)^γ·Σ_k [C·e^{−γrk/2} + ξ^{γ(n−k)}]`
    /// with δ₀ = 2ε.
    pub bound: f64,
    /// Worst ratio of measured step displacement to the modeled bound
    /// `2·max(C·e^{−rk/2}·δ₀, ξ^{n−k}·δ₀)`; at most 1 when the two-sided
    /// contraction model holds along every probe orbit.
    pub worst_step_ratio: f64,
    pub probes_used: usize,
    pub probes_requested: usize,
    /// Probe orbits were integrated in plain f64 beyond its reliable
    /// horizon for this expansion rate; distances are indicative only.
    pub precision_limited: bool,
}

fn rat_pow(base: &BigRational, k: usize) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..k {
        out *= base;
    }
    out
}

/// Measure the oscillation of Birkhoff sums of `pot` over the Bowen ball
/// `B_n(x, ε)`: probes are sampled in the eigenframe with expanding
/// components shrunk by the expansion rate to the power `n−1`, kept only if
/// the whole length-n orbit pair verifiably stays ε-close. Maps with an
/// integer matrix run on exact rational orbits, so the verification holds
/// at any n; other maps fall back to f64 and flag the precision horizon.
pub fn bowen_oscillation(
    map: &MapModel,
    pot: &Potential,
    x: TorusPoint,
    n: usize,
    params: &OscillationParams,
) -> Result<OscillationReport, ThermoError> {
    if n == 0 {
        return Err(ThermoError::BadParams("segment length must be ≥ 1".into()));
    }
    if !(params.epsilon > 0.0) || params.probes == 0 {
        return Err(ThermoError::BadParams(
            "need positive ε and at least one probe".into(),
        ));
    }
    let field = bind_potential(map, pot, CENTRAL_DEPTH)?;
    let xi = estimate_splitting(map, GENERIC_POINT, CENTRAL_DEPTH)?.xi;

    // The bound is independent of the probes; compute it up front.
    let delta0 = 2.0 * params.epsilon;
    let gamma = pot.holder_gamma;
    let series: f64 = (0..n)
        .map(|k| {
            params.big_c * (-gamma * params.r * k as f64 / 2.0).exp()
                + xi.powf(gamma * (n - k) as f64)
        })
        .sum();
    let bound = pot.holder_c0 * (2.0 * delta0).powf(gamma) * series;

    let step_bound =
        |k: usize| 2.0 * delta0 * (params.big_c * (-params.r * k as f64 / 2.0).exp()).max(xi.powi((n - k) as i32));

    let mut max_osc = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut used = 0usize;
    let mut precision_limited = false;

    if let Some(m) = map.int_matrix() {
        // Exact path. Precision grows with the orbit length so the
        // expanding direction stays resolved: p = 128 + 1.2·n·log2(λ_max).
        let mf: [[f64; 3]; 3] =
            std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] as f64));
        let eig = eigen3(&mf).ok_or_else(|| {
            ThermoError::BadParams("matrix spectrum unsuitable for probe frame".into())
        })?;
        let bits = 128 + (map.lambda_max().log2() * n as f64 * 1.2).ceil() as u32;
        let lams: Vec<BigRational> = eig
            .values
            .iter()
            .map(|&v| refine_eigenvalue(&m, v, bits))
            .collect();
        let vecs: Vec<RatVec3> = lams.iter().map(|l| refine_eigenvector(&m, l)).collect();
        let x_rat: RatVec3 = std::array::from_fn(|i| rat_from_f64(wrap([x[i]; 1])[0]));
        let orbit_x = orbit_mod1(&m, &vec_mod1(&x_rat), n);
        let sum_x: f64 = orbit_x[..n]
            .iter()
            .map(|p| field.try_eval(vec_to_f64(p)))
            .sum::<Result<f64, _>>()?;

        for probe in 0..params.probes {
            let mut rng = indexed_rng(params.seed, "oscillation-probes", probe as u64);
            let mut offset: RatVec3 = std::array::from_fn(|_| BigRational::zero());
            for dir in 0..3 {
                let w_f = vec_to_f64(&vecs[dir]);
                let amp = params.epsilon / 3.0 * (1.0 - 1e-6) / norm3(w_f);
                let c = rat_from_f64(rng.gen_range(-amp..amp));
                let scaled = if eig.values[dir].abs() > 1.0 {
                    c / rat_pow(&lams[dir], n.saturating_sub(1))
                } else {
                    c
                };
                for i in 0..3 {
                    offset[i] += &scaled * &vecs[dir][i];
                }
            }
            let y: RatVec3 =
                std::array::from_fn(|i| &x_rat[i] + round_bits(&offset[i], bits));
            let orbit_y = orbit_mod1(&m, &vec_mod1(&y), n);
            let d: Vec<f64> = (0..=n)
                .map(|k| torus_dist_f64(&orbit_x[k], &orbit_y[k]))
                .collect();
            if d[..n].iter().any(|&g| g > params.epsilon) {
                continue;
            }
            used += 1;
            let sum_y: f64 = orbit_y[..n]
                .iter()
                .map(|p| field.try_eval(vec_to_f64(p)))
                .sum::<Result<f64, _>>()?;
            max_osc = max_osc.max((sum_x - sum_y).abs());
            for (k, &dk) in d.iter().enumerate() {
                worst_ratio = worst_ratio.max(dk / step_bound(k));
            }
        }
    } else {
        // f64 path for maps without an integer matrix. Reliable while
        // λ_max^n stays well under 1/f64-ε; flag it otherwise.
        precision_limited = map.lambda_max().powi(n as i32) > 1e12;
        let frame = map.base_frame().ok_or_else(|| {
            ThermoError::BadParams("map exposes no reference frame for probes".into())
        })?;
        let dirs = [frame.v_s, frame.v_c, frame.v_u];
        let rates = [frame.mu_s, frame.mu_c, frame.mu_u];
        let mut orbit_x = Vec::with_capacity(n + 1);
        let mut cur = wrap(x);
        for _ in 0..=n {
            orbit_x.push(cur);
            cur = map.step(cur);
        }
        let sum_x: f64 = orbit_x[..n]
            .iter()
            .map(|&p| field.try_eval(p))
            .sum::<Result<f64, _>>()?;
        for probe in 0..params.probes {
            let mut rng = indexed_rng(params.seed, "oscillation-probes", probe as u64);
            let mut y = wrap(x);
            for dir in 0..3 {
                let amp = params.epsilon / 3.0 * (1.0 - 1e-6);
                let mut c = rng.gen_range(-amp..amp);
                if rates[dir] > 1.0 {
                    c *= rates[dir].powi(-(n.saturating_sub(1) as i32));
                }
                y = wrap(add3(y, scale3(dirs[dir], c)));
            }
            let mut orbit_y = Vec::with_capacity(n + 1);
            let mut cur = y;
            for _ in 0..=n {
                orbit_y.push(cur);
                cur = map.step(cur);
            }
            let d: Vec<f64> = (0..=n)
                .map(|k| torus_dist(orbit_x[k], orbit_y[k]))
                .collect();
            if d[..n].iter().any(|&g| g > params.epsilon) {
                continue;
            }
            used += 1;
            let sum_y: f64 = orbit_y[..n]
                .iter()
                .map(|&p| field.try_eval(p))
                .sum::<Result<f64, _>>()?;
            max_osc = max_osc.max((sum_x - sum_y).abs());
            for (k, &dk) in d.iter().enumerate() {
                worst_ratio = worst_ratio.max(dk / step_bound(k));
            }
        }
    }

    Ok(OscillationReport {
        max_oscillation: if used == 0 { 0.0 } else { max_osc },
        bound,
        worst_step_ratio: worst_ratio,
        probes_used: used,
        probes_requested: params.probes,
        precision_limited,
    })
}

/// Atomic measure on the torus; weights are positive and sum to 1.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(TorusPoint, f64)>,
}

impl EmpiricalMeasure {
    pub fn total_mass(&self) -> f64 {
        let ws: Vec<f64> = self.atoms.iter().map(|a| a.1).collect();
        pairwise_sum(&ws)
    }

    pub fn integrate(&self, f: impl Fn(TorusPoint) -> f64) -> f64 {
        let vs: Vec<f64> = self.atoms.iter().map(|&(x, w)| w * f(x)).collect();
        pairwise_sum(&vs)
    }

    /// Mass per cell of the `bins³` cube partition.
    pub fn bin_masses(&self, bins: usize) -> Vec<f64> {
        let mut out = vec![0.0; bins * bins * bins];
        for &(x, w) in &self.atoms {
            let idx: [usize; 3] = std::array::from_fn(|i| {
                (((x[i].rem_euclid(1.0)) * bins as f64) as usize).min(bins - 1)
            });
            out[(idx[0] * bins + idx[1]) * bins + idx[2]] += w;
        }
        out
    }

    /// Largest deviation of a cell mass from the uniform cell mass.
    pub fn max_bin_discrepancy(&self, bins: usize) -> f64 {
        let uniform = 1.0 / (bins * bins * bins) as f64;
        self.bin_masses(bins)
            .iter()
            .map(|m| (m - uniform).abs())
            .fold(0.0, f64::max)
    }

    /// Image measure under one forward step.
    pub fn pushforward(&self, map: &MapModel) -> EmpiricalMeasure {
        EmpiricalMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|&(x, w)| (map.step(x), w))
                .collect(),
        }
    }
}

/// Candidate points whose length-n segments are prefix-class at threshold
/// `r`, drawn from the same candidate stream the separated-set builder
/// uses, so restricted and unrestricted runs are comparable.
pub fn prefix_class_candidates(
    map: &MapModel,
    n: usize,
    r: f64,
    budget: usize,
    seed: u64,
    depth: usize,
) -> Result<Vec<TorusPoint>, ThermoError> {
    let mut rng = stream_rng(seed, "separated-candidates");
    let cands: Vec<TorusPoint> = (0..budget)
        .map(|_| std::array::from_fn(|_| rng.gen::<f64>()))
        .collect();
    let kept: Vec<TorusPoint> = cands
        .into_par_iter()
        .map(|x| {
            let partials = central_partials(map, x, n, depth)?;
            Ok::<_, DynError>((x, partials[n] >= -r * n as f64))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter_map(|(x, keep)| keep.then_some(x))
        .collect();
    if kept.is_empty() {
        return Err(ThermoError::EmptyClass {
            class: "prefix-class",
            n,
        });
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy)]
pub struct EquilibriumParams {
    pub n: usize,
    pub delta: f64,
    /// When set, candidates are filtered to prefix-class segments at this
    /// threshold before building the separated set.
    pub restrict_r: Option<f64>,
    pub budget: usize,
    pub seed: u64,
}

/// Empirical equilibrium measure: atoms of an (n,δ)-separated set weighted
/// by `exp(S_nφ)` and normalized, then averaged over the n push-forwards
/// `(1/n)·Σ_k f^k_*`. The returned measure is the orbit-averaged one.
pub fn equilibrium_measure(
    map: &MapModel,
    pot: &Potential,
    params: &EquilibriumParams,
) -> Result<EmpiricalMeasure, ThermoError> {
    if params.n == 0 {
        return Err(ThermoError::BadParams("need n ≥ 1".into()));
    }
    let field = bind_potential(map, pot, CENTRAL_DEPTH)?;
    let region = match params.restrict_r {
        Some(r) => Region::Points(prefix_class_candidates(
            map,
            params.n,
            r,
            params.budget,
            params.seed,
            CENTRAL_DEPTH,
        )?),
        None => Region::FullTorus,
    };
    let support = build_separated(map, &region, params.n, params.delta, params.budget, params.seed);
    if support.is_empty() {
        return Err(ThermoError::Pressure(PressureError::EmptySeparatedSet {
            n: params.n,
        }));
    }
    let log_weights: Vec<f64> = support
        .par_iter()
        .map(|&x| birkhoff_partials(&field, x, params.n).map(|p| p[params.n]))
        .collect::<Result<Vec<_>, _>>()?;
    let log_z = log_sum_exp(&log_weights);
    let mut atoms = Vec::with_capacity(support.len() * params.n);
    let inv_n = 1.0 / params.n as f64;
    for (&x, lw) in support.iter().zip(&log_weights) {
        let w = (lw - log_z).exp();
        let mut y = x;
        for _ in 0..params.n {
            atoms.push((y, w * inv_n));
            y = map.step(y);
        }
    }
    Ok(EmpiricalMeasure { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ManeParams, DEFAULT_MATRIX};
    use crate::pressure::{pressure, PressureParams};
    use proptest::prelude::*;

    const LOG_CENTER_RATE: f64 = 0.441448620566066;

    fn a0() -> MapModel {
        MapModel::linear(DEFAULT_MATRIX).unwrap()
    }

    fn trig_x1(amp: f64) -> Potential {
        Potential::trig(vec![TrigTerm {
            amp,
            freq: [1, 0, 0],
            phase: 0.0,
        }])
    }

    #[test]
    fn center_field_of_linear_map_is_the_middle_rate() {
        let map = a0();
        let pot = Potential::central_log(1.0);
        let field = bind_potential(&map, &pot, CENTRAL_DEPTH).unwrap();
        for x in [[0.1, 0.2, 0.3], [0.9, 0.5, 0.04]] {
            assert!((field.eval(x) - LOG_CENTER_RATE).abs() < 1e-9);
        }
        let rev = a0().reversed();
        let field = bind_potential(&rev, &pot, CENTRAL_DEPTH).unwrap();
        assert!((field.eval([0.4, 0.4, 0.4]) + LOG_CENTER_RATE).abs() < 1e-9);
    }

    #[test]
    fn birkhoff_partials_of_analytic_potentials() {
        let map = a0();
        let zero = Potential::zero();
        let field = bind_potential(&map, &zero, CENTRAL_DEPTH).unwrap();
        let p = birkhoff_partials(&field, [0.3, 0.3, 0.3], 5).unwrap();
        assert_eq!(p, vec![0.0; 6]);

        let central = Potential::central_log(1.0);
        let field = bind_potential(&map, &central, CENTRAL_DEPTH).unwrap();
        let p = birkhoff_partials(&field, [0.3, 0.3, 0.3], 5).unwrap();
        for (j, v) in p.iter().enumerate() {
            assert!((v - j as f64 * LOG_CENTER_RATE).abs() < 1e-8);
        }

        // additivity as computed: S_{n+m}(x) = S_n(x) + S_m(f^n x)
        let trig = trig_x1(0.3);
        let field = bind_potential(&map, &trig, CENTRAL_DEPTH).unwrap();
        let x = [0.17, 0.62, 0.95];
        let full = birkhoff_partials(&field, x, 9).unwrap();
        let head = birkhoff_partials(&field, x, 4).unwrap();
        let mut y = x;
        for _ in 0..4 {
            y = map.step(y);
        }
        let tail = birkhoff_partials(&field, y, 5).unwrap();
        assert!((full[9] - (head[4] + tail[5])).abs() < 1e-12);
    }

    #[test]
    fn center_exponent_matches_the_eigenvalue_everywhere() {
        let map = a0();
        let mut rng = stream_rng(7, "exponent-points");
        for _ in 0..20 {
            let x: TorusPoint = std::array::from_fn(|_| rng.gen::<f64>());
            let v = central_exponent(&map, x, 50, CENTRAL_DEPTH).unwrap();
            assert!((v - LOG_CENTER_RATE).abs() < 1e-6);
        }
        let rev = a0().reversed();
        let v = central_exponent(&rev, [0.3, 0.8, 0.2], 30, CENTRAL_DEPTH).unwrap();
        assert!((v + LOG_CENTER_RATE).abs() < 1e-6);
    }

    #[test]
    fn center_exponent_at_the_deformation_fixed_point_shifts_by_the_kick() {
        let theta = 0.02;
        let map = MapModel::mane(ManeParams {
            theta,
            ..ManeParams::default()
        })
        .unwrap();
        let frame = a0().base_frame().unwrap();
        // The origin is fixed and keeps the eigendirections, so the center
        // rate there is exactly the base rate plus the kick 2πθ.
        let want = (frame.mu_c + TAU * theta).ln();
        let got = central_exponent(&map, [0.0; 3], 10, CENTRAL_DEPTH).unwrap();
        assert!((got - want).abs() < 1e-6, "got {got} want {want}");
    }

    #[test]
    fn classification_solves_the_constant_rate_cases() {
        let map = a0();
        let rev = a0().reversed();
        for n in [1usize, 7, 23] {
            let c = classify_segment(&map, [0.4, 0.1, 0.8], n, 0.2, CENTRAL_DEPTH).unwrap();
            assert_eq!(c, SegmentClass::Prefix);
            let c = classify_segment(&rev, [0.4, 0.1, 0.8], n, 0.2, CENTRAL_DEPTH).unwrap();
            assert_eq!(c, SegmentClass::Core);
        }
        // empty segment sits in both classes
        assert_eq!(
            classify_segment(&map, [0.5; 3], 0, 0.2, CENTRAL_DEPTH).unwrap(),
            SegmentClass::Both
        );
        // mixed sums land in neither class
        assert_eq!(
            classify_from_sums(&[0.0, 0.5, -3.0], 0.2),
            SegmentClass::Neither
        );
    }

    #[test]
    fn decomposition_of_the_constant_rate_cases() {
        let map = a0();
        let rev = a0().reversed();
        let d = decompose(&map, [0.2, 0.9, 0.5], 10, 0.2, CENTRAL_DEPTH).unwrap();
        assert_eq!(
            d,
            DecompositionResult {
                p_hat: 10,
                g_hat: 0,
                s_hat: 0
            }
        );
        let d = decompose(&rev, [0.2, 0.9, 0.5], 10, 0.2, CENTRAL_DEPTH).unwrap();
        assert_eq!(
            d,
            DecompositionResult {
                p_hat: 0,
                g_hat: 10,
                s_hat: 0
            }
        );
        let d = decompose_from_sums(&[0.0], 0.2);
        assert_eq!(d.p_hat + d.g_hat + d.s_hat, 0);
    }

    #[test]
    fn trig_range_brackets_every_sample_and_respects_symmetry() {
        let map = a0();
        let pot = Potential::trig(vec![TrigTerm {
            amp: 0.1,
            freq: [3, 1, 2],
            phase: 0.7,
        }]);
        let (lo, hi) = potential_range(&map, &pot, 64, CENTRAL_DEPTH).unwrap();
        // single-term series: true range is exactly ±amp, the scan brackets
        // it and overshoots by at most the half-cell modulus
        let pad = pot.holder_c0 * (3f64.sqrt() / 128.0);
        assert!(lo <= -0.1 && lo >= -0.1 - pad - 1e-12, "lo {lo}");
        assert!(hi >= 0.1 && hi <= 0.1 + pad + 1e-12, "hi {hi}");
        let field = bind_potential(&map, &pot, CENTRAL_DEPTH).unwrap();
        let mut rng = stream_rng(3, "range-samples");
        for _ in 0..1000 {
            let x: TorusPoint = std::array::from_fn(|_| rng.gen::<f64>());
            let v = field.eval(x);
            assert!(v >= lo && v <= hi);
        }
    }

    #[test]
    fn holder_bound_holds_on_sampled_pairs() {
        let map = a0();
        let pot = Potential::trig(vec![
            TrigTerm {
                amp: 0.1,
                freq: [1, 0, 0],
                phase: 0.0,
            },
            TrigTerm {
                amp: 0.05,
                freq: [0, 2, 1],
                phase: 1.3,
            },
        ]);
        let field = bind_potential(&map, &pot, CENTRAL_DEPTH).unwrap();
        let mut rng = stream_rng(5, "holder-check");
        for _ in 0..10_000 {
            let x: TorusPoint = std::array::from_fn(|_| rng.gen::<f64>());
            let y: TorusPoint = std::array::from_fn(|_| rng.gen::<f64>());
            let d = torus_dist(x, y);
            assert!(
                (field.eval(x) - field.eval(y)).abs()
                    <= pot.holder_c0 * d.powf(pot.holder_gamma) + 1e-12
            );
        }
        // the measured constant is consistent with (and below) the analytic one
        let (c0_est, _) = estimate_holder(&field, 10_000, 5);
        assert!(c0_est <= pot.holder_c0 * 1.5 + 1e-9);
        assert!(c0_est > 0.0);
    }

    #[test]
    fn gap_margins_of_the_reference_pair_are_symmetric_rates() {
        let map = a0();
        let frame = map.base_frame().unwrap();
        let h_u = frame.mu_u.ln();
        let h_s = (1.0 / frame.mu_s).ln();
        let zero = Potential::zero();
        let fwd = gap_check(&map, &zero, h_u, h_s, 8, CENTRAL_DEPTH).unwrap();
        assert!((fwd.margin + LOG_CENTER_RATE).abs() < 1e-9);
        assert!(!fwd.hypothesis_holds);
        // the reversed system swaps the two entropies
        let rev = a0().reversed();
        let bwd = gap_check(&rev, &zero, h_s, h_u, 8, CENTRAL_DEPTH).unwrap();
        assert!((bwd.margin - LOG_CENTER_RATE).abs() < 1e-9);
        assert!(bwd.hypothesis_holds);
        // constant potentials leave the margin untouched
        let c = Potential::constant(3.4);
        let same = gap_check(&rev, &c, h_s, h_u, 8, CENTRAL_DEPTH).unwrap();
        assert!((same.margin - bwd.margin).abs() < 1e-12);
    }

    #[test]
    fn oscillation_vanishes_for_flat_potentials() {
        let rev = a0().reversed();
        for pot in [Potential::zero(), Potential::constant(2.2)] {
            let rep = bowen_oscillation(&rev, &pot, [0.3, 0.44, 0.1], 12, &OscillationParams::default())
                .unwrap();
            assert_eq!(rep.max_oscillation, 0.0);
            assert_eq!(rep.bound, 0.0);
            assert!(rep.probes_used > 0);
        }
    }

    #[test]
    fn oscillation_stays_under_the_bound_on_exact_orbits() {
        let rev = a0().reversed();
        let pot = trig_x1(0.1);
        let params = OscillationParams::default();
        let mut last = f64::INFINITY;
        for n in [20usize, 40] {
            let rep = bowen_oscillation(&rev, &pot, [0.37, 0.56, 0.83], n, &params).unwrap();
            assert!(rep.probes_used > params.probes / 2, "{}", rep.probes_used);
            assert!(rep.max_oscillation > 0.0);
            assert!(rep.max_oscillation <= rep.bound);
            assert!(rep.worst_step_ratio <= 1.0, "{}", rep.worst_step_ratio);
            assert!(!rep.precision_limited);
            // bounded oscillation: no growth as the segment doubles
            assert!(rep.max_oscillation <= last * 1.5 + 1e-9);
            last = rep.max_oscillation;
        }
    }

    #[test]
    fn probes_respect_the_bowen_ball_on_the_expanding_map() {
        // forward map: expanding direction is the strongest rate; failing to
        // shrink its component would evict every probe from the ball
        let map = a0();
        let pot = trig_x1(0.1);
        let rep = bowen_oscillation(&map, &pot, [0.2, 0.5, 0.8], 25, &OscillationParams::default())
            .unwrap();
        assert!(rep.probes_used > 0);
        assert!(rep.max_oscillation <= rep.bound);
    }

    #[test]
    fn equilibrium_weights_are_normalized_and_flat_for_zero_potential() {
        let map = a0();
        let pot = Potential::zero();
        let params = EquilibriumParams {
            n: 5,
            delta: 0.2,
            restrict_r: None,
            budget: 4000,
            seed: 2,
        };
        let mu = equilibrium_measure(&map, &pot, &params).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        let w0 = mu.atoms[0].1;
        assert!(mu.atoms.iter().all(|&(_, w)| w == w0));
        assert_eq!(mu.atoms.len() % params.n, 0);
    }

    #[test]
    fn equilibrium_measure_of_the_reference_map_is_near_uniform() {
        let map = a0();
        let pot = Potential::zero();
        let params = EquilibriumParams {
            n: 6,
            delta: 0.15,
            restrict_r: None,
            budget: 20_000,
            seed: 2,
        };
        let mu = equilibrium_measure(&map, &pot, &params).unwrap();
        let disc = mu.max_bin_discrepancy(4);
        assert!(disc <= 0.08, "discrepancy {disc}");
    }

    #[test]
    fn equilibrium_integral_of_a_bounded_function_stays_in_range() {
        let rev = a0().reversed();
        let pot = trig_x1(0.1);
        let params = EquilibriumParams {
            n: 5,
            delta: 0.2,
            restrict_r: None,
            budget: 3000,
            seed: 4,
        };
        let mu = equilibrium_measure(&rev, &pot, &params).unwrap();
        let field = bind_potential(&rev, &pot, CENTRAL_DEPTH).unwrap();
        let v = mu.integrate(|x| field.eval(x));
        assert!(v >= -0.1 && v <= 0.1);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prefix_restriction_is_neutral_where_everything_qualifies() {
        let map = a0();
        let pot = Potential::zero();
        let free = EquilibriumParams {
            n: 4,
            delta: 0.25,
            restrict_r: None,
            budget: 2000,
            seed: 9,
        };
        let tied = EquilibriumParams {
            restrict_r: Some(0.2),
            ..free
        };
        let a = equilibrium_measure(&map, &pot, &free).unwrap();
        let b = equilibrium_measure(&map, &pot, &tied).unwrap();
        assert_eq!(a.atoms.len(), b.atoms.len());
        for (x, y) in a.atoms.iter().zip(&b.atoms) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn prefix_restriction_errors_when_the_class_is_empty() {
        let rev = a0().reversed();
        let err = prefix_class_candidates(&rev, 6, 0.2, 500, 1, CENTRAL_DEPTH).unwrap_err();
        assert!(matches!(
            err,
            ThermoError::EmptyClass {
                class: "prefix-class",
                n: 6
            }
        ));
        let msg = err.to_string();
        assert!(msg.contains("prefix-class"), "{msg}");

        let pot = Potential::zero();
        let params = EquilibriumParams {
            n: 6,
            delta: 0.2,
            restrict_r: Some(0.2),
            budget: 500,
            seed: 1,
        };
        assert!(matches!(
            equilibrium_measure(&rev, &pot, &params),
            Err(ThermoError::EmptyClass { .. })
        ));
    }

    #[test]
    fn restricted_pressure_collapses_on_the_contracting_side() {
        // On the reversed map nothing is prefix-class at r = 0.2, so the
        // restricted estimate degenerates to the empty-set convention −∞,
        // which sits below the unrestricted estimate minus the threshold.
        let rev = a0().reversed();
        let restricted = prefix_class_candidates(&rev, 4, 0.2, 2000, 3, CENTRAL_DEPTH);
        assert!(restricted.is_err());
        let unrestricted = pressure(
            &rev,
            &Region::FullTorus,
            &|_| 0.0,
            &PressureParams {
                delta: 0.4,
                epsilon: 0.0,
                n_min: 2,
                n_max: 4,
                budget: 2000,
                seed: 3,
            },
        )
        .unwrap();
        let restricted_value = f64::NEG_INFINITY;
        assert!(restricted_value < unrestricted.slope - 0.2);
    }

    #[test]
    fn pushforward_preserves_mass_and_moves_atoms() {
        let map = a0();
        let mu = EmpiricalMeasure {
            atoms: vec![([0.1, 0.2, 0.3], 0.5), ([0.6, 0.7, 0.8], 0.5)],
        };
        let nu = mu.pushforward(&map);
        assert!((nu.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(nu.atoms[0].0, map.step([0.1, 0.2, 0.3]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // the split agrees with an exhaustive scan and its tail is
        // core-class at the same threshold, for arbitrary partial sums
        #[test]
        fn decomposition_matches_brute_force_and_leaves_a_core_tail(
            increments in prop::collection::vec(-2.0..2.0f64, 0..40),
            r in 0.01..1.0f64,
        ) {
            let mut partials = vec![0.0];
            for inc in &increments {
                partials.push(partials.last().unwrap() + inc);
            }
            let n = increments.len();
            let d = decompose_from_sums(&partials, r);
            prop_assert_eq!(d.p_hat + d.g_hat + d.s_hat, n);
            prop_assert_eq!(d.s_hat, 0);
            // brute force: scan every prefix
            let mut best = 0;
            for p in 0..=n {
                if partials[p] >= -r * p as f64 {
                    best = p;
                }
            }
            prop_assert_eq!(d.p_hat, best);
            // head is prefix-class, tail is core-class
            let head = &partials[..=d.p_hat];
            prop_assert!(matches!(
                classify_from_sums(head, r),
                SegmentClass::Prefix | SegmentClass::Both
            ));
            let tail: Vec<f64> = partials[d.p_hat..]
                .iter()
                .map(|s| s - partials[d.p_hat])
                .collect();
            prop_assert!(matches!(
                classify_from_sums(&tail, r),
                SegmentClass::Core | SegmentClass::Both
            ));
        }

        // core-class membership is inherited by every initial piece
        #[test]
        fn core_class_membership_is_monotone_in_length(
            increments in prop::collection::vec(-2.0..2.0f64, 1..30),
            r in 0.01..1.0f64,
        ) {
            let mut partials = vec![0.0];
            for inc in &increments {
                partials.push(partials.last().unwrap() + inc);
            }
            if classify_from_sums(&partials, r) == SegmentClass::Core {
                for j in 1..partials.len() {
                    prop_assert!(matches!(
                        classify_from_sums(&partials[..=j], r),
                        SegmentClass::Core | SegmentClass::Both
                    ));
                }
            }
        }
    }
}
