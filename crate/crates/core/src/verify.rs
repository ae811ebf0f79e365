//! Self-check suite: every closed-form value the linear reference family
//! admits, compared against what the estimators actually compute, plus a
//! determinism exercise whose CSV output is meant to be byte-compared
//! across runs and worker counts.
//!
//! The expected values are frozen fixtures, not recomputed — a regression
//! in the numerics cannot silently move both sides of a comparison.

use crate::dynamics::{
    estimate_splitting, unstable_direction, CatMap, MapModel, DEFAULT_MATRIX,
};
use crate::leafwise::{bounded_expansion_fraction, unstable_entropy, GrowthParams};
use crate::linalg::{dot3, eigen3, torus_diameter, Mat3};
use crate::pressure::{nonexpansive_fraction, pressure, PressureParams, Region};
use crate::rational::{rat_to_f64, refine_eigenvalue, refine_eigenvector};
use crate::report::{num, Table};
use crate::sampling::indexed_rng;
use crate::thermo::{
    bind_potential, birkhoff_partials, bowen_oscillation, central_exponent, classify_from_sums,
    decompose_from_sums, gap_check, potential_range, Potential, SegmentClass, TrigTerm,
    OscillationParams,
};
use crate::gluing::{specification_harness, SpecParams};
use num_traits::Signed;
use rand::Rng as _;
use rayon::prelude::*;

// Frozen spectral fixtures of the default matrix and the planar control
// map. Everything below is a consequence of these five numbers.
const LAMBDA_S: f64 = 0.198062264195162;
const LAMBDA_C: f64 = 1.554958132087372;
const LAMBDA_U: f64 = 3.246979603717467;
const LOG_LAMBDA_C: f64 = 0.441448620566066;
const LOG_LAMBDA_U: f64 = 1.177725211523359;
const H_TOP: f64 = 1.619173832089426;
const PLANAR_ENTROPY: f64 = 0.9624236501192069;

const DEPTH: usize = 30;
const PROBE_POINT: [f64; 3] = [0.31, 0.07, 0.73];

/// One named assertion with a frozen expected value.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub expected: f64,
    pub actual: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        (self.actual - self.expected).abs() <= self.tol
    }
}

/// Everything the `verify` subcommand produces: the assertion list and the
/// CSV tables to write (file name, content).
#[derive(Debug)]
pub struct VerifyOutput {
    pub checks: Vec<Check>,
    pub tables: Vec<(&'static str, String)>,
}

impl VerifyOutput {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }
}

/// Convert an estimator error into a NaN actual, which fails any check and
/// surfaces in the report instead of aborting the suite.
fn value(r: Result<f64, String>) -> f64 {
    r.unwrap_or(f64::NAN)
}

/// Run the whole suite. `tamper` perturbs the first spectral fixture by
/// 1e−6 — a negative control proving the suite can fail and name the
/// offending fixture.
pub fn run_verify(seed: u64, tamper: bool) -> VerifyOutput {
    let mut checks = Vec::new();
    let mut tables = Vec::new();

    let forward = MapModel::linear(DEFAULT_MATRIX).expect("reference matrix is hyperbolic");
    let inverse = forward.reversed();

    // -- spectrum ---------------------------------------------------------
    let m_f64: Mat3 = DEFAULT_MATRIX.map(|row| row.map(|v| v as f64));
    let eig = eigen3(&m_f64);
    let (vals, vecs) = match &eig {
        Some(e) => (e.values, e.vectors),
        None => ([f64::NAN; 3], [[f64::NAN; 3]; 3]),
    };
    let lambda_s_expected = if tamper { LAMBDA_S + 1e-6 } else { LAMBDA_S };
    checks.push(Check {
        name: "eigenvalue_stable",
        expected: lambda_s_expected,
        actual: vals[0],
        tol: 1e-12,
    });
    checks.push(Check {
        name: "eigenvalue_center",
        expected: LAMBDA_C,
        actual: vals[1],
        tol: 1e-12,
    });
    checks.push(Check {
        name: "eigenvalue_unstable",
        expected: LAMBDA_U,
        actual: vals[2],
        tol: 1e-12,
    });
    checks.push(Check {
        name: "eigenvalue_product",
        expected: 1.0,
        actual: vals[0] * vals[1] * vals[2],
        tol: 1e-12,
    });
    checks.push(Check {
        name: "topological_entropy",
        expected: H_TOP,
        actual: vals[1].ln() + vals[2].ln(),
        tol: 1e-12,
    });
    checks.push(Check {
        name: "planar_fixture_entropy",
        expected: PLANAR_ENTROPY,
        actual: value(
            CatMap::new([[2, 1], [1, 1]])
                .map(|m| m.log_expansion())
                .map_err(|e| e.to_string()),
        ),
        tol: 1e-12,
    });
    // the reference matrix is symmetric, so its eigenframe is orthogonal
    let max_dot = dot3(vecs[0], vecs[1])
        .abs()
        .max(dot3(vecs[1], vecs[2]).abs())
        .max(dot3(vecs[0], vecs[2]).abs());
    checks.push(Check {
        name: "frame_orthogonality",
        expected: 0.0,
        actual: max_dot,
        tol: 1e-10,
    });

    // -- high-precision eigenpair refinement ------------------------------
    let lam = refine_eigenvalue(&DEFAULT_MATRIX, LAMBDA_U, 192);
    let v = refine_eigenvector(&DEFAULT_MATRIX, &lam);
    let mut worst = 0.0f64;
    for i in 0..3 {
        let mut acc = -&lam * &v[i];
        for (j, vj) in v.iter().enumerate() {
            acc += num_rational::BigRational::from_integer(DEFAULT_MATRIX[i][j].into()) * vj;
        }
        worst = worst.max(rat_to_f64(&acc.abs()));
    }
    checks.push(Check {
        name: "refined_eigenpair_residual",
        expected: 0.0,
        actual: worst,
        tol: 1e-40,
    });

    // -- center exponent and invariant directions -------------------------
    checks.push(Check {
        name: "central_exponent_50",
        expected: LOG_LAMBDA_C,
        actual: value(central_exponent(&forward, PROBE_POINT, 50, DEPTH).map_err(|e| e.to_string())),
        tol: 1e-9,
    });
    let frame = forward.base_frame().expect("linear map has a frame");
    checks.push(Check {
        name: "unstable_direction_alignment",
        expected: 0.0,
        actual: value(
            unstable_direction(&forward, PROBE_POINT, DEPTH)
                .map(|u| 1.0 - dot3(u, frame.v_u).abs())
                .map_err(|e| e.to_string()),
        ),
        tol: 1e-9,
    });
    checks.push(Check {
        name: "splitting_contraction_factor",
        expected: 0.0,
        actual: value(
            estimate_splitting(&forward, PROBE_POINT, DEPTH)
                .map(|f| {
                    // ξ should approach max(λ_s, 1/λ_u) for the linear map
                    (f.xi - LAMBDA_S.max(1.0 / LAMBDA_U)).abs()
                })
                .map_err(|e| e.to_string()),
        ),
        tol: 1e-6,
    });

    // -- Birkhoff sums -----------------------------------------------------
    let trig = Potential::trig(vec![TrigTerm {
        amp: 0.1,
        freq: [1, 2, 0],
        phase: 0.4,
    }]);
    checks.push(Check {
        name: "birkhoff_additivity",
        expected: 0.0,
        actual: value(
            (|| {
                let field = bind_potential(&forward, &trig, DEPTH).map_err(|e| e.to_string())?;
                let mut mid = PROBE_POINT;
                for _ in 0..5 {
                    mid = forward.step(mid);
                }
                let whole = birkhoff_partials(&field, PROBE_POINT, 12).map_err(|e| e.to_string())?;
                let head = birkhoff_partials(&field, PROBE_POINT, 5).map_err(|e| e.to_string())?;
                let tail = birkhoff_partials(&field, mid, 7).map_err(|e| e.to_string())?;
                Ok((whole[12] - head[5] - tail[7]).abs())
            })(),
        ),
        tol: 1e-9,
    });

    // -- segment decomposition ---------------------------------------------
    // the returned split must satisfy its defining inequality and be
    // maximal; violations are counted over seeded random sum sequences
    let mut violations = 0usize;
    let mut class_mismatches = 0usize;
    let mut rng = indexed_rng(seed, "verify-decompose", 0);
    for _ in 0..200 {
        let n = rng.gen_range(0..=30usize);
        let r = rng.gen_range(0.05..0.5);
        let mut partials = vec![0.0f64];
        let mut acc = 0.0;
        for _ in 0..n {
            acc += rng.gen_range(-1.0..1.0);
            partials.push(acc);
        }
        let d = decompose_from_sums(&partials, r);
        if d.p_hat + d.g_hat != n || d.s_hat != 0 {
            violations += 1;
            continue;
        }
        if partials[d.p_hat] < -r * d.p_hat as f64 {
            violations += 1;
        }
        if (d.p_hat + 1..=n).any(|p| partials[p] >= -r * p as f64) {
            violations += 1;
        }
        // classification must agree with the split: a segment whose split
        // is all-head is prefix-class, all-tail (with n ≥ 1) core-class
        let class = classify_from_sums(&partials, r);
        let prefix_ok = partials[n] >= -r * n as f64;
        let expect_prefix = matches!(class, SegmentClass::Prefix | SegmentClass::Both);
        if prefix_ok != expect_prefix {
            class_mismatches += 1;
        }
    }
    checks.push(Check {
        name: "decomposition_invariants",
        expected: 0.0,
        actual: violations as f64,
        tol: 0.0,
    });
    checks.push(Check {
        name: "classification_consistency",
        expected: 0.0,
        actual: class_mismatches as f64,
        tol: 0.0,
    });
    // constant-rate segments with analytically known classes: the forward
    // map's center sums grow at +log λ_c (prefix for any r > 0), the
    // inverse map's fall at −log λ_c (core once r < log λ_c)
    let mut const_rate_misses = 0usize;
    for n in 1..=40usize {
        let fwd = crate::thermo::central_partials(&forward, PROBE_POINT, n, DEPTH);
        let inv = crate::thermo::central_partials(&inverse, PROBE_POINT, n, DEPTH);
        match (fwd, inv) {
            (Ok(f), Ok(i)) => {
                if classify_from_sums(&f, 0.2) != SegmentClass::Prefix {
                    const_rate_misses += 1;
                }
                if classify_from_sums(&i, 0.2) != SegmentClass::Core {
                    const_rate_misses += 1;
                }
            }
            _ => const_rate_misses += 1,
        }
    }
    checks.push(Check {
        name: "constant_rate_classes",
        expected: 0.0,
        actual: const_rate_misses as f64,
        tol: 0.0,
    });

    // -- entropy gap with analytic inputs ----------------------------------
    checks.push(Check {
        name: "gap_margin_forward",
        expected: -LOG_LAMBDA_C,
        actual: value(
            gap_check(&forward, &Potential::zero(), LOG_LAMBDA_U, H_TOP, 8, DEPTH)
                .map(|g| g.margin)
                .map_err(|e| e.to_string()),
        ),
        tol: 1e-12,
    });
    checks.push(Check {
        name: "gap_margin_inverse",
        expected: LOG_LAMBDA_C,
        actual: value(
            gap_check(&inverse, &Potential::zero(), H_TOP, LOG_LAMBDA_U, 8, DEPTH)
                .map(|g| g.margin)
                .map_err(|e| e.to_string()),
        ),
        tol: 1e-12,
    });

    // -- potential ranges ---------------------------------------------------
    checks.push(Check {
        name: "constant_potential_range",
        expected: 0.0,
        actual: value(
            potential_range(&forward, &Potential::constant(0.3), 8, DEPTH)
                .map(|(lo, hi)| (lo - 0.3).abs() + (hi - 0.3).abs())
                .map_err(|e| e.to_string()),
        ),
        tol: 0.0,
    });
    let single = Potential::trig(vec![TrigTerm {
        amp: 0.1,
        freq: [1, 0, 0],
        phase: 0.0,
    }]);
    let pad = single.holder_c0 * (3f64.sqrt() / 128.0);
    checks.push(Check {
        name: "trig_range_bracket",
        expected: 1.0,
        actual: value(
            potential_range(&forward, &single, 64, DEPTH)
                .map(|(lo, hi)| {
                    let ok = lo <= -0.1
                        && lo >= -0.1 - pad - 1e-12
                        && hi >= 0.1
                        && hi <= 0.1 + pad + 1e-12;
                    ok as u8 as f64
                })
                .map_err(|e| e.to_string()),
        ),
        tol: 0.0,
    });

    // -- expansivity and bounded-expansion fractions ------------------------
    checks.push(Check {
        name: "nonexpansive_fraction_small",
        expected: 0.0,
        actual: nonexpansive_fraction(&forward, 0.05, 20, 100, seed),
        tol: 0.0,
    });
    checks.push(Check {
        name: "nonexpansive_fraction_diameter",
        expected: 1.0,
        actual: nonexpansive_fraction(&forward, torus_diameter(3) + 0.01, 20, 100, seed),
        tol: 0.0,
    });
    checks.push(Check {
        name: "bounded_area_fraction_strict",
        expected: 0.0,
        actual: value(bounded_expansion_fraction(&forward, LAMBDA_U, 64, seed).map_err(|e| e.to_string())),
        tol: 0.0,
    });
    checks.push(Check {
        name: "bounded_area_fraction_loose",
        expected: 1.0,
        actual: value(bounded_expansion_fraction(&forward, 5.2, 64, seed).map_err(|e| e.to_string())),
        tol: 0.0,
    });

    // -- oscillation ---------------------------------------------------------
    checks.push(Check {
        name: "zero_potential_oscillation",
        expected: 0.0,
        actual: value(
            bowen_oscillation(
                &inverse,
                &Potential::zero(),
                PROBE_POINT,
                10,
                &OscillationParams {
                    epsilon: 0.05,
                    probes: 16,
                    r: 0.2,
                    big_c: 2.0,
                    seed,
                },
            )
            .map(|r| r.max_oscillation)
            .map_err(|e| e.to_string()),
        ),
        tol: 0.0,
    });

    // -- gluing ---------------------------------------------------------------
    checks.push(Check {
        name: "specification_success",
        expected: 1.0,
        actual: value(
            specification_harness(
                &inverse,
                &SpecParams {
                    delta: 0.1,
                    tuples: 5,
                    blocks_min: 2,
                    blocks_max: 4,
                    block_len: 8,
                    seed,
                },
            )
            .map(|rep| rep.successes as f64 / rep.rows.len().max(1) as f64)
            .map_err(|e| e.to_string()),
        ),
        tol: 0.0,
    });

    // -- pressure shift law and determinism exercise ---------------------------
    let params = PressureParams {
        delta: 0.3,
        epsilon: 0.0,
        n_min: 2,
        n_max: 4,
        budget: 2000,
        seed,
    };
    let base = pressure(&forward, &Region::FullTorus, &|_x: [f64; 3]| 0.0, &params);
    let lifted = pressure(&forward, &Region::FullTorus, &|_x: [f64; 3]| 0.25, &params);
    checks.push(Check {
        name: "pressure_shift_law",
        expected: 0.25,
        actual: match (&base, &lifted) {
            (Ok(a), Ok(b)) => b.slope - a.slope,
            _ => f64::NAN,
        },
        tol: 1e-12,
    });
    let rerun = pressure(&forward, &Region::FullTorus, &|_x: [f64; 3]| 0.0, &params);
    let render_rows = |est: &Result<crate::pressure::PressureEstimate, _>| -> String {
        let mut t = Table::new(&["n", "log_lambda", "set_size"]);
        if let Ok(est) = est {
            for row in &est.rows {
                t.push(vec![row.n.to_string(), num(row.log_lambda), row.set_size.to_string()]);
            }
        }
        t.render()
    };
    let first_csv = render_rows(&base);
    checks.push(Check {
        name: "deterministic_rerun",
        expected: 0.0,
        actual: (first_csv != render_rows(&rerun)) as u8 as f64,
        tol: 0.0,
    });
    tables.push(("separated_check.csv", first_csv));

    // -- leaf growth determinism table ----------------------------------------
    let growth = unstable_entropy(
        &forward,
        PROBE_POINT,
        &GrowthParams {
            radius: 0.05,
            h_mesh: 0.01,
            n_min: 1,
            n_max: 6,
            max_points: 200_000,
        },
    );
    checks.push(Check {
        name: "leaf_growth_rate",
        expected: LOG_LAMBDA_U,
        actual: value(growth.as_ref().map(|g| g.slope).map_err(|e| e.to_string())),
        tol: 0.02,
    });
    let mut t = Table::new(&["n", "log_length"]);
    if let Ok(g) = &growth {
        for row in &g.rows {
            t.push(vec![row.n.to_string(), num(row.log_length)]);
        }
    }
    tables.push(("growth_check.csv", t.render()));

    // -- per-sample exponent table (parallel, order-deterministic) -------------
    let exps: Vec<f64> = (0..16u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, "exponent-samples", i);
            let x: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>());
            central_exponent(&forward, x, 50, DEPTH).unwrap_or(f64::NAN)
        })
        .collect();
    let spread = exps
        .iter()
        .fold(0.0f64, |m, &e| m.max((e - LOG_LAMBDA_C).abs()));
    checks.push(Check {
        name: "central_exponent_spread",
        expected: 0.0,
        actual: spread,
        tol: 1e-9,
    });
    let mut t = Table::new(&["sample", "exponent"]);
    for (i, e) in exps.iter().enumerate() {
        t.push(vec![i.to_string(), num(*e)]);
    }
    tables.push(("exponent_check.csv", t.render()));

    // the assertion table itself is also part of the written output
    let mut vt = Table::new(&["name", "expected", "actual", "pass"]);
    for c in &checks {
        vt.push(vec![
            c.name.to_string(),
            num(c.expected),
            num(c.actual),
            c.pass().to_string(),
        ]);
    }
    tables.insert(0, ("verify.csv", vt.render()));

    VerifyOutput { checks, tables }
}
