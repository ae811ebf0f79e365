//! Experiment configuration: a plain-text `key = value` format with
//! `[section]` headers, one section per estimator plus `[map]`,
//! `[potential]`, `[run]`, and `[thresholds]`.
//!
//! Parsing is strict — unknown sections, unknown keys, and duplicates are
//! errors, so a typo can never silently fall back to a default — and the
//! written form parses back to an identical configuration. The `[map]`
//! section uses exactly the keys of the standalone map description format
//! and is validated by the same parser.

use crate::dynamics::{parse_mapspec, write_mapspec, MapSpec, MapSpecError};
use crate::thermo::{Potential, TrigTerm};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value` or `[section]`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: section `[{name}]` appears twice")]
    DuplicateSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in section `[{section}]`")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: duplicate key `{key}` in section `[{section}]`")]
    DuplicateKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: bad value for `{key}` in `[{section}]`: {msg}")]
    BadValue {
        line: usize,
        section: String,
        key: String,
        msg: String,
    },
    #[error("[map] section: {0}")]
    Map(#[from] MapSpecError),
}

/// Analyses the `run` subcommand may execute, in a fixed execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    Entropy,
    Pressure,
    Uentropy,
    Lyapunov,
    Decompose,
    Spec,
    Gapcheck,
    Equilibrium,
    Expansivity,
    Oscillation,
    Bset,
    Sweep,
}

impl Task {
    pub const ALL: [Task; 12] = [
        Task::Entropy,
        Task::Pressure,
        Task::Uentropy,
        Task::Lyapunov,
        Task::Decompose,
        Task::Spec,
        Task::Gapcheck,
        Task::Equilibrium,
        Task::Expansivity,
        Task::Oscillation,
        Task::Bset,
        Task::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Entropy => "entropy",
            Task::Pressure => "pressure",
            Task::Uentropy => "uentropy",
            Task::Lyapunov => "lyapunov",
            Task::Decompose => "decompose",
            Task::Spec => "spec",
            Task::Gapcheck => "gapcheck",
            Task::Equilibrium => "equilibrium",
            Task::Expansivity => "expansivity",
            Task::Oscillation => "oscillation",
            Task::Bset => "bset",
            Task::Sweep => "sweep",
        }
    }

    fn from_str(s: &str) -> Option<Task> {
        Task::ALL.iter().copied().find(|t| t.as_str() == s)
    }
}

/// `[potential]` section: the weighting function of pressure-type runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    /// zero | constant | trig | central
    pub kind: String,
    /// Constant value, or the multiplier of the center log-rate.
    pub value: f64,
    pub amp: f64,
    pub freq: [i64; 3],
    pub phase: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            kind: "zero".to_string(),
            value: 0.0,
            amp: 0.1,
            freq: [1, 0, 0],
            phase: 0.0,
        }
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Potential {
        match self.kind.as_str() {
            "zero" => Potential::zero(),
            "constant" => Potential::constant(self.value),
            "trig" => Potential::trig(vec![TrigTerm {
                amp: self.amp,
                freq: self.freq,
                phase: self.phase,
            }]),
            "central" => Potential::central_log(self.value),
            other => unreachable!("kind `{other}` rejected at parse time"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSection {
    pub delta: f64,
    pub epsilon: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub budget: usize,
}

impl Default for PressureSection {
    fn default() -> Self {
        PressureSection {
            delta: 0.1,
            epsilon: 0.0,
            n_min: 4,
            n_max: 8,
            budget: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UentropySection {
    pub radius: f64,
    pub h_mesh: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub max_points: usize,
    pub center: [f64; 3],
}

impl Default for UentropySection {
    fn default() -> Self {
        UentropySection {
            radius: 0.05,
            h_mesh: 0.01,
            n_min: 1,
            n_max: 8,
            max_points: 400_000,
            center: [0.31, 0.07, 0.73],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSection {
    pub n: usize,
    pub samples: usize,
    pub depth: usize,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        LyapunovSection {
            n: 50,
            samples: 100,
            depth: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeSection {
    pub r: f64,
    pub n: usize,
    pub samples: usize,
}

impl Default for DecomposeSection {
    fn default() -> Self {
        DecomposeSection {
            r: 0.2,
            n: 20,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecSection {
    pub delta: f64,
    pub tuples: usize,
    pub blocks_min: usize,
    pub blocks_max: usize,
    pub block_len: usize,
    /// Glue on the inverse map (where the center contracts forward).
    pub on_inverse: bool,
}

impl Default for SpecSection {
    fn default() -> Self {
        SpecSection {
            delta: 0.1,
            tuples: 100,
            blocks_min: 2,
            blocks_max: 5,
            block_len: 10,
            on_inverse: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapcheckSection {
    pub grid: usize,
    pub depth: usize,
}

impl Default for GapcheckSection {
    fn default() -> Self {
        GapcheckSection { grid: 64, depth: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSection {
    pub n: usize,
    pub delta: f64,
    pub budget: usize,
    pub bins: usize,
    /// Restrict candidates to prefix-class segments at this threshold.
    pub restrict: Option<f64>,
    /// Constant added to the potential for the pressure shift-law check.
    pub shift: f64,
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        EquilibriumSection {
            n: 8,
            delta: 0.1,
            budget: 100_000,
            bins: 4,
            restrict: None,
            shift: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansivitySection {
    pub epsilon: f64,
    pub horizon: usize,
    pub samples: usize,
}

impl Default for ExpansivitySection {
    fn default() -> Self {
        ExpansivitySection {
            epsilon: 0.05,
            horizon: 20,
            samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationSection {
    pub epsilon: f64,
    pub probes: usize,
    pub r: f64,
    pub contraction: f64,
    pub segments: usize,
    pub lengths: Vec<usize>,
    pub on_inverse: bool,
    /// Dedicated single-term test potential; `amp = 0` defers to the
    /// `[potential]` section. The oscillation check is vacuous for constant
    /// potentials, so it carries its own non-constant default.
    pub amp: f64,
    pub freq: [i64; 3],
    pub phase: f64,
}

impl Default for OscillationSection {
    fn default() -> Self {
        OscillationSection {
            epsilon: 0.05,
            probes: 64,
            r: 0.2,
            contraction: 2.0,
            segments: 50,
            lengths: vec![5, 10, 20, 40],
            on_inverse: true,
            amp: 0.1,
            freq: [1, 0, 0],
            phase: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsetSection {
    pub bound: f64,
    pub samples: usize,
}

impl Default for BsetSection {
    fn default() -> Self {
        BsetSection {
            // area growth of the center-unstable plane under the reference
            // matrix is ≈ 5.049; anything at or under the strong rate is a
            // strict subset test
            bound: 3.2469796037174667,
            samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub thetas: Vec<f64>,
    pub bound: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            thetas: vec![0.0, 0.005, 0.01, 0.015, 0.02],
            // just above the unperturbed center-unstable area growth
            // (≈ 5.049), so the kick pushes a growing region past it
            bound: 5.1,
        }
    }
}

/// `[thresholds]` section: closed intervals `lo hi` against which summary
/// lines are judged. Absent keys produce threshold-free (recorded-only)
/// summary lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thresholds {
    pub h_top: Option<(f64, f64)>,
    pub pressure: Option<(f64, f64)>,
    pub residual: Option<(f64, f64)>,
    pub h_unstable: Option<(f64, f64)>,
    pub h_stable: Option<(f64, f64)>,
    pub gap_forward: Option<(f64, f64)>,
    pub gap_inverse: Option<(f64, f64)>,
    pub central_exponent: Option<(f64, f64)>,
    pub prefix_fraction: Option<(f64, f64)>,
    pub core_fraction: Option<(f64, f64)>,
    pub spec_success: Option<(f64, f64)>,
    pub nonexpansive: Option<(f64, f64)>,
    pub discrepancy: Option<(f64, f64)>,
    pub shift_law: Option<(f64, f64)>,
    pub bset_fraction: Option<(f64, f64)>,
    pub oscillation_ratio: Option<(f64, f64)>,
    pub oscillation_growth: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub map: MapSpec,
    pub potential: PotentialConfig,
    pub tasks: Vec<Task>,
    pub pressure: PressureSection,
    pub uentropy: UentropySection,
    pub lyapunov: LyapunovSection,
    pub decompose: DecomposeSection,
    pub spec: SpecSection,
    pub gapcheck: GapcheckSection,
    pub equilibrium: EquilibriumSection,
    pub expansivity: ExpansivitySection,
    pub oscillation: OscillationSection,
    pub bset: BsetSection,
    pub sweep: SweepSection,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            map: MapSpec::default(),
            potential: PotentialConfig::default(),
            tasks: Vec::new(),
            pressure: PressureSection::default(),
            uentropy: UentropySection::default(),
            lyapunov: LyapunovSection::default(),
            decompose: DecomposeSection::default(),
            spec: SpecSection::default(),
            gapcheck: GapcheckSection::default(),
            equilibrium: EquilibriumSection::default(),
            expansivity: ExpansivitySection::default(),
            oscillation: OscillationSection::default(),
            bset: BsetSection::default(),
            sweep: SweepSection::default(),
            thresholds: Thresholds::default(),
        }
    }
}

/// One parsed `key = value` entry with its source line.
struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct SectionCtx<'a> {
    name: &'a str,
    entries: Vec<Entry>,
}

impl SectionCtx<'_> {
    fn bad(&self, e: &Entry, msg: impl Into<String>) -> ConfigError {
        ConfigError::BadValue {
            line: e.line,
            section: self.name.to_string(),
            key: e.key.clone(),
            msg: msg.into(),
        }
    }

    fn f64(&self, e: &Entry) -> Result<f64, ConfigError> {
        let x: f64 = e.value.parse().map_err(|err| self.bad(e, format!("{err}")))?;
        if !x.is_finite() {
            return Err(self.bad(e, "value must be finite"));
        }
        Ok(x)
    }

    fn usize(&self, e: &Entry) -> Result<usize, ConfigError> {
        e.value.parse().map_err(|err| self.bad(e, format!("{err}")))
    }

    fn u64(&self, e: &Entry) -> Result<u64, ConfigError> {
        e.value.parse().map_err(|err| self.bad(e, format!("{err}")))
    }

    fn bool(&self, e: &Entry) -> Result<bool, ConfigError> {
        match e.value.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.bad(e, format!("`{other}` is not `true` or `false`"))),
        }
    }

    fn f64_list(&self, e: &Entry) -> Result<Vec<f64>, ConfigError> {
        e.value
            .split_whitespace()
            .map(|p| {
                let x: f64 = p.parse().map_err(|err| self.bad(e, format!("{err}")))?;
                if !x.is_finite() {
                    return Err(self.bad(e, "values must be finite"));
                }
                Ok(x)
            })
            .collect()
    }

    fn usize_list(&self, e: &Entry) -> Result<Vec<usize>, ConfigError> {
        e.value
            .split_whitespace()
            .map(|p| p.parse().map_err(|err| self.bad(e, format!("{err}"))))
            .collect()
    }

    fn interval(&self, e: &Entry) -> Result<(f64, f64), ConfigError> {
        let v = self.f64_list(e)?;
        if v.len() != 2 || v[0] > v[1] {
            return Err(self.bad(e, "expected `lo hi` with lo ≤ hi"));
        }
        Ok((v[0], v[1]))
    }

    fn vec3(&self, e: &Entry) -> Result<[f64; 3], ConfigError> {
        let v = self.f64_list(e)?;
        if v.len() != 3 {
            return Err(self.bad(e, format!("expected 3 numbers, got {}", v.len())));
        }
        Ok([v[0], v[1], v[2]])
    }

    fn i64_triple(&self, e: &Entry) -> Result<[i64; 3], ConfigError> {
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(self.bad(e, format!("expected 3 integers, got {}", parts.len())));
        }
        let mut out = [0i64; 3];
        for (i, p) in parts.iter().enumerate() {
            out[i] = p.parse().map_err(|err| self.bad(e, format!("{err}")))?;
        }
        Ok(out)
    }

    fn unknown(&self, e: &Entry) -> ConfigError {
        ConfigError::UnknownKey {
            line: e.line,
            section: self.name.to_string(),
            key: e.key.clone(),
        }
    }
}

const SECTION_NAMES: [&str; 16] = [
    "",
    "map",
    "potential",
    "run",
    "pressure",
    "uentropy",
    "lyapunov",
    "decompose",
    "spec",
    "gapcheck",
    "equilibrium",
    "expansivity",
    "oscillation",
    "bset",
    "sweep",
    "thresholds",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    // First pass: split into sections of raw entries.
    let mut sections: Vec<(String, Vec<Entry>)> = vec![(String::new(), Vec::new())];
    let mut seen_sections: BTreeSet<String> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: stripped.to_string(),
                });
            };
            let name = name.trim().to_string();
            if !SECTION_NAMES.contains(&name.as_str()) || name.is_empty() {
                return Err(ConfigError::UnknownSection { line, name });
            }
            if !seen_sections.insert(name.clone()) {
                return Err(ConfigError::DuplicateSection { line, name });
            }
            sections.push((name, Vec::new()));
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: stripped.to_string(),
            });
        };
        sections.last_mut().unwrap().1.push(Entry {
            line,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }

    // Duplicate keys within a section.
    for (name, entries) in &sections {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for e in entries {
            if !seen.insert(e.key.as_str()) {
                return Err(ConfigError::DuplicateKey {
                    line: e.line,
                    section: name.clone(),
                    key: e.key.clone(),
                });
            }
        }
    }

    let mut cfg = ExperimentConfig::default();
    for (name, entries) in &sections {
        let ctx = SectionCtx {
            name,
            entries: Vec::new(),
        };
        let _ = &ctx.entries;
        match name.as_str() {
            "" => {
                for e in entries {
                    match e.key.as_str() {
                        "seed" => cfg.seed = ctx.u64(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "map" => {
                // Delegate to the standalone map description parser; its
                // key set and validation define this section.
                let mut text = String::new();
                for e in entries {
                    let _ = writeln!(text, "{} = {}", e.key, e.value);
                }
                cfg.map = parse_mapspec(&text)?;
            }
            "potential" => {
                for e in entries {
                    match e.key.as_str() {
                        "kind" => match e.value.as_str() {
                            "zero" | "constant" | "trig" | "central" => {
                                cfg.potential.kind = e.value.clone()
                            }
                            other => {
                                return Err(ctx.bad(
                                    e,
                                    format!(
                                        "`{other}` is not zero, constant, trig, or central"
                                    ),
                                ))
                            }
                        },
                        "value" => cfg.potential.value = ctx.f64(e)?,
                        "amp" => cfg.potential.amp = ctx.f64(e)?,
                        "freq" => cfg.potential.freq = ctx.i64_triple(e)?,
                        "phase" => cfg.potential.phase = ctx.f64(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "run" => {
                for e in entries {
                    match e.key.as_str() {
                        "tasks" => {
                            let mut tasks = Vec::new();
                            for w in e.value.split_whitespace() {
                                let t = Task::from_str(w)
                                    .ok_or_else(|| ctx.bad(e, format!("unknown task `{w}`")))?;
                                if tasks.contains(&t) {
                                    return Err(ctx.bad(e, format!("task `{w}` listed twice")));
                                }
                                tasks.push(t);
                            }
                            cfg.tasks = tasks;
                        }
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "pressure" => {
                for e in entries {
                    match e.key.as_str() {
                        "delta" => cfg.pressure.delta = ctx.f64(e)?,
                        "epsilon" => cfg.pressure.epsilon = ctx.f64(e)?,
                        "n_min" => cfg.pressure.n_min = ctx.usize(e)?,
                        "n_max" => cfg.pressure.n_max = ctx.usize(e)?,
                        "budget" => cfg.pressure.budget = ctx.usize(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "uentropy" => {
                for e in entries {
                    match e.key.as_str() {
                        "radius" => cfg.uentropy.radius = ctx.f64(e)?,
                        "h_mesh" => cfg.uentropy.h_mesh = ctx.f64(e)?,
                        "n_min" => cfg.uentropy.n_min = ctx.usize(e)?,
                        "n_max" => cfg.uentropy.n_max = ctx.usize(e)?,
                        "max_points" => cfg.uentropy.max_points = ctx.usize(e)?,
                        "center" => cfg.uentropy.center = ctx.vec3(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "lyapunov" => {
                for e in entries {
                    match e.key.as_str() {
                        "n" => cfg.lyapunov.n = ctx.usize(e)?,
                        "samples" => cfg.lyapunov.samples = ctx.usize(e)?,
                        "depth" => cfg.lyapunov.depth = ctx.usize(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "decompose" => {
                for e in entries {
                    match e.key.as_str() {
                        "r" => cfg.decompose.r = ctx.f64(e)?,
                        "n" => cfg.decompose.n = ctx.usize(e)?,
                        "samples" => cfg.decompose.samples = ctx.usize(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "spec" => {
                for e in entries {
                    match e.key.as_str() {
                        "delta" => cfg.spec.delta = ctx.f64(e)?,
                        "tuples" => cfg.spec.tuples = ctx.usize(e)?,
                        "blocks_min" => cfg.spec.blocks_min = ctx.usize(e)?,
                        "blocks_max" => cfg.spec.blocks_max = ctx.usize(e)?,
                        "block_len" => cfg.spec.block_len = ctx.usize(e)?,
                        "on_inverse" => cfg.spec.on_inverse = ctx.bool(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "gapcheck" => {
                for e in entries {
                    match e.key.as_str() {
                        "grid" => cfg.gapcheck.grid = ctx.usize(e)?,
                        "depth" => cfg.gapcheck.depth = ctx.usize(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "equilibrium" => {
                for e in entries {
                    match e.key.as_str() {
                        "n" => cfg.equilibrium.n = ctx.usize(e)?,
                        "delta" => cfg.equilibrium.delta = ctx.f64(e)?,
                        "budget" => cfg.equilibrium.budget = ctx.usize(e)?,
                        "bins" => cfg.equilibrium.bins = ctx.usize(e)?,
                        "restrict" => {
                            cfg.equilibrium.restrict = if e.value == "none" {
                                None
                            } else {
                                Some(ctx.f64(e)?)
                            }
                        }
                        "shift" => cfg.equilibrium.shift = ctx.f64(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "expansivity" => {
                for e in entries {
                    match e.key.as_str() {
                        "epsilon" => cfg.expansivity.epsilon = ctx.f64(e)?,
                        "horizon" => cfg.expansivity.horizon = ctx.usize(e)?,
                        "samples" => cfg.expansivity.samples = ctx.usize(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "oscillation" => {
                for e in entries {
                    match e.key.as_str() {
                        "epsilon" => cfg.oscillation.epsilon = ctx.f64(e)?,
                        "probes" => cfg.oscillation.probes = ctx.usize(e)?,
                        "r" => cfg.oscillation.r = ctx.f64(e)?,
                        "contraction" => cfg.oscillation.contraction = ctx.f64(e)?,
                        "segments" => cfg.oscillation.segments = ctx.usize(e)?,
                        "lengths" => cfg.oscillation.lengths = ctx.usize_list(e)?,
                        "on_inverse" => cfg.oscillation.on_inverse = ctx.bool(e)?,
                        "amp" => cfg.oscillation.amp = ctx.f64(e)?,
                        "freq" => cfg.oscillation.freq = ctx.i64_triple(e)?,
                        "phase" => cfg.oscillation.phase = ctx.f64(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "bset" => {
                for e in entries {
                    match e.key.as_str() {
                        "bound" => cfg.bset.bound = ctx.f64(e)?,
                        "samples" => cfg.bset.samples = ctx.usize(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "sweep" => {
                for e in entries {
                    match e.key.as_str() {
                        "thetas" => cfg.sweep.thetas = ctx.f64_list(e)?,
                        "bound" => cfg.sweep.bound = ctx.f64(e)?,
                        _ => return Err(ctx.unknown(e)),
                    }
                }
            }
            "thresholds" => {
                for e in entries {
                    let slot = match e.key.as_str() {
                        "h_top" => &mut cfg.thresholds.h_top,
                        "pressure" => &mut cfg.thresholds.pressure,
                        "residual" => &mut cfg.thresholds.residual,
                        "h_unstable" => &mut cfg.thresholds.h_unstable,
                        "h_stable" => &mut cfg.thresholds.h_stable,
                        "gap_forward" => &mut cfg.thresholds.gap_forward,
                        "gap_inverse" => &mut cfg.thresholds.gap_inverse,
                        "central_exponent" => &mut cfg.thresholds.central_exponent,
                        "prefix_fraction" => &mut cfg.thresholds.prefix_fraction,
                        "core_fraction" => &mut cfg.thresholds.core_fraction,
                        "spec_success" => &mut cfg.thresholds.spec_success,
                        "nonexpansive" => &mut cfg.thresholds.nonexpansive,
                        "discrepancy" => &mut cfg.thresholds.discrepancy,
                        "shift_law" => &mut cfg.thresholds.shift_law,
                        "bset_fraction" => &mut cfg.thresholds.bset_fraction,
                        "oscillation_ratio" => &mut cfg.thresholds.oscillation_ratio,
                        "oscillation_growth" => &mut cfg.thresholds.oscillation_growth,
                        _ => return Err(ctx.unknown(e)),
                    };
                    *slot = Some(ctx.interval(e)?);
                }
            }
            other => unreachable!("section `{other}` validated above"),
        }
    }
    Ok(cfg)
}

pub fn write_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "seed = {}", cfg.seed);
    let _ = writeln!(w, "\n[map]");
    w.push_str(&write_mapspec(&cfg.map));
    let _ = writeln!(w, "\n[potential]");
    let _ = writeln!(w, "kind = {}", cfg.potential.kind);
    let _ = writeln!(w, "value = {}", cfg.potential.value);
    let _ = writeln!(w, "amp = {}", cfg.potential.amp);
    let _ = writeln!(
        w,
        "freq = {} {} {}",
        cfg.potential.freq[0], cfg.potential.freq[1], cfg.potential.freq[2]
    );
    let _ = writeln!(w, "phase = {}", cfg.potential.phase);
    let _ = writeln!(w, "\n[run]");
    let names: Vec<&str> = cfg.tasks.iter().map(|t| t.as_str()).collect();
    let _ = writeln!(w, "tasks = {}", names.join(" "));
    let p = &cfg.pressure;
    let _ = writeln!(w, "\n[pressure]");
    let _ = writeln!(w, "delta = {}", p.delta);
    let _ = writeln!(w, "epsilon = {}", p.epsilon);
    let _ = writeln!(w, "n_min = {}", p.n_min);
    let _ = writeln!(w, "n_max = {}", p.n_max);
    let _ = writeln!(w, "budget = {}", p.budget);
    let u = &cfg.uentropy;
    let _ = writeln!(w, "\n[uentropy]");
    let _ = writeln!(w, "radius = {}", u.radius);
    let _ = writeln!(w, "h_mesh = {}", u.h_mesh);
    let _ = writeln!(w, "n_min = {}", u.n_min);
    let _ = writeln!(w, "n_max = {}", u.n_max);
    let _ = writeln!(w, "max_points = {}", u.max_points);
    let _ = writeln!(w, "center = {} {} {}", u.center[0], u.center[1], u.center[2]);
    let l = &cfg.lyapunov;
    let _ = writeln!(w, "\n[lyapunov]");
    let _ = writeln!(w, "n = {}", l.n);
    let _ = writeln!(w, "samples = {}", l.samples);
    let _ = writeln!(w, "depth = {}", l.depth);
    let d = &cfg.decompose;
    let _ = writeln!(w, "\n[decompose]");
    let _ = writeln!(w, "r = {}", d.r);
    let _ = writeln!(w, "n = {}", d.n);
    let _ = writeln!(w, "samples = {}", d.samples);
    let sp = &cfg.spec;
    let _ = writeln!(w, "\n[spec]");
    let _ = writeln!(w, "delta = {}", sp.delta);
    let _ = writeln!(w, "tuples = {}", sp.tuples);
    let _ = writeln!(w, "blocks_min = {}", sp.blocks_min);
    let _ = writeln!(w, "blocks_max = {}", sp.blocks_max);
    let _ = writeln!(w, "block_len = {}", sp.block_len);
    let _ = writeln!(w, "on_inverse = {}", sp.on_inverse);
    let g = &cfg.gapcheck;
    let _ = writeln!(w, "\n[gapcheck]");
    let _ = writeln!(w, "grid = {}", g.grid);
    let _ = writeln!(w, "depth = {}", g.depth);
    let q = &cfg.equilibrium;
    let _ = writeln!(w, "\n[equilibrium]");
    let _ = writeln!(w, "n = {}", q.n);
    let _ = writeln!(w, "delta = {}", q.delta);
    let _ = writeln!(w, "budget = {}", q.budget);
    let _ = writeln!(w, "bins = {}", q.bins);
    match q.restrict {
        Some(r) => {
            let _ = writeln!(w, "restrict = {r}");
        }
        None => {
            let _ = writeln!(w, "restrict = none");
        }
    }
    let _ = writeln!(w, "shift = {}", q.shift);
    let x = &cfg.expansivity;
    let _ = writeln!(w, "\n[expansivity]");
    let _ = writeln!(w, "epsilon = {}", x.epsilon);
    let _ = writeln!(w, "horizon = {}", x.horizon);
    let _ = writeln!(w, "samples = {}", x.samples);
    let o = &cfg.oscillation;
    let _ = writeln!(w, "\n[oscillation]");
    let _ = writeln!(w, "epsilon = {}", o.epsilon);
    let _ = writeln!(w, "probes = {}", o.probes);
    let _ = writeln!(w, "r = {}", o.r);
    let _ = writeln!(w, "contraction = {}", o.contraction);
    let _ = writeln!(w, "segments = {}", o.segments);
    let lens: Vec<String> = o.lengths.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(w, "lengths = {}", lens.join(" "));
    let _ = writeln!(w, "on_inverse = {}", o.on_inverse);
    let _ = writeln!(w, "amp = {}", o.amp);
    let _ = writeln!(w, "freq = {} {} {}", o.freq[0], o.freq[1], o.freq[2]);
    let _ = writeln!(w, "phase = {}", o.phase);
    let b = &cfg.bset;
    let _ = writeln!(w, "\n[bset]");
    let _ = writeln!(w, "bound = {}", b.bound);
    let _ = writeln!(w, "samples = {}", b.samples);
    let sw = &cfg.sweep;
    let _ = writeln!(w, "\n[sweep]");
    let ths: Vec<String> = sw.thetas.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(w, "thetas = {}", ths.join(" "));
    let _ = writeln!(w, "bound = {}", sw.bound);
    let _ = writeln!(w, "\n[thresholds]");
    let t = &cfg.thresholds;
    let pairs: [(&str, &Option<(f64, f64)>); 17] = [
        ("h_top", &t.h_top),
        ("pressure", &t.pressure),
        ("residual", &t.residual),
        ("h_unstable", &t.h_unstable),
        ("h_stable", &t.h_stable),
        ("gap_forward", &t.gap_forward),
        ("gap_inverse", &t.gap_inverse),
        ("central_exponent", &t.central_exponent),
        ("prefix_fraction", &t.prefix_fraction),
        ("core_fraction", &t.core_fraction),
        ("spec_success", &t.spec_success),
        ("nonexpansive", &t.nonexpansive),
        ("discrepancy", &t.discrepancy),
        ("shift_law", &t.shift_law),
        ("bset_fraction", &t.bset_fraction),
        ("oscillation_ratio", &t.oscillation_ratio),
        ("oscillation_growth", &t.oscillation_growth),
    ];
    for (name, slot) in pairs {
        if let Some((lo, hi)) = slot {
            let _ = writeln!(w, "{name} = {lo} {hi}");
        }
    }
    s
}
