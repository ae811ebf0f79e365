//! Plain-text description of a torus map, parse and write.
//!
//! The format is line-oriented `key = value` with `#` comments, e.g.
//!
//! ```text
//! kind = mane
//! matrix = 2 1 0 ; 1 2 1 ; 0 1 1
//! reversed = false
//! theta = 0.02
//! r0 = 0.2
//! q = 0 0 0
//! seed = 1
//! ```
//!
//! Parsing is strict: unknown keys, duplicate keys, and keys that do not
//! apply to the declared kind are errors, so a typo can never silently fall
//! back to a default. The parser must accept arbitrary bytes without
//! panicking; dynamical validation (unimodularity, spectrum, cones) happens
//! in [`MapSpec::build`], not here.

use super::{DynError, ManeParams, MapModel, DEFAULT_MATRIX};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MapSpecError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("key `{key}` does not apply to kind `{kind}`")]
    KindMismatch { key: String, kind: String },
    #[error("missing required key `kind`")]
    MissingKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFamily {
    Linear,
    Mane,
}

/// Declarative description of a map; a plain value with no dynamics until
/// [`build`](MapSpec::build) is called.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub family: MapFamily,
    pub matrix: [[i64; 3]; 3],
    pub reversed: bool,
    pub theta: f64,
    pub r0: f64,
    pub q: [f64; 3],
    pub seed: u64,
}

impl Default for MapSpec {
    fn default() -> Self {
        MapSpec {
            family: MapFamily::Linear,
            matrix: DEFAULT_MATRIX,
            reversed: false,
            theta: 0.0,
            r0: 0.2,
            q: [0.0; 3],
            seed: 1,
        }
    }
}

impl MapSpec {
    /// Instantiate the described dynamical system, running all validation.
    pub fn build(&self) -> Result<MapModel, DynError> {
        let model = match self.family {
            MapFamily::Linear => MapModel::linear(self.matrix)?,
            MapFamily::Mane => MapModel::mane(ManeParams {
                matrix: self.matrix,
                theta: self.theta,
                r0: self.r0,
                q: self.q,
                seed: self.seed,
            })?,
        };
        Ok(if self.reversed {
            model.reversed()
        } else {
            model
        })
    }
}

pub fn parse_mapspec(text: &str) -> Result<MapSpec, MapSpecError> {
    let mut family: Option<(usize, MapFamily)> = None;
    let mut matrix: Option<[[i64; 3]; 3]> = None;
    let mut reversed: Option<bool> = None;
    let mut theta: Option<f64> = None;
    let mut r0: Option<f64> = None;
    let mut q: Option<[f64; 3]> = None;
    let mut seed: Option<u64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(MapSpecError::Syntax {
                line,
                text: stripped.to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let dup = |key: &str| MapSpecError::DuplicateKey {
            line,
            key: key.to_string(),
        };
        match key {
            "kind" => {
                if family.is_some() {
                    return Err(dup(key));
                }
                family = Some((
                    line,
                    match value {
                        "linear" => MapFamily::Linear,
                        "mane" => MapFamily::Mane,
                        other => {
                            return Err(MapSpecError::BadValue {
                                line,
                                key: key.to_string(),
                                msg: format!("`{other}` is not `linear` or `mane`"),
                            })
                        }
                    },
                ));
            }
            "matrix" => {
                if matrix.is_some() {
                    return Err(dup(key));
                }
                matrix = Some(parse_matrix(line, value)?);
            }
            "reversed" => {
                if reversed.is_some() {
                    return Err(dup(key));
                }
                reversed = Some(match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(MapSpecError::BadValue {
                            line,
                            key: key.to_string(),
                            msg: format!("`{other}` is not `true` or `false`"),
                        })
                    }
                });
            }
            "theta" => {
                if theta.is_some() {
                    return Err(dup(key));
                }
                theta = Some(parse_f64(line, key, value)?);
            }
            "r0" => {
                if r0.is_some() {
                    return Err(dup(key));
                }
                r0 = Some(parse_f64(line, key, value)?);
            }
            "q" => {
                if q.is_some() {
                    return Err(dup(key));
                }
                q = Some(parse_vec3(line, key, value)?);
            }
            "seed" => {
                if seed.is_some() {
                    return Err(dup(key));
                }
                seed = Some(value.parse::<u64>().map_err(|e| MapSpecError::BadValue {
                    line,
                    key: key.to_string(),
                    msg: e.to_string(),
                })?);
            }
            other => {
                return Err(MapSpecError::UnknownKey {
                    line,
                    key: other.to_string(),
                })
            }
        }
    }

    let Some((_, family)) = family else {
        return Err(MapSpecError::MissingKind);
    };
    if family == MapFamily::Linear {
        for (name, present) in [
            ("theta", theta.is_some()),
            ("r0", r0.is_some()),
            ("q", q.is_some()),
            ("seed", seed.is_some()),
        ] {
            if present {
                return Err(MapSpecError::KindMismatch {
                    key: name.to_string(),
                    kind: "linear".to_string(),
                });
            }
        }
    }

    let d = MapSpec::default();
    Ok(MapSpec {
        family,
        matrix: matrix.unwrap_or(d.matrix),
        reversed: reversed.unwrap_or(d.reversed),
        theta: theta.unwrap_or(d.theta),
        r0: r0.unwrap_or(d.r0),
        q: q.unwrap_or(d.q),
        seed: seed.unwrap_or(d.seed),
    })
}

pub fn write_mapspec(spec: &MapSpec) -> String {
    let mut out = String::new();
    let kind = match spec.family {
        MapFamily::Linear => "linear",
        MapFamily::Mane => "mane",
    };
    out.push_str(&format!("kind = {kind}\n"));
    let rows: Vec<String> = spec
        .matrix
        .iter()
        .map(|r| format!("{} {} {}", r[0], r[1], r[2]))
        .collect();
    out.push_str(&format!("matrix = {}\n", rows.join(" ; ")));
    out.push_str(&format!("reversed = {}\n", spec.reversed));
    if spec.family == MapFamily::Mane {
        out.push_str(&format!("theta = {}\n", spec.theta));
        out.push_str(&format!("r0 = {}\n", spec.r0));
        out.push_str(&format!("q = {} {} {}\n", spec.q[0], spec.q[1], spec.q[2]));
        out.push_str(&format!("seed = {}\n", spec.seed));
    }
    out
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, MapSpecError> {
    let x: f64 = value.parse().map_err(|e: std::num::ParseFloatError| {
        MapSpecError::BadValue {
            line,
            key: key.to_string(),
            msg: e.to_string(),
        }
    })?;
    if !x.is_finite() {
        return Err(MapSpecError::BadValue {
            line,
            key: key.to_string(),
            msg: "value must be finite".to_string(),
        });
    }
    Ok(x)
}

fn parse_vec3(line: usize, key: &str, value: &str) -> Result<[f64; 3], MapSpecError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(MapSpecError::BadValue {
            line,
            key: key.to_string(),
            msg: format!("expected 3 numbers, got {}", parts.len()),
        });
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = parse_f64(line, key, p)?;
    }
    Ok(out)
}

fn parse_matrix(line: usize, value: &str) -> Result<[[i64; 3]; 3], MapSpecError> {
    let bad = |msg: String| MapSpecError::BadValue {
        line,
        key: "matrix".to_string(),
        msg,
    };
    let rows: Vec<&str> = value.split(';').collect();
    if rows.len() != 3 {
        return Err(bad(format!("expected 3 rows, got {}", rows.len())));
    }
    let mut out = [[0i64; 3]; 3];
    for (i, row) in rows.iter().enumerate() {
        let entries: Vec<&str> = row.split_whitespace().collect();
        if entries.len() != 3 {
            return Err(bad(format!(
                "row {} has {} entries, expected 3",
                i + 1,
                entries.len()
            )));
        }
        for (j, e) in entries.iter().enumerate() {
            out[i][j] = e
                .parse::<i64>()
                .map_err(|err| bad(format!("row {}: {}", i + 1, err)))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_linear_with_defaults() {
        let s = parse_mapspec("kind = linear\n").unwrap();
        assert_eq!(s, MapSpec::default());
        assert!(s.build().is_ok());
    }

    #[test]
    fn parses_full_mane_description() {
        let text = "\
# deformed example
kind = mane
matrix = 2 1 0 ; 1 2 1 ; 0 1 1
reversed = true
theta = -0.02
r0 = 0.2
q = 0.5 0.25 0
seed = 7
";
        let s = parse_mapspec(text).unwrap();
        assert_eq!(s.family, MapFamily::Mane);
        assert!(s.reversed);
        assert_eq!(s.theta, -0.02);
        assert_eq!(s.q, [0.5, 0.25, 0.0]);
        assert_eq!(s.seed, 7);
        assert!(s.build().is_ok());
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(parse_mapspec(""), Err(MapSpecError::MissingKind));
        assert!(matches!(
            parse_mapspec("kind = linear\nkind = mane\n"),
            Err(MapSpecError::DuplicateKey { .. })
        ));
        assert!(matches!(
            parse_mapspec("kind = linear\nfoo = 1\n"),
            Err(MapSpecError::UnknownKey { .. })
        ));
        assert!(matches!(
            parse_mapspec("kind = linear\ntheta = 0.1\n"),
            Err(MapSpecError::KindMismatch { .. })
        ));
        assert!(matches!(
            parse_mapspec("kind mane\n"),
            Err(MapSpecError::Syntax { .. })
        ));
        assert!(matches!(
            parse_mapspec("kind = mane\nmatrix = 1 0 ; 0 1\n"),
            Err(MapSpecError::BadValue { .. })
        ));
        assert!(matches!(
            parse_mapspec("kind = mane\ntheta = inf\n"),
            Err(MapSpecError::BadValue { .. })
        ));
        assert!(matches!(
            parse_mapspec("kind = mane\nseed = -3\n"),
            Err(MapSpecError::BadValue { .. })
        ));
        assert!(matches!(
            parse_mapspec("kind = mane\nmatrix = 99999999999999999999 0 0 ; 0 1 0 ; 0 0 1"),
            Err(MapSpecError::BadValue { .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let s = parse_mapspec("\n  # hi\nkind = linear # trailing\n\n").unwrap();
        assert_eq!(s.family, MapFamily::Linear);
    }

    #[test]
    fn written_form_parses_back_exactly() {
        let spec = MapSpec {
            family: MapFamily::Mane,
            theta: 0.017,
            seed: 42,
            reversed: true,
            ..MapSpec::default()
        };
        assert_eq!(parse_mapspec(&write_mapspec(&spec)).unwrap(), spec);
    }

    proptest! {
        #[test]
        fn round_trip_holds_for_any_description(
            family_mane in proptest::bool::ANY,
            entries in proptest::array::uniform9(-9i64..=9),
            reversed in proptest::bool::ANY,
            theta in -0.9f64..0.9,
            r0 in 0.01f64..0.25,
            q in proptest::array::uniform3(0.0f64..1.0),
            seed in proptest::num::u64::ANY,
        ) {
            let d = MapSpec::default();
            let spec = if family_mane {
                MapSpec {
                    family: MapFamily::Mane,
                    matrix: [
                        [entries[0], entries[1], entries[2]],
                        [entries[3], entries[4], entries[5]],
                        [entries[6], entries[7], entries[8]],
                    ],
                    reversed,
                    theta,
                    r0,
                    q,
                    seed,
                }
            } else {
                MapSpec {
                    family: MapFamily::Linear,
                    matrix: [
                        [entries[0], entries[1], entries[2]],
                        [entries[3], entries[4], entries[5]],
                        [entries[6], entries[7], entries[8]],
                    ],
                    reversed,
                    ..d
                }
            };
            prop_assert_eq!(parse_mapspec(&write_mapspec(&spec)).unwrap(), spec);
        }

        #[test]
        fn parser_never_panics(text in "\\PC*") {
            let _ = parse_mapspec(&text);
        }
    }
}
