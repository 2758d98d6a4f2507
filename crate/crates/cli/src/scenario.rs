//! TOML scenario files.
//!
//! Vertices are numbered from 1 in files and converted to 0-based indices on
//! build. A scenario either lists its weighted edges or carries a `bearings`
//! section from which the projector weights are derived.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use mwc_core::bearing::{bearing_laplacian, Bearing, BearingSpec};
use mwc_core::graph::{MatrixWeight, MatrixWeightedGraph};
use mwc_core::random::{random_initial_state, rng_from_seed};
use mwc_core::tolerance::Tolerances;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// One row of `d` numbers per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bearings: Option<BearingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub i: usize,
    pub j: usize,
    /// Row-major `d x d`.
    pub weight: Vec<Vec<f64>>,
}

/// Either `target` positions with `pairs` to constrain, or explicit
/// `directed` bearings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BearingSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directed: Option<Vec<DirectedBearing>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectedBearing {
    pub i: usize,
    pub j: usize,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Built {
    pub graph: MatrixWeightedGraph,
    pub bearings: Option<BearingSpec>,
    pub initial_state: DVector<f64>,
}

fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> CliError {
    CliError::Validation {
        field: field.into(),
        message: message.to_string(),
    }
}

fn matrix(rows: &[Vec<f64>], d: usize, field: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(invalid(field, format!("expected a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |r, c| rows[r][c]))
}

fn vector(values: &[f64], d: usize, field: &str) -> Result<DVector<f64>, CliError> {
    if values.len() != d {
        return Err(invalid(field, format!("expected {d} numbers, found {}", values.len())));
    }
    Ok(DVector::from_row_slice(values))
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are serializable")
    }

    /// Scenario listing the edges of `g` verbatim.
    pub fn from_graph(name: &str, g: &MatrixWeightedGraph, seed: Option<u64>) -> Self {
        let d = g.dim();
        Self {
            name: name.to_string(),
            n: g.vertex_count(),
            d,
            seed,
            initial_states: None,
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeSpec {
                    i: e.tail + 1,
                    j: e.head + 1,
                    weight: (0..d)
                        .map(|r| (0..d).map(|c| e.weight.matrix()[(r, c)]).collect())
                        .collect(),
                })
                .collect(),
            bearings: None,
            sim: None,
        }
    }

    fn vertex(&self, v: usize, field: &str) -> Result<usize, CliError> {
        if v == 0 || v > self.n {
            return Err(invalid(field, format!("vertex {v} is outside 1..={}", self.n)));
        }
        Ok(v - 1)
    }

    fn bearing_spec(&self, section: &BearingSection) -> Result<BearingSpec, CliError> {
        let d = self.d;
        match (&section.target, &section.pairs, &section.directed) {
            (Some(target), Some(pairs), None) => {
                if target.len() != self.n {
                    return Err(invalid("bearings.target", format!("expected {} positions", self.n)));
                }
                let positions = target
                    .iter()
                    .enumerate()
                    .map(|(k, p)| vector(p, d, &format!("bearings.target[{k}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let edges = pairs
                    .iter()
                    .enumerate()
                    .map(|(k, [i, j])| {
                        let field = format!("bearings.pairs[{k}]");
                        Ok((self.vertex(*i, &field)?, self.vertex(*j, &field)?))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                BearingSpec::from_target(&positions, &edges).map_err(|e| invalid("bearings", e))
            }
            (None, None, Some(directed)) => {
                let bearings = directed
                    .iter()
                    .enumerate()
                    .map(|(k, b)| {
                        let field = format!("bearings.directed[{k}]");
                        Ok(Bearing {
                            from: self.vertex(b.i, &field)?,
                            to: self.vertex(b.j, &field)?,
                            direction: vector(&b.g, d, &format!("{field}.g"))?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(BearingSpec { n: self.n, d, bearings })
            }
            _ => Err(invalid(
                "bearings",
                "give either `target` and `pairs`, or `directed`, but not both",
            )),
        }
    }

    /// Validates every field and assembles the graph and initial state.
    pub fn build(&self, tolerances: Tolerances) -> Result<Built, CliError> {
        let (n, d) = (self.n, self.d);
        let name_ok = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
        if !name_ok {
            return Err(invalid("name", "use letters, digits, `_`, `-` or `.` (it names the output files)"));
        }
        if n == 0 || d == 0 {
            return Err(invalid("n/d", "need at least one agent and one dimension"));
        }
        let (graph, bearings) = match &self.bearings {
            Some(section) => {
                if !self.edges.is_empty() {
                    return Err(invalid("edges", "bearing scenarios derive their edges; omit `edges`"));
                }
                let spec = self.bearing_spec(section)?;
                let graph = bearing_laplacian(&spec).map_err(|e| invalid("bearings", e))?;
                (graph, Some(spec))
            }
            None => {
                let mut triples = Vec::with_capacity(self.edges.len());
                for (k, e) in self.edges.iter().enumerate() {
                    let field = format!("edges[{k}]");
                    let (i, j) = (self.vertex(e.i, &field)?, self.vertex(e.j, &field)?);
                    let w = matrix(&e.weight, d, &format!("{field}.weight"))?;
                    MatrixWeight::with_tolerances(w.clone(), &tolerances)
                        .map_err(|err| invalid(format!("{field}.weight"), err))?;
                    triples.push((i, j, w));
                }
                let graph = MatrixWeightedGraph::with_tolerances(n, d, triples, tolerances)
                    .map_err(|e| invalid("edges", e))?;
                (graph, None)
            }
        };
        let initial_state = match (&self.initial_states, self.seed) {
            (Some(rows), _) => {
                if rows.len() != n {
                    return Err(invalid("initial_states", format!("expected {n} rows")));
                }
                let mut x = DVector::zeros(n * d);
                for (k, row) in rows.iter().enumerate() {
                    let v = vector(row, d, &format!("initial_states[{k}]"))?;
                    x.rows_mut(k * d, d).copy_from(&v);
                }
                x
            }
            (None, Some(seed)) => random_initial_state(&mut rng_from_seed(seed), n, d),
            (None, None) => return Err(invalid("seed", "required when `initial_states` is absent")),
        };
        Ok(Built {
            graph,
            bearings,
            initial_state,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "pair"
n = 2
d = 1
seed = 1

[[edges]]
i = 1
j = 2
weight = [[2]]
"#;

    #[test]
    fn integers_parse_as_numbers() {
        let s = Scenario::parse(SMALL, "inline").unwrap();
        let built = s.build(Tolerances::default()).unwrap();
        assert_eq!(built.graph.weight(0, 1).unwrap().matrix()[(0, 0)], 2.0);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = SMALL.replace("seed = 1", "seed = 1\ncolour = \"red\"");
        assert!(matches!(Scenario::parse(&text, "inline"), Err(CliError::Parse { .. })));
    }

    #[test]
    fn errors_name_the_field() {
        let text = SMALL.replace("weight = [[2]]", "weight = [[2, 0]]");
        let err = Scenario::parse(&text, "inline").unwrap().build(Tolerances::default()).unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "edges[0].weight"));

        let text = SMALL.replace("j = 2", "j = 3");
        let err = Scenario::parse(&text, "inline").unwrap().build(Tolerances::default()).unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "edges[0]"));
    }

    #[test]
    fn seed_or_states_required() {
        let text = SMALL.replace("seed = 1\n", "");
        let err = Scenario::parse(&text, "inline").unwrap().build(Tolerances::default()).unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "seed"));
    }

    #[test]
    fn round_trip_keeps_the_graph() {
        let s = Scenario::parse(SMALL, "inline").unwrap();
        let again = Scenario::parse(&s.to_toml(), "round trip").unwrap();
        assert_eq!(s, again);
    }
}
