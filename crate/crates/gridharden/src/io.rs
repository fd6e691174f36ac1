//! Case file parsing and serialization.
//!
//! A case is one human-readable TOML document carrying the network, the
//! stochastic scenarios, and both configuration blocks. The schema is
//! versioned through `format_version`; nodes are referenced by name in
//! the file and resolved to indices on load.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AlgorithmConfig, DduConfig, Dg, Ess, Line, Network, Node, Scenario, ScenarioSet,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("unsupported format_version {0} (this build reads version {FORMAT_VERSION})")]
    Version(u32),
    #[error("unknown node name {0:?}")]
    UnknownNode(String),
}

/// A fully resolved problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub name: String,
    pub notes: Option<String>,
    pub network: Network,
    pub scenarios: ScenarioSet,
    pub ddu: DduConfig,
    pub algorithm: AlgorithmConfig,
}

// --- on-disk schema -------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaseFile {
    format_version: u32,
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    notes: Option<String>,
    network: NetworkSpec,
    #[serde(rename = "scenario")]
    scenarios: Vec<Scenario>,
    ddu: DduConfig,
    #[serde(default)]
    algorithm: AlgorithmConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkSpec {
    substation: String,
    base_voltage: f64,
    horizon: usize,
    #[serde(rename = "node")]
    nodes: Vec<Node>,
    #[serde(rename = "line")]
    lines: Vec<LineSpec>,
    #[serde(rename = "dg", default)]
    dgs: Vec<DgSpec>,
    #[serde(rename = "ess", default)]
    ess: Vec<EssSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LineSpec {
    from: String,
    to: String,
    resistance: f64,
    reactance: f64,
    p_cap: f64,
    q_cap: f64,
    hardening_cost: f64,
    vulnerable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DgSpec {
    node: String,
    g_max: f64,
    g_min: f64,
    theta_min: f64,
    theta_max: f64,
    hardening_cost: f64,
    vulnerable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EssSpec {
    node: String,
    p_cap: f64,
    q_cap: f64,
    eta_dis: f64,
    capacity: f64,
}

fn resolve(names: &HashMap<String, usize>, name: &str) -> Result<usize, IoError> {
    names
        .get(name)
        .copied()
        .ok_or_else(|| IoError::UnknownNode(name.to_string()))
}

impl CaseFile {
    fn into_case(self) -> Result<Case, IoError> {
        if self.format_version != FORMAT_VERSION {
            return Err(IoError::Version(self.format_version));
        }
        let names: HashMap<String, usize> = self
            .network
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        let network = Network {
            substation: resolve(&names, &self.network.substation)?,
            nodes: self.network.nodes,
            lines: self
                .network
                .lines
                .iter()
                .map(|l| {
                    Ok(Line {
                        from: resolve(&names, &l.from)?,
                        to: resolve(&names, &l.to)?,
                        resistance: l.resistance,
                        reactance: l.reactance,
                        p_cap: l.p_cap,
                        q_cap: l.q_cap,
                        hardening_cost: l.hardening_cost,
                        vulnerable: l.vulnerable,
                    })
                })
                .collect::<Result<_, IoError>>()?,
            dgs: self
                .network
                .dgs
                .iter()
                .map(|d| {
                    Ok(Dg {
                        node: resolve(&names, &d.node)?,
                        g_max: d.g_max,
                        g_min: d.g_min,
                        theta_min: d.theta_min,
                        theta_max: d.theta_max,
                        hardening_cost: d.hardening_cost,
                        vulnerable: d.vulnerable,
                    })
                })
                .collect::<Result<_, IoError>>()?,
            ess: self
                .network
                .ess
                .iter()
                .map(|e| {
                    Ok(Ess {
                        node: resolve(&names, &e.node)?,
                        p_cap: e.p_cap,
                        q_cap: e.q_cap,
                        eta_dis: e.eta_dis,
                        capacity: e.capacity,
                    })
                })
                .collect::<Result<_, IoError>>()?,
            base_voltage: self.network.base_voltage,
            horizon: self.network.horizon,
        };
        Ok(Case {
            name: self.name,
            notes: self.notes,
            network,
            scenarios: ScenarioSet {
                scenarios: self.scenarios,
            },
            ddu: self.ddu,
            algorithm: self.algorithm,
        })
    }

    fn from_case(case: &Case) -> Self {
        let net = &case.network;
        let node_name = |i: usize| net.nodes[i].name.clone();
        CaseFile {
            format_version: FORMAT_VERSION,
            name: case.name.clone(),
            notes: case.notes.clone(),
            network: NetworkSpec {
                substation: node_name(net.substation),
                base_voltage: net.base_voltage,
                horizon: net.horizon,
                nodes: net.nodes.clone(),
                lines: net
                    .lines
                    .iter()
                    .map(|l| LineSpec {
                        from: node_name(l.from),
                        to: node_name(l.to),
                        resistance: l.resistance,
                        reactance: l.reactance,
                        p_cap: l.p_cap,
                        q_cap: l.q_cap,
                        hardening_cost: l.hardening_cost,
                        vulnerable: l.vulnerable,
                    })
                    .collect(),
                dgs: net
                    .dgs
                    .iter()
                    .map(|d| DgSpec {
                        node: node_name(d.node),
                        g_max: d.g_max,
                        g_min: d.g_min,
                        theta_min: d.theta_min,
                        theta_max: d.theta_max,
                        hardening_cost: d.hardening_cost,
                        vulnerable: d.vulnerable,
                    })
                    .collect(),
                ess: net
                    .ess
                    .iter()
                    .map(|e| EssSpec {
                        node: node_name(e.node),
                        p_cap: e.p_cap,
                        q_cap: e.q_cap,
                        eta_dis: e.eta_dis,
                        capacity: e.capacity,
                    })
                    .collect(),
            },
            scenarios: case.scenarios.scenarios.clone(),
            ddu: case.ddu,
            algorithm: case.algorithm.clone(),
        }
    }
}

pub fn from_toml(text: &str) -> Result<Case, IoError> {
    let file: CaseFile = toml::from_str(text)?;
    file.into_case()
}

pub fn to_toml(case: &Case) -> Result<String, IoError> {
    Ok(toml::to_string_pretty(&CaseFile::from_case(case))?)
}

pub fn load_case(path: &Path) -> Result<Case, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    from_toml(&text)
}

pub fn save_case(case: &Case, path: &Path) -> Result<(), IoError> {
    let text = to_toml(case)?;
    std::fs::write(path, text).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip_is_identity() {
        for case in [fixtures::desk6_case(), fixtures::ieee33_case()] {
            let text = to_toml(&case).unwrap();
            let back = from_toml(&text).unwrap();
            assert_eq!(back, case);
            // And a second trip from the serialized form.
            let again = from_toml(&to_toml(&back).unwrap()).unwrap();
            assert_eq!(again, back);
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let text = to_toml(&fixtures::desk6_case()).unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(from_toml(cut), Err(IoError::Parse(_))));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = to_toml(&fixtures::desk6_case()).unwrap();
        let bumped = text.replace("format_version = 1", "format_version = 99");
        assert!(matches!(from_toml(&bumped), Err(IoError::Version(99))));
    }

    #[test]
    fn unknown_node_is_rejected() {
        let text = to_toml(&fixtures::desk6_case()).unwrap();
        let broken = text.replace("substation = \"1\"", "substation = \"nope\"");
        assert!(matches!(from_toml(&broken), Err(IoError::UnknownNode(_))));
    }
}
