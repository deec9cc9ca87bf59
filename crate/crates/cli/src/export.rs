//! Result exporters: the run-result JSON document and DOT graph text.

use bnsl_core::{Dataset, LearnedNetwork, RunStats};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const RESULT_SCHEMA_VERSION: u32 = 1;

/// Full result document written by `bnsl learn`.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultJson {
    pub version: u32,
    pub dataset_fingerprint: String,
    pub algo: String,
    pub n: usize,
    pub p: usize,
    pub network: NetworkJson,
    pub stats: RunStats,
}

/// Network section: order and parents by variable name.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct NetworkJson {
    pub order: Vec<String>,
    pub parents: Vec<VariableParents>,
    pub total_log_score: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct VariableParents {
    pub variable: String,
    pub parents: Vec<String>,
}

pub fn result_json(
    dataset: &Dataset,
    algo: &str,
    network: &LearnedNetwork,
    stats: &RunStats,
) -> ResultJson {
    let name = |v: usize| dataset.meta()[v].name.clone();
    ResultJson {
        version: RESULT_SCHEMA_VERSION,
        dataset_fingerprint: fingerprint(dataset),
        algo: algo.to_string(),
        n: dataset.n(),
        p: dataset.p(),
        network: NetworkJson {
            order: network.order.iter().map(|&v| name(v)).collect(),
            parents: (0..dataset.p())
                .map(|v| VariableParents {
                    variable: name(v),
                    parents: network.parents[v].iter().map(name).collect(),
                })
                .collect(),
            total_log_score: network.total_log_score,
        },
        stats: stats.clone(),
    }
}

/// SHA-256 over the dataset's shape, metadata, and cells.
pub fn fingerprint(d: &Dataset) -> String {
    let mut hasher = Sha256::new();
    hasher.update((d.n() as u64).to_le_bytes());
    hasher.update((d.p() as u64).to_le_bytes());
    for (j, meta) in d.meta().iter().enumerate() {
        hasher.update(meta.name.as_bytes());
        hasher.update([0u8]);
        hasher.update(meta.arity.to_le_bytes());
        for &cell in d.column(j) {
            hasher.update(cell.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Deterministic DOT text: one node statement per variable (by index), one
/// edge statement per parent -> child pair, sorted.
pub fn export_dot(network: &LearnedNetwork, names: &[String]) -> String {
    let mut out = String::from("digraph bayesian_network {\n");
    for name in names {
        out.push_str(&format!("  \"{name}\";\n"));
    }
    for (parent, child) in network.edges() {
        out.push_str(&format!(
            "  \"{}\" -> \"{}\";\n",
            names[parent], names[child]
        ));
    }
    out.push_str("}\n");
    out
}
