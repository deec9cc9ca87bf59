//! Complete discrete datasets: loading, validation, projection onto variable
//! subsets, and seeded synthetic generation for oracle tests.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use crate::error::{Error, Result};
use crate::subset_index::{VarSet, MAX_VARS};

/// Joint spaces up to this size are counted in a dense array; larger ones go
/// through an associative map.
pub const DENSE_SIGMA_LIMIT: u128 = 1 << 20;

/// Name and value-space size of one variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableMeta {
    pub name: String,
    /// Number of values the variable takes.
    pub arity: u32,
}

/// A complete discrete dataset: `n` rows over `p` variables, stored
/// column-major as category codes `0..arity`.
#[derive(Clone, Debug)]
pub struct Dataset {
    meta: Vec<VariableMeta>,
    columns: Vec<Vec<u32>>,
    n: usize,
}

impl Dataset {
    /// Builds a dataset from column vectors, validating every invariant.
    pub fn from_columns(meta: Vec<VariableMeta>, columns: Vec<Vec<u32>>) -> Result<Dataset> {
        if meta.is_empty() || meta.len() > MAX_VARS {
            return Err(Error::Parameter(format!(
                "variable count must be in 1..={MAX_VARS}, got {}",
                meta.len()
            )));
        }
        if meta.len() != columns.len() {
            return Err(Error::Parameter(format!(
                "{} meta entries but {} columns",
                meta.len(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::Parameter("dataset needs at least one row".into()));
        }
        let mut seen = HashMap::new();
        for (j, m) in meta.iter().enumerate() {
            if m.arity < 1 {
                return Err(Error::Parameter(format!(
                    "variable {} has arity 0",
                    m.name
                )));
            }
            if let Some(prev) = seen.insert(m.name.clone(), j) {
                return Err(Error::Parameter(format!(
                    "duplicate variable name {:?} (columns {prev} and {j})",
                    m.name
                )));
            }
            if columns[j].len() != n {
                return Err(Error::Parameter(format!(
                    "column {} has {} rows, expected {n}",
                    m.name,
                    columns[j].len()
                )));
            }
            if let Some((row, &v)) = columns[j].iter().enumerate().find(|(_, &v)| v >= m.arity) {
                return Err(Error::Ingestion {
                    row: row + 1,
                    column: m.name.clone(),
                    message: format!("code {v} out of range for arity {}", m.arity),
                });
            }
        }
        Ok(Dataset { meta, columns, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.meta.len()
    }

    pub fn meta(&self) -> &[VariableMeta] {
        &self.meta
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn arity(&self, j: usize) -> u32 {
        self.meta[j].arity
    }

    /// Index of the variable with the given name.
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.meta.iter().position(|m| m.name == name)
    }

    /// Product of member arities of `s` (sigma of the joint value space).
    pub fn sigma(&self, s: VarSet) -> Result<u128> {
        let mut sigma: u128 = 1;
        for v in s.iter() {
            sigma = sigma.checked_mul(self.meta[v].arity as u128).ok_or_else(|| {
                Error::Parameter("joint value space exceeds u128 range".into())
            })?;
        }
        Ok(sigma)
    }

    /// New dataset over the selected columns, in the order given.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Dataset> {
        for &j in indices {
            if j >= self.p() {
                return Err(Error::Parameter(format!(
                    "column index {j} out of range for p={}",
                    self.p()
                )));
            }
        }
        let meta = indices.iter().map(|&j| self.meta[j].clone()).collect();
        let columns = indices.iter().map(|&j| self.columns[j].clone()).collect();
        Dataset::from_columns(meta, columns)
    }

    /// Loads a header-first CSV of integer codes or category strings.
    ///
    /// Columns without a declared arity are label-encoded in first-appearance
    /// order, so their arity is the count of distinct observed values. A
    /// declared arity asserts code semantics: the column must then hold
    /// nonnegative integers strictly below it.
    pub fn load_csv(path: &Path, declared: Option<&HashMap<String, u32>>) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, declared)
    }

    /// [`Dataset::load_csv`] over an in-memory string.
    pub fn parse_csv(text: &str, declared: Option<&HashMap<String, u32>>) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = match reader.headers() {
            Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => {
                h.iter().map(|s| s.trim().to_string()).collect()
            }
            _ => {
                return Err(Error::Ingestion {
                    row: 0,
                    column: String::new(),
                    message: "empty file or missing header row".into(),
                })
            }
        };
        let p = headers.len();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); p];
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Ingestion {
                row: i + 1,
                column: String::new(),
                message: e.to_string(),
            })?;
            if record.len() != p {
                return Err(Error::Ingestion {
                    row: i + 1,
                    column: String::new(),
                    message: format!("ragged row: {} fields, expected {p}", record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                raw[j].push(field.trim().to_string());
            }
        }
        if raw[0].is_empty() {
            return Err(Error::Ingestion {
                row: 0,
                column: String::new(),
                message: "no data rows".into(),
            });
        }

        let mut meta = Vec::with_capacity(p);
        let mut columns = Vec::with_capacity(p);
        for (j, name) in headers.iter().enumerate() {
            let declared_arity = declared.and_then(|d| d.get(name)).copied();
            let (codes, arity) = encode_column(&raw[j], name, declared_arity)?;
            meta.push(VariableMeta {
                name: name.clone(),
                arity,
            });
            columns.push(codes);
        }
        Dataset::from_columns(meta, columns)
    }
}

fn encode_column(
    raw: &[String],
    name: &str,
    declared_arity: Option<u32>,
) -> Result<(Vec<u32>, u32)> {
    match declared_arity {
        Some(arity) => {
            // Declared domain: values are integer codes already.
            let mut codes = Vec::with_capacity(raw.len());
            for (i, field) in raw.iter().enumerate() {
                let code: u32 = field.parse().map_err(|_| Error::Ingestion {
                    row: i + 1,
                    column: name.to_string(),
                    message: format!(
                        "value {field:?} is not an integer code (arity {arity} was declared)"
                    ),
                })?;
                if code >= arity {
                    return Err(Error::Ingestion {
                        row: i + 1,
                        column: name.to_string(),
                        message: format!("observed code {code} >= declared arity {arity}"),
                    });
                }
                codes.push(code);
            }
            Ok((codes, arity))
        }
        None => {
            let mut mapping: HashMap<&str, u32> = HashMap::new();
            let mut codes = Vec::with_capacity(raw.len());
            for field in raw {
                let next = mapping.len() as u32;
                let code = *mapping.entry(field.as_str()).or_insert(next);
                codes.push(code);
            }
            Ok((codes, mapping.len() as u32))
        }
    }
}

/// Reads the optional `<basename>.meta.json` sidecar next to a CSV file:
/// a JSON object of variable name to declared arity.
pub fn read_arity_sidecar(csv_path: &Path) -> Result<Option<HashMap<String, u32>>> {
    let sidecar = csv_path.with_extension("meta.json");
    if !sidecar.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&sidecar)?;
    let parsed: HashMap<String, u32> = serde_json::from_str(&text).map_err(|e| Error::Ingestion {
        row: 0,
        column: sidecar.display().to_string(),
        message: format!("invalid arity sidecar: {e}"),
    })?;
    Ok(Some(parsed))
}

/// Occurrence counts of joint configurations of a variable subset.
///
/// Configuration codes are mixed-radix over the subset's members in ascending
/// variable-index order.
#[derive(Clone, Debug)]
pub struct ContingencyCounts {
    pub subset: VarSet,
    pub sigma: u128,
    counts: Counts,
    total: u64,
}

#[derive(Clone, Debug)]
enum Counts {
    Dense(Vec<u32>),
    Sparse(HashMap<u128, u32>),
}

impl ContingencyCounts {
    /// Tallies the joint configurations of `s` over all rows of `d`.
    pub fn compute(d: &Dataset, s: VarSet) -> Result<ContingencyCounts> {
        if s.is_empty() {
            return Err(Error::Parameter(
                "count_configurations needs a nonempty subset".into(),
            ));
        }
        if let Some(v) = s.iter().find(|&v| v >= d.p()) {
            return Err(Error::Parameter(format!(
                "subset member {v} out of range for p={}",
                d.p()
            )));
        }
        let sigma = d.sigma(s)?;
        let n = d.n();
        let counts = if sigma <= DENSE_SIGMA_LIMIT {
            let mut codes = vec![0u32; n];
            let mut stride: u32 = 1;
            for v in s.iter() {
                let col = d.column(v);
                for (code, &value) in codes.iter_mut().zip(col) {
                    *code += value * stride;
                }
                stride *= d.arity(v);
            }
            let mut dense = vec![0u32; sigma as usize];
            for &code in &codes {
                dense[code as usize] += 1;
            }
            Counts::Dense(dense)
        } else {
            let mut codes = vec![0u128; n];
            let mut stride: u128 = 1;
            for v in s.iter() {
                let col = d.column(v);
                for (code, &value) in codes.iter_mut().zip(col) {
                    *code += value as u128 * stride;
                }
                stride *= d.arity(v) as u128;
            }
            let mut sparse: HashMap<u128, u32> = HashMap::new();
            for &code in &codes {
                *sparse.entry(code).or_insert(0) += 1;
            }
            Counts::Sparse(sparse)
        };
        Ok(ContingencyCounts {
            subset: s,
            sigma,
            counts,
            total: n as u64,
        })
    }

    /// Sum of all counts (the dataset's row count).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, code: u128) -> u32 {
        match &self.counts {
            Counts::Dense(v) => v.get(code as usize).copied().unwrap_or(0),
            Counts::Sparse(m) => m.get(&code).copied().unwrap_or(0),
        }
    }

    /// Nonzero (configuration, count) pairs in unspecified order.
    pub fn nonzero(&self) -> Box<dyn Iterator<Item = (u128, u32)> + '_> {
        match &self.counts {
            Counts::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(i, &c)| (i as u128, c)),
            ),
            Counts::Sparse(m) => Box::new(m.iter().map(|(&k, &v)| (k, v))),
        }
    }

    pub fn nonzero_len(&self) -> usize {
        match &self.counts {
            Counts::Dense(v) => v.iter().filter(|&&c| c > 0).count(),
            Counts::Sparse(m) => m.len(),
        }
    }
}

/// Ground-truth network used by the synthetic generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrueDag {
    /// Ancestral sampling order (upstream first).
    pub order: Vec<usize>,
    /// Parent set per variable id.
    pub parents: Vec<VarSet>,
}

impl TrueDag {
    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|s| s.len()).sum()
    }
}

/// Samples a random DAG with Dirichlet(1,..,1) conditional tables and draws
/// `n` ancestral samples from it. Deterministic for a fixed seed.
pub fn generate_synthetic(
    seed: u64,
    p: usize,
    n: usize,
    max_arity: u32,
    edge_prob: f64,
) -> Result<(Dataset, TrueDag)> {
    if p == 0 || p > MAX_VARS {
        return Err(Error::Parameter(format!(
            "p must be in 1..={MAX_VARS}, got {p}"
        )));
    }
    if n == 0 {
        return Err(Error::Parameter("sample count n must be >= 1".into()));
    }
    if !(2..=4).contains(&max_arity) {
        return Err(Error::Parameter(format!(
            "max_arity must be in 2..=4, got {max_arity}"
        )));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::Parameter(format!(
            "edge_prob must be in [0,1], got {edge_prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let arities: Vec<u32> = (0..p).map(|_| rng.gen_range(2..=max_arity)).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);

    let mut parents = vec![VarSet::EMPTY; p];
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.gen_bool(edge_prob) {
                parents[order[j]] = parents[order[j]].insert(order[i]);
            }
        }
    }

    // One conditional table per variable: rows are parent configurations in
    // ascending-variable-index mixed radix, columns the variable's values.
    let mut cpts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(p);
    for v in 0..p {
        let rows: usize = parents[v]
            .iter()
            .map(|u| arities[u] as usize)
            .product::<usize>();
        let dirichlet = Dirichlet::new(&vec![1.0f64; arities[v] as usize])
            .expect("arity >= 2 always yields a valid Dirichlet");
        let table = (0..rows.max(1))
            .map(|_| dirichlet.sample(&mut rng))
            .collect();
        cpts.push(table);
    }

    let mut columns: Vec<Vec<u32>> = vec![Vec::with_capacity(n); p];
    let mut row = vec![0u32; p];
    for _ in 0..n {
        for &v in &order {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for u in parents[v].iter() {
                idx += row[u] as usize * stride;
                stride *= arities[u] as usize;
            }
            let probs = &cpts[v][idx];
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut value = probs.len() - 1;
            for (c, pr) in probs.iter().enumerate() {
                acc += pr;
                if u < acc {
                    value = c;
                    break;
                }
            }
            row[v] = value as u32;
        }
        for v in 0..p {
            columns[v].push(row[v]);
        }
    }

    let meta = (0..p)
        .map(|v| VariableMeta {
            name: format!("V{v:02}"),
            arity: arities[v],
        })
        .collect();
    let dataset = Dataset::from_columns(meta, columns)?;
    Ok((dataset, TrueDag { order, parents }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_dataset() -> Dataset {
        // The two five-value sequences used throughout the scoring tests:
        // x = (0,1,0,1,1), y = (0,0,1,1,1).
        Dataset::from_columns(
            vec![
                VariableMeta {
                    name: "X".into(),
                    arity: 2,
                },
                VariableMeta {
                    name: "Y".into(),
                    arity: 2,
                },
            ],
            vec![vec![0, 1, 0, 1, 1], vec![0, 0, 1, 1, 1]],
        )
        .unwrap()
    }

    #[test]
    fn parse_example_csv() {
        let d = Dataset::parse_csv("X,Y\n0,0\n1,0\n0,1\n1,1\n1,1\n", None).unwrap();
        assert_eq!(d.n(), 5);
        assert_eq!(d.p(), 2);
        assert_eq!(d.arity(0), 2);
        assert_eq!(d.arity(1), 2);
        assert_eq!(d.column(0), &[0, 1, 0, 1, 1]);
        assert_eq!(d.column(1), &[0, 0, 1, 1, 1]);
    }

    #[test]
    fn constant_column_has_arity_one() {
        let d = Dataset::parse_csv("A\nfoo\nfoo\nfoo\n", None).unwrap();
        assert_eq!(d.arity(0), 1);
        assert_eq!(d.column(0), &[0, 0, 0]);
    }

    #[test]
    fn declared_arity_is_retained_for_sparse_codes() {
        let mut declared = HashMap::new();
        declared.insert("A".to_string(), 4u32);
        let d = Dataset::parse_csv("A\n0\n2\n0\n", Some(&declared)).unwrap();
        assert_eq!(d.arity(0), 4);
        assert_eq!(d.column(0), &[0, 2, 0]);
    }

    #[test]
    fn declared_arity_below_observed_code_is_ingestion_error() {
        let mut declared = HashMap::new();
        declared.insert("A".to_string(), 2u32);
        let err = Dataset::parse_csv("A\n0\n2\n", Some(&declared)).unwrap_err();
        match err {
            Error::Ingestion { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "A");
            }
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_and_empty_inputs_are_errors() {
        assert!(matches!(
            Dataset::parse_csv("X,Y\n0,1\n0\n", None).unwrap_err(),
            Error::Ingestion { row: 2, .. }
        ));
        assert!(Dataset::parse_csv("", None).is_err());
        assert!(Dataset::parse_csv("X,Y\n", None).is_err());
    }

    #[test]
    fn string_labels_encode_in_first_appearance_order() {
        let d = Dataset::parse_csv("A\nhigh\nlow\nhigh\nmid\n", None).unwrap();
        assert_eq!(d.column(0), &[0, 1, 0, 2]);
        assert_eq!(d.arity(0), 3);
    }

    #[test]
    fn counts_for_single_variable() {
        let d = example_dataset();
        let c = ContingencyCounts::compute(&d, VarSet::from_members([0])).unwrap();
        assert_eq!(c.sigma, 2);
        assert_eq!(c.get(0), 2);
        assert_eq!(c.get(1), 3);
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn counts_for_joint_pair() {
        let d = example_dataset();
        let c = ContingencyCounts::compute(&d, VarSet::from_members([0, 1])).unwrap();
        assert_eq!(c.sigma, 4);
        // code = x + 2y
        assert_eq!(c.get(0), 1); // (0,0)
        assert_eq!(c.get(1), 1); // (1,0)
        assert_eq!(c.get(2), 1); // (0,1)
        assert_eq!(c.get(3), 2); // (1,1)
        assert_eq!(c.nonzero_len(), 4);
    }

    #[test]
    fn identical_rows_collapse_to_one_configuration() {
        let d = Dataset::from_columns(
            vec![
                VariableMeta {
                    name: "A".into(),
                    arity: 3,
                },
                VariableMeta {
                    name: "B".into(),
                    arity: 2,
                },
            ],
            vec![vec![2, 2, 2, 2], vec![1, 1, 1, 1]],
        )
        .unwrap();
        let c = ContingencyCounts::compute(&d, VarSet::from_members([0, 1])).unwrap();
        assert_eq!(c.nonzero_len(), 1);
        assert_eq!(c.get(2 + 3), 4);
    }

    #[test]
    fn sparse_backend_engages_above_dense_limit() {
        // 21 binary columns: sigma = 2^21 > 2^20.
        let p = 21;
        let meta = (0..p)
            .map(|j| VariableMeta {
                name: format!("V{j}"),
                arity: 2,
            })
            .collect();
        let columns = (0..p).map(|j| vec![(j % 2) as u32, 1, 0]).collect();
        let d = Dataset::from_columns(meta, columns).unwrap();
        let full = VarSet::full(p);
        let c = ContingencyCounts::compute(&d, full).unwrap();
        assert_eq!(c.sigma, 1 << 21);
        assert!(matches!(c.counts, Counts::Sparse(_)));
        assert_eq!(c.total(), 3);
        assert_eq!(c.nonzero().map(|(_, v)| u64::from(v)).sum::<u64>(), 3);
    }

    #[test]
    fn synthetic_is_deterministic_and_respects_flags() {
        let (d1, g1) = generate_synthetic(7, 5, 40, 3, 0.5).unwrap();
        let (d2, g2) = generate_synthetic(7, 5, 40, 3, 0.5).unwrap();
        assert_eq!(g1, g2);
        for j in 0..5 {
            assert_eq!(d1.column(j), d2.column(j));
            assert_eq!(d1.meta()[j], d2.meta()[j]);
        }
        let (_, g0) = generate_synthetic(3, 6, 10, 2, 0.0).unwrap();
        assert_eq!(g0.edge_count(), 0);
        assert!(generate_synthetic(1, 3, 0, 2, 0.5).is_err());
        assert!(generate_synthetic(1, 3, 5, 9, 0.5).is_err());
    }

    #[test]
    fn synthetic_parents_precede_children_in_order() {
        let (_, g) = generate_synthetic(11, 8, 5, 2, 0.6).unwrap();
        let position: HashMap<usize, usize> =
            g.order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for (v, pars) in g.parents.iter().enumerate() {
            for u in pars.iter() {
                assert!(position[&u] < position[&v]);
            }
        }
    }

    proptest! {
        #[test]
        fn projection_consistency(seed in 0u64..500, n in 1usize..60) {
            let (d, _) = generate_synthetic(seed, 4, n, 3, 0.4).unwrap();
            let s = VarSet::from_members([0, 1, 2]);
            let s_small = VarSet::from_members([0, 2]);
            let big = ContingencyCounts::compute(&d, s).unwrap();
            let small = ContingencyCounts::compute(&d, s_small).unwrap();
            // Marginalize `big` over variable 1 and compare against `small`.
            let a0 = d.arity(0) as u128;
            let a1 = d.arity(1) as u128;
            let mut marginal: HashMap<u128, u64> = HashMap::new();
            for (code, c) in big.nonzero() {
                let v0 = code % a0;
                let v2 = code / (a0 * a1);
                *marginal.entry(v0 + v2 * a0).or_insert(0) += u64::from(c);
            }
            for (code, c) in small.nonzero() {
                prop_assert_eq!(marginal.get(&code).copied().unwrap_or(0), u64::from(c));
            }
            prop_assert_eq!(big.total(), small.total());
        }

        #[test]
        fn counts_are_row_permutation_invariant(seed in 0u64..500) {
            let (d, _) = generate_synthetic(seed, 3, 30, 2, 0.5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
            let mut perm: Vec<usize> = (0..d.n()).collect();
            perm.shuffle(&mut rng);
            let shuffled = Dataset::from_columns(
                d.meta().to_vec(),
                (0..d.p())
                    .map(|j| perm.iter().map(|&r| d.column(j)[r]).collect())
                    .collect(),
            )
            .unwrap();
            let s = VarSet::from_members([0, 1, 2]);
            let a = ContingencyCounts::compute(&d, s).unwrap();
            let b = ContingencyCounts::compute(&shuffled, s).unwrap();
            for code in 0..a.sigma {
                prop_assert_eq!(a.get(code), b.get(code));
            }
        }
    }
}
