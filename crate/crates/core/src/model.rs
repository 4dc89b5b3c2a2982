//! Network model, edge state distributions and report types.
//!
//! Vertices are dense labels `1..=n`; vertex 1 is the source and vertex `n`
//! the sink. Edge `k` (zero-based here, `a_{k+1}` in the usual notation) is an
//! unordered vertex pair whose capacity is a random integer state in
//! `0..=U_k`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = u32;
pub type State = u32;

/// Tolerance on `Σ_s p_k[s] = 1` per edge.
pub const DIST_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed network document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("network needs at least 2 vertices, got {0}")]
    TooFewVertices(u32),
    #[error("network has no edges")]
    NoEdges,
    #[error("edge {index} [{u},{v}] references a vertex outside 1..={n}")]
    VertexOutOfRange {
        index: usize,
        u: Vertex,
        v: Vertex,
        n: u32,
    },
    #[error("edge {index} [{u},{v}] is a self-loop")]
    SelfLoop { index: usize, u: Vertex, v: Vertex },
    #[error("edge {index} [{u},{v}] duplicates edge {first}")]
    ParallelEdge {
        index: usize,
        first: usize,
        u: Vertex,
        v: Vertex,
    },
    #[error("distribution count {dists} does not match edge count {edges}")]
    DistributionCount { dists: usize, edges: usize },
    #[error("distribution of edge {edge} is empty")]
    EmptyDistribution { edge: usize },
    #[error("edge {edge} state {state} has negative probability {p}")]
    NegativeProbability { edge: usize, state: usize, p: f64 },
    #[error("edge {edge} state {state} has invalid probability {p}")]
    InvalidProbability { edge: usize, state: usize, p: f64 },
    #[error("distribution of edge {edge} sums to {sum}, expected 1 (use normalize to rescale)")]
    DistributionSum { edge: usize, sum: f64 },
    #[error("state vector has {got} coordinates, network has {expected} edges")]
    VectorLength { got: usize, expected: usize },
    #[error("state {state} of edge {edge} exceeds its largest state {max}")]
    StateOutOfBounds {
        edge: usize,
        state: State,
        max: State,
    },
}

/// Undirected simple graph with source 1 and sink `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: u32,
    edges: Vec<(Vertex, Vertex)>,
}

impl Network {
    /// Validates the edge list and keeps it in the given order.
    pub fn new(n: u32, edges: Vec<(Vertex, Vertex)>) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::TooFewVertices(n));
        }
        if edges.is_empty() {
            return Err(ModelError::NoEdges);
        }
        let mut seen: HashMap<(Vertex, Vertex), usize> = HashMap::with_capacity(edges.len());
        for (index, &(u, v)) in edges.iter().enumerate() {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(ModelError::VertexOutOfRange { index, u, v, n });
            }
            if u == v {
                return Err(ModelError::SelfLoop { index, u, v });
            }
            if let Some(&first) = seen.get(&(u.min(v), u.max(v))) {
                return Err(ModelError::ParallelEdge { index, first, u, v });
            }
            seen.insert((u.min(v), u.max(v)), index);
        }
        Ok(Self { n, edges })
    }

    pub fn vertex_count(&self) -> u32 {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn source(&self) -> Vertex {
        1
    }

    pub fn sink(&self) -> Vertex {
        self.n
    }

    /// Relabels edges in lexicographic `(min, max)` order, each stored as
    /// `(min, max)`. Returns the relabeled network and `order`, where new
    /// edge `k` is old edge `order[k]`.
    pub fn canonical(&self) -> (Network, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by_key(|&k| {
            let (u, v) = self.edges[k];
            (u.min(v), u.max(v))
        });
        let edges = order
            .iter()
            .map(|&k| {
                let (u, v) = self.edges[k];
                (u.min(v), u.max(v))
            })
            .collect();
        (Network { n: self.n, edges }, order)
    }

    pub fn is_canonical(&self) -> bool {
        self.edges.iter().all(|&(u, v)| u < v) && self.edges.windows(2).all(|w| w[0] < w[1])
    }
}

/// Per-edge probability lists over states `0..=U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStateDistribution {
    probs: Vec<Vec<f64>>,
}

impl EdgeStateDistribution {
    /// Validates every list. With `normalize` set, lists whose sum is off by
    /// more than the tolerance are rescaled instead of rejected.
    pub fn new(mut probs: Vec<Vec<f64>>, normalize: bool) -> Result<Self, ModelError> {
        for (edge, p) in probs.iter_mut().enumerate() {
            if p.is_empty() {
                return Err(ModelError::EmptyDistribution { edge });
            }
            for (state, &v) in p.iter().enumerate() {
                if v < 0.0 {
                    return Err(ModelError::NegativeProbability { edge, state, p: v });
                }
                if !v.is_finite() || v > 1.0 {
                    return Err(ModelError::InvalidProbability { edge, state, p: v });
                }
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > DIST_SUM_TOLERANCE {
                if !normalize || sum <= 0.0 {
                    return Err(ModelError::DistributionSum { edge, sum });
                }
                p.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Ok(Self { probs })
    }

    /// Same distribution on every one of `edges` edges: states `0..=max_state`,
    /// each with probability `1 / (max_state + 1)`.
    pub fn uniform(edges: usize, max_state: State) -> Self {
        let p = 1.0 / (f64::from(max_state) + 1.0);
        Self {
            probs: vec![vec![p; max_state as usize + 1]; edges],
        }
    }

    pub fn edge_count(&self) -> usize {
        self.probs.len()
    }

    /// `U_k`, the largest state of edge `k`.
    pub fn max_state(&self, edge: usize) -> State {
        (self.probs[edge].len() - 1) as State
    }

    pub fn max_states(&self) -> Vec<State> {
        (0..self.probs.len()).map(|k| self.max_state(k)).collect()
    }

    pub fn probs(&self, edge: usize) -> &[f64] {
        &self.probs[edge]
    }

    pub fn lists(&self) -> &[Vec<f64>] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, edge: usize, state: State) -> f64 {
        self.probs[edge][state as usize]
    }

    /// Reorders the lists so that new edge `k` carries old edge `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            probs: order.iter().map(|&k| self.probs[k].clone()).collect(),
        }
    }

    /// Checks that `x` has one coordinate per edge and respects every `U_k`.
    pub fn check(&self, x: &[State]) -> Result<(), ModelError> {
        if x.len() != self.probs.len() {
            return Err(ModelError::VectorLength {
                got: x.len(),
                expected: self.probs.len(),
            });
        }
        for (edge, &state) in x.iter().enumerate() {
            let max = self.max_state(edge);
            if state > max {
                return Err(ModelError::StateOutOfBounds { edge, state, max });
            }
        }
        Ok(())
    }
}

/// One joint assignment of a state to every edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<State>);

impl StateVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn as_slice(&self) -> &[State] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<State>> for StateVector {
    fn from(v: Vec<State>) -> Self {
        Self(v)
    }
}

impl std::ops::Deref for StateVector {
    type Target = [State];

    fn deref(&self) -> &[State] {
        &self.0
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Every edge of `net` gets states `0..=max_state` with equal probability.
pub fn uniform_distribution(net: &Network, max_state: State) -> EdgeStateDistribution {
    EdgeStateDistribution::uniform(net.edge_count(), max_state)
}

/// `Pr(X) = Π_k p_k[x_k]`.
pub fn pr_vector(x: &[State], dist: &EdgeStateDistribution) -> Result<f64, ModelError> {
    dist.check(x)?;
    Ok(pr_vector_unchecked(x, dist))
}

#[inline]
pub(crate) fn pr_vector_unchecked(x: &[State], dist: &EdgeStateDistribution) -> f64 {
    x.iter()
        .enumerate()
        .map(|(k, &s)| dist.prob(k, s))
        .product()
}

/// On-disk network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub n: u32,
    pub edges: Vec<[Vertex; 2]>,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preserve_order: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
}

impl NetworkDocument {
    pub fn from_model(net: &Network, dist: &EdgeStateDistribution) -> Self {
        Self {
            n: net.vertex_count(),
            edges: net.edges().iter().map(|&(u, v)| [u, v]).collect(),
            dist: dist.lists().to_vec(),
            preserve_order: None,
            normalize: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network document is always serializable")
    }

    pub fn into_model(self) -> Result<(Network, EdgeStateDistribution), ModelError> {
        let net = Network::new(self.n, self.edges.iter().map(|e| (e[0], e[1])).collect())?;
        if self.dist.len() != net.edge_count() {
            return Err(ModelError::DistributionCount {
                dists: self.dist.len(),
                edges: net.edge_count(),
            });
        }
        let dist = EdgeStateDistribution::new(self.dist, self.normalize.unwrap_or(false))?;
        if self.preserve_order.unwrap_or(false) {
            return Ok((net, dist));
        }
        let (canon, order) = net.canonical();
        let dist = dist.permuted(&order);
        Ok((canon, dist))
    }
}

/// Parses and validates a JSON network document. Edges are relabeled
/// canonically unless the document sets `"preserve_order": true`.
pub fn parse_network(text: &str) -> Result<(Network, EdgeStateDistribution), ModelError> {
    let doc: NetworkDocument = serde_json::from_str(text)?;
    doc.into_model()
}

/// The five-edge bridge network with its three-state example distributions.
pub fn bridge_example() -> (Network, EdgeStateDistribution) {
    let net = Network::new(4, vec![(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)])
        .expect("bridge topology is valid");
    let dist = EdgeStateDistribution::new(
        vec![
            vec![0.1, 0.2, 0.7],
            vec![0.05, 0.10, 0.85],
            vec![0.01, 0.19, 0.80],
            vec![0.10, 0.15, 0.75],
            vec![0.025, 0.075, 0.900],
        ],
        false,
    )
    .expect("bridge distributions are valid");
    (net, dist)
}

/// Output of an all-levels run. Level `d` lives at index `d - 1` of `r` and
/// `big_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllLevelsReport {
    pub d_max: u64,
    /// Probability that exactly `d` units can be sent.
    pub r: Vec<f64>,
    /// Probability that at least `d` units can be sent.
    #[serde(rename = "R")]
    pub big_r: Vec<f64>,
    pub n_total: u128,
    pub n_processed: u128,
    pub pr_disconnected: f64,
    pub x_fc: Option<StateVector>,
    pub workers: usize,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

impl AllLevelsReport {
    /// `r_d` for 1-based level `d`.
    pub fn r_level(&self, d: usize) -> f64 {
        self.r[d - 1]
    }

    /// `R_d` for 1-based level `d`.
    pub fn reliability(&self, d: usize) -> f64 {
        self.big_r[d - 1]
    }

    pub fn n_skipped(&self) -> u128 {
        self.n_total - self.n_processed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format '{other}', expected json or csv")),
        }
    }
}

/// Renders a report. Probabilities are printed with 9 decimals in CSV and
/// as shortest round-trip decimals in JSON.
pub fn serialize_report(rep: &AllLevelsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(rep).expect("report is always serializable");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from("d,r_d,R_d\n");
            for (i, (r, big_r)) in rep.r.iter().zip(&rep.big_r).enumerate() {
                s.push_str(&format!("{},{:.9},{:.9}\n", i + 1, r, big_r));
            }
            s.push_str(&format!("pr_disconnected,{:.9}\n", rep.pr_disconnected));
            s.push_str(&format!("n_total,{}\n", rep.n_total));
            s.push_str(&format!("n_processed,{}\n", rep.n_processed));
            s.push_str(&format!("elapsed_s,{:.3}\n", rep.elapsed));
            if let Some(x) = &rep.x_fc {
                s.push_str(&format!("x_fc,\"{x}\"\n"));
            }
            s
        }
    }
}

pub fn parse_report_json(text: &str) -> Result<AllLevelsReport, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BRIDGE_DOC: &str = r#"{
        "n": 4,
        "edges": [[1,2],[1,3],[2,3],[2,4],[3,4]],
        "dist": [[0.1,0.2,0.7],[0.05,0.10,0.85],[0.01,0.19,0.80],[0.10,0.15,0.75],[0.025,0.075,0.900]]
    }"#;

    #[test]
    fn parses_bridge_document() {
        let (net, dist) = parse_network(BRIDGE_DOC).unwrap();
        assert_eq!(net.vertex_count(), 4);
        assert_eq!(net.edge_count(), 5);
        assert_eq!(net.edges(), &[(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]);
        assert_eq!(dist.probs(4), &[0.025, 0.075, 0.9]);
        assert_eq!((net, dist), bridge_example());
    }

    #[test]
    fn single_edge() {
        let (net, dist) = parse_network(r#"{"n":2,"edges":[[1,2]],"dist":[[0.1,0.9]]}"#).unwrap();
        assert_eq!(net.vertex_count(), 2);
        assert_eq!(net.edge_count(), 1);
        assert_eq!(dist.max_state(0), 1);
    }

    #[test]
    fn rejects_self_loop() {
        let err =
            parse_network(r#"{"n":2,"edges":[[1,2],[1,1]],"dist":[[0,1],[0,1]]}"#).unwrap_err();
        assert!(matches!(
            err,
            ModelError::SelfLoop {
                index: 1,
                u: 1,
                v: 1
            }
        ));
        assert!(err.to_string().contains("[1,1]"));
    }

    #[test]
    fn rejects_parallel_edge_in_either_orientation() {
        let err = Network::new(3, vec![(1, 2), (2, 3), (2, 1)]).unwrap_err();
        assert!(matches!(
            err,
            ModelError::ParallelEdge {
                index: 2,
                first: 0,
                ..
            }
        ));
    }

    #[test]
    fn rejects_structural_errors() {
        assert!(matches!(
            Network::new(1, vec![]),
            Err(ModelError::TooFewVertices(1))
        ));
        assert!(matches!(Network::new(3, vec![]), Err(ModelError::NoEdges)));
        assert!(matches!(
            Network::new(3, vec![(1, 4)]),
            Err(ModelError::VertexOutOfRange { .. })
        ));
        assert!(matches!(
            parse_network("{\"n\": 3"),
            Err(ModelError::Malformed(_))
        ));
        assert!(matches!(
            parse_network(r#"{"n":2,"edges":[[1,2]],"dist":[]}"#),
            Err(ModelError::DistributionCount { .. })
        ));
        assert!(matches!(
            parse_network(r#"{"n":2,"edges":[[1,2]],"dist":[[0.5,0.5]],"bogus":1}"#),
            Err(ModelError::Malformed(_))
        ));
    }

    #[test]
    fn distribution_checks_and_normalize() {
        assert!(matches!(
            EdgeStateDistribution::new(vec![vec![0.5, 0.4]], false),
            Err(ModelError::DistributionSum { edge: 0, .. })
        ));
        assert!(matches!(
            EdgeStateDistribution::new(vec![vec![1.0, -0.2]], true),
            Err(ModelError::NegativeProbability { state: 1, .. })
        ));
        assert!(matches!(
            EdgeStateDistribution::new(vec![vec![]], false),
            Err(ModelError::EmptyDistribution { edge: 0 })
        ));
        assert!(matches!(
            EdgeStateDistribution::new(vec![vec![1.5, 0.0]], true),
            Err(ModelError::InvalidProbability { state: 0, .. })
        ));
        let d = EdgeStateDistribution::new(vec![vec![0.2, 0.2]], true).unwrap();
        assert_eq!(d.probs(0), &[0.5, 0.5]);
        // within tolerance: accepted unchanged
        let d = EdgeStateDistribution::new(vec![vec![0.3, 0.7 + 1e-12]], false).unwrap();
        assert_eq!(d.probs(0)[1], 0.7 + 1e-12);
    }

    #[test]
    fn preserve_order_keeps_labels() {
        let doc = r#"{"n":3,"edges":[[2,3],[1,2]],"dist":[[0.5,0.5],[0.1,0.2,0.7]],"preserve_order":true}"#;
        let (net, dist) = parse_network(doc).unwrap();
        assert_eq!(net.edges(), &[(2, 3), (1, 2)]);
        assert_eq!(dist.max_state(1), 2);

        let doc = r#"{"n":3,"edges":[[3,2],[1,2]],"dist":[[0.5,0.5],[0.1,0.2,0.7]]}"#;
        let (net, dist) = parse_network(doc).unwrap();
        assert_eq!(net.edges(), &[(1, 2), (2, 3)]);
        assert_eq!(dist.probs(0), &[0.1, 0.2, 0.7]);
        assert_eq!(dist.probs(1), &[0.5, 0.5]);
    }

    #[test]
    fn uniform_distributions() {
        let (bridge, _) = bridge_example();
        let d = uniform_distribution(&bridge, 4);
        for k in 0..5 {
            assert_eq!(d.probs(k), &[0.2; 5]);
        }
        let d = uniform_distribution(&bridge, 0);
        assert_eq!(d.max_states(), vec![0; 5]);
        assert_eq!(d.probs(3), &[1.0]);
        let single = Network::new(2, vec![(1, 2)]).unwrap();
        assert_eq!(uniform_distribution(&single, 1).probs(0), &[0.5, 0.5]);
    }

    #[test]
    fn vector_probabilities() {
        let (_, dist) = bridge_example();
        let p = pr_vector(&[1, 0, 0, 1, 0], &dist).unwrap();
        assert!((p - 3.75e-7).abs() < 1e-18);
        let p = pr_vector(&[2, 2, 2, 2, 2], &dist).unwrap();
        assert!((p - 0.3213).abs() < 1e-15);
        let certain = EdgeStateDistribution::new(vec![vec![0.0, 1.0], vec![1.0]], false).unwrap();
        assert_eq!(pr_vector(&[1, 0], &certain).unwrap(), 1.0);
        assert!(matches!(
            pr_vector(&[3, 0, 0, 0, 0], &dist),
            Err(ModelError::StateOutOfBounds {
                edge: 0,
                state: 3,
                max: 2
            })
        ));
        assert!(matches!(
            pr_vector(&[0, 0], &dist),
            Err(ModelError::VectorLength { .. })
        ));
    }

    fn sample_report() -> AllLevelsReport {
        AllLevelsReport {
            d_max: 2,
            r: vec![0.25, 0.5],
            big_r: vec![0.75, 0.5],
            n_total: 1u128 << 100,
            n_processed: 7,
            pr_disconnected: 0.25,
            x_fc: Some(StateVector(vec![1, 0, 1])),
            workers: 2,
            elapsed: 0.0123,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = serialize_report(&sample_report(), ReportFormat::Csv);
        let expected = format!(
            "d,r_d,R_d\n1,0.250000000,0.750000000\n2,0.500000000,0.500000000\n\
             pr_disconnected,0.250000000\nn_total,{}\nn_processed,7\nelapsed_s,0.012\nx_fc,\"(1,0,1)\"\n",
            1u128 << 100
        );
        assert_eq!(csv, expected);
    }

    #[test]
    fn empty_report_csv_is_header_and_footer() {
        let rep = AllLevelsReport {
            d_max: 0,
            r: vec![],
            big_r: vec![],
            n_total: 1,
            n_processed: 0,
            pr_disconnected: 1.0,
            x_fc: None,
            workers: 1,
            elapsed: 0.0,
        };
        let csv = serialize_report(&rep, ReportFormat::Csv);
        assert_eq!(
            csv,
            "d,r_d,R_d\npr_disconnected,1.000000000\nn_total,1\nn_processed,0\nelapsed_s,0.000\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let rep = sample_report();
        let text = serialize_report(&rep, ReportFormat::Json);
        assert!(text.contains("\"R\""));
        assert_eq!(parse_report_json(&text).unwrap(), rep);
        assert_eq!(serialize_report(&rep, ReportFormat::Json), text);
    }
}
