//! Mesh topology, route discovery, and the multihop composition laws.
//!
//! Quantum information moves between nodes only where a classical and a
//! quantum link co-exist, so route discovery searches the dual-flagged
//! subgraph: a breadth-first request flood fixes the hop distance, and the
//! deterministic reply walk picks the lexicographically smallest shortest
//! path.

use crate::channels::NoiseKind;
use crate::states::{ClusterParams, InputParams};
use crate::teleport::{
    self, BranchRecord, BsmOutcome, PovmOutcome, PovmParams, TeleportError, DEFAULT_NOISY_QUBITS,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: node `{id}` is not declared")]
    DanglingNode { line: usize, id: String },
    #[error("line {line}: duplicate node `{id}`")]
    DuplicateNode { line: usize, id: String },
    #[error("line {line}: duplicate link {a} -- {b}")]
    DuplicateLink { line: usize, a: String, b: String },
    #[error("line {line}: link from `{id}` to itself")]
    SelfLoop { line: usize, id: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("node `{0}` does not exist")]
    UnknownNode(String),
    #[error("source and destination are the same node `{0}`")]
    SameEndpoints(String),
    #[error("no route with co-existing classical and quantum links from `{src}` to `{dst}`")]
    NotFound { src: String, dst: String },
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Teleport(#[from] TeleportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    Destination,
    Route,
    EdgeRoute,
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Source => "source",
            NodeKind::Destination => "destination",
            NodeKind::Route => "route",
            NodeKind::EdgeRoute => "edge-route",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub classical: bool,
    pub quantum: bool,
}

impl Link {
    pub fn is_dual(&self) -> bool {
        self.classical && self.quantum
    }
}

#[derive(Debug, Clone, Default)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
}

impl Topology {
    /// Parse the line-based format:
    ///
    /// ```text
    /// # comment
    /// node <id> [source|destination|route|edge-route]
    /// edge <id> <id> <q|c|qc>
    /// ```
    pub fn parse(text: &str) -> Result<Topology, TopologyError> {
        let mut nodes: Vec<Node> = Vec::new();
        let mut links: Vec<Link> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split_whitespace();
            match parts.next() {
                Some("node") => {
                    let id = parts
                        .next()
                        .ok_or_else(|| TopologyError::Syntax {
                            line,
                            message: "node needs an id".into(),
                        })?
                        .to_string();
                    let kind = match parts.next() {
                        None => NodeKind::Route,
                        Some("source") => NodeKind::Source,
                        Some("destination") => NodeKind::Destination,
                        Some("route") => NodeKind::Route,
                        Some("edge-route") => NodeKind::EdgeRoute,
                        Some(other) => {
                            return Err(TopologyError::Syntax {
                                line,
                                message: format!("unknown node kind `{other}`"),
                            })
                        }
                    };
                    if nodes.iter().any(|n| n.id == id) {
                        return Err(TopologyError::DuplicateNode { line, id });
                    }
                    nodes.push(Node { id, kind });
                }
                Some("edge") => {
                    let a = parts
                        .next()
                        .ok_or_else(|| TopologyError::Syntax {
                            line,
                            message: "edge needs two node ids".into(),
                        })?
                        .to_string();
                    let b = parts
                        .next()
                        .ok_or_else(|| TopologyError::Syntax {
                            line,
                            message: "edge needs two node ids".into(),
                        })?
                        .to_string();
                    let flags = parts.next().ok_or_else(|| TopologyError::Syntax {
                        line,
                        message: "edge needs a channel flag (q, c or qc)".into(),
                    })?;
                    let (classical, quantum) = match flags {
                        "q" => (false, true),
                        "c" => (true, false),
                        "qc" | "cq" => (true, true),
                        other => {
                            return Err(TopologyError::Syntax {
                                line,
                                message: format!("unknown channel flag `{other}`"),
                            })
                        }
                    };
                    for id in [&a, &b] {
                        if !nodes.iter().any(|n| &n.id == id) {
                            return Err(TopologyError::DanglingNode {
                                line,
                                id: id.clone(),
                            });
                        }
                    }
                    if a == b {
                        return Err(TopologyError::SelfLoop { line, id: a });
                    }
                    if links
                        .iter()
                        .any(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a))
                    {
                        return Err(TopologyError::DuplicateLink { line, a, b });
                    }
                    links.push(Link {
                        a,
                        b,
                        classical,
                        quantum,
                    });
                }
                Some(other) => {
                    return Err(TopologyError::Syntax {
                        line,
                        message: format!("unknown directive `{other}`"),
                    })
                }
                None => unreachable!(),
            }
        }
        Ok(Topology { nodes, links })
    }

    pub fn has_node(&self, id: &str) -> bool {
        self.nodes.iter().any(|n| n.id == id)
    }

    /// Neighbors over dual-flagged links, sorted by id for determinism.
    fn dual_neighbors(&self) -> HashMap<&str, Vec<&str>> {
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for node in &self.nodes {
            adj.insert(node.id.as_str(), Vec::new());
        }
        for link in self.links.iter().filter(|l| l.is_dual()) {
            adj.get_mut(link.a.as_str()).unwrap().push(link.b.as_str());
            adj.get_mut(link.b.as_str()).unwrap().push(link.a.as_str());
        }
        for neighbors in adj.values_mut() {
            neighbors.sort_unstable();
        }
        adj
    }
}

/// A discovered hop sequence from source to destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub hops: Vec<String>,
}

impl Route {
    /// Number of hops N (one less than the node count).
    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }
}

/// Shortest path over links that carry both channel types. The request flood
/// is a breadth-first expansion from the destination; the reply walk starts
/// at the source and always takes the smallest-id neighbor that still
/// shortens the remaining distance, which yields the lexicographically
/// smallest shortest hop sequence.
pub fn discover_route(topology: &Topology, src: &str, dst: &str) -> Result<Route, RouteError> {
    for id in [src, dst] {
        if !topology.has_node(id) {
            return Err(RouteError::UnknownNode(id.to_string()));
        }
    }
    if src == dst {
        return Err(RouteError::SameEndpoints(src.to_string()));
    }
    let adj = topology.dual_neighbors();
    let mut dist: HashMap<&str, usize> = HashMap::new();
    dist.insert(dst, 0);
    let mut queue = VecDeque::from([dst]);
    while let Some(cur) = queue.pop_front() {
        let d = dist[cur];
        for &next in &adj[cur] {
            if !dist.contains_key(next) {
                dist.insert(next, d + 1);
                queue.push_back(next);
            }
        }
    }
    let Some(&total) = dist.get(src) else {
        return Err(RouteError::NotFound {
            src: src.to_string(),
            dst: dst.to_string(),
        });
    };
    let mut hops = vec![src.to_string()];
    let mut cur = src;
    for remaining in (0..total).rev() {
        let next = adj[cur]
            .iter()
            .find(|&&n| dist.get(n) == Some(&remaining))
            .expect("breadth-first distances admit a descent");
        hops.push(next.to_string());
        cur = next;
    }
    Ok(Route { hops })
}

/// Total multihop success probability 1 - (1 - 1/(2 rho gamma))^N. At full
/// damping the dressed coefficients vanish and gamma diverges; the law's
/// continuous limit there is zero.
pub fn total_success_prob(
    noise: NoiseKind,
    cluster: &ClusterParams,
    rho_param: f64,
    hops: u32,
) -> Result<f64, TeleportError> {
    if !(rho_param > 0.0) {
        return Err(TeleportError::BadPovmParams);
    }
    let p = if noise.dressing() == 0.0 {
        0.0
    } else {
        teleport::hop_success_prob(&PovmParams::for_hop(cluster, noise, rho_param)?)
    };
    Ok(at_least_one(p, hops))
}

/// 1 - (1 - p)^n evaluated through log space so saturation toward 1 keeps
/// monotone behavior as long as f64 can express it.
pub fn at_least_one(p: f64, n: u32) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    -f64::exp_m1(n as f64 * f64::ln_1p(-p))
}

/// Two-hop success probability as published: (1/(rho gamma))(1 - 1/(4 rho gamma)).
pub fn two_hop_success_prob(params: &PovmParams) -> f64 {
    let rg = params.rho_param * params.gamma();
    (1.0 / rg) * (1.0 - 1.0 / (4.0 * rg))
}

/// Total multihop fidelity: channel bracket to the power 2N, times the
/// squared input weight.
pub fn total_fidelity(
    noise: NoiseKind,
    input: &InputParams,
    cluster: &ClusterParams,
    hops: u32,
) -> f64 {
    let w = input.weight();
    noise.fidelity_bracket(cluster).powi(2 * hops as i32) * w * w
}

/// How per-hop outcomes combine into a trial outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    /// Every hop must land the reference Bell outcome with a conclusive POVM.
    SequentialAllHops,
    /// At least one hop must succeed; this is the composition under which
    /// the published total-success law is an identity.
    AnyHopSuccess,
}

impl Semantics {
    pub fn label(&self) -> &'static str {
        match self {
            Semantics::SequentialAllHops => "sequential-all-hops",
            Semantics::AnyHopSuccess => "any-hop-success",
        }
    }
}

/// Monte Carlo configuration. Trials are split into fixed-size chunks, each
/// chunk derives its own generator from the base seed, and chunk results are
/// merged in order, so the outcome is identical for any worker count.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub semantics: Semantics,
    pub trials: u64,
    pub base_seed: u64,
    pub rho_param: f64,
    pub noisy_qubits: Vec<usize>,
}

impl SimulationConfig {
    pub fn new(semantics: Semantics, trials: u64, base_seed: u64) -> Self {
        Self {
            semantics,
            trials,
            base_seed,
            rho_param: 1.0,
            noisy_qubits: DEFAULT_NOISY_QUBITS.to_vec(),
        }
    }
}

const CHUNK_TRIALS: u64 = 4096;

/// Outcome of a single end-to-end trial.
#[derive(Debug, Clone)]
pub struct MultihopResult {
    pub success: bool,
    /// Hops actually attempted; sequential trials stop at the first failure.
    pub hops_attempted: u32,
    pub per_hop_records: Vec<(BsmOutcome, PovmOutcome)>,
    /// Product of the delivered fidelities of successful hops; present only
    /// when the trial succeeded.
    pub fidelity: Option<f64>,
}

/// Run one trial over the precomputed branch table.
pub fn run_trial<R: Rng + ?Sized>(
    table: &[BranchRecord],
    hops: u32,
    semantics: Semantics,
    rng: &mut R,
) -> MultihopResult {
    let total_weight: f64 = table.iter().map(|b| b.cptp_weight).sum();
    let reference = BsmOutcome::reference();
    let mut per_hop_records = Vec::with_capacity(hops as usize);
    let mut ok_hops = 0u32;
    let mut fidelity = 1.0f64;
    for _ in 0..hops {
        let hop = sample_hop(table, reference, total_weight, rng);
        per_hop_records.push((hop.bsm, hop.povm));
        if hop.success {
            ok_hops += 1;
            fidelity *= hop.fidelity;
        } else if semantics == Semantics::SequentialAllHops {
            break;
        }
    }
    let success = match semantics {
        Semantics::SequentialAllHops => ok_hops == hops,
        Semantics::AnyHopSuccess => ok_hops >= 1,
    };
    MultihopResult {
        success,
        hops_attempted: per_hop_records.len() as u32,
        per_hop_records,
        fidelity: if success { Some(fidelity) } else { None },
    }
}

/// Aggregate statistics of a multihop run.
#[derive(Debug, Clone)]
pub struct MultihopStats {
    pub route: Route,
    pub hops: u32,
    pub semantics: Semantics,
    pub trials: u64,
    pub success_count: u64,
    pub empirical_rate: f64,
    pub sigma3: f64,
    /// The published at-least-one law for this hop count.
    pub closed_form_total: f64,
    /// Product composition: every hop succeeds.
    pub product_law: f64,
    pub mean_fidelity: Option<f64>,
    pub per_hop_success: f64,
    pub branch_table: Vec<BranchRecord>,
}

/// Per-trial, per-hop sampling over the exact one-hop table. Each hop is an
/// independent attempt on the same input (corrections relayed classically);
/// a trial's fidelity is the product over its successful hops.
pub fn simulate_multihop(
    topology: &Topology,
    src: &str,
    dst: &str,
    input: &InputParams,
    cluster: &ClusterParams,
    noise: NoiseKind,
    config: &SimulationConfig,
) -> Result<MultihopStats, SimulationError> {
    let route = discover_route(topology, src, dst)?;
    let hops = route.hop_count() as u32;
    let table = teleport::hop_table(input, cluster, noise, &config.noisy_qubits, config.rho_param)?;

    let chunk_count = config.trials.div_ceil(CHUNK_TRIALS);
    let chunks: Vec<(u64, u64)> = (0..chunk_count)
        .map(|i| {
            let start = i * CHUNK_TRIALS;
            let len = CHUNK_TRIALS.min(config.trials - start);
            (i, len)
        })
        .collect();

    #[derive(Default)]
    struct ChunkStats {
        successes: u64,
        fidelity_sum: f64,
    }

    let results: Vec<ChunkStats> = chunks
        .par_iter()
        .map(|&(index, len)| {
            let mut rng = chunk_rng(config.base_seed, index);
            let mut stats = ChunkStats::default();
            for _ in 0..len {
                let trial = run_trial(&table, hops, config.semantics, &mut rng);
                if trial.success {
                    stats.successes += 1;
                    stats.fidelity_sum += trial.fidelity.unwrap_or(0.0);
                }
            }
            stats
        })
        .collect();

    let mut success_count = 0u64;
    let mut fidelity_sum = 0.0f64;
    for chunk in &results {
        success_count += chunk.successes;
        fidelity_sum += chunk.fidelity_sum;
    }

    let params = PovmParams::for_hop(cluster, noise, config.rho_param)?;
    let per_hop_success = teleport::hop_success_prob(&params);
    let closed_form_total = at_least_one(per_hop_success, hops);
    let product_law = per_hop_success.powi(hops as i32);
    let expected = match config.semantics {
        Semantics::SequentialAllHops => product_law,
        Semantics::AnyHopSuccess => closed_form_total,
    };
    let sigma3 = 3.0 * (expected * (1.0 - expected) / config.trials as f64).sqrt();
    Ok(MultihopStats {
        route,
        hops,
        semantics: config.semantics,
        trials: config.trials,
        success_count,
        empirical_rate: success_count as f64 / config.trials as f64,
        sigma3,
        closed_form_total,
        product_law,
        mean_fidelity: if success_count > 0 {
            Some(fidelity_sum / success_count as f64)
        } else {
            None
        },
        per_hop_success,
        branch_table: table,
    })
}

fn chunk_rng(base_seed: u64, chunk_index: u64) -> ChaCha8Rng {
    let mixed = base_seed ^ chunk_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mixed)
}

struct HopSample {
    bsm: BsmOutcome,
    povm: PovmOutcome,
    success: bool,
    fidelity: f64,
}

fn sample_hop<R: Rng + ?Sized>(
    table: &[BranchRecord],
    reference: BsmOutcome,
    total_weight: f64,
    rng: &mut R,
) -> HopSample {
    let mut draw = rng.gen::<f64>() * total_weight;
    let mut chosen = table.len() - 1;
    for (i, b) in table.iter().enumerate() {
        if draw < b.cptp_weight {
            chosen = i;
            break;
        }
        draw -= b.cptp_weight;
    }
    let record = &table[chosen];
    // branches without a usable recovery measurement are inconclusive
    let Some(joint) = record.povm_joint else {
        return HopSample {
            bsm: record.outcome,
            povm: PovmOutcome::P3,
            success: false,
            fidelity: 0.0,
        };
    };
    let mut povm_draw = rng.gen::<f64>() * record.cptp_weight;
    let mut povm_index = 2usize;
    for (i, w) in joint.iter().enumerate() {
        if povm_draw < *w {
            povm_index = i;
            break;
        }
        povm_draw -= w;
    }
    let povm = [PovmOutcome::P1, PovmOutcome::P2, PovmOutcome::P3][povm_index];
    let success = record.outcome == reference && povm_index < 2;
    HopSample {
        bsm: record.outcome,
        povm,
        success,
        fidelity: if success {
            record.fidelity.map_or(0.0, |f| f[povm_index])
        } else {
            0.0
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const CHAIN: &str = "node S source\nnode E route\nnode T destination\nedge S E qc\nedge E T qc\n";

    fn amp(xi: f64) -> NoiseKind {
        NoiseKind::amplitude_damping(xi).unwrap()
    }

    #[test]
    fn parse_minimal_topology() {
        let t = Topology::parse("node S\nnode E\nedge S E qc\n").unwrap();
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.links.len(), 1);
        assert!(t.links[0].is_dual());
        assert_eq!(t.nodes[0].kind, NodeKind::Route);
    }

    #[test]
    fn parse_rejects_dangling_edge() {
        let err = Topology::parse("node S\nedge S D qc\n").unwrap_err();
        assert_eq!(
            err,
            TopologyError::DanglingNode {
                line: 2,
                id: "D".into()
            }
        );
    }

    #[test]
    fn parse_rejects_duplicates_and_self_loops() {
        assert!(matches!(
            Topology::parse("node S\nnode S\n").unwrap_err(),
            TopologyError::DuplicateNode { line: 2, .. }
        ));
        assert!(matches!(
            Topology::parse("node S\nnode E\nedge S E q\nedge E S c\n").unwrap_err(),
            TopologyError::DuplicateLink { line: 4, .. }
        ));
        assert!(matches!(
            Topology::parse("node S\nedge S S qc\n").unwrap_err(),
            TopologyError::SelfLoop { line: 2, .. }
        ));
    }

    #[test]
    fn parse_reports_line_numbers_for_bad_syntax() {
        let err = Topology::parse("node S\n\n# fine\nedge S\n").unwrap_err();
        assert!(matches!(err, TopologyError::Syntax { line: 4, .. }));
    }

    #[test]
    fn chain_route_has_two_hops() {
        let t = Topology::parse(CHAIN).unwrap();
        let route = discover_route(&t, "S", "T").unwrap();
        assert_eq!(route.hops, vec!["S", "E", "T"]);
        assert_eq!(route.hop_count(), 2);
    }

    #[test]
    fn tie_break_prefers_lexicographically_smaller_path() {
        let text = "node S\nnode A\nnode B\nnode D\n\
                    edge S A qc\nedge S B qc\nedge A D qc\nedge B D qc\n";
        let t = Topology::parse(text).unwrap();
        let route = discover_route(&t, "S", "D").unwrap();
        assert_eq!(route.hops, vec!["S", "A", "D"]);
    }

    #[test]
    fn quantum_only_links_do_not_carry_routes() {
        let text = "node S\nnode E\nnode T\nedge S E q\nedge E T qc\n";
        let t = Topology::parse(text).unwrap();
        assert_eq!(
            discover_route(&t, "S", "T").unwrap_err(),
            RouteError::NotFound {
                src: "S".into(),
                dst: "T".into()
            }
        );
    }

    #[test]
    fn route_validates_endpoints() {
        let t = Topology::parse(CHAIN).unwrap();
        assert!(matches!(
            discover_route(&t, "S", "S"),
            Err(RouteError::SameEndpoints(_))
        ));
        assert!(matches!(
            discover_route(&t, "S", "X"),
            Err(RouteError::UnknownNode(_))
        ));
    }

    #[test]
    fn total_success_prob_saturates_near_seventy_five_hops() {
        let p = total_success_prob(amp(0.0), &ClusterParams::balanced(), 1.0, 75).unwrap();
        // independent route: repeated multiplication of the survival factor
        let mut survival = 1.0f64;
        for _ in 0..75 {
            survival *= 15.0 / 16.0;
        }
        assert_abs_diff_eq!(p, 1.0 - survival, epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.9921, epsilon = 1e-4);
    }

    #[test]
    fn single_hop_reduces_to_hop_law() {
        let cluster = ClusterParams::balanced();
        let p = total_success_prob(amp(0.0), &cluster, 1.0, 1).unwrap();
        assert_abs_diff_eq!(p, 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn phase_ten_hop_probability() {
        let noise = NoiseKind::phase_damping(0.2).unwrap();
        let p = total_success_prob(noise, &ClusterParams::balanced(), 1.0, 10).unwrap();
        let mut survival = 1.0f64;
        for _ in 0..10 {
            survival *= 1.0 - 0.0256;
        }
        assert_abs_diff_eq!(p, 1.0 - survival, epsilon = 1e-12);
        assert!(p > 0.228 && p < 0.229, "p = {p}");
    }

    #[test]
    fn two_hop_law_equals_total_law_at_two_hops() {
        let cluster = ClusterParams::balanced();
        for (noise, rho) in [
            (amp(0.0), 1.0),
            (amp(0.3), 1.0),
            (amp(0.5), 2.0),
            (NoiseKind::phase_damping(0.2).unwrap(), 1.0),
        ] {
            let params = PovmParams::for_hop(&cluster, noise, rho).unwrap();
            let direct = two_hop_success_prob(&params);
            let total = total_success_prob(noise, &cluster, rho, 2).unwrap();
            assert_abs_diff_eq!(direct, total, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_hop_balanced_value() {
        let params = PovmParams::for_hop(&ClusterParams::balanced(), amp(0.0), 1.0).unwrap();
        assert_abs_diff_eq!(two_hop_success_prob(&params), 0.12109375, epsilon = 1e-12);
    }

    #[test]
    fn total_fidelity_values() {
        let cluster = ClusterParams::balanced();
        let exact_input = InputParams::from_real(1.0, 0.0).unwrap();
        for n in [1u32, 7, 40, 120] {
            assert_eq!(total_fidelity(amp(0.0), &exact_input, &cluster, n), 1.0);
            assert_eq!(total_fidelity(amp(1.0), &exact_input, &cluster, n), 0.0);
        }
        let balanced = InputParams::balanced();
        assert_abs_diff_eq!(
            total_fidelity(amp(0.5), &balanced, &cluster, 1),
            0.0791015625,
            epsilon = 1e-10
        );
    }

    #[test]
    fn success_prob_monotone_in_hops() {
        for p in [0.01, 0.0625, 0.3, 0.9] {
            let mut prev = 0.0;
            for n in 1..=120 {
                let v = at_least_one(p, n);
                assert!(v >= prev, "p={p} n={n}");
                if prev < 1.0 - 1e-12 {
                    assert!(v > prev, "p={p} n={n} stalled below saturation");
                }
                prev = v;
            }
        }
    }

    #[test]
    fn fidelity_nonincreasing_in_hops() {
        let cluster = ClusterParams::balanced();
        let input = InputParams::balanced();
        for i in 0..=100 {
            let xi = i as f64 / 100.0;
            let mut prev = f64::INFINITY;
            for n in 1..=40 {
                let f = total_fidelity(amp(xi), &input, &cluster, n);
                assert!(f <= prev + 1e-15, "xi={xi} n={n}");
                prev = f;
            }
        }
    }

    #[test]
    fn multihop_single_hop_matches_hop_law() {
        let text = "node S source\nnode E destination\nedge S E qc\n";
        let t = Topology::parse(text).unwrap();
        for semantics in [Semantics::SequentialAllHops, Semantics::AnyHopSuccess] {
            let cfg = SimulationConfig::new(semantics, 40_000, 7);
            let stats = simulate_multihop(
                &t,
                "S",
                "E",
                &InputParams::balanced(),
                &ClusterParams::balanced(),
                amp(0.0),
                &cfg,
            )
            .unwrap();
            assert!(
                (stats.empirical_rate - 0.0625).abs() < stats.sigma3,
                "{} rate {}",
                semantics.label(),
                stats.empirical_rate
            );
            assert_abs_diff_eq!(stats.mean_fidelity.unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn multihop_two_hop_rates_split_by_semantics() {
        let t = Topology::parse(CHAIN).unwrap();
        let input = InputParams::balanced();
        let cluster = ClusterParams::balanced();

        let cfg = SimulationConfig::new(Semantics::AnyHopSuccess, 60_000, 11);
        let stats = simulate_multihop(&t, "S", "T", &input, &cluster, amp(0.0), &cfg).unwrap();
        assert_abs_diff_eq!(stats.closed_form_total, 0.12109375, epsilon = 1e-12);
        assert!(
            (stats.empirical_rate - stats.closed_form_total).abs() < stats.sigma3,
            "any-hop rate {}",
            stats.empirical_rate
        );

        let cfg = SimulationConfig::new(Semantics::SequentialAllHops, 60_000, 11);
        let stats = simulate_multihop(&t, "S", "T", &input, &cluster, amp(0.0), &cfg).unwrap();
        assert_abs_diff_eq!(stats.product_law, 0.00390625, epsilon = 1e-12);
        assert!(
            (stats.empirical_rate - stats.product_law).abs() < stats.sigma3,
            "sequential rate {}",
            stats.empirical_rate
        );
    }

    #[test]
    fn simulation_is_deterministic_for_a_seed() {
        let t = Topology::parse(CHAIN).unwrap();
        let cfg = SimulationConfig::new(Semantics::AnyHopSuccess, 10_000, 42);
        let run = || {
            simulate_multihop(
                &t,
                "S",
                "T",
                &InputParams::balanced(),
                &ClusterParams::balanced(),
                amp(0.25),
                &cfg,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.success_count, b.success_count);
        assert_eq!(a.mean_fidelity, b.mean_fidelity);
    }
}
