//! Directed BAN graph with the four arc classes and per-arc energy coefficients.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use crate::instance::{energy_rx, energy_tx, BanInstance, EnergyParams, InstanceError};

/// Energy (nJ/bit) consumed to move one bit across a link of length `delta`.
pub fn energy_coefficient(delta: f64, lambda: f64, params: &EnergyParams) -> Result<f64, InstanceError> {
    Ok(energy_tx(1.0, delta, lambda, params)? + energy_rx(1.0, params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKind {
    Biosensor,
    Relay,
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcClass {
    BioToSink,
    BioToRelay,
    RelayToRelay,
    RelayToSink,
}

impl fmt::Display for ArcClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcClass::BioToSink => "B->S",
            ArcClass::BioToRelay => "B->R",
            ArcClass::RelayToRelay => "R<->R",
            ArcClass::RelayToSink => "R->S",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: String,
    pub kind: VertexKind,
}

#[derive(Debug, Clone)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub delta: f64,
    pub lambda: f64,
    /// E_ij in nJ/bit.
    pub e_coeff: f64,
    pub class: ArcClass,
}

/// A positive-demand couple with no directed path from biosensor to sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityWarning {
    pub biosensor: String,
    pub sink: String,
}

/// Vertices are laid out biosensors first, then relays, then sinks, each
/// block sorted by id. Arcs are sorted by (tail, head).
#[derive(Debug, Clone)]
pub struct BanGraph {
    pub vertices: Vec<Vertex>,
    pub n_biosensors: usize,
    pub n_relays: usize,
    pub n_sinks: usize,
    pub arcs: Vec<Arc>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    pub warnings: Vec<ReachabilityWarning>,
    /// Relay capacity per relay, indexed by relay ordinal.
    pub relay_capacity: Vec<f64>,
}

impl BanGraph {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn biosensors(&self) -> std::ops::Range<usize> {
        0..self.n_biosensors
    }

    pub fn relays(&self) -> std::ops::Range<usize> {
        self.n_biosensors..self.n_biosensors + self.n_relays
    }

    pub fn sinks(&self) -> std::ops::Range<usize> {
        let start = self.n_biosensors + self.n_relays;
        start..start + self.n_sinks
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.vertices[v].kind
    }

    /// Relay ordinal (0-based within R) of vertex `v`, if it is a relay.
    pub fn relay_ordinal(&self, v: usize) -> Option<usize> {
        self.relays().contains(&v).then(|| v - self.n_biosensors)
    }

    pub fn relay_vertex(&self, ordinal: usize) -> usize {
        self.n_biosensors + ordinal
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn find_arc(&self, tail: usize, head: usize) -> Option<usize> {
        self.out_arcs[tail].iter().copied().find(|&a| self.arcs[a].head == head)
    }

    /// Whether arc `a` can carry flow of the couple `(b, s)`: biosensor-tailed
    /// arcs must leave `b` and sink-headed arcs must enter `s`.
    pub fn arc_usable_by(&self, a: usize, b: usize, s: usize) -> bool {
        let arc = &self.arcs[a];
        let tail_ok = self.kind(arc.tail) != VertexKind::Biosensor || arc.tail == b;
        let head_ok = self.kind(arc.head) != VertexKind::Sink || arc.head == s;
        tail_ok && head_ok
    }

    /// Arc indices usable by couple `(b, s)`, in graph order.
    pub fn couple_arcs(&self, b: usize, s: usize) -> Vec<usize> {
        (0..self.arcs.len()).filter(|&a| self.arc_usable_by(a, b, s)).collect()
    }

    pub fn reachable(&self, b: usize, s: usize) -> bool {
        let mut seen = vec![false; self.n_vertices()];
        let mut queue = VecDeque::from([b]);
        seen[b] = true;
        while let Some(v) = queue.pop_front() {
            if v == s {
                return true;
            }
            for &a in &self.out_arcs[v] {
                let h = self.arcs[a].head;
                if !seen[h] && (self.kind(h) != VertexKind::Sink || h == s) {
                    seen[h] = true;
                    queue.push_back(h);
                }
            }
        }
        false
    }

    /// Minimum-weight `from -> to` path (arc sequence). `weight` returns `None`
    /// for arcs that may not be used; weights must be non-negative. Ties are
    /// resolved towards lower vertex and arc indices.
    pub fn shortest_path(&self, from: usize, to: usize, weight: impl Fn(usize) -> Option<f64>) -> Option<Vec<usize>> {
        let n = self.n_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Reverse((OrdF64(0.0), from)));
        while let Some(Reverse((OrdF64(d), v))) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            if v == to {
                break;
            }
            for &a in &self.out_arcs[v] {
                let Some(w) = weight(a) else { continue };
                let h = self.arcs[a].head;
                let nd = d + w;
                if nd < dist[h] {
                    dist[h] = nd;
                    pred[h] = Some(a);
                    heap.push(Reverse((OrdF64(nd), h)));
                }
            }
        }
        if !done[to] {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = to;
        while let Some(a) = pred[cur] {
            path.push(a);
            cur = self.arcs[a].tail;
        }
        path.reverse();
        Some(path)
    }

    /// Arc list as delimited text: tail, head, class, delta, lambda, E_ij.
    pub fn dump(&self) -> String {
        let mut out = String::from("tail,head,class,delta,lambda,e_coeff\n");
        for arc in &self.arcs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.vertices[arc.tail].id, self.vertices[arc.head].id, arc.class, arc.delta, arc.lambda, arc.e_coeff
            ));
        }
        out
    }
}

pub fn build_graph(instance: &BanInstance) -> Result<BanGraph, InstanceError> {
    instance.validate()?;
    let mut bios: Vec<_> = instance.biosensors.iter().collect();
    bios.sort_by(|a, b| a.id.cmp(&b.id));
    let mut relays: Vec<_> = instance.relays.iter().collect();
    relays.sort_by(|a, b| a.id.cmp(&b.id));
    let mut sinks: Vec<_> = instance.sinks.iter().collect();
    sinks.sort_by(|a, b| a.id.cmp(&b.id));

    let mut vertices = Vec::new();
    let mut positions = Vec::new();
    for b in &bios {
        vertices.push(Vertex { id: b.id.clone(), kind: VertexKind::Biosensor });
        positions.push(b.position);
    }
    for r in &relays {
        vertices.push(Vertex { id: r.id.clone(), kind: VertexKind::Relay });
        positions.push(r.position);
    }
    for s in &sinks {
        vertices.push(Vertex { id: s.id.clone(), kind: VertexKind::Sink });
        positions.push(s.position);
    }

    let n = vertices.len();
    let mut arcs = Vec::new();
    for tail in 0..n {
        for head in 0..n {
            if tail == head {
                continue;
            }
            let class = match (vertices[tail].kind, vertices[head].kind) {
                (VertexKind::Biosensor, VertexKind::Sink) => ArcClass::BioToSink,
                (VertexKind::Biosensor, VertexKind::Relay) => ArcClass::BioToRelay,
                (VertexKind::Relay, VertexKind::Relay) => ArcClass::RelayToRelay,
                (VertexKind::Relay, VertexKind::Sink) => ArcClass::RelayToSink,
                _ => continue,
            };
            let delta = positions[tail].distance(&positions[head]);
            if delta > instance.tx_range {
                continue;
            }
            let link = instance.los_predicate.link(&vertices[tail].id, &vertices[head].id);
            let lambda = instance.energy.lambda_for(link);
            let e_coeff = energy_coefficient(delta, lambda, &instance.energy)?;
            arcs.push(Arc { tail, head, delta, lambda, e_coeff, class });
        }
    }

    let mut out_arcs = vec![Vec::new(); n];
    let mut in_arcs = vec![Vec::new(); n];
    for (a, arc) in arcs.iter().enumerate() {
        out_arcs[arc.tail].push(a);
        in_arcs[arc.head].push(a);
    }

    let mut graph = BanGraph {
        vertices,
        n_biosensors: bios.len(),
        n_relays: relays.len(),
        n_sinks: sinks.len(),
        arcs,
        out_arcs,
        in_arcs,
        warnings: Vec::new(),
        relay_capacity: relays.iter().map(|r| r.capacity).collect(),
    };

    let mut warnings = Vec::new();
    for b in graph.biosensors() {
        for s in graph.sinks() {
            let (bid, sid) = (&graph.vertices[b].id, &graph.vertices[s].id);
            let demanded = instance.scenarios.iter().any(|sc| sc.rate(bid, sid) > 0.0);
            if demanded && !graph.reachable(b, s) {
                warnings.push(ReachabilityWarning { biosensor: bid.clone(), sink: sid.clone() });
            }
        }
    }
    graph.warnings = warnings;
    Ok(graph)
}
