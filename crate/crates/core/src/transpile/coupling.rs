use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CouplingError {
    #[error("coupling map must have at least one qubit")]
    Empty,
    #[error("edge ({0},{1}) references a qubit outside the map")]
    OutOfRange(u8, u8),
    #[error("self-loop on qubit {0}")]
    SelfLoop(u8),
}

/// Undirected qubit connectivity graph.
///
/// Edges keep their declaration order for display; equality, hashing keys and
/// adjacency queries use the normalized `(min, max)` set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawCoupling", into = "RawCoupling")]
pub struct CouplingMap {
    num_qubits: u16,
    edges: Vec<(u8, u8)>,
    canonical: BTreeSet<(u8, u8)>,
}

#[derive(Serialize, Deserialize)]
struct RawCoupling {
    num_qubits: u16,
    edges: Vec<(u8, u8)>,
}

impl TryFrom<RawCoupling> for CouplingMap {
    type Error = CouplingError;

    fn try_from(raw: RawCoupling) -> Result<Self, Self::Error> {
        CouplingMap::new(raw.num_qubits, raw.edges)
    }
}

impl From<CouplingMap> for RawCoupling {
    fn from(map: CouplingMap) -> Self {
        RawCoupling {
            num_qubits: map.num_qubits,
            edges: map.edges,
        }
    }
}

impl PartialEq for CouplingMap {
    fn eq(&self, other: &Self) -> bool {
        self.num_qubits == other.num_qubits && self.canonical == other.canonical
    }
}

impl Eq for CouplingMap {}

fn norm((a, b): (u8, u8)) -> (u8, u8) {
    (a.min(b), a.max(b))
}

impl CouplingMap {
    pub fn new(num_qubits: u16, edges: impl IntoIterator<Item = (u8, u8)>) -> Result<Self, CouplingError> {
        if num_qubits == 0 {
            return Err(CouplingError::Empty);
        }
        let mut map = Self {
            num_qubits,
            edges: Vec::new(),
            canonical: BTreeSet::new(),
        };
        for (a, b) in edges {
            if u16::from(a) >= num_qubits || u16::from(b) >= num_qubits {
                return Err(CouplingError::OutOfRange(a, b));
            }
            if a == b {
                return Err(CouplingError::SelfLoop(a));
            }
            if map.canonical.insert(norm((a, b))) {
                map.edges.push((a, b));
            }
        }
        Ok(map)
    }

    /// 0-1-2-...-(n-1)
    pub fn line(n: u16) -> Result<Self, CouplingError> {
        Self::new(n, (1..n).map(|i| ((i - 1) as u8, i as u8)))
    }

    /// A line closed back to qubit 0. Two qubits give a single edge.
    pub fn ring(n: u16) -> Result<Self, CouplingError> {
        let mut edges: Vec<(u8, u8)> = (1..n).map(|i| ((i - 1) as u8, i as u8)).collect();
        if n > 2 {
            edges.push(((n - 1) as u8, 0));
        }
        Self::new(n, edges)
    }

    /// All-to-all.
    pub fn full(n: u16) -> Result<Self, CouplingError> {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a as u8, b as u8));
            }
        }
        Self::new(n, edges)
    }

    pub fn num_qubits(&self) -> u16 {
        self.num_qubits
    }

    /// Edges in declaration order.
    pub fn edges(&self) -> &[(u8, u8)] {
        &self.edges
    }

    /// Sorted `(min, max)` edge list.
    pub fn canonical_edges(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.canonical.iter().copied()
    }

    pub fn is_adjacent(&self, a: u8, b: u8) -> bool {
        self.canonical.contains(&norm((a, b)))
    }

    /// Sorted neighbour list of `q`.
    pub fn neighbors(&self, q: u8) -> Vec<u8> {
        let mut out: Vec<u8> = self
            .canonical
            .iter()
            .filter_map(|&(a, b)| {
                if a == q {
                    Some(b)
                } else if b == q {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    fn distances_to(&self, target: u8) -> Vec<Option<usize>> {
        let mut dist = vec![None; usize::from(self.num_qubits)];
        dist[usize::from(target)] = Some(0);
        let mut queue = VecDeque::from([target]);
        while let Some(v) = queue.pop_front() {
            let d = dist[usize::from(v)].unwrap();
            for w in self.neighbors(v) {
                if dist[usize::from(w)].is_none() {
                    dist[usize::from(w)] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances_to(0).iter().all(Option::is_some)
    }

    /// The lexicographically smallest among all shortest paths from `from`
    /// to `to`, both endpoints included. `None` if unreachable.
    pub fn shortest_path(&self, from: u8, to: u8) -> Option<Vec<u8>> {
        let dist = self.distances_to(to);
        let mut d = dist[usize::from(from)]?;
        let mut path = vec![from];
        let mut cur = from;
        while d > 0 {
            cur = self
                .neighbors(cur)
                .into_iter()
                .find(|&w| dist[usize::from(w)] == Some(d - 1))?;
            path.push(cur);
            d -= 1;
        }
        Some(path)
    }
}

impl fmt::Display for CouplingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in &self.edges {
            write!(f, "({a},{b})")?;
        }
        Ok(())
    }
}
