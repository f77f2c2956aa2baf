//! Nonoverlapping graph partitioning, layered overlap and subdomain coloring.

use crate::error::{Error, Result};
use crate::sparse::Graph;
use rayon::prelude::*;

/// Owner subdomain of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n_parts: usize,
    owner: Vec<usize>,
}

impl Partition {
    /// Validates an owner vector: ids in `0..n_parts`, every id used.
    pub fn from_owner(owner: Vec<usize>, n_parts: usize) -> Result<Self> {
        let mut used = vec![false; n_parts];
        for (v, &o) in owner.iter().enumerate() {
            if o >= n_parts {
                return Err(Error::InvalidArgument(format!(
                    "node {v} owned by subdomain {o}, but only {n_parts} subdomains exist"
                )));
            }
            used[o] = true;
        }
        if let Some(empty) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidArgument(format!("subdomain {empty} owns no nodes")));
        }
        Ok(Partition { n_parts, owner })
    }

    /// Parses one owner id per line; the subdomain count is `max id + 1`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut owner = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
                continue;
            }
            owner.push(t.parse::<usize>().map_err(|_| Error::Parse {
                line: ln + 1,
                msg: format!("invalid owner id '{t}'"),
            })?);
        }
        let n_parts = owner.iter().max().map_or(0, |m| m + 1);
        Self::from_owner(owner, n_parts)
    }

    pub fn n_parts(&self) -> usize {
        self.n_parts
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    /// Nodes of each subdomain in ascending order.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.n_parts];
        for (v, &o) in self.owner.iter().enumerate() {
            parts[o].push(v);
        }
        parts
    }
}

/// Splits `total` subdomains over components proportionally to their sizes.
fn allocate(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut alloc: Vec<usize> = sizes
        .iter()
        .map(|&s| (total * s / n).clamp(1, s))
        .collect();
    let mut sum: usize = alloc.iter().sum();
    while sum > total {
        let k = (0..sizes.len()).filter(|&k| alloc[k] > 1).max_by_key(|&k| (alloc[k], usize::MAX - k)).unwrap();
        alloc[k] -= 1;
        sum -= 1;
    }
    while sum < total {
        // largest remaining fractional share, restricted to components with room
        let k = (0..sizes.len())
            .filter(|&k| alloc[k] < sizes[k])
            .max_by(|&a, &b| {
                let fa = (total * sizes[a]) as f64 / n as f64 - alloc[a] as f64;
                let fb = (total * sizes[b]) as f64 / n as f64 - alloc[b] as f64;
                fa.total_cmp(&fb).then(b.cmp(&a))
            })
            .unwrap();
        alloc[k] += 1;
        sum += 1;
    }
    alloc
}

/// Node at maximum BFS distance among `candidates` (ties: smallest index).
fn farthest(dist: &[usize], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &v in candidates {
        if dist[v] != usize::MAX && (dist[best] == usize::MAX || dist[v] > dist[best]) {
            best = v;
        }
    }
    best
}

/// Greedy BFS graph growing into `n_parts` nonoverlapping subdomains.
///
/// Each connected component receives a share of subdomains proportional to
/// its size. Within a component, the first seed is a pseudo-peripheral node
/// (double BFS sweep from the smallest node) and later seeds are the
/// unassigned nodes farthest from everything assigned so far. Each subdomain
/// grows breadth-first over unassigned nodes up to `ceil(remaining / left)`
/// nodes; nodes left over when growth is blocked join the adjacent subdomain
/// with the fewest nodes.
pub fn partition_graph(g: &Graph, n_parts: usize) -> Result<Partition> {
    let n = g.n();
    if n_parts == 0 || n_parts > n {
        return Err(Error::InvalidArgument(format!(
            "subdomain count N={n_parts} must lie in 1..={n}"
        )));
    }
    const NONE: usize = usize::MAX;
    let comps = g.components();
    let mut owner = vec![NONE; n];
    let mut sizes = vec![0usize; n_parts];

    let mut by_size: Vec<usize> = (0..comps.len()).collect();
    by_size.sort_by_key(|&c| (usize::MAX - comps[c].len(), comps[c][0]));
    let active: Vec<usize> = by_size.iter().copied().take(n_parts).collect();
    let mut quota = vec![0usize; comps.len()];
    let act_sizes: Vec<usize> = active.iter().map(|&c| comps[c].len()).collect();
    for (k, q) in allocate(&act_sizes, n_parts).into_iter().enumerate() {
        quota[active[k]] = q;
    }

    let mut next_id = 0;
    for (c, comp) in comps.iter().enumerate() {
        if quota[c] == 0 {
            continue;
        }
        let d0 = g.bfs_distances(&[comp[0]]);
        let a = farthest(&d0, comp);
        let d1 = g.bfs_distances(&[a]);
        let mut seed = farthest(&d1, comp);
        let mut remaining = comp.len();
        let mut assigned: Vec<usize> = Vec::new();
        for left in (1..=quota[c]).rev() {
            let id = next_id;
            next_id += 1;
            let target = remaining.div_ceil(left);
            let mut queue = std::collections::VecDeque::from([seed]);
            owner[seed] = id;
            let mut grown = 1;
            assigned.push(seed);
            'grow: while let Some(v) = queue.pop_front() {
                for &w in g.neighbors(v) {
                    if grown >= target {
                        break 'grow;
                    }
                    if owner[w] == NONE {
                        owner[w] = id;
                        grown += 1;
                        assigned.push(w);
                        queue.push_back(w);
                    }
                }
            }
            sizes[id] = grown;
            remaining -= grown;
            if left > 1 {
                let free: Vec<usize> = comp.iter().copied().filter(|&v| owner[v] == NONE).collect();
                if free.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "component of {} nodes cannot host {} subdomains",
                        comp.len(),
                        quota[c]
                    )));
                }
                let d = g.bfs_distances(&assigned);
                seed = farthest(&d, &free);
            }
        }
        // blocked growth leaves holes; attach them to the lightest neighbour
        loop {
            let mut progress = false;
            let mut pending = false;
            for &v in comp {
                if owner[v] != NONE {
                    continue;
                }
                let best = g
                    .neighbors(v)
                    .iter()
                    .map(|&w| owner[w])
                    .filter(|&o| o != NONE)
                    .min_by_key(|&o| (sizes[o], o));
                match best {
                    Some(o) => {
                        owner[v] = o;
                        sizes[o] += 1;
                        progress = true;
                    }
                    None => pending = true,
                }
            }
            if !pending {
                break;
            }
            debug_assert!(progress);
        }
    }

    // components beyond the subdomain budget join the smallest subdomain
    for &c in by_size.iter().skip(n_parts) {
        let o = (0..n_parts).min_by_key(|&o| (sizes[o], o)).unwrap();
        for &v in &comps[c] {
            owner[v] = o;
        }
        sizes[o] += comps[c].len();
    }
    Partition::from_owner(owner, n_parts)
}

/// One overlapping subdomain: interior nodes followed by distance-ordered rings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubdomainMap {
    interior: Vec<usize>,
    layers: Vec<Vec<usize>>,
    indices: Vec<usize>,
}

impl SubdomainMap {
    /// Builds a map from explicit index sets, which must be pairwise disjoint.
    pub fn new(interior: Vec<usize>, layers: Vec<Vec<usize>>) -> Result<Self> {
        if interior.is_empty() {
            return Err(Error::InvalidArgument("subdomain interior is empty".into()));
        }
        let mut indices = interior.clone();
        for l in &layers {
            indices.extend_from_slice(l);
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("subdomain index sets overlap".into()));
        }
        Ok(SubdomainMap { interior, layers, indices })
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    /// Global indices in local order: interior, then layer 1, ..., layer δ.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Outermost ring (empty when there are no layers).
    pub fn boundary(&self) -> &[usize] {
        self.layers.last().map_or(&[], |l| l.as_slice())
    }

    /// Nodes in all rings.
    pub fn n_layers_total(&self) -> usize {
        self.len() - self.n_interior()
    }

    /// Size of the inner set: everything but the outermost ring.
    pub fn n_inner(&self) -> usize {
        self.len() - self.boundary().len()
    }

    /// Boolean partition of unity weights in local order.
    pub fn boolean_pou(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        d[..self.n_interior()].fill(1.0);
        d
    }

    /// `R_i v`.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&g| v[g]).collect()
    }
}

/// Extends each subdomain by `delta` breadth-first rings; ring members are
/// sorted by global index.
pub fn extend_overlap(g: &Graph, p: &Partition, delta: usize) -> Result<Vec<SubdomainMap>> {
    if delta == 0 {
        return Err(Error::InvalidArgument("overlap delta must be at least 1".into()));
    }
    if p.owner().len() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} nodes, graph has {}",
            p.owner().len(),
            g.n()
        )));
    }
    p.parts()
        .into_par_iter()
        .map(|interior| {
            let mut seen = vec![false; g.n()];
            for &v in &interior {
                seen[v] = true;
            }
            let mut layers = Vec::with_capacity(delta);
            let mut frontier = interior.clone();
            for _ in 0..delta {
                let mut ring = Vec::new();
                for &v in &frontier {
                    for &w in g.neighbors(v) {
                        if !seen[w] {
                            seen[w] = true;
                            ring.push(w);
                        }
                    }
                }
                ring.sort_unstable();
                frontier = ring.clone();
                layers.push(ring);
            }
            SubdomainMap::new(interior, layers)
        })
        .collect()
}

/// Result of coloring the subdomain intersection graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub k_c: usize,
    pub colors: Vec<usize>,
}

/// Greedy largest-degree-first coloring of the graph in which two
/// subdomains are adjacent when their overlapping index sets intersect.
pub fn color_subdomains(maps: &[SubdomainMap]) -> Coloring {
    let n = maps.iter().flat_map(|m| m.indices().iter().copied()).max().map_or(0, |x| x + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, m) in maps.iter().enumerate() {
        for &v in m.indices() {
            members[v].push(i);
        }
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); maps.len()];
    for list in &members {
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut order: Vec<usize> = (0..maps.len()).collect();
    order.sort_by_key(|&i| (usize::MAX - adj[i].len(), i));
    const UNSET: usize = usize::MAX;
    let mut colors = vec![UNSET; maps.len()];
    for &i in &order {
        let mut used: Vec<usize> = adj[i].iter().map(|&j| colors[j]).filter(|&c| c != UNSET).collect();
        used.sort_unstable();
        used.dedup();
        let c = used.iter().enumerate().find(|&(k, &c)| k != c).map_or(used.len(), |(k, _)| k);
        colors[i] = c;
    }
    let k_c = colors.iter().max().map_or(0, |c| c + 1);
    Coloring { k_c, colors }
}
