//! Index-level undirected communication graph.
//!
//! Nodes are numbered vehicles first (`0..n_vehicles`), then RSUs
//! (`n_vehicles..n_vehicles + n_rsus`), matching snapshot order so that
//! ascending index order is ascending id order.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

pub const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkKind {
    V2v,
    V2i,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    /// Lower endpoint; always the vehicle for V2I links.
    pub a: usize,
    pub b: usize,
    pub kind: LinkKind,
    /// Allocated b_{n,m} for V2I links; unused (0) for V2V.
    pub bandwidth_mbps: f64,
}

impl Link {
    pub fn other(&self, u: usize) -> usize {
        if u == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    n_vehicles: usize,
    n_rsus: usize,
    links: Vec<Link>,
    /// (neighbour, link index), sorted by neighbour.
    adjacency: Vec<Vec<(usize, usize)>>,
    v2v_degree: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    /// Largest finite hop distance between any two nodes (Z(t)).
    pub diameter: usize,
    /// Fraction of vehicle pairs joined by some path; 1 with fewer than two vehicles.
    pub connectivity_rate: f64,
    /// Active links over possible V2V plus V2I links (ρ(t)).
    pub link_density: f64,
    /// Active incident links per node.
    pub degrees: Vec<usize>,
}

impl LinkGraph {
    pub fn new(n_vehicles: usize, n_rsus: usize) -> Self {
        let n = n_vehicles + n_rsus;
        LinkGraph {
            n_vehicles,
            n_rsus,
            links: Vec::new(),
            adjacency: vec![Vec::new(); n],
            v2v_degree: vec![0; n],
        }
    }

    pub fn n_vehicles(&self) -> usize {
        self.n_vehicles
    }

    pub fn n_rsus(&self) -> usize {
        self.n_rsus
    }

    pub fn node_count(&self) -> usize {
        self.n_vehicles + self.n_rsus
    }

    pub fn is_vehicle(&self, u: usize) -> bool {
        u < self.n_vehicles
    }

    pub fn rsu_node(&self, rsu: usize) -> usize {
        self.n_vehicles + rsu
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn v2v_degree(&self, u: usize) -> usize {
        self.v2v_degree[u]
    }

    pub fn link_between(&self, u: usize, w: usize) -> Option<usize> {
        let adj = &self.adjacency[u];
        adj.binary_search_by_key(&w, |&(n, _)| n).ok().map(|i| adj[i].1)
    }

    fn attach(&mut self, link: Link) -> usize {
        let idx = self.links.len();
        for (u, w) in [(link.a, link.b), (link.b, link.a)] {
            let adj = &mut self.adjacency[u];
            let pos = adj.partition_point(|&(n, _)| n < w);
            adj.insert(pos, (w, idx));
        }
        self.links.push(link);
        idx
    }

    /// Adds an undirected V2V link; returns `None` for self-loops or duplicates.
    pub fn add_v2v(&mut self, a: usize, b: usize) -> Option<usize> {
        if a == b || self.link_between(a, b).is_some() {
            return None;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.v2v_degree[a] += 1;
        self.v2v_degree[b] += 1;
        Some(self.attach(Link { a, b, kind: LinkKind::V2v, bandwidth_mbps: 0.0 }))
    }

    /// Adds a V2I link between vehicle `vehicle` and RSU number `rsu`.
    pub fn add_v2i(&mut self, vehicle: usize, rsu: usize, bandwidth_mbps: f64) -> Option<usize> {
        let b = self.rsu_node(rsu);
        if self.link_between(vehicle, b).is_some() {
            return None;
        }
        Some(self.attach(Link { a: vehicle, b, kind: LinkKind::V2i, bandwidth_mbps }))
    }

    /// BFS hop counts from `src`; [`UNREACHABLE`] marks unreachable nodes.
    pub fn hop_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.node_count()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &self.adjacency[u] {
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Lexicographically smallest shortest-hop path from `src` to `dst`.
    pub fn shortest_path(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        let dist = self.hop_distances(dst);
        self.walk_down(src, &dist)
    }

    /// Follows a distance field (from the destination) greedily from `src`,
    /// always stepping to the smallest-index neighbour one hop closer.
    pub fn walk_down(&self, src: usize, dist_to_dst: &[usize]) -> Option<Vec<usize>> {
        if dist_to_dst[src] == UNREACHABLE {
            return None;
        }
        let mut path = Vec::with_capacity(dist_to_dst[src] + 1);
        let mut u = src;
        path.push(u);
        while dist_to_dst[u] > 0 {
            let want = dist_to_dst[u] - 1;
            u = self.adjacency[u].iter().map(|&(w, _)| w).find(|&w| dist_to_dst[w] == want)?;
            path.push(u);
        }
        Some(path)
    }

    /// Number of edge-disjoint `src`-`dst` paths, counting no further than `limit`.
    pub fn edge_disjoint_paths(&self, src: usize, dst: usize, limit: usize) -> usize {
        if src == dst {
            return limit;
        }
        // net flow on each link, positive in the a -> b direction
        let mut flow = vec![0i8; self.links.len()];
        let mut found = 0;
        let n = self.node_count();
        while found < limit {
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut seen = vec![false; n];
            let mut queue = VecDeque::new();
            seen[src] = true;
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                if u == dst {
                    break;
                }
                for &(w, l) in &self.adjacency[u] {
                    let f = if self.links[l].a == u { flow[l] } else { -flow[l] };
                    if !seen[w] && f < 1 {
                        seen[w] = true;
                        parent[w] = Some((u, l));
                        queue.push_back(w);
                    }
                }
            }
            if !seen[dst] {
                break;
            }
            let mut v = dst;
            while let Some((u, l)) = parent[v] {
                if self.links[l].a == u {
                    flow[l] += 1;
                } else {
                    flow[l] -= 1;
                }
                v = u;
            }
            found += 1;
        }
        found
    }

    /// Connected-component label per node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![UNREACHABLE; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != UNREACHABLE {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(w, _) in &self.adjacency[u] {
                    if label[w] == UNREACHABLE {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Fraction of vehicle pairs joined by some path; 1 with fewer than two vehicles.
    pub fn connectivity_rate(&self) -> f64 {
        let nv = self.n_vehicles;
        if nv < 2 {
            return 1.0;
        }
        let label = self.components();
        let mut sizes = vec![0usize; self.node_count()];
        for &l in &label[..nv] {
            sizes[l] += 1;
        }
        let connected: usize = sizes.iter().map(|&s| s * s.saturating_sub(1) / 2).sum();
        connected as f64 / (nv * (nv - 1) / 2) as f64
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.node_count();
        let mut diameter = 0;
        for s in 0..n {
            if self.adjacency[s].is_empty() {
                continue;
            }
            let d = self.hop_distances(s);
            for &x in &d {
                if x != UNREACHABLE && x > diameter {
                    diameter = x;
                }
            }
        }
        let nv = self.n_vehicles;
        let connectivity_rate = self.connectivity_rate();
        let possible = nv * nv.saturating_sub(1) / 2 + nv * self.n_rsus;
        GraphStats {
            diameter,
            connectivity_rate,
            link_density: self.links.len() as f64 / possible.max(1) as f64,
            degrees: (0..n).map(|u| self.degree(u)).collect(),
        }
    }
}
