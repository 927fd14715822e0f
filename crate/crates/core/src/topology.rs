//! Network graphs (k-ary n-tree fat-trees and a single crossbar switch) and
//! deterministic destination-based routing.
//!
//! Node ids `0..N` are the endpoints; switches follow. In a fat-tree the
//! switch at level `l` with label `w` has node id `N + l * k^(n-1) + w`, where
//! the base-`k` digits of `w` occupy positions `1..n` of an endpoint address.
//! Ports `0..k` of a switch point down, ports `k..2k` point up (top-level
//! switches only have down ports).

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;
pub type EndpointId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("fat-tree needs k >= 2 and levels >= 1 (got k={k}, levels={levels})")]
    BadFatTree { k: usize, levels: usize },
    #[error("topology would have {requested} endpoints, more than the configured maximum {max}")]
    TooLarge { requested: u128, max: usize },
    #[error("a single-switch network needs at least 2 endpoints (got {0})")]
    TooFewEndpoints(usize),
    #[error("node {0} is not a switch")]
    NotASwitch(NodeId),
    #[error("unknown destination endpoint {dst} (network has {endpoints})")]
    UnknownDestination { dst: EndpointId, endpoints: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkParams {
    pub rate_bps: u64,
    pub prop_delay_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Endpoint,
    Switch { level: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortRef {
    pub node: NodeId,
    pub port: usize,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub role: NodeRole,
    pub radix: usize,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub id: usize,
    pub a: PortRef,
    pub b: PortRef,
    pub params: LinkParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    FatTree { k: usize, levels: usize },
    SingleSwitch,
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub shape: Shape,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    endpoints: usize,
    /// `port_links[node][port]` is the link attached to that port.
    port_links: Vec<Vec<usize>>,
}

impl Topology {
    pub fn endpoint_count(&self) -> usize {
        self.endpoints
    }

    pub fn switch_count(&self) -> usize {
        self.nodes.len() - self.endpoints
    }

    pub fn is_endpoint(&self, node: NodeId) -> bool {
        node < self.endpoints
    }

    pub fn link_at(&self, node: NodeId, port: usize) -> &Link {
        &self.links[self.port_links[node][port]]
    }

    /// The port on the far side of the link attached to `(node, port)`.
    pub fn peer(&self, node: NodeId, port: usize) -> PortRef {
        let link = self.link_at(node, port);
        if link.a == (PortRef { node, port }) {
            link.b
        } else {
            link.a
        }
    }

    fn from_links(shape: Shape, nodes: Vec<Node>, links: Vec<Link>, endpoints: usize) -> Self {
        let mut port_links: Vec<Vec<usize>> =
            nodes.iter().map(|n| vec![usize::MAX; n.radix]).collect();
        for link in &links {
            for side in [link.a, link.b] {
                debug_assert_eq!(port_links[side.node][side.port], usize::MAX);
                port_links[side.node][side.port] = link.id;
            }
        }
        debug_assert!(port_links.iter().flatten().all(|&l| l != usize::MAX));
        Self { shape, nodes, links, endpoints, port_links }
    }
}

fn pow(k: usize, e: usize) -> usize {
    k.pow(e as u32)
}

fn digit(value: usize, k: usize, position: usize) -> usize {
    (value / pow(k, position)) % k
}

/// Builds a k-ary n-tree with `k^levels` endpoints and `levels * k^(levels-1)` switches.
pub fn build_fat_tree(
    k: usize,
    levels: usize,
    params: LinkParams,
    max_endpoints: usize,
) -> Result<Topology, TopologyError> {
    if k < 2 || levels < 1 {
        return Err(TopologyError::BadFatTree { k, levels });
    }
    let requested = (k as u128).checked_pow(levels as u32).unwrap_or(u128::MAX);
    if requested > max_endpoints as u128 {
        return Err(TopologyError::TooLarge { requested, max: max_endpoints });
    }
    let n = requested as usize;
    let per_level = pow(k, levels - 1);
    let switch_id = |level: usize, label: usize| n + level * per_level + label;

    let mut nodes: Vec<Node> = (0..n)
        .map(|id| Node { id, role: NodeRole::Endpoint, radix: 1 })
        .collect();
    for level in 0..levels {
        let radix = if level + 1 == levels { k } else { 2 * k };
        for label in 0..per_level {
            nodes.push(Node { id: switch_id(level, label), role: NodeRole::Switch { level }, radix });
        }
    }

    let mut links = Vec::new();
    let mut push = |a: PortRef, b: PortRef| {
        let id = links.len();
        links.push(Link { id, a, b, params });
    };
    for e in 0..n {
        push(PortRef { node: e, port: 0 }, PortRef { node: switch_id(0, e / k), port: e % k });
    }
    for level in 0..levels - 1 {
        for label in 0..per_level {
            // Label digit index `level` is address position `level + 1`.
            let own = digit(label, k, level);
            let base = label - own * pow(k, level);
            for up in 0..k {
                let parent = base + up * pow(k, level);
                push(
                    PortRef { node: switch_id(level, label), port: k + up },
                    PortRef { node: switch_id(level + 1, parent), port: own },
                );
            }
        }
    }
    Ok(Topology::from_links(Shape::FatTree { k, levels }, nodes, links, n))
}

/// One switch of radix `n` with endpoint `i` on port `i`.
pub fn build_single_switch(n: usize, params: LinkParams) -> Result<Topology, TopologyError> {
    if n < 2 {
        return Err(TopologyError::TooFewEndpoints(n));
    }
    let mut nodes: Vec<Node> = (0..n)
        .map(|id| Node { id, role: NodeRole::Endpoint, radix: 1 })
        .collect();
    nodes.push(Node { id: n, role: NodeRole::Switch { level: 0 }, radix: n });
    let links = (0..n)
        .map(|e| Link {
            id: e,
            a: PortRef { node: e, port: 0 },
            b: PortRef { node: n, port: e },
            params,
        })
        .collect();
    Ok(Topology::from_links(Shape::SingleSwitch, nodes, links, n))
}

/// Per-switch output port for every destination endpoint.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    endpoints: usize,
    /// Indexed by `switch node id - endpoints`, then destination.
    ports: Vec<Vec<u32>>,
}

impl RoutingTable {
    /// Up-then-down routing; the upward port at level `l` is digit `l` of the
    /// destination address (d-mod-k).
    pub fn build(topology: &Topology) -> Self {
        let n = topology.endpoint_count();
        let ports = topology.nodes[n..]
            .iter()
            .map(|node| {
                (0..n)
                    .map(|dst| match topology.shape {
                        Shape::SingleSwitch => dst as u32,
                        Shape::FatTree { k, levels } => {
                            let NodeRole::Switch { level } = node.role else { unreachable!() };
                            let label = (node.id - n) % pow(k, levels - 1);
                            let below = (level + 1..levels)
                                .all(|pos| digit(dst, k, pos) == digit(label, k, pos - 1));
                            let d = digit(dst, k, level);
                            if below { d as u32 } else { (k + d) as u32 }
                        }
                    })
                    .collect()
            })
            .collect();
        Self { endpoints: n, ports }
    }

    pub fn route_next_hop(&self, at: NodeId, dst: EndpointId) -> Result<usize, TopologyError> {
        if dst >= self.endpoints {
            return Err(TopologyError::UnknownDestination { dst, endpoints: self.endpoints });
        }
        let row = at
            .checked_sub(self.endpoints)
            .and_then(|i| self.ports.get(i))
            .ok_or(TopologyError::NotASwitch(at))?;
        Ok(row[dst] as usize)
    }
}
