use std::collections::VecDeque;

use lpinet::topology::{build_fat_tree, build_single_switch, LinkParams, RoutingTable, Topology};

const LINK: LinkParams = LinkParams { rate_bps: 100_000_000_000, prop_delay_ns: 100 };

fn bfs_hops(t: &Topology, from: usize, to: usize) -> usize {
    let mut dist = vec![usize::MAX; t.nodes.len()];
    dist[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(u) = q.pop_front() {
        for port in 0..t.nodes[u].radix {
            let v = t.peer(u, port).node;
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist[to]
}

fn walk(t: &Topology, routes: &RoutingTable, src: usize, dst: usize, limit: usize) -> Option<usize> {
    // The endpoint's single port leads to its leaf switch.
    let mut at = t.peer(src, 0).node;
    let mut hops = 1;
    while at != dst {
        if hops > limit {
            return None;
        }
        let port = routes.route_next_hop(at, dst).ok()?;
        at = t.peer(at, port).node;
        hops += 1;
    }
    Some(hops)
}

#[test]
fn every_pair_is_reached_along_a_shortest_path() {
    for k in 2..=4 {
        for levels in 1..=3 {
            let t = build_fat_tree(k, levels, LINK, 1 << 16).unwrap();
            let routes = RoutingTable::build(&t);
            let n = t.endpoint_count();
            for src in 0..n {
                for dst in (0..n).filter(|&d| d != src) {
                    let hops = walk(&t, &routes, src, dst, 2 * levels)
                        .unwrap_or_else(|| panic!("k={k} levels={levels}: {src}->{dst} not reached"));
                    assert!(hops <= 2 * levels);
                    assert_eq!(hops, bfs_hops(&t, src, dst), "k={k} levels={levels}: {src}->{dst}");
                }
            }
        }
    }
}

#[test]
fn graph_is_connected_and_every_port_is_wired_once() {
    for (k, levels) in [(2, 1), (2, 3), (4, 2), (3, 3)] {
        let t = build_fat_tree(k, levels, LINK, 1 << 16).unwrap();
        let mut seen = std::collections::HashSet::new();
        for l in &t.links {
            assert!(seen.insert((l.a.node, l.a.port)));
            assert!(seen.insert((l.b.node, l.b.port)));
        }
        let ports: usize = t.nodes.iter().map(|n| n.radix).sum();
        assert_eq!(seen.len(), ports);
        assert!((1..t.nodes.len()).all(|v| bfs_hops(&t, 0, v) != usize::MAX));
    }
}

#[test]
fn single_switch_routes_directly() {
    let t = build_single_switch(5, LINK).unwrap();
    let routes = RoutingTable::build(&t);
    for dst in 0..5 {
        assert_eq!(walk(&t, &routes, (dst + 1) % 5, dst, 2), Some(2));
    }
}

#[test]
fn routing_is_deterministic() {
    let t = build_fat_tree(4, 3, LINK, 1 << 16).unwrap();
    let a = RoutingTable::build(&t);
    let b = RoutingTable::build(&t);
    for sw in t.endpoint_count()..t.nodes.len() {
        for dst in 0..t.endpoint_count() {
            assert_eq!(a.route_next_hop(sw, dst), b.route_next_hop(sw, dst));
        }
    }
}
