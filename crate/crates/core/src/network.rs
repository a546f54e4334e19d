//! Directed road network: nodes, links and adjacency by dense index.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csvio::{read_records, write_records};
use crate::error::{Error, Result};
use crate::ids::{LinkId, NodeId};
use crate::types::Coord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub coord: Coord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub freespeed_mps: f64,
    pub capacity_veh_per_hour: f64,
    pub lanes: f64,
}

impl Link {
    /// Whole seconds needed to traverse the link at free speed, at least one.
    pub fn free_flow_sec(&self) -> u32 {
        ((self.length_m / self.freespeed_mps - 1e-9).ceil() as u32).max(1)
    }
}

/// Links are stored sorted by id; `usize` indices below refer to that order.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    node_index: BTreeMap<NodeId, usize>,
    link_index: BTreeMap<LinkId, usize>,
    from_idx: Vec<usize>,
    to_idx: Vec<usize>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
    free_flow: Vec<u32>,
    /// Seconds per meter of straight-line distance that no link beats.
    min_pace: f64,
}

impl Network {
    pub fn new(mut nodes: Vec<Node>, mut links: Vec<Link>) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        links.sort_by_key(|l| l.id);
        let mut node_index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id, i).is_some() {
                return Err(Error::Data(format!("duplicate node {}", n.id)));
            }
        }
        let mut link_index = BTreeMap::new();
        let mut from_idx = Vec::with_capacity(links.len());
        let mut to_idx = Vec::with_capacity(links.len());
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut in_links = vec![Vec::new(); nodes.len()];
        for (i, l) in links.iter().enumerate() {
            if link_index.insert(l.id, i).is_some() {
                return Err(Error::Data(format!("duplicate link {}", l.id)));
            }
            if !(l.length_m > 0.0) || !(l.freespeed_mps > 0.0) {
                return Err(Error::Data(format!("link {} needs positive length and speed", l.id)));
            }
            if !(l.capacity_veh_per_hour > 0.0) || !(l.lanes > 0.0) {
                return Err(Error::Data(format!("link {} needs positive capacity and lanes", l.id)));
            }
            let f = *node_index
                .get(&l.from)
                .ok_or_else(|| Error::Data(format!("link {} starts at unknown node {}", l.id, l.from)))?;
            let t = *node_index
                .get(&l.to)
                .ok_or_else(|| Error::Data(format!("link {} ends at unknown node {}", l.id, l.to)))?;
            from_idx.push(f);
            to_idx.push(t);
            out_links[f].push(i);
            in_links[t].push(i);
        }
        let free_flow: Vec<u32> = links.iter().map(Link::free_flow_sec).collect();
        let min_pace = links
            .iter()
            .enumerate()
            .filter_map(|(i, _)| {
                let d = nodes[from_idx[i]].coord.distance(&nodes[to_idx[i]].coord);
                (d > 0.0).then(|| free_flow[i] as f64 / d)
            })
            .fold(f64::INFINITY, f64::min);
        let net = Network {
            nodes,
            links,
            node_index,
            link_index,
            from_idx,
            to_idx,
            out_links,
            in_links,
            free_flow,
            min_pace: if min_pace.is_finite() { min_pace } else { 0.0 },
        };
        net.check_weakly_connected()?;
        Ok(net)
    }

    fn check_weakly_connected(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Ok(());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(n) = queue.pop_front() {
            let next = self.out_links[n]
                .iter()
                .map(|&l| self.to_idx[l])
                .chain(self.in_links[n].iter().map(|&l| self.from_idx[l]));
            for m in next.collect::<Vec<_>>() {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(Error::Data(format!(
                "network is not connected: node {} is unreachable",
                self.nodes[i].id
            ))),
            None => Ok(()),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, idx: usize) -> &Link {
        &self.links[idx]
    }

    pub fn link_idx(&self, id: LinkId) -> Option<usize> {
        self.link_index.get(&id).copied()
    }

    pub fn node_idx(&self, id: NodeId) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    pub fn out_links(&self, link: usize) -> &[usize] {
        &self.out_links[self.to_idx[link]]
    }

    pub fn in_links(&self, link: usize) -> &[usize] {
        &self.in_links[self.from_idx[link]]
    }

    pub fn from_coord(&self, link: usize) -> Coord {
        self.nodes[self.from_idx[link]].coord
    }

    pub fn to_coord(&self, link: usize) -> Coord {
        self.nodes[self.to_idx[link]].coord
    }

    pub fn free_flow_sec(&self, link: usize) -> u32 {
        self.free_flow[link]
    }

    /// Lower bound on travel seconds between two points for any route.
    pub fn min_pace(&self) -> f64 {
        self.min_pace
    }

    /// Link closest to `c` by point-to-segment distance; ties go to the smaller id.
    pub fn nearest_link(&self, c: &Coord) -> Option<usize> {
        (0..self.links.len()).min_by(|&a, &b| {
            self.segment_distance(a, c).total_cmp(&self.segment_distance(b, c)).then(a.cmp(&b))
        })
    }

    fn segment_distance(&self, link: usize, c: &Coord) -> f64 {
        let a = self.from_coord(link);
        let b = self.to_coord(link);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((c.x - a.x) * dx + (c.y - a.y) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        c.distance(&Coord::new(a.x + t * dx, a.y + t * dy))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct NodeRow {
    node_id: u32,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct LinkRow {
    link_id: u32,
    from_node: u32,
    to_node: u32,
    length_m: f64,
    freespeed_mps: f64,
    flow_capacity_veh_per_hour: f64,
    lanes: f64,
}

pub const NODE_HEADER: &[&str] = &["nodeId", "x", "y"];
pub const LINK_HEADER: &[&str] = &[
    "linkId",
    "fromNode",
    "toNode",
    "lengthM",
    "freespeedMps",
    "flowCapacityVehPerHour",
    "lanes",
];

pub fn read_network(nodes: &Path, links: &Path) -> Result<Network> {
    let node_rows: Vec<NodeRow> = read_records(nodes)?;
    let link_rows: Vec<LinkRow> = read_records(links)?;
    Network::new(
        node_rows
            .into_iter()
            .map(|r| Node {
                id: NodeId(r.node_id),
                coord: Coord::new(r.x, r.y),
            })
            .collect(),
        link_rows
            .into_iter()
            .map(|r| Link {
                id: LinkId(r.link_id),
                from: NodeId(r.from_node),
                to: NodeId(r.to_node),
                length_m: r.length_m,
                freespeed_mps: r.freespeed_mps,
                capacity_veh_per_hour: r.flow_capacity_veh_per_hour,
                lanes: r.lanes,
            })
            .collect(),
    )
}

pub fn write_network(nodes: &Path, links: &Path, net: &Network) -> Result<()> {
    write_records(
        nodes,
        NODE_HEADER,
        net.nodes().iter().map(|n| NodeRow {
            node_id: n.id.0,
            x: n.coord.x,
            y: n.coord.y,
        }),
    )?;
    write_records(
        links,
        LINK_HEADER,
        net.links().iter().map(|l| LinkRow {
            link_id: l.id.0,
            from_node: l.from.0,
            to_node: l.to.0,
            length_m: l.length_m,
            freespeed_mps: l.freespeed_mps,
            flow_capacity_veh_per_hour: l.capacity_veh_per_hour,
            lanes: l.lanes,
        }),
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn node(id: u32, x: f64, y: f64) -> Node {
        Node {
            id: NodeId(id),
            coord: Coord::new(x, y),
        }
    }

    pub(crate) fn link(id: u32, from: u32, to: u32, length_m: f64, speed: f64) -> Link {
        Link {
            id: LinkId(id),
            from: NodeId(from),
            to: NodeId(to),
            length_m,
            freespeed_mps: speed,
            capacity_veh_per_hour: 3600.0,
            lanes: 1.0,
        }
    }

    #[test]
    fn free_flow_rounds_up_to_whole_seconds() {
        assert_eq!(link(1, 0, 1, 500.0, 10.0).free_flow_sec(), 50);
        assert_eq!(link(1, 0, 1, 500.0, 50.0 / 3.6).free_flow_sec(), 36);
        assert_eq!(link(1, 0, 1, 501.0, 10.0).free_flow_sec(), 51);
        assert_eq!(link(1, 0, 1, 1.0, 100.0).free_flow_sec(), 1);
    }

    #[test]
    fn adjacency_and_validation() {
        let net = Network::new(
            vec![node(2, 100.0, 0.0), node(1, 0.0, 0.0), node(3, 200.0, 0.0)],
            vec![link(20, 2, 3, 100.0, 10.0), link(10, 1, 2, 100.0, 10.0), link(11, 2, 1, 100.0, 10.0)],
        )
        .unwrap();
        assert_eq!(net.link(0).id, LinkId(10));
        let l10 = net.link_idx(LinkId(10)).unwrap();
        let outs: Vec<LinkId> = net.out_links(l10).iter().map(|&i| net.link(i).id).collect();
        assert_eq!(outs, vec![LinkId(11), LinkId(20)]);
        assert!((net.min_pace() - 0.1).abs() < 1e-12);

        assert!(Network::new(vec![node(1, 0.0, 0.0)], vec![link(1, 1, 9, 10.0, 1.0)]).is_err());
        assert!(Network::new(
            vec![node(1, 0.0, 0.0), node(2, 1.0, 0.0)],
            vec![link(1, 1, 2, 0.0, 1.0)]
        )
        .is_err());
        let disconnected = Network::new(
            vec![node(1, 0.0, 0.0), node(2, 1.0, 0.0), node(3, 5.0, 0.0)],
            vec![link(1, 1, 2, 1.0, 1.0)],
        );
        assert!(disconnected.is_err());
    }

    #[test]
    fn nearest_link_by_segment_distance() {
        let net = Network::new(
            vec![node(1, 0.0, 0.0), node(2, 100.0, 0.0), node(3, 100.0, 100.0)],
            vec![link(1, 1, 2, 100.0, 10.0), link(2, 2, 1, 100.0, 10.0), link(3, 2, 3, 100.0, 10.0)],
        )
        .unwrap();
        assert_eq!(net.nearest_link(&Coord::new(50.0, 10.0)), Some(0));
        assert_eq!(net.nearest_link(&Coord::new(110.0, 60.0)), Some(2));
    }

    #[test]
    fn csv_round_trip() {
        let net = Network::new(
            vec![node(1, 0.0, 0.0), node(2, 100.5, 0.25)],
            vec![link(1, 1, 2, 100.5, 13.888888888888889), link(2, 2, 1, 100.5, 10.0)],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (n, l) = (dir.path().join("nodes.csv"), dir.path().join("links.csv"));
        write_network(&n, &l, &net).unwrap();
        let back = read_network(&n, &l).unwrap();
        assert_eq!(back.nodes(), net.nodes());
        assert_eq!(back.links(), net.links());
    }
}
