//! Time-dependent least-cost routing over links.
//!
//! A route from link `a` to link `b` starts at the downstream end of `a` and
//! includes `b`, so its cost is the sum of the traversal times of every link
//! after `a`. Search is A* with a straight-line bound scaled by the network's
//! fastest pace, which never overestimates because link times never drop
//! below free flow. Among equal-cost routes the one with the lexicographically
//! smaller link-id sequence wins.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::ttfield::TravelTimeField;
use crate::error::{Error, Result};
use crate::network::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    /// Link indices after the origin link, destination included.
    pub links: Vec<usize>,
    pub expected_sec: f64,
    pub distance_m: f64,
}

impl Route {
    pub fn empty() -> Self {
        Route {
            links: Vec::new(),
            expected_sec: 0.0,
            distance_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    f: f64,
    g: f64,
    link: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.g.total_cmp(&other.g))
            .then(self.link.cmp(&other.link))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NONE: usize = usize::MAX;

/// Reusable search state; one per thread.
#[derive(Debug, Clone)]
pub struct Router {
    arrival: Vec<f64>,
    pred: Vec<usize>,
    settled: Vec<bool>,
    touched: Vec<usize>,
    path_a: Vec<usize>,
    path_b: Vec<usize>,
    heap: BinaryHeap<Reverse<Key>>,
}

impl Router {
    pub fn new(net: &Network) -> Self {
        let n = net.link_count();
        Router {
            arrival: vec![f64::INFINITY; n],
            pred: vec![NONE; n],
            settled: vec![false; n],
            touched: Vec::new(),
            path_a: Vec::new(),
            path_b: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &l in &self.touched {
            self.arrival[l] = f64::INFINITY;
            self.pred[l] = NONE;
            self.settled[l] = false;
        }
        self.touched.clear();
    }

    fn touch(&mut self, l: usize) {
        if self.arrival[l].is_infinite() && !self.settled[l] {
            self.touched.push(l);
        }
    }

    fn fill_path(pred: &[usize], mut l: usize, out: &mut Vec<usize>) {
        out.clear();
        while l != NONE {
            out.push(l);
            l = pred[l];
        }
        out.reverse();
    }

    /// Is the path ending in `via` (then `next`) lexicographically smaller than the
    /// current best path to `next`?
    fn smaller_path(&mut self, via: usize, next: usize) -> bool {
        Self::fill_path(&self.pred, via, &mut self.path_a);
        Self::fill_path(&self.pred, self.pred[next], &mut self.path_b);
        self.path_a < self.path_b
    }

    pub fn route(
        &mut self,
        net: &Network,
        tt: &TravelTimeField,
        from: usize,
        to: usize,
        depart_sec: f64,
    ) -> Result<Route> {
        if from == to {
            return Ok(Route::empty());
        }
        self.reset();
        let target = net.to_coord(to);
        let pace = net.min_pace() * (1.0 - 1e-6);
        let h = |l: usize| {
            let c = net.to_coord(l);
            let (dx, dy) = (c.x - target.x, c.y - target.y);
            (dx * dx + dy * dy).sqrt() * pace
        };

        let mut heap = std::mem::take(&mut self.heap);
        heap.clear();
        self.touch(from);
        self.arrival[from] = depart_sec;
        heap.push(Reverse(Key {
            f: depart_sec + h(from),
            g: depart_sec,
            link: from,
        }));
        while let Some(Reverse(Key { g, link, .. })) = heap.pop() {
            if self.settled[link] || g != self.arrival[link] {
                continue;
            }
            self.settled[link] = true;
            if link == to {
                break;
            }
            for &next in net.out_links(link) {
                if self.settled[next] {
                    continue;
                }
                let t = g + tt.get(next, g);
                self.touch(next);
                let better = t < self.arrival[next]
                    || (t == self.arrival[next] && self.pred[next] != link && self.smaller_path(link, next));
                if better {
                    self.arrival[next] = t;
                    self.pred[next] = link;
                    heap.push(Reverse(Key {
                        f: t + h(next),
                        g: t,
                        link: next,
                    }));
                }
            }
        }
        self.heap = heap;
        if !self.settled[to] {
            return Err(Error::Unroutable {
                from: net.link(from).id.0,
                to: net.link(to).id.0,
            });
        }
        let mut links = Vec::new();
        let mut l = to;
        while l != from {
            links.push(l);
            l = self.pred[l];
        }
        links.reverse();
        let distance_m = links.iter().map(|&l| net.link(l).length_m).sum();
        Ok(Route {
            links,
            expected_sec: self.arrival[to] - depart_sec,
            distance_m,
        })
    }

    /// Lower bounds on the cost of reaching the end of `to` from the end of every
    /// link, using each link's smallest binned time.
    pub fn lower_bounds_to(&mut self, net: &Network, tt: &TravelTimeField, to: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; net.link_count()];
        let mut done = vec![false; net.link_count()];
        let mut heap = BinaryHeap::new();
        dist[to] = 0.0;
        heap.push(Reverse(Key {
            f: 0.0,
            g: 0.0,
            link: to,
        }));
        while let Some(Reverse(Key { g, link, .. })) = heap.pop() {
            if done[link] {
                continue;
            }
            done[link] = true;
            let step = g + tt.minimum(link);
            for &prev in net.in_links(link) {
                if step < dist[prev] {
                    dist[prev] = step;
                    heap.push(Reverse(Key {
                        f: step,
                        g: step,
                        link: prev,
                    }));
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::LinkId;
    use crate::network::tests::{link, node};

    fn ids(net: &Network, r: &Route) -> Vec<u32> {
        r.links.iter().map(|&l| net.link(l).id.0).collect()
    }

    #[test]
    fn same_link_is_empty_route() {
        let net = Network::new(
            vec![node(1, 0.0, 0.0), node(2, 1.0, 0.0)],
            vec![link(1, 1, 2, 10.0, 1.0), link(2, 2, 1, 10.0, 1.0)],
        )
        .unwrap();
        let tt = TravelTimeField::free_flow(&net);
        let r = Router::new(&net).route(&net, &tt, 0, 0, 100.0).unwrap();
        assert_eq!(r, Route::empty());
    }

    #[test]
    fn unique_chain() {
        // 0 -> 1 -> 2 -> 3 with link 10 as origin, then 50 s and 30 s links.
        let net = Network::new(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0), node(2, 600.0, 0.0), node(3, 900.0, 0.0)],
            vec![
                link(10, 0, 1, 100.0, 10.0),
                link(11, 1, 2, 500.0, 10.0),
                link(12, 2, 3, 300.0, 10.0),
                link(13, 3, 0, 900.0, 10.0),
            ],
        )
        .unwrap();
        let tt = TravelTimeField::free_flow(&net);
        let r = Router::new(&net).route(&net, &tt, 0, 2, 0.0).unwrap();
        assert_eq!(ids(&net, &r), vec![11, 12]);
        assert_eq!(r.expected_sec, 80.0);
        assert_eq!(r.distance_m, 800.0);
    }

    #[test]
    fn congested_direct_link_loses_to_detour() {
        // Triangle: origin link into A; A->C direct (bin time 100 s) or A->B->C (30 + 30 s).
        let net = Network::new(
            vec![node(0, -100.0, 0.0), node(1, 0.0, 0.0), node(2, 150.0, 100.0), node(3, 300.0, 0.0)],
            vec![
                link(1, 0, 1, 100.0, 10.0),
                link(2, 1, 3, 300.0, 10.0),
                link(3, 1, 2, 300.0, 10.0),
                link(4, 2, 3, 300.0, 10.0),
                link(5, 3, 0, 400.0, 10.0),
            ],
        )
        .unwrap();
        let mut tt = TravelTimeField::free_flow(&net);
        let direct = net.link_idx(LinkId(2)).unwrap();
        tt.set(direct, 0, 100.0);
        // Destination is the link after C so both alternatives end the same way.
        let exit = net.link_idx(LinkId(5)).unwrap();
        let r = Router::new(&net).route(&net, &tt, 0, exit, 0.0).unwrap();
        assert_eq!(ids(&net, &r), vec![3, 4, 5]);
        assert_eq!(r.expected_sec, 30.0 + 30.0 + 40.0);
        // Outside the congested bin the direct link wins.
        let r = Router::new(&net).route(&net, &tt, 0, exit, 3600.0).unwrap();
        assert_eq!(ids(&net, &r), vec![2, 5]);
    }

    #[test]
    fn ties_prefer_smaller_link_sequence() {
        // Square: two equal-cost ways from node 0 to node 3.
        let net = Network::new(
            vec![node(9, -100.0, 0.0), node(0, 0.0, 0.0), node(1, 100.0, 0.0), node(2, 0.0, 100.0), node(3, 100.0, 100.0)],
            vec![
                link(1, 9, 0, 100.0, 10.0),
                link(7, 0, 1, 100.0, 10.0),
                link(3, 0, 2, 100.0, 10.0),
                link(8, 1, 3, 100.0, 10.0),
                link(9, 2, 3, 100.0, 10.0),
                link(2, 3, 9, 300.0, 10.0),
            ],
        )
        .unwrap();
        let tt = TravelTimeField::free_flow(&net);
        let r = Router::new(&net).route(&net, &tt, 0, net.link_idx(LinkId(2)).unwrap(), 0.0).unwrap();
        assert_eq!(ids(&net, &r), vec![3, 9, 2]);
    }

    #[test]
    fn unreachable_is_an_error() {
        let net = Network::new(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)],
            vec![link(1, 0, 1, 100.0, 10.0), link(2, 0, 1, 100.0, 10.0)],
        )
        .unwrap();
        let tt = TravelTimeField::free_flow(&net);
        assert!(matches!(
            Router::new(&net).route(&net, &tt, 0, 1, 0.0),
            Err(Error::Unroutable { from: 1, to: 2 })
        ));
    }

    #[test]
    fn lower_bounds_match_free_flow_distances() {
        let net = Network::new(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0), node(2, 200.0, 0.0)],
            vec![
                link(1, 0, 1, 100.0, 10.0),
                link(2, 1, 2, 100.0, 10.0),
                link(3, 2, 1, 100.0, 10.0),
                link(4, 1, 0, 100.0, 10.0),
            ],
        )
        .unwrap();
        let tt = TravelTimeField::free_flow(&net);
        let mut router = Router::new(&net);
        let lb = router.lower_bounds_to(&net, &tt, 1);
        assert_eq!(lb, vec![10.0, 0.0, 10.0, 20.0]);
        for from in 0..4 {
            if let Ok(r) = router.route(&net, &tt, from, 1, 0.0) {
                assert_eq!(r.expected_sec, lb[from]);
            }
        }
    }
}
