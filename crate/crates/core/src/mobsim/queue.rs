//! Link queues with flow and storage capacity.

use std::collections::VecDeque;

use crate::network::Link;

/// FIFO of vehicles on one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkQueue {
    /// (vehicle, earliest exit second)
    pub vehicles: VecDeque<(usize, u32)>,
    pub storage: usize,
    free_flow_sec: u32,
    rate: f64,
    max_tokens: f64,
    tokens: f64,
    refilled_at: u32,
}

impl LinkQueue {
    pub fn new(link: &Link, flow_factor: f64, storage_factor: f64, cell_length_m: f64) -> Self {
        let rate = link.capacity_veh_per_hour * flow_factor / 3600.0;
        let cells = link.length_m * link.lanes * storage_factor / cell_length_m;
        let storage = if cells.is_finite() { (cells.floor() as usize).max(1) } else { usize::MAX };
        LinkQueue {
            vehicles: VecDeque::new(),
            storage,
            free_flow_sec: link.free_flow_sec(),
            rate,
            max_tokens: rate.max(1.0),
            tokens: rate.max(1.0),
            refilled_at: 0,
        }
    }

    pub fn occupancy(&self) -> usize {
        self.vehicles.len()
    }

    pub fn has_space(&self) -> bool {
        self.vehicles.len() < self.storage
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn enter(&mut self, vehicle: usize, now: u32) {
        self.vehicles.push_back((vehicle, now + self.free_flow_sec));
    }

    pub fn head(&self) -> Option<(usize, u32)> {
        self.vehicles.front().copied()
    }

    /// Head vehicle that has reached the end of the link.
    pub fn ready_head(&self, now: u32) -> Option<usize> {
        self.vehicles.front().filter(|(_, t)| now >= *t).map(|(v, _)| *v)
    }

    fn refill(&mut self, now: u32) {
        if self.rate.is_infinite() {
            self.tokens = f64::INFINITY;
        } else if now > self.refilled_at {
            self.tokens = (self.tokens + self.rate * (now - self.refilled_at) as f64).min(self.max_tokens);
        }
        self.refilled_at = self.refilled_at.max(now);
    }

    pub fn has_token(&mut self, now: u32) -> bool {
        self.refill(now);
        // Absorbs rounding in rate·dt so that e.g. six sixths make a whole token.
        self.tokens >= 1.0 - 1e-9
    }

    /// Removes the head, consuming a flow token.
    pub fn pop_exit(&mut self, now: u32) -> Option<(usize, u32)> {
        self.refill(now);
        self.tokens -= 1.0;
        self.vehicles.pop_front()
    }

    /// Removes the head without a token (a stuck vehicle taken off the road).
    pub fn pop_stuck(&mut self) -> Option<(usize, u32)> {
        self.vehicles.pop_front()
    }
}

/// Moves every vehicle that may leave `queue` this second into `downstream`.
///
/// The head exits when it has reached the link end, a flow token is
/// available and `downstream` has free storage. Returns the vehicles in exit order.
pub fn process_link_queue(queue: &mut LinkQueue, now: u32, downstream: &mut LinkQueue) -> Vec<usize> {
    let mut out = Vec::new();
    while let Some(v) = queue.ready_head(now) {
        if !downstream.has_space() || !queue.has_token(now) {
            break;
        }
        queue.pop_exit(now);
        downstream.enter(v, now);
        out.push(v);
    }
    out
}
