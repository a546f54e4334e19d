//! Link travel times by time-of-day bin, fed back from one simulated day to the next.

use crate::network::Network;

pub const BIN_SEC: u32 = 900;
pub const DEFAULT_BINS: usize = 96;

/// Per-link, per-bin expected traversal seconds; never below free flow.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeField {
    bins: usize,
    values: Vec<f64>,
    free_flow: Vec<f64>,
    /// Smallest value over all bins per link, a lower bound for any departure time.
    minimum: Vec<f64>,
}

impl TravelTimeField {
    pub fn free_flow(net: &Network) -> Self {
        Self::with_bins(net, DEFAULT_BINS)
    }

    pub fn with_bins(net: &Network, bins: usize) -> Self {
        let bins = bins.max(1);
        let free_flow: Vec<f64> = (0..net.link_count()).map(|l| net.free_flow_sec(l) as f64).collect();
        let values = free_flow.iter().flat_map(|&f| std::iter::repeat_n(f, bins)).collect();
        TravelTimeField {
            bins,
            values,
            minimum: free_flow.clone(),
            free_flow,
        }
    }

    pub fn bin_of(&self, t_sec: f64) -> usize {
        ((t_sec.max(0.0) / BIN_SEC as f64) as usize).min(self.bins - 1)
    }

    pub fn get(&self, link: usize, t_sec: f64) -> f64 {
        self.values[link * self.bins + self.bin_of(t_sec)]
    }

    pub fn minimum(&self, link: usize) -> f64 {
        self.minimum[link]
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Overrides one bin; values below free flow are raised to it.
    pub fn set(&mut self, link: usize, bin: usize, seconds: f64) {
        let v = seconds.max(self.free_flow[link]);
        self.values[link * self.bins + bin] = v;
        self.refresh_minimum(link);
    }

    fn refresh_minimum(&mut self, link: usize) {
        let row = &self.values[link * self.bins..(link + 1) * self.bins];
        self.minimum[link] = row.iter().copied().fold(f64::INFINITY, f64::min);
    }

    /// Blends the day's mean observations in with weight `alpha`; bins without
    /// observations are treated as observed at free flow.
    pub fn update(&mut self, obs: &TravelTimeObservations, alpha: f64) {
        for link in 0..self.free_flow.len() {
            for bin in 0..self.bins {
                let i = link * self.bins + bin;
                let seen = if obs.count[i] > 0 {
                    obs.sum[i] / obs.count[i] as f64
                } else {
                    self.free_flow[link]
                };
                self.values[i] = (alpha * seen + (1.0 - alpha) * self.values[i]).max(self.free_flow[link]);
            }
            self.refresh_minimum(link);
        }
    }
}

/// Realized traversal times collected during one day, binned by link entry time.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeObservations {
    bins: usize,
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl TravelTimeObservations {
    pub fn new(links: usize, bins: usize) -> Self {
        TravelTimeObservations {
            bins,
            sum: vec![0.0; links * bins],
            count: vec![0; links * bins],
        }
    }

    pub fn record(&mut self, link: usize, enter_sec: u32, travel_sec: u32) {
        let bin = ((enter_sec / BIN_SEC) as usize).min(self.bins - 1);
        self.sum[link * self.bins + bin] += travel_sec as f64;
        self.count[link * self.bins + bin] += 1;
    }

    pub fn mean(&self, link: usize, bin: usize) -> Option<f64> {
        let i = link * self.bins + bin;
        (self.count[i] > 0).then(|| self.sum[i] / self.count[i] as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::{link, node};

    fn net() -> Network {
        Network::new(
            vec![node(1, 0.0, 0.0), node(2, 500.0, 0.0)],
            vec![link(1, 1, 2, 500.0, 10.0), link(2, 2, 1, 500.0, 10.0)],
        )
        .unwrap()
    }

    #[test]
    fn starts_at_free_flow_and_clamps_late_bins() {
        let n = net();
        let tt = TravelTimeField::free_flow(&n);
        assert_eq!(tt.get(0, 0.0), 50.0);
        assert_eq!(tt.get(0, 200_000.0), 50.0);
        assert_eq!(tt.bin_of(899.0), 0);
        assert_eq!(tt.bin_of(900.0), 1);
        assert_eq!(tt.bin_of(1e9), DEFAULT_BINS - 1);
    }

    #[test]
    fn smoothing_blends_and_decays_to_free_flow() {
        let n = net();
        let mut tt = TravelTimeField::free_flow(&n);
        let mut obs = TravelTimeObservations::new(2, DEFAULT_BINS);
        obs.record(0, 100, 150);
        obs.record(0, 200, 250);
        tt.update(&obs, 0.3);
        assert!((tt.get(0, 0.0) - (0.3 * 200.0 + 0.7 * 50.0)).abs() < 1e-12);
        assert_eq!(tt.get(0, 900.0), 50.0);
        assert_eq!(tt.minimum(0), 50.0);
        let empty = TravelTimeObservations::new(2, DEFAULT_BINS);
        tt.update(&empty, 0.3);
        assert!((tt.get(0, 0.0) - (0.3 * 50.0 + 0.7 * 95.0)).abs() < 1e-12);
    }

    #[test]
    fn values_never_drop_below_free_flow() {
        let n = net();
        let mut tt = TravelTimeField::free_flow(&n);
        tt.set(1, 3, 10.0);
        assert_eq!(tt.get(1, 3.0 * 900.0), 50.0);
    }
}
