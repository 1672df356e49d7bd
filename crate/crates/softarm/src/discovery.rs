//! Persistent per-episode ledger of discovered obstacle segments.
//!
//! Each cylinder is cut along its axis into bins of length `seg_length`.
//! A bin becomes discovered the first time any agent node comes within the
//! sensing radius of its surface, and it keeps its pad-slot assignment for
//! the rest of the episode.

use crate::math::{self, Vec3};
use crate::rod::Cylinder;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinDescriptor {
    pub cylinder_index: usize,
    pub center: Vec3,
    pub axis: Vec3,
    pub radius: f64,
    pub bin_length: f64,
    /// Normalized axial position of the bin center in [0, 1].
    pub axial_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryLedger {
    bins: Vec<BinDescriptor>,
    discovered: Vec<bool>,
    /// Pad-slot index per bin, assigned first-free on discovery.
    slot_of_bin: Vec<Option<usize>>,
    /// Slot -> bin index.
    slots: Vec<Option<usize>>,
    pub seg_length: f64,
    pub sensing_radius: f64,
    /// Bins discovered after all slots were taken.
    pub unslotted: usize,
}

impl DiscoveryLedger {
    pub fn new(
        cylinders: &[Cylinder],
        seg_length: f64,
        sensing_radius: f64,
        n_obs_max: usize,
    ) -> Self {
        assert!(seg_length > 0.0 && sensing_radius > 0.0);
        let mut bins = Vec::new();
        for (ci, cyl) in cylinders.iter().enumerate() {
            let n_bins = (cyl.length / seg_length).ceil().max(1.0) as usize;
            for b in 0..n_bins {
                let lo = b as f64 * seg_length;
                let hi = (lo + seg_length).min(cyl.length);
                let mid = 0.5 * (lo + hi);
                bins.push(BinDescriptor {
                    cylinder_index: ci,
                    center: math::add(cyl.start_point, math::scale(cyl.axis_direction, mid)),
                    axis: cyl.axis_direction,
                    radius: cyl.radius,
                    bin_length: hi - lo,
                    axial_fraction: mid / cyl.length,
                });
            }
        }
        let n = bins.len();
        Self {
            bins,
            discovered: vec![false; n],
            slot_of_bin: vec![None; n],
            slots: vec![None; n_obs_max],
            seg_length,
            sensing_radius,
            unslotted: 0,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn bin(&self, idx: usize) -> &BinDescriptor {
        &self.bins[idx]
    }

    pub fn is_discovered(&self, idx: usize) -> bool {
        self.discovered[idx]
    }

    pub fn discovered_count(&self) -> usize {
        self.discovered.iter().filter(|&&d| d).count()
    }

    /// (slot, bin index) pairs for every occupied slot, in slot order.
    pub fn slotted_bins(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(slot, bin)| bin.map(|b| (slot, b)))
    }

    /// Mark every undiscovered bin whose surface lies within the sensing
    /// radius of any agent, assigning the first free pad slot. Returns the
    /// number of newly discovered bins.
    pub fn update_discovery(&mut self, agent_positions: &[Vec3]) -> usize {
        let mut newly = 0usize;
        for idx in 0..self.bins.len() {
            if self.discovered[idx] {
                continue;
            }
            let bin = &self.bins[idx];
            let sensed = agent_positions
                .iter()
                .any(|&p| math::norm(math::sub(p, bin.center)) - bin.radius < self.sensing_radius);
            if !sensed {
                continue;
            }
            self.discovered[idx] = true;
            newly += 1;
            match self.slots.iter().position(|s| s.is_none()) {
                Some(slot) => {
                    self.slots[slot] = Some(idx);
                    self.slot_of_bin[idx] = Some(slot);
                }
                None => {
                    self.unslotted += 1;
                    log::debug!(
                        "obstacle bin {idx} discovered with all {} slots taken",
                        self.slots.len()
                    );
                }
            }
        }
        newly
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl(length: f64) -> Cylinder {
        Cylinder {
            start_point: [0.5, -length / 2.0, 0.0],
            axis_direction: [0.0, 1.0, 0.0],
            length,
            radius: 0.04,
        }
    }

    #[test]
    fn bin_count_is_ceil() {
        let l = DiscoveryLedger::new(&[cyl(0.6)], 0.1, 0.15, 32);
        assert_eq!(l.n_bins(), 6);
        let l = DiscoveryLedger::new(&[cyl(0.55)], 0.1, 0.15, 32);
        assert_eq!(l.n_bins(), 6);
        // short last bin keeps its actual length and fraction
        let last = l.bin(5);
        assert!((last.bin_length - 0.05).abs() < 1e-12);
        assert!((last.axial_fraction - 0.525 / 0.55).abs() < 1e-12);
    }

    #[test]
    fn far_agents_discover_nothing() {
        let mut l = DiscoveryLedger::new(&[cyl(0.6)], 0.1, 0.15, 32);
        assert_eq!(l.update_discovery(&[[10.0, 0.0, 0.0]]), 0);
        assert_eq!(l.discovered_count(), 0);
    }

    #[test]
    fn agent_at_center_discovers_bin() {
        let mut l = DiscoveryLedger::new(&[cyl(0.6)], 0.1, 0.15, 32);
        let c = l.bin(0).center;
        assert!(l.update_discovery(&[c]) >= 1);
        assert!(l.is_discovered(0));
        assert_eq!(l.slotted_bins().next(), Some((0, 0)));
    }

    #[test]
    fn discovery_is_monotone_and_idempotent() {
        let mut l = DiscoveryLedger::new(&[cyl(0.6)], 0.1, 0.15, 32);
        let pos = [[0.5, 0.0, 0.0]];
        let first = l.update_discovery(&pos);
        assert!(first > 0);
        assert_eq!(l.update_discovery(&pos), 0, "same positions, nothing new");
        assert_eq!(l.discovered_count(), first);
    }

    #[test]
    fn first_free_slot_assignment_and_overflow() {
        let mut l = DiscoveryLedger::new(&[cyl(0.6)], 0.1, 0.15, 3);
        // sweep along the cylinder so every bin is sensed
        for k in 0..=12 {
            let y = -0.3 + 0.05 * k as f64;
            l.update_discovery(&[[0.5, y, 0.0]]);
        }
        assert_eq!(l.discovered_count(), 6);
        let slots: Vec<(usize, usize)> = l.slotted_bins().collect();
        assert_eq!(slots.len(), 3);
        assert_eq!(slots[0].0, 0);
        assert_eq!(slots[1].0, 1);
        assert_eq!(slots[2].0, 2);
        assert_eq!(l.unslotted, 3);
    }
}
