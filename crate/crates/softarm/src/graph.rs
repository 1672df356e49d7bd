//! Fixed-budget typed graph observation: agent nodes, discovered obstacle
//! segment nodes, PAD placeholders, dense incoming adjacency, and the two
//! stage-specific attention masks.

use crate::discovery::DiscoveryLedger;
use crate::math::{self, Vec3};
use serde::{Deserialize, Serialize};

pub const FEATURE_DIM: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeType {
    Agent,
    Obst,
    Pad,
}

/// `adjacency[u][v] = true` allows a message from source v to target u.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphObservation {
    pub n_agents: usize,
    pub n_obs_max: usize,
    pub node_features: Vec<[f64; FEATURE_DIM]>,
    pub node_types: Vec<NodeType>,
    pub adjacency: Vec<Vec<bool>>,
    /// Entity -> agent stage: adjacency restricted to agent rows and
    /// obstacle columns, plus self-loops.
    pub stage1_mask: Vec<Vec<bool>>,
    /// Agent <-> agent stage: adjacency restricted to agent rows/columns,
    /// plus self-loops.
    pub stage2_mask: Vec<Vec<bool>>,
}

impl GraphObservation {
    pub fn n_nodes(&self) -> usize {
        self.n_agents + self.n_obs_max
    }

    pub fn agent_rows(&self) -> std::ops::Range<usize> {
        0..self.n_agents
    }
}

/// Per-step observation noise on emitted feature channels.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ObsNoise {
    pub position_std: f64,
    pub velocity_std: f64,
    pub action_feature_std: f64,
}

impl Default for ObsNoise {
    fn default() -> Self {
        Self {
            position_std: 0.1,
            velocity_std: 0.1,
            action_feature_std: 0.2,
        }
    }
}

/// Agent node feature: [p, v, prev action (zero-padded to 3), x* - p,
/// x_tip - p, zeros(6), 0].
pub fn build_agent_features(
    position: Vec3,
    velocity: Vec3,
    prev_action: [f64; 2],
    target: Vec3,
    tip: Vec3,
) -> [f64; FEATURE_DIM] {
    let mut f = [0.0; FEATURE_DIM];
    f[0..3].copy_from_slice(&position);
    f[3..6].copy_from_slice(&velocity);
    f[6] = prev_action[0];
    f[7] = prev_action[1];
    f[8] = 0.0;
    f[9..12].copy_from_slice(&math::sub(target, position));
    f[12..15].copy_from_slice(&math::sub(tip, position));
    f
}

/// Obstacle segment node feature: [c, d, (r, L, s), x* - c, x_tip - c,
/// zeros(6), 0].
pub fn build_obstacle_features(
    center: Vec3,
    axis: Vec3,
    radius: f64,
    bin_length: f64,
    axial_fraction: f64,
    target: Vec3,
    tip: Vec3,
) -> [f64; FEATURE_DIM] {
    let mut f = [0.0; FEATURE_DIM];
    f[0..3].copy_from_slice(&center);
    f[3..6].copy_from_slice(&axis);
    f[6] = radius;
    f[7] = bin_length;
    f[8] = axial_fraction;
    f[9..12].copy_from_slice(&math::sub(target, center));
    f[12..15].copy_from_slice(&math::sub(tip, center));
    f
}

pub struct GraphInputs<'a> {
    pub agent_positions: &'a [Vec3],
    pub agent_velocities: &'a [Vec3],
    pub prev_actions: &'a [[f64; 2]],
    pub target: Vec3,
    pub tip: Vec3,
    pub sensing_radius: f64,
}

/// Assemble the graph for one control step. Entity -> agent edges are
/// recomputed from current proximity; node presence persists with the
/// discovery ledger. Feature noise, when given, perturbs only the emitted
/// position/velocity/previous-action channels of agent nodes.
pub fn build_graph(
    inputs: &GraphInputs<'_>,
    ledger: &DiscoveryLedger,
    n_obs_max: usize,
    noise: Option<(&ObsNoise, &mut rand_chacha::ChaCha8Rng)>,
) -> GraphObservation {
    let n_agents = inputs.agent_positions.len();
    let n_nodes = n_agents + n_obs_max;
    let mut node_features = vec![[0.0; FEATURE_DIM]; n_nodes];
    let mut node_types = vec![NodeType::Pad; n_nodes];
    let mut adjacency = vec![vec![false; n_nodes]; n_nodes];

    for i in 0..n_agents {
        node_types[i] = NodeType::Agent;
        node_features[i] = build_agent_features(
            inputs.agent_positions[i],
            inputs.agent_velocities[i],
            inputs.prev_actions[i],
            inputs.target,
            inputs.tip,
        );
    }

    // kinematic chain between consecutive agents, both directions
    for i in 0..n_agents.saturating_sub(1) {
        adjacency[i][i + 1] = true;
        adjacency[i + 1][i] = true;
    }

    // slotted obstacle nodes + proximity edges
    for (slot, bin_idx) in ledger.slotted_bins() {
        let node = n_agents + slot;
        let bin = ledger.bin(bin_idx);
        node_types[node] = NodeType::Obst;
        node_features[node] = build_obstacle_features(
            bin.center,
            bin.axis,
            bin.radius,
            bin.bin_length,
            bin.axial_fraction,
            inputs.target,
            inputs.tip,
        );
        for (i, &p) in inputs.agent_positions.iter().enumerate() {
            if math::norm(math::sub(p, bin.center)) - bin.radius < inputs.sensing_radius {
                adjacency[i][node] = true;
            }
        }
    }

    if let Some((noise, rng)) = noise {
        use rand_distr::{Distribution, Normal};
        let stds = [noise.position_std, noise.velocity_std, noise.action_feature_std];
        for feat in node_features.iter_mut().take(n_agents) {
            for (block, &std) in stds.iter().enumerate() {
                if std > 0.0 {
                    let normal = Normal::new(0.0, std).expect("valid std");
                    for k in 0..3 {
                        feat[block * 3 + k] += normal.sample(rng);
                    }
                }
            }
        }
    }

    let mut stage1_mask = vec![vec![false; n_nodes]; n_nodes];
    let mut stage2_mask = vec![vec![false; n_nodes]; n_nodes];
    for u in 0..n_nodes {
        stage1_mask[u][u] = true;
        stage2_mask[u][u] = true;
        for v in 0..n_nodes {
            if adjacency[u][v] {
                let u_agent = node_types[u] == NodeType::Agent;
                if u_agent && node_types[v] == NodeType::Obst {
                    stage1_mask[u][v] = true;
                }
                if u_agent && node_types[v] == NodeType::Agent {
                    stage2_mask[u][v] = true;
                }
            }
        }
    }

    GraphObservation {
        n_agents,
        n_obs_max,
        node_features,
        node_types,
        adjacency,
        stage1_mask,
        stage2_mask,
    }
}
