//! Soft robotic arm control testbed: a discretized Cosserat-rod simulator,
//! a multi-agent reaching environment with online obstacle discovery, a
//! two-stage graph-attention policy with a pooled centralized critic, and a
//! PPO trainer plus evaluation harness.

pub mod actuation;
pub mod discovery;
pub mod env;
pub mod error;
pub mod graph;
pub mod math;
pub mod rng;
pub mod rod;
pub mod scenario;

pub use error::{Error, Result};
