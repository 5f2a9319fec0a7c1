//! Desk-scale simulator of a peer-to-peer quantum cash system.
//!
//! Coins are Wiesner-style product states issued by a mint, moved between
//! peers by teleportation, and transfers are approved by verifiers checking
//! a quantum digital signature. Everything runs on an exact statevector
//! simulator driven by seeded generators, so every scenario is reproducible.

pub mod bits;
pub mod coin;
pub mod network;
pub mod protocols;
pub mod qsig;
pub mod qsim;
pub mod scenario;

use serde::{Deserialize, Serialize};

/// Identifies a participant in the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "node-{}", self.0)
    }
}
