use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::coin::{Coin, CoinState};
use crate::qsig::{CopyWallet, SigningKey};
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Mint,
    Participant,
}

/// One point of the network.
#[derive(Debug)]
pub struct Node {
    id: NodeId,
    role: Role,
    pub(crate) coins: BTreeMap<u64, Coin>,
    pub(crate) wallet: CopyWallet,
    /// Digests of the broadcast ledger entries this node has seen, in order.
    pub(crate) ledger_view: Vec<String>,
    pub(crate) credits: u64,
    pub(crate) signing_key: Option<SigningKey>,
    /// What Bell measurements left behind, by serial.
    pub(crate) residues: BTreeMap<u64, CoinState>,
    rng_stream: u64,
    pub(crate) rng: ChaCha20Rng,
}

impl Node {
    pub(crate) fn new(id: NodeId, role: Role, seed: u64) -> Self {
        let rng_stream = u64::from(id.0) + 1;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(rng_stream);
        Self {
            id,
            role,
            coins: BTreeMap::new(),
            wallet: CopyWallet::new(id),
            ledger_view: Vec::new(),
            credits: 0,
            signing_key: None,
            residues: BTreeMap::new(),
            rng_stream,
            rng,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn rng_stream(&self) -> u64 {
        self.rng_stream
    }

    pub fn coin_serials(&self) -> Vec<u64> {
        self.coins.keys().copied().collect()
    }

    pub fn holds(&self, serial: u64) -> bool {
        self.coins.contains_key(&serial)
    }

    pub fn wallet(&self) -> &CopyWallet {
        &self.wallet
    }

    pub fn ledger_view(&self) -> &[String] {
        &self.ledger_view
    }

    pub fn credits(&self) -> u64 {
        self.credits
    }

    pub fn signing_key_id(&self) -> Option<u64> {
        self.signing_key.as_ref().map(SigningKey::key_id)
    }
}
