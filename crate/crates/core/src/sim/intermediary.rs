//! The relaying intermediary of one cluster election.
//!
//! It hands every participant a fresh shadow id, carries sealed payloads
//! between them without opening any, and enforces the per-message
//! deadline. The real-to-shadow map lives only here and is dropped with
//! the election.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::{SealKey, Sealer, ShadowId};
use crate::sim::wire::Message;
use crate::sim::{LatencyModel, VoterId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Node(usize),
    Intermediary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayStats {
    pub messages: usize,
    pub bytes: usize,
    /// Sealed payloads that still parsed as cleartext. Must stay zero.
    pub opacity_violations: usize,
    pub clock_ms: u64,
}

/// Metadata the intermediary may keep about a relayed message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelayRecord {
    pub from: Endpoint,
    pub to: Endpoint,
    pub sealed_len: usize,
    pub latency_ms: u64,
}

/// The message missed its deadline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Timeout {
    pub from: Endpoint,
    pub to: Endpoint,
    pub latency_ms: u64,
}

pub struct Intermediary<'a> {
    sealer: &'a dyn Sealer,
    shadow_map: BTreeMap<VoterId, ShadowId>,
    /// Shadow id by ring position.
    shadows: Vec<ShadowId>,
    keys: Vec<SealKey>,
    own_shadow: ShadowId,
    own_key: SealKey,
    latency: LatencyModel,
    timeout_ms: u64,
    nonce: u64,
    stats: RelayStats,
    log: Option<Vec<RelayRecord>>,
}

impl<'a> Intermediary<'a> {
    /// Open an election for `roster` (ring order), drawing a fresh shadow
    /// id per participant.
    pub fn open<R: Rng + ?Sized>(
        roster: &[VoterId],
        sealer: &'a dyn Sealer,
        latency: LatencyModel,
        timeout_ms: u64,
        traced: bool,
        rng: &mut R,
    ) -> Self {
        let mut used = BTreeSet::new();
        let mut fresh = || loop {
            let s = ShadowId(rng.random());
            if used.insert(s) {
                break s;
            }
        };
        let shadows: Vec<ShadowId> = roster.iter().map(|_| fresh()).collect();
        let own_shadow = fresh();
        let shadow_map = roster.iter().copied().zip(shadows.iter().copied()).collect();
        let keys = shadows.iter().map(|&s| sealer.seal_key(s)).collect();
        Intermediary {
            sealer,
            shadow_map,
            keys,
            own_key: sealer.seal_key(own_shadow),
            own_shadow,
            shadows,
            latency,
            timeout_ms,
            nonce: 0,
            stats: RelayStats::default(),
            log: traced.then(Vec::new),
        }
    }

    pub fn shadows(&self) -> &[ShadowId] {
        &self.shadows
    }

    pub fn shadow_of(&self, voter: VoterId) -> Option<ShadowId> {
        self.shadow_map.get(&voter).copied()
    }

    pub fn stats(&self) -> RelayStats {
        self.stats
    }

    pub fn log(&self) -> &[RelayRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    fn endpoint_key(&self, e: Endpoint) -> (ShadowId, SealKey) {
        match e {
            Endpoint::Node(p) => (self.shadows[p], self.keys[p]),
            Endpoint::Intermediary => (self.own_shadow, self.own_key),
        }
    }

    /// Seal `plaintext` for `to`, carry it, and open it at `to`. A stalling
    /// sender always misses the deadline.
    pub fn relay<R: Rng + ?Sized>(
        &mut self,
        from: Endpoint,
        to: Endpoint,
        plaintext: &[u8],
        sender_stalls: bool,
        rng: &mut R,
    ) -> Result<Vec<u8>, Timeout> {
        let (shadow, key) = self.endpoint_key(to);
        self.nonce += 1;
        let sealed = self.sealer.seal(key, shadow, self.nonce, plaintext);
        if Message::looks_cleartext(&sealed)
            || Message::looks_cleartext(&sealed[sealed.len().min(crate::crypto::SEAL_HEADER)..])
        {
            self.stats.opacity_violations += 1;
        }
        let latency_ms = if sender_stalls {
            self.timeout_ms + 1 + rng.random_range(0..self.timeout_ms.max(1))
        } else {
            self.latency.sample(rng)
        };
        self.stats.messages += 1;
        self.stats.bytes += sealed.len();
        self.stats.clock_ms += latency_ms.min(self.timeout_ms);
        if let Some(log) = &mut self.log {
            log.push(RelayRecord {
                from,
                to,
                sealed_len: sealed.len(),
                latency_ms,
            });
        }
        if latency_ms > self.timeout_ms {
            return Err(Timeout {
                from,
                to,
                latency_ms,
            });
        }
        Ok(self
            .sealer
            .unseal(key, shadow, &sealed)
            .expect("receiver opens its own envelope"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballot::BallotIdx;
    use crate::crypto::KeyedHashScheme;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn roster() -> Vec<VoterId> {
        (10..14).map(VoterId).collect()
    }

    #[test]
    fn delivers_bit_exact_and_stays_opaque() {
        let scheme = KeyedHashScheme::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut im = Intermediary::open(&roster(), &scheme, LatencyModel::default(), 1000, true, &mut rng);
        let msg = Message::Forward {
            round: 1,
            list: (0..40).map(BallotIdx).collect(),
        }
        .encode();
        let got = im
            .relay(Endpoint::Node(0), Endpoint::Node(1), &msg, false, &mut rng)
            .unwrap();
        assert_eq!(got, msg);
        assert_eq!(im.stats().messages, 1);
        assert_eq!(im.stats().opacity_violations, 0);
        assert_eq!(im.log()[0].sealed_len, msg.len() + crate::crypto::SEAL_HEADER);
    }

    #[test]
    fn shadows_are_a_fresh_bijection() {
        let scheme = KeyedHashScheme::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Intermediary::open(&roster(), &scheme, LatencyModel::default(), 1000, false, &mut rng);
        let b = Intermediary::open(&roster(), &scheme, LatencyModel::default(), 1000, false, &mut rng);
        let set: BTreeSet<_> = a.shadows().iter().collect();
        assert_eq!(set.len(), 4);
        assert_ne!(a.shadows(), b.shadows());
        assert_eq!(a.shadow_of(VoterId(12)), Some(a.shadows()[2]));
        assert_eq!(a.shadow_of(VoterId(99)), None);
    }

    #[test]
    fn stalls_time_out() {
        let scheme = KeyedHashScheme::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut im = Intermediary::open(&roster(), &scheme, LatencyModel::default(), 1000, false, &mut rng);
        let msg = Message::Query { option: 0 }.encode();
        let t = im
            .relay(Endpoint::Node(2), Endpoint::Node(3), &msg, true, &mut rng)
            .unwrap_err();
        assert!(t.latency_ms > 1000);
        assert_eq!(t.from, Endpoint::Node(2));
    }
}
