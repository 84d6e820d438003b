//! Signing and sealing abstractions.
//!
//! The engine never depends on a concrete cryptosystem. [`KeyedHashScheme`]
//! is a deterministic stand-in: keys derive from a scheme secret, signatures
//! are keyed SHA-256 digests and sealing is a keyed XOR stream. It is good
//! enough to make tampering and opacity observable in simulation and nothing
//! more.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// Temporal per-election pseudonym handed out by the intermediary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShadowId(pub u64);

impl fmt::Display for ShadowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for ShadowId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ShadowId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_fixed_hex::<8>(&s)
            .map(|b| ShadowId(u64::from_be_bytes(b)))
            .ok_or_else(|| serde::de::Error::custom("shadow id must be 16 lowercase hex digits"))
    }
}

/// Anyone who can sign: a voter under its pseudonym, or the intermediary
/// instance serving a cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Principal {
    Voter(ShadowId),
    Intermediary(u64),
}

impl Principal {
    fn tag(&self) -> [u8; 9] {
        let (t, v) = match self {
            Principal::Voter(s) => (b'V', s.0),
            Principal::Intermediary(c) => (b'I', *c),
        };
        let mut out = [0u8; 9];
        out[0] = t;
        out[1..].copy_from_slice(&v.to_be_bytes());
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; 32]);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(self.0))
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_fixed_hex::<32>(&s)
            .map(Signature)
            .ok_or_else(|| serde::de::Error::custom("signature must be 64 lowercase hex digits"))
    }
}

fn parse_fixed_hex<const N: usize>(s: &str) -> Option<[u8; N]> {
    if s.len() != 2 * N || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).ok()?;
    Some(out)
}

pub trait SignatureScheme: Send + Sync {
    fn sign(&self, signer: Principal, msg: &[u8]) -> Signature;
    fn verify(&self, signer: Principal, msg: &[u8], sig: &Signature) -> bool;
}

/// Per-receiver sealing key, derived once per election.
#[derive(Clone, Copy, Debug)]
pub struct SealKey(pub u64);

/// Seals payloads so that only the receiver can open them.
pub trait Sealer: Send + Sync {
    fn seal_key(&self, receiver: ShadowId) -> SealKey;
    fn seal(&self, key: SealKey, receiver: ShadowId, nonce: u64, plaintext: &[u8]) -> Vec<u8>;
    fn unseal(&self, key: SealKey, receiver: ShadowId, sealed: &[u8]) -> Option<Vec<u8>>;
}

/// Bytes of header the default sealer puts in front of the ciphertext:
/// receiver pseudonym then nonce.
pub const SEAL_HEADER: usize = 16;

#[derive(Clone)]
pub struct KeyedHashScheme {
    secret: [u8; 32],
}

/// Secret used when no other is configured, so that boards written by one
/// process verify in another.
pub const DEFAULT_SCHEME_SECRET: &str = "clustervote-test-scheme";

impl Default for KeyedHashScheme {
    fn default() -> Self {
        Self::new(DEFAULT_SCHEME_SECRET.as_bytes())
    }
}

impl KeyedHashScheme {
    pub fn new(secret: &[u8]) -> Self {
        KeyedHashScheme {
            secret: Sha256::digest(secret).into(),
        }
    }

    fn key(&self, purpose: u8, principal: Principal) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.secret);
        h.update([purpose]);
        h.update(principal.tag());
        h.finalize().into()
    }
}

impl SignatureScheme for KeyedHashScheme {
    fn sign(&self, signer: Principal, msg: &[u8]) -> Signature {
        let mut h = Sha256::new();
        h.update(self.key(b's', signer));
        h.update(msg);
        Signature(h.finalize().into())
    }

    fn verify(&self, signer: Principal, msg: &[u8], sig: &Signature) -> bool {
        self.sign(signer, msg) == *sig
    }
}

impl Sealer for KeyedHashScheme {
    fn seal_key(&self, receiver: ShadowId) -> SealKey {
        let k = self.key(b'x', Principal::Voter(receiver));
        SealKey(u64::from_le_bytes(k[..8].try_into().unwrap()))
    }

    fn seal(&self, key: SealKey, receiver: ShadowId, nonce: u64, plaintext: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(SEAL_HEADER + plaintext.len());
        out.extend_from_slice(&receiver.0.to_le_bytes());
        out.extend_from_slice(&nonce.to_le_bytes());
        out.extend_from_slice(plaintext);
        xor_stream(key, nonce, &mut out[SEAL_HEADER..]);
        out
    }

    fn unseal(&self, key: SealKey, receiver: ShadowId, sealed: &[u8]) -> Option<Vec<u8>> {
        if sealed.len() < SEAL_HEADER || sealed[..8] != receiver.0.to_le_bytes() {
            return None;
        }
        let nonce = u64::from_le_bytes(sealed[8..16].try_into().unwrap());
        let mut body = sealed[SEAL_HEADER..].to_vec();
        xor_stream(key, nonce, &mut body);
        Some(body)
    }
}

fn xor_stream(key: SealKey, nonce: u64, buf: &mut [u8]) {
    let mut state = key.0 ^ nonce.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for chunk in buf.chunks_mut(8) {
        let ks = splitmix64(&mut state).to_le_bytes();
        for (b, k) in chunk.iter_mut().zip(ks) {
            *b ^= k;
        }
    }
}

pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a parent seed and an index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut s = parent ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03);
    splitmix64(&mut s);
    splitmix64(&mut s)
}
