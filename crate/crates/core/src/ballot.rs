//! Virtual ballots and the per-election ballot pool.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::ClusterConfig;

/// Unlinkable 128-bit ballot serial, rendered as 32 lowercase hex digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Serial(pub u128);

impl fmt::Display for Serial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("serial must be 32 lowercase hex digits")]
pub struct SerialParseError;

impl FromStr for Serial {
    type Err = SerialParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 32 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(SerialParseError);
        }
        u128::from_str_radix(s, 16)
            .map(Serial)
            .map_err(|_| SerialParseError)
    }
}

impl Serialize for Serial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Serial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A virtual ballot: plaintext option tag plus opaque serial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VBallotId {
    pub option: usize,
    pub serial: Serial,
}

/// Position of a ballot in the publicly broadcast pool. Messages refer to
/// ballots by this index; the pool itself is public.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallotIdx(pub u32);

impl BallotIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

/// Fixed-capacity bitset over pool indices.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BallotSet {
    words: Vec<u64>,
    len: usize,
}

impl BallotSet {
    pub fn with_capacity(capacity: usize) -> Self {
        BallotSet {
            words: vec![0; capacity.div_ceil(64)],
            len: 0,
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut s = Self::with_capacity(capacity);
        for i in 0..capacity {
            s.insert(BallotIdx(i as u32));
        }
        s
    }

    pub fn from_slice(capacity: usize, ids: &[BallotIdx]) -> Self {
        let mut s = Self::with_capacity(capacity);
        for &b in ids {
            s.insert(b);
        }
        s
    }

    pub fn contains(&self, b: BallotIdx) -> bool {
        let i = b.get();
        self.words
            .get(i / 64)
            .is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    /// Returns false if already present.
    pub fn insert(&mut self, b: BallotIdx) -> bool {
        let i = b.get();
        let w = &mut self.words[i / 64];
        let bit = 1 << (i % 64);
        if *w & bit != 0 {
            return false;
        }
        *w |= bit;
        self.len += 1;
        true
    }

    pub fn remove(&mut self, b: BallotIdx) -> bool {
        let i = b.get();
        let Some(w) = self.words.get_mut(i / 64) else {
            return false;
        };
        let bit = 1 << (i % 64);
        if *w & bit == 0 {
            return false;
        }
        *w &= !bit;
        self.len -= 1;
        true
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.words.len() * 64
    }

    pub fn iter(&self) -> impl Iterator<Item = BallotIdx> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(BallotIdx((wi * 64 + bit) as u32))
            })
        })
    }
}

/// One extraction as an observer would log it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub round: usize,
    pub node: usize,
    pub ballot: BallotIdx,
}

/// The ballot universe of one cluster election and the list currently in
/// flight between nodes.
#[derive(Clone, Debug)]
pub struct BallotPool {
    all: Vec<VBallotId>,
    by_serial: HashMap<Serial, BallotIdx>,
    ao: usize,
    remaining: Vec<BallotIdx>,
    extraction_log: Vec<Extraction>,
}

/// Mint `ao * sc * (k + 1)` unique ids, grouped by option.
pub fn create_pool(config: &ClusterConfig, seed: u64) -> BallotPool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = Vec::with_capacity(config.pool_size());
    let mut seen = std::collections::HashSet::with_capacity(config.pool_size());
    for option in 0..config.ao {
        let mut minted = 0;
        while minted < config.per_option() {
            let serial = Serial(rng.random());
            if seen.insert(serial) {
                ids.push(VBallotId { option, serial });
                minted += 1;
            }
        }
    }
    BallotPool::from_ids(config.ao, ids).expect("minted ids are unique")
}

impl BallotPool {
    /// Build a pool from explicit ids. Returns `None` on duplicate serials or
    /// an option tag outside `0..ao`.
    pub fn from_ids(ao: usize, ids: Vec<VBallotId>) -> Option<Self> {
        let mut by_serial = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.option >= ao || by_serial.insert(id.serial, BallotIdx(i as u32)).is_some() {
                return None;
            }
        }
        let remaining = (0..ids.len() as u32).map(BallotIdx).collect();
        Some(BallotPool {
            all: ids,
            by_serial,
            ao,
            remaining,
            extraction_log: Vec::new(),
        })
    }

    pub fn ao(&self) -> usize {
        self.ao
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    pub fn all(&self) -> &[VBallotId] {
        &self.all
    }

    pub fn id(&self, b: BallotIdx) -> VBallotId {
        self.all[b.get()]
    }

    pub fn option_of(&self, b: BallotIdx) -> usize {
        self.all[b.get()].option
    }

    pub fn index_of(&self, id: &VBallotId) -> Option<BallotIdx> {
        self.by_serial
            .get(&id.serial)
            .copied()
            .filter(|b| self.all[b.get()].option == id.option)
    }

    pub fn count_of(&self, option: usize) -> usize {
        self.all.iter().filter(|b| b.option == option).count()
    }

    /// The list as currently held, in pool order.
    pub fn remaining(&self) -> &[BallotIdx] {
        &self.remaining
    }

    pub fn remaining_of(&self, option: usize) -> impl Iterator<Item = BallotIdx> + '_ {
        self.remaining
            .iter()
            .copied()
            .filter(move |&b| self.option_of(b) == option)
    }

    pub fn remaining_count(&self, option: usize) -> usize {
        self.remaining_of(option).count()
    }

    /// Replace the in-flight list with one received from another node.
    pub fn set_remaining(&mut self, mut list: Vec<BallotIdx>) {
        list.sort_unstable();
        self.remaining = list;
    }

    /// Remove `b` from the in-flight list and log it against `node`.
    pub fn take(&mut self, round: usize, node: usize, b: BallotIdx) -> bool {
        match self.remaining.binary_search(&b) {
            Ok(pos) => {
                self.remaining.remove(pos);
                self.extraction_log.push(Extraction {
                    round,
                    node,
                    ballot: b,
                });
                true
            }
            Err(_) => false,
        }
    }

    /// Insert an id back into the list (list tampering).
    pub fn reinsert(&mut self, b: BallotIdx) -> bool {
        match self.remaining.binary_search(&b) {
            Ok(_) => false,
            Err(pos) => {
                self.remaining.insert(pos, b);
                true
            }
        }
    }

    /// Drop an id from the list without logging an extraction (list tampering).
    pub fn drop_silently(&mut self, b: BallotIdx) -> bool {
        match self.remaining.binary_search(&b) {
            Ok(pos) => {
                self.remaining.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn extraction_log(&self) -> &[Extraction] {
        &self.extraction_log
    }

    /// Remaining ids as public records, sorted by serial.
    pub fn remaining_ids_sorted(&self) -> Vec<VBallotId> {
        let mut v: Vec<VBallotId> = self.remaining.iter().map(|&b| self.id(b)).collect();
        v.sort_by_key(|id| id.serial);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_counts_and_uniqueness() {
        let c = ClusterConfig::new(10, 2).unwrap();
        let pool = create_pool(&c, 7);
        assert_eq!(pool.len(), 40);
        assert_eq!(pool.count_of(0), 20);
        assert_eq!(pool.count_of(1), 20);
        let serials: std::collections::HashSet<_> = pool.all().iter().map(|b| b.serial).collect();
        assert_eq!(serials.len(), 40);
        assert_eq!(pool.remaining().len(), 40);
    }

    #[test]
    fn pool_is_deterministic_in_seed() {
        let c = ClusterConfig::new(2, 2).unwrap();
        let a = create_pool(&c, 99);
        let b = create_pool(&c, 99);
        assert_eq!(a.len(), 8);
        assert_eq!(a.all(), b.all());
        assert_ne!(a.all(), create_pool(&c, 100).all());
    }

    #[test]
    fn serial_text_form_is_strict() {
        let s = Serial(0xabc);
        let text = s.to_string();
        assert_eq!(text.len(), 32);
        assert_eq!(text.parse::<Serial>().unwrap(), s);
        assert!(text.to_uppercase().parse::<Serial>().is_err());
        assert!("abc".parse::<Serial>().is_err());
    }

    #[test]
    fn bitset_basics() {
        let mut s = BallotSet::with_capacity(130);
        assert!(s.insert(BallotIdx(129)));
        assert!(!s.insert(BallotIdx(129)));
        assert!(s.insert(BallotIdx(3)));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![BallotIdx(3), BallotIdx(129)]);
        assert!(s.remove(BallotIdx(3)));
        assert!(!s.contains(BallotIdx(3)));
        assert_eq!(BallotSet::full(70).len(), 70);
    }

    #[test]
    fn take_and_reinsert_keep_order() {
        let c = ClusterConfig::new(2, 2).unwrap();
        let mut pool = create_pool(&c, 1);
        assert!(pool.take(0, 0, BallotIdx(3)));
        assert!(!pool.take(0, 1, BallotIdx(3)));
        assert!(pool.reinsert(BallotIdx(3)));
        assert_eq!(pool.remaining(), (0..8).map(BallotIdx).collect::<Vec<_>>().as_slice());
        assert_eq!(pool.extraction_log().len(), 1);
    }
}
