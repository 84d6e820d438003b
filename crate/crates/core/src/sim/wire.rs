//! Cleartext encoding of protocol messages between nodes. Only endpoints
//! ever see these bytes; the intermediary relays them sealed.
//!
//! Layout: `MAGIC`, one tag byte, then little-endian u32 fields. Lists are
//! a count followed by pool indices.

use crate::ballot::BallotIdx;

pub const MAGIC: [u8; 4] = *b"CVM1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Pool(Vec<BallotIdx>),
    Forward { round: u32, list: Vec<BallotIdx> },
    Publish(Vec<BallotIdx>),
    Query { option: u32 },
    Response { ballot: BallotIdx },
}

const TAG_POOL: u8 = 1;
const TAG_FORWARD: u8 = 2;
const TAG_PUBLISH: u8 = 3;
const TAG_QUERY: u8 = 4;
const TAG_RESPONSE: u8 = 5;

fn put_list(out: &mut Vec<u8>, list: &[BallotIdx]) {
    out.extend_from_slice(&(list.len() as u32).to_le_bytes());
    for b in list {
        out.extend_from_slice(&b.0.to_le_bytes());
    }
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn u32(&mut self) -> Option<u32> {
        let (head, rest) = self.0.split_first_chunk::<4>()?;
        self.0 = rest;
        Some(u32::from_le_bytes(*head))
    }

    fn list(&mut self) -> Option<Vec<BallotIdx>> {
        let n = self.u32()? as usize;
        if self.0.len() != n * 4 {
            return None;
        }
        (0..n).map(|_| self.u32().map(BallotIdx)).collect()
    }
}

impl Message {
    pub fn encode(&self) -> Vec<u8> {
        let list_len = match self {
            Message::Pool(l) | Message::Forward { list: l, .. } | Message::Publish(l) => l.len(),
            _ => 0,
        };
        let mut out = Vec::with_capacity(MAGIC.len() + 9 + 4 * list_len);
        out.extend_from_slice(&MAGIC);
        match self {
            Message::Pool(list) => {
                out.push(TAG_POOL);
                put_list(&mut out, list);
            }
            Message::Forward { round, list } => {
                out.push(TAG_FORWARD);
                out.extend_from_slice(&round.to_le_bytes());
                put_list(&mut out, list);
            }
            Message::Publish(list) => {
                out.push(TAG_PUBLISH);
                put_list(&mut out, list);
            }
            Message::Query { option } => {
                out.push(TAG_QUERY);
                out.extend_from_slice(&option.to_le_bytes());
            }
            Message::Response { ballot } => {
                out.push(TAG_RESPONSE);
                out.extend_from_slice(&ballot.0.to_le_bytes());
            }
        }
        out
    }

    /// Strict decode: the whole buffer must be exactly one message.
    pub fn decode(bytes: &[u8]) -> Option<Message> {
        let rest = bytes.strip_prefix(&MAGIC)?;
        let (&tag, body) = rest.split_first()?;
        let mut r = Reader(body);
        let msg = match tag {
            TAG_POOL => Message::Pool(r.list()?),
            TAG_FORWARD => {
                let round = r.u32()?;
                Message::Forward {
                    round,
                    list: r.list()?,
                }
            }
            TAG_PUBLISH => Message::Publish(r.list()?),
            TAG_QUERY => Message::Query { option: r.u32()? },
            TAG_RESPONSE => Message::Response {
                ballot: BallotIdx(r.u32()?),
            },
            _ => return None,
        };
        r.0.is_empty().then_some(msg)
    }

    /// Does this buffer look like a cleartext message?
    pub fn looks_cleartext(bytes: &[u8]) -> bool {
        bytes.starts_with(&MAGIC) || Message::decode(bytes).is_some()
    }
}
