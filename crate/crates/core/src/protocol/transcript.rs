//! Ordered record of one cluster election.
//!
//! Line format, one event per line, tab separated:
//! `round <TAB> actor <TAB> KIND <TAB> payload-hex`. `actor` is a ring
//! position or `I` for the intermediary. Stage 2 events carry
//! `round = ao * k + 1`, one past the last extraction round.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Actor {
    Node(usize),
    Intermediary,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Node(p) => write!(f, "{p}"),
            Actor::Intermediary => f.write_str("I"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Initial pool handed to the first node.
    Pool,
    Extract,
    /// Remaining list passed to the next node.
    Forward,
    Publish,
    Query,
    Response,
    Report,
    Sign,
    Timeout,
}

impl EventKind {
    const NAMES: [(EventKind, &'static str); 9] = [
        (EventKind::Pool, "POOL"),
        (EventKind::Extract, "EXTRACT"),
        (EventKind::Forward, "FORWARD"),
        (EventKind::Publish, "PUBLISH"),
        (EventKind::Query, "QUERY"),
        (EventKind::Response, "RESPONSE"),
        (EventKind::Report, "REPORT"),
        (EventKind::Sign, "SIGN"),
        (EventKind::Timeout, "TIMEOUT"),
    ];

    pub fn as_str(self) -> &'static str {
        Self::NAMES.iter().find(|(k, _)| *k == self).unwrap().1
    }

    /// Does this event correspond to a relayed message?
    pub fn is_message(self) -> bool {
        matches!(
            self,
            EventKind::Pool
                | EventKind::Forward
                | EventKind::Publish
                | EventKind::Query
                | EventKind::Response
        )
    }
}

impl FromStr for EventKind {
    type Err = TranscriptParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(k, _)| *k)
            .ok_or(TranscriptParseError)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub round: usize,
    pub actor: Actor,
    pub kind: EventKind,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed transcript line")]
pub struct TranscriptParseError;

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.round,
            self.actor,
            self.kind.as_str(),
            hex::encode(&self.payload)
        )
    }
}

impl FromStr for Event {
    type Err = TranscriptParseError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut parts = line.split('\t');
        let (Some(round), Some(actor), Some(kind), Some(payload), None) = (
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
        ) else {
            return Err(TranscriptParseError);
        };
        let actor = match actor {
            "I" => Actor::Intermediary,
            p => Actor::Node(p.parse().map_err(|_| TranscriptParseError)?),
        };
        Ok(Event {
            round: round.parse().map_err(|_| TranscriptParseError)?,
            actor,
            kind: kind.parse()?,
            payload: hex::decode(payload).map_err(|_| TranscriptParseError)?,
        })
    }
}

/// Relayed message totals per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounts {
    pub stage1: usize,
    pub stage2: usize,
}

impl MessageCounts {
    pub fn total(&self) -> usize {
        self.stage1 + self.stage2
    }
}

/// Message counters are always maintained; full events only when tracing.
#[derive(Clone, Debug, Default)]
pub struct ClusterTranscript {
    events: Option<Vec<Event>>,
    counts: MessageCounts,
    stage2_round: usize,
}

impl ClusterTranscript {
    pub fn new(traced: bool, stage2_round: usize) -> Self {
        ClusterTranscript {
            events: traced.then(Vec::new),
            counts: MessageCounts::default(),
            stage2_round,
        }
    }

    pub fn is_traced(&self) -> bool {
        self.events.is_some()
    }

    pub fn stage2_round(&self) -> usize {
        self.stage2_round
    }

    /// Record an event. The payload closure only runs when tracing.
    pub fn record(
        &mut self,
        round: usize,
        actor: Actor,
        kind: EventKind,
        payload: impl FnOnce() -> Vec<u8>,
    ) {
        if kind.is_message() {
            if round < self.stage2_round {
                self.counts.stage1 += 1;
            } else {
                self.counts.stage2 += 1;
            }
        }
        if let Some(events) = &mut self.events {
            events.push(Event {
                round,
                actor,
                kind,
                payload: payload(),
            });
        }
    }

    pub fn events(&self) -> &[Event] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn counts(&self) -> MessageCounts {
        self.counts
    }

    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for e in self.events() {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse_lines(text: &str) -> Result<Vec<Event>, TranscriptParseError> {
        text.lines().filter(|l| !l.is_empty()).map(str::parse).collect()
    }
}
