//! The cluster election state machine: Stage 1 extraction rounds, Stage 2
//! cross-examination, tallying and signing.

pub mod consistency;
pub mod node;
pub mod report;
pub mod result;
pub mod stage2;
pub mod transcript;

pub use consistency::{verify_list_consistency, Inconsistency};
pub use node::{extract, respond_query, rule_a_plan, take_specific, NodeState};
pub use report::{CollisionKind, CollisionReport};
pub use result::{
    finalize, tally, tally_for, ClusterResult, ResultPayload, ResultStatus, VoterSignature,
};
pub use stage2::{assign_query_options, check_responses, query_targets};
pub use transcript::{Actor, ClusterTranscript, Event, EventKind, MessageCounts};
