use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("cluster needs at least 2 voters, got {0}")]
    ClusterTooSmall(usize),
    #[error("election needs at least 2 options, got {0}")]
    TooFewOptions(usize),
    #[error("redundancy constant k must be at least 1")]
    ZeroRedundancy,
    #[error("fan-out {fanout} outside 1..{sc}")]
    BadFanout { fanout: usize, sc: usize },
    #[error("warning threshold must be at least 1")]
    ZeroWarnThreshold,
    #[error("adversary mix needs {needed} nodes but the cluster has {sc}")]
    MixTooLarge { needed: usize, sc: usize },
    #[error("option {option} out of range for {ao} options")]
    OptionOutOfRange { option: usize, ao: usize },
    #[error("invalid vote model: {0}")]
    VoteModel(String),
    #[error("latency range {min_ms}..{max_ms} ms is empty")]
    Latency { min_ms: u64, max_ms: u64 },
    #[error("census of {census} voters cannot fill a cluster of {sc}")]
    CensusTooSmall { census: usize, sc: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("no remaining ballot of option {0}")]
    OptionExhausted(usize),
    #[error("remaining list has {found} ids, expected {expected}")]
    MalformedRemaining { expected: usize, found: usize },
    #[error("node {0} refused to sign: tally does not match the remaining list")]
    SignatureRefused(usize),
    #[error("node {node} holds no ballot of option {option}")]
    NothingToReturn { node: usize, option: usize },
    #[error("vote {vote} out of range for {ao} options")]
    BadVote { vote: usize, ao: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("need {needed} eligible voters, only {available} available")]
    InsufficientVoters { needed: usize, available: usize },
    #[error("roster has {roster} members but the cluster expects {sc}")]
    RosterSize { roster: usize, sc: usize },
    #[error("invalid script: {0}")]
    Script(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BulletinError {
    #[error("census of {census} voters cannot fill a cluster of {cs}")]
    CensusTooSmall { census: usize, cs: usize },
    #[error("signer {0} already appears in another entry")]
    DuplicateSigner(String),
    #[error("bad signature in cluster {cluster} for {signer}")]
    BadSignature { cluster: u64, signer: String },
    #[error("cluster {0} result is not VALID")]
    NotValid(u64),
    #[error("cluster {0} already published with different content")]
    Conflict(u64),
    #[error("bad intermediary countersignature on cluster {0}")]
    BadCountersignature(u64),
    #[error("cluster {0} tally does not follow from its remaining list")]
    TallyMismatch(u64),
    #[error(transparent)]
    Sim(#[from] SimError),
}
