use thiserror::Error;

/// Errors raised while building or analysing automata and attacked systems.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("state `{0}` is declared more than once")]
    DuplicateState(String),

    #[error("event `{0}` is declared more than once")]
    DuplicateEvent(String),

    #[error("invalid identifier `{0}`: names must be non-empty and contain no whitespace")]
    InvalidName(String),

    #[error("vulnerable event `{0}` is not controllable")]
    VulnerableNotControllable(String),

    #[error("nondeterministic transition: state `{state}` already has a successor on `{event}`")]
    Nondeterministic { state: String, event: String },

    #[error("automaton has states but no initial state")]
    MissingInitial,

    #[error("event `{0}` is controllable in one alphabet and uncontrollable in the other")]
    AttributeConflict(String),

    #[error("event `{0}` ends with the reserved attack suffix `{suffix}`", suffix = crate::attack::ATTACK_SUFFIX)]
    ReservedSuffix(String),

    #[error("state `{0}` collides with the reserved attack state tag")]
    ReservedStateTag(String),

    #[error("not a strict subautomaton: {0}")]
    NotSubautomaton(String),

    #[error("supervisor is unsafe: the closed loop reaches `{0}`, whose plant state is unsafe")]
    UnsafeSupervisor(String),

    #[error("{0}")]
    InvalidRegion(RegionViolation),

    #[error("detection state `{0}` is not recoverable")]
    NotRecoverable(String),

    #[error("invalid attacker policy: {0}")]
    InvalidPolicy(String),
}

/// Offending states found while validating a robust region.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionViolation {
    pub empty: bool,
    pub unknown: Vec<String>,
    pub vulnerable: Vec<String>,
    pub unsafe_states: Vec<String>,
}

impl std::fmt::Display for RegionViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid robust region")?;
        if self.empty {
            write!(f, "; region is empty")?;
        }
        if !self.unknown.is_empty() {
            write!(f, "; unknown states: {}", self.unknown.join(", "))?;
        }
        if !self.vulnerable.is_empty() {
            write!(f, "; vulnerable states: {}", self.vulnerable.join(", "))?;
        }
        if !self.unsafe_states.is_empty() {
            write!(f, "; unsafe states: {}", self.unsafe_states.join(", "))?;
        }
        Ok(())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
