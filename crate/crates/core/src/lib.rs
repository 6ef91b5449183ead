//! Supervisory control of discrete event systems under actuator enablement
//! attacks.
//!
//! The crate models plants and supervisors as deterministic automata, builds
//! the attacked closed loop, checks AE-safe controllability and robust
//! recoverability, synthesizes resilient supervisors with recovery strategies,
//! and simulates attacked runs.

pub mod alphabet;
pub mod attack;
pub mod automaton;
pub mod dot;
pub mod error;
pub mod io;
pub mod recovery;
pub mod simulation;
pub mod synthesis;

pub use alphabet::{EventAlphabet, EventId, EventKind};
pub use attack::{
    build_attacked_closed_loop, build_attacked_plant, build_attacked_supervisor,
    verify_ae_safe_controllability, vulnerable_states, AttackedSystem, ATTACK_STATE,
    ATTACK_SUFFIX,
};
pub use automaton::{compose, parallel_compose, Automaton, StateId, StateSet};
pub use error::{Error, Result};
pub use synthesis::{is_controllable, supcon, RemovalReason, SynthesisResult};
pub use recovery::{
    build_resilient_spec, extract_recovery_strategy, recoverability_game_oracle,
    region_from_names, synthesize_resilient_supervisor, validate_robust_region,
    RecoveryStrategy, RecoveryVerdict, RobustRegion,
};
pub use simulation::{
    check_trace, simulate, AttackerPolicy, Simulator, Termination, Trace, TraceChecker,
    TraceReport, Violation,
};
