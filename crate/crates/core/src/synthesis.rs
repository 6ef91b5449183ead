//! Controllability checks and supremal controllable, nonblocking, safe
//! supervisor synthesis for state-based specifications.
//!
//! Specifications are given as sets of plant states to avoid. The synthesized
//! supervisor is always the subautomaton of the plant induced by the surviving
//! states, so it is a strict subautomaton by construction.

use std::collections::BTreeMap;

use crate::alphabet::EventId;
use crate::automaton::{
    mask_to_set, strict_subautomaton_violation, Automaton, StateId, StateSet,
};
use crate::error::{Error, Result};

/// Why a plant state is absent from a synthesized supervisor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemovalReason {
    /// Listed in the specification.
    UnsafeSpec,
    /// An uncontrollable transition leads to a removed state.
    Controllability { event: EventId, target: StateId },
    /// No marked state is reachable from it among the survivors.
    Blocking,
    /// Not reachable from the initial state among the survivors.
    Unreachable,
}

impl RemovalReason {
    pub fn label(&self) -> &'static str {
        match self {
            RemovalReason::UnsafeSpec => "unsafe-spec",
            RemovalReason::Controllability { .. } => "controllability",
            RemovalReason::Blocking => "blocking",
            RemovalReason::Unreachable => "unreachable",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    /// Strict subautomaton of the plant; trim, or empty.
    pub supervisor: Automaton,
    /// Surviving plant states.
    pub kept: StateSet,
    /// Removed plant states with the reason each was removed.
    pub removed: BTreeMap<StateId, RemovalReason>,
    /// Number of fixpoint passes, including the final one that changed nothing.
    pub iterations: usize,
}

impl SynthesisResult {
    pub fn is_empty(&self) -> bool {
        self.supervisor.is_empty()
    }

    pub fn contains(&self, plant_state: StateId) -> bool {
        self.kept.contains(&plant_state)
    }

    /// Follows controllability removals back to the state whose removal
    /// started the cascade. The first element is `state` itself.
    pub fn removal_chain(&self, state: StateId) -> Vec<(StateId, RemovalReason)> {
        let mut chain = Vec::new();
        let mut cur = state;
        while let Some(&reason) = self.removed.get(&cur) {
            chain.push((cur, reason));
            match reason {
                RemovalReason::Controllability { target, .. } => cur = target,
                _ => break,
            }
        }
        chain
    }
}

/// Supremal controllable, nonblocking sub-behaviour of `plant` that avoids
/// `spec_removed`.
///
/// Deletes the specification states, then alternates uncontrollable
/// back-propagation (to saturation) with trimming until nothing changes.
pub fn supcon(plant: &Automaton, spec_removed: &StateSet) -> SynthesisResult {
    let n = plant.num_states();
    let alphabet = plant.alphabet();
    let preds = plant.predecessors();
    let marked: Vec<bool> = plant.states().map(|s| plant.is_marked(s)).collect();

    let mut alive = vec![true; n];
    let mut removed = BTreeMap::new();
    let mut pending = Vec::new();
    for &s in spec_removed {
        if alive[s.index()] {
            alive[s.index()] = false;
            removed.insert(s, RemovalReason::UnsafeSpec);
            pending.push(s);
        }
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut changed = false;

        while let Some(dead) = pending.pop() {
            for &(event, src) in &preds[dead.index()] {
                if alive[src.index()] && alphabet.is_uncontrollable(event) {
                    alive[src.index()] = false;
                    removed.insert(
                        src,
                        RemovalReason::Controllability {
                            event,
                            target: dead,
                        },
                    );
                    pending.push(src);
                    changed = true;
                }
            }
        }

        let Some(init) = plant.initial() else { break };
        if !alive[init.index()] {
            break;
        }

        let coreach = plant.backward_mask(&marked, &alive);
        for s in plant.states() {
            if alive[s.index()] && !coreach[s.index()] {
                alive[s.index()] = false;
                removed.insert(s, RemovalReason::Blocking);
                pending.push(s);
                changed = true;
            }
        }
        let reach = plant.forward_mask(&alive);
        for s in plant.states() {
            if alive[s.index()] && !reach[s.index()] {
                alive[s.index()] = false;
                removed.insert(s, RemovalReason::Unreachable);
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    if plant.initial().is_none_or(|i| !alive[i.index()]) {
        for s in plant.states() {
            if alive[s.index()] {
                alive[s.index()] = false;
                removed.insert(s, RemovalReason::Unreachable);
            }
        }
    }

    SynthesisResult {
        supervisor: plant.restrict(&alive),
        kept: mask_to_set(&alive),
        removed,
        iterations,
    }
}

/// A state of the candidate where the plant can execute an uncontrollable
/// event that the candidate disables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UncontrollableWitness {
    pub state: String,
    pub event: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControllabilityVerdict {
    pub witness: Option<UncontrollableWitness>,
}

impl ControllabilityVerdict {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

fn require_sub(sub: &Automaton, plant: &Automaton) -> Result<()> {
    match strict_subautomaton_violation(sub, plant) {
        Some(why) => Err(Error::NotSubautomaton(why)),
        None => Ok(()),
    }
}

/// Checks that the strict subautomaton `candidate` never disables an
/// uncontrollable event the plant can execute, at any reachable state.
pub fn is_controllable(candidate: &Automaton, plant: &Automaton) -> Result<ControllabilityVerdict> {
    require_sub(candidate, plant)?;
    let all = vec![true; candidate.num_states()];
    let reach = candidate.forward_mask(&all);
    for s in candidate.states().filter(|s| reach[s.index()]) {
        let ps = plant.require_state(candidate.name(s))?;
        for pe in plant.active(ps) {
            if !plant.alphabet().is_uncontrollable(pe) {
                continue;
            }
            let name = plant.alphabet().name(pe);
            let enabled = candidate
                .alphabet()
                .id(name)
                .and_then(|ce| candidate.step(s, ce))
                .is_some();
            if !enabled {
                return Ok(ControllabilityVerdict {
                    witness: Some(UncontrollableWitness {
                        state: candidate.name(s).to_string(),
                        event: name.to_string(),
                    }),
                });
            }
        }
    }
    Ok(ControllabilityVerdict { witness: None })
}

/// Whether the strict subautomaton `supervisor` avoids every `unsafe_states`
/// state (ids of `plant`).
pub fn is_safe_supervisor(
    supervisor: &Automaton,
    plant: &Automaton,
    unsafe_states: &StateSet,
) -> Result<bool> {
    require_sub(supervisor, plant)?;
    Ok(supervisor.states().all(|s| {
        plant
            .state(supervisor.name(s))
            .is_some_and(|p| !unsafe_states.contains(&p))
    }))
}
