//! Robust regions, the resilient specification, resilient supervisor
//! synthesis, recoverability verdicts and recovery strategies.
//!
//! Recoverability is decided twice: by synthesizing the resilient supervisor
//! on the attacked closed loop and checking that every detection state
//! survives, and by a game fixpoint computed directly on the plant.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::alphabet::EventId;
use crate::attack::{verify_ae_safe_controllability, AttackedSystem};
use crate::automaton::{mask_to_set, set_to_mask, Automaton, StateId, StateSet};
use crate::error::{Error, RegionViolation, Result};
use crate::synthesis::{supcon, RemovalReason, SynthesisResult};

/// A set of plant states free of vulnerable and unsafe states, with the
/// subautomaton it induces.
#[derive(Clone, Debug)]
pub struct RobustRegion {
    states: StateSet,
    induced: Automaton,
    warnings: Vec<String>,
}

impl RobustRegion {
    /// Region membership as plant state ids.
    pub fn states(&self) -> &StateSet {
        &self.states
    }

    pub fn induced(&self) -> &Automaton {
        &self.induced
    }

    pub fn contains(&self, plant_state: StateId) -> bool {
        self.states.contains(&plant_state)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn names<'a>(&self, plant: &'a Automaton) -> Vec<&'a str> {
        self.states.iter().map(|&s| plant.name(s)).collect()
    }
}

/// Checks that `states` is a nonempty set of plant states containing no
/// vulnerable and no unsafe state.
///
/// States that cannot be reached inside the induced subautomaton are reported
/// as warnings only. The induced initial state is the plant's initial state
/// when it belongs to the region, else the first region state.
pub fn validate_robust_region(plant: &Automaton, states: &StateSet) -> Result<RobustRegion> {
    let mut violation = RegionViolation {
        empty: states.is_empty(),
        ..Default::default()
    };
    let vulnerable = crate::attack::vulnerable_states(plant);
    for &s in states {
        if s.index() >= plant.num_states() {
            violation.unknown.push(format!("#{}", s.index()));
            continue;
        }
        if vulnerable.contains(&s) {
            violation.vulnerable.push(plant.name(s).to_string());
        }
        if plant.is_unsafe(s) {
            violation.unsafe_states.push(plant.name(s).to_string());
        }
    }
    if violation != RegionViolation::default() {
        return Err(Error::InvalidRegion(violation));
    }

    let keep = set_to_mask(states, plant.num_states());
    let initial = plant
        .initial()
        .filter(|i| states.contains(i))
        .or_else(|| states.first().copied());
    let induced = plant.induced(&keep, initial);
    let reach = induced.forward_mask(&vec![true; induced.num_states()]);
    let warnings = induced
        .states()
        .filter(|s| !reach[s.index()])
        .map(|s| format!("region state `{}` is unreachable inside the region", induced.name(s)))
        .collect();
    Ok(RobustRegion {
        states: states.clone(),
        induced,
        warnings,
    })
}

/// Like [`validate_robust_region`] but takes state names, reporting unknown
/// names together with any other violation.
pub fn region_from_names<S: AsRef<str>>(plant: &Automaton, names: &[S]) -> Result<RobustRegion> {
    let mut unknown = Vec::new();
    let mut states = StateSet::new();
    for n in names {
        match plant.state(n.as_ref()) {
            Some(s) => {
                states.insert(s);
            }
            None => unknown.push(n.as_ref().to_string()),
        }
    }
    if unknown.is_empty() {
        return validate_robust_region(plant, &states);
    }
    let mut violation = match validate_robust_region(plant, &states) {
        Err(Error::InvalidRegion(v)) => v,
        _ => RegionViolation::default(),
    };
    violation.empty = names.is_empty();
    violation.unknown = unknown;
    Err(Error::InvalidRegion(violation))
}

/// The resilient specification over the attacked closed loop.
#[derive(Clone, Debug)]
pub struct ResilientSpec {
    /// Post-attack closed-loop states whose plant state is vulnerable or unsafe.
    pub spec_removed: StateSet,
    /// The closed loop marked at nominally marked pre-attack states and at
    /// post-attack states inside the region.
    pub remarked: Automaton,
}

pub fn build_resilient_spec(sys: &AttackedSystem, region: &RobustRegion) -> ResilientSpec {
    let gr = sys.gr();
    let spec_removed = gr
        .states()
        .filter(|&s| sys.is_post_attack(s) && sys.is_vulnerable_or_unsafe(s))
        .collect();
    let marking: Vec<bool> = gr
        .states()
        .map(|s| {
            let p = sys.plant_state(s);
            if sys.is_post_attack(s) {
                region.contains(p)
            } else {
                gr.is_marked(s)
            }
        })
        .collect();
    ResilientSpec {
        spec_removed,
        remarked: gr.with_marking(&marking),
    }
}

/// Plant states from which the supervisor can force a visit to the region
/// while never touching a vulnerable or unsafe state, and can do so again
/// after every uncontrollable event.
///
/// Greatest fixpoint over `Z` of the set of `Z` states that either lie in the
/// region or can move towards it, where every uncontrollable successor must
/// stay in `Z`.
pub fn recoverability_game_oracle(sys: &AttackedSystem, region: &RobustRegion) -> StateSet {
    let plant = sys.plant();
    let alphabet = plant.alphabet();
    let n = plant.num_states();
    let bad: Vec<bool> = plant.states().map(|s| {
        sys.vulnerable_plant_states().contains(&s) || sys.unsafe_plant_states().contains(&s)
    })
    .collect();

    let mut z: Vec<bool> = bad.iter().map(|b| !b).collect();
    loop {
        let cpre: Vec<bool> = plant
            .states()
            .map(|s| {
                z[s.index()]
                    && plant
                        .transitions_from(s)
                        .iter()
                        .all(|&(e, t)| alphabet.is_controllable(e) || z[t.index()])
            })
            .collect();
        let mut y: Vec<bool> = plant
            .states()
            .map(|s| cpre[s.index()] && region.contains(s))
            .collect();
        loop {
            let mut grew = false;
            for s in plant.states() {
                if !y[s.index()]
                    && cpre[s.index()]
                    && plant.transitions_from(s).iter().any(|&(_, t)| y[t.index()])
                {
                    y[s.index()] = true;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        if y == z {
            break;
        }
        z = y;
    }
    debug_assert_eq!(z.len(), n);
    mask_to_set(&z)
}

/// Continuation planned for an uncontrollable event that diverges from the
/// current plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Contingency {
    pub state: String,
    pub event: String,
    pub continuation: Vec<String>,
}

/// How to steer one detection state into the region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecoveryStrategy {
    pub detection: String,
    pub nominal_path: Vec<String>,
    /// Closed-loop state where the nominal path ends.
    pub target: String,
    /// Sorted by state name, then event.
    pub contingency: Vec<Contingency>,
}

/// Why a detection state cannot be recovered: the chain of removals from
/// the detection state to the state whose removal caused it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub detection: String,
    pub chain: Vec<RemovalStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RemovalStep {
    pub state: String,
    pub reason: String,
    /// Uncontrollable event that forced the removal, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionOutcome {
    Strategy(RecoveryStrategy),
    Counterexample(Counterexample),
}

#[derive(Clone, Debug)]
pub struct RecoveryVerdict {
    /// Every detection state survives in the resilient supervisor.
    pub recoverable: bool,
    /// Keyed by detection state name.
    pub per_detection: BTreeMap<String, DetectionOutcome>,
    pub spec: ResilientSpec,
    /// Result of synthesis on the remarked closed loop; states are ids of
    /// the closed loop.
    pub resilient: SynthesisResult,
    /// Plant states won by the game oracle.
    pub winning_set: StateSet,
    /// Every detection state's plant state lies in the winning set.
    pub oracle_recoverable: bool,
    pub method_agreement: bool,
    pub warnings: Vec<String>,
}

impl RecoveryVerdict {
    /// The resilient supervisor, a strict subautomaton of the closed loop.
    pub fn resilient_supervisor(&self) -> &Automaton {
        &self.resilient.supervisor
    }

    pub fn strategies(&self) -> impl Iterator<Item = &RecoveryStrategy> {
        self.per_detection.values().filter_map(|o| match o {
            DetectionOutcome::Strategy(s) => Some(s),
            DetectionOutcome::Counterexample(_) => None,
        })
    }

    pub fn strategy(&self, detection: &str) -> Option<&RecoveryStrategy> {
        match self.per_detection.get(detection)? {
            DetectionOutcome::Strategy(s) => Some(s),
            DetectionOutcome::Counterexample(_) => None,
        }
    }

    /// The most informative failing detection state: removal chains that
    /// end at a concrete cause first, then the shortest chain, then by name.
    pub fn counterexample(&self) -> Option<&Counterexample> {
        self.per_detection
            .values()
            .filter_map(|o| match o {
                DetectionOutcome::Counterexample(c) => Some(c),
                DetectionOutcome::Strategy(_) => None,
            })
            .min_by_key(|c| {
                let unreachable = c.chain.last().is_some_and(|s| s.reason == "unreachable");
                (unreachable, c.chain.len(), c.detection.clone())
            })
    }
}

/// Synthesizes the resilient supervisor and decides recoverability by both
/// methods.
pub fn synthesize_resilient_supervisor(sys: &AttackedSystem, region: &RobustRegion) -> RecoveryVerdict {
    let gr = sys.gr();
    let spec = build_resilient_spec(sys, region);
    let resilient = supcon(&spec.remarked, &spec.spec_removed);

    let mut warnings: Vec<String> = sys.warnings().to_vec();
    warnings.extend(region.warnings().iter().cloned());
    let safe = verify_ae_safe_controllability(sys);
    for w in &safe.witnesses {
        warnings.push(format!(
            "not AE-safe controllable: from `{}` the path {} reaches `{}`",
            w.detection,
            w.path.join("."),
            w.unsafe_state
        ));
    }

    let targets = recovery_targets(sys, region, &resilient.kept);
    let mut per_detection = BTreeMap::new();
    for &d in sys.detection_states() {
        let outcome = if resilient.kept.contains(&d) {
            DetectionOutcome::Strategy(plan_strategy(gr, &resilient.kept, &targets, d))
        } else {
            DetectionOutcome::Counterexample(counterexample(gr, &resilient, d))
        };
        per_detection.insert(gr.name(d).to_string(), outcome);
    }
    let recoverable = sys.detection_states().iter().all(|d| resilient.kept.contains(d));

    let winning_set = recoverability_game_oracle(sys, region);
    let oracle_recoverable = sys
        .detection_states()
        .iter()
        .all(|&d| winning_set.contains(&sys.plant_state(d)));

    RecoveryVerdict {
        recoverable,
        per_detection,
        spec,
        resilient,
        winning_set,
        oracle_recoverable,
        method_agreement: recoverable == oracle_recoverable,
        warnings,
    }
}

/// Extracts the recovery strategy for one detection state of `verdict`.
pub fn extract_recovery_strategy(
    sys: &AttackedSystem,
    region: &RobustRegion,
    verdict: &RecoveryVerdict,
    detection: StateId,
) -> Result<RecoveryStrategy> {
    let kept = &verdict.resilient.kept;
    if !kept.contains(&detection) {
        return Err(Error::NotRecoverable(sys.gr().name(detection).to_string()));
    }
    let targets = recovery_targets(sys, region, kept);
    Ok(plan_strategy(sys.gr(), kept, &targets, detection))
}

fn recovery_targets(sys: &AttackedSystem, region: &RobustRegion, kept: &StateSet) -> Vec<bool> {
    sys.gr()
        .states()
        .map(|s| kept.contains(&s) && sys.is_post_attack(s) && region.contains(sys.plant_state(s)))
        .collect()
}

/// Shortest path inside `alive` from `from` to a target state. Events are
/// explored in name order, so the first path found is also the
/// lexicographically smallest among the shortest ones.
fn shortest_path(
    gr: &Automaton,
    alive: &[bool],
    targets: &[bool],
    from: StateId,
) -> Option<Vec<(EventId, StateId)>> {
    let mut parent: Vec<Option<(StateId, EventId)>> = vec![None; gr.num_states()];
    let mut seen = vec![false; gr.num_states()];
    seen[from.index()] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if targets[s.index()] {
            let mut path = Vec::new();
            let mut cur = s;
            while let Some((p, e)) = parent[cur.index()] {
                path.push((e, cur));
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &(e, t) in gr.transitions_from(s) {
            if alive[t.index()] && !seen[t.index()] {
                seen[t.index()] = true;
                parent[t.index()] = Some((s, e));
                queue.push_back(t);
            }
        }
    }
    None
}

fn plan_strategy(gr: &Automaton, kept: &StateSet, targets: &[bool], detection: StateId) -> RecoveryStrategy {
    let alive = set_to_mask(kept, gr.num_states());
    let alphabet = gr.alphabet();
    let mut plans: BTreeMap<StateId, Vec<(EventId, StateId)>> = BTreeMap::new();
    let mut contingency: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    let mut pending = vec![detection];
    let mut visited = BTreeSet::new();

    let names = |path: &[(EventId, StateId)]| -> Vec<String> {
        path.iter().map(|&(e, _)| alphabet.name(e).to_string()).collect()
    };

    while let Some(start) = pending.pop() {
        if !visited.insert(start) {
            continue;
        }
        // Survivors of a nonblocking synthesis always reach a marked state,
        // and post-attack marked states are exactly the targets.
        let path = shortest_path(gr, &alive, targets, start).unwrap_or_default();
        let mut states = vec![start];
        states.extend(path.iter().map(|&(_, t)| t));
        for (i, &s) in states.iter().enumerate() {
            let planned = path.get(i).map(|&(e, _)| e);
            for &(e, t) in gr.transitions_from(s) {
                if !alive[t.index()] || alphabet.is_controllable(e) || Some(e) == planned {
                    continue;
                }
                if planned.is_none() && targets[t.index()] {
                    continue;
                }
                let cont = match plans.get(&t) {
                    Some(p) => p.clone(),
                    None => shortest_path(gr, &alive, targets, t).unwrap_or_default(),
                };
                plans.insert(t, cont.clone());
                contingency.insert((gr.name(s).to_string(), alphabet.name(e).to_string()), names(&cont));
                pending.push(t);
            }
        }
        plans.insert(start, path);
    }

    let path = &plans[&detection];
    let target = path.last().map_or(detection, |&(_, t)| t);
    RecoveryStrategy {
        detection: gr.name(detection).to_string(),
        nominal_path: names(path),
        target: gr.name(target).to_string(),
        contingency: contingency
            .into_iter()
            .map(|((state, event), continuation)| Contingency {
                state,
                event,
                continuation,
            })
            .collect(),
    }
}

fn counterexample(gr: &Automaton, result: &SynthesisResult, detection: StateId) -> Counterexample {
    let chain = result
        .removal_chain(detection)
        .into_iter()
        .map(|(s, reason)| RemovalStep {
            state: gr.name(s).to_string(),
            reason: reason.label().to_string(),
            event: match reason {
                RemovalReason::Controllability { event, .. } => Some(gr.alphabet().name(event).to_string()),
                _ => None,
            },
        })
        .collect();
    Counterexample {
        detection: gr.name(detection).to_string(),
        chain,
    }
}
