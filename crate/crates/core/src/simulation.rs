//! Seeded execution of the attacked closed loop under a supervisor and an
//! attacker policy, and runtime checks over the resulting traces.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alphabet::EventId;
use crate::attack::AttackedSystem;
use crate::automaton::{Automaton, StateId};
use crate::error::{Error, Result};
use crate::recovery::RobustRegion;

/// Default number of consecutive post-attack steps inside the region after
/// which a run stops.
pub const DEFAULT_QUIESCENCE: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub enum AttackerPolicy {
    None,
    /// Attacks whenever an attack is feasible, lexicographically first event.
    FirstOpportunity,
    /// Attacks with the given probability whenever feasible, choosing the
    /// event uniformly.
    Random { probability: f64, seed: u64 },
    /// Attacks at the listed step indices when feasible.
    Scripted(Vec<usize>),
}

impl AttackerPolicy {
    pub fn random(probability: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::InvalidPolicy(format!("probability {probability} is outside [0, 1]")));
        }
        Ok(AttackerPolicy::Random { probability, seed })
    }

    pub fn scripted(steps: Vec<usize>) -> Result<Self> {
        if steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPolicy("scripted steps must be strictly increasing".into()));
        }
        Ok(AttackerPolicy::Scripted(steps))
    }
}

/// Parses `none`, `first`, `random:P[:SEED]` and `scripted:I,J,...`.
impl FromStr for AttackerPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let bad = |why: &str| Error::InvalidPolicy(format!("`{s}`: {why}"));
        match (kind, arg) {
            ("none", None) => Ok(AttackerPolicy::None),
            ("first" | "first-opportunity", None) => Ok(AttackerPolicy::FirstOpportunity),
            ("random", Some(arg)) => {
                let (p, seed) = match arg.split_once(':') {
                    Some((p, seed)) => (p, seed.parse().map_err(|_| bad("seed is not an integer"))?),
                    None => (arg, 0),
                };
                let p: f64 = p.parse().map_err(|_| bad("probability is not a number"))?;
                AttackerPolicy::random(p, seed)
            }
            ("scripted", Some(arg)) => {
                let steps = arg
                    .split(',')
                    .filter(|x| !x.is_empty())
                    .map(|x| x.trim().parse().map_err(|_| bad("step is not an integer")))
                    .collect::<Result<Vec<usize>>>()?;
                AttackerPolicy::scripted(steps)
            }
            _ => Err(bad("expected none, first, random:P[:SEED] or scripted:I,J,...")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StepFlags {
    pub attacked: bool,
    pub post_attack: bool,
    pub in_region: bool,
    #[serde(rename = "unsafe")]
    pub unsafe_: bool,
    pub vulnerable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub before: StateId,
    pub event: EventId,
    pub after: StateId,
    /// `attacked` describes the event, the rest describe `after`.
    pub flags: StepFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Deadlock,
    StepLimit,
    ReachedRegionAndQuiesced,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Deadlock => "deadlock",
            Termination::StepLimit => "step-limit",
            Termination::ReachedRegionAndQuiesced => "reached-region-and-quiesced",
        })
    }
}

/// One run of the closed loop. States are closed-loop ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Option<StateId>,
    pub steps: Vec<Step>,
    pub seed: u64,
    pub termination: Termination,
}

#[derive(Serialize)]
struct StepRecord<'a> {
    step: usize,
    before: &'a str,
    event: &'a str,
    after: &'a str,
    #[serde(flatten)]
    flags: StepFlags,
}

impl Trace {
    pub fn attacked(&self) -> bool {
        self.steps.iter().any(|s| s.flags.attacked)
    }

    /// One JSON object per line and step.
    pub fn to_json_lines(&self, gr: &Automaton) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let rec = StepRecord {
                step: i,
                before: gr.name(s.before),
                event: gr.alphabet().name(s.event),
                after: gr.name(s.after),
                flags: s.flags,
            };
            out.push_str(&serde_json::to_string(&rec).expect("step records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Precomputed lookup tables for repeated runs against one supervisor.
pub struct Simulator<'a> {
    sys: &'a AttackedSystem,
    /// Non-attack events the supervisor allows, per closed-loop state.
    enabled: Vec<Vec<(EventId, StateId)>>,
    /// Feasible attack events per closed-loop state, in name order.
    attacks: Vec<Vec<(EventId, StateId)>>,
    flags: Vec<StepFlags>,
    quiescence: usize,
}

fn state_flags(sys: &AttackedSystem, region: &RobustRegion, s: StateId) -> StepFlags {
    let p = sys.plant_state(s);
    StepFlags {
        attacked: false,
        post_attack: sys.is_post_attack(s),
        in_region: region.contains(p),
        unsafe_: sys.unsafe_plant_states().contains(&p),
        vulnerable: sys.vulnerable_plant_states().contains(&p),
    }
}

/// Closed-loop state for each supervisor state, matched by name.
fn supervisor_map(sys: &AttackedSystem, supervisor: &Automaton) -> Result<Vec<Option<StateId>>> {
    let gr = sys.gr();
    let mut map = vec![None; gr.num_states()];
    for q in supervisor.states() {
        let s = gr.require_state(supervisor.name(q))?;
        map[s.index()] = Some(q);
    }
    Ok(map)
}

impl<'a> Simulator<'a> {
    /// `supervisor` must be a subautomaton of the closed loop (states named as
    /// closed-loop states). Outside its states the run continues unsupervised.
    pub fn new(sys: &'a AttackedSystem, supervisor: &Automaton, region: &RobustRegion) -> Result<Self> {
        let gr = sys.gr();
        let map = supervisor_map(sys, supervisor)?;
        let mut enabled = Vec::with_capacity(gr.num_states());
        let mut attacks = Vec::with_capacity(gr.num_states());
        for s in gr.states() {
            let allowed: Vec<(EventId, StateId)> = match map[s.index()] {
                Some(q) => supervisor
                    .transitions_from(q)
                    .iter()
                    .map(|&(e, _)| {
                        let ge = gr.alphabet().require(supervisor.alphabet().name(e))?;
                        gr.step(s, ge)
                            .map(|t| (ge, t))
                            .ok_or_else(|| Error::NotSubautomaton(format!(
                                "`{}` allows `{}` where the closed loop cannot",
                                gr.name(s),
                                gr.alphabet().name(ge)
                            )))
                    })
                    .collect::<Result<_>>()?,
                None => gr.transitions_from(s).to_vec(),
            };
            enabled.push(allowed.iter().copied().filter(|&(e, _)| !sys.is_attack_event(e)).collect());
            attacks.push(
                gr.transitions_from(s)
                    .iter()
                    .copied()
                    .filter(|&(e, _)| sys.is_attack_event(e))
                    .collect(),
            );
        }
        let flags = gr.states().map(|s| state_flags(sys, region, s)).collect();
        Ok(Simulator {
            sys,
            enabled,
            attacks,
            flags,
            quiescence: DEFAULT_QUIESCENCE,
        })
    }

    pub fn with_quiescence(mut self, steps: usize) -> Self {
        self.quiescence = steps;
        self
    }

    /// Runs for at most `max_steps` steps. Identical inputs give identical
    /// traces.
    pub fn run(&self, policy: &AttackerPolicy, max_steps: usize, seed: u64) -> Trace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut attacker = match policy {
            AttackerPolicy::Random { seed: ps, .. } => {
                ChaCha8Rng::seed_from_u64(ps ^ seed.rotate_left(32))
            }
            _ => ChaCha8Rng::seed_from_u64(0),
        };
        let mut steps = Vec::new();
        let Some(mut cur) = self.sys.gr().initial() else {
            return Trace {
                initial: None,
                steps,
                seed,
                termination: Termination::Deadlock,
            };
        };
        let mut calm = 0;
        let mut script = 0;
        let termination = loop {
            if steps.len() >= max_steps {
                break Termination::StepLimit;
            }
            let i = steps.len();
            let attacks = &self.attacks[cur.index()];
            let strike = if attacks.is_empty() {
                None
            } else {
                match policy {
                    AttackerPolicy::None => None,
                    AttackerPolicy::FirstOpportunity => Some(attacks[0]),
                    AttackerPolicy::Random { probability, .. } => attacker
                        .random_bool(*probability)
                        .then(|| attacks[attacker.random_range(0..attacks.len())]),
                    AttackerPolicy::Scripted(at) => {
                        while script < at.len() && at[script] < i {
                            script += 1;
                        }
                        (at.get(script) == Some(&i)).then_some(attacks[0])
                    }
                }
            };
            let (event, next) = match strike {
                Some(a) => a,
                None => {
                    let options = &self.enabled[cur.index()];
                    if options.is_empty() {
                        break Termination::Deadlock;
                    }
                    options[rng.random_range(0..options.len())]
                }
            };
            let mut flags = self.flags[next.index()];
            flags.attacked = strike.is_some();
            steps.push(Step {
                before: cur,
                event,
                after: next,
                flags,
            });
            cur = next;
            if flags.post_attack && flags.in_region {
                calm += 1;
                if calm >= self.quiescence {
                    break Termination::ReachedRegionAndQuiesced;
                }
            } else {
                calm = 0;
            }
        };
        Trace {
            initial: self.sys.gr().initial(),
            steps,
            seed,
            termination,
        }
    }
}

/// Builds a [`Simulator`] and performs a single run.
pub fn simulate(
    sys: &AttackedSystem,
    supervisor: &Automaton,
    region: &RobustRegion,
    policy: &AttackerPolicy,
    max_steps: usize,
    seed: u64,
) -> Result<Trace> {
    Ok(Simulator::new(sys, supervisor, region)?.run(policy, max_steps, seed))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum Violation {
    /// A step does not follow the closed loop or its flags are wrong.
    Chain { step: usize },
    /// Post-attack visit to a vulnerable or unsafe plant state.
    Safety { step: usize, state: String },
    /// Post-attack state from which the supervisor cannot reach the region.
    Reachability { step: usize, state: String },
    /// An attack is feasible or taken after the run recovered.
    Quiescence { step: usize, state: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TraceReport {
    pub violations: Vec<Violation>,
}

impl TraceReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runtime monitors for traces of one system under one supervisor.
pub struct TraceChecker<'a> {
    sys: &'a AttackedSystem,
    /// Closed-loop states of the supervisor that can reach a post-attack
    /// region state inside the supervisor.
    recoverable: Vec<bool>,
    flags: Vec<StepFlags>,
}

impl<'a> TraceChecker<'a> {
    pub fn new(sys: &'a AttackedSystem, supervisor: &Automaton, region: &RobustRegion) -> Result<Self> {
        let gr = sys.gr();
        let map = supervisor_map(sys, supervisor)?;
        let inside: Vec<bool> = map.iter().map(Option::is_some).collect();
        let targets: Vec<bool> = gr
            .states()
            .map(|s| sys.is_post_attack(s) && region.contains(sys.plant_state(s)))
            .collect();
        let recoverable = gr.backward_mask(&targets, &inside);
        let flags = gr.states().map(|s| state_flags(sys, region, s)).collect();
        Ok(TraceChecker {
            sys,
            recoverable,
            flags,
        })
    }

    pub fn check(&self, trace: &Trace) -> TraceReport {
        let gr = self.sys.gr();
        let mut violations = Vec::new();
        let mut expected = trace.initial;
        if expected != gr.initial() && !trace.steps.is_empty() {
            violations.push(Violation::Chain { step: 0 });
        }
        let mut recovered = false;
        for (i, step) in trace.steps.iter().enumerate() {
            let mut want = self.flags[step.after.index()];
            want.attacked = self.sys.is_attack_event(step.event);
            if expected != Some(step.before) || gr.step(step.before, step.event) != Some(step.after) || step.flags != want
            {
                violations.push(Violation::Chain { step: i });
            }
            expected = Some(step.after);

            let s = step.after;
            let name = || gr.name(s).to_string();
            if recovered && want.attacked {
                violations.push(Violation::Quiescence { step: i, state: name() });
            }
            if !want.post_attack {
                continue;
            }
            if want.vulnerable || want.unsafe_ {
                violations.push(Violation::Safety { step: i, state: name() });
            }
            if !self.recoverable[s.index()] {
                violations.push(Violation::Reachability { step: i, state: name() });
            }
            recovered |= want.in_region;
            if recovered && gr.transitions_from(s).iter().any(|&(e, _)| self.sys.is_attack_event(e)) {
                violations.push(Violation::Quiescence { step: i, state: name() });
            }
        }
        TraceReport { violations }
    }
}

/// Checks one trace: chain validity, post-attack safety, region reachability
/// inside `supervisor`, and that no attack is possible after recovery.
pub fn check_trace(
    trace: &Trace,
    sys: &AttackedSystem,
    supervisor: &Automaton,
    region: &RobustRegion,
) -> Result<TraceReport> {
    Ok(TraceChecker::new(sys, supervisor, region)?.check(trace))
}
