//! Actuator enablement attacks: attacked plant, attacked supervisor, the
//! attacked closed loop and AE-safe controllability.
//!
//! An attack on a vulnerable event `σ` is written `σ#a`. It is uncontrollable
//! in every attacked alphabet. After the first attack the supervisor component
//! sits in the reserved state [`ATTACK_STATE`], which allows every event, so
//! the post-attack part of the closed loop behaves like the full plant.

use std::collections::{BTreeMap, VecDeque};

use crate::alphabet::{EventAlphabet, EventId, EventKind};
use crate::automaton::{compose, mask_to_set, Automaton, AutomatonBuilder, StateId, StateSet};
use crate::error::{Error, Result};

pub const ATTACK_SUFFIX: &str = "#a";
pub const ATTACK_STATE: &str = "@ATT";

pub fn attack_event_name(event: &str) -> String {
    format!("{event}{ATTACK_SUFFIX}")
}

/// The attacked event's base name, if `name` is an attack event.
pub fn base_event(name: &str) -> Option<&str> {
    name.strip_suffix(ATTACK_SUFFIX)
}

fn reject_reserved(alphabet: &EventAlphabet) -> Result<()> {
    match alphabet.names().find(|n| n.ends_with(ATTACK_SUFFIX)) {
        Some(n) => Err(Error::ReservedSuffix(n.to_string())),
        None => Ok(()),
    }
}

/// States where some vulnerable event is defined.
pub fn vulnerable_states(plant: &Automaton) -> StateSet {
    let alphabet = plant.alphabet();
    plant
        .states()
        .filter(|&s| plant.active(s).any(|e| alphabet.is_vulnerable(e)))
        .collect()
}

fn attacked_alphabet(alphabet: &EventAlphabet) -> Result<EventAlphabet> {
    reject_reserved(alphabet)?;
    alphabet.extended(
        alphabet
            .vulnerable()
            .map(|v| (attack_event_name(v), EventKind::Uncontrollable))
            .collect::<Vec<_>>(),
    )
}

/// The plant with a parallel `σ#a` transition next to every transition on a
/// vulnerable event `σ`.
pub fn build_attacked_plant(plant: &Automaton) -> Result<Automaton> {
    let alphabet = attacked_alphabet(plant.alphabet())?;
    let base = plant.with_alphabet(alphabet.clone())?;
    let mut b = AutomatonBuilder::new(alphabet.clone());
    copy_states(&base, &mut b)?;
    for (s, e, t) in base.transitions() {
        b.add_transition(s, e, t)?;
        if alphabet.is_vulnerable(e) {
            let ae = alphabet.require(&attack_event_name(alphabet.name(e)))?;
            b.add_transition(s, ae, t)?;
        }
    }
    b.build()
}

fn copy_states(from: &Automaton, b: &mut AutomatonBuilder) -> Result<()> {
    for s in from.states() {
        let id = b.add_state(from.name(s))?;
        b.set_marked(id, from.is_marked(s));
        b.set_unsafe(id, from.is_unsafe(s));
    }
    if let Some(i) = from.initial() {
        b.set_initial(i);
    }
    Ok(())
}

/// Re-expresses a supervisor over the plant alphabet. Controllability of
/// shared events must agree.
fn supervisor_over(supervisor: &Automaton, plant_alphabet: &EventAlphabet) -> Result<Automaton> {
    for (_, name, kind) in supervisor.alphabet().iter() {
        let pe = plant_alphabet.require(name)?;
        if plant_alphabet.is_controllable(pe) != kind.is_controllable() {
            return Err(Error::AttributeConflict(name.to_string()));
        }
    }
    supervisor.with_alphabet(plant_alphabet.clone())
}

/// The supervisor extended with the attack state. From every state where a
/// vulnerable `σ` is disabled, `σ#a` leads to the attack state, which
/// self-loops on every event.
pub fn build_attacked_supervisor(
    supervisor: &Automaton,
    plant_alphabet: &EventAlphabet,
) -> Result<Automaton> {
    if supervisor.state(ATTACK_STATE).is_some() {
        return Err(Error::ReservedStateTag(ATTACK_STATE.to_string()));
    }
    let alphabet = attacked_alphabet(plant_alphabet)?;
    let base = supervisor_over(supervisor, plant_alphabet)?.with_alphabet(alphabet.clone())?;
    let mut b = AutomatonBuilder::new(alphabet.clone());
    copy_states(&base, &mut b)?;
    let attack = b.add_state(ATTACK_STATE)?;
    b.set_marked(attack, true);

    let vulnerable: Vec<(EventId, EventId)> = alphabet
        .vulnerable()
        .map(|v| Ok((alphabet.require(v)?, alphabet.require(&attack_event_name(v))?)))
        .collect::<Result<_>>()?;
    for s in base.states() {
        for &(e, t) in base.transitions_from(s) {
            b.add_transition(s, e, t)?;
        }
        for &(v, av) in &vulnerable {
            if base.step(s, v).is_none() {
                b.add_transition(s, av, attack)?;
            }
        }
    }
    for e in alphabet.ids() {
        b.add_transition(attack, e, attack)?;
    }
    b.build()
}

/// The attacked closed loop `G^a ∥ S^a` with provenance of every composed
/// state.
#[derive(Clone, Debug)]
pub struct AttackedSystem {
    plant: Automaton,
    supervisor: Automaton,
    gr: Automaton,
    attack_events: BTreeMap<String, String>,
    is_attack: Vec<bool>,
    detection: StateSet,
    vulnerable_plant: StateSet,
    unsafe_plant: StateSet,
    plant_component: Vec<StateId>,
    supervisor_component: Vec<Option<StateId>>,
    warnings: Vec<String>,
}

/// Composes the attacked supervisor with the attacked plant.
///
/// The supervisor may be any deterministic automaton over the plant alphabet;
/// events it does not mention are disabled. Fails if the nominal closed loop
/// can reach an unsafe plant state.
pub fn build_attacked_closed_loop(plant: &Automaton, supervisor: &Automaton) -> Result<AttackedSystem> {
    let ga = build_attacked_plant(plant)?;
    let sa = build_attacked_supervisor(supervisor, plant.alphabet())?;
    let supervisor = supervisor_over(supervisor, plant.alphabet())?;
    let product = compose(&ga, &sa)?;
    let gr = product.automaton;
    let attack_state = sa.state(ATTACK_STATE);

    let plant_component: Vec<StateId> = product.components.iter().map(|&(g, _)| g).collect();
    let supervisor_component: Vec<Option<StateId>> = product
        .components
        .iter()
        .map(|&(_, s)| (Some(s) != attack_state).then_some(s))
        .collect();

    let attack_events: BTreeMap<String, String> = plant
        .alphabet()
        .vulnerable()
        .map(|v| (v.to_string(), attack_event_name(v)))
        .collect();
    let is_attack: Vec<bool> = gr
        .alphabet()
        .ids()
        .map(|e| base_event(gr.alphabet().name(e)).is_some_and(|b| attack_events.contains_key(b)))
        .collect();

    let mut detection = StateSet::new();
    for s in gr.states() {
        if supervisor_component[s.index()].is_none() {
            continue;
        }
        if plant.is_unsafe(plant_component[s.index()]) {
            return Err(Error::UnsafeSupervisor(gr.name(s).to_string()));
        }
        for &(e, t) in gr.transitions_from(s) {
            if is_attack[e.index()] {
                detection.insert(t);
            }
        }
    }

    let mut sys = AttackedSystem {
        vulnerable_plant: vulnerable_states(plant),
        unsafe_plant: plant.unsafe_states(),
        plant: plant.clone(),
        supervisor,
        gr,
        attack_events,
        is_attack,
        detection,
        plant_component,
        supervisor_component,
        warnings: Vec::new(),
    };
    if !sys.nominal_closed_loop().is_trim() {
        sys.warnings
            .push("nominal closed loop is blocking; recovery verdicts assume a nonblocking supervisor".into());
    }
    Ok(sys)
}

impl AttackedSystem {
    pub fn plant(&self) -> &Automaton {
        &self.plant
    }

    /// The nominal supervisor, over the plant alphabet.
    pub fn supervisor(&self) -> &Automaton {
        &self.supervisor
    }

    /// The composed closed loop with and without attacks.
    pub fn gr(&self) -> &Automaton {
        &self.gr
    }

    /// Vulnerable event name to attack event name.
    pub fn attack_events(&self) -> &BTreeMap<String, String> {
        &self.attack_events
    }

    pub fn attack_state_tag(&self) -> &'static str {
        ATTACK_STATE
    }

    pub fn is_attack_event(&self, event: EventId) -> bool {
        self.is_attack[event.index()]
    }

    /// Closed-loop states entered by an attack from a pre-attack state.
    pub fn detection_states(&self) -> &StateSet {
        &self.detection
    }

    pub fn vulnerable_plant_states(&self) -> &StateSet {
        &self.vulnerable_plant
    }

    pub fn unsafe_plant_states(&self) -> &StateSet {
        &self.unsafe_plant
    }

    pub fn plant_state(&self, gr_state: StateId) -> StateId {
        self.plant_component[gr_state.index()]
    }

    /// Supervisor component, `None` once the attack state has been entered.
    pub fn supervisor_state(&self, gr_state: StateId) -> Option<StateId> {
        self.supervisor_component[gr_state.index()]
    }

    pub fn is_post_attack(&self, gr_state: StateId) -> bool {
        self.supervisor_component[gr_state.index()].is_none()
    }

    pub fn is_vulnerable_or_unsafe(&self, gr_state: StateId) -> bool {
        let p = self.plant_state(gr_state);
        self.vulnerable_plant.contains(&p) || self.unsafe_plant.contains(&p)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn pre_attack_mask(&self) -> Vec<bool> {
        self.gr.states().map(|s| !self.is_post_attack(s)).collect()
    }

    pub fn post_attack_states(&self) -> StateSet {
        self.gr.states().filter(|&s| self.is_post_attack(s)).collect()
    }

    /// The attack-free part of the closed loop, i.e. the nominal `S ∥ G`.
    pub fn nominal_closed_loop(&self) -> Automaton {
        self.gr.restrict(&self.pre_attack_mask())
    }

    /// Closed-loop states whose plant component is in `plant_states`.
    pub fn lift(&self, plant_states: &StateSet, post_attack_only: bool) -> StateSet {
        let mask: Vec<bool> = self
            .gr
            .states()
            .map(|s| {
                plant_states.contains(&self.plant_state(s)) && (!post_attack_only || self.is_post_attack(s))
            })
            .collect();
        mask_to_set(&mask)
    }
}

/// A post-attack path from a detection state to damage that uses only events
/// a supervisor cannot stop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DamageWitness {
    pub detection: String,
    pub path: Vec<String>,
    pub unsafe_state: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafeControllabilityVerdict {
    pub holds: bool,
    pub witnesses: Vec<DamageWitness>,
}

/// AE-safe controllability: from every detection state, each path to an
/// unsafe plant state contains a controllable, non-vulnerable event.
/// Uncontrollable, vulnerable and attack events are treated as unstoppable.
pub fn verify_ae_safe_controllability(sys: &AttackedSystem) -> SafeControllabilityVerdict {
    let gr = sys.gr();
    let alphabet = gr.alphabet();
    let unstoppable = |e: EventId| alphabet.is_uncontrollable(e) || alphabet.is_vulnerable(e);

    let mut witnesses = Vec::new();
    for &d in sys.detection_states() {
        let mut parent: Vec<Option<(StateId, EventId)>> = vec![None; gr.num_states()];
        let mut seen = vec![false; gr.num_states()];
        seen[d.index()] = true;
        let mut queue = VecDeque::from([d]);
        let mut hit = None;
        while let Some(s) = queue.pop_front() {
            if sys.unsafe_plant.contains(&sys.plant_state(s)) {
                hit = Some(s);
                break;
            }
            for &(e, t) in gr.transitions_from(s) {
                if unstoppable(e) && !seen[t.index()] {
                    seen[t.index()] = true;
                    parent[t.index()] = Some((s, e));
                    queue.push_back(t);
                }
            }
        }
        if let Some(bad) = hit {
            let mut path = Vec::new();
            let mut cur = bad;
            while let Some((p, e)) = parent[cur.index()] {
                path.push(alphabet.name(e).to_string());
                cur = p;
            }
            path.reverse();
            witnesses.push(DamageWitness {
                detection: gr.name(d).to_string(),
                path,
                unsafe_state: gr.name(bad).to_string(),
            });
        }
    }
    SafeControllabilityVerdict {
        holds: witnesses.is_empty(),
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{is_strict_subautomaton, parallel_compose};

    fn plant() -> Automaton {
        let al = EventAlphabet::builder()
            .controllable(["c", "v"])
            .uncontrollable(["u"])
            .vulnerable(["v"])
            .build()
            .unwrap();
        Automaton::from_table(
            al,
            "0",
            &[("0", "c", "1"), ("1", "v", "2"), ("2", "u", "0"), ("1", "u", "0")],
            &["0"],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn vulnerable_states_scan() {
        let g = plant();
        let v = vulnerable_states(&g);
        assert_eq!(v, [g.state("1").unwrap()].into());
        let none = g.with_alphabet(g.alphabet().with_vulnerable(Vec::<&str>::new()).unwrap()).unwrap();
        assert!(vulnerable_states(&none).is_empty());
    }

    #[test]
    fn attacked_plant_adds_parallel_transitions() {
        let g = plant();
        let ga = build_attacked_plant(&g).unwrap();
        assert_eq!(ga.num_transitions(), g.num_transitions() + 1);
        let one = ga.state("1").unwrap();
        let av = ga.alphabet().id("v#a").unwrap();
        assert!(ga.alphabet().is_uncontrollable(av));
        assert_eq!(ga.step(one, av), ga.state("2"));
    }

    #[test]
    fn attacked_plant_without_vulnerable_events_is_unchanged() {
        let g = plant();
        let g = g.with_alphabet(g.alphabet().with_vulnerable(Vec::<&str>::new()).unwrap()).unwrap();
        assert_eq!(build_attacked_plant(&g).unwrap(), g);
    }

    #[test]
    fn reserved_suffix_is_rejected() {
        let al = EventAlphabet::builder().controllable(["x#a"]).build().unwrap();
        let g = Automaton::from_table(al, "0", &[], &[], &[]).unwrap();
        assert_eq!(
            build_attacked_plant(&g).unwrap_err(),
            Error::ReservedSuffix("x#a".into())
        );
    }

    #[test]
    fn reserved_state_tag_is_rejected() {
        let g = plant();
        let s = Automaton::from_table(g.alphabet().clone(), ATTACK_STATE, &[], &[], &[]).unwrap();
        assert_eq!(
            build_attacked_supervisor(&s, g.alphabet()).unwrap_err(),
            Error::ReservedStateTag(ATTACK_STATE.into())
        );
    }

    #[test]
    fn attacked_supervisor_counts() {
        // three states, v feasible at exactly one of them
        let al = EventAlphabet::builder()
            .controllable(["c", "v"])
            .vulnerable(["v"])
            .build()
            .unwrap();
        let s = Automaton::from_table(al.clone(), "0", &[("0", "c", "1"), ("1", "v", "2")], &[], &[])
            .unwrap();
        let sa = build_attacked_supervisor(&s, &al).unwrap();
        let attack_edges = sa
            .transitions()
            .filter(|&(src, e, _)| sa.name(src) != ATTACK_STATE && sa.alphabet().name(e) == "v#a")
            .count();
        assert_eq!(attack_edges, 2);
        let att = sa.state(ATTACK_STATE).unwrap();
        assert_eq!(sa.transitions_from(att).len(), 3);
        assert_eq!(sa.num_transitions(), s.num_transitions() + 2 + 3);
    }

    #[test]
    fn closed_loop_detection_and_feasibility() {
        let g = plant();
        // supervisor disables v at 1
        let s = g.restrict(&[true, true, false]);
        let sys = build_attacked_closed_loop(&g, &s).unwrap();
        let gr = sys.gr();
        let names: Vec<_> = sys.detection_states().iter().map(|&d| gr.name(d)).collect();
        assert_eq!(names, ["(2,@ATT)"]);
        for &d in sys.detection_states() {
            assert!(sys.is_post_attack(d));
        }
        assert!(is_strict_subautomaton(&sys.nominal_closed_loop(), gr));
        let nominal = parallel_compose(&g, &s).unwrap();
        assert_eq!(
            sys.nominal_closed_loop().bounded_language(6),
            nominal.bounded_language(6)
        );
        let verdict = verify_ae_safe_controllability(&sys);
        assert!(verdict.holds);
    }

    #[test]
    fn unsafe_supervisor_is_rejected() {
        let al = EventAlphabet::builder().controllable(["c"]).build().unwrap();
        let g = Automaton::from_table(al, "0", &[("0", "c", "1")], &["0"], &["1"]).unwrap();
        assert!(matches!(
            build_attacked_closed_loop(&g, &g),
            Err(Error::UnsafeSupervisor(_))
        ));
    }

    #[test]
    fn one_step_damage_witness() {
        let al = EventAlphabet::builder()
            .controllable(["v"])
            .uncontrollable(["u"])
            .vulnerable(["v"])
            .build()
            .unwrap();
        let g = Automaton::from_table(al, "0", &[("0", "v", "1"), ("1", "u", "bad")], &["0"], &["bad"])
            .unwrap();
        let s = g.restrict(&[true, false, false]);
        let sys = build_attacked_closed_loop(&g, &s).unwrap();
        let verdict = verify_ae_safe_controllability(&sys);
        assert!(!verdict.holds);
        assert_eq!(
            verdict.witnesses,
            [DamageWitness {
                detection: "(1,@ATT)".into(),
                path: vec!["u".into()],
                unsafe_state: "(bad,@ATT)".into(),
            }]
        );
    }
}
