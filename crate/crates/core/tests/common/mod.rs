//! Seeded random systems and brute-force reference implementations used by
//! the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use aerobust::alphabet::{EventAlphabet, EventKind};
use aerobust::attack::{build_attacked_closed_loop, vulnerable_states, AttackedSystem};
use aerobust::automaton::{Automaton, StateId, StateSet};
use aerobust::io::{load_bundle, parse_model, Bundle};
use aerobust::recovery::{region_from_names, RecoveryStrategy, RobustRegion};
use aerobust::synthesis::supcon;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn load_corpus_bundle(rel: &str) -> Bundle {
    let text = std::fs::read_to_string(corpus_dir().join(rel)).unwrap();
    load_bundle(&parse_model(&text).unwrap()).unwrap()
}

pub fn corpus_region(b: &Bundle) -> RobustRegion {
    region_from_names(b.system.plant(), b.region.as_ref().unwrap()).unwrap()
}

pub struct PlantParams {
    pub min_states: usize,
    pub max_states: usize,
    pub max_events: usize,
}

pub const SMALL: PlantParams = PlantParams {
    min_states: 2,
    max_states: 6,
    max_events: 6,
};

pub const MEDIUM: PlantParams = PlantParams {
    min_states: 2,
    max_states: 12,
    max_events: 6,
};

pub const LARGE: PlantParams = PlantParams {
    min_states: 7,
    max_states: 12,
    max_events: 6,
};

/// A random deterministic plant. Events are `e0..`, states `x0..` with `x0`
/// initial.
pub fn random_plant(rng: &mut ChaCha8Rng, p: &PlantParams) -> Automaton {
    let n = rng.random_range(p.min_states..=p.max_states);
    let m = rng.random_range(2..=p.max_events);
    let events: Vec<(String, EventKind)> = (0..m)
        .map(|i| {
            let kind = if rng.random_bool(0.6) {
                if rng.random_bool(0.4) {
                    EventKind::Vulnerable
                } else {
                    EventKind::Controllable
                }
            } else {
                EventKind::Uncontrollable
            };
            (format!("e{i}"), kind)
        })
        .collect();
    let alphabet = EventAlphabet::new(events).unwrap();
    let mut b = Automaton::builder(alphabet.clone());
    let ids: Vec<StateId> = (0..n).map(|i| b.add_state(format!("x{i}")).unwrap()).collect();
    b.set_initial(ids[0]);
    for (i, &s) in ids.iter().enumerate() {
        b.set_marked(s, rng.random_bool(0.3));
        b.set_unsafe(s, i > 0 && rng.random_bool(0.15));
        for e in alphabet.ids() {
            if rng.random_bool(0.35) {
                let t = *ids.choose(rng).unwrap();
                b.add_transition(s, e, t).unwrap();
            }
        }
    }
    b.build().unwrap()
}

pub struct RandomSystem {
    pub plant: Automaton,
    pub supervisor: Automaton,
    pub system: AttackedSystem,
    pub region: RobustRegion,
    pub seed: u64,
}

/// A random plant, a safe nonblocking supervisor obtained by synthesis
/// against the unsafe states plus a few extra forbidden states, and a
/// random valid robust region. Retries internally until all three exist.
pub fn random_system(seed: u64, p: &PlantParams) -> RandomSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let plant = random_plant(&mut rng, p);
        let mut forbidden = plant.unsafe_states();
        for s in plant.states().skip(1) {
            if rng.random_bool(0.15) {
                forbidden.insert(s);
            }
        }
        let sup = supcon(&plant, &forbidden);
        if sup.is_empty() {
            continue;
        }
        let vulnerable = vulnerable_states(&plant);
        let candidates: Vec<StateId> = plant
            .states()
            .filter(|s| !vulnerable.contains(s) && !plant.is_unsafe(*s))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let mut region: StateSet = candidates.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
        if region.is_empty() {
            region.insert(*candidates.choose(&mut rng).unwrap());
        }
        let names: Vec<&str> = region.iter().map(|&s| plant.name(s)).collect();
        let region = region_from_names(&plant, &names).unwrap();
        let system = build_attacked_closed_loop(&plant, &sup.supervisor).unwrap();
        return RandomSystem {
            supervisor: sup.supervisor,
            plant,
            system,
            region,
            seed,
        };
    }
}

/// Union of every state subset that contains the initial state, avoids
/// `forbidden`, is closed under uncontrollable transitions, and in which
/// every state is reachable and can reach a marked state.
pub fn exhaustive_supcon_states(plant: &Automaton, forbidden: &StateSet) -> BTreeSet<String> {
    let n = plant.num_states();
    assert!(n <= 16, "exhaustive oracle is for small plants");
    let Some(init) = plant.initial() else {
        return BTreeSet::new();
    };
    let states: Vec<StateId> = plant.states().collect();
    let mut union = BTreeSet::new();
    for bits in 0u32..(1 << n) {
        let inside = |s: StateId| bits & (1 << s.index()) != 0;
        if !inside(init) || forbidden.iter().any(|&f| inside(f)) {
            continue;
        }
        let closed = states.iter().filter(|&&s| inside(s)).all(|&s| {
            plant
                .transitions_from(s)
                .iter()
                .all(|&(e, t)| plant.alphabet().is_controllable(e) || inside(t))
        });
        if !closed {
            continue;
        }
        // reachability from the initial state inside the subset
        let mut reach = HashSet::from([init]);
        let mut stack = vec![init];
        while let Some(s) = stack.pop() {
            for &(_, t) in plant.transitions_from(s) {
                if inside(t) && reach.insert(t) {
                    stack.push(t);
                }
            }
        }
        if states.iter().any(|&s| inside(s) && !reach.contains(&s)) {
            continue;
        }
        // every state reaches a marked one inside the subset
        let mut coreach: HashSet<StateId> = states.iter().copied().filter(|&s| inside(s) && plant.is_marked(s)).collect();
        loop {
            let before = coreach.len();
            for &s in &states {
                if inside(s) && !coreach.contains(&s) && plant.transitions_from(s).iter().any(|(_, t)| coreach.contains(t)) {
                    coreach.insert(s);
                }
            }
            if coreach.len() == before {
                break;
            }
        }
        if states.iter().any(|&s| inside(s) && !coreach.contains(&s)) {
            continue;
        }
        for &s in &states {
            if inside(s) {
                union.insert(plant.name(s).to_string());
            }
        }
    }
    union
}

/// Language-level controllability up to words of length `k`: no word of the
/// candidate followed by an uncontrollable event that the plant allows is
/// missing from the candidate.
pub fn bounded_controllable(candidate: &Automaton, plant: &Automaton, k: usize) -> bool {
    let lk = candidate.bounded_language(k);
    let pk = plant.bounded_language(k);
    let unc: Vec<&str> = plant.alphabet().uncontrollable().collect();
    lk.keys().filter(|w| w.len() < k).all(|w| {
        unc.iter().all(|u| {
            let mut next = w.clone();
            next.push(u.to_string());
            !pk.contains_key(&next) || lk.contains_key(&next)
        })
    })
}

/// Recoverable plant states found by explicit path enumeration: repeatedly
/// keep the states that have a simple path, inside the current set, to the
/// region along which every uncontrollable event stays in the current set.
pub fn strategy_tree_oracle(plant: &Automaton, region: &StateSet) -> StateSet {
    let vulnerable = vulnerable_states(plant);
    let alphabet = plant.alphabet();
    let mut r: StateSet = plant
        .states()
        .filter(|s| !vulnerable.contains(s) && !plant.is_unsafe(*s))
        .collect();
    loop {
        let guarded = |s: StateId, r: &StateSet| {
            r.contains(&s)
                && plant
                    .transitions_from(s)
                    .iter()
                    .all(|&(e, t)| alphabet.is_controllable(e) || r.contains(&t))
        };
        let next: StateSet = r
            .iter()
            .copied()
            .filter(|&x| {
                // depth-first search over simple paths
                let mut stack = vec![(x, vec![x])];
                while let Some((s, path)) = stack.pop() {
                    if !guarded(s, &r) {
                        continue;
                    }
                    if region.contains(&s) {
                        return true;
                    }
                    if path.len() > plant.num_states() {
                        continue;
                    }
                    for &(_, t) in plant.transitions_from(s) {
                        if !path.contains(&t) {
                            let mut p = path.clone();
                            p.push(t);
                            stack.push((t, p));
                        }
                    }
                }
                false
            })
            .collect();
        if next == r {
            return r;
        }
        r = next;
    }
}

/// Replays a strategy on the closed loop: every planned event must be
/// feasible, every visited state must be post-attack, safe and not
/// vulnerable, every uncontrollable divergence must have a contingency, and
/// every plan must end in the region. Returns a description of the first
/// problem.
pub fn replay_strategy(sys: &AttackedSystem, region: &RobustRegion, st: &RecoveryStrategy) -> Result<(), String> {
    let gr = sys.gr();
    let contingency: BTreeMap<(String, String), Vec<String>> = st
        .contingency
        .iter()
        .map(|c| ((c.state.clone(), c.event.clone()), c.continuation.clone()))
        .collect();
    let start = gr.state(&st.detection).ok_or("unknown detection state")?;
    let mut pending = vec![(start, st.nominal_path.clone())];
    let mut done = HashSet::new();
    let ok_state = |s: StateId| -> Result<(), String> {
        if !sys.is_post_attack(s) || sys.is_vulnerable_or_unsafe(s) {
            return Err(format!("visits `{}`", gr.name(s)));
        }
        Ok(())
    };
    while let Some((from, plan)) = pending.pop() {
        if !done.insert(from) {
            continue;
        }
        let mut cur = from;
        ok_state(cur)?;
        for i in 0..=plan.len() {
            let planned = plan.get(i);
            let at_end = planned.is_none();
            for &(e, t) in gr.transitions_from(cur) {
                let name = gr.alphabet().name(e);
                if gr.alphabet().is_controllable(e) || Some(&name.to_string()) == planned {
                    continue;
                }
                if at_end && region.contains(sys.plant_state(t)) {
                    ok_state(t)?;
                    continue;
                }
                let cont = contingency
                    .get(&(gr.name(cur).to_string(), name.to_string()))
                    .ok_or_else(|| format!("no contingency for `{name}` at `{}`", gr.name(cur)))?;
                ok_state(t)?;
                pending.push((t, cont.clone()));
            }
            if let Some(ev) = planned {
                let e = gr.alphabet().id(ev).ok_or("unknown event")?;
                cur = gr.step(cur, e).ok_or_else(|| format!("`{ev}` infeasible at `{}`", gr.name(cur)))?;
                ok_state(cur)?;
            }
        }
        if !region.contains(sys.plant_state(cur)) {
            return Err(format!("plan from `{}` ends outside the region", gr.name(from)));
        }
    }
    Ok(())
}

/// The resilient supervisor restricted to its pre-attack states.
pub fn pre_attack_part(sys: &AttackedSystem, sr: &Automaton) -> Automaton {
    let gr = sys.gr();
    let keep: Vec<bool> = sr
        .states()
        .map(|s| gr.state(sr.name(s)).is_some_and(|g| !sys.is_post_attack(g)))
        .collect();
    sr.restrict(&keep)
}
