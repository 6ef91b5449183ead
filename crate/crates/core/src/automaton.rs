//! Deterministic finite automata with marked and unsafe states.
//!
//! States are identified by name; [`StateId`] is a dense index valid only for
//! the automaton that produced it. Every construction preserves the relative
//! order of surviving states so that derived automata compare structurally.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::alphabet::{valid_name, EventAlphabet, EventId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub(crate) u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type StateSet = BTreeSet<StateId>;

/// A named subset of an automaton's states (vulnerable, unsafe, detection,
/// region membership and so on).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatePredicate {
    pub name: String,
    pub states: StateSet,
}

impl StatePredicate {
    pub fn new(name: impl Into<String>, states: StateSet) -> Self {
        StatePredicate {
            name: name.into(),
            states,
        }
    }

    pub fn contains(&self, state: StateId) -> bool {
        self.states.contains(&state)
    }

    pub fn names<'a>(&'a self, automaton: &'a Automaton) -> Vec<&'a str> {
        self.states.iter().map(|&s| automaton.name(s)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    alphabet: EventAlphabet,
    names: Vec<String>,
    index: HashMap<String, StateId>,
    /// Outgoing transitions per state, sorted by event id.
    delta: Vec<Vec<(EventId, StateId)>>,
    initial: Option<StateId>,
    marked: Vec<bool>,
    unsafe_: Vec<bool>,
}

impl Automaton {
    pub fn builder(alphabet: EventAlphabet) -> AutomatonBuilder {
        AutomatonBuilder::new(alphabet)
    }

    /// The automaton with no states. It generates the empty language.
    pub fn empty(alphabet: EventAlphabet) -> Self {
        Automaton {
            alphabet,
            names: Vec::new(),
            index: HashMap::new(),
            delta: Vec::new(),
            initial: None,
            marked: Vec::new(),
            unsafe_: Vec::new(),
        }
    }

    /// Builds an automaton from a transition table. States are declared in
    /// order of first appearance: the initial state, then transition
    /// endpoints, then the marked and unsafe lists.
    pub fn from_table(
        alphabet: EventAlphabet,
        initial: &str,
        transitions: &[(&str, &str, &str)],
        marked: &[&str],
        unsafe_states: &[&str],
    ) -> Result<Self> {
        let mut b = AutomatonBuilder::new(alphabet);
        let init = b.state(initial)?;
        b.set_initial(init);
        for (from, _, to) in transitions {
            b.state(from)?;
            b.state(to)?;
        }
        for (from, event, to) in transitions {
            b.add_transition_named(from, event, to)?;
        }
        for m in marked {
            let s = b.state(m)?;
            b.set_marked(s, true);
        }
        for u in unsafe_states {
            let s = b.state(u)?;
            b.set_unsafe(s, true);
        }
        b.build()
    }

    pub fn alphabet(&self) -> &EventAlphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.names.len() as u32).map(StateId)
    }

    pub fn name(&self, state: StateId) -> &str {
        &self.names[state.index()]
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn require_state(&self, name: &str) -> Result<StateId> {
        self.state(name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn initial(&self) -> Option<StateId> {
        self.initial
    }

    pub fn is_marked(&self, state: StateId) -> bool {
        self.marked[state.index()]
    }

    pub fn is_unsafe(&self, state: StateId) -> bool {
        self.unsafe_[state.index()]
    }

    pub fn marked_states(&self) -> StateSet {
        self.states().filter(|&s| self.is_marked(s)).collect()
    }

    pub fn unsafe_states(&self) -> StateSet {
        self.states().filter(|&s| self.is_unsafe(s)).collect()
    }

    /// Outgoing transitions of `state`, sorted by event name.
    pub fn transitions_from(&self, state: StateId) -> &[(EventId, StateId)] {
        &self.delta[state.index()]
    }

    /// All transitions as `(source, event, target)` triples, ordered by source
    /// then event.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, EventId, StateId)> + '_ {
        self.states().flat_map(move |s| {
            self.delta[s.index()]
                .iter()
                .map(move |&(e, t)| (s, e, t))
        })
    }

    pub fn step(&self, state: StateId, event: EventId) -> Option<StateId> {
        let row = &self.delta[state.index()];
        row.binary_search_by_key(&event, |&(e, _)| e)
            .ok()
            .map(|i| row[i].1)
    }

    /// The defined-event set Γ(x) as ids.
    pub fn active(&self, state: StateId) -> impl Iterator<Item = EventId> + '_ {
        self.delta[state.index()].iter().map(|&(e, _)| e)
    }

    /// The defined-event set of a state given by name.
    pub fn active_events(&self, state: &str) -> Result<Vec<&str>> {
        let s = self.require_state(state)?;
        Ok(self.active(s).map(|e| self.alphabet.name(e)).collect())
    }

    /// Follows `word` from the initial state. `Ok(None)` means the word is not
    /// in the generated language.
    pub fn run<S: AsRef<str>>(&self, word: &[S]) -> Result<Option<StateId>> {
        let ids = word
            .iter()
            .map(|e| self.alphabet.require(e.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.run_ids(&ids))
    }

    pub fn run_ids(&self, word: &[EventId]) -> Option<StateId> {
        let mut cur = self.initial?;
        for &e in word {
            cur = self.step(cur, e)?;
        }
        Some(cur)
    }

    /// Least set containing `sources` and closed under transitions whose event
    /// satisfies `allowed`.
    pub fn reachable_from<F>(&self, sources: &StateSet, allowed: F) -> StateSet
    where
        F: Fn(EventId) -> bool,
    {
        let mut seen = vec![false; self.num_states()];
        let mut queue: VecDeque<StateId> = VecDeque::new();
        for &s in sources {
            if !seen[s.index()] {
                seen[s.index()] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &(e, t) in &self.delta[s.index()] {
                if allowed(e) && !seen[t.index()] {
                    seen[t.index()] = true;
                    queue.push_back(t);
                }
            }
        }
        mask_to_set(&seen)
    }

    /// States reachable from the initial state inside `within`.
    pub(crate) fn forward_mask(&self, within: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let Some(init) = self.initial else {
            return seen;
        };
        if !within[init.index()] {
            return seen;
        }
        seen[init.index()] = true;
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            for &(_, t) in &self.delta[s.index()] {
                if within[t.index()] && !seen[t.index()] {
                    seen[t.index()] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// States inside `within` that can reach a `targets` state inside `within`.
    pub(crate) fn backward_mask(&self, targets: &[bool], within: &[bool]) -> Vec<bool> {
        let preds = self.predecessors();
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::new();
        for s in self.states() {
            if targets[s.index()] && within[s.index()] {
                seen[s.index()] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &(_, p) in &preds[s.index()] {
                if within[p.index()] && !seen[p.index()] {
                    seen[p.index()] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Incoming transitions per state as `(event, source)`.
    pub fn predecessors(&self) -> Vec<Vec<(EventId, StateId)>> {
        let mut preds = vec![Vec::new(); self.num_states()];
        for (s, e, t) in self.transitions() {
            preds[t.index()].push((e, s));
        }
        preds
    }

    pub fn accessible(&self) -> Automaton {
        let all = vec![true; self.num_states()];
        self.restrict(&self.forward_mask(&all))
    }

    pub fn coaccessible(&self) -> Automaton {
        let all = vec![true; self.num_states()];
        self.restrict(&self.backward_mask(&self.marked, &all))
    }

    pub fn trim(&self) -> Automaton {
        self.coaccessible().accessible()
    }

    /// Whether every state is reachable and can reach a marked state.
    pub fn is_trim(&self) -> bool {
        let all = vec![true; self.num_states()];
        self.forward_mask(&all).iter().all(|&b| b)
            && self.backward_mask(&self.marked, &all).iter().all(|&b| b)
    }

    /// The subautomaton induced by `keep`. Empty when the initial state is not
    /// kept.
    pub fn restrict(&self, keep: &[bool]) -> Automaton {
        match self.initial {
            Some(i) if keep[i.index()] => self.induced(keep, Some(i)),
            _ => Automaton::empty(self.alphabet.clone()),
        }
    }

    pub fn restrict_to(&self, keep: &StateSet) -> Automaton {
        self.restrict(&set_to_mask(keep, self.num_states()))
    }

    /// The subautomaton induced by `keep` with an explicit initial state,
    /// which must be kept.
    pub fn induced(&self, keep: &[bool], initial: Option<StateId>) -> Automaton {
        debug_assert!(initial.is_none_or(|i| keep[i.index()]));
        let mut remap = vec![None; self.num_states()];
        let mut names = Vec::new();
        for s in self.states() {
            if keep[s.index()] {
                remap[s.index()] = Some(StateId(names.len() as u32));
                names.push(self.names[s.index()].clone());
            }
        }
        let mut delta = Vec::with_capacity(names.len());
        let mut marked = Vec::with_capacity(names.len());
        let mut unsafe_ = Vec::with_capacity(names.len());
        for s in self.states() {
            if remap[s.index()].is_none() {
                continue;
            }
            delta.push(
                self.delta[s.index()]
                    .iter()
                    .filter_map(|&(e, t)| remap[t.index()].map(|t| (e, t)))
                    .collect(),
            );
            marked.push(self.marked[s.index()]);
            unsafe_.push(self.unsafe_[s.index()]);
        }
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), StateId(i as u32)))
            .collect();
        Automaton {
            alphabet: self.alphabet.clone(),
            names,
            index,
            delta,
            initial: initial.and_then(|i| remap[i.index()]),
            marked,
            unsafe_,
        }
    }

    /// Copy with the marking replaced.
    pub fn with_marking(&self, marked: &[bool]) -> Automaton {
        assert_eq!(marked.len(), self.num_states());
        Automaton {
            marked: marked.to_vec(),
            ..self.clone()
        }
    }

    /// Copy over a different alphabet. Every event used by a transition must
    /// exist in `alphabet`.
    pub fn with_alphabet(&self, alphabet: EventAlphabet) -> Result<Automaton> {
        let map = self
            .alphabet
            .ids()
            .map(|e| alphabet.id(self.alphabet.name(e)))
            .collect::<Vec<_>>();
        let mut delta = Vec::with_capacity(self.delta.len());
        for row in &self.delta {
            let mut new_row = Vec::with_capacity(row.len());
            for &(e, t) in row {
                let ne = map[e.index()].ok_or_else(|| {
                    Error::UnknownEvent(self.alphabet.name(e).to_string())
                })?;
                new_row.push((ne, t));
            }
            new_row.sort_by_key(|&(e, _)| e);
            delta.push(new_row);
        }
        Ok(Automaton {
            alphabet,
            delta,
            ..self.clone()
        })
    }

    /// All generated strings of length at most `bound`, each flagged with
    /// whether it is marked.
    pub fn bounded_language(&self, bound: usize) -> BTreeMap<Vec<String>, bool> {
        let mut out = BTreeMap::new();
        let Some(init) = self.initial else {
            return out;
        };
        let mut stack = vec![(init, Vec::<String>::new())];
        while let Some((s, word)) = stack.pop() {
            if word.len() < bound {
                for &(e, t) in &self.delta[s.index()] {
                    let mut next = word.clone();
                    next.push(self.alphabet.name(e).to_string());
                    stack.push((t, next));
                }
            }
            out.insert(word, self.is_marked(s));
        }
        out
    }
}

pub(crate) fn mask_to_set(mask: &[bool]) -> StateSet {
    mask.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| StateId(i as u32))
        .collect()
}

pub(crate) fn set_to_mask(set: &StateSet, len: usize) -> Vec<bool> {
    let mut mask = vec![false; len];
    for s in set {
        mask[s.index()] = true;
    }
    mask
}

/// Incremental, validating construction of an [`Automaton`].
#[derive(Debug)]
pub struct AutomatonBuilder {
    alphabet: EventAlphabet,
    names: Vec<String>,
    index: HashMap<String, StateId>,
    delta: Vec<BTreeMap<EventId, StateId>>,
    initial: Option<StateId>,
    marked: Vec<bool>,
    unsafe_: Vec<bool>,
}

impl AutomatonBuilder {
    pub fn new(alphabet: EventAlphabet) -> Self {
        AutomatonBuilder {
            alphabet,
            names: Vec::new(),
            index: HashMap::new(),
            delta: Vec::new(),
            initial: None,
            marked: Vec::new(),
            unsafe_: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &EventAlphabet {
        &self.alphabet
    }

    /// Declares a new state; re-declaring a name is an error.
    pub fn add_state(&mut self, name: impl Into<String>) -> Result<StateId> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(Error::InvalidName(name));
        }
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateState(name));
        }
        let id = StateId(self.names.len() as u32);
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.delta.push(BTreeMap::new());
        self.marked.push(false);
        self.unsafe_.push(false);
        Ok(id)
    }

    /// Returns the state with this name, declaring it if needed.
    pub fn state(&mut self, name: &str) -> Result<StateId> {
        match self.index.get(name) {
            Some(&id) => Ok(id),
            None => self.add_state(name),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn set_initial(&mut self, state: StateId) {
        self.initial = Some(state);
    }

    pub fn set_marked(&mut self, state: StateId, marked: bool) {
        self.marked[state.index()] = marked;
    }

    pub fn set_unsafe(&mut self, state: StateId, value: bool) {
        self.unsafe_[state.index()] = value;
    }

    pub fn add_transition(&mut self, from: StateId, event: EventId, to: StateId) -> Result<()> {
        let row = &mut self.delta[from.index()];
        if row.contains_key(&event) {
            return Err(Error::Nondeterministic {
                state: self.names[from.index()].clone(),
                event: self.alphabet.name(event).to_string(),
            });
        }
        row.insert(event, to);
        Ok(())
    }

    /// Adds a transition between already declared states.
    pub fn add_transition_named(&mut self, from: &str, event: &str, to: &str) -> Result<()> {
        let f = self
            .lookup(from)
            .ok_or_else(|| Error::UnknownState(from.to_string()))?;
        let t = self
            .lookup(to)
            .ok_or_else(|| Error::UnknownState(to.to_string()))?;
        let e = self.alphabet.require(event)?;
        self.add_transition(f, e, t)
    }

    pub fn build(self) -> Result<Automaton> {
        if !self.names.is_empty() && self.initial.is_none() {
            return Err(Error::MissingInitial);
        }
        Ok(Automaton {
            alphabet: self.alphabet,
            names: self.names,
            index: self.index,
            delta: self
                .delta
                .into_iter()
                .map(|row| row.into_iter().collect())
                .collect(),
            initial: self.initial,
            marked: self.marked,
            unsafe_: self.unsafe_,
        })
    }
}

/// Result of a synchronous composition, keeping each composed state's
/// component states.
#[derive(Clone, Debug)]
pub struct Product {
    pub automaton: Automaton,
    pub components: Vec<(StateId, StateId)>,
}

/// Canonical name of a composed state.
pub fn pair_name(left: &str, right: &str) -> String {
    format!("({left},{right})")
}

/// Synchronous composition `left ∥ right`, restricted to its accessible part.
pub fn parallel_compose(left: &Automaton, right: &Automaton) -> Result<Automaton> {
    compose(left, right).map(|p| p.automaton)
}

/// Synchronous composition with component provenance. Shared events
/// synchronize, private events interleave. A composed state is marked iff
/// both components are marked and unsafe iff either is.
pub fn compose(left: &Automaton, right: &Automaton) -> Result<Product> {
    let alphabet = left.alphabet.union(&right.alphabet)?;
    let lookup: Vec<(EventId, Option<EventId>, Option<EventId>)> = alphabet
        .ids()
        .map(|e| {
            let name = alphabet.name(e);
            (e, left.alphabet.id(name), right.alphabet.id(name))
        })
        .collect();

    let (Some(li), Some(ri)) = (left.initial, right.initial) else {
        return Ok(Product {
            automaton: Automaton::empty(alphabet),
            components: Vec::new(),
        });
    };

    let mut b = AutomatonBuilder::new(alphabet);
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut components = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |b: &mut AutomatonBuilder,
                      queue: &mut VecDeque<(StateId, StateId)>,
                      components: &mut Vec<(StateId, StateId)>,
                      pair: (StateId, StateId)|
     -> Result<StateId> {
        if let Some(&id) = ids.get(&pair) {
            return Ok(id);
        }
        let id = b.add_state(pair_name(left.name(pair.0), right.name(pair.1)))?;
        b.set_marked(id, left.is_marked(pair.0) && right.is_marked(pair.1));
        b.set_unsafe(id, left.is_unsafe(pair.0) || right.is_unsafe(pair.1));
        ids.insert(pair, id);
        components.push(pair);
        queue.push_back(pair);
        Ok(id)
    };

    let init = intern(&mut b, &mut queue, &mut components, (li, ri))?;
    b.set_initial(init);
    while let Some((p, q)) = queue.pop_front() {
        let src = intern(&mut b, &mut queue, &mut components, (p, q))?;
        for &(e, le, re) in &lookup {
            let np = match le {
                Some(le) => match left.step(p, le) {
                    Some(t) => t,
                    None => continue,
                },
                None => p,
            };
            let nq = match re {
                Some(re) => match right.step(q, re) {
                    Some(t) => t,
                    None => continue,
                },
                None => q,
            };
            let dst = intern(&mut b, &mut queue, &mut components, (np, nq))?;
            b.add_transition(src, e, dst)?;
        }
    }
    Ok(Product {
        automaton: b.build()?,
        components,
    })
}

/// Whether `sub` is the subautomaton of `sup` induced by `sub`'s states:
/// same initial state, every transition of `sub` exists in `sup`, and every
/// transition of `sup` between retained states exists in `sub`.
pub fn is_strict_subautomaton(sub: &Automaton, sup: &Automaton) -> bool {
    strict_subautomaton_violation(sub, sup).is_none()
}

/// Explains why `sub` is not a strict subautomaton of `sup`.
pub fn strict_subautomaton_violation(sub: &Automaton, sup: &Automaton) -> Option<String> {
    let sub_init = sub.initial?;
    let mut map = Vec::with_capacity(sub.num_states());
    for s in sub.states() {
        match sup.state(sub.name(s)) {
            Some(t) => map.push(t),
            None => return Some(format!("state `{}` is not in the reference", sub.name(s))),
        }
    }
    if sup.initial != Some(map[sub_init.index()]) {
        return Some("initial states differ".into());
    }
    let mut retained = vec![None; sup.num_states()];
    for (i, &t) in map.iter().enumerate() {
        retained[t.index()] = Some(StateId(i as u32));
    }
    for (s, e, t) in sub.transitions() {
        let name = sub.alphabet.name(e);
        let ok = sup
            .alphabet
            .id(name)
            .and_then(|se| sup.step(map[s.index()], se))
            == Some(map[t.index()]);
        if !ok {
            return Some(format!(
                "transition {} --{}--> {} is not in the reference",
                sub.name(s),
                name,
                sub.name(t)
            ));
        }
    }
    for (s, e, t) in sup.transitions() {
        let (Some(ss), Some(st)) = (retained[s.index()], retained[t.index()]) else {
            continue;
        };
        let name = sup.alphabet.name(e);
        let present = sub
            .alphabet
            .id(name)
            .and_then(|se| sub.step(ss, se))
            == Some(st);
        if !present {
            return Some(format!(
                "transition {} --{}--> {} between retained states is missing",
                sup.name(s),
                name,
                sup.name(t)
            ));
        }
    }
    None
}
