//! Model files: a line-oriented text format and an equivalent JSON format.
//!
//! ```text
//! aerobust 1
//! # comments start with a `#` token
//! automaton plant
//!   event a controllable vulnerable
//!   event u uncontrollable
//!   state x0 initial marked
//!   state x1 unsafe
//!   trans x0 a x1
//! end
//! region x0
//! scenario a
//! ```
//!
//! A file holds one or more automata tagged with a role. Bundles use the
//! roles `plant`, `supervisor` and optionally `closed-loop`. `region` lists
//! robust-region states and `scenario` replaces the plant's vulnerable set.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alphabet::{EventAlphabet, EventKind};
use crate::attack::{build_attacked_closed_loop, AttackedSystem};
use crate::automaton::{Automaton, AutomatonBuilder};
use crate::error::Error;

pub const FORMAT_NAME: &str = "aerobust";
pub const FORMAT_VERSION: u32 = 1;

pub const ROLE_PLANT: &str = "plant";
pub const ROLE_SUPERVISOR: &str = "supervisor";
pub const ROLE_CLOSED_LOOP: &str = "closed-loop";

/// A syntax or semantic error, located where possible (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            location: Some((line, column)),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((l, c)) => write!(f, "line {l}, column {c}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("model has no `{0}` automaton")]
    MissingRole(String),
    #[error("stored closed loop does not match the one rebuilt from plant and supervisor")]
    ClosedLoopMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelFile {
    /// Role and automaton, in file order.
    pub automata: Vec<(String, Automaton)>,
    pub region: Option<Vec<String>>,
    pub scenario: Option<Vec<String>>,
}

impl ModelFile {
    pub fn single(role: impl Into<String>, automaton: Automaton) -> Self {
        ModelFile {
            automata: vec![(role.into(), automaton)],
            region: None,
            scenario: None,
        }
    }

    pub fn get(&self, role: &str) -> Option<&Automaton> {
        self.automata.iter().find(|(r, _)| r == role).map(|(_, a)| a)
    }

    /// The plant, or the only automaton of a single-automaton file, with the
    /// scenario applied.
    pub fn plant(&self) -> Result<Automaton, LoadError> {
        let plant = match (self.get(ROLE_PLANT), self.automata.as_slice()) {
            (Some(p), _) => p,
            (None, [(_, only)]) => only,
            _ => return Err(LoadError::MissingRole(ROLE_PLANT.into())),
        };
        Ok(apply_scenario(plant, self.scenario.as_deref())?)
    }

    /// The automaton for `role`, or the plant when `role` is `None`.
    pub fn select(&self, role: Option<&str>) -> Result<Automaton, LoadError> {
        match role {
            None => self.plant(),
            Some(r) => self
                .get(r)
                .cloned()
                .ok_or_else(|| LoadError::MissingRole(r.to_string())),
        }
    }
}

/// Replaces the vulnerable set when a scenario is given.
pub fn apply_scenario(automaton: &Automaton, scenario: Option<&[String]>) -> Result<Automaton, Error> {
    match scenario {
        None => Ok(automaton.clone()),
        Some(events) => automaton.with_alphabet(automaton.alphabet().with_vulnerable(events)?),
    }
}

/// Parses the text or the JSON format; JSON is recognised by a leading `{`.
pub fn parse_model(text: &str) -> Result<ModelFile, ParseError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_text(text)
    }
}

#[derive(Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn tokenize(line: &str, number: usize) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                let text = &line[s..i];
                if text.starts_with('#') {
                    break;
                }
                toks.push(Tok {
                    text,
                    line: number,
                    col: line[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    // a comment token that runs to the end of the line
    if toks.last().is_some_and(|t| t.text.starts_with('#')) {
        toks.pop();
    }
    toks
}

fn located(t: Tok<'_>, e: Error) -> ParseError {
    ParseError::at(t.line, t.col, e.to_string())
}

fn parse_text(text: &str) -> Result<ModelFile, ParseError> {
    let lines: Vec<Vec<Tok<'_>>> = text
        .lines()
        .enumerate()
        .map(|(i, l)| tokenize(l, i + 1))
        .filter(|t| !t.is_empty())
        .collect();
    let mut it = lines.into_iter();

    let header = it
        .next()
        .ok_or_else(|| ParseError::at(1, 1, format!("empty model; expected `{FORMAT_NAME} {FORMAT_VERSION}`")))?;
    match header.as_slice() {
        [name, version] if name.text == FORMAT_NAME => {
            if version.text != FORMAT_VERSION.to_string() {
                return Err(ParseError::at(
                    version.line,
                    version.col,
                    format!("unsupported format version `{}`", version.text),
                ));
            }
        }
        _ => {
            return Err(ParseError::at(
                header[0].line,
                header[0].col,
                format!("expected header `{FORMAT_NAME} {FORMAT_VERSION}`"),
            ))
        }
    }

    let mut model = ModelFile {
        automata: Vec::new(),
        region: None,
        scenario: None,
    };
    let mut roles = HashSet::new();
    while let Some(line) = it.next() {
        let kw = line[0];
        match kw.text {
            "automaton" => {
                let [_, role] = line.as_slice() else {
                    return Err(ParseError::at(kw.line, kw.col, "expected `automaton <role>`"));
                };
                if !roles.insert(role.text) {
                    return Err(ParseError::at(role.line, role.col, format!("duplicate automaton role `{}`", role.text)));
                }
                let mut body = Vec::new();
                let mut closed = false;
                for l in it.by_ref() {
                    if l[0].text == "end" {
                        if l.len() > 1 {
                            return Err(ParseError::at(l[1].line, l[1].col, "unexpected token after `end`"));
                        }
                        closed = true;
                        break;
                    }
                    body.push(l);
                }
                if !closed {
                    return Err(ParseError::at(kw.line, kw.col, format!("automaton `{}` has no `end`", role.text)));
                }
                model.automata.push((role.text.to_string(), parse_block(*role, &body)?));
            }
            "region" | "scenario" => {
                let slot = if kw.text == "region" {
                    &mut model.region
                } else {
                    &mut model.scenario
                };
                if slot.is_some() {
                    return Err(ParseError::at(kw.line, kw.col, format!("duplicate `{}` line", kw.text)));
                }
                *slot = Some(line[1..].iter().map(|t| t.text.to_string()).collect());
            }
            other => {
                return Err(ParseError::at(kw.line, kw.col, format!("unexpected `{other}` at top level")));
            }
        }
    }
    if model.automata.is_empty() {
        return Err(ParseError {
            location: None,
            message: "model contains no automaton".into(),
        });
    }
    check_references(&model)?;
    Ok(model)
}

fn parse_block(role: Tok<'_>, body: &[Vec<Tok<'_>>]) -> Result<Automaton, ParseError> {
    let mut events = Vec::new();
    let mut event_pos: BTreeMap<&str, Tok<'_>> = BTreeMap::new();
    for line in body.iter().filter(|l| l[0].text == "event") {
        let kw = line[0];
        let (name, kind_tok, rest) = match line.as_slice() {
            [_, name, kind, rest @ ..] => (*name, *kind, rest),
            _ => return Err(ParseError::at(kw.line, kw.col, "expected `event <name> controllable|uncontrollable [vulnerable]`")),
        };
        let controllable = match kind_tok.text {
            "controllable" => true,
            "uncontrollable" => false,
            other => {
                return Err(ParseError::at(
                    kind_tok.line,
                    kind_tok.col,
                    format!("expected `controllable` or `uncontrollable`, found `{other}`"),
                ))
            }
        };
        let kind = match rest {
            [] if controllable => EventKind::Controllable,
            [] => EventKind::Uncontrollable,
            [v] if v.text == "vulnerable" => {
                if !controllable {
                    return Err(located(*v, Error::VulnerableNotControllable(name.text.into())));
                }
                EventKind::Vulnerable
            }
            [t, ..] => return Err(ParseError::at(t.line, t.col, format!("unexpected `{}`", t.text))),
        };
        if event_pos.insert(name.text, name).is_some() {
            return Err(located(name, Error::DuplicateEvent(name.text.into())));
        }
        events.push((name.text.to_string(), kind));
    }
    let alphabet = EventAlphabet::new(events).map_err(|e| {
        let name = match &e {
            Error::InvalidName(n) => event_pos.get(n.as_str()).copied(),
            _ => None,
        };
        located(name.unwrap_or(role), e)
    })?;

    let mut b = AutomatonBuilder::new(alphabet);
    let mut has_initial = None;
    for line in body {
        let kw = line[0];
        match kw.text {
            "event" => {}
            "state" => {
                let Some(name) = line.get(1) else {
                    return Err(ParseError::at(kw.line, kw.col, "expected `state <name> [initial] [marked] [unsafe]`"));
                };
                let id = b.add_state(name.text).map_err(|e| located(*name, e))?;
                let mut seen = HashSet::new();
                for flag in &line[2..] {
                    if !seen.insert(flag.text) {
                        return Err(ParseError::at(flag.line, flag.col, format!("duplicate flag `{}`", flag.text)));
                    }
                    match flag.text {
                        "initial" => {
                            if let Some(prev) = has_initial {
                                return Err(ParseError::at(
                                    flag.line,
                                    flag.col,
                                    format!("second initial state; `{prev}` is already initial"),
                                ));
                            }
                            has_initial = Some(name.text);
                            b.set_initial(id);
                        }
                        "marked" => b.set_marked(id, true),
                        "unsafe" => b.set_unsafe(id, true),
                        other => {
                            return Err(ParseError::at(flag.line, flag.col, format!("unknown state flag `{other}`")))
                        }
                    }
                }
            }
            "trans" => {
                let [_, from, event, to] = line.as_slice() else {
                    return Err(ParseError::at(kw.line, kw.col, "expected `trans <from> <event> <to>`"));
                };
                let src = b
                    .lookup(from.text)
                    .ok_or_else(|| located(*from, Error::UnknownState(from.text.into())))?;
                let dst = b
                    .lookup(to.text)
                    .ok_or_else(|| located(*to, Error::UnknownState(to.text.into())))?;
                let e = b.alphabet().require(event.text).map_err(|e| located(*event, e))?;
                b.add_transition(src, e, dst).map_err(|e| located(*event, e))?;
            }
            other => {
                return Err(ParseError::at(kw.line, kw.col, format!("unexpected `{other}` inside automaton")));
            }
        }
    }
    b.build().map_err(|e| located(role, e))
}

/// Region states must exist in the plant, scenario events in its alphabet.
fn check_references(model: &ModelFile) -> Result<(), ParseError> {
    let plain = |e: Error| ParseError {
        location: None,
        message: e.to_string(),
    };
    let plant = match model.plant() {
        Ok(p) => p,
        Err(LoadError::Model(e)) => return Err(plain(e)),
        Err(_) => return Ok(()),
    };
    for s in model.region.iter().flatten() {
        plant.require_state(s).map_err(plain)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonModel {
    format: String,
    version: u32,
    automata: Vec<JsonAutomaton>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenario: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonAutomaton {
    role: String,
    events: Vec<JsonEvent>,
    states: Vec<JsonState>,
    transitions: Vec<(String, String, String)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEvent {
    name: String,
    controllable: bool,
    #[serde(default)]
    vulnerable: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonState {
    name: String,
    #[serde(default)]
    initial: bool,
    #[serde(default)]
    marked: bool,
    #[serde(default, rename = "unsafe")]
    unsafe_: bool,
}

fn parse_json(text: &str) -> Result<ModelFile, ParseError> {
    let raw: JsonModel = serde_json::from_str(text)
        .map_err(|e| ParseError::at(e.line(), e.column(), e.to_string()))?;
    let plain = |message: String| ParseError {
        location: None,
        message,
    };
    if raw.format != FORMAT_NAME || raw.version != FORMAT_VERSION {
        return Err(plain(format!(
            "unsupported format `{} {}`; expected `{FORMAT_NAME} {FORMAT_VERSION}`",
            raw.format, raw.version
        )));
    }
    let mut automata = Vec::new();
    let mut roles = HashSet::new();
    for a in raw.automata {
        if !roles.insert(a.role.clone()) {
            return Err(plain(format!("duplicate automaton role `{}`", a.role)));
        }
        let in_role = |e: Error| plain(format!("automaton `{}`: {e}", a.role));
        let mut kinds = Vec::new();
        for e in &a.events {
            let kind = match (e.controllable, e.vulnerable) {
                (false, true) => return Err(in_role(Error::VulnerableNotControllable(e.name.clone()))),
                (false, false) => EventKind::Uncontrollable,
                (true, false) => EventKind::Controllable,
                (true, true) => EventKind::Vulnerable,
            };
            kinds.push((e.name.clone(), kind));
        }
        let mut b = AutomatonBuilder::new(EventAlphabet::new(kinds).map_err(in_role)?);
        let mut initial = None;
        for s in &a.states {
            let id = b.add_state(&s.name).map_err(in_role)?;
            b.set_marked(id, s.marked);
            b.set_unsafe(id, s.unsafe_);
            if s.initial {
                if initial.replace(id).is_some() {
                    return Err(plain(format!("automaton `{}` has more than one initial state", a.role)));
                }
                b.set_initial(id);
            }
        }
        for (from, ev, to) in &a.transitions {
            b.add_transition_named(from, ev, to).map_err(in_role)?;
        }
        automata.push((a.role.clone(), b.build().map_err(in_role)?));
    }
    if automata.is_empty() {
        return Err(plain("model contains no automaton".into()));
    }
    let model = ModelFile {
        automata,
        region: raw.region,
        scenario: raw.scenario,
    };
    check_references(&model)?;
    Ok(model)
}

fn kind_words(kind: EventKind) -> &'static str {
    match kind {
        EventKind::Uncontrollable => "uncontrollable",
        EventKind::Controllable => "controllable",
        EventKind::Vulnerable => "controllable vulnerable",
    }
}

/// Canonical text form: events in name order, states in declaration order,
/// transitions grouped by source state and sorted by event.
pub fn serialize_model(model: &ModelFile) -> String {
    let mut out = format!("{FORMAT_NAME} {FORMAT_VERSION}\n");
    for (role, a) in &model.automata {
        out.push_str(&format!("\nautomaton {role}\n"));
        for (_, name, kind) in a.alphabet().iter() {
            out.push_str(&format!("  event {name} {}\n", kind_words(kind)));
        }
        for s in a.states() {
            out.push_str(&format!("  state {}", a.name(s)));
            if a.initial() == Some(s) {
                out.push_str(" initial");
            }
            if a.is_marked(s) {
                out.push_str(" marked");
            }
            if a.is_unsafe(s) {
                out.push_str(" unsafe");
            }
            out.push('\n');
        }
        for (s, e, t) in a.transitions() {
            out.push_str(&format!("  trans {} {} {}\n", a.name(s), a.alphabet().name(e), a.name(t)));
        }
        out.push_str("end\n");
    }
    if model.region.is_some() || model.scenario.is_some() {
        out.push('\n');
    }
    if let Some(r) = &model.region {
        out.push_str(&join_line("region", r));
    }
    if let Some(s) = &model.scenario {
        let mut s = s.clone();
        s.sort();
        s.dedup();
        out.push_str(&join_line("scenario", &s));
    }
    out
}

fn join_line(kw: &str, items: &[String]) -> String {
    let mut line = kw.to_string();
    for i in items {
        line.push(' ');
        line.push_str(i);
    }
    line.push('\n');
    line
}

/// The JSON form, pretty-printed with a trailing newline.
pub fn model_to_json(model: &ModelFile) -> String {
    let raw = JsonModel {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        automata: model
            .automata
            .iter()
            .map(|(role, a)| JsonAutomaton {
                role: role.clone(),
                events: a
                    .alphabet()
                    .iter()
                    .map(|(_, name, kind)| JsonEvent {
                        name: name.into(),
                        controllable: kind.is_controllable(),
                        vulnerable: kind == EventKind::Vulnerable,
                    })
                    .collect(),
                states: a
                    .states()
                    .map(|s| JsonState {
                        name: a.name(s).into(),
                        initial: a.initial() == Some(s),
                        marked: a.is_marked(s),
                        unsafe_: a.is_unsafe(s),
                    })
                    .collect(),
                transitions: a
                    .transitions()
                    .map(|(s, e, t)| (a.name(s).into(), a.alphabet().name(e).into(), a.name(t).into()))
                    .collect(),
            })
            .collect(),
        region: model.region.clone(),
        scenario: model.scenario.clone(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("models serialize");
    s.push('\n');
    s
}

/// Plant, supervisor and their attacked closed loop, as stored in a bundle.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub system: AttackedSystem,
    pub region: Option<Vec<String>>,
}

/// Rebuilds the attacked closed loop from a bundle's plant and supervisor.
/// A stored closed loop must match the rebuilt one exactly.
pub fn load_bundle(model: &ModelFile) -> Result<Bundle, LoadError> {
    let plant = model.plant()?;
    let supervisor = model
        .get(ROLE_SUPERVISOR)
        .ok_or_else(|| LoadError::MissingRole(ROLE_SUPERVISOR.into()))?;
    let system = build_attacked_closed_loop(&plant, supervisor)?;
    if let Some(stored) = model.get(ROLE_CLOSED_LOOP) {
        if stored != system.gr() {
            return Err(LoadError::ClosedLoopMismatch);
        }
    }
    Ok(Bundle {
        system,
        region: model.region.clone(),
    })
}

/// The bundle file for an attacked system: plant with its vulnerable set,
/// supervisor and closed loop.
pub fn bundle_model(system: &AttackedSystem, region: Option<Vec<String>>) -> ModelFile {
    ModelFile {
        automata: vec![
            (ROLE_PLANT.into(), system.plant().clone()),
            (ROLE_SUPERVISOR.into(), system.supervisor().clone()),
            (ROLE_CLOSED_LOOP.into(), system.gr().clone()),
        ],
        region,
        scenario: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
aerobust 1
# a two-state plant
automaton plant
  event a controllable vulnerable
  event u uncontrollable   # trailing comment
  state x0 initial marked
  state x1 unsafe
  trans x0 a x1
  trans x1 u x0
end
region x0
scenario a
";

    #[test]
    fn parses_text() {
        let m = parse_model(SMALL).unwrap();
        let g = m.plant().unwrap();
        assert_eq!(g.num_states(), 2);
        assert_eq!(g.num_transitions(), 2);
        assert_eq!(g.alphabet().vulnerable().collect::<Vec<_>>(), ["a"]);
        assert_eq!(m.region.as_deref(), Some(&["x0".to_string()][..]));
    }

    #[test]
    fn round_trip_is_stable() {
        let m = parse_model(SMALL).unwrap();
        let text = serialize_model(&m);
        let again = parse_model(&text).unwrap();
        assert_eq!(again, m);
        assert_eq!(serialize_model(&again), text);
        let json = model_to_json(&m);
        assert_eq!(parse_model(&json).unwrap(), m);
    }

    #[test]
    fn empty_scenario_clears_vulnerability() {
        let text = SMALL.replace("scenario a", "scenario");
        let m = parse_model(&text).unwrap();
        assert_eq!(m.plant().unwrap().alphabet().vulnerable().count(), 0);
    }

    fn err(text: &str) -> ParseError {
        parse_model(text).unwrap_err()
    }

    #[test]
    fn undeclared_event_is_located() {
        let e = err(&SMALL.replace("trans x1 u x0", "trans x1 zz x0"));
        assert_eq!(e.location, Some((9, 12)));
        assert!(e.message.contains("`zz`"), "{}", e.message);
    }

    #[test]
    fn semantic_errors() {
        let e = err(&SMALL.replace("trans x1 u x0", "trans x0 a x0"));
        assert!(e.message.contains("nondeterministic"), "{}", e.message);
        let e = err(&SMALL.replace("trans x1 u x0", "trans x1 u nowhere"));
        assert!(e.message.contains("unknown state `nowhere`"), "{}", e.message);
        let e = err(&SMALL.replace("event u uncontrollable", "event u uncontrollable vulnerable"));
        assert!(e.message.contains("not controllable"), "{}", e.message);
        let e = err(&SMALL.replace("state x1 unsafe", "state x1 initial"));
        assert!(e.message.contains("second initial"), "{}", e.message);
        let e = err(&SMALL.replace("region x0", "region x9"));
        assert!(e.message.contains("x9"), "{}", e.message);
        let e = err(&SMALL.replace("scenario a", "scenario u"));
        assert!(e.message.contains("not controllable"), "{}", e.message);
    }

    #[test]
    fn syntax_errors() {
        let e = err(&SMALL.replace("aerobust 1", "aerobust 2"));
        assert_eq!(e.location, Some((1, 10)));
        let e = err(&SMALL.replace("end\n", ""));
        assert!(e.message.contains("no `end`"));
        let e = err(&SMALL.replace("state x1 unsafe", "state x1 shiny"));
        assert_eq!(e.location, Some((7, 12)));
        let e = err(&SMALL.replace("event a controllable vulnerable", "event a sometimes"));
        assert_eq!(e.location, Some((4, 11)));
    }

    #[test]
    fn empty_automaton_is_allowed() {
        let m = parse_model("aerobust 1\nautomaton plant\n  event a controllable\nend\n").unwrap();
        assert!(m.plant().unwrap().is_empty());
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let json = model_to_json(&parse_model(SMALL).unwrap()).replacen("\"format\"", "\"colour\": 1, \"format\"", 1);
        let e = parse_model(&json).unwrap_err();
        assert!(e.location.is_some());
        assert!(e.message.contains("colour"), "{}", e.message);
    }

    #[test]
    fn bundle_round_trip_and_mismatch() {
        let m = parse_model(SMALL).unwrap();
        let g = m.plant().unwrap();
        let s = g.restrict(&[true, false]);
        let sys = build_attacked_closed_loop(&g, &s).unwrap();
        let bundle = bundle_model(&sys, m.region.clone());
        let text = serialize_model(&bundle);
        let loaded = load_bundle(&parse_model(&text).unwrap()).unwrap();
        assert_eq!(loaded.system.gr(), sys.gr());
        assert_eq!(loaded.region, m.region);

        let tampered = text.replace("trans (x1,@ATT) u (x0,@ATT)\n", "");
        assert!(matches!(
            load_bundle(&parse_model(&tampered).unwrap()),
            Err(LoadError::ClosedLoopMismatch)
        ));
    }
}
