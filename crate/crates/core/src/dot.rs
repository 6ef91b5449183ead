//! Graphviz export.
//!
//! Marked states get a double border and the initial state a bold one.
//! Fill colors mark unsafe, vulnerable and region states, in that priority.
//! Attack edges are red, recovery edges blue.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::alphabet::EventId;
use crate::attack::{base_event, AttackedSystem};
use crate::automaton::{Automaton, StateId, StateSet};
use crate::recovery::{RecoveryVerdict, RobustRegion};

pub const UNSAFE_FILL: &str = "#f4a3a3";
pub const VULNERABLE_FILL: &str = "#f9d98b";
pub const REGION_FILL: &str = "#b7e1b0";
pub const ATTACK_COLOR: &str = "red";
pub const RECOVERY_COLOR: &str = "blue";

/// Extra highlighting. State ids refer to the exported automaton.
#[derive(Clone, Debug, Default)]
pub struct DotAnnotations {
    pub vulnerable: StateSet,
    pub region: StateSet,
    pub recovery_edges: BTreeSet<(StateId, EventId)>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn export_dot(a: &Automaton, name: &str, ann: &DotAnnotations) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n");
    for s in a.states() {
        let mut attrs = Vec::new();
        if a.is_marked(s) {
            attrs.push("peripheries=2".to_string());
        }
        let fill = if a.is_unsafe(s) {
            Some(UNSAFE_FILL)
        } else if ann.vulnerable.contains(&s) {
            Some(VULNERABLE_FILL)
        } else if ann.region.contains(&s) {
            Some(REGION_FILL)
        } else {
            None
        };
        let mut style = Vec::new();
        if let Some(f) = fill {
            style.push("filled");
            attrs.push(format!("fillcolor={}", quote(f)));
        }
        if a.initial() == Some(s) {
            style.push("bold");
        }
        if !style.is_empty() {
            attrs.push(format!("style={}", quote(&style.join(","))));
        }
        if attrs.is_empty() {
            writeln!(out, "  {};", quote(a.name(s))).unwrap();
        } else {
            writeln!(out, "  {} [{}];", quote(a.name(s)), attrs.join(", ")).unwrap();
        }
    }
    for (s, e, t) in a.transitions() {
        let label = a.alphabet().name(e);
        let mut attrs = vec![format!("label={}", quote(label))];
        let color = if base_event(label).is_some() {
            Some(ATTACK_COLOR)
        } else if ann.recovery_edges.contains(&(s, e)) {
            Some(RECOVERY_COLOR)
        } else {
            None
        };
        if let Some(c) = color {
            attrs.push(format!("color={c}"));
            attrs.push(format!("fontcolor={c}"));
        }
        writeln!(out, "  {} -> {} [{}];", quote(a.name(s)), quote(a.name(t)), attrs.join(", ")).unwrap();
    }
    out.push_str("}\n");
    out
}

/// Annotations for the resilient supervisor: states are colored by their
/// plant state, and the edges of every extracted strategy (nominal paths and
/// contingencies) are recovery edges.
pub fn resilient_annotations(sys: &AttackedSystem, region: &RobustRegion, verdict: &RecoveryVerdict) -> DotAnnotations {
    let sr = verdict.resilient_supervisor();
    let gr = sys.gr();
    let mut ann = DotAnnotations::default();
    for s in sr.states() {
        let Some(g) = gr.state(sr.name(s)) else { continue };
        let p = sys.plant_state(g);
        if sys.vulnerable_plant_states().contains(&p) {
            ann.vulnerable.insert(s);
        }
        if region.contains(p) {
            ann.region.insert(s);
        }
    }
    let mut walk = |from: &str, events: &[String]| {
        let Some(mut cur) = sr.state(from) else { return };
        for ev in events {
            let Some(e) = sr.alphabet().id(ev) else { return };
            let Some(next) = sr.step(cur, e) else { return };
            ann.recovery_edges.insert((cur, e));
            cur = next;
        }
    };
    for st in verdict.strategies() {
        walk(&st.detection, &st.nominal_path);
        for c in &st.contingency {
            if let (Some(s), Some(e)) = (sr.state(&c.state), sr.alphabet().id(&c.event)) {
                if let Some(t) = sr.step(s, e) {
                    walk(sr.name(t), &c.continuation);
                }
            }
        }
    }
    ann
}
