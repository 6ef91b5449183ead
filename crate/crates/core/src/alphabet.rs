//! Event alphabets partitioned into controllable and uncontrollable events,
//! with a vulnerable subset of the controllable ones.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Index of an event inside its [`EventAlphabet`].
///
/// Ids follow the lexicographic order of event names, so sorting by id sorts
/// by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub(crate) u32);

impl EventId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Controllability class of a single event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Uncontrollable,
    Controllable,
    /// Controllable, and the attacker can re-enable it after disablement.
    Vulnerable,
}

impl EventKind {
    pub fn is_controllable(self) -> bool {
        !matches!(self, EventKind::Uncontrollable)
    }
}

/// A finite set of named events. The uncontrollable set is derived as the
/// complement of the controllable one and is never stored on its own.
#[derive(Clone, PartialEq, Eq)]
pub struct EventAlphabet {
    names: Vec<String>,
    kinds: Vec<EventKind>,
    index: HashMap<String, EventId>,
}

impl fmt::Debug for EventAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.names.iter().zip(self.kinds.iter()))
            .finish()
    }
}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(char::is_whitespace)
}

impl EventAlphabet {
    pub fn builder() -> AlphabetBuilder {
        AlphabetBuilder::default()
    }

    /// Builds an alphabet from `(name, kind)` pairs.
    pub fn new<I, S>(events: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, EventKind)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, kind) in events {
            let name = name.into();
            if !valid_name(&name) {
                return Err(Error::InvalidName(name));
            }
            if map.insert(name.clone(), kind).is_some() {
                return Err(Error::DuplicateEvent(name));
            }
        }
        Ok(Self::from_sorted(map))
    }

    fn from_sorted(map: BTreeMap<String, EventKind>) -> Self {
        let mut names = Vec::with_capacity(map.len());
        let mut kinds = Vec::with_capacity(map.len());
        let mut index = HashMap::with_capacity(map.len());
        for (i, (name, kind)) in map.into_iter().enumerate() {
            index.insert(name.clone(), EventId(i as u32));
            names.push(name);
            kinds.push(kind);
        }
        EventAlphabet {
            names,
            kinds,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<EventId> {
        self.index.get(name).copied()
    }

    /// Like [`id`](Self::id) but reports unknown names as an error.
    pub fn require(&self, name: &str) -> Result<EventId> {
        self.id(name)
            .ok_or_else(|| Error::UnknownEvent(name.to_string()))
    }

    pub fn name(&self, id: EventId) -> &str {
        &self.names[id.index()]
    }

    pub fn kind(&self, id: EventId) -> EventKind {
        self.kinds[id.index()]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn is_controllable(&self, id: EventId) -> bool {
        self.kinds[id.index()].is_controllable()
    }

    pub fn is_uncontrollable(&self, id: EventId) -> bool {
        !self.is_controllable(id)
    }

    pub fn is_vulnerable(&self, id: EventId) -> bool {
        self.kinds[id.index()] == EventKind::Vulnerable
    }

    /// All event ids in name order.
    pub fn ids(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.names.len() as u32).map(EventId)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.names.iter().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventId, &str, EventKind)> + '_ {
        self.ids()
            .map(move |id| (id, self.name(id), self.kind(id)))
    }

    pub fn controllable(&self) -> impl Iterator<Item = &str> + '_ {
        self.iter()
            .filter(|(_, _, k)| k.is_controllable())
            .map(|(_, n, _)| n)
    }

    pub fn uncontrollable(&self) -> impl Iterator<Item = &str> + '_ {
        self.iter()
            .filter(|(_, _, k)| !k.is_controllable())
            .map(|(_, n, _)| n)
    }

    pub fn vulnerable(&self) -> impl Iterator<Item = &str> + '_ {
        self.iter()
            .filter(|(_, _, k)| *k == EventKind::Vulnerable)
            .map(|(_, n, _)| n)
    }

    /// Returns a copy whose vulnerable subset is exactly `vulnerable`.
    pub fn with_vulnerable<I, S>(&self, vulnerable: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut kinds: Vec<EventKind> = self
            .kinds
            .iter()
            .map(|k| match k {
                EventKind::Vulnerable => EventKind::Controllable,
                other => *other,
            })
            .collect();
        for name in vulnerable {
            let name = name.as_ref();
            let id = self.require(name)?;
            if !kinds[id.index()].is_controllable() {
                return Err(Error::VulnerableNotControllable(name.to_string()));
            }
            kinds[id.index()] = EventKind::Vulnerable;
        }
        Ok(EventAlphabet {
            names: self.names.clone(),
            kinds,
            index: self.index.clone(),
        })
    }

    /// Returns a copy extended with extra events. Existing events keep their
    /// kind; re-declaring one with a different controllability is an error.
    pub fn extended<I, S>(&self, extra: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, EventKind)>,
        S: Into<String>,
    {
        let mut map: BTreeMap<String, EventKind> = self
            .names
            .iter()
            .cloned()
            .zip(self.kinds.iter().copied())
            .collect();
        for (name, kind) in extra {
            let name = name.into();
            if !valid_name(&name) {
                return Err(Error::InvalidName(name));
            }
            merge_kind(&mut map, name, kind)?;
        }
        Ok(Self::from_sorted(map))
    }

    /// Union of two alphabets. Controllability must agree on shared events;
    /// vulnerability is unioned.
    pub fn union(&self, other: &EventAlphabet) -> Result<Self> {
        self.extended(
            other
                .names
                .iter()
                .cloned()
                .zip(other.kinds.iter().copied()),
        )
    }
}

fn merge_kind(map: &mut BTreeMap<String, EventKind>, name: String, kind: EventKind) -> Result<()> {
    match map.get(&name).copied() {
        None => {
            map.insert(name, kind);
        }
        Some(old) if old.is_controllable() != kind.is_controllable() => {
            return Err(Error::AttributeConflict(name));
        }
        Some(old) => {
            if old != kind {
                map.insert(name, EventKind::Vulnerable);
            }
        }
    }
    Ok(())
}

/// Incremental construction of an [`EventAlphabet`].
#[derive(Debug, Default)]
pub struct AlphabetBuilder {
    controllable: Vec<String>,
    uncontrollable: Vec<String>,
    vulnerable: Vec<String>,
}

impl AlphabetBuilder {
    pub fn controllable<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.controllable.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn uncontrollable<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.uncontrollable.extend(names.into_iter().map(Into::into));
        self
    }

    /// Marks events as vulnerable. They must also be listed as controllable.
    pub fn vulnerable<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.vulnerable.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn build(self) -> Result<EventAlphabet> {
        let events = self
            .controllable
            .into_iter()
            .map(|n| (n, EventKind::Controllable))
            .chain(
                self.uncontrollable
                    .into_iter()
                    .map(|n| (n, EventKind::Uncontrollable)),
            );
        let base = EventAlphabet::new(events)?;
        base.with_vulnerable(self.vulnerable)
    }
}
