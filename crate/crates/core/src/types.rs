//! Session types, duality, weight, and typing contexts.

use std::collections::BTreeMap;
use std::fmt;

use crate::lattice::{LatticeError, Level, SecrecyLattice};
use crate::syntax::{Label, Name};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SessionType {
    One,
    Bot,
    Plus(BTreeMap<Label, SessionType>),
    With(BTreeMap<Label, SessionType>),
    Tensor(Box<SessionType>, Box<SessionType>),
    Par(Box<SessionType>, Box<SessionType>),
}

impl fmt::Debug for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl SessionType {
    pub fn plus<L: Into<Label>>(arms: impl IntoIterator<Item = (L, SessionType)>) -> Self {
        SessionType::Plus(arms.into_iter().map(|(l, a)| (l.into(), a)).collect())
    }

    pub fn with<L: Into<Label>>(arms: impl IntoIterator<Item = (L, SessionType)>) -> Self {
        SessionType::With(arms.into_iter().map(|(l, a)| (l.into(), a)).collect())
    }

    pub fn tensor(a: SessionType, b: SessionType) -> Self {
        SessionType::Tensor(Box::new(a), Box::new(b))
    }

    pub fn par(a: SessionType, b: SessionType) -> Self {
        SessionType::Par(Box::new(a), Box::new(b))
    }

    pub fn dual(&self) -> SessionType {
        match self {
            SessionType::One => SessionType::Bot,
            SessionType::Bot => SessionType::One,
            SessionType::Plus(arms) => SessionType::With(arms.iter().map(|(l, a)| (l.clone(), a.dual())).collect()),
            SessionType::With(arms) => SessionType::Plus(arms.iter().map(|(l, a)| (l.clone(), a.dual())).collect()),
            SessionType::Tensor(a, b) => SessionType::par(a.dual(), b.dual()),
            SessionType::Par(a, b) => SessionType::tensor(a.dual(), b.dual()),
        }
    }

    pub fn weight(&self) -> usize {
        match self {
            SessionType::One | SessionType::Bot => 1,
            SessionType::Tensor(a, b) | SessionType::Par(a, b) => a.weight() + b.weight() + 1,
            SessionType::Plus(arms) | SessionType::With(arms) => arms.values().map(SessionType::weight).max().unwrap_or(0) + 1,
        }
    }

    /// True for 1, ⊕ and ⊗: the types whose endpoint outputs.
    pub fn is_positive(&self) -> bool {
        matches!(self, SessionType::One | SessionType::Plus(_) | SessionType::Tensor(..))
    }

    /// Short constructor name used in diagnostics.
    pub fn head(&self) -> &'static str {
        match self {
            SessionType::One => "end!",
            SessionType::Bot => "end?",
            SessionType::Plus(_) => "+{...}",
            SessionType::With(_) => "&{...}",
            SessionType::Tensor(..) => "_ * _",
            SessionType::Par(..) => "_ @ _",
        }
    }
}

/// A type paired with the secrecy level of its channel.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding {
    pub ty: SessionType,
    pub level: Level,
}

impl Binding {
    pub fn new(ty: SessionType, level: Level) -> Self {
        Binding { ty, level }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("name `{0}` already present in typing context")]
pub struct DuplicateName(pub Name);

/// A finite map from names to typed, leveled bindings.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypingContext {
    entries: BTreeMap<Name, Binding>,
}

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: Name, b: Binding) -> Result<(), DuplicateName> {
        if self.entries.contains_key(&x) {
            return Err(DuplicateName(x));
        }
        self.entries.insert(x, b);
        Ok(())
    }

    /// Builder-style insert that panics on duplicates; for literals in tests.
    pub fn with(mut self, x: impl Into<Name>, ty: SessionType, level: impl Into<Level>) -> Self {
        self.insert(x.into(), Binding::new(ty, level.into())).expect("duplicate name");
        self
    }

    pub fn get(&self, x: &Name) -> Option<&Binding> {
        self.entries.get(x)
    }

    pub fn remove(&mut self, x: &Name) -> Option<Binding> {
        self.entries.remove(x)
    }

    pub fn contains(&self, x: &Name) -> bool {
        self.entries.contains_key(x)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Binding)> {
        self.entries.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.keys()
    }

    /// Keeps the entries whose level is below `xi`.
    pub fn project(&self, lattice: &SecrecyLattice, xi: &Level) -> Result<TypingContext, LatticeError> {
        let mut entries = BTreeMap::new();
        for (x, b) in &self.entries {
            if lattice.leq(&b.level, xi)? {
                entries.insert(x.clone(), b.clone());
            }
        }
        Ok(TypingContext { entries })
    }

    pub fn weight(&self) -> usize {
        self.entries.values().map(|b| b.ty.weight()).sum()
    }
}

impl FromIterator<(Name, Binding)> for TypingContext {
    fn from_iter<I: IntoIterator<Item = (Name, Binding)>>(iter: I) -> Self {
        TypingContext {
            entries: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a TypingContext {
    type Item = (&'a Name, &'a Binding);
    type IntoIter = std::collections::btree_map::Iter<'a, Name, Binding>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SessionType::*;

    #[test]
    fn dual_examples() {
        assert_eq!(One.dual(), Bot);
        assert_eq!(SessionType::tensor(One, Bot).dual(), SessionType::par(Bot, One));
        let p = SessionType::plus([("a", One), ("b", SessionType::tensor(One, Bot))]);
        assert_eq!(p.dual(), SessionType::with([("a", Bot), ("b", SessionType::par(Bot, One))]));
        assert_eq!(p.dual().dual(), p);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(One.weight(), 1);
        assert_eq!(SessionType::plus([("act", One), ("wait", One)]).weight(), 2);
        assert_eq!(SessionType::tensor(One, Bot).weight(), 3);
    }

    #[test]
    fn projection_examples() {
        let o = SecrecyLattice::two_point();
        let g = TypingContext::new()
            .with("aL", SessionType::with([("oc1", Bot), ("oc2", Bot)]), "L")
            .with("aI", SessionType::plus([("act", One), ("wait", One)]), "H");
        let pl = g.project(&o, &Level::new("L")).unwrap();
        assert_eq!(pl.names().cloned().collect::<Vec<_>>(), vec![Name::new("aL")]);
        assert_eq!(g.project(&o, &o.top()).unwrap(), g);
        assert_eq!(pl.project(&o, &Level::new("L")).unwrap(), pl);
    }

    #[test]
    fn projection_drops_incomparable() {
        let l = |s: &str| Level::new(s);
        let o = SecrecyLattice::new(
            [],
            [(l("L"), l("M1")), (l("L"), l("M2")), (l("M1"), l("H")), (l("M2"), l("H"))],
        )
        .unwrap();
        let g = TypingContext::new().with("a", One, "M1").with("b", One, "M2").with("c", Bot, "L");
        let p = g.project(&o, &l("M1")).unwrap();
        assert!(p.contains(&Name::new("a")) && p.contains(&Name::new("c")) && !p.contains(&Name::new("b")));
    }

    #[test]
    fn duplicate_insert_rejected() {
        let mut g = TypingContext::new();
        g.insert(Name::new("x"), Binding::new(One, Level::new("L"))).unwrap();
        assert!(g.insert(Name::new("x"), Binding::new(Bot, Level::new("L"))).is_err());
    }
}
