//! Process terms, names and the purely syntactic name-set functions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::lattice::Level;
use crate::types::SessionType;

/// A channel endpoint. Names compare by their identifier string.
///
/// Identifiers beginning with `#` are reserved for canonical renumbering and
/// never produced by the parser.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(id: impl AsRef<str>) -> Self {
        Name(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// A selection/branch label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(id: impl AsRef<str>) -> Self {
        Label(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// Processes of the asynchronous calculus.
///
/// Restrictions carry the type and secrecy level of their first endpoint;
/// the second endpoint has the dual type at the same level.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Inaction,
    Par(Box<Process>, Box<Process>),
    Res {
        x: Name,
        y: Name,
        ty: SessionType,
        level: Level,
        body: Box<Process>,
    },
    Close(Name),
    Wait(Name, Box<Process>),
    Select {
        x: Name,
        cont: Name,
        label: Label,
    },
    /// Binds `z` in every arm. Arms are kept sorted by label.
    Branch {
        x: Name,
        z: Name,
        arms: BTreeMap<Label, Process>,
    },
    Send {
        x: Name,
        payload: Name,
        cont: Name,
    },
    /// Binds `y` and `z` in `body`.
    Recv {
        x: Name,
        y: Name,
        z: Name,
        body: Box<Process>,
    },
}

impl fmt::Debug for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Shorthand constructors, mostly used by tests and generators.
impl Process {
    pub fn par(p: Process, q: Process) -> Process {
        Process::Par(Box::new(p), Box::new(q))
    }

    /// Right-nested parallel composition of `ps`; `0` when empty.
    pub fn par_all(ps: impl IntoIterator<Item = Process>) -> Process {
        let mut ps: Vec<Process> = ps.into_iter().collect();
        let Some(mut acc) = ps.pop() else {
            return Process::Inaction;
        };
        while let Some(p) = ps.pop() {
            acc = Process::par(p, acc);
        }
        acc
    }

    pub fn res(x: impl Into<Name>, y: impl Into<Name>, ty: SessionType, level: Level, body: Process) -> Process {
        Process::Res {
            x: x.into(),
            y: y.into(),
            ty,
            level,
            body: Box::new(body),
        }
    }

    pub fn close(x: impl Into<Name>) -> Process {
        Process::Close(x.into())
    }

    pub fn wait(x: impl Into<Name>, cont: Process) -> Process {
        Process::Wait(x.into(), Box::new(cont))
    }

    pub fn select(x: impl Into<Name>, cont: impl Into<Name>, label: impl Into<Label>) -> Process {
        Process::Select {
            x: x.into(),
            cont: cont.into(),
            label: label.into(),
        }
    }

    pub fn branch<L: Into<Label>>(
        x: impl Into<Name>,
        z: impl Into<Name>,
        arms: impl IntoIterator<Item = (L, Process)>,
    ) -> Process {
        Process::Branch {
            x: x.into(),
            z: z.into(),
            arms: arms.into_iter().map(|(l, p)| (l.into(), p)).collect(),
        }
    }

    pub fn send(x: impl Into<Name>, payload: impl Into<Name>, cont: impl Into<Name>) -> Process {
        Process::Send {
            x: x.into(),
            payload: payload.into(),
            cont: cont.into(),
        }
    }

    pub fn recv(x: impl Into<Name>, y: impl Into<Name>, z: impl Into<Name>, body: Process) -> Process {
        Process::Recv {
            x: x.into(),
            y: y.into(),
            z: z.into(),
            body: Box::new(body),
        }
    }
}

impl Process {
    /// Subject of the foremost prefix, for prefix forms.
    pub fn subject(&self) -> Option<&Name> {
        match self {
            Process::Close(x)
            | Process::Wait(x, _)
            | Process::Select { x, .. }
            | Process::Branch { x, .. }
            | Process::Send { x, .. }
            | Process::Recv { x, .. } => Some(x),
            _ => None,
        }
    }

    /// True for the output forms: close, selection and send.
    pub fn is_output(&self) -> bool {
        matches!(self, Process::Close(_) | Process::Select { .. } | Process::Send { .. })
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Process::Wait(..) | Process::Branch { .. } | Process::Recv { .. })
    }

    /// Number of communication prefixes, counting every branch arm.
    pub fn prefix_count(&self) -> usize {
        match self {
            Process::Inaction => 0,
            Process::Par(p, q) => p.prefix_count() + q.prefix_count(),
            Process::Res { body, .. } => body.prefix_count(),
            Process::Close(_) | Process::Select { .. } | Process::Send { .. } => 1,
            Process::Wait(_, p) | Process::Recv { body: p, .. } => 1 + p.prefix_count(),
            Process::Branch { arms, .. } => 1 + arms.values().map(Process::prefix_count).sum::<usize>(),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        match self {
            Process::Inaction => {}
            Process::Par(p, q) => {
                p.collect_free(out);
                q.collect_free(out);
            }
            Process::Res { x, y, body, .. } => {
                let mut inner = body.free_names();
                inner.remove(x);
                inner.remove(y);
                out.extend(inner);
            }
            Process::Close(x) => {
                out.insert(x.clone());
            }
            Process::Wait(x, p) => {
                out.insert(x.clone());
                p.collect_free(out);
            }
            Process::Select { x, cont, .. } => {
                out.insert(x.clone());
                out.insert(cont.clone());
            }
            Process::Branch { x, z, arms } => {
                out.insert(x.clone());
                for arm in arms.values() {
                    let mut inner = arm.free_names();
                    inner.remove(z);
                    out.extend(inner);
                }
            }
            Process::Send { x, payload, cont } => {
                out.insert(x.clone());
                out.insert(payload.clone());
                out.insert(cont.clone());
            }
            Process::Recv { x, y, z, body } => {
                out.insert(x.clone());
                let mut inner = body.free_names();
                inner.remove(y);
                inner.remove(z);
                out.extend(inner);
            }
        }
    }

    /// Every name occurring in the term, bound or free.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_all(&mut out);
        out
    }

    fn collect_all(&self, out: &mut BTreeSet<Name>) {
        match self {
            Process::Inaction => {}
            Process::Par(p, q) => {
                p.collect_all(out);
                q.collect_all(out);
            }
            Process::Res { x, y, body, .. } => {
                out.insert(x.clone());
                out.insert(y.clone());
                body.collect_all(out);
            }
            Process::Close(x) => {
                out.insert(x.clone());
            }
            Process::Wait(x, p) => {
                out.insert(x.clone());
                p.collect_all(out);
            }
            Process::Select { x, cont, .. } => {
                out.insert(x.clone());
                out.insert(cont.clone());
            }
            Process::Branch { x, z, arms } => {
                out.insert(x.clone());
                out.insert(z.clone());
                for arm in arms.values() {
                    arm.collect_all(out);
                }
            }
            Process::Send { x, payload, cont } => {
                out.insert(x.clone());
                out.insert(payload.clone());
                out.insert(cont.clone());
            }
            Process::Recv { x, y, z, body } => {
                out.insert(x.clone());
                out.insert(y.clone());
                out.insert(z.clone());
                body.collect_all(out);
            }
        }
    }

    /// Free communication names: free subjects of unblocked prefixes, plus
    /// those of input continuations. Payloads of outputs never count.
    pub fn free_communication_names(&self) -> BTreeSet<Name> {
        match self {
            Process::Inaction => BTreeSet::new(),
            Process::Par(p, q) => {
                let mut s = p.free_communication_names();
                s.extend(q.free_communication_names());
                s
            }
            Process::Res { x, y, body, .. } => {
                let mut s = body.free_communication_names();
                s.remove(x);
                s.remove(y);
                s
            }
            Process::Close(x) | Process::Select { x, .. } | Process::Send { x, .. } => BTreeSet::from([x.clone()]),
            Process::Wait(x, p) => {
                let mut s = p.free_communication_names();
                s.insert(x.clone());
                s
            }
            Process::Recv { x, y, z, body } => {
                let mut s = body.free_communication_names();
                s.remove(y);
                s.remove(z);
                s.insert(x.clone());
                s
            }
            Process::Branch { x, z, arms } => {
                let mut s = BTreeSet::new();
                for arm in arms.values() {
                    s.extend(arm.free_communication_names());
                }
                s.remove(z);
                s.insert(x.clone());
                s
            }
        }
    }

    /// Active output names: subjects of outputs not guarded by an input.
    pub fn active_output_names(&self) -> BTreeSet<Name> {
        match self {
            Process::Par(p, q) => {
                let mut s = p.active_output_names();
                s.extend(q.active_output_names());
                s
            }
            Process::Res { x, y, body, .. } => {
                let mut s = body.active_output_names();
                s.remove(x);
                s.remove(y);
                s
            }
            Process::Close(x) | Process::Select { x, .. } | Process::Send { x, .. } => BTreeSet::from([x.clone()]),
            Process::Inaction | Process::Wait(..) | Process::Branch { .. } | Process::Recv { .. } => BTreeSet::new(),
        }
    }

    /// Capture-avoiding substitution of `fresh` for the free occurrences of `old`.
    pub fn substitute(&self, fresh: &Name, old: &Name) -> Process {
        if fresh == old {
            return self.clone();
        }
        let map = BTreeMap::from([(old.clone(), fresh.clone())]);
        self.rename(&map)
    }

    /// Simultaneous capture-avoiding renaming of free names.
    pub fn rename(&self, map: &BTreeMap<Name, Name>) -> Process {
        if map.is_empty() {
            return self.clone();
        }
        let get = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        match self {
            Process::Inaction => Process::Inaction,
            Process::Par(p, q) => Process::par(p.rename(map), q.rename(map)),
            Process::Close(x) => Process::Close(get(x)),
            Process::Wait(x, p) => Process::Wait(get(x), Box::new(p.rename(map))),
            Process::Select { x, cont, label } => Process::Select {
                x: get(x),
                cont: get(cont),
                label: label.clone(),
            },
            Process::Send { x, payload, cont } => Process::Send {
                x: get(x),
                payload: get(payload),
                cont: get(cont),
            },
            Process::Res { x, y, ty, level, body } => {
                let (bs, inner) = enter_binders(&[x, y], &[body.as_ref()], map);
                Process::Res {
                    x: bs[0].clone(),
                    y: bs[1].clone(),
                    ty: ty.clone(),
                    level: level.clone(),
                    body: Box::new(body.rename(&inner)),
                }
            }
            Process::Recv { x, y, z, body } => {
                let (bs, inner) = enter_binders(&[y, z], &[body.as_ref()], map);
                Process::Recv {
                    x: get(x),
                    y: bs[0].clone(),
                    z: bs[1].clone(),
                    body: Box::new(body.rename(&inner)),
                }
            }
            Process::Branch { x, z, arms } => {
                let bodies: Vec<&Process> = arms.values().collect();
                let (bs, inner) = enter_binders(&[z], &bodies, map);
                Process::Branch {
                    x: get(x),
                    z: bs[0].clone(),
                    arms: arms.iter().map(|(l, p)| (l.clone(), p.rename(&inner))).collect(),
                }
            }
        }
    }

    /// Renames bound names to `#0`, `#1`, ... in leftmost-outermost order.
    pub fn alpha_canonical(&self) -> Process {
        let mut counter = 0usize;
        let mut env = Vec::new();
        self.canon_with(&mut env, &mut counter)
    }

    fn canon_with(&self, env: &mut Vec<(Name, Name)>, counter: &mut usize) -> Process {
        fn look(env: &[(Name, Name)], n: &Name) -> Name {
            env.iter()
                .rev()
                .find(|(k, _)| k == n)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(|| n.clone())
        }
        fn bind(env: &mut Vec<(Name, Name)>, counter: &mut usize, n: &Name) -> Name {
            let fresh = Name::new(format!("#{counter}"));
            *counter += 1;
            env.push((n.clone(), fresh.clone()));
            fresh
        }
        match self {
            Process::Inaction => Process::Inaction,
            Process::Par(p, q) => {
                let p = p.canon_with(env, counter);
                let q = q.canon_with(env, counter);
                Process::par(p, q)
            }
            Process::Close(x) => Process::Close(look(env, x)),
            Process::Wait(x, p) => Process::Wait(look(env, x), Box::new(p.canon_with(env, counter))),
            Process::Select { x, cont, label } => Process::Select {
                x: look(env, x),
                cont: look(env, cont),
                label: label.clone(),
            },
            Process::Send { x, payload, cont } => Process::Send {
                x: look(env, x),
                payload: look(env, payload),
                cont: look(env, cont),
            },
            Process::Res { x, y, ty, level, body } => {
                let depth = env.len();
                let nx = bind(env, counter, x);
                let ny = bind(env, counter, y);
                let body = body.canon_with(env, counter);
                env.truncate(depth);
                Process::Res {
                    x: nx,
                    y: ny,
                    ty: ty.clone(),
                    level: level.clone(),
                    body: Box::new(body),
                }
            }
            Process::Recv { x, y, z, body } => {
                let sx = look(env, x);
                let depth = env.len();
                let ny = bind(env, counter, y);
                let nz = bind(env, counter, z);
                let body = body.canon_with(env, counter);
                env.truncate(depth);
                Process::Recv {
                    x: sx,
                    y: ny,
                    z: nz,
                    body: Box::new(body),
                }
            }
            Process::Branch { x, z, arms } => {
                let sx = look(env, x);
                let depth = env.len();
                let nz = bind(env, counter, z);
                let arms = arms
                    .iter()
                    .map(|(l, p)| (l.clone(), p.canon_with(env, counter)))
                    .collect();
                env.truncate(depth);
                Process::Branch { x: sx, z: nz, arms }
            }
        }
    }

    pub fn alpha_equivalent(&self, other: &Process) -> bool {
        self.alpha_canonical() == other.alpha_canonical()
    }
}

/// Prepares the renaming for the scope of `binders`: drops shadowed keys and
/// renames any binder that would capture an incoming name.
fn enter_binders(
    binders: &[&Name],
    bodies: &[&Process],
    map: &BTreeMap<Name, Name>,
) -> (Vec<Name>, BTreeMap<Name, Name>) {
    let mut inner: BTreeMap<Name, Name> = map
        .iter()
        .filter(|(k, _)| !binders.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let mut body_free = BTreeSet::new();
    for b in bodies {
        body_free.extend(b.free_names());
    }
    inner.retain(|k, _| body_free.contains(k));
    let incoming: BTreeSet<Name> = inner.values().cloned().collect();
    let mut avoid: BTreeSet<Name> = body_free;
    avoid.extend(incoming.iter().cloned());
    avoid.extend(binders.iter().map(|b| (*b).clone()));
    avoid.extend(inner.keys().cloned());
    let mut out = Vec::with_capacity(binders.len());
    for b in binders {
        if incoming.contains(*b) {
            let fresh = fresh_name(b, &avoid);
            avoid.insert(fresh.clone());
            inner.insert((*b).clone(), fresh.clone());
            out.push(fresh);
        } else {
            out.push((*b).clone());
        }
    }
    (out, inner)
}

/// Appends a numeric suffix to the stem of `base` (trailing digits removed)
/// until the result is not in `avoid`.
pub fn fresh_name(base: &Name, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.as_str().trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "n" } else { stem };
    (1usize..)
        .map(|i| Name::new(format!("{stem}{i}")))
        .find(|n| !avoid.contains(n))
        .expect("unbounded suffix search")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Level;
    use crate::types::SessionType;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn set(xs: &[&str]) -> BTreeSet<Name> {
        xs.iter().map(|s| n(s)).collect()
    }

    fn res(x: &str, y: &str, body: Process) -> Process {
        Process::res(x, y, SessionType::One, Level::new("L"), body)
    }

    #[test]
    fn free_names_examples() {
        assert!(Process::Inaction.free_names().is_empty());
        assert_eq!(Process::close("x").free_names(), set(&["x"]));
        let p = res("x", "y", Process::par(Process::close("x"), Process::wait("y", Process::close("u"))));
        assert_eq!(p.free_names(), set(&["u"]));
    }

    #[test]
    fn substitution_examples() {
        assert_eq!(Process::close("x").substitute(&n("y"), &n("x")), Process::close("y"));
        let p = Process::wait("x", Process::close("z"));
        assert_eq!(p.substitute(&n("y"), &n("w")), p);

        // The binder y must move out of the way of the incoming y.
        let p = res("y", "y'", Process::send("x", "y", "b"));
        let q = p.substitute(&n("y"), &n("x"));
        match &q {
            Process::Res { x, y, body, .. } => {
                assert_ne!(x, &n("y"));
                assert_eq!(y, &n("y'"));
                assert_eq!(**body, Process::send("y", x.clone(), "b"));
            }
            other => panic!("unexpected {other}"),
        }
        assert_eq!(p.free_names(), set(&["x", "b"]));
        assert_eq!(q.free_names(), set(&["y", "b"]));
    }

    #[test]
    fn fresh_names_use_numeric_suffix() {
        let avoid = set(&["y", "y1"]);
        assert_eq!(fresh_name(&n("y"), &avoid), n("y2"));
        assert_eq!(fresh_name(&n("y1"), &avoid), n("y2"));
        assert_eq!(fresh_name(&n("a'"), &BTreeSet::new()), n("a'1"));
    }

    #[test]
    fn simultaneous_rename_swaps() {
        let p = Process::send("x", "a", "b");
        let map = BTreeMap::from([(n("a"), n("b")), (n("b"), n("a"))]);
        assert_eq!(p.rename(&map), Process::send("x", "b", "a"));
    }

    #[test]
    fn alpha_examples() {
        assert!(res("x", "y", Process::close("x")).alpha_equivalent(&res("a", "b", Process::close("a"))));
        assert!(!Process::close("x").alpha_equivalent(&Process::close("y")));
        let b1 = Process::branch("x", "z", [("l", Process::close("z"))]);
        let b2 = Process::branch("x", "w", [("l", Process::close("w"))]);
        assert!(b1.alpha_equivalent(&b2));
        // Binding order matters: Res(x,y) and Res(y,x) are not alpha-variants.
        assert!(!res("x", "y", Process::close("x")).alpha_equivalent(&res("x", "y", Process::close("y"))));
    }

    #[test]
    fn fcn_examples() {
        assert_eq!(Process::send("x", "a", "b").free_communication_names(), set(&["x"]));
        assert_eq!(Process::wait("x", Process::close("u")).free_communication_names(), set(&["x", "u"]));
        let p = res(
            "x",
            "y",
            Process::par(
                Process::send("x", "a", "b"),
                Process::recv("y", "z", "w", Process::wait("z", Process::Inaction)),
            ),
        );
        assert!(p.free_communication_names().is_empty());
    }

    #[test]
    fn aon_examples() {
        assert_eq!(Process::close("x").active_output_names(), set(&["x"]));
        assert!(Process::wait("x", Process::close("u")).active_output_names().is_empty());
        let p = Process::par(
            Process::close("y"),
            Process::wait("w", Process::wait("v", Process::Inaction)),
        );
        assert_eq!(p.active_output_names(), set(&["y"]));
    }

    #[test]
    fn par_all_nests_right() {
        let p = Process::par_all([Process::close("a"), Process::close("b"), Process::close("c")]);
        assert_eq!(
            p,
            Process::par(Process::close("a"), Process::par(Process::close("b"), Process::close("c")))
        );
        assert_eq!(Process::par_all([]), Process::Inaction);
    }
}
