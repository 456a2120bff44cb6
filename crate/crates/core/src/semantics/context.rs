//! Evaluation contexts: processes with a single hole under parallel
//! composition and restriction.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::lattice::Level;
use crate::syntax::{Name, Process};
use crate::types::SessionType;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvalContext {
    Hole,
    /// `E | P`
    ParL(Box<EvalContext>, Process),
    /// `P | E`
    ParR(Process, Box<EvalContext>),
    Res {
        x: Name,
        y: Name,
        ty: SessionType,
        level: Level,
        body: Box<EvalContext>,
    },
}

impl fmt::Debug for EvalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("marker does not occur in the process")]
    Absent,
    #[error("marker occurs {0} times; expected exactly once")]
    Duplicated(usize),
    #[error("marker occurs under a prefix, outside evaluation position")]
    Guarded,
}

/// Name used by the parser for the `hole` placeholder.
pub fn hole_marker() -> Process {
    Process::Close(Name::new("#hole"))
}

impl EvalContext {
    pub fn plug(&self, p: &Process) -> Process {
        match self {
            EvalContext::Hole => p.clone(),
            EvalContext::ParL(e, q) => Process::par(e.plug(p), q.clone()),
            EvalContext::ParR(q, e) => Process::par(q.clone(), e.plug(p)),
            EvalContext::Res { x, y, ty, level, body } => Process::res(x.clone(), y.clone(), ty.clone(), level.clone(), body.plug(p)),
        }
    }

    /// Finds the unique occurrence of `marker` in evaluation position and
    /// returns the surrounding context.
    pub fn split(p: &Process, marker: &Process) -> Result<(EvalContext, Process), SplitError> {
        let total = count_occurrences(p, marker);
        match total {
            0 => return Err(SplitError::Absent),
            1 => {}
            n => return Err(SplitError::Duplicated(n)),
        }
        match locate(p, marker) {
            Some(e) => Ok((e, marker.clone())),
            None => Err(SplitError::Guarded),
        }
    }

    /// Interprets a term containing one `hole` marker as a context.
    pub fn from_marked(p: &Process) -> Result<EvalContext, SplitError> {
        Self::split(p, &hole_marker()).map(|(e, _)| e)
    }

    /// Restrictions along the path to the hole, outermost first.
    pub fn hole_binders(&self) -> Vec<(Name, Name, SessionType, Level)> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                EvalContext::Hole => return out,
                EvalContext::ParL(e, _) | EvalContext::ParR(_, e) => cur = e,
                EvalContext::Res { x, y, ty, level, body } => {
                    out.push((x.clone(), y.clone(), ty.clone(), level.clone()));
                    cur = body;
                }
            }
        }
    }

    /// Processes composed in parallel with the hole, left to right.
    pub fn siblings(&self) -> Vec<&Process> {
        let mut out = Vec::new();
        self.collect_siblings(&mut out);
        out
    }

    fn collect_siblings<'a>(&'a self, out: &mut Vec<&'a Process>) {
        match self {
            EvalContext::Hole => {}
            EvalContext::ParL(e, q) => {
                e.collect_siblings(out);
                out.push(q);
            }
            EvalContext::ParR(q, e) => {
                out.push(q);
                e.collect_siblings(out);
            }
            EvalContext::Res { body, .. } => body.collect_siblings(out),
        }
    }

    /// Free names of the context itself (the hole contributes nothing).
    pub fn free_names(&self) -> BTreeSet<Name> {
        match self {
            EvalContext::Hole => BTreeSet::new(),
            EvalContext::ParL(e, q) | EvalContext::ParR(q, e) => {
                let mut s = e.free_names();
                s.extend(q.free_names());
                s
            }
            EvalContext::Res { x, y, body, .. } => {
                let mut s = body.free_names();
                s.remove(x);
                s.remove(y);
                s
            }
        }
    }

    /// Active context output names: endpoints `x` of restrictions `ν(xy)`
    /// (either orientation) where `x` is not used by the context and `y` is
    /// the subject of a ready output of the context.
    pub fn active_output_names(&self) -> BTreeSet<Name> {
        let (binders, nodes) = crate::semantics::normal_form::flatten_context(self);
        let mut fns = BTreeSet::new();
        let mut aon = BTreeSet::new();
        for n in &nodes {
            fns.extend(n.free_names());
            aon.extend(n.active_output_names());
        }
        let mut out = BTreeSet::new();
        for (x, y) in binders {
            if !fns.contains(&x) && aon.contains(&y) {
                out.insert(x.clone());
            }
            if !fns.contains(&y) && aon.contains(&x) {
                out.insert(y.clone());
            }
        }
        out
    }
}

/// Active interface names: `acon(E) ∪ aon(P)`.
pub fn active_interface_names(e: &EvalContext, p: &Process) -> BTreeSet<Name> {
    let mut s = e.active_output_names();
    s.extend(p.active_output_names());
    s
}

fn count_occurrences(p: &Process, marker: &Process) -> usize {
    if p == marker {
        return 1;
    }
    match p {
        Process::Par(a, b) => count_occurrences(a, marker) + count_occurrences(b, marker),
        Process::Res { body, .. } | Process::Wait(_, body) | Process::Recv { body, .. } => count_occurrences(body, marker),
        Process::Branch { arms, .. } => arms.values().map(|a| count_occurrences(a, marker)).sum(),
        _ => 0,
    }
}

fn locate(p: &Process, marker: &Process) -> Option<EvalContext> {
    if p == marker {
        return Some(EvalContext::Hole);
    }
    match p {
        Process::Par(a, b) => {
            if let Some(e) = locate(a, marker) {
                Some(EvalContext::ParL(Box::new(e), (**b).clone()))
            } else {
                locate(b, marker).map(|e| EvalContext::ParR((**a).clone(), Box::new(e)))
            }
        }
        Process::Res { x, y, ty, level, body } => locate(body, marker).map(|e| EvalContext::Res {
            x: x.clone(),
            y: y.clone(),
            ty: ty.clone(),
            level: level.clone(),
            body: Box::new(e),
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(x: &str, y: &str, body: Process) -> Process {
        Process::res(x, y, SessionType::One, Level::new("L"), body)
    }

    #[test]
    fn plug_hole_is_identity() {
        let p = Process::close("x");
        assert_eq!(EvalContext::Hole.plug(&p), p);
    }

    #[test]
    fn split_inverts_plug() {
        let p = Process::close("x");
        let marked = res("a", "b", Process::par(Process::wait("b", Process::Inaction), p.clone()));
        let (e, q) = EvalContext::split(&marked, &p).unwrap();
        assert_eq!(q, p);
        assert_eq!(e.plug(&q), marked);
        let (e2, _) = EvalContext::split(&e.plug(&p), &p).unwrap();
        assert_eq!(e2, e);
    }

    #[test]
    fn split_errors() {
        let m = hole_marker();
        assert_eq!(EvalContext::from_marked(&Process::close("x")), Err(SplitError::Absent));
        assert_eq!(
            EvalContext::from_marked(&Process::par(m.clone(), m.clone())),
            Err(SplitError::Duplicated(2))
        );
        assert_eq!(EvalContext::from_marked(&Process::wait("x", m)), Err(SplitError::Guarded));
    }

    #[test]
    fn acon_of_hole_is_empty() {
        assert!(EvalContext::Hole.active_output_names().is_empty());
    }

    #[test]
    fn acon_and_ain_example() {
        // ν(uw)ν(xy)ν(zv)(wait x; close u | close z | [])
        let marked = res(
            "u",
            "w",
            res(
                "x",
                "y",
                res(
                    "z",
                    "v",
                    Process::par_all([Process::wait("x", Process::close("u")), Process::close("z"), hole_marker()]),
                ),
            ),
        );
        let e = EvalContext::from_marked(&marked).unwrap();
        let p = Process::par(
            Process::close("y"),
            Process::wait("w", Process::wait("v", Process::Inaction)),
        );
        let names = |xs: &[&str]| xs.iter().map(|s| Name::new(s)).collect::<BTreeSet<_>>();
        assert_eq!(p.active_output_names(), names(&["y"]));
        assert_eq!(e.active_output_names(), names(&["v"]));
        assert_eq!(active_interface_names(&e, &p), names(&["y", "v"]));
    }
}
