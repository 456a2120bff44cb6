//! Networks: a closing context and a process, with the interface observable
//! up to some level, and their unobservable reductions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::checker::{check_with, Discipline};
use crate::lattice::{Level, SecrecyLattice};
use crate::semantics::canon::{flat_key, KeyBinder, KeyNode};
use crate::semantics::context::EvalContext;
use crate::semantics::normal_form::{flatten_into, struct_congruent, wrap, Binder};
use crate::semantics::reduction::{apply_flat, flat_redexes, RedexKind};
use crate::syntax::{Label, Name, Process};
use crate::types::{Binding, TypingContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Ctx,
    Proc,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("unknown observer level `{0}`")]
    UnknownLevel(Level),
    #[error("context binders along the hole path reuse the name `{0}`")]
    Shadowing(Name),
    #[error("free name `{0}` of the process is not bound by the context")]
    Unbound(Name),
    #[error("process does not check against its interface: {0}")]
    ProcessIllTyped(String),
    #[error("plugged process is not closed and well typed: {0}")]
    NotClosed(String),
    #[error("interface observable up to {observer} is {found}, expected {expected}")]
    InterfaceMismatch {
        observer: Level,
        found: String,
        expected: String,
    },
}

/// `(E, P)` kept as one flat structure: every binder and node carries the
/// side it belongs to. Process-side binders never bind names used by the
/// context.
#[derive(Clone)]
pub struct Network {
    lattice: Arc<SecrecyLattice>,
    observer: Level,
    discipline: Discipline,
    gamma: TypingContext,
    binders: Vec<(Binder, Side)>,
    nodes: Vec<(Process, Side)>,
    key: String,
}

impl fmt::Debug for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :: {}", self.display_pair(), print_gamma(&self.gamma))
    }
}

pub fn print_gamma(g: &TypingContext) -> String {
    let items: Vec<String> = g.iter().map(|(n, b)| format!("{n}:{}[{}]", b.ty, b.level)).collect();
    format!("{{{}}}", items.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepClass {
    ContextInternal,
    ProcessInternal,
    CrossInterface,
}

#[derive(Debug, Clone)]
pub struct NetworkStep {
    pub class: StepClass,
    pub kind: RedexKind,
    pub x: Name,
    pub y: Name,
    pub label: Option<Label>,
    pub next: Network,
}

impl NetworkStep {
    pub fn line(&self) -> String {
        step_line(self.kind, &self.x, &self.y, self.label.as_ref())
    }
}

pub fn step_line(kind: RedexKind, x: &Name, y: &Name, label: Option<&Label>) -> String {
    match label {
        Some(l) => format!("STEP {kind} ({x},{y}) [{l}]"),
        None => format!("STEP {kind} ({x},{y})"),
    }
}

/// A terminal network with the unobservable steps that reached it.
#[derive(Debug, Clone)]
pub struct Reached {
    pub network: Network,
    pub trace: Vec<String>,
}

impl Network {
    /// Builds `(E, P)`. The interface `Γ'` of `P` is read off the context's
    /// restrictions; `P` must check against it and `E[P]` must be closed.
    pub fn new(lattice: &SecrecyLattice, observer: &Level, e: &EvalContext, p: &Process) -> Result<Network, NetworkError> {
        Network::new_with(lattice, observer, e, p, Discipline::Secure)
    }

    /// As [`Network::new`], typing under the given discipline.
    pub fn new_with(
        lattice: &SecrecyLattice,
        observer: &Level,
        e: &EvalContext,
        p: &Process,
        discipline: Discipline,
    ) -> Result<Network, NetworkError> {
        if !lattice.contains(observer) {
            return Err(NetworkError::UnknownLevel(observer.clone()));
        }
        let hole = e.hole_binders();
        let mut taken: BTreeSet<Name> = BTreeSet::new();
        let mut binders = Vec::new();
        for (x, y, ty, level) in &hole {
            for n in [x, y] {
                if !taken.insert(n.clone()) {
                    return Err(NetworkError::Shadowing(n.clone()));
                }
            }
            binders.push((Binder { x: x.clone(), y: y.clone(), ty: ty.clone(), level: level.clone() }, Side::Ctx));
        }
        let siblings = e.siblings();
        for s in &siblings {
            taken.extend(s.free_names());
        }
        taken.extend(p.free_names());
        let mut nodes = Vec::new();
        for (side, procs) in [(Side::Ctx, siblings.clone()), (Side::Proc, vec![p])] {
            for q in procs {
                let (mut bs, mut ns) = (Vec::new(), Vec::new());
                flatten_into(q, &mut taken, &mut bs, &mut ns);
                binders.extend(bs.into_iter().map(|b| (b, side)));
                nodes.extend(ns.into_iter().map(|n| (n, side)));
            }
        }
        let net = Network::from_parts(Arc::new(lattice.clone()), observer.clone(), discipline, binders, nodes, None)?;
        if !struct_congruent(&net.plugged(), &e.plug(p)) {
            // a sibling outside some hole binder's scope used its name
            let n = hole.first().map(|h| h.0.clone()).unwrap_or_else(|| Name::new("_"));
            return Err(NetworkError::Shadowing(n));
        }
        Ok(net)
    }

    /// Assembles and validates a network from flat parts. When `expected` is
    /// given, the derived observable interface must equal it.
    pub(crate) fn from_parts(
        lattice: Arc<SecrecyLattice>,
        observer: Level,
        discipline: Discipline,
        mut binders: Vec<(Binder, Side)>,
        nodes: Vec<(Process, Side)>,
        expected: Option<&TypingContext>,
    ) -> Result<Network, NetworkError> {
        // binders whose names reach into the context belong to it
        let ctx_names: BTreeSet<Name> = nodes
            .iter()
            .filter(|(_, s)| *s == Side::Ctx)
            .flat_map(|(n, _)| n.free_names())
            .collect();
        for (b, side) in binders.iter_mut() {
            if *side == Side::Proc && (ctx_names.contains(&b.x) || ctx_names.contains(&b.y)) {
                *side = Side::Ctx;
            }
        }
        let mut net = Network {
            lattice,
            observer,
            discipline,
            gamma: TypingContext::new(),
            binders,
            nodes,
            key: String::new(),
        };
        let full = net.full_interface()?;
        let bottom = net.lattice.bottom();
        if let Err(es) = check_with(&net.lattice, &net.proc(), &bottom, &full, discipline) {
            return Err(NetworkError::ProcessIllTyped(es[0].message.clone()));
        }
        if let Err(es) = check_with(&net.lattice, &net.plugged(), &bottom, &TypingContext::new(), discipline) {
            return Err(NetworkError::NotClosed(es[0].message.clone()));
        }
        let gamma = full
            .project(&net.lattice, &net.observer)
            .map_err(|_| NetworkError::UnknownLevel(net.observer.clone()))?;
        if let Some(exp) = expected {
            if &gamma != exp {
                return Err(NetworkError::InterfaceMismatch {
                    observer: net.observer.clone(),
                    found: print_gamma(&gamma),
                    expected: print_gamma(exp),
                });
            }
        }
        net.gamma = gamma;
        net.canonicalize();
        Ok(net)
    }

    fn canonicalize(&mut self) {
        let pinned: BTreeSet<Name> = self.gamma.names().cloned().collect();
        let kn: Vec<KeyNode<'_>> = self
            .nodes
            .iter()
            .map(|(p, s)| KeyNode {
                tag: if *s == Side::Ctx { "E:" } else { "P:" },
                proc: p,
            })
            .collect();
        let kb: Vec<KeyBinder> = self
            .binders
            .iter()
            .map(|(b, s)| KeyBinder::from_binder(b).tagged(if *s == Side::Ctx { "E" } else { "P" }))
            .collect();
        let r = flat_key(&kn, &kb, &pinned, 0);
        let key = format!("{} |- {}", print_gamma(&self.gamma), r.key);
        let nodes = r.node_order.iter().map(|&i| self.nodes[i].clone()).collect();
        let binders = r.binder_order.iter().map(|&i| self.binders[i].clone()).collect();
        self.nodes = nodes;
        self.binders = binders;
        self.key = key;
    }

    /// `Γ'`: the process's free names typed by the context's restrictions.
    pub fn full_interface(&self) -> Result<TypingContext, NetworkError> {
        let mut g = TypingContext::new();
        for n in self.proc().free_names() {
            let b = self
                .binders
                .iter()
                .find(|(b, s)| *s == Side::Ctx && b.has(&n))
                .ok_or_else(|| NetworkError::Unbound(n.clone()))?;
            let ty = b.0.type_of(&n).expect("binder has the name");
            g.insert(n, Binding::new(ty, b.0.level.clone())).expect("free names are distinct");
        }
        Ok(g)
    }

    pub fn lattice(&self) -> &SecrecyLattice {
        &self.lattice
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    pub fn observer(&self) -> &Level {
        &self.observer
    }

    /// The observable interface `Γ`.
    pub fn gamma(&self) -> &TypingContext {
        &self.gamma
    }

    pub fn binders(&self) -> &[(Binder, Side)] {
        &self.binders
    }

    pub fn nodes(&self) -> &[(Process, Side)] {
        &self.nodes
    }

    /// Canonical key: equal for networks equal up to renaming of bound names
    /// outside `Γ`.
    pub fn key(&self) -> &str {
        &self.key
    }

    fn side_binders(&self, side: Side) -> Vec<Binder> {
        self.binders.iter().filter(|(_, s)| *s == side).map(|(b, _)| b.clone()).collect()
    }

    fn side_nodes(&self, side: Side) -> Vec<Process> {
        self.nodes.iter().filter(|(_, s)| *s == side).map(|(n, _)| n.clone()).collect()
    }

    pub fn ctx(&self) -> EvalContext {
        let nodes = self.side_nodes(Side::Ctx);
        let mut e = EvalContext::Hole;
        if !nodes.is_empty() {
            e = EvalContext::ParR(Process::par_all(nodes), Box::new(e));
        }
        for b in self.side_binders(Side::Ctx).iter().rev() {
            e = EvalContext::Res {
                x: b.x.clone(),
                y: b.y.clone(),
                ty: b.ty.clone(),
                level: b.level.clone(),
                body: Box::new(e),
            };
        }
        e
    }

    pub fn proc(&self) -> Process {
        wrap(&self.side_binders(Side::Proc), Process::par_all(self.side_nodes(Side::Proc)))
    }

    pub fn plugged(&self) -> Process {
        self.ctx().plug(&self.proc())
    }

    /// `E, P` printed with the hole filled by a bracketed process.
    pub fn display_pair(&self) -> String {
        format!("{} [[ {} ]]", self.ctx(), self.proc())
    }

    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut s = BTreeSet::new();
        for (b, _) in &self.binders {
            s.insert(b.x.clone());
            s.insert(b.y.clone());
        }
        for (n, _) in &self.nodes {
            s.extend(n.all_names());
        }
        s
    }

    /// `aon(P)`
    pub fn proc_active_outputs(&self) -> BTreeSet<Name> {
        self.proc().active_output_names()
    }

    /// `acon(E)`
    pub fn context_active_outputs(&self) -> BTreeSet<Name> {
        let mut fns = BTreeSet::new();
        let mut aon = BTreeSet::new();
        for (n, s) in &self.nodes {
            if *s == Side::Ctx {
                fns.extend(n.free_names());
                aon.extend(n.active_output_names());
            }
        }
        let mut out = BTreeSet::new();
        for (b, s) in &self.binders {
            if *s != Side::Ctx {
                continue;
            }
            for (x, y) in [(&b.x, &b.y), (&b.y, &b.x)] {
                if !fns.contains(x) && aon.contains(y) {
                    out.insert(x.clone());
                }
            }
        }
        out
    }

    /// `ain(E, P) = acon(E) ∪ aon(P)`
    pub fn active_interface_names(&self) -> BTreeSet<Name> {
        let mut s = self.context_active_outputs();
        s.extend(self.proc_active_outputs());
        s
    }

    /// Replaces parts and revalidates at the given observable interface.
    pub(crate) fn rebuild(
        &self,
        binders: Vec<(Binder, Side)>,
        nodes: Vec<(Process, Side)>,
        expected: &TypingContext,
    ) -> Result<Network, NetworkError> {
        Network::from_parts(self.lattice.clone(), self.observer.clone(), self.discipline, binders, nodes, Some(expected))
    }

    /// Renames names throughout (binders and free occurrences in nodes).
    pub(crate) fn renamed_parts(&self, map: &BTreeMap<Name, Name>) -> (Vec<(Binder, Side)>, Vec<(Process, Side)>) {
        let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        let binders = self
            .binders
            .iter()
            .map(|(b, s)| {
                (
                    Binder {
                        x: r(&b.x),
                        y: r(&b.y),
                        ty: b.ty.clone(),
                        level: b.level.clone(),
                    },
                    *s,
                )
            })
            .collect();
        let nodes = self.nodes.iter().map(|(n, s)| (n.rename(map), *s)).collect();
        (binders, nodes)
    }

    /// Every unobservable successor. Steps that cross the interface on a
    /// name of `Γ`, or would change `Γ`, are excluded.
    pub fn unobservable_steps(&self) -> Vec<NetworkStep> {
        let bs: Vec<Binder> = self.binders.iter().map(|(b, _)| b.clone()).collect();
        let ns: Vec<Process> = self.nodes.iter().map(|(n, _)| n.clone()).collect();
        let mut out = Vec::new();
        for r in flat_redexes(&bs, &ns) {
            let bside = self.binders[r.binder].1;
            let (oside, iside) = (self.nodes[r.output].1, self.nodes[r.input].1);
            let class = match (bside, oside, iside) {
                (_, Side::Ctx, Side::Ctx) => StepClass::ContextInternal,
                (Side::Proc, Side::Proc, Side::Proc) => StepClass::ProcessInternal,
                _ => StepClass::CrossInterface,
            };
            if class == StepClass::CrossInterface {
                let observable = (oside == Side::Proc && self.gamma.contains(&r.x))
                    || (iside == Side::Proc && self.gamma.contains(&r.y));
                if observable {
                    continue;
                }
            }
            let mut taken = self.all_names();
            let (nbs, nns, first_new) = apply_flat(&bs, &ns, &r, &mut taken);
            // carry sides over: the removed binder and nodes are gone, the
            // contractum lands on the input's side
            let old_binders: Vec<Side> = self
                .binders
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != r.binder)
                .map(|(_, (_, s))| *s)
                .collect();
            let old_nodes: Vec<Side> = self
                .nodes
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != r.output && *i != r.input)
                .map(|(_, (_, s))| *s)
                .collect();
            let binders: Vec<(Binder, Side)> = nbs
                .into_iter()
                .enumerate()
                .map(|(i, b)| (b, old_binders.get(i).copied().unwrap_or(iside)))
                .collect();
            let nodes: Vec<(Process, Side)> = nns
                .into_iter()
                .enumerate()
                .map(|(i, n)| (n, if i < first_new { old_nodes[i] } else { iside }))
                .collect();
            if let Ok(next) = self.rebuild(binders, nodes, &self.gamma) {
                out.push(NetworkStep {
                    class,
                    kind: r.kind,
                    x: r.x,
                    y: r.y,
                    label: r.label,
                    next,
                });
            }
        }
        out
    }

    pub fn is_terminal(&self) -> bool {
        self.unobservable_steps().is_empty()
    }

    /// All terminal networks reachable by unobservable steps, up to renaming,
    /// each with the first trace found (breadth first).
    pub fn exhaust_unobservable(&self) -> Vec<Reached> {
        let mut seen: BTreeSet<String> = BTreeSet::from([self.key.clone()]);
        let mut queue: VecDeque<(Network, Vec<String>)> = VecDeque::from([(self.clone(), Vec::new())]);
        let mut out = Vec::new();
        while let Some((n, trace)) = queue.pop_front() {
            let steps = n.unobservable_steps();
            if steps.is_empty() {
                out.push(Reached { network: n, trace });
                continue;
            }
            for s in steps {
                if seen.insert(s.next.key.clone()) {
                    let mut t = trace.clone();
                    t.push(s.line());
                    queue.push_back((s.next, t));
                }
            }
        }
        out.sort_by(|a, b| a.network.key.cmp(&b.network.key));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_process;

    fn pp(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn ctx(s: &str) -> EvalContext {
        EvalContext::from_marked(&pp(s)).unwrap()
    }

    fn l(s: &str) -> Level {
        Level::new(s)
    }

    fn gov_h() -> Process {
        pp("aL?(aL1){ \
              oc1: new (aI1' : end? [H]) aI1 . (aI!act(aI1') | wait aL1; close aI1), \
              oc2: new (aI1' : end? [H]) aI1 . (aI!wait(aI1') | wait aL1; close aI1) }")
    }

    fn secure_ctx() -> EvalContext {
        ctx("new (aH : +{ oc1: end!, oc2: end! } [L]) aL . \
             new (aI : +{ act: end!, wait: end! } [H]) iA . \
             (new (aH1' : end? [L]) aH1 . (aH!oc2(aH1') | close aH1) | hole | \
              iA?(iA1){ act: wait iA1; 0, wait: wait iA1; 0 })")
    }

    #[test]
    fn secure_network_interface() {
        let o = SecrecyLattice::two_point();
        let n = Network::new(&o, &l("L"), &secure_ctx(), &gov_h()).unwrap();
        assert_eq!(n.gamma().names().map(|x| x.as_str()).collect::<Vec<_>>(), vec!["aL"]);
        assert_eq!(n.full_interface().unwrap().len(), 2);
        assert!(struct_congruent(&n.plugged(), &secure_ctx().plug(&gov_h())));
        // the selection on aH crosses into the process on aL, which is observable
        assert!(n.is_terminal());
        let n = Network::new(&o, &l("H"), &secure_ctx(), &gov_h()).unwrap();
        assert_eq!(n.gamma().len(), 2);
    }

    #[test]
    fn unobservable_cross_step() {
        // split at Gov^L instead: the step on aH crosses on an H-level name
        let o = SecrecyLattice::two_point();
        let e = ctx("new (aH : +{ oc1: end!, oc2: end! } [L]) aL . \
                     new (aI : +{ act: end!, wait: end! } [H]) iA . \
                     (hole | GOV | iA?(iA1){ act: wait iA1; 0, wait: wait iA1; 0 })"
            .replace("GOV", &gov_h().to_string())
            .as_str());
        let p = pp("new (aH1' : end? [L]) aH1 . (aH!oc2(aH1') | close aH1)");
        // aH is at L: observable, so its selection is excluded at L
        let n = Network::new(&o, &l("L"), &e, &p).unwrap();
        assert!(n.gamma().contains(&Name::new("aH")));
        assert!(n.unobservable_steps().is_empty());
        // at a lattice where L is not below the observer... use H-only names
        let e2 = ctx("new (x : end! [H]) y . (hole | wait y; 0)");
        let n2 = Network::new(&o, &l("L"), &e2, &Process::close("x")).unwrap();
        assert!(n2.gamma().is_empty());
        let steps = n2.unobservable_steps();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].class, StepClass::CrossInterface);
        assert_eq!(steps[0].line(), "STEP close-wait (x,y)");
        assert!(steps[0].next.plugged() == Process::Inaction || steps[0].next.nodes().is_empty());
    }

    #[test]
    fn context_internal_step() {
        let o = SecrecyLattice::two_point();
        let e = ctx("new (u : end! [L]) v . new (x : end! [L]) y . (close u | wait v; 0 | hole | wait y; 0)");
        let n = Network::new(&o, &l("L"), &e, &Process::close("x")).unwrap();
        let steps = n.unobservable_steps();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].class, StepClass::ContextInternal);
        assert!(struct_congruent(&steps[0].next.proc(), &Process::close("x")));
        assert_eq!(n.exhaust_unobservable().len(), 1);
    }

    #[test]
    fn exhaust_pipeline_and_diamond() {
        let o = SecrecyLattice::two_point();
        let e = ctx("hole");
        let chain = pp("new (a : end! [L]) b . new (c : end! [L]) d . (close a | wait b; close c | wait d; 0)");
        let n = Network::new(&o, &l("L"), &e, &chain).unwrap();
        let t = n.exhaust_unobservable();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].trace.len(), 2);
        assert!(t[0].network.nodes().is_empty());
        let diamond = pp("new (a : end! [L]) b . new (c : end! [L]) d . (close a | wait b; 0 | close c | wait d; 0)");
        let n = Network::new(&o, &l("L"), &e, &diamond).unwrap();
        assert_eq!(n.exhaust_unobservable().len(), 1);
    }

    #[test]
    fn acon_and_ain() {
        let o = SecrecyLattice::two_point();
        let e = ctx("new (x : end! [L]) y . new (u : end! [L]) v . (hole | close u)");
        let p = pp("close x | wait y; wait v; 0");
        let n = Network::new(&o, &l("L"), &e, &p).unwrap();
        assert_eq!(n.context_active_outputs(), BTreeSet::from([Name::new("v")]));
        assert_eq!(n.active_interface_names(), BTreeSet::from([Name::new("x"), Name::new("v")]));
    }

    #[test]
    fn rejects_open_contexts() {
        let o = SecrecyLattice::two_point();
        assert!(matches!(
            Network::new(&o, &l("L"), &EvalContext::Hole, &Process::close("x")),
            Err(NetworkError::Unbound(_))
        ));
        assert!(matches!(
            Network::new(&o, &l("Q"), &EvalContext::Hole, &Process::Inaction),
            Err(NetworkError::UnknownLevel(_))
        ));
    }
}
