//! The term and value interpretations of the logical relation, decided on
//! finite networks.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::semantics::network::{print_gamma, Network, Reached, Side};
use crate::semantics::normal_form::Binder;
use crate::syntax::{fresh_name, Label, Name, Process};
use crate::types::{Binding, SessionType, TypingContext};

/// Outcome of a relation query. On failure it names the clause that failed,
/// the interface name involved, and the terminal networks exhibiting it.
#[derive(Debug, Clone, Serialize)]
pub struct RelationVerdict {
    pub related: bool,
    pub failed_clause: Option<String>,
    pub interface_name: Option<Name>,
    /// Unobservable steps of the unmatched left run, outermost call first.
    pub witness_trace: Vec<String>,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub(crate) replay: Option<Box<Replay>>,
}

/// The pair of networks on which a clause failed, printed.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub gamma: String,
    pub left: String,
    pub right: String,
    pub right_trace: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct Replay {
    pub left: Network,
    pub right: Network,
}

impl RelationVerdict {
    pub fn related() -> Self {
        RelationVerdict {
            related: true,
            failed_clause: None,
            interface_name: None,
            witness_trace: Vec::new(),
            witness: None,
            notes: Vec::new(),
            replay: None,
        }
    }

    fn failed(clause: &str, x: Option<&Name>, left: &Network, right: &Network) -> Self {
        RelationVerdict {
            related: false,
            failed_clause: Some(clause.to_string()),
            interface_name: x.cloned(),
            witness_trace: Vec::new(),
            witness: Some(Witness {
                gamma: print_gamma(left.gamma()),
                left: left.display_pair(),
                right: right.display_pair(),
                right_trace: Vec::new(),
            }),
            notes: Vec::new(),
            replay: Some(Box::new(Replay {
                left: left.clone(),
                right: right.clone(),
            })),
        }
    }

    pub(crate) fn note(mut self, n: impl Into<String>) -> Self {
        let n = n.into();
        if !self.notes.contains(&n) {
            self.notes.push(n);
        }
        self
    }

    pub(crate) fn absorb_notes(&mut self, other: &RelationVerdict) {
        for n in &other.notes {
            if !self.notes.contains(n) {
                self.notes.push(n.clone());
            }
        }
    }

    /// Re-runs the failed clause on the witness pair; true when it fails
    /// again. Related verdicts have nothing to replay.
    pub fn replay(&self) -> bool {
        let (Some(r), Some(clause)) = (&self.replay, &self.failed_clause) else {
            return false;
        };
        let mut rel = Relator::new();
        match clause.as_str() {
            "term2" => r.left.gamma() != r.right.gamma() || r.left.observer() != r.right.observer(),
            "term4-aon" => aon_clause(&r.left, &r.right).is_some(),
            "term3" => rel.term_related(&r.left, &r.right).failed_clause.is_some(),
            _ => match &self.interface_name {
                Some(x) => !rel.value_related(&r.left, &r.right, x).related,
                None => false,
            },
        }
    }
}

/// The first name of `Γ` that is a ready output in exactly one process.
fn aon_clause(t1: &Network, t2: &Network) -> Option<Name> {
    let dom: BTreeSet<Name> = t1.gamma().names().cloned().collect();
    let a1: BTreeSet<Name> = t1.proc_active_outputs().intersection(&dom).cloned().collect();
    let a2: BTreeSet<Name> = t2.proc_active_outputs().intersection(&dom).cloned().collect();
    a1.symmetric_difference(&a2).next().cloned()
}

const TENSOR_EQ_NOTE: &str =
    "tensor clause with payload and continuation in the interface: compared a1 = a2 and b1 = b2";
const TENSOR_TYPE_NOTE: &str =
    "tensor clause with the payload outside the interface: the payload mate is typed with the payload type";

/// Decision procedure for the term and value interpretations, memoized on
/// canonical network pairs.
#[derive(Default)]
pub struct Relator {
    memo: BTreeMap<(String, String), RelationVerdict>,
    exhausted: BTreeMap<String, Vec<Reached>>,
}

impl Relator {
    pub fn new() -> Self {
        Relator::default()
    }

    fn exhaust(&mut self, n: &Network) -> Vec<Reached> {
        if let Some(r) = self.exhausted.get(n.key()) {
            return r.clone();
        }
        let r = n.exhaust_unobservable();
        self.exhausted.insert(n.key().to_string(), r.clone());
        r
    }

    /// Term interpretation: every terminal unobservable run of `n1` is
    /// matched by one of `n2`.
    pub fn term_related(&mut self, n1: &Network, n2: &Network) -> RelationVerdict {
        let memo_key = (n1.key().to_string(), n2.key().to_string());
        if let Some(v) = self.memo.get(&memo_key) {
            return v.clone();
        }
        let v = self.term_uncached(n1, n2);
        self.memo.insert(memo_key, v.clone());
        v
    }

    fn term_uncached(&mut self, n1: &Network, n2: &Network) -> RelationVerdict {
        if n1.gamma() != n2.gamma() || n1.observer() != n2.observer() {
            return RelationVerdict::failed("term2", None, n1, n2);
        }
        let t1s = self.exhaust(n1);
        let t2s = self.exhaust(n2);
        let mut notes = RelationVerdict::related();
        for t1 in &t1s {
            let mut first_failure: Option<RelationVerdict> = None;
            let mut matched = false;
            for t2 in &t2s {
                let v = self.terminal_pair(&t1.network, &t2.network);
                if v.related {
                    notes.absorb_notes(&v);
                    matched = true;
                    break;
                }
                if first_failure.is_none() {
                    let mut v = v;
                    if let Some(w) = v.witness.as_mut() {
                        if w.right_trace.is_empty() {
                            w.right_trace = t2.trace.clone();
                        }
                    }
                    first_failure = Some(v);
                }
            }
            if !matched {
                let mut v = first_failure.unwrap_or_else(|| RelationVerdict::failed("term3", None, &t1.network, n2));
                let mut trace = t1.trace.clone();
                trace.append(&mut v.witness_trace);
                v.witness_trace = trace;
                return v;
            }
        }
        notes
    }

    /// Clause (b) then clause (a) of the catch-up condition on a pair of
    /// terminal networks.
    fn terminal_pair(&mut self, t1: &Network, t2: &Network) -> RelationVerdict {
        if let Some(x) = aon_clause(t1, t2) {
            return RelationVerdict::failed("term4-aon", Some(&x), t1, t2);
        }
        let dom: BTreeSet<Name> = t1.gamma().names().cloned().collect();
        let mut names: BTreeSet<Name> = t1.active_interface_names();
        names.extend(t2.active_interface_names());
        let mut out = RelationVerdict::related();
        for x in names.intersection(&dom) {
            let v = self.value_related(t1, t2, x);
            if !v.related {
                return v;
            }
            out.absorb_notes(&v);
        }
        out
    }

    /// Value interpretation at `x ∈ dom(Γ)`.
    pub fn value_related(&mut self, n1: &Network, n2: &Network, x: &Name) -> RelationVerdict {
        let Some(binding) = n1.gamma().get(x).cloned() else {
            return RelationVerdict::failed("value-precondition", Some(x), n1, n2).note(format!("`{x}` is not in the interface"));
        };
        if n1.gamma() != n2.gamma() {
            return RelationVerdict::failed("term2", Some(x), n1, n2);
        }
        match &binding.ty {
            SessionType::One => self.value_one(n1, n2, x),
            SessionType::Plus(arms) => self.value_plus(n1, n2, x, &binding, arms),
            SessionType::Tensor(a, b) => self.value_tensor(n1, n2, x, &binding, a, b),
            SessionType::Bot | SessionType::With(_) | SessionType::Par(..) => self.value_input(n1, n2, x, &binding),
        }
    }

    /// Recurses into the term interpretation at a smaller interface.
    fn descend(&mut self, from: &TypingContext, m1: Network, m2: Network) -> RelationVerdict {
        assert!(
            m1.gamma().weight() < from.weight(),
            "interface weight must decrease: {} -> {}",
            from.weight(),
            m1.gamma().weight()
        );
        self.term_related(&m1, &m2)
    }

    fn rebuild_pair(
        &mut self,
        n1: &Network,
        n2: &Network,
        x: &Name,
        clause: &str,
        parts: [(Vec<(Binder, Side)>, Vec<(Process, Side)>); 2],
        expected: &TypingContext,
    ) -> Result<(Network, Network), RelationVerdict> {
        let [(b1, p1), (b2, p2)] = parts;
        let m1 = n1.rebuild(b1, p1, expected);
        let m2 = n2.rebuild(b2, p2, expected);
        match (m1, m2) {
            (Ok(m1), Ok(m2)) => Ok((m1, m2)),
            (Err(e), _) | (_, Err(e)) => {
                Err(RelationVerdict::failed(clause, Some(x), n1, n2).note(format!("moved networks are not networks: {e}")))
            }
        }
    }

    fn value_one(&mut self, n1: &Network, n2: &Network, x: &Name) -> RelationVerdict {
        let close = Process::Close(x.clone());
        let (Some(i1), Some(i2)) = (proc_node(n1, |p| p == &close), proc_node(n2, |p| p == &close)) else {
            return RelationVerdict::failed("val-1", Some(x), n1, n2);
        };
        let mut g = n1.gamma().clone();
        g.remove(x);
        let parts = [move_node(n1, i1, Side::Ctx), move_node(n2, i2, Side::Ctx)];
        match self.rebuild_pair(n1, n2, x, "val-1", parts, &g) {
            Ok((m1, m2)) => self.descend(n1.gamma(), m1, m2),
            Err(v) => v,
        }
    }

    fn value_plus(
        &mut self,
        n1: &Network,
        n2: &Network,
        x: &Name,
        binding: &Binding,
        arms: &BTreeMap<Label, SessionType>,
    ) -> RelationVerdict {
        let sel = |p: &Process| matches!(p, Process::Select { x: s, .. } if s == x);
        let (Some(i1), Some(i2)) = (proc_node(n1, sel), proc_node(n2, sel)) else {
            return RelationVerdict::failed("oplus3", Some(x), n1, n2);
        };
        let (Process::Select { cont: b1, label: j1, .. }, Process::Select { cont: b2, label: j2, .. }) =
            (&n1.nodes()[i1].0, &n2.nodes()[i2].0)
        else {
            unreachable!()
        };
        if j1 != j2 {
            return RelationVerdict::failed("oplus3", Some(x), n1, n2)
                .note(format!("selections on `{x}` carry different labels `{j1}` and `{j2}`"));
        }
        let gamma = n1.gamma();
        let mut g = gamma.clone();
        g.remove(x);
        if gamma.contains(b1) {
            if b1 != b2 {
                return RelationVerdict::failed("oplus4", Some(x), n1, n2);
            }
            g.remove(b1);
            let parts = [move_node(n1, i1, Side::Ctx), move_node(n2, i2, Side::Ctx)];
            return match self.rebuild_pair(n1, n2, x, "oplus4", parts, &g) {
                Ok((m1, m2)) => self.descend(gamma, m1, m2),
                Err(v) => v,
            };
        }
        if gamma.contains(b2) {
            return RelationVerdict::failed("oplus5", Some(x), n1, n2);
        }
        let (Some(m1), Some(m2)) = (proc_mate(n1, b1), proc_mate(n2, b2)) else {
            return RelationVerdict::failed("oplus5", Some(x), n1, n2)
                .note(format!("continuation of the selection on `{x}` is not restricted in the process"));
        };
        let fresh = shared_fresh(n1, n2, &m1);
        let a_j = arms.get(j1).cloned().expect("label checked by typing");
        g.insert(fresh.clone(), Binding::new(a_j, binding.level.clone())).expect("fresh");
        let r1 = rename_network(n1, &[(m1, fresh.clone())]);
        let r2 = rename_network(n2, &[(m2, fresh.clone())]);
        let parts = [move_in(r1, i1, Side::Ctx), move_in(r2, i2, Side::Ctx)];
        match self.rebuild_pair(n1, n2, x, "oplus5", parts, &g) {
            Ok((m1, m2)) => self.descend(gamma, m1, m2),
            Err(v) => v,
        }
    }

    fn value_tensor(
        &mut self,
        n1: &Network,
        n2: &Network,
        x: &Name,
        binding: &Binding,
        a: &SessionType,
        b: &SessionType,
    ) -> RelationVerdict {
        let send = |p: &Process| matches!(p, Process::Send { x: s, .. } if s == x);
        let (Some(i1), Some(i2)) = (proc_node(n1, send), proc_node(n2, send)) else {
            return RelationVerdict::failed("tensor2", Some(x), n1, n2);
        };
        let (Process::Send { payload: a1, cont: b1, .. }, Process::Send { payload: a2, cont: b2, .. }) =
            (&n1.nodes()[i1].0, &n2.nodes()[i2].0)
        else {
            unreachable!()
        };
        let gamma = n1.gamma();
        let (a_in, b_in) = (gamma.contains(a1), gamma.contains(b1));
        let clause = match (a_in, b_in) {
            (true, true) => "tensor3",
            (true, false) => "tensor4",
            (false, true) => "tensor5",
            (false, false) => "tensor6",
        };
        // names in the interface must coincide; the others must not be in it
        let ok_a = if a_in { a1 == a2 } else { !gamma.contains(a2) };
        let ok_b = if b_in { b1 == b2 } else { !gamma.contains(b2) };
        let mut note = None;
        if clause == "tensor3" {
            note = Some(TENSOR_EQ_NOTE);
        } else if clause == "tensor5" {
            note = Some(TENSOR_TYPE_NOTE);
        }
        let with_note = |v: RelationVerdict| match note {
            Some(n) => v.note(n),
            None => v,
        };
        if !ok_a || !ok_b {
            return with_note(RelationVerdict::failed(clause, Some(x), n1, n2));
        }
        let mut g = gamma.clone();
        g.remove(x);
        let mut renames1 = Vec::new();
        let mut renames2 = Vec::new();
        let mut avoid = n1.all_names();
        avoid.extend(n2.all_names());
        for (inside, p1, p2, ty) in [(a_in, a1, a2, a), (b_in, b1, b2, b)] {
            if inside {
                g.remove(p1);
                continue;
            }
            let (Some(m1), Some(m2)) = (proc_mate(n1, p1), proc_mate(n2, p2)) else {
                return with_note(RelationVerdict::failed(clause, Some(x), n1, n2))
                    .note(format!("a name sent on `{x}` is not restricted in the process"));
            };
            let fresh = fresh_name(&m1, &avoid);
            avoid.insert(fresh.clone());
            g.insert(fresh.clone(), Binding::new(ty.clone(), binding.level.clone())).expect("fresh");
            renames1.push((m1, fresh.clone()));
            renames2.push((m2, fresh));
        }
        let r1 = rename_network(n1, &renames1);
        let r2 = rename_network(n2, &renames2);
        let parts = [move_in(r1, i1, Side::Ctx), move_in(r2, i2, Side::Ctx)];
        let v = match self.rebuild_pair(n1, n2, x, clause, parts, &g) {
            Ok((m1, m2)) => self.descend(gamma, m1, m2),
            Err(v) => v,
        };
        with_note(v)
    }

    /// `⊥`, `&`, `⅋`: when both contexts are ready to output on the mate of
    /// `x`, that output and its restriction move into the processes.
    fn value_input(&mut self, n1: &Network, n2: &Network, x: &Name, binding: &Binding) -> RelationVerdict {
        let (Some(d1), Some(d2)) = (ctx_ready(n1, x), ctx_ready(n2, x)) else {
            return RelationVerdict::related().note(format!(
                "input case on `{x}`: a context is not ready to output, so the clause holds vacuously"
            ));
        };
        let (o1, o2) = (&n1.nodes()[d1.1].0, &n2.nodes()[d2.1].0);
        let gamma = n1.gamma();
        let mut g = gamma.clone();
        g.remove(x);
        let mut carried: Vec<(Name, Name, SessionType)> = Vec::new();
        match (&binding.ty, o1, o2) {
            (SessionType::Bot, Process::Close(_), Process::Close(_)) => {}
            (SessionType::With(arms), Process::Select { cont: b1, label: j1, .. }, Process::Select { cont: b2, label: j2, .. }) => {
                if j1 != j2 {
                    return RelationVerdict::related().note(format!(
                        "input case on `{x}`: the contexts select different labels, so the clause holds vacuously"
                    ));
                }
                carried.push((b1.clone(), b2.clone(), arms.get(j1).cloned().expect("typed label")));
            }
            (SessionType::Par(a, b), Process::Send { payload: a1, cont: b1, .. }, Process::Send { payload: a2, cont: b2, .. }) => {
                carried.push((a1.clone(), a2.clone(), (**a).clone()));
                carried.push((b1.clone(), b2.clone(), (**b).clone()));
            }
            _ => {
                return RelationVerdict::failed("value-shape", Some(x), n1, n2)
                    .note(format!("context output on the mate of `{x}` does not match its type"));
            }
        }
        let mut avoid = n1.all_names();
        avoid.extend(n2.all_names());
        let mut renames1 = Vec::new();
        let mut renames2 = Vec::new();
        for (c1, c2, ty) in carried {
            let fresh = fresh_name(&c1, &avoid);
            avoid.insert(fresh.clone());
            g.insert(fresh.clone(), Binding::new(ty, binding.level.clone())).expect("fresh");
            renames1.push((c1, fresh.clone()));
            renames2.push((c2, fresh));
        }
        let r1 = rename_network(n1, &renames1);
        let r2 = rename_network(n2, &renames2);
        let parts = [move_binder_and_node(r1, d1), move_binder_and_node(r2, d2)];
        let clause = match binding.ty {
            SessionType::Bot => "val-bot",
            SessionType::With(_) => "with4",
            _ => "par",
        };
        match self.rebuild_pair(n1, n2, x, clause, parts, &g) {
            Ok((m1, m2)) => self.descend(gamma, m1, m2),
            Err(v) => v,
        }
    }
}

type Parts = (Vec<(Binder, Side)>, Vec<(Process, Side)>);

fn proc_node(n: &Network, f: impl Fn(&Process) -> bool) -> Option<usize> {
    n.nodes().iter().position(|(p, s)| *s == Side::Proc && f(p))
}

/// The mate of `b` under a process-side restriction.
fn proc_mate(n: &Network, b: &Name) -> Option<Name> {
    n.binders()
        .iter()
        .find(|(bd, s)| *s == Side::Proc && bd.has(b))
        .and_then(|(bd, _)| bd.mate(b).cloned())
}

/// A context-side restriction `ν(y x)` whose `y` is the subject of a ready
/// context output: (binder index, node index).
fn ctx_ready(n: &Network, x: &Name) -> Option<(usize, usize)> {
    let (bi, (bd, _)) = n.binders().iter().enumerate().find(|(_, (b, s))| *s == Side::Ctx && b.has(x))?;
    let y = bd.mate(x)?;
    let ni = n
        .nodes()
        .iter()
        .position(|(p, s)| *s == Side::Ctx && p.is_output() && p.subject() == Some(y))?;
    Some((bi, ni))
}

fn shared_fresh(n1: &Network, n2: &Network, base: &Name) -> Name {
    let mut avoid = n1.all_names();
    avoid.extend(n2.all_names());
    fresh_name(base, &avoid)
}

fn rename_network(n: &Network, pairs: &[(Name, Name)]) -> Parts {
    let map: BTreeMap<Name, Name> = pairs.iter().filter(|(a, b)| a != b).cloned().collect();
    n.renamed_parts(&map)
}

fn move_node(n: &Network, i: usize, to: Side) -> Parts {
    move_in((n.binders().to_vec(), n.nodes().to_vec()), i, to)
}

fn move_in(parts: Parts, i: usize, to: Side) -> Parts {
    let (b, mut p) = parts;
    p[i].1 = to;
    (b, p)
}

fn move_binder_and_node(parts: Parts, (bi, ni): (usize, usize)) -> Parts {
    let (mut b, mut p) = parts;
    b[bi].1 = Side::Proc;
    p[ni].1 = Side::Proc;
    (b, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::Discipline;
    use crate::lattice::{Level, SecrecyLattice};
    use crate::semantics::context::EvalContext;
    use crate::surface::parse_process;

    fn pp(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn net_with(e: &str, p: &str, d: Discipline) -> Network {
        let e = EvalContext::from_marked(&pp(e)).unwrap();
        Network::new_with(&SecrecyLattice::two_point(), &Level::new("L"), &e, &pp(p), d).unwrap()
    }

    fn net(e: &str, p: &str) -> Network {
        net_with(e, p, Discipline::Secure)
    }

    #[test]
    fn identical_closes_are_related() {
        let n = net("new (x : end! [L]) y . (hole | wait y; 0)", "close x");
        let v = Relator::new().term_related(&n, &n);
        assert!(v.related, "{v:?}");
    }

    #[test]
    fn deadlock_is_distinguished() {
        let s = Discipline::SessionOnly;
        let fires = net_with(
            "new (x : end! [L]) y . new (h : end! [H]) k . (hole | wait y; 0 | close h)",
            "wait k; close x",
            s,
        );
        let stuck = net_with(
            "new (x : end! [L]) y . new (h : end! [H]) k . new (a : end! [H]) b . \
             (hole | wait y; 0 | wait b; (close h | close a))",
            "wait k; close x",
            s,
        );
        let v = Relator::new().term_related(&fires, &stuck);
        assert!(!v.related);
        assert_eq!(v.failed_clause.as_deref(), Some("term4-aon"));
        assert_eq!(v.interface_name, Some(Name::new("x")));
        assert_eq!(v.witness_trace, vec!["STEP close-wait (h,k)"]);
        assert!(v.replay());
        assert!(Relator::new().term_related(&stuck, &stuck).related);
    }

    #[test]
    fn mismatched_interfaces_fail_term2() {
        let n1 = net("new (x : end! [L]) y . (hole | wait y; 0)", "close x");
        let n2 = net("new (x : end! [H]) y . (hole | wait y; 0)", "close x");
        let v = Relator::new().term_related(&n1, &n2);
        assert!(!v.related);
        assert_eq!(v.failed_clause.as_deref(), Some("term2"));
        assert!(v.replay());
    }

    #[test]
    fn different_labels_fail_oplus3() {
        let e = "new (x : +{ a: end!, b: end! } [L]) y . (hole | y?(z){ a: wait z; 0, b: wait z; 0 })";
        let p1 = "new (c : end? [L]) d . (x!a(c) | close d)";
        let p2 = "new (c : end? [L]) d . (x!b(c) | close d)";
        let v = Relator::new().term_related(&net(e, p1), &net(e, p2));
        assert!(!v.related);
        assert_eq!(v.failed_clause.as_deref(), Some("oplus3"));
        assert_eq!(v.interface_name, Some(Name::new("x")));
        assert!(v.replay());
        let v = Relator::new().term_related(&net(e, p1), &net(e, p1));
        assert!(v.related, "{v:?}");
    }

    #[test]
    fn one_sided_context_output_is_vacuous() {
        let s = Discipline::SessionOnly;
        let ready = net_with(
            "new (x : &{ a: end? } [L]) y . new (c : end? [L]) d . new (u : end! [H]) w . \
             (hole | y!a(c) | close d | wait w; close u)",
            "x?(z){ a: wait z; 0 }",
            s,
        );
        let blocked = net_with(
            "new (x : &{ a: end? } [L]) y . new (c : end? [L]) d . new (u : end! [H]) w . \
             (hole | wait w; (y!a(c) | close u) | close d)",
            "x?(z){ a: wait z; 0 }",
            s,
        );
        let v = Relator::new().value_related(&ready, &blocked, &Name::new("x"));
        assert!(v.related);
        assert!(v.notes.iter().any(|n| n.contains("vacuously")));
        // both ready: the select moves into the processes and the run is compared
        let v = Relator::new().value_related(&ready, &ready, &Name::new("x"));
        assert!(v.related, "{v:?}");
    }
}
