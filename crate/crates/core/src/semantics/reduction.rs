//! Reduction: redex discovery on normal forms and one-step reducts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::semantics::context::EvalContext;
use crate::semantics::normal_form::{flatten_into, normal_form, wrap, Binder, NormalForm};
use crate::syntax::{Label, Name, Process};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RedexKind {
    #[serde(rename = "close-wait")]
    CloseWait,
    #[serde(rename = "send-recv")]
    SendRecv,
    #[serde(rename = "sel-bra")]
    SelBra,
}

impl fmt::Display for RedexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RedexKind::CloseWait => "close-wait",
            RedexKind::SendRecv => "send-recv",
            RedexKind::SelBra => "sel-bra",
        })
    }
}

/// A redex located in a flat binder/node structure.
#[derive(Debug, Clone)]
pub struct FlatRedex {
    pub kind: RedexKind,
    pub binder: usize,
    pub output: usize,
    pub input: usize,
    /// Output endpoint, input endpoint.
    pub x: Name,
    pub y: Name,
    pub label: Option<Label>,
    pub contractum: Process,
}

/// The contractum of an output node meeting an input node, if they match.
pub fn contract(out: &Process, inp: &Process) -> Option<(RedexKind, Option<Label>, Process)> {
    match (out, inp) {
        (Process::Close(_), Process::Wait(_, q)) => Some((RedexKind::CloseWait, None, (**q).clone())),
        (Process::Select { cont, label, .. }, Process::Branch { z, arms, .. }) => {
            let q = arms.get(label)?;
            Some((RedexKind::SelBra, Some(label.clone()), q.substitute(cont, z)))
        }
        (Process::Send { payload, cont, .. }, Process::Recv { y, z, body, .. }) => {
            let map = BTreeMap::from([(y.clone(), payload.clone()), (z.clone(), cont.clone())]);
            Some((RedexKind::SendRecv, None, body.rename(&map)))
        }
        _ => None,
    }
}

/// All redexes: a binder joining a ready output on one endpoint with a
/// matching input on the other.
pub fn flat_redexes(binders: &[Binder], nodes: &[Process]) -> Vec<FlatRedex> {
    let mut out = Vec::new();
    for (bi, b) in binders.iter().enumerate() {
        for (x, y) in [(&b.x, &b.y), (&b.y, &b.x)] {
            for (oi, o) in nodes.iter().enumerate() {
                if !o.is_output() || o.subject() != Some(x) {
                    continue;
                }
                for (ii, i) in nodes.iter().enumerate() {
                    if !i.is_input() || i.subject() != Some(y) {
                        continue;
                    }
                    if let Some((kind, label, contractum)) = contract(o, i) {
                        out.push(FlatRedex {
                            kind,
                            binder: bi,
                            output: oi,
                            input: ii,
                            x: x.clone(),
                            y: y.clone(),
                            label,
                            contractum,
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RedexReport {
    pub kind: RedexKind,
    pub x: Name,
    pub y: Name,
    pub label: Option<Label>,
    /// Everything but the redex.
    pub context: EvalContext,
    /// `ν(x y)(output | input)`
    pub redex: Process,
    pub contractum: Process,
    pub reduct: Process,
}

impl RedexReport {
    /// `STEP kind (x,y) [label]`
    pub fn step_line(&self) -> String {
        let mut s = format!("STEP {} ({},{})", self.kind, self.x, self.y);
        if let Some(l) = &self.label {
            s.push_str(&format!(" [{l}]"));
        }
        s
    }
}

/// Applies a flat redex: drops the binder and the two nodes and splices in
/// the contractum, freshening its binders against `taken`.
pub fn apply_flat(
    binders: &[Binder],
    nodes: &[Process],
    r: &FlatRedex,
    taken: &mut BTreeSet<Name>,
) -> (Vec<Binder>, Vec<Process>, usize) {
    let mut bs: Vec<Binder> = binders
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != r.binder)
        .map(|(_, b)| b.clone())
        .collect();
    let mut ns: Vec<Process> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != r.output && *i != r.input)
        .map(|(_, n)| n.clone())
        .collect();
    let first_new = ns.len();
    flatten_into(&r.contractum, taken, &mut bs, &mut ns);
    (bs, ns, first_new)
}

fn all_names(binders: &[Binder], nodes: &[Process]) -> BTreeSet<Name> {
    let mut s = BTreeSet::new();
    for b in binders {
        s.insert(b.x.clone());
        s.insert(b.y.clone());
    }
    for n in nodes {
        s.extend(n.all_names());
    }
    s
}

fn ordered_redexes(p: &Process) -> (NormalForm, Vec<FlatRedex>) {
    let nf = normal_form(p).canonical();
    let mut rs = flat_redexes(&nf.binders, &nf.nodes);
    rs.sort_by_key(|r| (r.kind, r.binder, r.output, r.input));
    (nf, rs)
}

/// Every redex of `p`, close-wait first, then send-recv, then sel-bra.
pub fn enumerate_redexes(p: &Process) -> Vec<RedexReport> {
    let (nf, rs) = ordered_redexes(p);
    rs.into_iter()
        .map(|r| {
            let rest_binders: Vec<Binder> = nf
                .binders
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != r.binder)
                .map(|(_, b)| b.clone())
                .collect();
            let rest_nodes: Vec<Process> = nf
                .nodes
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != r.output && *i != r.input)
                .map(|(_, n)| n.clone())
                .collect();
            let mut ctx = EvalContext::Hole;
            if !rest_nodes.is_empty() {
                ctx = EvalContext::ParR(Process::par_all(rest_nodes), Box::new(ctx));
            }
            for b in rest_binders.iter().rev() {
                ctx = EvalContext::Res {
                    x: b.x.clone(),
                    y: b.y.clone(),
                    ty: b.ty.clone(),
                    level: b.level.clone(),
                    body: Box::new(ctx),
                };
            }
            let bd = &nf.binders[r.binder];
            let redex = wrap(
                std::slice::from_ref(bd),
                Process::par(nf.nodes[r.output].clone(), nf.nodes[r.input].clone()),
            );
            let mut taken = all_names(&nf.binders, &nf.nodes);
            let (bs, ns, _) = apply_flat(&nf.binders, &nf.nodes, &r, &mut taken);
            let reduct = NormalForm { binders: bs, nodes: ns }.canonical().to_process();
            RedexReport {
                kind: r.kind,
                x: r.x,
                y: r.y,
                label: r.label,
                context: ctx,
                redex,
                contractum: r.contractum,
                reduct,
            }
        })
        .collect()
}

/// One-step reducts of `p`, deduplicated up to structural congruence, in
/// redex order.
pub fn reduce_all(p: &Process) -> Vec<Process> {
    let mut seen = BTreeSet::new();
    enumerate_redexes(p)
        .into_iter()
        .filter_map(|r| {
            let k = crate::semantics::normal_form::congruence_key(&r.reduct);
            seen.insert(k).then_some(r.reduct)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    /// Reduces to (a process congruent to) `0`.
    Finished,
    Deadlocked,
}

pub fn classify_terminal(p: &Process) -> Terminal {
    let nf = normal_form(p);
    if nf.nodes.is_empty() {
        Terminal::Finished
    } else {
        Terminal::Deadlocked
    }
}

/// A reachable state with the step that first reached it.
#[derive(Debug, Clone)]
pub struct ReachedState {
    pub process: Process,
    pub via: Option<(usize, String)>,
    pub terminal: Option<Terminal>,
}

/// Breadth-first exploration of all reachable states up to congruence.
pub fn explore_states(p: &Process) -> Vec<ReachedState> {
    let mut out = vec![ReachedState {
        process: canonical_of(p),
        via: None,
        terminal: None,
    }];
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    index.insert(crate::semantics::normal_form::congruence_key(p), 0);
    let mut i = 0;
    while i < out.len() {
        let reds = enumerate_redexes(&out[i].process);
        if reds.is_empty() {
            out[i].terminal = Some(classify_terminal(&out[i].process));
        }
        for r in reds {
            let k = crate::semantics::normal_form::congruence_key(&r.reduct);
            if let std::collections::btree_map::Entry::Vacant(e) = index.entry(k) {
                e.insert(out.len());
                out.push(ReachedState {
                    process: r.reduct.clone(),
                    via: Some((i, r.step_line())),
                    terminal: None,
                });
            }
        }
        i += 1;
    }
    out
}

fn canonical_of(p: &Process) -> Process {
    crate::semantics::normal_form::canonical_process(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::normal_form::struct_congruent;
    use crate::surface::parse_process;

    fn pp(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    #[test]
    fn close_wait_redex() {
        let p = pp("new (x : end! [L]) y . (close x | wait y; close u)");
        let rs = enumerate_redexes(&p);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].kind, RedexKind::CloseWait);
        assert!(struct_congruent(&rs[0].reduct, &Process::close("u")));
        assert!(struct_congruent(&rs[0].context.plug(&rs[0].redex), &p));
        assert!(struct_congruent(&rs[0].context.plug(&rs[0].contractum), &rs[0].reduct));
    }

    #[test]
    fn deadlocked_cycle_has_no_redex() {
        let p = pp("new (x : end? [L]) y . new (z : end! [L]) w . (wait x; close z | wait w; close y)");
        assert!(enumerate_redexes(&p).is_empty());
        assert!(reduce_all(&p).is_empty());
        assert_eq!(classify_terminal(&p), Terminal::Deadlocked);
    }

    #[test]
    fn label_mismatch_is_stuck() {
        let p = pp("new (x : +{ a: end! } [L]) y . (x!b(c) | y?(z){ a: wait z; 0 })");
        assert!(enumerate_redexes(&p).is_empty());
    }

    #[test]
    fn two_independent_redexes() {
        let p = pp(
            "new (x : end! [L]) y . new (u : end! [L]) v . (close x | wait y; 0 | close u | wait v; 0)",
        );
        let rs = reduce_all(&p);
        assert_eq!(rs.len(), 1, "the two reducts are congruent up to renaming");
        let p = pp(
            "new (x : end! [L]) y . new (u : end! [L]) v . (close x | wait y; close a | close u | wait v; 0)",
        );
        assert_eq!(reduce_all(&p).len(), 2);
    }

    #[test]
    fn send_recv_substitutes_simultaneously() {
        let p = pp(
            "new (x : end? * end! [L]) y . (send x(a, b) | recv y(b, a); (close b | wait a; 0))",
        );
        let rs = reduce_all(&p);
        assert_eq!(rs.len(), 1);
        assert!(struct_congruent(&rs[0], &pp("close a | wait b; 0")));
    }

    #[test]
    fn selection_passes_continuation() {
        let p = pp("new (x : +{ l: end! } [L]) y . (x!l(c) | y?(z){ l: wait z; 0 })");
        let rs = reduce_all(&p);
        assert!(struct_congruent(&rs[0], &pp("wait c; 0")));
    }

    #[test]
    fn explore_classifies() {
        let p = pp("new (x : end! [L]) y . (close x | wait y; 0)");
        let states = explore_states(&p);
        assert_eq!(states.len(), 2);
        assert_eq!(states[1].terminal, Some(Terminal::Finished));
    }
}
