//! Canonical keys for flat binder/node structures, used to decide
//! structural congruence and to deduplicate explored states.
//!
//! Bound names are relabelled by a search over node orderings: starting
//! from each minimal node of a connected component, nodes are taken in order
//! of their partially labelled keys, branching on ties, and the least
//! resulting string wins. Continuations under prefixes are keyed
//! recursively, so congruence is decided under prefixes too.

use std::collections::{BTreeMap, BTreeSet};

use crate::lattice::Level;
use crate::semantics::normal_form::{flatten_into, Binder};
use crate::syntax::{Name, Process};
use crate::types::SessionType;

pub(crate) struct KeyNode<'a> {
    pub tag: &'a str,
    pub proc: &'a Process,
}

/// One renameable binder: a restriction pair, or a single anonymous name.
#[derive(Clone, Debug)]
pub(crate) struct KeyBinder {
    pub names: Vec<Name>,
    /// Type and level of `names[0]`.
    pub annot: Option<(SessionType, Level)>,
    pub tag: String,
}

impl KeyBinder {
    pub fn from_binder(b: &Binder) -> Self {
        KeyBinder {
            names: vec![b.x.clone(), b.y.clone()],
            annot: Some((b.ty.clone(), b.level.clone())),
            tag: String::new(),
        }
    }

    pub fn tagged(mut self, tag: &str) -> Self {
        self.tag = tag.to_string();
        self
    }

    pub fn anonymous(n: Name) -> Self {
        KeyBinder {
            names: vec![n],
            annot: None,
            tag: String::new(),
        }
    }

    /// The annotation seen from endpoint `i`.
    fn annot_from(&self, i: usize) -> String {
        match &self.annot {
            None => "_".to_string(),
            Some((t, l)) => {
                let t = if i == 0 { t.clone() } else { t.dual() };
                format!("{t}[{l}]")
            }
        }
    }
}

pub(crate) struct KeyResult {
    pub key: String,
    pub node_order: Vec<usize>,
    pub binder_order: Vec<usize>,
}

#[derive(Clone)]
struct State {
    labels: BTreeMap<Name, String>,
    number: Vec<Option<usize>>,
    /// Endpoint indices of each binder, in encounter order.
    seen: Vec<Vec<usize>>,
    counter: usize,
    used: Vec<bool>,
    order: Vec<usize>,
    pieces: Vec<String>,
}

struct Search<'a> {
    nodes: &'a [KeyNode<'a>],
    binders: &'a [KeyBinder],
    pinned: &'a BTreeSet<Name>,
    depth: usize,
    owner: BTreeMap<Name, (usize, usize)>,
    node_names: Vec<Vec<Name>>,
}

impl Search<'_> {
    fn label(&self, st: &State, b: usize, endpoint: usize) -> String {
        let n = &self.binders[b].names[endpoint];
        if self.pinned.contains(n) {
            return n.to_string();
        }
        if let Some(l) = st.labels.get(n) {
            return l.clone();
        }
        let pos = st.seen[b].iter().position(|&e| e == endpoint).unwrap_or(st.seen[b].len());
        let letter = (b'a' + pos as u8) as char;
        format!("%{}.{}{}", self.depth, st.number[b].unwrap_or(usize::MAX), letter)
    }

    fn partial_key(&self, st: &State, i: usize) -> String {
        let mut map = BTreeMap::new();
        for n in &self.node_names[i] {
            if let Some(&(b, _)) = self.owner.get(n) {
                if self.pinned.contains(n) {
                    continue;
                }
                let l = st.labels.get(n).cloned().unwrap_or_else(|| {
                    if st.number[b].is_some() {
                        format!("?{}", st.number[b].unwrap())
                    } else {
                        "?".to_string()
                    }
                });
                map.insert(n.clone(), Name::new(l));
            }
        }
        format!("{}{}", self.nodes[i].tag, node_key(&self.nodes[i].proc.rename(&map), self.depth))
    }

    /// Bound names of node `i` still without a label.
    fn fresh_names(&self, st: &State, i: usize) -> Vec<Name> {
        self.node_names[i]
            .iter()
            .filter(|n| self.owner.contains_key(*n) && !self.pinned.contains(*n) && !st.labels.contains_key(*n))
            .cloned()
            .collect()
    }

    /// Orders in which the unlabelled names of node `i` may be labelled:
    /// sorted by the node's key with that name marked, permuting within ties.
    fn orderings(&self, st: &State, i: usize) -> Vec<Vec<Name>> {
        let fresh = self.fresh_names(st, i);
        if fresh.len() < 2 {
            return vec![fresh];
        }
        let mut signed: Vec<(String, Name)> = fresh
            .iter()
            .map(|n| {
                let mut map: BTreeMap<Name, Name> =
                    st.labels.iter().map(|(k, v)| (k.clone(), Name::new(v))).collect();
                for m in &fresh {
                    let b = self.owner[m].0;
                    let l = match st.number[b] {
                        Some(k) => format!("?{k}"),
                        None => "?".to_string(),
                    };
                    map.insert(m.clone(), Name::new(if m == n { "!".to_string() } else { l }));
                }
                (node_key(&self.nodes[i].proc.rename(&map), self.depth), n.clone())
            })
            .collect();
        signed.sort();
        let mut groups: Vec<Vec<Name>> = Vec::new();
        let mut last: Option<&str> = None;
        for (sig, n) in &signed {
            if last == Some(sig.as_str()) {
                groups.last_mut().expect("a group").push(n.clone());
            } else {
                groups.push(vec![n.clone()]);
            }
            last = Some(sig);
        }
        let mut out: Vec<Vec<Name>> = vec![Vec::new()];
        for g in groups {
            let perms = permutations(&g);
            if out.len() * perms.len() > MAX_ORDERINGS {
                out.iter_mut().for_each(|o| o.extend(g.iter().cloned()));
                continue;
            }
            out = out
                .iter()
                .flat_map(|o| {
                    perms.iter().map(move |p| {
                        let mut o = o.clone();
                        o.extend(p.iter().cloned());
                        o
                    })
                })
                .collect();
        }
        out
    }

    fn take(&self, st: &mut State, i: usize, order: &[Name]) {
        for n in order.iter().chain(&self.node_names[i]) {
            let Some(&(b, e)) = self.owner.get(n) else { continue };
            if st.number[b].is_none() {
                st.number[b] = Some(st.counter);
                st.counter += 1;
            }
            if !st.seen[b].contains(&e) {
                st.seen[b].push(e);
                if !self.pinned.contains(n) {
                    let l = self.label(st, b, e);
                    st.labels.insert(n.clone(), l);
                }
            }
        }
        let map: BTreeMap<Name, Name> = st.labels.iter().map(|(k, v)| (k.clone(), Name::new(v))).collect();
        let piece = format!("{}{}", self.nodes[i].tag, node_key(&self.nodes[i].proc.rename(&map), self.depth));
        st.pieces.push(piece);
        st.used[i] = true;
        st.order.push(i);
    }

    fn explore(&self, st: State, component: &[usize], best: &mut Option<(String, State)>) {
        let remaining: Vec<usize> = component.iter().copied().filter(|&i| !st.used[i]).collect();
        if remaining.is_empty() {
            let s = st.pieces.join(" | ");
            if best.as_ref().is_none_or(|(b, _)| s < *b) {
                *best = Some((s, st));
            }
            return;
        }
        if let Some((b, _)) = best {
            let s = st.pieces.join(" | ");
            if b.len() >= s.len() && s.as_bytes() > &b.as_bytes()[..s.len()] {
                return;
            }
        }
        let connected: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                self.node_names[i]
                    .iter()
                    .any(|n| self.owner.get(n).is_some_and(|&(b, _)| st.number[b].is_some()))
            })
            .collect();
        let frontier = if connected.is_empty() { remaining } else { connected };
        let keyed: Vec<(String, usize)> = frontier.iter().map(|&i| (self.partial_key(&st, i), i)).collect();
        let min = keyed.iter().map(|(k, _)| k).min().cloned().expect("nonempty frontier");
        let mut seen_keys = BTreeSet::new();
        for (k, i) in keyed {
            if k != min {
                continue;
            }
            // A node binding nothing cannot influence later labels, so equal
            // copies of it are interchangeable.
            let inert = self.node_names[i].iter().all(|n| !self.owner.contains_key(n));
            for order in self.orderings(&st, i) {
                let mut next = st.clone();
                self.take(&mut next, i, &order);
                if inert && !seen_keys.insert(next.pieces.last().cloned().unwrap_or_default()) {
                    continue;
                }
                self.explore(next, component, best);
            }
        }
    }
}

const MAX_ORDERINGS: usize = 720;

fn permutations(xs: &[Name]) -> Vec<Vec<Name>> {
    if xs.len() <= 1 {
        return vec![xs.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// Canonical key of `ν(binders) Π nodes`. Names in `pinned` and names not
/// bound by `binders` are kept literally.
pub(crate) fn flat_key(nodes: &[KeyNode<'_>], binders: &[KeyBinder], pinned: &BTreeSet<Name>, depth: usize) -> KeyResult {
    let mut owner = BTreeMap::new();
    for (b, kb) in binders.iter().enumerate() {
        for (e, n) in kb.names.iter().enumerate() {
            owner.insert(n.clone(), (b, e));
        }
    }
    let node_names: Vec<Vec<Name>> = nodes.iter().map(|n| free_in_order(n.proc)).collect();

    // connected components over nodes
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let nx = p[c];
            p[c] = r;
            c = nx;
        }
        r
    }
    let mut first_node_of_binder: Vec<Option<usize>> = vec![None; binders.len()];
    for (i, names) in node_names.iter().enumerate() {
        for n in names {
            if let Some(&(b, _)) = owner.get(n) {
                match first_node_of_binder[b] {
                    None => first_node_of_binder[b] = Some(i),
                    Some(j) => {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nodes.len() {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }

    let search = Search {
        nodes,
        binders,
        pinned,
        depth,
        owner,
        node_names,
    };
    let empty = State {
        labels: BTreeMap::new(),
        number: vec![None; binders.len()],
        seen: vec![Vec::new(); binders.len()],
        counter: 0,
        used: vec![false; nodes.len()],
        order: Vec::new(),
        pieces: Vec::new(),
    };

    let mut results: Vec<(String, Vec<usize>, Vec<usize>)> = Vec::new();
    for comp in comps.values() {
        let mut best = None;
        search.explore(empty.clone(), comp, &mut best);
        let (nodes_str, st) = best.expect("component has a labelling");
        let mut numbered: Vec<(usize, usize)> = st.number.iter().enumerate().filter_map(|(b, n)| n.map(|n| (n, b))).collect();
        numbered.sort();
        let mut bstrs = Vec::new();
        let mut border = Vec::new();
        for (_, b) in numbered {
            let kb = &binders[b];
            // endpoints in encounter order, then the rest
            let mut eps = st.seen[b].clone();
            for e in 0..kb.names.len() {
                if !eps.contains(&e) {
                    eps.push(e);
                }
            }
            let labels: Vec<String> = eps.iter().map(|&e| search.label(&st, b, e)).collect();
            bstrs.push(format!("{}ν({}:{})", kb.tag, labels.join("~"), kb.annot_from(eps[0])));
            border.push(b);
        }
        results.push((format!("{nodes_str} :: {}", bstrs.join(" ")), st.order, border));
    }
    results.sort();

    let used_binders: BTreeSet<usize> = results.iter().flat_map(|r| r.2.iter().copied()).collect();
    let mut degenerate: Vec<(String, usize)> = (0..binders.len())
        .filter(|b| !used_binders.contains(b))
        .map(|b| {
            let kb = &binders[b];
            let shown = |e: usize| {
                let n = &kb.names[e];
                if pinned.contains(n) {
                    n.to_string()
                } else {
                    "%".to_string()
                }
            };
            let variants: Vec<String> = (0..kb.names.len())
                .map(|e| {
                    let mut eps: Vec<usize> = vec![e];
                    eps.extend((0..kb.names.len()).filter(|&o| o != e));
                    let l: Vec<String> = eps.iter().map(|&x| shown(x)).collect();
                    format!("{}ν({}:{})", kb.tag, l.join("~"), kb.annot_from(e))
                })
                .collect();
            (variants.into_iter().min().unwrap_or_default(), b)
        })
        .collect();
    degenerate.sort();

    let mut key = results.iter().map(|r| r.0.as_str()).collect::<Vec<_>>().join(" ## ");
    key.push_str(" && ");
    key.push_str(&degenerate.iter().map(|d| d.0.as_str()).collect::<Vec<_>>().join(" "));
    KeyResult {
        key,
        node_order: results.iter().flat_map(|r| r.1.iter().copied()).collect(),
        binder_order: results
            .iter()
            .flat_map(|r| r.2.iter().copied())
            .chain(degenerate.iter().map(|d| d.1))
            .collect(),
    }
}

/// Free names in first-occurrence order of a preorder traversal.
pub(crate) fn free_in_order(p: &Process) -> Vec<Name> {
    fn go(p: &Process, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
        let see = |n: &Name, bound: &Vec<Name>, out: &mut Vec<Name>| {
            if !bound.contains(n) && !out.contains(n) {
                out.push(n.clone());
            }
        };
        match p {
            Process::Inaction => {}
            Process::Par(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Process::Res { x, y, body, .. } => {
                bound.push(x.clone());
                bound.push(y.clone());
                go(body, bound, out);
                bound.truncate(bound.len() - 2);
            }
            Process::Close(x) => see(x, bound, out),
            Process::Wait(x, q) => {
                see(x, bound, out);
                go(q, bound, out);
            }
            Process::Select { x, cont, .. } => {
                see(x, bound, out);
                see(cont, bound, out);
            }
            Process::Send { x, payload, cont } => {
                see(x, bound, out);
                see(payload, bound, out);
                see(cont, bound, out);
            }
            Process::Branch { x, z, arms } => {
                see(x, bound, out);
                bound.push(z.clone());
                for q in arms.values() {
                    go(q, bound, out);
                }
                bound.pop();
            }
            Process::Recv { x, y, z, body } => {
                see(x, bound, out);
                bound.push(y.clone());
                bound.push(z.clone());
                go(body, bound, out);
                bound.truncate(bound.len() - 2);
            }
        }
    }
    let mut out = Vec::new();
    go(p, &mut Vec::new(), &mut out);
    out
}

/// Key of a single node; its free names are taken literally.
fn node_key(p: &Process, depth: usize) -> String {
    let local = |k: usize| Name::new(format!("${depth}.{k}"));
    match p {
        Process::Close(x) => format!("close {x}"),
        Process::Select { x, cont, label } => format!("{x}!{label}({cont})"),
        Process::Send { x, payload, cont } => format!("send {x}({payload},{cont})"),
        Process::Wait(x, q) => format!("wait {x};[{}]", cont_key(q, depth + 1)),
        Process::Recv { x, y, z, body } => {
            let map = BTreeMap::from([(y.clone(), local(0)), (z.clone(), local(1))]);
            format!("recv {x}({},{});[{}]", local(0), local(1), cont_key(&body.rename(&map), depth + 1))
        }
        Process::Branch { x, z, arms } => {
            let map = BTreeMap::from([(z.clone(), local(0))]);
            let arms: Vec<String> = arms
                .iter()
                .map(|(l, q)| format!("{l}:[{}]", cont_key(&q.rename(&map), depth + 1)))
                .collect();
            format!("{x}?({}){{{}}}", local(0), arms.join(","))
        }
        other => format!("[{}]", cont_key(other, depth + 1)),
    }
}

/// Key of an arbitrary process up to structural congruence.
pub(crate) fn cont_key(p: &Process, depth: usize) -> String {
    let mut taken = p.free_names();
    let mut binders = Vec::new();
    let mut nodes = Vec::new();
    flatten_into(p, &mut taken, &mut binders, &mut nodes);
    let kn: Vec<KeyNode<'_>> = nodes.iter().map(|p| KeyNode { tag: "", proc: p }).collect();
    let kb: Vec<KeyBinder> = binders.iter().map(KeyBinder::from_binder).collect();
    flat_key(&kn, &kb, &BTreeSet::new(), depth).key
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_order_is_preorder() {
        let p = Process::wait("b", Process::par(Process::close("a"), Process::close("b")));
        assert_eq!(free_in_order(&p), vec![Name::new("b"), Name::new("a")]);
    }

    #[test]
    fn anonymous_names_rename_freely() {
        let a = Process::close("p");
        let b = Process::close("q");
        let kn = |p: &Process| -> String {
            let n = [KeyNode { tag: "", proc: p }];
            let name = p.subject().unwrap().clone();
            flat_key(&n, &[KeyBinder::anonymous(name)], &BTreeSet::new(), 0).key
        };
        assert_eq!(kn(&a), kn(&b));
    }

    #[test]
    fn pinned_names_stay_literal() {
        let p = Process::close("x");
        let bind = KeyBinder {
            names: vec![Name::new("x"), Name::new("y")],
            annot: Some((SessionType::One, Level::new("L"))),
            tag: String::new(),
        };
        let pinned = BTreeSet::from([Name::new("x")]);
        let k = flat_key(&[KeyNode { tag: "", proc: &p }], &[bind], &pinned, 0).key;
        assert!(k.contains("close x"));
    }

    #[test]
    fn names_first_met_under_a_prefix_are_ordered_canonically() {
        use crate::semantics::struct_congruent;
        use crate::surface::parse_process;
        let p = parse_process("new (u : end! [H]) v . new (a : end! [H]) b . wait x; (wait v; close b | close u | wait a; 0)").unwrap();
        let q = parse_process("new (u : end! [H]) v . new (a : end! [H]) b . wait x; (wait a; 0 | close u | wait v; close b)").unwrap();
        assert!(struct_congruent(&p, &q));
        let r = parse_process("new (u : end! [H]) v . new (a : end! [H]) b . wait x; (wait v; close b | close a | wait u; 0)").unwrap();
        assert!(!struct_congruent(&p, &r));
    }
}
