//! Quasi-running secrecy, relevant nodes and binders, and observable
//! equivalence.

use std::collections::{BTreeMap, BTreeSet};

use crate::checker::{check_with, Discipline, Judgment};
use crate::lattice::{Level, SecrecyLattice};
use crate::security::SecurityError;
use crate::semantics::canon::{flat_key, KeyBinder, KeyNode};
use crate::semantics::normal_form::{normal_form, sorted_pair, wrap, Binder, NormalForm};
use crate::syntax::{Name, Process};
use crate::types::TypingContext;

/// `d ⊔ c` for the level `c` of the node's foremost subject in `g`.
pub fn quasi_running_secrecy(
    lattice: &SecrecyLattice,
    node: &Process,
    d: &Level,
    g: &TypingContext,
) -> Result<Level, SecurityError> {
    let x = node.subject().ok_or_else(|| SecurityError::NotANode(node.to_string()))?;
    let c = &g.get(x).ok_or_else(|| SecurityError::SubjectUntyped(x.clone()))?.level;
    Ok(lattice.join(d, c)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceResult {
    /// Indices into the normal form's nodes.
    pub node_indices: Vec<usize>,
    pub relevant_nodes: Vec<Process>,
    /// Indices into the normal form's binders.
    pub binder_indices: Vec<usize>,
    pub relevant_binders: Vec<Binder>,
    pub relevant_form: Process,
    /// `N_0 ⊆ N_1 ⊆ …`, as node index sets.
    pub stages: Vec<BTreeSet<usize>>,
}

/// Types of every name free in some node: binder annotations for bound
/// names, `g` for the rest.
pub(crate) fn node_contexts(nf: &NormalForm, g: &TypingContext) -> Vec<TypingContext> {
    let mut by_name = BTreeMap::new();
    for b in &nf.binders {
        by_name.insert(b.x.clone(), (b.ty.clone(), b.level.clone()));
        by_name.insert(b.y.clone(), (b.ty.dual(), b.level.clone()));
    }
    nf.nodes
        .iter()
        .map(|q| {
            q.free_names()
                .into_iter()
                .filter_map(|n| {
                    let binding = match by_name.get(&n) {
                        Some((t, l)) => crate::types::Binding::new(t.clone(), l.clone()),
                        None => g.get(&n)?.clone(),
                    };
                    Some((n, binding))
                })
                .collect()
        })
        .collect()
}

/// Relevant nodes, binders and form of a normal form typed at `(d, g)`,
/// observed at `xi`. Every node is taken at running secrecy `d`.
pub fn relevant(
    lattice: &SecrecyLattice,
    xi: &Level,
    nf: &NormalForm,
    g: &TypingContext,
    d: &Level,
) -> Result<RelevanceResult, SecurityError> {
    relevant_with(lattice, xi, nf, g, d, Discipline::Secure)
}

pub fn relevant_with(
    lattice: &SecrecyLattice,
    xi: &Level,
    nf: &NormalForm,
    g: &TypingContext,
    d: &Level,
    discipline: Discipline,
) -> Result<RelevanceResult, SecurityError> {
    if !lattice.contains(xi) {
        return Err(SecurityError::UnknownLevel(xi.clone()));
    }
    if let Err(es) = check_with(lattice, &nf.to_process(), d, g, discipline) {
        return Err(SecurityError::IllTyped(es[0].message.clone()));
    }
    let observable: BTreeSet<Name> = g.project(lattice, xi)?.names().cloned().collect();
    let ctxs = node_contexts(nf, g);
    let mut quasi_ok = Vec::new();
    for (q, gq) in nf.nodes.iter().zip(&ctxs) {
        let c = quasi_running_secrecy(lattice, q, d, gq)?;
        quasi_ok.push(lattice.leq(&c, xi)?);
    }
    let fcn: Vec<BTreeSet<Name>> = nf.nodes.iter().map(|q| q.free_communication_names()).collect();

    let mut current: BTreeSet<usize> = (0..nf.nodes.len())
        .filter(|&i| quasi_ok[i] && fcn[i].iter().any(|z| observable.contains(z)))
        .collect();
    let mut stages = vec![current.clone()];
    let mut used_binders = BTreeSet::new();
    for _ in 0..nf.binders.len() {
        let mut next = current.clone();
        for (q, fq) in fcn.iter().enumerate() {
            if !quasi_ok[q] {
                continue;
            }
            for &qp in &current {
                for (w, bw) in ctxs[qp].iter() {
                    if !lattice.leq(&bw.level, xi)? {
                        continue;
                    }
                    for (bi, b) in nf.binders.iter().enumerate() {
                        let Some(z) = b.mate(w) else { continue };
                        if fq.contains(z) {
                            next.insert(q);
                            used_binders.insert(bi);
                        }
                    }
                }
            }
        }
        current = next;
        stages.push(current.clone());
    }

    let node_indices: Vec<usize> = current.into_iter().collect();
    let binder_indices: Vec<usize> = used_binders.into_iter().collect();
    let relevant_nodes: Vec<Process> = node_indices.iter().map(|&i| nf.nodes[i].clone()).collect();
    let relevant_binders: Vec<Binder> = binder_indices.iter().map(|&i| nf.binders[i].clone()).collect();
    let relevant_form = wrap(&relevant_binders, Process::par_all(relevant_nodes.iter().cloned()));
    Ok(RelevanceResult {
        node_indices,
        relevant_nodes,
        binder_indices,
        relevant_binders,
        relevant_form,
        stages,
    })
}

/// Canonical key of a relevant form. Names bound in the full normal form but
/// not by a relevant binder are renameable; other free names are literal.
pub fn relevant_form_key(nf: &NormalForm, r: &RelevanceResult) -> String {
    let bound: BTreeSet<Name> = nf.binders.iter().flat_map(|b| [b.x.clone(), b.y.clone()]).collect();
    let in_relevant: BTreeSet<Name> = r.relevant_binders.iter().flat_map(|b| [b.x.clone(), b.y.clone()]).collect();
    let mut dangling = BTreeSet::new();
    for q in &r.relevant_nodes {
        for n in q.free_names() {
            if bound.contains(&n) && !in_relevant.contains(&n) {
                dangling.insert(n);
            }
        }
    }
    let nodes: Vec<KeyNode<'_>> = r.relevant_nodes.iter().map(|p| KeyNode { tag: "", proc: p }).collect();
    let mut binders: Vec<KeyBinder> = r.relevant_binders.iter().map(KeyBinder::from_binder).collect();
    binders.extend(dangling.into_iter().map(KeyBinder::anonymous));
    flat_key(&nodes, &binders, &BTreeSet::new(), 0).key
}

/// A typed process: `Ω ⊢ P @ d :: Γ`.
#[derive(Debug, Clone)]
pub struct Typed<'a> {
    pub process: &'a Process,
    pub running: &'a Level,
    pub context: &'a TypingContext,
}

impl<'a> From<&'a Judgment> for Typed<'a> {
    fn from(j: &'a Judgment) -> Self {
        Typed {
            process: &j.process,
            running: &j.running,
            context: &j.context,
        }
    }
}

/// `P1 ≅ξ P2`: their relevant forms are congruent.
pub fn observably_equivalent(
    lattice: &SecrecyLattice,
    xi: &Level,
    p1: Typed<'_>,
    p2: Typed<'_>,
) -> Result<bool, SecurityError> {
    observably_equivalent_with(lattice, xi, p1, p2, Discipline::Secure)
}

pub fn observably_equivalent_with(
    lattice: &SecrecyLattice,
    xi: &Level,
    p1: Typed<'_>,
    p2: Typed<'_>,
    discipline: Discipline,
) -> Result<bool, SecurityError> {
    let key = |p: &Typed<'_>| -> Result<String, SecurityError> {
        let nf = normal_form(p.process);
        let r = relevant_with(lattice, xi, &nf, p.context, p.running, discipline)?;
        Ok(relevant_form_key(&nf, &r))
    };
    Ok(key(&p1)? == key(&p2)?)
}

/// The relevant binder pairs as sorted name pairs.
pub fn binder_pairs(r: &RelevanceResult) -> BTreeSet<(Name, Name)> {
    r.relevant_binders.iter().map(|b| sorted_pair(&b.x, &b.y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_process;
    use crate::types::SessionType;

    fn l(s: &str) -> Level {
        Level::new(s)
    }

    fn pp(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    #[test]
    fn quasi_examples() {
        let o = SecrecyLattice::two_point();
        let g = TypingContext::new().with("x", SessionType::One, "H");
        assert_eq!(quasi_running_secrecy(&o, &Process::close("x"), &l("L"), &g).unwrap(), l("H"));
        let g = TypingContext::new().with("x", SessionType::Bot, "L");
        assert_eq!(
            quasi_running_secrecy(&o, &Process::wait("x", Process::Inaction), &l("L"), &g).unwrap(),
            l("L")
        );
        let g = TypingContext::new().with("x", SessionType::plus([("a", SessionType::One)]), "L");
        assert_eq!(quasi_running_secrecy(&o, &Process::select("x", "b", "a"), &l("H"), &g).unwrap(), l("H"));
        assert!(quasi_running_secrecy(&o, &Process::close("y"), &l("L"), &g).is_err());
    }

    #[test]
    fn chain_is_fully_relevant() {
        let o = SecrecyLattice::two_point();
        let p = pp("new (x : end! [L]) y . new (u : end! [L]) w . (close x | wait y; close u | wait w; close o)");
        let g = TypingContext::new().with("o", SessionType::One, "L");
        let nf = normal_form(&p);
        let r = relevant(&o, &l("L"), &nf, &g, &l("L")).unwrap();
        assert_eq!(r.relevant_nodes.len(), 3);
        assert_eq!(r.relevant_binders.len(), 2);
        assert_eq!(r.stages.len(), 3);
        assert!(r.stages.windows(2).all(|w| w[0].is_subset(&w[1])));
    }

    #[test]
    fn high_names_are_irrelevant() {
        let o = SecrecyLattice::two_point();
        let p = pp("new (x : end! [H]) y . (close x | wait y; close u)");
        let g = TypingContext::new().with("u", SessionType::One, "H");
        let nf = normal_form(&p);
        let r = relevant(&o, &l("L"), &nf, &g, &l("L")).unwrap();
        assert!(r.relevant_nodes.is_empty());
        assert_eq!(r.relevant_form, Process::Inaction);
    }

    #[test]
    fn payload_names_do_not_connect() {
        // the send on x carries the mate of a as payload but never acts on it
        let o = SecrecyLattice::two_point();
        let p = pp(
            "new (x : end? * end? [L]) y . new (a : end? [L]) u . new (b : end? [L]) v . \
             (send x(u, v) | recv y(z, w); (close z | close w) | wait a; close o | wait b; 0)",
        );
        let g = TypingContext::new().with("o", SessionType::One, "L");
        let nf = normal_form(&p);
        let r = relevant(&o, &l("L"), &nf, &g, &l("L")).unwrap();
        let shown: BTreeSet<String> = r.relevant_nodes.iter().map(|n| n.to_string()).collect();
        assert_eq!(shown, BTreeSet::from(["wait a; close o".to_string()]));
    }

    #[test]
    fn obseq_ignores_unobservable_selection() {
        let o = SecrecyLattice::two_point();
        let g = TypingContext::new()
            .with("aL1", SessionType::Bot, "L")
            .with("aI", SessionType::plus([("act", SessionType::One), ("wait", SessionType::One)]), "H");
        let p1 = pp("new (aI1' : end? [H]) aI1 . (aI!act(aI1') | wait aL1; close aI1)");
        let p2 = pp("new (aI1' : end? [H]) aI1 . (aI!wait(aI1') | wait aL1; close aI1)");
        let low = l("L");
        let t = |p| Typed { process: p, running: &low, context: &g };
        assert!(observably_equivalent(&o, &l("L"), t(&p1), t(&p2)).unwrap());
        assert!(!observably_equivalent(&o, &l("H"), t(&p1), t(&p2)).unwrap());
    }

    #[test]
    fn obseq_sees_observable_selection() {
        let o = SecrecyLattice::two_point();
        let g = TypingContext::new()
            .with("aI1", SessionType::Bot, "H")
            .with("aL", SessionType::plus([("inf1", SessionType::One), ("inf2", SessionType::One)]), "L");
        let p1 = pp("new (aL1' : end? [L]) aL1 . (aL!inf1(aL1') | wait aI1; close aL1)");
        let p2 = pp("new (aL1' : end? [L]) aL1 . (aL!inf2(aL1') | wait aI1; close aL1)");
        let low = l("L");
        let t = |p| Typed { process: p, running: &low, context: &g };
        // the insecure pair only passes session typing
        assert!(observably_equivalent(&o, &l("L"), t(&p1), t(&p2)).is_err());
        let s = Discipline::SessionOnly;
        assert!(!observably_equivalent_with(&o, &l("L"), t(&p1), t(&p2), s).unwrap());
        assert!(observably_equivalent_with(&o, &l("L"), t(&p1), t(&p1), s).unwrap());
    }
}
