//! Binder/node normal forms.

use std::collections::BTreeSet;

use crate::lattice::Level;
use crate::semantics::canon::{flat_key, KeyBinder, KeyNode};
use crate::semantics::context::EvalContext;
use crate::syntax::{Name, Process};
use crate::types::SessionType;

/// A top-level restriction `ν(x y)` with the annotation of `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binder {
    pub x: Name,
    pub y: Name,
    pub ty: SessionType,
    pub level: Level,
}

impl Binder {
    pub fn has(&self, n: &Name) -> bool {
        &self.x == n || &self.y == n
    }

    /// The other endpoint, if `n` is one of ours.
    pub fn mate(&self, n: &Name) -> Option<&Name> {
        if &self.x == n {
            Some(&self.y)
        } else if &self.y == n {
            Some(&self.x)
        } else {
            None
        }
    }

    /// Type of endpoint `n`.
    pub fn type_of(&self, n: &Name) -> Option<SessionType> {
        if &self.x == n {
            Some(self.ty.clone())
        } else if &self.y == n {
            Some(self.ty.dual())
        } else {
            None
        }
    }

    pub fn pair(&self) -> (Name, Name) {
        (self.x.clone(), self.y.clone())
    }
}

/// `ν(binders) Π nodes`, every node a prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub binders: Vec<Binder>,
    pub nodes: Vec<Process>,
}

impl NormalForm {
    pub fn to_process(&self) -> Process {
        wrap(&self.binders, Process::par_all(self.nodes.iter().cloned()))
    }

    fn key_parts(&self) -> (Vec<KeyNode<'_>>, Vec<KeyBinder>) {
        let nodes = self.nodes.iter().map(|p| KeyNode { tag: "", proc: p }).collect();
        let binders = self.binders.iter().map(KeyBinder::from_binder).collect();
        (nodes, binders)
    }

    /// A string equal for two normal forms iff their processes are
    /// structurally congruent.
    pub fn canonical_key(&self) -> String {
        let (nodes, binders) = self.key_parts();
        flat_key(&nodes, &binders, &BTreeSet::new(), 0).key
    }

    /// The normal form with binders and nodes in canonical order; names are
    /// kept.
    pub fn canonical(&self) -> NormalForm {
        let (nodes, binders) = self.key_parts();
        let r = flat_key(&nodes, &binders, &BTreeSet::new(), 0);
        NormalForm {
            binders: r.binder_order.iter().map(|&i| self.binders[i].clone()).collect(),
            nodes: r.node_order.iter().map(|&i| self.nodes[i].clone()).collect(),
        }
    }

    pub fn binder_pairs(&self) -> BTreeSet<(Name, Name)> {
        self.binders.iter().map(|b| sorted_pair(&b.x, &b.y)).collect()
    }
}

pub(crate) fn sorted_pair(a: &Name, b: &Name) -> (Name, Name) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// `ν(b1)…ν(bn) body`, outermost first.
pub fn wrap(binders: &[Binder], body: Process) -> Process {
    binders.iter().rev().fold(body, |acc, b| {
        Process::res(b.x.clone(), b.y.clone(), b.ty.clone(), b.level.clone(), acc)
    })
}

/// Flattens `p` into binders and nodes, renaming top-level binders that
/// clash with a name in `taken`. Chosen names are added to `taken`.
pub fn flatten_into(p: &Process, taken: &mut BTreeSet<Name>, binders: &mut Vec<Binder>, nodes: &mut Vec<Process>) {
    match p {
        Process::Inaction => {}
        Process::Par(l, r) => {
            flatten_into(l, taken, binders, nodes);
            flatten_into(r, taken, binders, nodes);
        }
        Process::Res { x, y, ty, level, body } => {
            let mut map = std::collections::BTreeMap::new();
            let mut pick = |n: &Name, taken: &mut BTreeSet<Name>| {
                let chosen = if taken.contains(n) {
                    crate::syntax::fresh_name(n, taken)
                } else {
                    n.clone()
                };
                taken.insert(chosen.clone());
                if &chosen != n {
                    map.insert(n.clone(), chosen.clone());
                }
                chosen
            };
            let nx = pick(x, taken);
            let ny = pick(y, taken);
            let body = if map.is_empty() { (**body).clone() } else { body.rename(&map) };
            binders.push(Binder {
                x: nx,
                y: ny,
                ty: ty.clone(),
                level: level.clone(),
            });
            flatten_into(&body, taken, binders, nodes);
        }
        node => nodes.push(node.clone()),
    }
}

/// A normal form of `p`: restrictions extruded to the top, parallel
/// compositions flattened, inactions dropped.
pub fn normal_form(p: &Process) -> NormalForm {
    let mut taken = p.free_names();
    let mut binders = Vec::new();
    let mut nodes = Vec::new();
    flatten_into(p, &mut taken, &mut binders, &mut nodes);
    NormalForm { binders, nodes }
}

/// Binder pairs and sibling nodes of a context, with names as written.
pub fn flatten_context(e: &EvalContext) -> (Vec<(Name, Name)>, Vec<Process>) {
    let mut pairs = Vec::new();
    let mut nodes = Vec::new();
    for (x, y, _, _) in e.hole_binders() {
        pairs.push((x, y));
    }
    for s in e.siblings() {
        collect_unrenamed(s, &mut pairs, &mut nodes);
    }
    (pairs, nodes)
}

fn collect_unrenamed(p: &Process, pairs: &mut Vec<(Name, Name)>, nodes: &mut Vec<Process>) {
    match p {
        Process::Inaction => {}
        Process::Par(l, r) => {
            collect_unrenamed(l, pairs, nodes);
            collect_unrenamed(r, pairs, nodes);
        }
        Process::Res { x, y, body, .. } => {
            pairs.push((x.clone(), y.clone()));
            collect_unrenamed(body, pairs, nodes);
        }
        n => nodes.push(n.clone()),
    }
}

/// Decides `p ≡ q`.
pub fn struct_congruent(p: &Process, q: &Process) -> bool {
    normal_form(p).canonical_key() == normal_form(q).canonical_key()
}

/// Canonical key of a process up to structural congruence.
pub fn congruence_key(p: &Process) -> String {
    normal_form(p).canonical_key()
}

/// `p` rearranged into canonical normal form, names kept.
pub fn canonical_process(p: &Process) -> Process {
    normal_form(p).canonical().to_process()
}
