//! Seeded generators for session types, well-typed processes and random
//! structural rearrangements.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checker::Judgment;
use crate::lattice::{Level, SecrecyLattice};
use crate::syntax::{Label, Name, Process};
use crate::types::{SessionType, TypingContext};

#[derive(Debug, Clone, Copy)]
pub struct Params {
    /// Nesting depth of generated types.
    pub type_depth: usize,
    /// Interface size is drawn from `0..=max_interface`.
    pub max_interface: usize,
    /// Restrictions the generator may introduce.
    pub max_restrictions: usize,
    /// Processes with more prefixes are rejected and redrawn.
    pub max_prefixes: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            type_depth: 2,
            max_interface: 2,
            max_restrictions: 2,
            max_prefixes: 12,
        }
    }
}

const LABELS: [&str; 3] = ["a", "b", "c"];

pub struct Generator {
    rng: ChaCha8Rng,
    lattice: SecrecyLattice,
    counter: usize,
}

/// An endpoint still to be implemented: name, type, level.
type Slot = (Name, SessionType, Level);

impl Generator {
    pub fn new(lattice: SecrecyLattice, seed: u64) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            lattice,
            counter: 0,
        }
    }

    pub fn lattice(&self) -> &SecrecyLattice {
        &self.lattice
    }

    pub fn level(&mut self) -> Level {
        self.lattice.levels().choose(&mut self.rng).expect("nonempty lattice").clone()
    }

    fn level_above(&mut self, d: &Level) -> Level {
        let up = self.lattice.up_set(d).expect("known level");
        up.choose(&mut self.rng).expect("d is above itself").clone()
    }

    fn fresh(&mut self, stem: &str) -> Name {
        self.counter += 1;
        Name::new(format!("{stem}{}", self.counter))
    }

    pub fn session_type(&mut self, depth: usize) -> SessionType {
        let pick = if depth == 0 { self.rng.gen_range(0..2) } else { self.rng.gen_range(0..6) };
        match pick {
            0 => SessionType::One,
            1 => SessionType::Bot,
            2 | 3 => {
                let n = self.rng.gen_range(1..=LABELS.len().min(2));
                let arms: Vec<(&str, SessionType)> =
                    LABELS[..n].iter().map(|l| (*l, self.session_type(depth - 1))).collect();
                if pick == 2 {
                    SessionType::plus(arms)
                } else {
                    SessionType::with(arms)
                }
            }
            4 => SessionType::tensor(self.session_type(depth - 1), self.session_type(depth - 1)),
            _ => SessionType::par(self.session_type(depth - 1), self.session_type(depth - 1)),
        }
    }

    pub fn context(&mut self, params: &Params) -> TypingContext {
        let n = self.rng.gen_range(0..=params.max_interface);
        let mut g = TypingContext::new();
        for _ in 0..n {
            let x = self.fresh("x");
            let t = self.session_type(params.type_depth);
            let c = self.level();
            g = g.with(x, t, c);
        }
        g
    }

    /// A process with `Ω ⊢ P @ d :: g`, where every level of `g` is above
    /// `d`.
    pub fn process(&mut self, g: &TypingContext, d: &Level, params: &Params) -> Process {
        let slots: Vec<Slot> = g.iter().map(|(x, b)| (x.clone(), b.ty.clone(), b.level.clone())).collect();
        let mut budget = params.max_restrictions;
        self.implement(slots, d, &mut budget, params)
    }

    /// A well-typed judgment at the bottom level within the prefix bound.
    pub fn judgment(&mut self, params: &Params) -> Judgment {
        let bottom = self.lattice.bottom();
        loop {
            let g = self.context(params);
            let p = self.process(&g, &bottom, params);
            if p.prefix_count() <= params.max_prefixes {
                return Judgment {
                    process: p,
                    running: bottom,
                    context: g,
                };
            }
        }
    }

    /// A closed well-typed process with at least one restriction.
    pub fn closed(&mut self, params: &Params) -> Process {
        let bottom = self.lattice.bottom();
        loop {
            let mut budget = params.max_restrictions.max(1) - 1;
            let p = self.restrict(Vec::new(), &bottom, &mut budget, params);
            if p.prefix_count() <= params.max_prefixes {
                return p;
            }
        }
    }

    fn above(&self, d: &Level, c: &Level) -> bool {
        self.lattice.leq(d, c).expect("known levels")
    }

    fn restrict(&mut self, mut slots: Vec<Slot>, d: &Level, budget: &mut usize, params: &Params) -> Process {
        let x = self.fresh("u");
        let y = self.fresh("v");
        let t = self.session_type(params.type_depth);
        let c = self.level_above(d);
        slots.push((x.clone(), t.clone(), c.clone()));
        slots.push((y.clone(), t.dual(), c.clone()));
        slots.shuffle(&mut self.rng);
        let body = self.implement(slots, d, budget, params);
        Process::res(x, y, t, c, body)
    }

    fn implement(&mut self, mut slots: Vec<Slot>, d: &Level, budget: &mut usize, params: &Params) -> Process {
        if slots.is_empty() {
            if *budget > 0 && self.rng.gen_bool(0.3) {
                *budget -= 1;
                return self.restrict(slots, d, budget, params);
            }
            return Process::Inaction;
        }
        let mut moves = Vec::new();
        if slots.len() > 1 {
            moves.push(Move::Split);
        }
        if *budget > 0 {
            moves.push(Move::Restrict);
        }
        for (i, (_, t, c)) in slots.iter().enumerate() {
            let act = match t {
                SessionType::One => slots.len() == 1,
                SessionType::Plus(_) | SessionType::Tensor(..) => true,
                _ => {
                    let raised = self.lattice.join(d, c).expect("known levels");
                    slots.iter().enumerate().all(|(j, s)| j == i || self.above(&raised, &s.2))
                }
            };
            if act {
                moves.push(Move::Act(i));
                moves.push(Move::Act(i));
            }
        }
        match *moves.choose(&mut self.rng).expect("a slot can always be split off or acted on") {
            Move::Split => {
                let k = self.rng.gen_range(1..slots.len());
                let rest = slots.split_off(k);
                let p = self.implement(slots, d, budget, params);
                let q = self.implement(rest, d, budget, params);
                Process::par(p, q)
            }
            Move::Restrict => {
                *budget -= 1;
                self.restrict(slots, d, budget, params)
            }
            Move::Act(i) => {
                let (x, t, c) = slots.remove(i);
                self.act(x, t, c, slots, d, budget, params)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn act(
        &mut self,
        x: Name,
        t: SessionType,
        c: Level,
        mut rest: Vec<Slot>,
        d: &Level,
        budget: &mut usize,
        params: &Params,
    ) -> Process {
        let raised = self.lattice.join(d, &c).expect("known levels");
        match t {
            SessionType::One => Process::close(x),
            SessionType::Bot => {
                let p = self.implement(rest, &raised, budget, params);
                Process::wait(x, p)
            }
            SessionType::Plus(arms) => {
                let arms: Vec<(Label, SessionType)> = arms.into_iter().collect();
                let (l, a) = arms.choose(&mut self.rng).expect("nonempty choice").clone();
                let z = self.fresh("k");
                let x1 = self.fresh("x");
                rest.push((x1.clone(), a.clone(), c.clone()));
                rest.shuffle(&mut self.rng);
                let p = self.implement(rest, d, budget, params);
                Process::res(z.clone(), x1, a.dual(), c, Process::par(Process::select(x, z, l), p))
            }
            SessionType::With(arms) => {
                let z = self.fresh("z");
                let mut out = Vec::new();
                for (l, a) in arms {
                    let mut r = rest.clone();
                    r.push((z.clone(), a, c.clone()));
                    r.shuffle(&mut self.rng);
                    out.push((l, self.implement(r, &raised, budget, params)));
                }
                Process::branch(x, z, out)
            }
            SessionType::Tensor(a, b) => {
                let u = self.fresh("k");
                let w = self.fresh("w");
                let z = self.fresh("k");
                let x1 = self.fresh("x");
                rest.push((w.clone(), (*a).clone(), c.clone()));
                rest.push((x1.clone(), (*b).clone(), c.clone()));
                rest.shuffle(&mut self.rng);
                let p = self.implement(rest, d, budget, params);
                Process::res(
                    u.clone(),
                    w,
                    a.dual(),
                    c.clone(),
                    Process::res(z.clone(), x1, b.dual(), c, Process::par(Process::send(x, u, z), p)),
                )
            }
            SessionType::Par(a, b) => {
                let v = self.fresh("y");
                let y1 = self.fresh("z");
                rest.push((v.clone(), *a, c.clone()));
                rest.push((y1.clone(), *b, c));
                rest.shuffle(&mut self.rng);
                let p = self.implement(rest, &raised, budget, params);
                Process::recv(x, v, y1, p)
            }
        }
    }

    /// Applies `steps` random structural congruence rewrites at random
    /// positions.
    pub fn rearrange(&mut self, p: &Process, steps: usize) -> Process {
        let mut cur = p.clone();
        for _ in 0..steps {
            let n = positions(&cur);
            let at = self.rng.gen_range(0..n);
            let rule = self.rng.gen_range(0..RULES);
            cur = rewrite_at(&cur, at, rule, &mut self.rng);
        }
        cur
    }
}

#[derive(Clone, Copy)]
enum Move {
    Split,
    Restrict,
    Act(usize),
}

fn positions(p: &Process) -> usize {
    1 + match p {
        Process::Par(a, b) => positions(a) + positions(b),
        Process::Res { body, .. } | Process::Wait(_, body) | Process::Recv { body, .. } => positions(body),
        Process::Branch { arms, .. } => arms.values().map(positions).sum(),
        _ => 0,
    }
}

const RULES: usize = 7;

fn rewrite_at(p: &Process, at: usize, rule: usize, rng: &mut ChaCha8Rng) -> Process {
    let mut at = at;
    go(p, &mut at, rule, rng)
}

fn go(p: &Process, at: &mut usize, rule: usize, rng: &mut ChaCha8Rng) -> Process {
    if *at == 0 {
        *at = usize::MAX;
        return apply(p, rule, rng);
    }
    *at -= 1;
    match p {
        Process::Par(a, b) => {
            let a = go(a, at, rule, rng);
            let b = go(b, at, rule, rng);
            Process::par(a, b)
        }
        Process::Res { x, y, ty, level, body } => {
            Process::res(x.clone(), y.clone(), ty.clone(), level.clone(), go(body, at, rule, rng))
        }
        Process::Wait(x, body) => Process::wait(x.clone(), go(body, at, rule, rng)),
        Process::Recv { x, y, z, body } => Process::recv(x.clone(), y.clone(), z.clone(), go(body, at, rule, rng)),
        Process::Branch { x, z, arms } => Process::Branch {
            x: x.clone(),
            z: z.clone(),
            arms: arms.iter().map(|(l, q)| (l.clone(), go(q, at, rule, rng))).collect(),
        },
        other => other.clone(),
    }
}

fn binds_none(x: &Name, y: &Name, q: &Process) -> bool {
    let fns = q.free_names();
    !fns.contains(x) && !fns.contains(y)
}

/// One congruence axiom at the root, or `p` itself when it does not apply.
fn apply(p: &Process, rule: usize, rng: &mut ChaCha8Rng) -> Process {
    match (rule, p) {
        // P | Q ≡ Q | P
        (0, Process::Par(a, b)) => Process::par((**b).clone(), (**a).clone()),
        // (P | Q) | R ≡ P | (Q | R), both ways
        (1, Process::Par(ab, c)) if matches!(**ab, Process::Par(..)) => {
            let Process::Par(a, b) = &**ab else { unreachable!() };
            Process::par((**a).clone(), Process::par((**b).clone(), (**c).clone()))
        }
        (1, Process::Par(a, bc)) if matches!(**bc, Process::Par(..)) => {
            let Process::Par(b, c) = &**bc else { unreachable!() };
            Process::par(Process::par((**a).clone(), (**b).clone()), (**c).clone())
        }
        // P | 0 ≡ P, both ways
        (2, Process::Par(a, b)) if **b == Process::Inaction => (**a).clone(),
        (2, q) if rng.gen_bool(0.5) => Process::par(q.clone(), Process::Inaction),
        // ν(xy)P | Q ≡ ν(xy)(P | Q) when x, y are not free in Q
        (3, Process::Par(a, b)) => match &**a {
            Process::Res { x, y, ty, level, body } if binds_none(x, y, b) => Process::res(
                x.clone(),
                y.clone(),
                ty.clone(),
                level.clone(),
                Process::par((**body).clone(), (**b).clone()),
            ),
            _ => p.clone(),
        },
        (3, Process::Res { x, y, ty, level, body }) => match &**body {
            Process::Par(a, b) if binds_none(x, y, b) => Process::par(
                Process::res(x.clone(), y.clone(), ty.clone(), level.clone(), (**a).clone()),
                (**b).clone(),
            ),
            Process::Par(a, b) if binds_none(x, y, a) => Process::par(
                (**a).clone(),
                Process::res(x.clone(), y.clone(), ty.clone(), level.clone(), (**b).clone()),
            ),
            _ => p.clone(),
        },
        // ν(xy)ν(zw)P ≡ ν(zw)ν(xy)P
        (4, Process::Res { x, y, ty, level, body }) => match &**body {
            Process::Res {
                x: z,
                y: w,
                ty: t2,
                level: l2,
                body: inner,
            } => Process::res(
                z.clone(),
                w.clone(),
                t2.clone(),
                l2.clone(),
                Process::res(x.clone(), y.clone(), ty.clone(), level.clone(), (**inner).clone()),
            ),
            _ => p.clone(),
        },
        // ν(xy)P ≡ ν(yx)P
        (5, Process::Res { x, y, ty, level, body }) => {
            Process::res(y.clone(), x.clone(), ty.dual(), level.clone(), (**body).clone())
        }
        // alpha-rename a restriction's endpoint
        (6, Process::Res { x, y, ty, level, body }) => {
            let mut avoid: BTreeSet<Name> = body.all_names();
            avoid.insert(x.clone());
            avoid.insert(y.clone());
            let fresh = crate::syntax::fresh_name(x, &avoid);
            Process::res(fresh.clone(), y.clone(), ty.clone(), level.clone(), body.substitute(&fresh, x))
        }
        _ => p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check;
    use crate::semantics::struct_congruent;

    #[test]
    fn generated_processes_check() {
        let mut g = Generator::new(SecrecyLattice::two_point(), 7);
        let params = Params::default();
        for _ in 0..200 {
            let j = g.judgment(&params);
            assert!(
                check(g.lattice(), &j.process, &j.running, &j.context).is_ok(),
                "{} :: {:?}",
                j.process,
                j.context
            );
        }
    }

    #[test]
    fn closed_processes_check_and_restrict() {
        let mut g = Generator::new(SecrecyLattice::two_point(), 11);
        for _ in 0..100 {
            let p = g.closed(&Params::default());
            assert!(matches!(p, Process::Res { .. }));
            assert!(crate::checker::check_closed(g.lattice(), &p, &Level::new("L")).is_ok(), "{p}");
        }
    }

    #[test]
    fn same_seed_same_output() {
        let mut a = Generator::new(SecrecyLattice::two_point(), 3);
        let mut b = Generator::new(SecrecyLattice::two_point(), 3);
        for _ in 0..20 {
            assert_eq!(a.judgment(&Params::default()), b.judgment(&Params::default()));
        }
    }

    #[test]
    fn rearrangement_is_congruent() {
        let mut g = Generator::new(SecrecyLattice::two_point(), 5);
        for _ in 0..100 {
            let p = g.closed(&Params::default());
            let q = g.rearrange(&p, 10);
            assert!(struct_congruent(&p, &q), "{p}\n{q}");
        }
    }
}
