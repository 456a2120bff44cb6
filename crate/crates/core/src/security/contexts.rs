//! Closing context pairs for the noninterference check: given explicitly or
//! enumerated from the interfaces of the two processes.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::lattice::{Level, SecrecyLattice};
use crate::semantics::context::EvalContext;
use crate::surface::print_context;
use crate::syntax::{fresh_name, Label, Name, Process};
use crate::types::{SessionType, TypingContext};

use super::SecurityError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPair {
    pub left: EvalContext,
    pub right: EvalContext,
}

impl ContextPair {
    pub fn same(e: EvalContext) -> Self {
        ContextPair { left: e.clone(), right: e }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnumerationParams {
    /// Selections per peer whose label is enumerated; deeper ones take the
    /// first label.
    pub depth: usize,
    /// Maximum number of pairs; a larger product is thinned evenly.
    pub cap: usize,
}

impl Default for EnumerationParams {
    fn default() -> Self {
        EnumerationParams { depth: 2, cap: 64 }
    }
}

#[derive(Debug, Clone)]
pub enum ContextSpec {
    Explicit(Vec<ContextPair>),
    Enumerate(EnumerationParams),
}

/// A printed context pair, for reports.
#[derive(Debug, Clone, Serialize)]
pub struct PrintedPair {
    pub left: String,
    pub right: String,
}

impl From<&ContextPair> for PrintedPair {
    fn from(c: &ContextPair) -> Self {
        PrintedPair {
            left: print_context(&c.left),
            right: print_context(&c.right),
        }
    }
}

struct PeerBuilder<'a> {
    avoid: &'a mut BTreeSet<Name>,
}

impl PeerBuilder<'_> {
    fn fresh(&mut self, stem: &str) -> Name {
        let n = fresh_name(&Name::new(stem), self.avoid);
        self.avoid.insert(n.clone());
        n
    }

    /// Every process that drives `x : b` to completion, choosing among the
    /// labels of the first `depth` selections.
    fn peers(&mut self, x: &Name, b: &SessionType, c: &Level, depth: usize) -> Vec<Process> {
        match b {
            SessionType::One => vec![Process::close(x.clone())],
            SessionType::Bot => vec![Process::wait(x.clone(), Process::Inaction)],
            SessionType::Plus(arms) => {
                let chosen: Vec<(&Label, &SessionType)> = if depth == 0 {
                    arms.iter().take(1).collect()
                } else {
                    arms.iter().collect()
                };
                let mut out = Vec::new();
                for (l, bl) in chosen {
                    let z = self.fresh("q");
                    let x1 = self.fresh("p");
                    for rest in self.peers(&x1, bl, c, depth.saturating_sub(1)) {
                        out.push(Process::res(
                            z.clone(),
                            x1.clone(),
                            bl.dual(),
                            c.clone(),
                            Process::par(Process::select(x.clone(), z.clone(), l.clone()), rest),
                        ));
                    }
                }
                out
            }
            SessionType::With(arms) => {
                let y1 = self.fresh("p");
                let mut per_arm: Vec<Vec<(Label, Process)>> = vec![Vec::new()];
                for (l, bl) in arms {
                    let options = self.peers(&y1, bl, c, depth);
                    per_arm = product(&per_arm, &options, |mut acc, q| {
                        acc.push((l.clone(), q.clone()));
                        acc
                    });
                }
                per_arm.into_iter().map(|arms| Process::branch(x.clone(), y1.clone(), arms)).collect()
            }
            SessionType::Tensor(a, cc) => {
                let u = self.fresh("q");
                let w = self.fresh("p");
                let z = self.fresh("q");
                let x1 = self.fresh("p");
                let pa = self.peers(&w, a, c, depth);
                let pc = self.peers(&x1, cc, c, depth);
                let mut out = Vec::new();
                for qa in &pa {
                    for qc in &pc {
                        out.push(Process::res(
                            u.clone(),
                            w.clone(),
                            a.dual(),
                            c.clone(),
                            Process::res(
                                z.clone(),
                                x1.clone(),
                                cc.dual(),
                                c.clone(),
                                Process::par_all([
                                    Process::send(x.clone(), u.clone(), z.clone()),
                                    qa.clone(),
                                    qc.clone(),
                                ]),
                            ),
                        ));
                    }
                }
                out
            }
            SessionType::Par(a, cc) => {
                let v = self.fresh("p");
                let y1 = self.fresh("p");
                let pa = self.peers(&v, a, c, depth);
                let pc = self.peers(&y1, cc, c, depth);
                let mut out = Vec::new();
                for qa in &pa {
                    for qc in &pc {
                        out.push(Process::recv(
                            x.clone(),
                            v.clone(),
                            y1.clone(),
                            Process::par(qa.clone(), qc.clone()),
                        ));
                    }
                }
                out
            }
        }
    }
}

fn product<A: Clone, B>(xs: &[A], ys: &[B], f: impl Fn(A, &B) -> A) -> Vec<A> {
    let mut out = Vec::new();
    for x in xs {
        for y in ys {
            out.push(f(x.clone(), y));
        }
    }
    out
}

/// One peer choice per interface name, wrapped into a context around the
/// hole.
fn assemble(slots: &[(Name, Name, SessionType, Level)], peers: &[&Process]) -> EvalContext {
    let mut e = EvalContext::Hole;
    for q in peers {
        e = EvalContext::ParL(Box::new(e), (*q).clone());
    }
    for (x, mate, ty, c) in slots.iter().rev() {
        e = EvalContext::Res {
            x: x.clone(),
            y: mate.clone(),
            ty: ty.clone(),
            level: c.clone(),
            body: Box::new(e),
        };
    }
    e
}

fn choices(options: &[Vec<Process>]) -> Vec<Vec<&Process>> {
    let mut out: Vec<Vec<&Process>> = vec![Vec::new()];
    for opts in options {
        out = out
            .iter()
            .flat_map(|acc| opts.iter().map(move |q| acc.iter().copied().chain([q]).collect()))
            .collect();
    }
    out
}

fn thin<T>(xs: Vec<T>, cap: usize) -> Vec<T> {
    let n = xs.len();
    if n <= cap {
        return xs;
    }
    let keep: BTreeSet<usize> = (0..cap).map(|i| i * n / cap).collect();
    xs.into_iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, x)| x).collect()
}

/// Closing context pairs for processes with interfaces `g1`, `g2`. Names
/// observable at `xi` get the same peer on both sides; the others vary
/// independently. `avoid` holds every name used by the processes.
pub fn enumerate_contexts(
    lattice: &SecrecyLattice,
    xi: &Level,
    g1: &TypingContext,
    g2: &TypingContext,
    avoid: &BTreeSet<Name>,
    params: EnumerationParams,
) -> Result<Vec<ContextPair>, SecurityError> {
    if g1.project(lattice, xi)? != g2.project(lattice, xi)? {
        return Err(SecurityError::ProjectionMismatch {
            left: crate::semantics::network::print_gamma(&g1.project(lattice, xi)?),
            right: crate::semantics::network::print_gamma(&g2.project(lattice, xi)?),
        });
    }
    let mut avoid = avoid.clone();
    avoid.extend(g1.names().cloned());
    avoid.extend(g2.names().cloned());

    let mate = |x: &Name, avoid: &mut BTreeSet<Name>| {
        let m = Name::new(format!("{x}'"));
        let m = if avoid.contains(&m) { fresh_name(&m, avoid) } else { m };
        avoid.insert(m.clone());
        m
    };

    let mut observable = Vec::new();
    let mut obs_slots = Vec::new();
    for (x, b) in g1.project(lattice, xi)?.iter() {
        let m = mate(x, &mut avoid);
        let mut pb = PeerBuilder { avoid: &mut avoid };
        observable.push(pb.peers(&m, &b.ty.dual(), &b.level, params.depth));
        obs_slots.push((x.clone(), m, b.ty.clone(), b.level.clone()));
    }

    let hidden = |g: &TypingContext, avoid: &mut BTreeSet<Name>| -> Result<_, SecurityError> {
        let mut slots = Vec::new();
        let mut opts = Vec::new();
        for (x, b) in g.iter() {
            if lattice.leq(&b.level, xi)? {
                continue;
            }
            let m = mate(x, avoid);
            let mut pb = PeerBuilder { avoid };
            opts.push(pb.peers(&m, &b.ty.dual(), &b.level, params.depth));
            slots.push((x.clone(), m, b.ty.clone(), b.level.clone()));
        }
        Ok((slots, opts))
    };
    let (slots1, hidden1) = hidden(g1, &mut avoid.clone())?;
    let (slots2, hidden2) = hidden(g2, &mut avoid.clone())?;

    let mut pairs = Vec::new();
    let left_slots: Vec<_> = obs_slots.iter().chain(&slots1).cloned().collect();
    let right_slots: Vec<_> = obs_slots.iter().chain(&slots2).cloned().collect();
    let hidden1 = choices(&hidden1);
    let hidden2 = choices(&hidden2);
    for o in choices(&observable) {
        for h1 in &hidden1 {
            for h2 in &hidden2 {
                let l: Vec<&Process> = o.iter().chain(h1).copied().collect();
                let r: Vec<&Process> = o.iter().chain(h2).copied().collect();
                pairs.push(ContextPair {
                    left: assemble(&left_slots, &l),
                    right: assemble(&right_slots, &r),
                });
            }
        }
    }
    Ok(thin(pairs, params.cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{check, check_closed};
    use crate::surface::parse_type;

    fn l(s: &str) -> Level {
        Level::new(s)
    }

    #[test]
    fn peers_check_against_the_dual() {
        let o = SecrecyLattice::two_point();
        for t in [
            "end!",
            "+{ a: end!, b: end? }",
            "&{ a: end!, b: +{ c: end!, d: end! } }",
            "end! * &{ l: end? }",
            "+{ a: end? } @ end!",
        ] {
            let a = parse_type(t).unwrap();
            let x = Name::new("x");
            let mut avoid = BTreeSet::from([x.clone()]);
            let ps = PeerBuilder { avoid: &mut avoid }.peers(&x, &a, &l("H"), 2);
            assert!(!ps.is_empty());
            for p in ps {
                let g = TypingContext::new().with("x", a.clone(), "H");
                assert!(check(&o, &p, &l("L"), &g).is_ok(), "{p} against {t}");
            }
        }
    }

    #[test]
    fn selections_are_enumerated_to_depth() {
        let a = parse_type("+{ a: +{ c: end!, d: end! }, b: end! }").unwrap();
        let x = Name::new("x");
        let count = |depth| PeerBuilder { avoid: &mut BTreeSet::from([x.clone()]) }.peers(&x, &a, &l("L"), depth).len();
        assert_eq!(count(0), 1);
        assert_eq!(count(1), 2);
        assert_eq!(count(2), 3);
    }

    #[test]
    fn observable_peers_agree() {
        let o = SecrecyLattice::two_point();
        let sel = parse_type("+{ a: end!, b: end! }").unwrap();
        let g1 = TypingContext::new().with("o", sel.dual(), "L").with("h", sel.dual(), "H");
        let g2 = g1.clone();
        let pairs = enumerate_contexts(&o, &l("L"), &g1, &g2, &BTreeSet::new(), EnumerationParams::default()).unwrap();
        // two observable choices times two by two hidden ones
        assert_eq!(pairs.len(), 8);
        for p in &pairs {
            let peer_of = |e: &EvalContext| e.siblings().iter().map(|s| s.to_string()).collect::<Vec<_>>();
            assert_eq!(peer_of(&p.left)[0], peer_of(&p.right)[0]);
        }
        assert!(pairs.iter().any(|p| p.left != p.right));
        let q = crate::surface::parse_process("o?(z){ a: wait z; 0, b: wait z; 0 } | h?(w){ a: wait w; 0, b: wait w; 0 }").unwrap();
        for p in &pairs {
            assert!(check_closed(&o, &p.left.plug(&q), &l("L")).is_ok());
        }
    }

    #[test]
    fn mismatched_projections_are_rejected() {
        let o = SecrecyLattice::two_point();
        let g1 = TypingContext::new().with("o", SessionType::One, "L");
        let g2 = TypingContext::new().with("o", SessionType::Bot, "L");
        let r = enumerate_contexts(&o, &l("L"), &g1, &g2, &BTreeSet::new(), EnumerationParams::default());
        assert!(matches!(r, Err(SecurityError::ProjectionMismatch { .. })));
    }

    #[test]
    fn thinning_is_even_and_capped() {
        let xs: Vec<usize> = (0..10).collect();
        let t = thin(xs.clone(), 5);
        assert_eq!(t.len(), 5);
        assert_eq!(thin(xs, 20).len(), 10);
    }
}
