//! Deadlock-sensitive noninterference over a family of closing contexts,
//! and the instance check of the fundamental theorem.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::checker::{check_with, Discipline, Judgment};
use crate::lattice::{Level, SecrecyLattice};
use crate::semantics::network::{print_gamma, Network};
use crate::syntax::Name;

use super::contexts::{enumerate_contexts, ContextPair, ContextSpec, PrintedPair};
use super::relation::{RelationVerdict, Relator};
use super::relevance::observably_equivalent_with;
use super::SecurityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone, Serialize)]
pub struct DsniReport {
    pub related: bool,
    pub observer: Level,
    pub discipline: Discipline,
    pub contexts_checked: usize,
    pub failing_context: Option<usize>,
    pub direction: Option<Direction>,
    pub context_pair: Option<PrintedPair>,
    pub verdict: RelationVerdict,
}

/// The weakest discipline under which both judgments check, with a note
/// when secrecy had to be dropped.
pub fn weakest_discipline(lattice: &SecrecyLattice, js: [&Judgment; 2]) -> Result<(Discipline, Option<String>), SecurityError> {
    let ill = |j: &Judgment, d: Discipline| check_with(lattice, &j.process, &j.running, &j.context, d).err();
    if js.iter().all(|j| ill(j, Discipline::Secure).is_none()) {
        return Ok((Discipline::Secure, None));
    }
    for j in js {
        if let Some(es) = ill(j, Discipline::SessionOnly) {
            return Err(SecurityError::IllTyped(es[0].to_string()));
        }
    }
    Ok((
        Discipline::SessionOnly,
        Some("secrecy side conditions fail on an input; compared under session typing only".to_string()),
    ))
}

fn all_names(js: [&Judgment; 2]) -> BTreeSet<Name> {
    let mut s = BTreeSet::new();
    for j in js {
        s.extend(j.process.all_names());
        s.extend(j.context.names().cloned());
    }
    s
}

/// `P1 ≡ξ P2` over the given contexts: for every pair, each plugged
/// network's runs are caught up by the other's. The first failure is
/// reported.
pub fn dsni_equivalent(
    lattice: &SecrecyLattice,
    xi: &Level,
    j1: &Judgment,
    j2: &Judgment,
    ctxs: &ContextSpec,
) -> Result<DsniReport, SecurityError> {
    if !lattice.contains(xi) {
        return Err(SecurityError::UnknownLevel(xi.clone()));
    }
    let (p1, p2) = (j1.context.project(lattice, xi)?, j2.context.project(lattice, xi)?);
    if p1 != p2 {
        return Err(SecurityError::ProjectionMismatch {
            left: print_gamma(&p1),
            right: print_gamma(&p2),
        });
    }
    let (discipline, note) = weakest_discipline(lattice, [j1, j2])?;
    let pairs: Vec<ContextPair> = match ctxs {
        ContextSpec::Explicit(ps) => ps.clone(),
        ContextSpec::Enumerate(params) => {
            enumerate_contexts(lattice, xi, &j1.context, &j2.context, &all_names([j1, j2]), *params)?
        }
    };
    let mut rel = Relator::new();
    let mut verdict = RelationVerdict::related();
    if let Some(n) = &note {
        verdict = verdict.note(n.clone());
    }
    for (i, pair) in pairs.iter().enumerate() {
        let net = |e, p| {
            Network::new_with(lattice, xi, e, p, discipline).map_err(|source| SecurityError::Context { index: i, source })
        };
        let n1 = net(&pair.left, &j1.process)?;
        let n2 = net(&pair.right, &j2.process)?;
        for (dir, a, b) in [(Direction::LeftToRight, &n1, &n2), (Direction::RightToLeft, &n2, &n1)] {
            let v = rel.term_related(a, b);
            if !v.related {
                let mut v = v;
                if let Some(n) = &note {
                    v = v.note(n.clone());
                }
                return Ok(DsniReport {
                    related: false,
                    observer: xi.clone(),
                    discipline,
                    contexts_checked: i + 1,
                    failing_context: Some(i),
                    direction: Some(dir),
                    context_pair: Some(pair.into()),
                    verdict: v,
                });
            }
            verdict.absorb_notes(&v);
        }
    }
    Ok(DsniReport {
        related: true,
        observer: xi.clone(),
        discipline,
        contexts_checked: pairs.len(),
        failing_context: None,
        direction: None,
        context_pair: None,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FundamentalReport {
    /// Projections agree and the processes are observably equivalent.
    pub antecedent: bool,
    pub holds: bool,
    pub dsni: Option<DsniReport>,
}

/// Checks one instance of the fundamental theorem: observably equivalent
/// judgments with equal projections must be related.
pub fn fundamental_check(
    lattice: &SecrecyLattice,
    xi: &Level,
    j1: &Judgment,
    j2: &Judgment,
    ctxs: &ContextSpec,
) -> Result<FundamentalReport, SecurityError> {
    let vacuous = FundamentalReport {
        antecedent: false,
        holds: true,
        dsni: None,
    };
    if j1.context.project(lattice, xi)? != j2.context.project(lattice, xi)? {
        return Ok(vacuous);
    }
    let (discipline, _) = weakest_discipline(lattice, [j1, j2])?;
    if !observably_equivalent_with(lattice, xi, j1.into(), j2.into(), discipline)? {
        return Ok(vacuous);
    }
    let r = dsni_equivalent(lattice, xi, j1, j2, ctxs)?;
    Ok(FundamentalReport {
        antecedent: true,
        holds: r.related,
        dsni: Some(r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security::contexts::EnumerationParams;
    use crate::surface::parse_process;
    use crate::types::{SessionType, TypingContext};

    fn l(s: &str) -> Level {
        Level::new(s)
    }

    fn judgment(p: &str, g: TypingContext) -> Judgment {
        Judgment {
            process: parse_process(p).unwrap(),
            running: l("L"),
            context: g,
        }
    }

    fn enumerate() -> ContextSpec {
        ContextSpec::Enumerate(EnumerationParams::default())
    }

    #[test]
    fn self_check_on_a_branch() {
        let o = SecrecyLattice::two_point();
        let g = TypingContext::new()
            .with("a", SessionType::with([("l", SessionType::Bot), ("r", SessionType::Bot)]), "L")
            .with("b", SessionType::One, "L");
        let j = judgment("a?(z){ l: wait z; close b, r: wait z; close b }", g);
        let r = dsni_equivalent(&o, &l("L"), &j, &j, &enumerate()).unwrap();
        assert!(r.related, "{r:?}");
        assert_eq!(r.contexts_checked, 2);
        assert_eq!(r.discipline, Discipline::Secure);
    }

    #[test]
    fn observable_output_difference_fails() {
        let o = SecrecyLattice::two_point();
        let g = TypingContext::new().with("a", SessionType::plus([("l", SessionType::One), ("r", SessionType::One)]), "L");
        let j1 = judgment("new (c : end? [L]) d . (a!l(c) | close d)", g.clone());
        let j2 = judgment("new (c : end? [L]) d . (a!r(c) | close d)", g);
        let r = dsni_equivalent(&o, &l("L"), &j1, &j2, &enumerate()).unwrap();
        assert!(!r.related);
        assert_eq!(r.verdict.failed_clause.as_deref(), Some("oplus3"));
        assert_eq!(r.failing_context, Some(0));
        let f = fundamental_check(&o, &l("L"), &j1, &j2, &enumerate()).unwrap();
        assert!(!f.antecedent && f.holds);
    }

    #[test]
    fn hidden_selection_is_invisible() {
        let o = SecrecyLattice::two_point();
        let g = TypingContext::new().with("h", SessionType::plus([("l", SessionType::One), ("r", SessionType::One)]), "H");
        let j1 = judgment("new (c : end? [H]) d . (h!l(c) | close d)", g.clone());
        let j2 = judgment("new (c : end? [H]) d . (h!r(c) | close d)", g);
        let r = dsni_equivalent(&o, &l("L"), &j1, &j2, &enumerate()).unwrap();
        assert!(r.related, "{r:?}");
        let f = fundamental_check(&o, &l("L"), &j1, &j2, &enumerate()).unwrap();
        assert!(f.antecedent && f.holds);
    }

    #[test]
    fn projection_mismatch_is_a_precondition_failure() {
        let o = SecrecyLattice::two_point();
        let j1 = judgment("close a", TypingContext::new().with("a", SessionType::One, "L"));
        let j2 = judgment("close a", TypingContext::new().with("a", SessionType::One, "H"));
        let r = dsni_equivalent(&o, &l("L"), &j1, &j2, &enumerate());
        assert!(matches!(r, Err(SecurityError::ProjectionMismatch { .. })));
    }
}
