//! Syntax-directed IFC type checking and identity-expanded forwarders.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::lattice::{LatticeError, Level, SecrecyLattice};
use crate::syntax::{fresh_name, Name, Process};
use crate::types::{Binding, SessionType, TypingContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    #[serde(rename = "typ-inact")]
    Inact,
    #[serde(rename = "typ-par")]
    Par,
    #[serde(rename = "typ-res")]
    Res,
    #[serde(rename = "typ-close")]
    Close,
    #[serde(rename = "typ-wait")]
    Wait,
    #[serde(rename = "typ-sel")]
    Sel,
    #[serde(rename = "typ-bra")]
    Bra,
    #[serde(rename = "typ-send")]
    Send,
    #[serde(rename = "typ-recv")]
    Recv,
}

impl Rule {
    pub fn for_process(p: &Process) -> Rule {
        match p {
            Process::Inaction => Rule::Inact,
            Process::Par(..) => Rule::Par,
            Process::Res { .. } => Rule::Res,
            Process::Close(_) => Rule::Close,
            Process::Wait(..) => Rule::Wait,
            Process::Select { .. } => Rule::Sel,
            Process::Branch { .. } => Rule::Bra,
            Process::Send { .. } => Rule::Send,
            Process::Recv { .. } => Rule::Recv,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::Inact => "typ-inact",
            Rule::Par => "typ-par",
            Rule::Res => "typ-res",
            Rule::Close => "typ-close",
            Rule::Wait => "typ-wait",
            Rule::Sel => "typ-sel",
            Rule::Bra => "typ-bra",
            Rule::Send => "typ-send",
            Rule::Recv => "typ-recv",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A lattice comparison `lhs ⊑ rhs` checked while building a derivation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SideCondition {
    pub lhs: Level,
    pub rhs: Level,
    pub holds: bool,
}

impl fmt::Display for SideCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.holds { "⊑" } else { "⋢" };
        write!(f, "{} {op} {}", self.lhs, self.rhs)
    }
}

/// `Ω ⊢ P @ d :: Γ`; the lattice is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub process: Process,
    pub running: Level,
    pub context: TypingContext,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: Judgment,
    pub premises: Vec<Derivation>,
    pub side_conditions: Vec<SideCondition>,
}

impl Derivation {
    /// All side conditions of the tree in preorder.
    pub fn all_side_conditions(&self) -> Vec<(Rule, SideCondition)> {
        let mut out = Vec::new();
        self.walk(&mut |d| {
            for s in &d.side_conditions {
                out.push((d.rule, s.clone()));
            }
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Derivation)) {
        f(self);
        for p in &self.premises {
            p.walk(f);
        }
    }

    /// One line per rule application, indented by depth.
    pub fn trace_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.trace_into(0, &mut out);
        out
    }

    fn trace_into(&self, depth: usize, out: &mut Vec<String>) {
        let ctx: Vec<String> = self
            .conclusion
            .context
            .iter()
            .map(|(x, b)| format!("{x}:{}[{}]", b.ty, b.level))
            .collect();
        let mut line = format!("{}{} @ {} :: {{{}}}", "  ".repeat(depth), self.rule, self.conclusion.running, ctx.join(", "));
        if !self.side_conditions.is_empty() {
            let sc: Vec<String> = self.side_conditions.iter().map(ToString::to_string).collect();
            line.push_str(&format!("  [{}]", sc.join(", ")));
        }
        out.push(line);
        for p in &self.premises {
            p.trace_into(depth + 1, out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeErrorKind {
    UnboundName,
    Linearity,
    TypeMismatch,
    Secrecy,
    LabelMismatch,
    DualMismatch,
    UnknownLevel,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeErrorKind::UnboundName => "unbound name",
            TypeErrorKind::Linearity => "linearity violation",
            TypeErrorKind::TypeMismatch => "type mismatch",
            TypeErrorKind::Secrecy => "secrecy violation",
            TypeErrorKind::LabelMismatch => "label mismatch",
            TypeErrorKind::DualMismatch => "dual mismatch",
            TypeErrorKind::UnknownLevel => "unknown level",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} in {rule}: {message}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub rule: Rule,
    pub message: String,
    /// Child indices from the checked root to the offending subterm.
    pub path: Vec<usize>,
    pub subterm: Process,
    /// For secrecy violations: the failed comparison `lhs ⋢ rhs`.
    pub comparison: Option<(Level, Level)>,
}

struct Ctx<'a> {
    lattice: &'a SecrecyLattice,
    errors: Vec<TypeError>,
}

impl Ctx<'_> {
    fn err(&mut self, kind: TypeErrorKind, p: &Process, path: &[usize], message: String) {
        self.errors.push(TypeError {
            kind,
            rule: Rule::for_process(p),
            message,
            path: path.to_vec(),
            subterm: p.clone(),
            comparison: None,
        });
    }

    fn leq(&mut self, p: &Process, path: &[usize], lhs: &Level, rhs: &Level, what: &str) -> Option<SideCondition> {
        match self.lattice.leq(lhs, rhs) {
            Ok(holds) => {
                if !holds {
                    self.errors.push(TypeError {
                        kind: TypeErrorKind::Secrecy,
                        rule: Rule::for_process(p),
                        message: format!("running secrecy {lhs} is not below level {rhs} of {what} ({lhs} ⋢ {rhs})"),
                        path: path.to_vec(),
                        subterm: p.clone(),
                        comparison: Some((lhs.clone(), rhs.clone())),
                    });
                }
                Some(SideCondition {
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                    holds,
                })
            }
            Err(e) => {
                self.err(TypeErrorKind::UnknownLevel, p, path, e.to_string());
                None
            }
        }
    }

    fn join(&mut self, p: &Process, path: &[usize], a: &Level, b: &Level) -> Option<Level> {
        match self.lattice.join(a, b) {
            Ok(l) => Some(l),
            Err(e) => {
                self.err(TypeErrorKind::UnknownLevel, p, path, e.to_string());
                None
            }
        }
    }

    /// Looks up `x`, reporting an unbound-name error when absent.
    fn lookup(&mut self, p: &Process, path: &[usize], g: &TypingContext, x: &Name) -> Option<Binding> {
        match g.get(x) {
            Some(b) => Some(b.clone()),
            None => {
                self.err(TypeErrorKind::UnboundName, p, path, format!("name `{x}` is not in the typing context"));
                None
            }
        }
    }

    /// Reports context entries beyond `used`.
    fn exact(&mut self, p: &Process, path: &[usize], g: &TypingContext, used: &[&Name]) -> bool {
        let extra: Vec<String> = g.names().filter(|n| !used.contains(n)).map(|n| format!("`{n}`")).collect();
        if extra.is_empty() {
            true
        } else {
            self.err(
                TypeErrorKind::Linearity,
                p,
                path,
                format!("unused name(s) {} in the typing context", extra.join(", ")),
            );
            false
        }
    }

    fn expect_ty(&mut self, p: &Process, path: &[usize], x: &Name, got: &SessionType, want: &SessionType, kind: TypeErrorKind) -> bool {
        if got == want {
            true
        } else {
            self.err(kind, p, path, format!("`{x}` has type {got}, expected {want}"));
            false
        }
    }

    fn expect_level(&mut self, p: &Process, path: &[usize], x: &Name, got: &Level, want: &Level) -> bool {
        if got == want {
            true
        } else {
            self.err(
                TypeErrorKind::TypeMismatch,
                p,
                path,
                format!("`{x}` has level {got}, expected {want}"),
            );
            false
        }
    }

    fn distinct(&mut self, p: &Process, path: &[usize], names: &[&Name]) -> bool {
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                self.err(TypeErrorKind::Linearity, p, path, format!("name `{a}` used twice in one prefix"));
                return false;
            }
        }
        true
    }

    fn extend(&mut self, p: &Process, path: &[usize], g: &mut TypingContext, x: &Name, b: Binding) -> bool {
        if let Err(e) = g.insert(x.clone(), b) {
            self.err(TypeErrorKind::Linearity, p, path, format!("binder shadows an interface name: {e}"));
            return false;
        }
        true
    }

    fn check(&mut self, p: &Process, d: &Level, g: &TypingContext, path: &mut Vec<usize>) -> Option<Derivation> {
        let before = self.errors.len();
        let mut premises = Vec::new();
        let mut sides = Vec::new();
        match p {
            Process::Inaction => {
                self.exact(p, path, g, &[]);
            }
            Process::Par(l, r) => {
                let fl = l.free_names();
                let fr = r.free_names();
                let mut gl = TypingContext::new();
                let mut gr = TypingContext::new();
                for (x, b) in g {
                    match (fl.contains(x), fr.contains(x)) {
                        (true, true) => self.err(
                            TypeErrorKind::Linearity,
                            p,
                            path,
                            format!("name `{x}` is used on both sides of a parallel composition"),
                        ),
                        (true, false) => {
                            let _ = gl.insert(x.clone(), b.clone());
                        }
                        (false, true) => {
                            let _ = gr.insert(x.clone(), b.clone());
                        }
                        (false, false) => self.err(
                            TypeErrorKind::Linearity,
                            p,
                            path,
                            format!("unused name(s) `{x}` in the typing context"),
                        ),
                    }
                }
                for (i, (q, gq)) in [(l, gl), (r, gr)].into_iter().enumerate() {
                    path.push(i);
                    if let Some(dq) = self.check(q, d, &gq, path) {
                        premises.push(dq);
                    }
                    path.pop();
                }
            }
            Process::Res { x, y, ty, level, body } => {
                if x == y {
                    self.err(TypeErrorKind::Linearity, p, path, format!("restriction endpoints must differ, both are `{x}`"));
                } else if !self.lattice.contains(level) {
                    self.err(TypeErrorKind::UnknownLevel, p, path, LatticeError::UnknownLevel(level.clone()).to_string());
                } else {
                    let mut g2 = g.clone();
                    if self.extend(p, path, &mut g2, x, Binding::new(ty.clone(), level.clone()))
                        && self.extend(p, path, &mut g2, y, Binding::new(ty.dual(), level.clone()))
                    {
                        path.push(0);
                        if let Some(db) = self.check(body, d, &g2, path) {
                            premises.push(db);
                        }
                        path.pop();
                    }
                }
            }
            Process::Close(x) => {
                if let Some(b) = self.lookup(p, path, g, x) {
                    self.expect_ty(p, path, x, &b.ty, &SessionType::One, TypeErrorKind::TypeMismatch);
                    self.exact(p, path, g, &[x]);
                    sides.extend(self.leq(p, path, d, &b.level, &format!("`{x}`")));
                }
            }
            Process::Wait(x, body) => {
                if let Some(b) = self.lookup(p, path, g, x) {
                    if self.expect_ty(p, path, x, &b.ty, &SessionType::Bot, TypeErrorKind::TypeMismatch) {
                        if let Some(d2) = self.join(p, path, d, &b.level) {
                            let mut g2 = g.clone();
                            g2.remove(x);
                            path.push(0);
                            if let Some(db) = self.check(body, &d2, &g2, path) {
                                premises.push(db);
                            }
                            path.pop();
                        }
                    }
                }
            }
            Process::Select { x, cont, label } => {
                if self.distinct(p, path, &[x, cont]) {
                    if let Some(b) = self.lookup(p, path, g, x) {
                        match &b.ty {
                            SessionType::Plus(arms) => match arms.get(label) {
                                Some(aj) => {
                                    if let Some(bc) = self.lookup(p, path, g, cont) {
                                        self.expect_ty(p, path, cont, &bc.ty, &aj.dual(), TypeErrorKind::DualMismatch);
                                        self.expect_level(p, path, cont, &bc.level, &b.level);
                                    }
                                    self.exact(p, path, g, &[x, cont]);
                                    sides.extend(self.leq(p, path, d, &b.level, &format!("`{x}`")));
                                }
                                None => self.err(
                                    TypeErrorKind::LabelMismatch,
                                    p,
                                    path,
                                    format!("label `{label}` is not offered by `{x}` : {}", b.ty),
                                ),
                            },
                            other => self.err(
                                TypeErrorKind::TypeMismatch,
                                p,
                                path,
                                format!("`{x}` has type {other}, expected a selection type +{{...}}"),
                            ),
                        }
                    }
                }
            }
            Process::Branch { x, z, arms } => {
                if let Some(b) = self.lookup(p, path, g, x) {
                    match &b.ty {
                        SessionType::With(tarms) => {
                            let want: BTreeSet<_> = tarms.keys().collect();
                            let got: BTreeSet<_> = arms.keys().collect();
                            if want != got {
                                let show = |s: &BTreeSet<_>| s.iter().map(|l| format!("{l}")).collect::<Vec<_>>().join(", ");
                                self.err(
                                    TypeErrorKind::LabelMismatch,
                                    p,
                                    path,
                                    format!("branch offers labels {{{}}} but `{x}` expects {{{}}}", show(&got), show(&want)),
                                );
                            } else if let Some(d2) = self.join(p, path, d, &b.level) {
                                let mut base = g.clone();
                                base.remove(x);
                                for (i, (l, q)) in arms.iter().enumerate() {
                                    let mut g2 = base.clone();
                                    if !self.extend(p, path, &mut g2, z, Binding::new(tarms[l].clone(), b.level.clone())) {
                                        break;
                                    }
                                    path.push(i);
                                    if let Some(dq) = self.check(q, &d2, &g2, path) {
                                        premises.push(dq);
                                    }
                                    path.pop();
                                }
                            }
                        }
                        other => self.err(
                            TypeErrorKind::TypeMismatch,
                            p,
                            path,
                            format!("`{x}` has type {other}, expected a branching type &{{...}}"),
                        ),
                    }
                }
            }
            Process::Send { x, payload, cont } => {
                if self.distinct(p, path, &[x, payload, cont]) {
                    if let Some(b) = self.lookup(p, path, g, x) {
                        match &b.ty {
                            SessionType::Tensor(ta, tb) => {
                                for (n, t) in [(payload, ta), (cont, tb)] {
                                    if let Some(bn) = self.lookup(p, path, g, n) {
                                        self.expect_ty(p, path, n, &bn.ty, &t.dual(), TypeErrorKind::DualMismatch);
                                        self.expect_level(p, path, n, &bn.level, &b.level);
                                    }
                                }
                                self.exact(p, path, g, &[x, payload, cont]);
                                sides.extend(self.leq(p, path, d, &b.level, &format!("`{x}`")));
                            }
                            other => self.err(
                                TypeErrorKind::TypeMismatch,
                                p,
                                path,
                                format!("`{x}` has type {other}, expected an output type _ * _"),
                            ),
                        }
                    }
                }
            }
            Process::Recv { x, y, z, body } => {
                if self.distinct(p, path, &[y, z]) {
                    if let Some(b) = self.lookup(p, path, g, x) {
                        match &b.ty {
                            SessionType::Par(ta, tb) => {
                                if let Some(d2) = self.join(p, path, d, &b.level) {
                                    let mut g2 = g.clone();
                                    g2.remove(x);
                                    if self.extend(p, path, &mut g2, y, Binding::new((**ta).clone(), b.level.clone()))
                                        && self.extend(p, path, &mut g2, z, Binding::new((**tb).clone(), b.level.clone()))
                                    {
                                        path.push(0);
                                        if let Some(db) = self.check(body, &d2, &g2, path) {
                                            premises.push(db);
                                        }
                                        path.pop();
                                    }
                                }
                            }
                            other => self.err(
                                TypeErrorKind::TypeMismatch,
                                p,
                                path,
                                format!("`{x}` has type {other}, expected an input type _ @ _"),
                            ),
                        }
                    }
                }
            }
        }
        if self.errors.len() > before {
            return None;
        }
        Some(Derivation {
            rule: Rule::for_process(p),
            conclusion: Judgment {
                process: p.clone(),
                running: d.clone(),
                context: g.clone(),
            },
            premises,
            side_conditions: sides,
        })
    }
}

/// Decides `Ω ⊢ p @ d :: Γ`. On failure every independent error is reported,
/// in leftmost order.
pub fn check(lattice: &SecrecyLattice, p: &Process, d: &Level, g: &TypingContext) -> Result<Derivation, Vec<TypeError>> {
    let mut cx = Ctx {
        lattice,
        errors: Vec::new(),
    };
    let mut bad_levels = Vec::new();
    if !lattice.contains(d) {
        bad_levels.push(d.clone());
    }
    for (_, b) in g {
        if !lattice.contains(&b.level) {
            bad_levels.push(b.level.clone());
        }
    }
    for l in bad_levels {
        cx.err(TypeErrorKind::UnknownLevel, p, &[], LatticeError::UnknownLevel(l).to_string());
    }
    if !cx.errors.is_empty() {
        return Err(cx.errors);
    }
    let mut path = Vec::new();
    match cx.check(p, d, g, &mut path) {
        Some(der) if cx.errors.is_empty() => Ok(der),
        _ => Err(cx.errors),
    }
}

pub fn check_closed(lattice: &SecrecyLattice, p: &Process, d: &Level) -> Result<Derivation, Vec<TypeError>> {
    check(lattice, p, d, &TypingContext::new())
}

/// Which side conditions a check enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discipline {
    /// Session typing and every secrecy side condition.
    Secure,
    /// Session typing only; secrecy violations are tolerated.
    SessionOnly,
}

/// `check` under a discipline, keeping only the errors it enforces.
pub fn check_with(
    lattice: &SecrecyLattice,
    p: &Process,
    d: &Level,
    g: &TypingContext,
    discipline: Discipline,
) -> Result<(), Vec<TypeError>> {
    match check(lattice, p, d, g) {
        Ok(_) => Ok(()),
        Err(mut es) => {
            if discipline == Discipline::SessionOnly {
                es.retain(|e| e.kind != TypeErrorKind::Secrecy);
            }
            if es.is_empty() {
                Ok(())
            } else {
                Err(es)
            }
        }
    }
}

pub fn is_well_typed(lattice: &SecrecyLattice, p: &Process, d: &Level, g: &TypingContext) -> bool {
    check(lattice, p, d, g).is_ok()
}

struct Expander {
    avoid: BTreeSet<Name>,
}

impl Expander {
    /// `stem` itself when unused, otherwise a suffixed variant.
    fn pick(&mut self, stem: &str) -> Name {
        let n = Name::new(stem);
        let n = if self.avoid.contains(&n) { fresh_name(&n, &self.avoid) } else { n };
        self.avoid.insert(n.clone());
        n
    }

    fn suffixed(&mut self, base: &Name) -> Name {
        let n = fresh_name(base, &self.avoid);
        self.avoid.insert(n.clone());
        n
    }

    fn expand(&mut self, x: &Name, y: &Name, a: &SessionType, c: &Level) -> Process {
        match a {
            SessionType::One => Process::wait(y.clone(), Process::Close(x.clone())),
            SessionType::Tensor(b, cc) => {
                let v = self.pick("v");
                let y1 = self.suffixed(y);
                let u = self.pick("u");
                let w = self.pick("w");
                let z = self.pick("z");
                let x1 = self.suffixed(x);
                let fwd_b = self.expand(&w, &v, b, c);
                let fwd_c = self.expand(&x1, &y1, cc, c);
                Process::recv(
                    y.clone(),
                    v,
                    y1,
                    Process::res(
                        u.clone(),
                        w,
                        b.dual(),
                        c.clone(),
                        Process::res(
                            z.clone(),
                            x1,
                            cc.dual(),
                            c.clone(),
                            Process::par_all([Process::send(x.clone(), u, z), fwd_b, fwd_c]),
                        ),
                    ),
                )
            }
            SessionType::Plus(arms) => {
                let y1 = self.suffixed(y);
                let mut out = Vec::new();
                for (l, ai) in arms {
                    let z = self.pick("z");
                    let x1 = self.suffixed(x);
                    let fwd = self.expand(&x1, &y1, ai, c);
                    out.push((
                        l.clone(),
                        Process::res(
                            z.clone(),
                            x1,
                            ai.dual(),
                            c.clone(),
                            Process::par(Process::select(x.clone(), z, l.clone()), fwd),
                        ),
                    ));
                }
                Process::branch(y.clone(), y1, out)
            }
            negative => self.expand(y, x, &negative.dual(), c),
        }
    }
}

/// Identity-expanded forwarder between `x : a[c]` and `y : dual(a)[c]`.
pub fn expand_forwarder(x: &Name, y: &Name, a: &SessionType, c: &Level) -> Process {
    let mut e = Expander {
        avoid: BTreeSet::from([x.clone(), y.clone()]),
    };
    e.expand(x, y, a, c)
}
