use std::fmt::{self, Write};

use super::{DeclBody, SourceFile};
use crate::semantics::context::EvalContext;
use crate::syntax::Process;
use crate::types::SessionType;

pub fn print_type(t: &SessionType) -> String {
    t.to_string()
}

pub fn print_process(p: &Process) -> String {
    p.to_string()
}

pub fn print_context(e: &EvalContext) -> String {
    e.to_string()
}

pub fn print_source(f: &SourceFile) -> String {
    let mut out = String::from("lattice { ");
    let mut items: Vec<String> = f
        .lattice
        .covering_edges()
        .iter()
        .map(|(a, b)| format!("{a} < {b}"))
        .collect();
    items.extend(f.lattice.isolated_levels().iter().map(|l| l.to_string()));
    out.push_str(&items.join("; "));
    out.push_str(" }\n");
    for (name, t) in &f.aliases {
        let _ = writeln!(out, "type {name} = {t}");
    }
    for d in &f.decls {
        let params: Vec<String> = d
            .params
            .iter()
            .map(|(x, b)| format!("{x} : {} [{}]", b.ty, b.level))
            .collect();
        let body = match &d.body {
            DeclBody::Process(p) => p.to_string(),
            DeclBody::Context(e) => e.to_string(),
        };
        let _ = writeln!(out, "proc {} ({}) @ {} = {}", d.name, params.join(", "), d.level, body);
    }
    out
}

fn write_arms(f: &mut fmt::Formatter<'_>, sigil: char, arms: &std::collections::BTreeMap<crate::syntax::Label, SessionType>) -> fmt::Result {
    write!(f, "{sigil}{{ ")?;
    for (i, (l, a)) in arms.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{l}: {a}")?;
    }
    write!(f, " }}")
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionType::One => write!(f, "end!"),
            SessionType::Bot => write!(f, "end?"),
            SessionType::Plus(arms) => write_arms(f, '+', arms),
            SessionType::With(arms) => write_arms(f, '&', arms),
            SessionType::Tensor(a, b) => {
                if matches!(**a, SessionType::Tensor(..) | SessionType::Par(..)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                if matches!(**b, SessionType::Par(..)) {
                    write!(f, " * ({b})")
                } else {
                    write!(f, " * {b}")
                }
            }
            SessionType::Par(a, b) => {
                if matches!(**a, SessionType::Par(..)) {
                    write!(f, "({a}) @ {b}")
                } else {
                    write!(f, "{a} @ {b}")
                }
            }
        }
    }
}

/// Writes `p` where a unary form is expected.
fn unary(f: &mut fmt::Formatter<'_>, p: &Process) -> fmt::Result {
    if matches!(p, Process::Par(..)) {
        write!(f, "({p})")
    } else {
        write!(f, "{p}")
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Process::Inaction => write!(f, "0"),
            Process::Par(p, q) => {
                unary(f, p)?;
                write!(f, " | {q}")
            }
            Process::Res { x, y, ty, level, body } => {
                write!(f, "new ({x} : {ty} [{level}]) {y} . ")?;
                unary(f, body)
            }
            Process::Close(x) if x.as_str() == "#hole" => write!(f, "hole"),
            Process::Close(x) => write!(f, "close {x}"),
            Process::Wait(x, p) => {
                write!(f, "wait {x}; ")?;
                unary(f, p)
            }
            Process::Select { x, cont, label } => write!(f, "{x}!{label}({cont})"),
            Process::Branch { x, z, arms } => {
                write!(f, "{x}?({z}){{ ")?;
                for (i, (l, p)) in arms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{l}: {p}")?;
                }
                write!(f, " }}")
            }
            Process::Send { x, payload, cont } => write!(f, "send {x}({payload}, {cont})"),
            Process::Recv { x, y, z, body } => {
                write!(f, "recv {x}({y}, {z}); ")?;
                unary(f, body)
            }
        }
    }
}

impl fmt::Display for EvalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let marked = self.plug(&crate::semantics::context::hole_marker());
        write!(f, "{marked}")
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, parse_process, parse_type};
    use super::*;
    use crate::lattice::Level;

    #[test]
    fn examples() {
        assert_eq!(Process::Inaction.to_string(), "0");
        let t = SessionType::plus([("act", SessionType::One), ("wait", SessionType::One)]);
        assert_eq!(t.to_string(), "+{ act: end!, wait: end! }");
        let p = Process::res("x", "y", t, Level::new("H"), Process::close("x"));
        assert_eq!(p.to_string(), "new (x : +{ act: end!, wait: end! } [H]) y . close x");
    }

    #[test]
    fn nested_types_round_trip() {
        use SessionType::*;
        let ts = [
            SessionType::tensor(SessionType::tensor(One, Bot), One),
            SessionType::tensor(One, SessionType::par(Bot, One)),
            SessionType::par(SessionType::par(One, Bot), One),
            SessionType::par(SessionType::tensor(One, Bot), SessionType::tensor(Bot, One)),
            SessionType::with([("a", SessionType::par(One, Bot))]),
        ];
        for t in ts {
            assert_eq!(parse_type(&t.to_string()).unwrap(), t, "{t}");
        }
    }

    #[test]
    fn nested_processes_round_trip() {
        let p = Process::wait(
            "x",
            Process::par(Process::par(Process::close("a"), Process::close("b")), Process::Inaction),
        );
        assert_eq!(parse_process(&p.to_string()).unwrap(), p);
        let b = Process::branch(
            "x",
            "z",
            [
                ("l", Process::par(Process::close("z"), Process::close("u"))),
                ("m", Process::wait("z", Process::close("u"))),
            ],
        );
        assert_eq!(parse_process(&b.to_string()).unwrap(), b);
    }

    #[test]
    fn source_round_trip() {
        let text = "lattice { M < H; L < M; X }\n\
                    type T = +{ b: end!, a: end? * end! }\n\
                    proc P (x : T [L]) @ L = x!a(b) | 0\n\
                    proc C () @ H = new (u : end! [H]) v . (close u | hole)\n";
        let f = parse(text);
        // `X` is isolated, so `{L,M,H,X}` has no join: expect a lattice error.
        assert!(f.is_err());
        let text = text.replace("; X", "");
        let f = parse(&text).unwrap();
        let g = parse(&print_source(&f)).unwrap();
        assert_eq!(f.lattice, g.lattice);
        assert_eq!(f.aliases, g.aliases);
        assert_eq!(f.decls.len(), g.decls.len());
        for (a, b) in f.decls.iter().zip(&g.decls) {
            assert_eq!((&a.name, &a.params, &a.level, &a.body), (&b.name, &b.params, &b.level, &b.body));
        }
    }
}
