use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex, Tok, Token};
use super::{DeclBody, Diagnostic, ProcDecl, SourceFile, Span, SpanTree};
use crate::lattice::{Level, SecrecyLattice};
use crate::semantics::context::{hole_marker, EvalContext, SplitError};
use crate::syntax::{Label, Name, Process};
use crate::types::{Binding, SessionType};

const KEYWORDS: &[&str] = &["new", "close", "wait", "send", "recv", "lattice", "type", "proc", "end", "hole"];

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    aliases: BTreeMap<String, SessionType>,
    level_uses: Vec<(Level, Span)>,
    errors: Vec<Diagnostic>,
    holes: usize,
}

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            aliases: BTreeMap::new(),
            level_uses: Vec::new(),
            errors: Vec::new(),
            holes: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        Diagnostic::error(self.span(), format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn keyword(&mut self, w: &str) -> PResult<Span> {
        if self.is_word(w) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    /// Any identifier, keywords included.
    fn word(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Word(w) => {
                let s = self.bump().span;
                Ok((w, s))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// A non-keyword identifier.
    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek() {
            Tok::Word(w) if !KEYWORDS.contains(&w.as_str()) => self.word(what),
            _ => Err(self.unexpected(what)),
        }
    }

    fn name(&mut self) -> PResult<Name> {
        self.ident("a name").map(|(w, _)| Name::new(w))
    }

    fn level(&mut self) -> PResult<Level> {
        let (w, s) = self.ident("a secrecy level")?;
        let l = Level::new(w);
        self.level_uses.push((l.clone(), s));
        Ok(l)
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<SessionType> {
        let a = self.ty_tensor()?;
        if *self.peek() == Tok::At {
            self.bump();
            let b = self.ty()?;
            return Ok(SessionType::par(a, b));
        }
        Ok(a)
    }

    fn ty_tensor(&mut self) -> PResult<SessionType> {
        let a = self.ty_atom()?;
        if *self.peek() == Tok::Star {
            self.bump();
            let b = self.ty_tensor()?;
            return Ok(SessionType::tensor(a, b));
        }
        Ok(a)
    }

    fn ty_atom(&mut self) -> PResult<SessionType> {
        match self.peek().clone() {
            Tok::Word(w) if w == "end" => {
                self.bump();
                match self.peek() {
                    Tok::Bang => {
                        self.bump();
                        Ok(SessionType::One)
                    }
                    Tok::Question => {
                        self.bump();
                        Ok(SessionType::Bot)
                    }
                    _ => Err(self.unexpected("`!` or `?` after `end`")),
                }
            }
            Tok::Plus => {
                self.bump();
                Ok(SessionType::Plus(self.ty_arms()?))
            }
            Tok::Amp => {
                self.bump();
                Ok(SessionType::With(self.ty_arms()?))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Word(_) => {
                let (w, s) = self.ident("a type")?;
                match self.aliases.get(&w) {
                    Some(t) => Ok(t.clone()),
                    None => Err(Diagnostic::error(s, format!("unknown type alias `{w}`"))),
                }
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    fn ty_arms(&mut self) -> PResult<BTreeMap<Label, SessionType>> {
        self.expect(Tok::LBrace)?;
        let mut arms = BTreeMap::new();
        loop {
            let (l, s) = self.word("a label")?;
            self.expect(Tok::Colon)?;
            let t = self.ty()?;
            if arms.insert(Label::new(&l), t).is_some() {
                self.errors.push(Diagnostic::error(s, format!("duplicate label `{l}`")));
            }
            if *self.peek() == Tok::Comma {
                self.bump();
                if *self.peek() == Tok::RBrace {
                    break;
                }
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(arms)
    }

    // ---- processes ----

    fn process(&mut self) -> PResult<(Process, SpanTree)> {
        let (p, ps) = self.unary()?;
        if *self.peek() == Tok::Pipe {
            self.bump();
            let (q, qs) = self.process()?;
            let span = ps.span.to(qs.span);
            return Ok((
                Process::par(p, q),
                SpanTree {
                    span,
                    children: vec![ps, qs],
                },
            ));
        }
        Ok((p, ps))
    }

    fn leaf(p: Process, span: Span) -> (Process, SpanTree) {
        (
            p,
            SpanTree {
                span,
                children: Vec::new(),
            },
        )
    }

    fn unary(&mut self) -> PResult<(Process, SpanTree)> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                Ok(Self::leaf(Process::Inaction, start))
            }
            Tok::LParen => {
                self.bump();
                let r = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(r)
            }
            Tok::Word(w) => match w.as_str() {
                "hole" => {
                    self.bump();
                    self.holes += 1;
                    Ok(Self::leaf(hole_marker(), start))
                }
                "close" => {
                    self.bump();
                    let x = self.name()?;
                    Ok(Self::leaf(Process::Close(x), start.to(self.prev_span())))
                }
                "wait" => {
                    self.bump();
                    let x = self.name()?;
                    self.expect(Tok::Semi)?;
                    let (p, ps) = self.unary()?;
                    let span = start.to(ps.span);
                    Ok((
                        Process::Wait(x, Box::new(p)),
                        SpanTree {
                            span,
                            children: vec![ps],
                        },
                    ))
                }
                "send" => {
                    self.bump();
                    let x = self.name()?;
                    self.expect(Tok::LParen)?;
                    let a = self.name()?;
                    self.expect(Tok::Comma)?;
                    let b = self.name()?;
                    let end = self.expect(Tok::RParen)?;
                    Ok(Self::leaf(Process::Send { x, payload: a, cont: b }, start.to(end)))
                }
                "recv" => {
                    self.bump();
                    let x = self.name()?;
                    self.expect(Tok::LParen)?;
                    let y = self.name()?;
                    self.expect(Tok::Comma)?;
                    let z = self.name()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Semi)?;
                    let (p, ps) = self.unary()?;
                    let span = start.to(ps.span);
                    Ok((
                        Process::Recv {
                            x,
                            y,
                            z,
                            body: Box::new(p),
                        },
                        SpanTree {
                            span,
                            children: vec![ps],
                        },
                    ))
                }
                "new" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let x = self.name()?;
                    self.expect(Tok::Colon)?;
                    let ty = self.ty()?;
                    self.expect(Tok::LBracket)?;
                    let level = self.level()?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::RParen)?;
                    let y = self.name()?;
                    self.expect(Tok::Dot)?;
                    let (p, ps) = self.unary()?;
                    let span = start.to(ps.span);
                    Ok((
                        Process::Res {
                            x,
                            y,
                            ty,
                            level,
                            body: Box::new(p),
                        },
                        SpanTree {
                            span,
                            children: vec![ps],
                        },
                    ))
                }
                _ => self.prefixed_by_name(start),
            },
            _ => Err(self.unexpected("a process")),
        }
    }

    fn prefixed_by_name(&mut self, start: Span) -> PResult<(Process, SpanTree)> {
        let x = self.name()?;
        match self.peek() {
            Tok::Bang => {
                self.bump();
                let (l, _) = self.word("a label")?;
                self.expect(Tok::LParen)?;
                let b = self.name()?;
                let end = self.expect(Tok::RParen)?;
                Ok(Self::leaf(
                    Process::Select {
                        x,
                        cont: b,
                        label: Label::new(l),
                    },
                    start.to(end),
                ))
            }
            Tok::Question => {
                self.bump();
                self.expect(Tok::LParen)?;
                let z = self.name()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                let mut arms: BTreeMap<Label, (Process, SpanTree)> = BTreeMap::new();
                loop {
                    let (l, ls) = self.word("a label")?;
                    self.expect(Tok::Colon)?;
                    let arm = self.process()?;
                    if arms.insert(Label::new(&l), arm).is_some() {
                        self.errors.push(Diagnostic::error(ls, format!("duplicate label `{l}`")));
                    }
                    if *self.peek() == Tok::Comma {
                        self.bump();
                        if *self.peek() == Tok::RBrace {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                let end = self.expect(Tok::RBrace)?;
                let mut children = Vec::new();
                let mut map = BTreeMap::new();
                for (l, (p, s)) in arms {
                    map.insert(l, p);
                    children.push(s);
                }
                Ok((
                    Process::Branch { x, z, arms: map },
                    SpanTree {
                        span: start.to(end),
                        children,
                    },
                ))
            }
            _ => Err(self.unexpected("`!` or `?` after a name")),
        }
    }

    // ---- declarations ----

    fn lattice_decl(&mut self) -> PResult<(Vec<Level>, Vec<(Level, Level)>)> {
        self.keyword("lattice")?;
        self.expect(Tok::LBrace)?;
        let mut levels = Vec::new();
        let mut edges = Vec::new();
        while *self.peek() != Tok::RBrace {
            let (a, _) = self.ident("a secrecy level")?;
            let a = Level::new(a);
            if *self.peek() == Tok::Lt {
                self.bump();
                let (b, _) = self.ident("a secrecy level")?;
                edges.push((a, Level::new(b)));
            } else {
                levels.push(a);
            }
            if *self.peek() == Tok::Semi {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok((levels, edges))
    }

    fn proc_decl(&mut self) -> PResult<ProcDecl> {
        let start = self.keyword("proc")?;
        let (name, _) = self.ident("a declaration name")?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        let mut seen = BTreeSet::new();
        while *self.peek() != Tok::RParen {
            let (x, xs) = self.ident("a name")?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::LBracket)?;
            let level = self.level()?;
            self.expect(Tok::RBracket)?;
            if !seen.insert(x.clone()) {
                self.errors.push(Diagnostic::error(xs, format!("duplicate interface name `{x}`")));
            }
            params.push((Name::new(x), Binding::new(ty, level)));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::At)?;
        let level = self.level()?;
        self.expect(Tok::Eq)?;
        self.holes = 0;
        let (p, spans) = self.process()?;
        let body = if self.holes == 0 {
            DeclBody::Process(p)
        } else {
            match EvalContext::from_marked(&p) {
                Ok(e) => DeclBody::Context(e),
                Err(e) => {
                    let msg = match e {
                        SplitError::Duplicated(n) => format!("context has {n} holes; expected exactly one"),
                        SplitError::Guarded => "hole must not occur under a prefix".to_string(),
                        SplitError::Absent => "hole not found".to_string(),
                    };
                    return Err(Diagnostic::error(spans.span, msg));
                }
            }
        };
        Ok(ProcDecl {
            name,
            params,
            level,
            span: start.to(spans.span),
            body,
            spans,
        })
    }
}

/// Parses a `.sp` source file.
pub fn parse(text: &str) -> Result<SourceFile, Vec<Diagnostic>> {
    parse_with_lattice(text, None)
}

/// Parses a file whose lattice declaration may be omitted in favour of
/// `fallback`. A file that declares its own lattice must agree with it.
pub fn parse_with_lattice(text: &str, fallback: Option<&SecrecyLattice>) -> Result<SourceFile, Vec<Diagnostic>> {
    let mut p = Parser::new(text).map_err(|d| vec![d])?;
    let mut lattice_decl: Option<(Span, Vec<Level>, Vec<(Level, Level)>)> = None;
    let mut decls: Vec<ProcDecl> = Vec::new();
    loop {
        let span = p.span();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Word(w) if w == "lattice" => {
                let (levels, edges) = p.lattice_decl().map_err(|d| vec![d])?;
                if lattice_decl.is_some() {
                    p.errors.push(Diagnostic::error(span, "more than one lattice declaration"));
                } else {
                    lattice_decl = Some((span, levels, edges));
                }
            }
            Tok::Word(w) if w == "type" => {
                p.bump();
                let (name, ns) = p.ident("an alias name").map_err(|d| vec![d])?;
                p.expect(Tok::Eq).map_err(|d| vec![d])?;
                let t = p.ty().map_err(|d| vec![d])?;
                if p.aliases.insert(name.clone(), t).is_some() {
                    p.errors.push(Diagnostic::error(ns, format!("duplicate type alias `{name}`")));
                }
            }
            Tok::Word(w) if w == "proc" => {
                let d = p.proc_decl().map_err(|d| vec![d])?;
                if decls.iter().any(|e| e.name == d.name) {
                    p.errors.push(Diagnostic::error(d.span, format!("duplicate declaration `{}`", d.name)));
                }
                decls.push(d);
            }
            _ => return Err(vec![p.unexpected("`lattice`, `type` or `proc`")]),
        }
    }
    let lattice = match (lattice_decl, fallback) {
        (Some((span, levels, edges)), fb) => match SecrecyLattice::new(levels, edges) {
            Ok(l) => {
                if fb.is_some_and(|f| *f != l) {
                    p.errors.push(Diagnostic::error(span, "lattice differs from the one in effect"));
                }
                Some(l)
            }
            Err(e) => {
                p.errors.push(Diagnostic::error(span, format!("invalid lattice: {e}")));
                None
            }
        },
        (None, Some(f)) => Some(f.clone()),
        (None, None) => {
            p.errors.push(Diagnostic::error(Span::new(1, 1, 1, 1), "missing lattice declaration"));
            None
        }
    };
    if let Some(l) = &lattice {
        for (lv, s) in &p.level_uses {
            if !l.contains(lv) {
                p.errors.push(Diagnostic::error(*s, format!("unbound secrecy level `{lv}`")));
            }
        }
    }
    match lattice {
        Some(lattice) if p.errors.is_empty() => Ok(SourceFile {
            lattice,
            aliases: p.aliases,
            decls,
        }),
        _ => {
            let mut errs = p.errors;
            errs.sort_by_key(|d| d.span);
            Err(errs)
        }
    }
}

/// Parses a single process. Levels are not validated.
pub fn parse_process(text: &str) -> Result<Process, Diagnostic> {
    let mut p = Parser::new(text)?;
    let (proc_, _) = p.process()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    if let Some(d) = p.errors.into_iter().next() {
        return Err(d);
    }
    Ok(proc_)
}

/// Parses a single session type. Aliases are unavailable.
pub fn parse_type(text: &str) -> Result<SessionType, Diagnostic> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    if let Some(d) = p.errors.into_iter().next() {
        return Err(d);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_prefix() {
        assert_eq!(parse_process("close x").unwrap(), Process::close("x"));
    }

    #[test]
    fn restriction_with_annotation() {
        let p = parse_process("new (x : end! [H]) y . (close x | wait y; 0)").unwrap();
        assert_eq!(
            p,
            Process::res(
                "x",
                "y",
                SessionType::One,
                Level::new("H"),
                Process::par(Process::close("x"), Process::wait("y", Process::Inaction))
            )
        );
    }

    #[test]
    fn selection_form() {
        assert_eq!(parse_process("x!oc2(b)").unwrap(), Process::select("x", "b", "oc2"));
        // keywords are fine as labels
        assert_eq!(parse_process("x!wait(b)").unwrap(), Process::select("x", "b", "wait"));
    }

    #[test]
    fn par_is_right_assoc_and_prefixes_bind_tighter() {
        let p = parse_process("wait x; close a | close b | 0").unwrap();
        assert_eq!(
            p,
            Process::par(
                Process::wait("x", Process::close("a")),
                Process::par(Process::close("b"), Process::Inaction)
            )
        );
    }

    #[test]
    fn type_precedence() {
        let t = parse_type("end! * end? @ end! * end!").unwrap();
        use SessionType::*;
        assert_eq!(
            t,
            SessionType::par(SessionType::tensor(One, Bot), SessionType::tensor(One, One))
        );
        assert_eq!(
            parse_type("end! * end! * end?").unwrap(),
            SessionType::tensor(One, SessionType::tensor(One, Bot))
        );
    }

    #[test]
    fn duplicate_branch_label() {
        let e = parse_process("x?(z){ a: 0, a: 0 }").unwrap_err();
        assert!(e.message.contains("duplicate label"));
    }

    #[test]
    fn file_errors() {
        let errs = parse("").unwrap_err();
        assert!(errs[0].message.contains("missing lattice"));
        let errs = parse("lattice { L < H }\nproc P (x : end! [M]) @ L = close x").unwrap_err();
        assert_eq!(errs[0].message, "unbound secrecy level `M`");
        assert_eq!((errs[0].span.line, errs[0].span.col), (2, 19));
        let errs = parse("lattice { a < c; a < d; b < c; b < d }").unwrap_err();
        assert!(errs[0].message.contains("invalid lattice"));
        let errs = parse("lattice { L }\nproc P () @ L = 0\nproc P () @ L = 0").unwrap_err();
        assert!(errs[0].message.contains("duplicate declaration"));
        let errs = parse("lattice { L }\nproc P () @ L = close").unwrap_err();
        assert!(errs[0].message.starts_with("expected a name"));
    }

    #[test]
    fn aliases_and_contexts() {
        let f = parse(
            "lattice { L < H }\ntype T = +{ a: end!, b: end! }\n\
             proc C () @ L = new (x : T [L]) y . (y?(z){ a: wait z; 0, b: wait z; 0 } | hole)",
        )
        .unwrap();
        assert_eq!(f.aliases.len(), 1);
        assert!(matches!(f.decls[0].body, DeclBody::Context(_)));
        let errs = parse("lattice { L }\nproc C () @ L = wait x; hole").unwrap_err();
        assert!(errs[0].message.contains("under a prefix"));
    }

    #[test]
    fn span_tree_tracks_children() {
        let f = parse("lattice { L }\nproc P (x : end? [L]) @ L =\n  wait x;\n  0").unwrap();
        let s = f.decls[0].spans.lookup(&[0]);
        assert_eq!((s.line, s.col), (4, 3));
    }
}
