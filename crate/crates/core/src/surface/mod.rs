//! Concrete syntax: `.sp` source files, diagnostics, parser and printer.

mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;

use crate::lattice::{Level, SecrecyLattice};
use crate::semantics::context::EvalContext;
use crate::syntax::{Name, Process};
use crate::types::{Binding, SessionType, TypingContext};

pub use parser::{parse, parse_process, parse_type, parse_with_lattice};
pub use printer::{print_context, print_process, print_source, print_type};

/// A 1-based source range; `end_col` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize, end_line: usize, end_col: usize) -> Self {
        Span {
            line,
            col,
            end_line,
            end_col,
        }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.line, self.col, other.end_line, other.end_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}: {}", self.span.line, self.span.col, self.severity, self.message)
    }
}

/// Source positions of a process tree, mirroring its shape. Children follow
/// the process constructors: `Par` has two, `Res`/`Wait`/`Recv` one, and
/// `Branch` one per arm in label order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpanTree {
    pub span: Span,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    /// Span of the subterm at `path`, or the deepest enclosing one.
    pub fn lookup(&self, path: &[usize]) -> Span {
        let mut cur = self;
        for &i in path {
            match cur.children.get(i) {
                Some(c) => cur = c,
                None => break,
            }
        }
        cur.span
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclBody {
    Process(Process),
    Context(EvalContext),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcDecl {
    pub name: String,
    /// Interface in declaration order.
    pub params: Vec<(Name, Binding)>,
    pub level: Level,
    pub body: DeclBody,
    pub span: Span,
    pub spans: SpanTree,
}

impl ProcDecl {
    pub fn context(&self) -> TypingContext {
        self.params.iter().cloned().collect()
    }

    pub fn process(&self) -> Option<&Process> {
        match &self.body {
            DeclBody::Process(p) => Some(p),
            DeclBody::Context(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub lattice: SecrecyLattice,
    pub aliases: BTreeMap<String, SessionType>,
    pub decls: Vec<ProcDecl>,
}

impl SourceFile {
    pub fn decl(&self, name: &str) -> Option<&ProcDecl> {
        self.decls.iter().find(|d| d.name == name)
    }
}
