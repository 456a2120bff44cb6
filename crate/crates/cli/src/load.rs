use std::fs;
use std::path::Path;

use sessionflow::lattice::{Level, SecrecyLattice};
use sessionflow::security::ContextPair;
use sessionflow::semantics::EvalContext;
use sessionflow::surface::{parse_with_lattice, DeclBody, Diagnostic, ProcDecl, SourceFile};
use sessionflow::Judgment;

use crate::output::Failure;

pub struct Loaded {
    pub path: String,
    pub file: SourceFile,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn diagnostics(path: &str, ds: &[Diagnostic]) -> Failure {
    Failure::analysis(ds.iter().map(|d| d.render(path)).collect::<Vec<_>>().join("\n"))
}

pub fn source(path: &Path) -> Result<Loaded, Failure> {
    let text = read(path)?;
    let shown = path.display().to_string();
    let file = parse_with_lattice(&text, None).map_err(|ds| diagnostics(&shown, &ds))?;
    Ok(Loaded { path: shown, file })
}

impl Loaded {
    pub fn lattice(&self) -> &SecrecyLattice {
        &self.file.lattice
    }

    pub fn decl(&self, name: &str) -> Result<&ProcDecl, Failure> {
        self.file
            .decl(name)
            .ok_or_else(|| Failure::usage(format!("{}: no declaration named `{name}`", self.path)))
    }

    /// The declarations named on the command line: exactly `n`, or `n - 1`
    /// with the last defaulting to the first when `default_last` holds.
    pub fn pick(&self, names: &[String], n: usize, default_last: bool) -> Result<Vec<&ProcDecl>, Failure> {
        let mut names = names.to_vec();
        if default_last && names.len() + 1 == n && !names.is_empty() {
            names.push(names[0].clone());
        }
        if names.len() != n {
            let what = if n == 1 { "one --decl".to_string() } else { format!("{n} --decl flags") };
            return Err(Failure::usage(format!("expected {what}, got {}", names.len())));
        }
        names.iter().map(|d| self.decl(d)).collect()
    }

    pub fn observer(&self, level: &str) -> Result<Level, Failure> {
        let l = Level::new(level);
        if self.lattice().contains(&l) {
            Ok(l)
        } else {
            Err(Failure::usage(format!("observer level `{level}` is not declared in the lattice")))
        }
    }
}

pub fn process_judgment(d: &ProcDecl) -> Result<Judgment, Failure> {
    match &d.body {
        DeclBody::Process(p) => Ok(Judgment {
            process: p.clone(),
            running: d.level.clone(),
            context: d.context(),
        }),
        DeclBody::Context(_) => Err(Failure::usage(format!("`{}` is a context, not a process", d.name))),
    }
}

/// Context pairs from a file: `X_1` and `X_2` form a pair, any other context
/// declaration is used on both sides. The lattice may be omitted, in which
/// case the main file's is used.
pub fn context_pairs(path: &Path, lattice: &SecrecyLattice) -> Result<Vec<ContextPair>, Failure> {
    let text = read(path)?;
    let shown = path.display().to_string();
    let file = parse_with_lattice(&text, Some(lattice)).map_err(|ds| diagnostics(&shown, &ds))?;
    let ctx = |d: &ProcDecl| -> Result<EvalContext, Failure> {
        match &d.body {
            DeclBody::Context(e) => Ok(e.clone()),
            DeclBody::Process(_) => Err(Failure::usage(format!("{shown}: `{}` has no hole", d.name))),
        }
    };
    let mut pairs = Vec::new();
    for d in &file.decls {
        if let Some(stem) = d.name.strip_suffix("_1") {
            let mate = file
                .decl(&format!("{stem}_2"))
                .ok_or_else(|| Failure::usage(format!("{shown}: `{}` has no `{stem}_2`", d.name)))?;
            pairs.push(ContextPair {
                left: ctx(d)?,
                right: ctx(mate)?,
            });
        } else if let Some(stem) = d.name.strip_suffix("_2") {
            if file.decl(&format!("{stem}_1")).is_none() {
                return Err(Failure::usage(format!("{shown}: `{}` has no `{stem}_1`", d.name)));
            }
        } else {
            pairs.push(ContextPair::same(ctx(d)?));
        }
    }
    if pairs.is_empty() {
        return Err(Failure::usage(format!("{shown}: no contexts declared")));
    }
    Ok(pairs)
}
