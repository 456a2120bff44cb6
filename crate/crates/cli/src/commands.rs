use serde_json::{json, Value};

use sessionflow::checker::{check_closed, Discipline};
use sessionflow::security::{
    dsni_equivalent, enumerate_contexts, observably_equivalent_with, relevant_with, weakest_discipline,
    ContextPair, ContextSpec, DsniReport, EnumerationParams, PrintedPair, RelationVerdict, Relator, SecurityError,
};
use sessionflow::semantics::network::{print_gamma, Network};
use sessionflow::semantics::normal_form::Binder;
use sessionflow::semantics::reduction::{classify_terminal, explore_states, Terminal};
use sessionflow::semantics::{enumerate_redexes, normal_form};
use sessionflow::surface::{DeclBody, ProcDecl};
use sessionflow::{Judgment, Level, Process, SecrecyLattice, TypeError};

use crate::load::{self, process_judgment, Loaded};
use crate::output::{verdict, Failure, Report, Status};
use crate::{Common, Contexts, Observer};

fn binder_text(b: &Binder) -> String {
    format!("new ({} : {} [{}]) {}", b.x, b.ty, b.level, b.y)
}

fn error_json(path: &str, d: &ProcDecl, e: &TypeError) -> Value {
    let s = d.spans.lookup(&e.path);
    json!({
        "kind": e.kind,
        "rule": e.rule.name(),
        "message": e.message,
        "line": s.line,
        "col": s.col,
        "file": path,
        "subterm": e.subterm.to_string(),
    })
}

fn error_line(path: &str, d: &ProcDecl, e: &TypeError) -> String {
    let s = d.spans.lookup(&e.path);
    format!("{path}:{}:{}: error: {e}", s.line, s.col)
}

fn judgment_text(j: &Judgment) -> String {
    format!("@ {} :: {}", j.running, print_gamma(&j.context))
}

fn security(e: SecurityError) -> Failure {
    match e {
        SecurityError::UnknownLevel(_) | SecurityError::Context { .. } | SecurityError::Lattice(_) => {
            Failure::usage(e.to_string())
        }
        _ => Failure::analysis(e.to_string()),
    }
}

/// Checks a process declaration, failing with its diagnostics.
fn well_typed(loaded: &Loaded, d: &ProcDecl, discipline: Discipline) -> Result<Judgment, Failure> {
    let j = process_judgment(d)?;
    if let Err(es) = sessionflow::checker::check_with(loaded.lattice(), &j.process, &j.running, &j.context, discipline) {
        let lines: Vec<String> = es.iter().map(|e| error_line(&loaded.path, d, e)).collect();
        return Err(Failure::analysis(lines.join("\n")));
    }
    Ok(j)
}

pub fn check(c: &Common) -> Result<Status, Failure> {
    let loaded = load::source(&c.file)?;
    let decls: Vec<&ProcDecl> = if c.decls.is_empty() {
        loaded.file.decls.iter().collect()
    } else {
        c.decls.iter().map(|n| loaded.decl(n)).collect::<Result<_, _>>()?
    };
    let mut text = Vec::new();
    let mut results = Vec::new();
    let mut all_ok = true;
    for d in decls {
        let p = match &d.body {
            DeclBody::Process(p) => p,
            DeclBody::Context(_) => {
                text.push(format!("{}: context, skipped", d.name));
                results.push(json!({ "decl": d.name, "kind": "context", "ok": true }));
                continue;
            }
        };
        let g = d.context();
        let j = Judgment {
            process: p.clone(),
            running: d.level.clone(),
            context: g.clone(),
        };
        match sessionflow::check(loaded.lattice(), p, &d.level, &g) {
            Ok(der) => {
                let sides = der.all_side_conditions();
                text.push(format!("{}: {}  {}", d.name, verdict("ok", true), judgment_text(&j)));
                for (rule, s) in &sides {
                    text.push(format!("  {rule}: {s}"));
                }
                let mut r = json!({
                    "decl": d.name,
                    "kind": "process",
                    "ok": true,
                    "running": d.level,
                    "context": print_gamma(&g),
                    "side_conditions": sides.iter().map(|(rule, s)| json!({
                        "rule": rule.name(), "lhs": s.lhs, "rhs": s.rhs, "holds": s.holds,
                    })).collect::<Vec<_>>(),
                    "errors": [],
                });
                if c.trace {
                    let lines = der.trace_lines();
                    text.extend(lines.iter().map(|l| format!("  | {l}")));
                    r["derivation"] = json!(lines);
                }
                results.push(r);
            }
            Err(es) => {
                all_ok = false;
                text.push(format!("{}: {}  {}", d.name, verdict("error", false), judgment_text(&j)));
                for e in &es {
                    text.push(format!("  {}", error_line(&loaded.path, d, e)));
                }
                results.push(json!({
                    "decl": d.name,
                    "kind": "process",
                    "ok": false,
                    "running": d.level,
                    "context": print_gamma(&g),
                    "side_conditions": [],
                    "errors": es.iter().map(|e| error_json(&loaded.path, d, e)).collect::<Vec<_>>(),
                }));
            }
        }
    }
    Ok(Report {
        text,
        json: json!({ "command": "check", "ok": all_ok, "results": results }),
        status: Status::from_bool(all_ok),
    }
    .emit(c.json))
}

fn terminal_word(t: Terminal) -> &'static str {
    match t {
        Terminal::Finished => "finished",
        Terminal::Deadlocked => "deadlocked",
    }
}

pub fn reduce(c: &Common, steps: Option<usize>, all_states: bool) -> Result<Status, Failure> {
    let loaded = load::source(&c.file)?;
    let d = loaded.pick(&c.decls, 1, false)?[0];
    let j = process_judgment(d)?;
    if !j.context.is_empty() {
        return Err(Failure::analysis(format!(
            "`{}` is not closed: its interface is {}",
            d.name,
            print_gamma(&j.context)
        )));
    }
    if let Err(es) = check_closed(loaded.lattice(), &j.process, &j.running) {
        let lines: Vec<String> = es.iter().map(|e| error_line(&loaded.path, d, e)).collect();
        return Err(Failure::analysis(lines.join("\n")));
    }
    let mut text = Vec::new();
    let report = if all_states {
        let states = explore_states(&j.process);
        let mut js = Vec::new();
        for (i, s) in states.iter().enumerate() {
            let head = match &s.via {
                Some((from, step)) => format!("state {i} <- {from} {step}"),
                None => format!("state {i}"),
            };
            let tail = s.terminal.map(|t| format!(" [{}]", terminal_word(t))).unwrap_or_default();
            text.push(format!("{head}{tail}"));
            text.push(format!("  {}", s.process));
            js.push(json!({
                "index": i,
                "process": s.process.to_string(),
                "from": s.via.as_ref().map(|v| v.0),
                "step": s.via.as_ref().map(|v| v.1.clone()),
                "terminal": s.terminal.map(terminal_word),
            }));
        }
        json!({ "command": "reduce", "decl": d.name, "states": js })
    } else {
        let mut cur = sessionflow::semantics::normal_form::canonical_process(&j.process);
        text.push(cur.to_string());
        let mut trace = Vec::new();
        let mut outcome = None;
        let limit = steps.unwrap_or(usize::MAX);
        let mut taken = 0;
        while taken < limit {
            let rs = enumerate_redexes(&cur);
            let Some(r) = rs.into_iter().next() else {
                outcome = Some(classify_terminal(&cur));
                break;
            };
            text.push(r.step_line());
            text.push(r.reduct.to_string());
            trace.push(json!({ "step": r.step_line(), "process": r.reduct.to_string() }));
            cur = r.reduct;
            taken += 1;
        }
        if outcome.is_none() && enumerate_redexes(&cur).is_empty() {
            outcome = Some(classify_terminal(&cur));
        }
        let word = outcome.map(terminal_word).unwrap_or("stopped");
        text.push(word.to_string());
        json!({
            "command": "reduce",
            "decl": d.name,
            "initial": sessionflow::semantics::normal_form::canonical_process(&j.process).to_string(),
            "trace": trace,
            "outcome": word,
        })
    };
    Ok(Report {
        text,
        json: report,
        status: Status::Positive,
    }
    .emit(c.json))
}

pub fn nf(c: &Common) -> Result<Status, Failure> {
    let loaded = load::source(&c.file)?;
    let d = loaded.pick(&c.decls, 1, false)?[0];
    let j = process_judgment(d)?;
    let nf = normal_form(&j.process).canonical();
    let mut text = vec!["binders:".to_string()];
    text.extend(nf.binders.iter().map(|b| format!("  {}", binder_text(b))));
    text.push("nodes:".to_string());
    text.extend(nf.nodes.iter().map(|n| format!("  {n}")));
    text.push(format!("form: {}", nf.to_process()));
    Ok(Report {
        text,
        json: json!({
            "command": "nf",
            "decl": d.name,
            "binders": nf.binders.iter().map(binder_text).collect::<Vec<_>>(),
            "nodes": nf.nodes.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "form": nf.to_process().to_string(),
        }),
        status: Status::Positive,
    }
    .emit(c.json))
}

pub fn relevant(c: &Common, o: &Observer) -> Result<Status, Failure> {
    let loaded = load::source(&c.file)?;
    let xi = loaded.observer(&o.observer)?;
    let d = loaded.pick(&c.decls, 1, false)?[0];
    let j = well_typed(&loaded, d, Discipline::Secure)?;
    let nf = normal_form(&j.process).canonical();
    let r = relevant_with(loaded.lattice(), &xi, &nf, &j.context, &j.running, Discipline::Secure).map_err(security)?;
    let mut text = vec!["relevant nodes:".to_string()];
    text.extend(r.relevant_nodes.iter().map(|n| format!("  {n}")));
    text.push("relevant binders:".to_string());
    text.extend(r.relevant_binders.iter().map(|b| format!("  {}", binder_text(b))));
    text.push(format!("relevant form: {}", r.relevant_form));
    if c.trace {
        for (i, s) in r.stages.iter().enumerate() {
            let shown: Vec<String> = s.iter().map(|k| nf.nodes[*k].to_string()).collect();
            text.push(format!("  N{i} = {{{}}}", shown.join(", ")));
        }
    }
    Ok(Report {
        text,
        json: json!({
            "command": "relevant",
            "decl": d.name,
            "observer": xi,
            "nodes": r.relevant_nodes.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "binders": r.relevant_binders.iter().map(binder_text).collect::<Vec<_>>(),
            "form": r.relevant_form.to_string(),
        }),
        status: Status::Positive,
    }
    .emit(c.json))
}

/// The two judgments and the weakest discipline they check under.
fn pair(loaded: &Loaded, c: &Common, default_last: bool) -> Result<(Vec<Judgment>, Discipline, Option<String>), Failure> {
    let ds = loaded.pick(&c.decls, 2, default_last)?;
    let js = ds.iter().map(|d| process_judgment(d)).collect::<Result<Vec<_>, _>>()?;
    let (discipline, note) = weakest_discipline(loaded.lattice(), [&js[0], &js[1]]).map_err(|_| {
        // report the session-typing errors of the first offender
        ds.iter()
            .find_map(|d| well_typed(loaded, d, Discipline::SessionOnly).err())
            .unwrap_or_else(|| Failure::analysis("ill-typed input"))
    })?;
    Ok((js, discipline, note))
}

pub fn obseq(c: &Common, o: &Observer) -> Result<Status, Failure> {
    let loaded = load::source(&c.file)?;
    let xi = loaded.observer(&o.observer)?;
    let (js, discipline, note) = pair(&loaded, c, false)?;
    let eq = observably_equivalent_with(loaded.lattice(), &xi, (&js[0]).into(), (&js[1]).into(), discipline)
        .map_err(security)?;
    let mut text = vec![if eq {
        verdict("equivalent", true)
    } else {
        verdict("not equivalent", false)
    }];
    text.extend(note.iter().map(|n| format!("  note: {n}")));
    Ok(Report {
        text,
        json: json!({
            "command": "obseq",
            "observer": xi,
            "equivalent": eq,
            "discipline": discipline,
            "notes": note.into_iter().collect::<Vec<_>>(),
        }),
        status: Status::from_bool(eq),
    }
    .emit(c.json))
}

fn context_source(
    loaded: &Loaded,
    ctx: &Contexts,
) -> Result<ContextSpec, Failure> {
    match (&ctx.contexts, ctx.enumerate) {
        (Some(path), _) => Ok(ContextSpec::Explicit(load::context_pairs(path, loaded.lattice())?)),
        (None, depth) => Ok(ContextSpec::Enumerate(EnumerationParams {
            depth: depth.unwrap_or(EnumerationParams::default().depth),
            ..EnumerationParams::default()
        })),
    }
}

fn verdict_lines(v: &RelationVerdict, trace: bool, out: &mut Vec<String>) {
    if let Some(cl) = &v.failed_clause {
        out.push(format!("  failed clause: {cl}"));
    }
    if let Some(x) = &v.interface_name {
        out.push(format!("  interface name: {x}"));
    }
    if let Some(w) = &v.witness {
        out.push(format!("  interface: {}", w.gamma));
        out.push(format!("  left:  {}", w.left));
        out.push(format!("  right: {}", w.right));
    }
    if trace || !v.related {
        for s in &v.witness_trace {
            out.push(format!("  trace: {s}"));
        }
    }
    if trace {
        if let Some(w) = &v.witness {
            for s in &w.right_trace {
                out.push(format!("  right trace: {s}"));
            }
        }
    }
    for n in &v.notes {
        out.push(format!("  note: {n}"));
    }
}

fn pair_lines(p: &PrintedPair, out: &mut Vec<String>) {
    out.push(format!("  left context:  {}", p.left));
    out.push(format!("  right context: {}", p.right));
}

fn all_names(js: &[Judgment]) -> std::collections::BTreeSet<sessionflow::Name> {
    js.iter()
        .flat_map(|j| j.process.all_names().into_iter().chain(j.context.names().cloned()))
        .collect()
}

fn contexts_for(
    lattice: &SecrecyLattice,
    xi: &Level,
    js: &[Judgment],
    spec: &ContextSpec,
) -> Result<Vec<ContextPair>, Failure> {
    match spec {
        ContextSpec::Explicit(ps) => Ok(ps.clone()),
        ContextSpec::Enumerate(params) => {
            enumerate_contexts(lattice, xi, &js[0].context, &js[1].context, &all_names(js), *params).map_err(security)
        }
    }
}

pub fn relate(c: &Common, o: &Observer, ctx: &Contexts) -> Result<Status, Failure> {
    let loaded = load::source(&c.file)?;
    let xi = loaded.observer(&o.observer)?;
    let (js, discipline, note) = pair(&loaded, c, false)?;
    let spec = context_source(&loaded, ctx)?;
    let pairs = contexts_for(loaded.lattice(), &xi, &js, &spec)?;
    let mut rel = Relator::new();
    let mut text = Vec::new();
    let mut results = Vec::new();
    let mut all = true;
    for (i, p) in pairs.iter().enumerate() {
        let net = |e, proc_: &Process| {
            Network::new_with(loaded.lattice(), &xi, e, proc_, discipline)
                .map_err(|source| security(SecurityError::Context { index: i, source }))
        };
        let n1 = net(&p.left, &js[0].process)?;
        let n2 = net(&p.right, &js[1].process)?;
        let mut v = rel.term_related(&n1, &n2);
        if let Some(n) = &note {
            if !v.notes.contains(n) {
                v.notes.push(n.clone());
            }
        }
        all &= v.related;
        text.push(format!(
            "context {i}: {}",
            if v.related { verdict("related", true) } else { verdict("not related", false) }
        ));
        if c.trace || !v.related {
            pair_lines(&p.into(), &mut text);
        }
        verdict_lines(&v, c.trace, &mut text);
        results.push(json!({ "context": i, "contexts": PrintedPair::from(p), "verdict": v }));
    }
    Ok(Report {
        text,
        json: json!({
            "command": "relate",
            "observer": xi,
            "discipline": discipline,
            "related": all,
            "results": results,
        }),
        status: Status::from_bool(all),
    }
    .emit(c.json))
}

fn dsni_lines(r: &DsniReport, trace: bool) -> Vec<String> {
    let mut text = vec![format!(
        "{} over {} context pair(s) at {}",
        if r.related { verdict("related", true) } else { verdict("not related", false) },
        r.contexts_checked,
        r.observer
    )];
    if let (Some(i), Some(dir)) = (r.failing_context, r.direction) {
        let dir = serde_json::to_value(dir).expect("direction serializes");
        text.push(format!("  failing context: {i} ({})", dir.as_str().unwrap_or_default()));
    }
    if let Some(p) = &r.context_pair {
        pair_lines(p, &mut text);
    }
    verdict_lines(&r.verdict, trace, &mut text);
    text
}

pub fn dsni(c: &Common, o: &Observer, ctx: &Contexts) -> Result<Status, Failure> {
    let loaded = load::source(&c.file)?;
    let xi = loaded.observer(&o.observer)?;
    let (js, _, _) = pair(&loaded, c, true)?;
    let spec = context_source(&loaded, ctx)?;
    let r = dsni_equivalent(loaded.lattice(), &xi, &js[0], &js[1], &spec).map_err(security)?;
    let mut doc = serde_json::to_value(&r).expect("report serializes");
    doc["command"] = json!("dsni");
    Ok(Report {
        text: dsni_lines(&r, c.trace),
        json: doc,
        status: Status::from_bool(r.related),
    }
    .emit(c.json))
}
