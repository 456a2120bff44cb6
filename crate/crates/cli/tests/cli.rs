use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", ".."].iter().collect()
}

fn program(name: &str) -> String {
    root().join("programs").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sessionflow"))
        .args(args)
        .env_remove("SESSIONFLOW_COLOR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let o = run(&all);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)));
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(root().join("schemas/sessionflow-report.schema.json")).unwrap())
            .unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    if let Err(errors) = compiled.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("{args:?} violates the schema: {msgs:#?}\n{v:#}");
    }
    (o.status.code().unwrap(), v)
}

#[test]
fn check_secure_and_insecure() {
    let o = run(&["check", &program("governments.sp")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("GovAH: ok"));
    assert!(out.contains("typ-sel: L ⊑ H"));
    assert!(out.contains("GovAHEnv: context, skipped"));

    let o = run(&["check", &program("governments-insecure.sp")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error:") || stderr(&o).contains("error:"));

    let (code, v) = json(&["check", &program("governments-swapped.sp")]);
    assert_eq!(code, 1);
    assert_eq!(v["ok"], false);
    let rules: Vec<&str> = v["results"][0]["errors"].as_array().unwrap().iter().map(|e| e["rule"].as_str().unwrap()).collect();
    assert!(rules.contains(&"typ-sel") && rules.contains(&"typ-close"));
}

#[test]
fn check_trace_prints_a_derivation() {
    let o = run(&["check", &program("governments.sp"), "--decl", "IntA", "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().count() > 3);
}

#[test]
fn reduce_runs_and_detects_deadlock() {
    let o = run(&["reduce", &program("governments.sp"), "--decl", "ASecure", "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let steps: Vec<&str> = out.lines().filter(|l| l.starts_with("STEP")).collect();
    assert_eq!(steps, ["STEP sel-bra (aH,aL) [oc2]", "STEP close-wait (aH1,aH1')"]);
    assert!(out.trim_end().ends_with("stopped"));

    let (_, v) = json(&["reduce", &program("governments.sp"), "--decl", "ASecure"]);
    assert_eq!(v["outcome"], "finished");
    let (_, v) = json(&["reduce", &program("governments.sp"), "--decl", "Cycle"]);
    assert_eq!(v["outcome"], "deadlocked");
    let (_, v) = json(&["reduce", &program("governments.sp"), "--decl", "ASecure", "--all-states"]);
    assert!(v["states"].as_array().unwrap().len() > 3);
}

#[test]
fn reduce_rejects_open_processes() {
    let o = run(&["reduce", &program("governments.sp"), "--decl", "GovAH"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn normal_form_and_relevance() {
    let (code, v) = json(&["nf", &program("governments.sp"), "--decl", "ContAct"]);
    assert_eq!(code, 0);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 2);
    let (code, v) = json(&["relevant", &program("governments.sp"), "--decl", "ContAct", "--observer", "L"]);
    assert_eq!(code, 0);
    assert_eq!(v["nodes"], serde_json::json!(["wait aL1; close aI1"]));
}

#[test]
fn observational_equivalence() {
    let (code, v) = json(&[
        "obseq",
        &program("governments.sp"),
        "--decl",
        "ContAct",
        "--decl",
        "ContWait",
        "--observer",
        "L",
    ]);
    assert_eq!((code, &v["equivalent"]), (0, &Value::Bool(true)));
    let (code, v) = json(&[
        "obseq",
        &program("governments-insecure.sp"),
        "--decl",
        "ContInf1",
        "--decl",
        "ContInf2",
        "--observer",
        "L",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["discipline"], "session-only");
    assert_eq!(v["notes"].as_array().unwrap().len(), 1);
}

#[test]
fn relate_and_dsni() {
    let (code, v) = json(&[
        "relate",
        &program("governments.sp"),
        "--decl",
        "ContAct",
        "--decl",
        "ContWait",
        "--observer",
        "L",
    ]);
    assert_eq!((code, &v["related"]), (0, &Value::Bool(true)));

    let (code, v) = json(&["dsni", &program("governments.sp"), "--decl", "GovAH", "--observer", "L", "--enumerate", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["contexts_checked"], 2);

    let (code, v) = json(&[
        "dsni",
        &program("governments-insecure.sp"),
        "--decl",
        "ContInf1",
        "--decl",
        "ContInf2",
        "--observer",
        "L",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"]["failed_clause"], "oplus3");
    assert_eq!(v["verdict"]["interface_name"], "aL");

    let o = run(&[
        "dsni",
        &program("governments-insecure.sp"),
        "--decl",
        "ContInf1",
        "--decl",
        "ContInf2",
        "--observer",
        "L",
    ]);
    let out = stdout(&o);
    assert!(out.contains("oplus3") && out.contains("STEP close-wait"), "{out}");
}

#[test]
fn explicit_context_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("contexts.sp");
    std::fs::write(
        &path,
        "proc E () @ L = new (aL : +{ inf1: end!, inf2: end! } [L]) aL' . new (aI1 : end? [H]) aI1' . \
         (hole | aL'?(p){ inf1: wait p; 0, inf2: wait p; 0 } | close aI1')\n",
    )
    .unwrap();
    let (code, v) = json(&[
        "dsni",
        &program("governments-insecure.sp"),
        "--decl",
        "ContInf1",
        "--decl",
        "ContInf2",
        "--observer",
        "L",
        "--contexts",
        &path.display().to_string(),
    ]);
    assert_eq!(code, 1, "{v:#}");
    assert_eq!(v["contexts_checked"], 1);
}

#[test]
fn usage_errors_exit_two() {
    let file = program("governments.sp");
    for args in [
        vec!["relevant", file.as_str(), "--decl", "ContAct", "--observer", "M"],
        vec!["check", file.as_str(), "--decl", "Nope"],
        vec!["check", "/nonexistent/file.sp"],
        vec!["frobnicate"],
        vec!["dsni", file.as_str(), "--decl", "GovAH", "--observer", "L", "--enumerate", "2", "--contexts", "x"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn colour_only_when_requested() {
    let file = program("governments-insecure.sp");
    let args = ["obseq", &file, "--decl", "ContInf1", "--decl", "ContInf2", "--observer", "L"];
    assert!(!stdout(&run(&args)).contains('\x1b'));
    let o = Command::new(env!("CARGO_BIN_EXE_sessionflow"))
        .args(args)
        .env("SESSIONFLOW_COLOR", "1")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("\x1b[31m"));
}
