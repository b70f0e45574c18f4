//! Golden reports for the built-in scenarios, schema conformance and determinism.

use std::path::PathBuf;

use regex::Regex;
use serde_json::Value;

use divaudit::report::{run_audits, Report, RunOptions, Verdict};
use divaudit::scenario::{parse_scenario, BUILTINS};

fn dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(name)
}

fn report_of(text: &str) -> Report {
    run_audits(&parse_scenario(text).unwrap(), &RunOptions::default())
}

fn builtin_report(name: &str) -> Report {
    report_of(BUILTINS.iter().find(|b| b.name == name).unwrap().text)
}

/// Set `UPDATE_GOLDEN=1` to rewrite the files after a reviewed change.
#[test]
fn builtins_match_golden_files() {
    for b in &BUILTINS {
        let json = report_of(b.text).to_json();
        let path = dir("tests/golden").join(format!("{}.json", b.name));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &json).unwrap();
            continue;
        }
        let golden = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(json, golden, "{} drifted from its golden report", b.name);
    }
}

fn verdicts(r: &Report) -> Vec<(String, Verdict)> {
    r.verdicts.iter().map(|v| (v.audit.clone(), v.verdict)).collect()
}

fn expect(r: &Report, expected: &[(&str, Verdict)]) {
    let want: Vec<(String, Verdict)> = expected.iter().map(|(a, v)| (a.to_string(), *v)).collect();
    assert_eq!(verdicts(r), want);
}

#[test]
fn example1_verdicts() {
    use Verdict::*;
    let r = builtin_report("example1");
    expect(&r, &[("rationality", Pass), ("rationality-with-scores", Fail), ("rationality-with-privilege", Fail), ("wg-responsiveness", Pass)]);
    let w = r.verdicts[1].witness.as_ref().unwrap();
    assert_eq!(w["steps"].as_array().unwrap().len(), 3);
    assert_eq!(w["replayed"], true);
    assert!(r.caveat.is_some());
    assert_eq!(r.exit_code(), 1);
}

#[test]
fn example2_removes_i1_and_i5() {
    use Verdict::*;
    let r = builtin_report("example2");
    expect(&r, &[("substitutes", Fail), ("intersectionality", Fail), ("values-diversity", Pass), ("monotonicity", Pass), ("rationality", Pass)]);
    let w = r.verdicts[0].witness.as_ref().unwrap();
    assert_eq!(w["removed"], serde_json::json!(["i1", "i5"]));
    assert_eq!(w["kept"], serde_json::json!(["i4", "i8"]));
    assert_eq!(r.exit_code(), 1);
}

#[test]
fn example3_has_no_separable_utility() {
    use Verdict::*;
    let r = builtin_report("example3");
    expect(&r, &[("substitutes", Pass), ("wg-responsiveness", Pass), ("acyclicity", Fail), ("separability", Fail), ("open-first", Fail)]);
    let rows = r.verdicts[2].witness.as_ref().unwrap()["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|row| row["replayed"] == true));
}

#[test]
fn court_and_open_first_instances() {
    use Verdict::*;
    let r = builtin_report("court-no-womens-reserve");
    assert_eq!(r.verdict_of("rationality"), Some(Fail));
    let w = r.verdicts[0].witness.as_ref().unwrap();
    assert_eq!(w["steps"].as_array().unwrap().len(), 2);
    let r = builtin_report("open-first-witness");
    expect(&r, &[("open-first", Fail), ("acyclicity", Fail), ("separability", Fail)]);
}

/// Checks the parts of JSON Schema the report schema uses.
fn validate(v: &Value, schema: &Value, root: &Value, path: &str) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let target = r.trim_start_matches("#/").split('/').fold(root, |s, k| &s[k]);
        return validate(v, target, root, path);
    }
    if let Some(c) = schema.get("const") {
        if v != c {
            return Err(format!("{path}: expected {c}"));
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            return Err(format!("{path}: {v} not in enum"));
        }
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: {v} is not {types:?}"));
        }
    }
    if let (Some(p), Some(s)) = (schema.get("pattern").and_then(Value::as_str), v.as_str()) {
        if !Regex::new(p).unwrap().is_match(s) {
            return Err(format!("{path}: `{s}` does not match {p}"));
        }
    }
    if let Some(obj) = v.as_object() {
        for k in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(k.as_str().unwrap()) {
                return Err(format!("{path}: missing {k}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, sub) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(sub, s, root, &format!("{path}.{k}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => return Err(format!("{path}: unexpected key {k}")),
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            validate(x, items, root, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

#[test]
fn reports_conform_to_schema() {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(dir("schema/report.schema.json")).unwrap()).unwrap();
    let mut texts: Vec<String> = BUILTINS.iter().map(|b| b.text.to_string()).collect();
    texts.push(std::fs::read_to_string(dir("tests/data/all_pass.scn")).unwrap());
    for text in texts {
        let r = report_of(&text);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        validate(&v, &schema, &schema, "$").unwrap();
        assert_eq!(v["schema_version"], divaudit::report::SCHEMA_VERSION);
        for verdict in r.verdicts.iter().filter(|x| x.verdict == Verdict::Fail) {
            assert!(verdict.witness.is_some(), "{} fails without a witness", verdict.audit);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    for b in &BUILTINS {
        let first = report_of(b.text);
        for _ in 0..3 {
            let again = report_of(b.text);
            assert_eq!(first.to_json(), again.to_json());
            assert_eq!(first.to_text(), again.to_text());
        }
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let r = pool.install(|| report_of(b.text));
            assert_eq!(first.to_json(), r.to_json(), "{} differs with {threads} threads", b.name);
        }
    }
}

#[test]
fn caveat_follows_passing_cycle_audits() {
    let all_pass = report_of(&std::fs::read_to_string(dir("tests/data/all_pass.scn")).unwrap());
    assert!(all_pass.verdicts.iter().all(|v| v.verdict == Verdict::Pass));
    assert_eq!(all_pass.caveat.as_deref(), Some(divaudit::report::MENU_FAMILY_CAVEAT));
    assert_eq!(all_pass.exit_code(), 0);
    // no cycle audit passes here
    assert!(builtin_report("open-first-witness").caveat.is_none());
}
