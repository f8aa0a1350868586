//! Reports: input echo, computed data, and one verdict per check.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::job::Format;
use super::FORMAT_VERSION;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail { witness: String },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    #[serde(flatten)]
    pub status: Status,
}

impl Verdict {
    pub fn pass(name: impl Into<String>) -> Self {
        Verdict { name: name.into(), status: Status::Pass }
    }

    pub fn fail(name: impl Into<String>, witness: impl Into<String>) -> Self {
        Verdict { name: name.into(), status: Status::Fail { witness: witness.into() } }
    }

    pub fn inconclusive(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Verdict { name: name.into(), status: Status::Inconclusive { reason: reason.into() } }
    }

    /// Pass when `ok`, otherwise fail with `witness`.
    pub fn check(name: impl Into<String>, ok: bool, witness: impl FnOnce() -> String) -> Self {
        if ok {
            Verdict::pass(name)
        } else {
            Verdict::fail(name, witness())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub task: String,
    pub inputs: Value,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    /// Wall-clock milliseconds; only present when requested, so that reports
    /// stay byte-identical across runs by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Report {
    pub fn new(task: &str, inputs: Value) -> Self {
        Report { format_version: FORMAT_VERSION, task: task.into(), inputs, results: Value::Null, verdicts: vec![], timing_ms: None }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(&self.verdicts)
    }
}

/// 0 when everything passed, 2 on any failure, 3 on any inconclusive verdict
/// without failures.
pub fn exit_code(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().any(|v| matches!(v.status, Status::Fail { .. })) {
        2
    } else if verdicts.iter().any(|v| matches!(v.status, Status::Inconclusive { .. })) {
        3
    } else {
        0
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn render_json(r: &Report) -> String {
    // serde_json maps are ordered by key, so going through Value sorts every object
    let v = serde_json::to_value(r).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

/// `Z/d₁ ⊕ … ⊕ Z^r` for a serialized group.
fn group_string(v: &Value) -> Option<String> {
    let obj = v.as_object()?;
    if obj.len() != 2 {
        return None;
    }
    let factors = obj.get("invariant_factors")?.as_array()?;
    let rank = obj.get("free_rank")?.as_u64()?;
    let mut parts: Vec<String> = factors.iter().map(|d| format!("Z/{}", scalar(d))).collect();
    match rank {
        0 => {}
        1 => parts.push("Z".into()),
        r => parts.push(format!("Z^{r}")),
    }
    Some(if parts.is_empty() { "0".into() } else { parts.join(" ⊕ ") })
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_value(out: &mut String, key: &str, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    if let Some(g) = group_string(v) {
        let _ = writeln!(out, "{pad}{key}: {g}");
        return;
    }
    match v {
        Value::Object(m) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (k, x) in m {
                render_value(out, k, x, indent + 1);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            let _ = writeln!(out, "{pad}{key}: [{}]", items.join(", "));
        }
        Value::Array(a) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (i, x) in a.iter().enumerate() {
                render_value(out, &format!("[{i}]"), x, indent + 1);
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{key}: {}", scalar(other));
        }
    }
}

/// Indented key/value listing with groups in invariant-factor form, then a
/// verdict table.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "task: {}", r.task);
    render_value(&mut out, "inputs", &r.inputs, 0);
    render_value(&mut out, "results", &r.results, 0);
    let _ = writeln!(out, "verdicts:");
    let width = r.verdicts.iter().map(|v| v.name.chars().count()).max().unwrap_or(0);
    for v in &r.verdicts {
        let pad = " ".repeat(width - v.name.chars().count());
        let _ = match &v.status {
            Status::Pass => writeln!(out, "  {}{pad}  PASS", v.name),
            Status::Fail { witness } => writeln!(out, "  {}{pad}  FAIL  {witness}", v.name),
            Status::Inconclusive { reason } => writeln!(out, "  {}{pad}  INCONCLUSIVE  {reason}", v.name),
        };
    }
    if let Some(t) = r.timing_ms {
        let _ = writeln!(out, "timing_ms: {t}");
    }
    out
}

pub fn render(r: &Report, format: Format) -> String {
    match format {
        Format::Json => render_json(r),
        Format::Text => render_text(r),
    }
}

pub fn emit_report(r: &Report, format: Format, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render(r, format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn status() -> impl Strategy<Value = Status> {
        prop_oneof![
            Just(Status::Pass),
            "[a-z]{0,5}".prop_map(|w| Status::Fail { witness: w }),
            "[a-z]{0,5}".prop_map(|r| Status::Inconclusive { reason: r }),
        ]
    }

    proptest! {
        #[test]
        fn exit_code_contract(statuses in prop::collection::vec(status(), 0..12)) {
            let verdicts: Vec<Verdict> =
                statuses.iter().enumerate().map(|(i, s)| Verdict { name: format!("v{i}"), status: s.clone() }).collect();
            let any_fail = statuses.iter().any(|s| matches!(s, Status::Fail { .. }));
            let any_inc = statuses.iter().any(|s| matches!(s, Status::Inconclusive { .. }));
            let expected = if any_fail { 2 } else if any_inc { 3 } else { 0 };
            prop_assert_eq!(exit_code(&verdicts), expected);
        }
    }

    #[test]
    fn empty_report_is_valid() {
        let r = Report::new("verify_suite", Value::Null);
        assert_eq!(r.exit_code(), 0);
        let back: Report = serde_json::from_str(&render_json(&r)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn fail_witness_is_printed() {
        let mut r = Report::new("x", Value::Null);
        r.verdicts.push(Verdict::fail("order identity", "3 != 1"));
        assert_eq!(r.exit_code(), 2);
        assert!(render_text(&r).contains("FAIL  3 != 1"));
        r.verdicts = vec![Verdict::pass("a"), Verdict::inconclusive("b", "bound")];
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn keys_are_sorted_and_groups_render() {
        let mut r = Report::new("field", serde_json::json!({"z": 1, "a": 2}));
        r.results = serde_json::json!({"class_group": {"invariant_factors": [2, 2], "free_rank": 1}});
        let json = render_json(&r);
        assert!(json.find("\"a\"").unwrap() < json.find("\"z\"").unwrap());
        assert!(render_text(&r).contains("class_group: Z/2 ⊕ Z/2 ⊕ Z"));
    }
}
