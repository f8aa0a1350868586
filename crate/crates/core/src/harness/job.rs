//! Job files: UTF-8 JSON objects with a `task` and task-specific parameters.
//!
//! ```json
//! {"task": "field", "d": -5}
//! {"task": "torus_class_group", "base": "Q", "splitting": {"quadratic": -5},
//!  "lattice": "norm_one", "S": ["inf", 2, 5]}
//! ```
//!
//! Validation collects every violation before giving up.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::FORMAT_VERSION;
use crate::gmodule::LatticeRecord;
use crate::numfield::places::PlaceSet;
use crate::numfield::{is_squarefree, FieldSpec};
use crate::torus::{TorusRecord, TorusSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadError {
    Io(String),
    Parse(String),
    Schema(Vec<String>),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(e) => write!(f, "cannot read job: {e}"),
            LoadError::Parse(e) => write!(f, "job is not valid JSON: {e}"),
            LoadError::Schema(v) => {
                writeln!(f, "job has {} schema violation(s):", v.len())?;
                for x in v {
                    writeln!(f, "  - {x}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    T61,
    C85,
    Ono,
    Capitulation,
    Rank,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("unknown suite '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnoKind {
    Flasque,
    Coflasque,
}

/// Lattice given by name or in full.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum LatticeInput {
    Named(String),
    Full(LatticeRecord),
}

#[derive(Clone, Debug)]
pub enum Task {
    Field { field: FieldSpec, s: PlaceSet },
    TorusClassGroup { torus: TorusRecord },
    Capitulation { base: FieldSpec, splitting: FieldSpec, s: PlaceSet },
    Ono { kind: OnoKind, base: FieldSpec, splitting: FieldSpec, s: PlaceSet },
    VerifySuite { suite: Suite, fields: Vec<i64>, s: Option<PlaceSet> },
    RankReport { torus: TorusRecord },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Field { .. } => "field",
            Task::TorusClassGroup { .. } => "torus_class_group",
            Task::Capitulation { .. } => "capitulation",
            Task::Ono { .. } => "ono",
            Task::VerifySuite { .. } => "verify_suite",
            Task::RankReport { .. } => "rank_report",
        }
    }
}

/// Enumeration bounds; echoed in every report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Prime bound for the `C^N` and `Sha_N` generating sets (default: 100 or the
    /// class-group generation bound, whichever is larger).
    #[serde(default)]
    pub prime_bound: Option<u64>,
    /// Coefficient bound for the `Ker φ_S` search.
    #[serde(default = "default_height")]
    pub ker_phi_height: i64,
}

fn default_height() -> i64 {
    12
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { prime_bound: None, ker_phi_height: default_height() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug)]
pub struct JobSpec {
    pub task: Task,
    pub budgets: Budgets,
    pub output: Option<OutputSpec>,
    /// The job as read, minus `output`; echoed into reports.
    pub inputs: Value,
}

pub fn load_job(path: &Path) -> Result<JobSpec, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
    parse_job(&text)
}

pub fn parse_job(text: &str) -> Result<JobSpec, LoadError> {
    let value: Value = serde_json::from_str(text).map_err(|e| LoadError::Parse(e.to_string()))?;
    validate(value)
}

struct Checker<'a> {
    obj: &'a Map<String, Value>,
    errors: Vec<String>,
}

impl<'a> Checker<'a> {
    fn get<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let v = self.obj.get(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(x) => Some(x),
            Err(e) => {
                self.errors.push(format!("\"{key}\": {e}"));
                None
            }
        }
    }

    fn require<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        if !self.obj.contains_key(key) {
            self.errors.push(format!("missing required key \"{key}\""));
            return None;
        }
        self.get(key)
    }

    fn field(&mut self, key: &str) -> Option<FieldSpec> {
        let f: FieldSpec = self.require(key)?;
        match f.build() {
            Ok(_) => Some(f),
            Err(e) => {
                self.errors.push(format!("\"{key}\": {}", message(&e)));
                None
            }
        }
    }

    fn allow_only(&mut self, keys: &[&str]) {
        let mut unknown: Vec<&String> = self.obj.keys().filter(|k| !keys.contains(&k.as_str())).collect();
        unknown.sort();
        for k in unknown {
            self.errors.push(format!("unknown key \"{k}\""));
        }
    }

    fn torus(&mut self) -> Option<TorusRecord> {
        let base = self.field("base");
        let splitting = self.field("splitting");
        let s: Option<PlaceSet> = self.require("S");
        let lattice: Option<LatticeInput> = self.require("lattice");
        let (base, splitting, s, lattice) = (base?, splitting?, s?, lattice?);
        let record = match lattice {
            LatticeInput::Full(l) => TorusRecord { base, splitting, lattice: l, s },
            LatticeInput::Named(name) => {
                let (f, k) = (base.build().ok()?, splitting.build().ok()?);
                let t = match name.as_str() {
                    "gm" => TorusSpec::gm(&f, &k, &s),
                    "norm_one" => TorusSpec::norm_one(&f, &k, &s),
                    "weil_restriction" => TorusSpec::weil_restriction(&f, &k, &s),
                    other => {
                        self.errors.push(format!(
                            "\"lattice\": unknown name '{other}' (expected gm, norm_one, weil_restriction or a lattice record)"
                        ));
                        return None;
                    }
                };
                match t.and_then(|t| t.record()) {
                    Ok(r) => r,
                    Err(e) => {
                        self.errors.push(format!("\"lattice\": {}", message(&e)));
                        return None;
                    }
                }
            }
        };
        if let Err(e) = TorusSpec::from_record(&record) {
            self.errors.push(format!("torus: {}", message(&e)));
            return None;
        }
        Some(record)
    }
}

/// The bare message of a library error, without its category prefix.
fn message(e: &crate::Error) -> String {
    use crate::Error::*;
    match e {
        Input(m) | Unsupported(m) | Budget(m) | Precondition(m) | Inconclusive(m) | Inconsistent(m) => m.clone(),
    }
}

fn validate(value: Value) -> Result<JobSpec, LoadError> {
    let Value::Object(obj) = &value else {
        return Err(LoadError::Schema(vec!["job must be a JSON object".into()]));
    };
    let mut c = Checker { obj, errors: Vec::new() };
    if let Some(v) = c.get::<u32>("format_version") {
        if v != FORMAT_VERSION {
            c.errors.push(format!("format_version {v} is not supported (expected {FORMAT_VERSION})"));
        }
    }
    let budgets: Budgets = c.get("budgets").unwrap_or_default();
    let output: Option<OutputSpec> = c.get("output");
    let common = ["task", "format_version", "budgets", "output"];
    let with = |extra: &[&'static str]| -> Vec<&'static str> { common.iter().chain(extra).copied().collect() };
    let task_name: Option<String> = c.require("task");
    let task = match task_name.as_deref() {
        Some("field") => {
            c.allow_only(&with(&["d", "field", "S"]));
            let field = match (obj.contains_key("d"), obj.contains_key("field")) {
                (true, false) => match c.get::<i64>("d") {
                    Some(d) if d != 1 && is_squarefree(d) => Some(FieldSpec::Quadratic(d)),
                    Some(d) => {
                        c.errors.push(format!("\"d\": d must be squarefree and different from 1, got {d}"));
                        None
                    }
                    None => None,
                },
                (false, true) => c.field("field"),
                (true, true) => {
                    c.errors.push("give either \"d\" or \"field\", not both".into());
                    None
                }
                (false, false) => {
                    c.errors.push("missing required key \"d\" (or \"field\")".into());
                    None
                }
            };
            let s = if obj.contains_key("S") { c.get("S") } else { Some(PlaceSet::archimedean()) };
            field.zip(s).map(|(field, s)| Task::Field { field, s })
        }
        Some("torus_class_group") => {
            c.allow_only(&with(&["base", "splitting", "lattice", "S"]));
            c.torus().map(|torus| Task::TorusClassGroup { torus })
        }
        Some("rank_report") => {
            c.allow_only(&with(&["base", "splitting", "lattice", "S"]));
            c.torus().map(|torus| Task::RankReport { torus })
        }
        Some("capitulation") => {
            c.allow_only(&with(&["base", "splitting", "S"]));
            let (base, splitting, s) = (c.field("base"), c.field("splitting"), c.require("S"));
            match (base, splitting, s) {
                (Some(base), Some(splitting), Some(s)) => Some(Task::Capitulation { base, splitting, s }),
                _ => None,
            }
        }
        Some("ono") => {
            c.allow_only(&with(&["kind", "base", "splitting", "S"]));
            let kind = c.require("kind");
            let (base, splitting, s) = (c.field("base"), c.field("splitting"), c.require("S"));
            match (kind, base, splitting, s) {
                (Some(kind), Some(base), Some(splitting), Some(s)) => Some(Task::Ono { kind, base, splitting, s }),
                _ => None,
            }
        }
        Some("verify_suite") => {
            c.allow_only(&with(&["suite", "fields", "S"]));
            let suite = c.require("suite");
            let fields: Option<Vec<i64>> = c.require("fields");
            let fields = fields.map(|fs| {
                let mut out = Vec::new();
                for f in fs {
                    match suite_field(f) {
                        Some(d) => out.push(d),
                        None => c.errors.push(format!(
                            "\"fields\": {f} is neither a squarefree d ≠ 1 nor a fundamental discriminant"
                        )),
                    }
                }
                out
            });
            let s = c.get("S");
            match (suite, fields) {
                (Some(suite), Some(fields)) => Some(Task::VerifySuite { suite, fields, s }),
                _ => None,
            }
        }
        Some(other) => {
            c.errors.push(format!(
                "unknown task '{other}' (expected field, torus_class_group, capitulation, ono, verify_suite, rank_report)"
            ));
            None
        }
        None => None,
    };
    match task {
        Some(task) if c.errors.is_empty() => {
            let mut inputs = obj.clone();
            inputs.remove("output");
            inputs.insert("budgets".into(), serde_json::to_value(&budgets).expect("budgets serialize"));
            Ok(JobSpec { task, budgets, output, inputs: Value::Object(inputs) })
        }
        _ => Err(LoadError::Schema(c.errors)),
    }
}

/// Radicand for a suite entry: a squarefree `d ≠ 1`, or the field of a
/// fundamental discriminant such as `-4`.
pub fn suite_field(f: i64) -> Option<i64> {
    if f != 0 && f != 1 && is_squarefree(f) {
        return Some(f);
    }
    if f.rem_euclid(4) == 0 {
        let m = f / 4;
        if matches!(m.rem_euclid(4), 2 | 3) && m != 1 && is_squarefree(m) {
            return Some(m);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_errors(text: &str) -> Vec<String> {
        match parse_job(text) {
            Err(LoadError::Schema(v)) => v,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_field_job() {
        let j = parse_job(r#"{"task":"field","d":-5}"#).unwrap();
        assert!(matches!(j.task, Task::Field { field: FieldSpec::Quadratic(-5), .. }));
    }

    #[test]
    fn missing_s_is_named() {
        let e = schema_errors(r#"{"task":"torus_class_group","base":"Q","splitting":{"quadratic":-5},"lattice":"gm"}"#);
        assert!(e.iter().any(|m| m.contains("\"S\"")), "{e:?}");
    }

    #[test]
    fn non_squarefree_d() {
        let e = schema_errors(r#"{"task":"field","d":12}"#);
        assert!(e.iter().any(|m| m.contains("d must be squarefree")), "{e:?}");
    }

    #[test]
    fn every_violation_is_listed() {
        let e = schema_errors(r#"{"task":"ono","kind":"sideways","base":"Q","splitting":{"quadratic":4},"extra":1}"#);
        assert_eq!(e.len(), 4, "{e:?}");
    }

    #[test]
    fn s_needs_inf() {
        let e = schema_errors(r#"{"task":"capitulation","base":"Q","splitting":{"quadratic":-1},"S":[2]}"#);
        assert!(e.iter().any(|m| m.contains("inf")), "{e:?}");
    }

    #[test]
    fn suite_entries() {
        assert_eq!(suite_field(-4), Some(-1));
        assert_eq!(suite_field(-5), Some(-5));
        assert_eq!(suite_field(8), Some(2));
        assert_eq!(suite_field(12), Some(3));
        assert_eq!(suite_field(9), None);
    }
}
