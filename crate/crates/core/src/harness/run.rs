//! Job execution.

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::cache::Cache;
use super::job::{Budgets, JobSpec, OnoKind, Suite, Task};
use super::report::{Report, Verdict};
use crate::abelian::FgAbGroup;
use crate::error::{Error, Result};
use crate::numfield::forms::form_class_group;
use crate::numfield::places::PlaceSet;
use crate::numfield::{Field, FieldSpec, SClassGroup, SUnitGroup};
use crate::torus::{self, TorusSpec};

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

/// Builds a field and installs cached invariants.
fn field(spec: &FieldSpec, cache: &Cache) -> Result<Field> {
    let k = spec.build()?;
    cache.prepare_field(&k)?;
    Ok(k)
}

/// Runs `f`, turning budget and saturation failures into an inconclusive
/// verdict and consistency failures into a failed one. Other errors are input
/// errors and propagate.
fn guarded<T>(name: &str, verdicts: &mut Vec<Verdict>, f: impl FnOnce() -> Result<T>) -> Result<Option<T>> {
    match f() {
        Ok(x) => Ok(Some(x)),
        Err(Error::Budget(m)) | Err(Error::Inconclusive(m)) => {
            verdicts.push(Verdict::inconclusive(name, m));
            Ok(None)
        }
        Err(Error::Inconsistent(m)) => {
            verdicts.push(Verdict::fail(name, m));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn run_job(job: &JobSpec, cache: &Cache) -> Result<Report> {
    let mut report = Report::new(job.task.name(), job.inputs.clone());
    let mut verdicts = Vec::new();
    report.results = match &job.task {
        Task::Field { field: spec, s } => run_field(&field(spec, cache)?, s, &mut verdicts)?,
        Task::TorusClassGroup { torus } => {
            let t = torus_spec(torus, cache)?;
            run_torus(&t, &mut verdicts)?
        }
        Task::RankReport { torus } => {
            let t = torus_spec(torus, cache)?;
            run_rank(&t, &job.budgets, &mut verdicts)?
        }
        Task::Capitulation { base, splitting, s } => {
            let (f, k) = (field(base, cache)?, field(splitting, cache)?);
            run_capitulation(&f, &k, s, "capitulation", &mut verdicts)?
        }
        Task::Ono { kind, base, splitting, s } => {
            let (f, k) = (field(base, cache)?, field(splitting, cache)?);
            run_ono(*kind, &f, &k, s, &job.budgets, "ono", &mut verdicts)?
        }
        Task::VerifySuite { suite, fields, s } => run_suite(*suite, fields, s.as_ref(), &job.budgets, cache, &mut verdicts)?,
    };
    report.verdicts = verdicts;
    Ok(report)
}

fn torus_spec(r: &torus::TorusRecord, cache: &Cache) -> Result<TorusSpec> {
    let t = TorusSpec::from_record(r)?;
    cache.prepare_field(&t.base)?;
    cache.prepare_field(&t.splitting)?;
    Ok(t)
}

#[derive(Serialize)]
struct FieldReport {
    field: String,
    #[serde(with = "crate::bignum")]
    discriminant: num_bigint::BigInt,
    degree: usize,
    signature: (usize, usize),
    class_group: FgAbGroup,
    class_group_generators: Vec<String>,
    torsion_order: u64,
    fundamental_unit: Option<String>,
    s: PlaceSet,
    s_class_group: FgAbGroup,
    s_unit_group: FgAbGroup,
    s_unit_generators: Vec<String>,
}

fn run_field(k: &Field, s: &PlaceSet, verdicts: &mut Vec<Verdict>) -> Result<Value> {
    let cl = k.class_group()?;
    let units = k.units()?;
    let cs = SClassGroup::compute(k, s)?;
    let us = SUnitGroup::compute(k, s)?;
    let places = s.count_in(k)?;
    verdicts.push(Verdict::check("S-unit rank is #S_K - 1", us.rank() + 1 == places, || {
        format!("rank {} with {places} places", us.rank())
    }));
    if k.degree() == 2 && k.is_totally_imaginary() {
        let d = i64::try_from(k.discriminant()).map_err(|_| Error::Input("discriminant too large".into()))?;
        let forms = form_class_group(d)?;
        verdicts.push(Verdict::check("class group agrees with reduced forms", forms.is_isomorphic(cl.group()), || {
            format!("ideals {}, forms {}", cl.group(), forms)
        }));
    }
    Ok(to_json(&FieldReport {
        field: k.name(),
        discriminant: k.discriminant().clone(),
        degree: k.degree(),
        signature: k.signature(),
        class_group: cl.group().clone(),
        class_group_generators: cl.generator_ideals(k).iter().map(|i| i.describe(k)).collect(),
        torsion_order: units.torsion_order(),
        fundamental_unit: units.fundamental().map(|e| k.format(e)),
        s: s.clone(),
        s_class_group: cs.group().clone(),
        s_unit_group: us.group().clone(),
        s_unit_generators: us.generators().iter().map(|g| k.format(g)).collect(),
    }))
}

fn run_torus(t: &TorusSpec, verdicts: &mut Vec<Verdict>) -> Result<Value> {
    let d = torus::decompose_torus(t)?;
    let cg = torus::class_group(t)?;
    for (name, ok) in &cg.checks {
        verdicts.push(Verdict::check(name.clone(), *ok, || "routes disagree".into()));
    }
    let mut local = Vec::new();
    for v in torus::ramified_places(&t.splitting, &t.base)? {
        if t.s.contains_prime(v.p) {
            continue;
        }
        match torus::component_group(t, &v) {
            Ok(c) => local.push(to_json(&c)),
            Err(Error::Precondition(m)) => local.push(json!({ "p": v.p, "skipped": m })),
            Err(e) => return Err(e),
        }
    }
    let bad: Vec<u64> = t.bad_places()?.iter().map(|v| v.p).collect();
    Ok(json!({
        "torus": to_json(&t.record()?),
        "decomposition": to_json(&d),
        "class_group": to_json(&cg),
        "bad_places": bad,
        "local_data": local,
        "r_equivalence": to_json(&torus::r_equivalence_note(t)),
    }))
}

fn run_rank(t: &TorusSpec, budgets: &Budgets, verdicts: &mut Vec<Verdict>) -> Result<Value> {
    let r = torus::rank_report(t)?;
    let mut out = Map::new();
    out.insert("rank".into(), to_json(&r));
    out.insert("discrepancy".into(), Value::Bool(!r.agree));
    out.insert("r_equivalence".into(), to_json(&torus::r_equivalence_note(t)));
    if t.base.degree() == 1 && t.splitting.degree() == 2 {
        let k = torus::ker_phi_check(&t.splitting, &t.s, budgets.ker_phi_height)?;
        verdicts.push(Verdict::check("Ker φ_S search finds only S-units times rationals", k.counterexamples.is_empty(), || {
            k.counterexamples.join(", ")
        }));
        out.insert("ker_phi".into(), to_json(&k));
    }
    Ok(Value::Object(out))
}

fn run_capitulation(f: &Field, k: &Field, s: &PlaceSet, label: &str, verdicts: &mut Vec<Verdict>) -> Result<Value> {
    let Some(r) = guarded(label, verdicts, || torus::capitulation_gm(f, k, s))? else {
        return Ok(Value::Null);
    };
    verdicts.push(Verdict::check(format!("{label}: sequence exact"), r.complex.all_exact, || {
        format!("inexact at positions {:?}", r.complex.failed_positions())
    }));
    verdicts.push(Verdict::check(format!("{label}: order identity"), r.order_identity, || {
        format!("|Ker j| = {}, |H^1| = {}, |Coker j'| = {}", r.kernel.order(), r.h1.order(), r.cokernel_invariant.order())
    }));
    Ok(to_json(&r))
}

fn run_ono(
    kind: OnoKind,
    f: &Field,
    k: &Field,
    s: &PlaceSet,
    budgets: &Budgets,
    label: &str,
    verdicts: &mut Vec<Verdict>,
) -> Result<Value> {
    let r = guarded(label, verdicts, || match kind {
        OnoKind::Flasque => torus::ono_flasque(f, k, s),
        OnoKind::Coflasque => {
            if f.degree() != 1 {
                return Err(Error::Precondition("the coflasque invariant needs base Q".into()));
            }
            torus::ono_coflasque(k, s, budgets.prime_bound)
        }
    })?;
    let Some(r) = r else { return Ok(Value::Null) };
    verdicts.push(Verdict::check(format!("{label}: route A = route B"), r.equal, || {
        format!("{} vs {}", r.route_a, r.route_b)
    }));
    Ok(to_json(&r))
}

fn with_ramified(k: &Field, s: &PlaceSet) -> Result<PlaceSet> {
    Ok(s.union(&torus::ramified_place_set(k, &Field::rational())?))
}

fn run_suite(
    suite: Suite,
    fields: &[i64],
    s: Option<&PlaceSet>,
    budgets: &Budgets,
    cache: &Cache,
    verdicts: &mut Vec<Verdict>,
) -> Result<Value> {
    let q = Field::rational();
    let base_s = s.cloned().unwrap_or_else(PlaceSet::archimedean);
    let mut out = Map::new();
    for &d in fields {
        let k = field(&FieldSpec::Quadratic(d), cache)?;
        let name = k.name();
        let mut per = Map::new();
        match suite {
            Suite::T61 => {
                for sv in [base_s.clone(), with_ramified(&k, &base_s)?] {
                    let label = format!("t61 {name} S={sv}");
                    if let Some(r) = guarded(&label, verdicts, || torus::verify_theorem_6_1(&q, &k, &sv))? {
                        verdicts.push(Verdict::check(label.clone(), r.verdict, || {
                            format!("inexact at {:?}; rank identity {}", r.complex.failed_positions(), r.rank_identity)
                        }));
                        per.insert(sv.to_string(), to_json(&r));
                    }
                }
            }
            Suite::C85 => {
                let sv = with_ramified(&k, &base_s)?;
                let label = format!("c85 {name} S={sv}");
                if let Some(r) = guarded(&label, verdicts, || torus::verify_corollary_8_5(&k, &sv, budgets.prime_bound))? {
                    let v = if !r.certified {
                        Verdict::inconclusive(label, format!("C^N presentation not certified for {sv}"))
                    } else {
                        Verdict::check(label, r.holds, || {
                            format!(
                                "|C_T'| = {}, |C^N| = {}, |W/NO*| = {}, |C_K| = {}",
                                r.c_t.order(),
                                r.c_n.order(),
                                r.w_quotient.order(),
                                r.c_k.order()
                            )
                        })
                    };
                    verdicts.push(v);
                    per.insert(sv.to_string(), to_json(&r));
                }
            }
            Suite::Ono => {
                let sv = with_ramified(&k, &base_s)?;
                let a = run_ono(OnoKind::Flasque, &q, &k, &base_s, budgets, &format!("ono flasque {name} S={base_s}"), verdicts)?;
                let b = run_ono(OnoKind::Coflasque, &q, &k, &sv, budgets, &format!("ono coflasque {name} S={sv}"), verdicts)?;
                per.insert("flasque".into(), a);
                per.insert("coflasque".into(), b);
            }
            Suite::Capitulation => {
                let r = run_capitulation(&q, &k, &base_s, &format!("capitulation {name} S={base_s}"), verdicts)?;
                per.insert(base_s.to_string(), r);
            }
            Suite::Rank => {
                let gm = torus::rank_report(&TorusSpec::gm(&q, &k, &base_s)?)?;
                verdicts.push(Verdict::check(format!("rank G_m {name} S={base_s}"), gm.agree, || {
                    format!("formula {} vs direct {}", gm.formula, gm.direct)
                }));
                let n1 = torus::rank_report(&TorusSpec::norm_one(&q, &k, &base_s)?)?;
                per.insert("gm".into(), to_json(&gm));
                per.insert("norm_one".into(), json!({ "report": to_json(&n1), "discrepancy": !n1.agree }));
            }
        }
        out.insert(name, Value::Object(per));
    }
    Ok(Value::Object(out))
}

#[cfg(test)]
mod tests {
    use super::super::job::parse_job;
    use super::super::report::render_json;
    use super::*;

    fn run(text: &str, dir: &std::path::Path) -> Report {
        run_job(&parse_job(text).unwrap(), &Cache::new(dir)).unwrap()
    }

    #[test]
    fn field_job_reports_class_group() {
        let dir = tempfile::tempdir().unwrap();
        let r = run(r#"{"task":"field","d":-5}"#, dir.path());
        assert_eq!(r.results["class_group"], json!({"invariant_factors": [2], "free_rank": 0}));
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn t61_suite_passes() {
        let dir = tempfile::tempdir().unwrap();
        let r = run(r#"{"task":"verify_suite","suite":"t61","fields":[-4,-5,-23,2]}"#, dir.path());
        assert_eq!(r.verdicts.len(), 8);
        assert_eq!(r.exit_code(), 0, "{:?}", r.verdicts);
    }

    #[test]
    fn rank_report_flags_real_quadratic_norm_one() {
        let dir = tempfile::tempdir().unwrap();
        let r = run(
            r#"{"task":"rank_report","base":"Q","splitting":{"quadratic":2},"lattice":"norm_one","S":["inf"]}"#,
            dir.path(),
        );
        assert_eq!(r.results["discrepancy"], Value::Bool(true));
    }

    #[test]
    fn warm_cache_gives_identical_report() {
        let dir = tempfile::tempdir().unwrap();
        let job = r#"{"task":"capitulation","base":{"quadratic":-5},"splitting":{"biquadratic":[-5,-1]},"S":["inf"]}"#;
        let cold = render_json(&run(job, dir.path()));
        assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0);
        let warm = render_json(&run(job, dir.path()));
        assert_eq!(cold, warm);
    }
}
