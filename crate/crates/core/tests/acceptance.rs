//! One line per acceptance criterion. Criterion 5 is expected to fail for the
//! Weil restriction at tamely ramified places; every other criterion must pass.

use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toruscl::abelian::{hnf, snf, FgAbGroup, IntMatrix};
use toruscl::gmodule::{FiniteGroup, GLattice};
use toruscl::harness::{parse_job, render, run_job, Cache, Format};
use toruscl::numfield::forms::{form_class_group, fundamental_discriminants};
use toruscl::numfield::places::{places_above, LocalType, PlaceSet};
use toruscl::numfield::{squarefree_part, Field, SUnitGroup};
use toruscl::torus::{self, TorusSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn s(text: &str) -> PlaceSet {
    text.parse().unwrap()
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    if t < limit {
        Ok(())
    } else {
        Err(format!("{what} took {t:?}, limit {limit:?}"))
    }
}

fn is_echelon(h: &IntMatrix) -> bool {
    let mut last: Option<usize> = None;
    for i in 0..h.rows() {
        match (0..h.cols()).find(|&j| !h.get(i, j).is_zero()) {
            Some(p) => {
                if last.is_some_and(|l| p <= l) || !h.get(i, p).is_positive() {
                    return false;
                }
                if (0..i).any(|k| h.get(k, p).is_negative() || h.get(k, p) >= h.get(i, p)) {
                    return false;
                }
                last = Some(p);
            }
            None => {
                if (i..h.rows()).any(|k| h.row(k).iter().any(|x| !x.is_zero())) {
                    return false;
                }
                break;
            }
        }
    }
    true
}

fn snf_hnf_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1000;
    for t in 0..n {
        let (r, c) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let rows: Vec<Vec<i64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(-9..=9)).collect()).collect();
        let m = IntMatrix::from_i64(&rows);
        let (d, u, v) = snf(&m);
        if u.mul(&m).mul(&v) != d || !u.is_unimodular() || !v.is_unimodular() {
            return Err(format!("matrix {t}: snf factorization {rows:?}"));
        }
        for i in 0..r {
            for j in 0..c {
                if i != j && !d.get(i, j).is_zero() {
                    return Err(format!("matrix {t}: snf not diagonal"));
                }
            }
        }
        let diag: Vec<BigInt> = (0..r.min(c)).map(|i| d.get(i, i).clone()).collect();
        for w in diag.windows(2) {
            if w[0].is_negative() || !(w[1].is_zero() || (!w[0].is_zero() && w[1].is_multiple_of(&w[0]))) {
                return Err(format!("matrix {t}: snf divisibility {diag:?}"));
            }
        }
        let (h, uh) = hnf(&m);
        if uh.mul(&m) != h || !uh.is_unimodular() || !is_echelon(&h) {
            return Err(format!("matrix {t}: hnf {rows:?}"));
        }
    }
    within(start, Duration::from_secs(10), "snf/hnf")?;
    Ok(format!("{n} random matrices in {:?}", start.elapsed()))
}

fn order(g: &FgAbGroup) -> u64 {
    g.order_u64().expect("finite")
}

fn cohomology_table() -> Outcome {
    let c2 = FiniteGroup::cyclic(2);
    let lattices = [
        ("Z", GLattice::trivial(c2.clone(), 1)),
        ("Z_sign", GLattice::sign(c2.clone()).unwrap()),
        ("Z[C2]", GLattice::regular(&c2)),
    ];
    let expected = [[2u64, 1], [1, 2], [1, 1]];
    for ((name, x), exp) in lattices.iter().zip(expected) {
        let h0 = x.tate(0).unwrap();
        let h1 = x.tate(1).unwrap();
        let hm1 = x.tate(-1).unwrap();
        if [order(&h0), order(&h1)] != exp || !hm1.is_isomorphic(&h1) {
            return Err(format!("{name}: H^0 = {h0}, H^1 = {h1}, H^-1 = {hm1}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 0..100 {
        let counts: Vec<usize> = (0..3).map(|_| rng.gen_range(0..=2)).collect();
        if counts.iter().sum::<usize>() == 0 {
            continue;
        }
        let mut parts = Vec::new();
        for (i, &k) in counts.iter().enumerate() {
            parts.extend(std::iter::repeat_n(lattices[i].1.clone(), k));
        }
        let x = GLattice::direct_sum(&parts).unwrap();
        let n = x.rank();
        let mut p = IntMatrix::identity(n);
        for _ in 0..4 {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i != j {
                let mut e = IntMatrix::identity(n);
                e.set(i, j, BigInt::from(rng.gen_range(-2..=2)));
                p = p.mul(&e);
            }
        }
        let x = x.change_basis(&p).unwrap();
        let (h0, h1) = (order(&x.tate(0).unwrap()), order(&x.tate(1).unwrap()));
        let (mut e0, mut e1) = (1u64, 1u64);
        for (i, &k) in counts.iter().enumerate() {
            e0 *= expected[i][0].pow(k as u32);
            e1 *= expected[i][1].pow(k as u32);
        }
        if h0 * e1 != h1 * e0 || h0 != e0 || h1 != e1 {
            return Err(format!("sum {t} with counts {counts:?}: |H^0| = {h0}, |H^1| = {h1}"));
        }
    }
    Ok("table matches; Herbrand quotient multiplicative on 100 sums".into())
}

fn class_numbers() -> Outcome {
    let start = Instant::now();
    let discs = fundamental_discriminants(500);
    for &disc in &discs {
        let d = i64::try_from(squarefree_part(&disc.into())).unwrap();
        let ideals = Field::quadratic(d).unwrap().class_group().unwrap().group().clone();
        let forms = form_class_group(disc).unwrap();
        if !ideals.is_isomorphic(&forms) {
            return Err(format!("D = {disc}: ideals {ideals}, forms {forms}"));
        }
    }
    for (d, h) in [(-5, 2u64), (-23, 3), (-1, 1)] {
        let got = order(Field::quadratic(d).unwrap().class_group().unwrap().group());
        if got != h {
            return Err(format!("h(Q(sqrt({d}))) = {got}, expected {h}"));
        }
    }
    within(start, Duration::from_secs(60), "class numbers")?;
    Ok(format!("{} discriminants in {:?}", discs.len(), start.elapsed()))
}

fn dirichlet() -> Outcome {
    let q = Field::rational();
    let mut pairs = 0;
    for d in [-1, -2, -3, -5, -7, -23, 2, 3, 5, 6] {
        let k = Field::quadratic(d).unwrap();
        for sv in [s("inf"), s("inf,2,3")] {
            let rq = SUnitGroup::compute(&q, &sv).unwrap().rank();
            let rk = SUnitGroup::compute(&k, &sv).unwrap().rank();
            let (nq, nk) = (sv.count_in(&q).unwrap(), sv.count_in(&k).unwrap());
            if rq + 1 != nq || rk + 1 != nk {
                return Err(format!("d = {d}, S = {sv}: ranks {rq}, {rk} with {nq}, {nk} places"));
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} (K, S) pairs"))
}

/// (torus, p, local type, computed cokernel, predicted cokernel).
type Mismatch = (String, u64, LocalType, String, String);

/// Places where the local cokernel differs from `(Z/e)^{d_v}`.
fn local_cokernel_mismatches() -> Vec<Mismatch> {
    let q = Field::rational();
    let sv = s("inf");
    let mut out = Vec::new();
    for d in [-1, 2, -2, 3, -3, -5, -23] {
        let k = Field::quadratic(d).unwrap();
        let tori = [
            ("G_m", TorusSpec::gm(&q, &k, &sv).unwrap()),
            ("R_K/Q(G_m)", TorusSpec::weil_restriction(&q, &k, &sv).unwrap()),
            ("norm-one", TorusSpec::norm_one(&q, &k, &sv).unwrap()),
        ];
        for p in [2u64, 3, 5, 7, 11, 13, 23] {
            for v in places_above(&k, &q, p).unwrap() {
                if v.local_type == LocalType::RamifiedWild {
                    continue;
                }
                for (name, t) in &tori {
                    let c = torus::component_group(t, &v).unwrap();
                    if !c.matches_prediction {
                        out.push((
                            format!("{name} over {}", k.name()),
                            p,
                            v.local_type,
                            c.delta_cokernel.to_string(),
                            c.predicted_cokernel.to_string(),
                        ));
                    }
                }
            }
        }
    }
    out
}

fn local_cokernels() -> Outcome {
    let bad = local_cokernel_mismatches();
    if bad.is_empty() {
        return Ok("all tame places match".into());
    }
    let desc: Vec<String> = bad.iter().map(|(t, p, _, got, want)| format!("{t} at {p}: {got} vs {want}")).collect();
    Err(desc.join("; "))
}

fn theorem_6_1() -> Outcome {
    let start = Instant::now();
    let q = Field::rational();
    let mut n = 0;
    for d in [-1, -5, -23, 2, 3] {
        let k = Field::quadratic(d).unwrap();
        for sv in [s("inf"), torus::ramified_place_set(&k, &q).unwrap()] {
            let r = torus::verify_theorem_6_1(&q, &k, &sv).map_err(|e| format!("d = {d}, S = {sv}: {e}"))?;
            if !r.verdict {
                return Err(format!("d = {d}, S = {sv}: failed at {:?}", r.complex.failed_positions()));
            }
            n += 1;
        }
    }
    within(start, Duration::from_secs(120), "flasque sequence suite")?;
    Ok(format!("{n} instances exact in {:?}", start.elapsed()))
}

fn corollary_8_5() -> Outcome {
    let q = Field::rational();
    for d in [-1, -5, -23, 2, 3] {
        let k = Field::quadratic(d).unwrap();
        let sv = torus::ramified_place_set(&k, &q).unwrap();
        let r = torus::verify_corollary_8_5(&k, &sv, None).map_err(|e| format!("d = {d}: {e}"))?;
        if !r.certified {
            return Err(format!("d = {d}: inconclusive, presentation not certified"));
        }
        if !r.order_identity || !r.holds {
            return Err(format!(
                "d = {d}: |C_T'| = {}, |C^N| = {}, |W/NO*| = {}, |C_K| = {}",
                r.c_t.order(),
                r.c_n.order(),
                r.w_quotient.order(),
                r.c_k.order()
            ));
        }
    }
    Ok("order identity exact on 5 fields".into())
}

fn ono() -> Outcome {
    let q = Field::rational();
    let (mut flasque, mut coflasque) = (0, 0);
    for d in [-1, -5, -23, 2, 3] {
        let k = Field::quadratic(d).unwrap();
        let a = torus::ono_flasque(&q, &k, &s("inf")).map_err(|e| format!("flasque d = {d}: {e}"))?;
        if !a.equal {
            return Err(format!("flasque d = {d}: {} vs {}", a.route_a, a.route_b));
        }
        flasque += 1;
        let sv = torus::ramified_place_set(&k, &q).unwrap();
        let b = torus::ono_coflasque(&k, &sv, None).map_err(|e| format!("coflasque d = {d}: {e}"))?;
        if !b.equal {
            return Err(format!("coflasque d = {d}: {} vs {}", b.route_a, b.route_b));
        }
        coflasque += 1;
    }
    Ok(format!("flasque on {flasque} fields, coflasque on {coflasque} fields"))
}

fn capitulation() -> Outcome {
    let start = Instant::now();
    let f = Field::quadratic(-5).unwrap();
    let k = Field::biquadratic(-5, -1).unwrap();
    let r = torus::capitulation_gm(&f, &k, &s("inf")).map_err(|e| e.to_string())?;
    if !r.kernel.is_isomorphic(&FgAbGroup::cyclic(2)) {
        return Err(format!("Ker j = {}", r.kernel));
    }
    if r.capitulation_witnesses.is_empty() {
        return Err("no principal generator found".into());
    }
    if !r.order_identity || !r.complex.all_exact {
        return Err("four-term order identity or exactness fails".into());
    }
    within(start, Duration::from_secs(300), "capitulation")?;
    Ok(format!("Ker j = Z/2, generator {}", r.capitulation_witnesses[0]))
}

fn rank_discrepancy() -> Outcome {
    let q = Field::rational();
    let k = Field::quadratic(2).unwrap();
    let r = torus::rank_report(&TorusSpec::norm_one(&q, &k, &s("inf")).unwrap()).map_err(|e| e.to_string())?;
    if r.agree || r.formula != 0 || r.direct != 1 {
        return Err(format!("formula {}, direct {}, flagged {}", r.formula, r.direct, !r.agree));
    }
    Ok("flagged: formula 0, direct 1".into())
}

fn determinism() -> Outcome {
    let jobs = [
        r#"{"format_version":1,"task":"field","d":-23}"#,
        r#"{"format_version":1,"task":"capitulation","base":{"quadratic":-5},"splitting":{"biquadratic":[-5,-1]},"S":["inf"]}"#,
        r#"{"format_version":1,"task":"verify_suite","suite":"c85","fields":[-4,-5,8]}"#,
        r#"{"format_version":1,"task":"rank_report","base":"Q","splitting":{"quadratic":2},"lattice":"norm_one","S":["inf"]}"#,
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache = Cache::new(dir.path());
    for text in jobs {
        let job = parse_job(text).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for _ in 0..3 {
            for format in [Format::Json, Format::Text] {
                outputs.push(render(&run_job(&job, &cache).map_err(|e| e.to_string())?, format));
            }
        }
        let fresh = tempfile::tempdir().map_err(|e| e.to_string())?;
        outputs.push(render(&run_job(&job, &Cache::new(fresh.path())).map_err(|e| e.to_string())?, Format::Json));
        outputs.push(render(&run_job(&job, &Cache::new(fresh.path())).map_err(|e| e.to_string())?, Format::Text));
        let (cold, warm) = (&outputs[outputs.len() - 2], &outputs[outputs.len() - 1]);
        let json_same = outputs.iter().step_by(2).all(|o| o == &outputs[0]);
        let text_same = outputs.iter().skip(1).step_by(2).all(|o| o == &outputs[1]);
        if !json_same || !text_same || cold != &outputs[0] || warm != &outputs[1] {
            return Err(format!("reports differ for {text}"));
        }
    }
    Ok(format!("{} jobs byte-identical across cold, warm and repeated runs", jobs.len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("snf/hnf oracle", snf_hnf_oracle),
        ("C2 cohomology table", cohomology_table),
        ("class-number oracle", class_numbers),
        ("Dirichlet specialization", dirichlet),
        ("local cokernel (Z/e)^d", local_cokernels),
        ("flasque sequence suite", theorem_6_1),
        ("norm-torus order identity", corollary_8_5),
        ("Ono two-route equality", ono),
        ("capitulation in Q(sqrt(-5), i)", capitulation),
        ("rank discrepancy flag", rank_discrepancy),
        ("harness determinism", determinism),
    ];
    // println! would be captured by the test harness
    let mut out = std::io::stdout();
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let line = match f() {
            Ok(detail) => format!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(witness) => {
                failed.push(i + 1);
                format!("criterion {:>2} FAIL  {name}: {witness}", i + 1)
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    // The Weil restriction has delta cokernel 0 at tame ramified places, not Z/2.
    let mismatches = local_cokernel_mismatches();
    assert!(!mismatches.is_empty());
    for (t, p, ty, _, _) in &mismatches {
        assert!(t.starts_with("R_K/Q") && *ty == LocalType::RamifiedTame, "unexpected mismatch: {t} at {p}");
    }
    assert_eq!(failed, vec![5], "only criterion 5 may fail");
}
