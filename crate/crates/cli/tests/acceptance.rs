//! Acceptance criteria, one pass/fail line each.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bidarboux_cli::{darbouxify, factorize, load_chart, obata, structures, verify};
use bidarboux_core::chartfile::ChartFile;
use bidarboux_core::homotopy::{TriGradedAlgebra, DEFAULT_DEGREE};
use bidarboux_core::liegroup::{self, Mat2};
use bidarboux_core::parahyper::{self, constant_components};
use bidarboux_core::superalgebra::{det_poly, invert_matrix, mat_mul, q, qi};
use bidarboux_core::triplectic::{
    apply_f3, canonical_report, check_differential_factorization, corpus, default_base_point,
    extract_ef, factorize as factorize_e, to_rational, F3Generator, TriplecticChart,
};
use bidarboux_core::{SuperPoly, VarId, Q};

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn fixture_chart(name: &str) -> TriplecticChart {
    load_chart(&fixture(name))
        .expect("fixture loads")
        .triplectic()
        .expect("triplectic fixture")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn body_point(chart: &TriplecticChart) -> Option<Vec<(VarId, Q)>> {
    default_base_point(&chart.base(), &extract_ef(chart).ok()?.e).ok()
}

fn counterexample() -> Outcome {
    let start = Instant::now();
    let chart = fixture_chart("sum.json");
    let point = body_point(&chart);
    ensure(verify(&chart, point.as_deref()).passed(), "verify fails")?;
    let fac = factorize(&chart, point.as_deref());
    ensure(
        fac.check_named("factorization").is_some_and(|c| !c.passed),
        "factorization succeeds",
    )?;
    ensure(
        fac.check_named("differential-factorization")
            .is_some_and(|c| !c.passed),
        "differential condition holds",
    )?;
    let ob = obata(&chart);
    let curvature = ob
        .check_named("obata-curvature")
        .ok_or("no curvature report")?;
    ensure(!curvature.passed, "curvature vanishes")?;
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!(
        "{} nonzero curvature components, {t:.2?}",
        curvature.violations.len()
    ))
}

fn golden_structures() -> Outcome {
    let chart = fixture_chart("canonical.json");
    let (_, [sigma, p, j]) = structures(&chart).map_err(|e| e.to_string())?;
    let expect = |rows: [[i64; 2]; 2]| {
        rows.iter()
            .map(|r| r.iter().map(|&x| qi(x)).collect())
            .collect::<Vec<Vec<Q>>>()
    };
    ensure(
        constant_components(&sigma) == Some(expect([[1, 0], [0, -1]])),
        "Sigma differs",
    )?;
    ensure(
        constant_components(&p) == Some(expect([[0, 1], [1, 0]])),
        "P differs",
    )?;
    ensure(
        constant_components(&j) == Some(expect([[0, -1], [1, 0]])),
        "J differs",
    )?;
    ensure(j.after(&j).is_identity_times(-1), "J^2 != -Id")?;
    ensure(
        p.after(&p).is_identity_times(1) && sigma.after(&sigma).is_identity_times(1),
        "P^2 or Sigma^2 != Id",
    )?;
    ensure(
        sigma.after(&p).plus(&p.after(&sigma)).is_identity_times(0),
        "Sigma and P do not anticommute",
    )?;
    Ok("Sigma, P, J match; J^2=-Id, {Sigma,P}=0, P^2=Sigma^2=Id".into())
}

fn pipeline_round_trip() -> Outcome {
    let start = Instant::now();
    let entries = corpus::factorizable();
    ensure(entries.len() >= 10, "corpus has fewer than 10 charts")?;
    let mut ns = Vec::new();
    let mut eps = Vec::new();
    let (mut with_f, mut exact) = (0, 0);
    for e in &entries {
        let ef = extract_ef(&e.chart).map_err(|err| format!("{}: {err}", e.name))?;
        let max_deg =
            ef.e.iter()
                .flatten()
                .filter_map(|x| x.degree())
                .max()
                .unwrap_or(0);
        ensure(
            e.chart.truncation.is_none() && max_deg <= 3,
            format!("{}: E not polynomial of degree <= 3", e.name),
        )?;
        if ef.f.iter().flatten().any(|x| !x.is_zero()) {
            with_f += 1;
        }
        ns.push(e.chart.n());
        eps.push(e.chart.epsilon());
        let out = darbouxify(
            &e.chart,
            None,
            body_point(&e.chart).as_deref(),
            DEFAULT_DEGREE,
        );
        ensure(
            out.report.passed(),
            format!("{}: {:?}", e.name, out.report.error),
        )?;
        let file = out.chart.ok_or(format!("{}: no output chart", e.name))?;
        let result = ChartFile::from_json(&file.to_json())
            .and_then(|f| f.load())
            .and_then(|l| l.triplectic())
            .map_err(|err| format!("{}: {err}", e.name))?;
        let report = canonical_report(&result, None);
        ensure(
            report.passed,
            format!("{}: {:?}", e.name, report.violations.first()),
        )?;
        if result.truncation.is_none() {
            exact += 1;
        }
    }
    for n in 1..=3 {
        ensure(ns.contains(&n), format!("no chart with n={n}"))?;
    }
    ensure(
        eps.contains(&0) && eps.contains(&1),
        "missing a bracket parity",
    )?;
    ensure(
        with_f > 0 && with_f < entries.len(),
        "F not both zero and nonzero",
    )?;
    let t = within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{} charts canonical ({exact} without truncation), {t:.2?}",
        entries.len()
    ))
}

fn equivalence_triangle() -> Outcome {
    let all = corpus::all();
    let mut disagreements = Vec::new();
    for e in &all {
        let base = e.chart.base();
        let m = extract_ef(&e.chart).map_err(|err| err.to_string())?.e;
        let point = body_point(&e.chart).ok_or(format!("{}: no base point", e.name))?;
        let fac = factorize_e(&base, &m, &point)
            .map_err(|err| err.to_string())?
            .is_some();
        let diff = check_differential_factorization(&base, &m).map_err(|err| err.to_string())?;
        let flat = parahyper::obata_connection(&base, &to_rational(&m))
            .map_err(|err| err.to_string())?
            .curvature()
            .is_flat();
        if fac != diff || diff != flat || fac != e.factorizable {
            disagreements.push(e.name.clone());
        }
    }
    ensure(
        disagreements.is_empty(),
        format!("disagreements: {disagreements:?}"),
    )?;
    Ok(format!("{} charts, zero disagreements", all.len()))
}

fn random_monomial(a: &TriGradedAlgebra, rng: &mut ChaCha8Rng, max_deg: u32) -> SuperPoly {
    let mut m = SuperPoly::one(a.table());
    for _ in 0..rng.gen_range(0..=max_deg) {
        m = &m * &a.var(rng.gen_range(1..=3), rng.gen_range(0..a.n()));
    }
    m
}

fn random_parities(rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..rng.gen_range(1..=3))
        .map(|_| rng.gen_range(0..2))
        .collect()
}

fn homotopy_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut forms, mut blocks) = (0, 0);
    while forms < 100 {
        let a = TriGradedAlgebra::new(&random_parities(&mut rng)).map_err(|e| e.to_string())?;
        let mut rho = SuperPoly::zero(a.table());
        for _ in 0..4 {
            rho = &rho + &random_monomial(&a, &mut rng, 6).scale(&qi(rng.gen_range(-3..=3)));
        }
        let omega = a.d_op(&rho);
        if omega.is_zero() {
            continue;
        }
        let h = a.homotopy(&omega).map_err(|e| format!("{omega}: {e}"))?;
        ensure(
            a.d_op(&h.eta) == omega,
            format!("d eta != omega for {omega}"),
        )?;
        for b in &h.blocks {
            ensure(
                b.determinant != "0",
                format!("singular block ({}, {})", b.n12, b.n3),
            )?;
        }
        blocks += h.blocks.len();
        forms += 1;
    }
    let mut spots = 0;
    for parities in [vec![0u8, 0], vec![0, 1], vec![1, 1, 0]] {
        let a = TriGradedAlgebra::new(&parities).map_err(|e| e.to_string())?;
        for (n1, n2, n3) in [(0, 0, 2), (1, 0, 2), (2, 1, 2), (1, 1, 3), (0, 2, 3)] {
            for h in a.highest_weights(n1, n2, n3) {
                let half_ell = q((n1 + n2 + 2 * n3) as i64, 2);
                let spin = q(n1 as i64 - n2 as i64, 2);
                let expected = &half_ell * (&half_ell - qi(1)) - &spin * (&spin + qi(1));
                let bound = qi(((n1 + n2 + n3) * (n3 - 1)) as i64);
                ensure(
                    a.lambda(&h.vector) == h.vector.scale(&expected),
                    format!("eigenvalue at ({n1},{n2},{n3})"),
                )?;
                ensure(
                    bound > qi(0) && expected >= bound,
                    format!("bound at ({n1},{n2},{n3})"),
                )?;
                spots += 1;
            }
        }
    }
    Ok(format!(
        "{forms} exact forms, {blocks} invertible blocks, {spots} highest weights"
    ))
}

fn operator_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut relations = 0;
    for _ in 0..50 {
        let a = TriGradedAlgebra::new(&random_parities(&mut rng)).map_err(|e| e.to_string())?;
        let w = random_monomial(&a, &mut rng, 5);
        let residuals = a.relation_residuals(&w);
        relations = residuals.len();
        for (name, r) in residuals {
            ensure(r.is_zero(), format!("{name} on {w}: {r}"))?;
        }
    }
    Ok(format!("{relations} relations on 50 random basis elements"))
}

fn random_rational(rng: &mut ChaCha8Rng) -> Q {
    q(rng.gen_range(-5..=5), rng.gen_range(1..=4))
}

fn pencil_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let all = corpus::all();
    let mut rotations = 0;
    for e in &all {
        let pencil = &e.chart.pencil;
        ensure(
            pencil.check_symmetrized_jacobi().passed,
            format!("{}: symmetrized Jacobi", e.name),
        )?;
        let mut done = 0;
        while done < 20 {
            let g = [
                [random_rational(&mut rng), random_rational(&mut rng)],
                [random_rational(&mut rng), random_rational(&mut rng)],
            ];
            let Ok(rotated) = pencil.gl2_rotate(&g) else {
                continue;
            };
            ensure(
                rotated.check_symmetrized_jacobi().passed,
                format!("{}: rotated by {g:?}", e.name),
            )?;
            done += 1;
        }
        rotations += done;
        for _ in 0..5 {
            let (l1, l2) = (random_rational(&mut rng), random_rational(&mut rng));
            ensure(
                pencil.combination_jacobi(&l1, &l2).passed,
                format!("{}: Jacobi of {l1} Pi1 + {l2} Pi2", e.name),
            )?;
        }
    }
    Ok(format!(
        "{} charts, {rotations} rotations, {} combinations",
        all.len(),
        5 * all.len()
    ))
}

fn factorization_uniqueness() -> Outcome {
    let candidates: [[i64; 2]; 6] = [[0, 0], [1, 1], [-1, 2], [2, -1], [1, -2], [-2, 1]];
    let mut checked = 0;
    for e in corpus::factorizable().iter().take(5) {
        let base = e.chart.base();
        let m = extract_ef(&e.chart).map_err(|err| err.to_string())?.e;
        let det = det_poly(&m);
        let body: Vec<VarId> = (0..base.dim())
            .map(|i| base.coord(i))
            .filter(|&v| base.table.parity(v) == 0)
            .collect();
        let points: Vec<Vec<(VarId, Q)>> = candidates
            .iter()
            .map(|c| {
                body.iter()
                    .enumerate()
                    .map(|(i, &v)| (v, qi(c[i % 2] * (i as i64 / 2 + 1))))
                    .collect::<Vec<_>>()
            })
            .filter(|p| det.eval_body(p).is_some_and(|x| x != qi(0)))
            .take(3)
            .collect();
        ensure(
            points.len() == 3,
            format!("{}: fewer than 3 base points", e.name),
        )?;
        let factor = |p: &[(VarId, Q)]| {
            factorize_e(&base, &m, p)
                .map_err(|err| err.to_string())?
                .ok_or(format!("{}: not factorizable", e.name))
        };
        let first = factor(&points[0])?;
        let p1_inv = invert_matrix(&to_rational(&first.p_factor)).map_err(|err| err.to_string())?;
        for p in &points[1..] {
            let k = mat_mul(&p1_inv, &to_rational(&factor(p)?.p_factor));
            for x in k.iter().flatten() {
                for i in 0..base.dim() {
                    ensure(
                        x.d_left(base.coord(i)).is_zero(),
                        format!("{}: K depends on {}", e.name, base.name(i)),
                    )?;
                }
            }
        }
        checked += 1;
    }
    ensure(checked == 5, "fewer than 5 charts")?;
    Ok("5 charts x 3 base points, K constant".into())
}

fn random_sl2(rng: &mut ChaCha8Rng) -> Mat2 {
    let (a, b) = (random_rational(rng), random_rational(rng));
    let mut s = random_rational(rng);
    if s == qi(0) {
        s = qi(3);
    }
    let upper = [[qi(1), a], [qi(0), qi(1)]];
    let lower = [[qi(1), qi(0)], [b, qi(1)]];
    let diag = [[s.clone(), qi(0)], [qi(0), qi(1) / s]];
    let g = liegroup::mul2(&liegroup::mul2(&upper, &diag), &lower);
    if rng.gen_bool(0.5) {
        liegroup::scale2(&g, &qi(-1))
    } else {
        g
    }
}

fn lie_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    ensure(
        liegroup::paraquaternion_table().passed,
        "multiplication table",
    )?;
    for _ in 0..50 {
        let g = random_sl2(&mut rng);
        let l = liegroup::adjoint_map(&g).map_err(|e| e.to_string())?;
        ensure(
            liegroup::is_restricted_lorentz(&l),
            format!("Ad({g:?}) not in SO+(2,1)"),
        )?;
    }
    let minus = liegroup::scale2(&liegroup::t(0), &qi(-1));
    ensure(
        liegroup::adjoint_map(&minus).map_err(|e| e.to_string())? == liegroup::identity3(),
        "Ad(-Id) != Id",
    )?;
    for _ in 0..20 {
        let (g, h) = (random_sl2(&mut rng), random_sl2(&mut rng));
        let ad = |x: &Mat2| liegroup::adjoint_map(x).map_err(|e| e.to_string());
        ensure(
            ad(&liegroup::mul2(&g, &h))? == liegroup::mul3(&ad(&g)?, &ad(&h)?),
            "not a homomorphism",
        )?;
    }
    for _ in 0..5 {
        let x = [
            random_rational(&mut rng),
            random_rational(&mut rng),
            random_rational(&mut rng),
        ];
        if let Some(k) = liegroup::exponential_series_mismatch(&x, 6) {
            return Err(format!("series differ at order {k} for {x:?}"));
        }
    }
    Ok("table, 50 adjoints, Ad(-Id)=Id, 20 products, series to order 6".into())
}

/// Monomials of degree 1 and 2 in `vars` with the given parity.
fn monomials(chart: &TriplecticChart, vars: &[VarId], parity: u8) -> Vec<SuperPoly> {
    let mut out: Vec<SuperPoly> = vars.iter().map(|&v| chart.var(v)).collect();
    for (i, &u) in vars.iter().enumerate() {
        for &v in &vars[i..] {
            out.push(&chart.var(u) * &chart.var(v));
        }
    }
    out.retain(|m| !m.is_zero() && m.parity() == Some(parity));
    out
}

/// `A_i = k_i p_i + (terms in p_1..p_{i-1})`, `B` of the bracket parity.
fn random_generator(chart: &TriplecticChart, rng: &mut ChaCha8Rng) -> F3Generator {
    let t = chart.table();
    let mut a = Vec::new();
    for i in 0..chart.n() {
        let scale = [1i64, 2, -1, 3][rng.gen_range(0..4)];
        let mut ai = chart.var(chart.p[i]).scale(&qi(scale));
        for m in monomials(chart, &chart.p[..i], t.parity(chart.p[i])) {
            ai = &ai + &m.scale(&qi(rng.gen_range(-2..=2)));
        }
        a.push(ai);
    }
    let pc: Vec<VarId> = chart.p.iter().chain(&chart.c).copied().collect();
    let mut b = SuperPoly::zero(t);
    let parity = (chart.epsilon() + t.parity(chart.c[0])) % 2;
    for m in monomials(chart, &pc, parity) {
        b = &b + &(&m * &chart.var(chart.c[0])).scale(&qi(rng.gen_range(-2..=2)));
    }
    F3Generator { a, b }
}

fn transformation_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let all = corpus::all();
    for e in &all {
        for _ in 0..10 {
            let gen = random_generator(&e.chart, &mut rng);
            let out = apply_f3(&e.chart, &gen, DEFAULT_DEGREE)
                .map_err(|err| format!("{}: {err}", e.name))?;
            ensure(
                out.tensor_law.passed,
                format!(
                    "{}: tensor law {:?}",
                    e.name,
                    out.tensor_law.violations.first()
                ),
            )?;
            ensure(
                out.gauge_law.passed,
                format!(
                    "{}: gauge law {:?}",
                    e.name,
                    out.gauge_law.violations.first()
                ),
            )?;
        }
    }
    Ok(format!("{} charts x 10 generators", all.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("golden counterexample", counterexample),
        ("golden structures", golden_structures),
        ("pipeline round-trip", pipeline_round_trip),
        ("equivalence triangle", equivalence_triangle),
        ("homotopy suite", homotopy_suite),
        ("operator algebra suite", operator_suite),
        ("pencil suite", pencil_suite),
        ("factorization uniqueness", factorization_uniqueness),
        ("lie suite", lie_suite),
        ("transformation laws", transformation_laws),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
