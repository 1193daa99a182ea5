//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use killing_core::algebra::{ratio, MultiPoly, Rational};
use killing_core::cli::{load_metric_file, resolve_tensor, Space};
use killing_core::flow::{hamiltonian, is_integral, poisson_bracket, MomentumPolynomial};
use killing_core::geometry::{
    covector_square, killing_operator, parse_coefficient, poly_to_tensor, sectional_curvature_degeneracy, Chart,
    SymmetricCotensor,
};
use killing_core::numeric::{quantity_records, sample_trajectories, BatchConfig, GeodesicField, DEFAULT_FIT_TOL};
use killing_core::product::{
    bihomogeneous_split, chain_check, compose_integral, decompose_integral, product_metric, reducibility_classify,
    Classification, ProductMetric,
};
use killing_core::spaces::{express_in, solve_killing, AnsatzFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn check(cond: bool, what: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn coefficient(chart: &Chart, text: &str) -> killing_core::algebra::RationalFunction {
    parse_coefficient(chart, text).unwrap()
}

fn criterion_1() -> Outcome {
    let m = example_r3();
    let omega = SymmetricCotensor::covector(&m, &["r", "0", "2*z/(1+r^2)"]).map_err(|e| e.to_string())?;
    let nabla = killing_operator(&omega);
    let stated = SymmetricCotensor::from_components(
        &m,
        2,
        [
            (vec![0, 0], coefficient(&m, "1")),
            (vec![1, 1], coefficient(&m, "r^2/(r^2+1)^2")),
            (vec![2, 2], coefficient(&m, "(r^2+2)/(r^2+1)^2")),
        ],
    )
    .unwrap();
    let w1 = SymmetricCotensor::covector(&m, &["0", "r^2/(1+r^2)", "0"]).unwrap();
    let w2 = SymmetricCotensor::covector(&m, &["0", "0", "1/(1+r^2)"]).unwrap();
    let rhs = SymmetricCotensor::metric(&m)
        .checked_add(&covector_square(&w1).unwrap().scale(&ratio(-1, 1)))
        .unwrap()
        .checked_add(&covector_square(&w2).unwrap())
        .unwrap();
    check(
        nabla == stated && nabla.to_string() == stated.to_string(),
        "killing_operator(Omega) differs from the stated tensor",
    )?;
    check(
        nabla == rhs && nabla.to_string() == rhs.to_string(),
        "killing_operator(Omega) differs from ds^2 - w1^2 + w2^2",
    )?;
    Ok(format!("sym nabla Omega = {}", nabla.to_string().replace('\n', "; ")))
}

fn criterion_2() -> Outcome {
    let m = example_r3();
    let omega = SymmetricCotensor::covector(&m, &["r", "0", "2*z/(1+r^2)"]).unwrap();
    check(killing_operator(&killing_operator(&omega)).is_zero(), "nabla Omega is not Killing")?;
    let h = hamiltonian(&m);
    for p in ["p_theta", "p_z"] {
        check(poisson_bracket(&h, &parse(&m, p)).unwrap().is_zero(), &format!("{{H, {p}}} != 0"))?;
    }
    let (pm, fk) = ds2_with_fk();
    check(is_integral(&fk), "{H, F_K} != 0 on dS^2")?;
    let k = poly_to_tensor(&fk).map_err(|e| e.to_string())?;
    check(k.rank() == 3 && killing_operator(&k).is_zero(), "K is not a Killing tensor of dS^2")?;
    check(MomentumPolynomial::parse(pm.joint(), &fk.to_string()).unwrap() == fk, "F_K does not re-parse")?;
    Ok("nabla Omega Killing; {H,p_theta} = {H,p_z} = 0; {H, F_K} = 0 on dS^2".into())
}

fn criterion_3() -> Outcome {
    let (pm, fk) = ds2_with_fk();
    let rf = decompose_integral(&fk, &pm, &ds2_family(pm.factor1()), &ds2_family(pm.factor2()))
        .map_err(|e| e.to_string())?;
    match reducibility_classify(&rf, &pm).map_err(|e| e.to_string())? {
        Classification::IrreducibleWitnessed { witness, bidegree } => {
            check(!witness.is_zero(), "empty witness")?;
            let bracket = pm.bracket1(&fk).unwrap();
            let parts = bihomogeneous_split(&bracket, &pm).unwrap();
            check(parts.parts[bidegree.0 as usize] == witness, "witness is not a bi-degree component of {H1, F_K}")?;
            Ok(format!("irreducible-witnessed, {{H1, F_K}} has a nonzero ({}, {}) component", bidegree.0, bidegree.1))
        }
        Classification::Reducible => Err("F_K classified reducible".into()),
    }
}

fn ladder_cases() -> Vec<(ProductMetric, killing_core::flow::LadderElement, killing_core::flow::LadderElement, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_401);
    (0..100).map(|_| random_ladder_pair(&mut rng)).collect()
}

fn criterion_4() -> Outcome {
    for (i, (pm, f1, f2, k)) in ladder_cases().iter().enumerate() {
        let f = compose_integral(f1, f2, *k, pm).map_err(|e| format!("case {i}: {e}"))?;
        check(is_integral(&f), &format!("case {i}: composed polynomial is not an integral"))?;
        check(
            f.homogeneous_degree() == Some(f1.degree() + f2.degree() + k - 1),
            &format!("case {i}: degree {:?} != s1 + s2 + k - 1", f.homogeneous_degree()),
        )?;
    }
    Ok("100 seeded flat ladder pairs: integral, degree s1+s2+k-1".into())
}

fn criterion_5() -> Outcome {
    let family = AnsatzFamily::polynomial(0, 2);
    for (i, (pm, f1, f2, k)) in ladder_cases().iter().enumerate() {
        let f = compose_integral(f1, f2, *k, pm).unwrap();
        let rf = decompose_integral(&f, pm, &family, &family).map_err(|e| format!("case {i}: {e}"))?;
        check(rf.residual.is_zero(), &format!("case {i}: nonzero residual"))?;
        check(rf.expand(pm).unwrap() == f, &format!("case {i}: re-expansion differs"))?;
    }
    let x = flat(&["x1"]);
    let y = flat(&["x2"]);
    let pm = product_metric(&x, &y, false).unwrap();
    let l = parse(pm.joint(), "x1*p_x2 - x2*p_x1");
    let rf = decompose_integral(&l, &pm, &family, &family).map_err(|e| e.to_string())?;
    check(
        rf.terms.len() == 1 && rf.terms[0].k == 2 && rf.residual.is_zero(),
        "angular momentum is not one k = 2 term",
    )?;
    Ok("100 round trips with residual 0; x1 p2 - x2 p1 = one k = 2 term".into())
}

fn criterion_6() -> Outcome {
    let chart = flat(&["x1", "x2"]);
    let mut dims = Vec::new();
    for d in 1..=4u32 {
        let basis = solve_killing(&chart, &AnsatzFamily::polynomial(d, d)).map_err(|e| e.to_string())?;
        let family = plane_integral_family(&chart, d);
        let expected = ((d + 1) * (d + 2) / 2) as usize;
        check(
            basis.dim() == expected && family.len() == expected,
            &format!("d = {d}: dimension {} != {expected}", basis.dim()),
        )?;
        check(
            family.iter().all(|f| express_in(&basis.basis, f).is_some()),
            &format!("d = {d}: enumerated family not in span"),
        )?;
        check(
            basis.basis.iter().all(|f| express_in(&family, f).is_some()),
            &format!("d = {d}: solver basis not in family"),
        )?;
        dims.push(basis.dim());
    }
    Ok(format!("dimensions {dims:?} for d = 1..4"))
}

fn corpus_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn criterion_7() -> Outcome {
    let mut checked = Vec::new();
    for (file, name) in [("angular_momentum.json", "L"), ("section4_K.json", "K"), ("product_r3xr3.json", "K")] {
        let loaded = load_metric_file(&corpus_dir().join(file)).map_err(|e| e.to_string())?;
        let Space::Product(pm) = &loaded.space else { return Err(format!("{file} is not a product")) };
        let f = resolve_tensor(&loaded, name).map_err(|e| e.to_string())?.poly;
        let split = bihomogeneous_split(&f, pm).map_err(|e| e.to_string())?;
        check(chain_check(&split, pm).unwrap().is_none(), &format!("{file}: chain equations fail"))?;
        let mut deleted = 0;
        for l in 0..=split.degree() {
            if split.parts[l].is_zero() {
                continue;
            }
            deleted += 1;
            check(
                chain_check(&split.without(l), pm).unwrap().is_some(),
                &format!("{file}: deleting S_{l} keeps the chain"),
            )?;
        }
        checked.push(format!("{file}:{name} ({deleted} deletions)"));
    }
    Ok(checked.join(", "))
}

fn criterion_8() -> Outcome {
    let (pm, fk) = ds2_with_fk();
    let joint = pm.joint().clone();
    let field = GeodesicField::new(&joint);
    let h = hamiltonian(&joint);
    let cfg = BatchConfig { ranges: vec![(0.5, 1.5); 6], count: 100, seed: 8, s_max: 10.0, step: 1e-3 };
    let batch =
        sample_trajectories(&field, &cfg, |st| st.p[1].abs() >= 0.2 && st.p[4].abs() >= 0.2, &[fk.clone(), h.clone()])
            .map_err(|e| e.to_string())?;
    let k_rec = quantity_records("F_K", &fk, &batch.trajectories, 1, DEFAULT_FIT_TOL).unwrap();
    let h_rec = quantity_records("H", &h, &batch.trajectories, 1, DEFAULT_FIT_TOL).unwrap();
    let k_max = k_rec.iter().map(|r| r.rel_drift).fold(0.0, f64::max);
    let h_max = h_rec.iter().map(|r| r.rel_drift).fold(0.0, f64::max);
    check(k_max < 1e-8, &format!("F_K relative variation {k_max:.3e}"))?;
    check(h_max < 1e-9, &format!("H relative variation {h_max:.3e}"))?;

    let m = example_r3();
    let (omega, _) = omega_pair(&m);
    let field = GeodesicField::new(&m);
    let cfg = BatchConfig { ranges: vec![(0.5, 1.5); 3], count: 100, seed: 88, s_max: 10.0, step: 1e-3 };
    let batch = sample_trajectories(&field, &cfg, |st| st.p[1].abs() >= 0.2, std::slice::from_ref(&omega))
        .map_err(|e| e.to_string())?;
    let recs = quantity_records("F_Omega", &omega, &batch.trajectories, 2, DEFAULT_FIT_TOL).unwrap();
    let rms = recs.iter().map(|r| r.residual_rms).fold(0.0, f64::max);
    check(recs.iter().all(|r| r.fitted_degree == 1), "F_Omega fitted degree is not 1")?;
    check(rms < 1e-6, &format!("F_Omega residual {rms:.3e}"))?;
    let spread = recs.iter().map(|r| r.rel_drift).fold(0.0, f64::max);
    Ok(format!(
        "max rel. variation F_K {k_max:.2e}, H {h_max:.2e}; F_Omega affine, max rms {rms:.2e} (variation up to {spread:.2})"
    ))
}

fn criterion_9() -> Outcome {
    let ex = example_r3();
    let den_ex = coefficient(&ex, "1+r^2").num().clone();
    let (pm, _) = ds2_with_fk();
    let den_prod = coefficient(pm.joint(), "(1+r1^2)*(1+r2^2)").num().clone();
    let charts: Vec<(Chart, Option<MultiPoly>, u32)> = vec![
        (flat(&["x"]), None, 2),
        (flat(&["x", "y"]), None, 2),
        (ex, Some(den_ex), 2),
        (pm.joint().clone(), Some(den_prod), 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut zeros = 0;
    for i in 0..200 {
        let (chart, den, cdeg) = &charts[i % charts.len()];
        let d = rng.gen_range(0..=3);
        let f = random_homogeneous(chart, d, *cdeg, den.as_ref(), &mut rng);
        let g = poisson_bracket(&hamiltonian(chart), &f).unwrap();
        if g.is_zero() {
            zeros += 1;
        } else {
            check(
                g.homogeneous_degree() == Some(d + 1),
                &format!("case {i} on {}: degree {:?}", chart.name(), g.homogeneous_degree()),
            )?;
        }
    }
    Ok(format!("200 random homogeneous f: {{H, f}} zero ({zeros}) or of degree d+1"))
}

fn criterion_10() -> Outcome {
    let m = example_r3();
    let point: Vec<Rational> = vec![ratio(1, 1), ratio(0, 1), ratio(0, 1)];
    let report = sectional_curvature_degeneracy(&m, &point).map_err(|e| e.to_string())?;
    check(report.is_empty(), "example metric at (1,0,0): degenerate set is not empty")?;
    let (pm, _) = ds2_with_fk();
    let generic: Vec<Rational> = vec![ratio(3, 2), ratio(1, 3), ratio(2, 7), ratio(5, 3), ratio(1, 5), ratio(3, 4)];
    let report = sectional_curvature_degeneracy(pm.joint(), &generic).map_err(|e| e.to_string())?;
    check(
        !report.is_empty(),
        "example metric at (1,0,0): empty as required; dS^2 at (3/2,1/3,2/7,5/3,1/5,3/4): empty, criterion requires nonempty",
    )?;
    Ok("example metric empty at (1,0,0); dS^2 nonempty".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "covariant-derivative identity", Duration::from_secs(1), criterion_1),
        (2, "Killing certificates", Duration::from_secs(10), criterion_2),
        (3, "irreducibility witness", Duration::from_secs(30), criterion_3),
        (4, "composition integrality", Duration::from_secs(120), criterion_4),
        (5, "decomposition round trip", Duration::from_secs(300), criterion_5),
        (6, "flat-plane dimensions", Duration::from_secs(60), criterion_6),
        (7, "chain-system soundness", Duration::from_secs(60), criterion_7),
        (8, "numeric conservation", Duration::from_secs(300), criterion_8),
        (9, "degree raising", Duration::from_secs(120), criterion_9),
        (10, "curvature genericity", Duration::from_secs(60), criterion_10),
    ];
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let timing = format!("{:.2}s of {}s", took.as_secs_f64(), budget.as_secs());
        match outcome {
            Ok(detail) if took <= budget => println!("criterion {n:>2} PASS {name} ({timing}): {detail}"),
            Ok(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {name} ({timing}, over budget): {detail}");
            }
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {name} ({timing}): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
