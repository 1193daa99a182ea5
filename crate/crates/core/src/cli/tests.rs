use super::*;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn job(metrics: &[&str]) -> JobArgs {
    let cli = Cli::try_parse_from(["killing", "validate"]).unwrap();
    let Command::Validate(mut a) = cli.command else { unreachable!() };
    a.metric = metrics.iter().map(|m| corpus(m)).collect();
    a
}

fn ds2_args() -> JobArgs {
    let mut a = job(&["section4_K.json"]);
    a.tensor = vec!["K".into()];
    a.coeff_degree = 4;
    a.denominator = Some("(1+r1^2)^2*(1+r2^2)^2".into());
    a
}

#[test]
fn every_corpus_file_validates() {
    for name in [
        "euclidean1.json",
        "euclidean2.json",
        "example_r3.json",
        "product_r3xr3.json",
        "section4_K.json",
        "angular_momentum.json",
    ] {
        let out = cmd_validate(&job(&[name])).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(out.starts_with("OK: "), "{out}");
    }
}

#[test]
fn example_metric_file() {
    let out = cmd_validate(&job(&["example_r3.json"])).unwrap();
    assert!(out.contains("dimension 3: r, theta, z"));
    assert!(out.contains("det g = r^2/(r^4 + 2*r^2 + 1)"));
    let loaded = load_metric(&job(&["example_r3.json"])).unwrap();
    let g = loaded.space.chart().g(1, 1);
    assert_eq!(g, &crate::geometry::parse_coefficient(loaded.space.chart(), "r^2/(1+r^2)").unwrap());
}

#[test]
fn rotation_field_in_the_plane() {
    let loaded = load_metric(&job(&["euclidean2.json"])).unwrap();
    let rot = resolve_tensor(&loaded, "rotation").unwrap();
    assert_eq!(rot.poly, MomentumPolynomial::parse(loaded.space.chart(), "y*p_x - x*p_y").unwrap());
    assert!(crate::flow::is_integral(&rot.poly));
}

#[test]
fn corpus_k_is_the_composed_integral() {
    let loaded = load_metric(&job(&["product_r3xr3.json"])).unwrap();
    let pm = loaded.space.product().unwrap();
    let get = |n: &str| resolve_tensor(&loaded, n).unwrap().poly.embed(pm.joint()).unwrap();
    let fk = get("Omega1")
        .checked_mul(&get("nabla_Omega2"))
        .unwrap()
        .checked_sub(&get("nabla_Omega1").checked_mul(&get("Omega2")).unwrap())
        .unwrap();
    let k = get("K");
    assert_eq!(k, fk);
    assert_eq!(k.homogeneous_degree(), Some(3));
    // the factor-file tensors agree with the product-file ones
    assert_eq!(resolve_tensor(&loaded, "Omega@1").unwrap().poly.embed(pm.joint()).unwrap(), get("Omega1"));
    let other = load_metric(&job(&["section4_K.json"])).unwrap();
    assert_eq!(
        resolve_tensor(&other, "K").unwrap().poly.embed(other.space.chart()).unwrap().to_string(),
        k.to_string()
    );
}

#[test]
fn nabla_omega_entry_matches_killing_operator() {
    let loaded = load_metric(&job(&["example_r3.json"])).unwrap();
    let chart = loaded.space.chart();
    let omega = crate::geometry::poly_to_tensor(&resolve_tensor(&loaded, "Omega").unwrap().poly).unwrap();
    let nabla = resolve_tensor(&loaded, "nabla_Omega").unwrap().poly;
    assert_eq!(tensor_to_poly(&crate::geometry::killing_operator(&omega)), nabla);
    assert_eq!(&nabla.chart().name(), &chart.name());
}

#[test]
fn decompose_angular_momentum_file() {
    let mut a = job(&["angular_momentum.json"]);
    a.tensor = vec!["L".into()];
    let out = cmd_decompose(&a).unwrap();
    assert!(out.contains("terms: 1\nterm 0: k = 2, coefficient = 1\n  f1 = x1\n  f2 = x2\nresidual: 0"), "{out}");
    assert!(out.contains("re-expansion matches input: true"));
}

#[test]
fn classify_ds2_k() {
    let out = cmd_classify(&ds2_args()).unwrap();
    assert!(out.starts_with("K: irreducible-witnessed\n"), "{out}");
    assert!(out.contains("chain equations: all hold"));
    // deterministic text
    assert_eq!(out, cmd_classify(&ds2_args()).unwrap());
}

#[test]
fn small_ansatz_exit_code() {
    let mut a = ds2_args();
    a.coeff_degree = 0;
    let err = cmd_decompose(&a).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
}

#[test]
fn compose_then_decompose_round_trip() {
    let dir = std::env::temp_dir().join(format!("killing-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let out = dir.join("f.json");
    let mut a = job(&["euclidean1.json", "euclidean1.json"]);
    a.tensor = vec!["x2@1".into(), "x@2".into()];
    a.ladder = Some(3);
    a.out = Some(out.clone());
    let (_, artifact) = cmd_compose(&a).unwrap();
    fs::write(&out, artifact.unwrap()).unwrap();
    let mut d = job(&["euclidean1.json", "euclidean1.json"]);
    d.tensor = vec![out.to_string_lossy().into_owned()];
    d.coeff_degree = 3;
    let text = cmd_decompose(&d).unwrap();
    assert!(text.contains("residual: 0") && text.contains("re-expansion matches input: true"), "{text}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(main_with_args(["killing", "nonsense"]), 1);
    assert_eq!(main_with_args(["killing", "validate"]), 1);
    let dir = std::env::temp_dir().join(format!("killing-codes-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"name":"b","coordinates":["x"],"metric":[["1+"]]}"#).unwrap();
    assert_eq!(main_with_args(["killing", "validate", "--metric", bad.to_str().unwrap()]), 2);
    let sing = dir.join("sing.json");
    fs::write(&sing, r#"{"name":"s","coordinates":["x","y"],"metric":[["1"],["1","1"]]}"#).unwrap();
    assert_eq!(main_with_args(["killing", "validate", "--metric", sing.to_str().unwrap()]), 3);
    let ok = corpus("example_r3.json");
    assert_eq!(main_with_args(["killing", "hamiltonian", "--metric", ok.to_str().unwrap()]), 0);
    assert_eq!(
        main_with_args(["killing", "curvature-degeneracy", "--metric", ok.to_str().unwrap(), "--point", "0,0,0"]),
        3
    );
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn solve_commands() {
    let mut a = job(&["euclidean2.json"]);
    a.degree = Some(1);
    a.coeff_degree = 1;
    let out = cmd_solve(&a, 1).unwrap();
    assert!(out.contains("dimension: 3\n"), "{out}");
    let mut b = job(&["euclidean1.json"]);
    b.degree = Some(1);
    b.coeff_degree = 1;
    assert!(cmd_solve(&b, 2).unwrap().contains("dimension: 2\n"));
}

#[test]
fn hk_and_bracket() {
    let mut a = job(&["euclidean1.json"]);
    a.tensor = vec!["x2".into()];
    a.ladder = Some(2);
    let out = cmd_hk(&a).unwrap();
    assert_eq!(out, "H^2(x2) = 2*p_x^2\nladder degree: 3\n");
    let mut b = job(&["example_r3.json"]);
    b.tensor = vec!["omega1".into()];
    assert_eq!(cmd_bracket(&b).unwrap(), "{H, omega1} = 0\n");
}

#[test]
fn christoffel_output() {
    let out = cmd_christoffel(&job(&["euclidean2.json"])).unwrap();
    assert_eq!(out, "all Christoffel symbols vanish\n");
    let out = cmd_christoffel(&job(&["example_r3.json"])).unwrap();
    assert!(out.contains("Gamma^theta_{r theta} = "), "{out}");
}

#[test]
fn curvature_command() {
    let mut a = job(&["example_r3.json"]);
    a.point = Some("1,0,0".into());
    assert!(cmd_curvature(&a).unwrap().contains("degenerate set: empty"));
    a.point = Some("1,0".into());
    assert_eq!(cmd_curvature(&a).unwrap_err().exit_code(), 1);
}

#[test]
fn verify_numeric_small_batch() {
    let mut a = job(&["example_r3.json"]);
    a.count = 3;
    a.smax = 2.0;
    a.step = 1e-2;
    a.min_momentum = vec!["p_theta=0.2".into()];
    let (text, csv) = cmd_verify_numeric(&a).unwrap();
    assert!(text.contains("Omega: ladder degree 2, max fitted degree 1"), "{text}");
    assert!(text.contains("omega1: integral"));
    let csv = csv.unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 5);
    let (again, _) = cmd_verify_numeric(&a).unwrap();
    assert_eq!(text, again);
    a.step = 0.0;
    assert_eq!(cmd_verify_numeric(&a).unwrap_err().exit_code(), 1);
}
