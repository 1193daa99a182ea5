mod common;

use common::*;
use killing_core::flow::{hamiltonian, ladder_degree, LadderDegree};
use killing_core::numeric::{
    fit_poly_in_s, integrate_geodesic, quantity_records, relative_variation, sample_trajectories, BatchConfig,
    FlowState, GeodesicField, DEFAULT_FIT_TOL,
};

#[test]
fn fitted_degree_matches_ladder_degree() {
    let m = example_r3();
    let (omega, nabla) = omega_pair(&m);
    let quantities = [
        ("H", hamiltonian(&m)),
        ("p_theta", parse(&m, "p_theta")),
        ("Omega", omega),
        ("nabla_Omega", nabla),
        ("Omega^2", parse(&m, "(r*p_r + 2*z*p_z)^2")),
    ];
    let field = GeodesicField::new(&m);
    let cfg = BatchConfig { ranges: vec![(0.5, 1.5); 3], count: 8, seed: 11, s_max: 10.0, step: 1e-3 };
    let watch: Vec<_> = quantities.iter().map(|q| q.1.clone()).collect();
    let batch = sample_trajectories(&field, &cfg, |st| st.p[1].abs() >= 0.2, &watch).unwrap();
    assert_eq!(batch.trajectories.len(), 8);
    for (name, f) in &quantities {
        let LadderDegree::Exact(k) = ladder_degree(f, 8) else { panic!("{name}") };
        for r in quantity_records(name, f, &batch.trajectories, k as usize, DEFAULT_FIT_TOL).unwrap() {
            assert!(r.fitted_degree < k as usize, "{name}: {r:?}");
            assert!(r.residual_rms < DEFAULT_FIT_TOL, "{name}: {r:?}");
            if k == 1 {
                assert!(r.rel_drift < 1e-8, "{name}: {r:?}");
            }
        }
    }
    for t in &batch.trajectories {
        assert!(t.energy_drift < 1e-9);
    }
}

#[test]
fn square_of_position_on_a_line() {
    let line = flat(&["x"]);
    let f = parse(&line, "x^2");
    assert_eq!(ladder_degree(&f, 5), LadderDegree::Exact(3));
    let t = integrate_geodesic(&line, &FlowState { x: vec![0.3], p: vec![1.0], s: 0.0 }, 10.0, 1e-2).unwrap();
    let v = killing_core::numeric::eval_along(&f, &t).unwrap();
    let fit = fit_poly_in_s(&v, &t.s_grid(), 3, DEFAULT_FIT_TOL).unwrap();
    assert_eq!(fit.fitted_degree, 2);
    assert!(relative_variation(&v) > 0.9);
}

#[test]
fn batches_are_reproducible() {
    let m = example_r3();
    let field = GeodesicField::new(&m);
    let cfg = BatchConfig { ranges: vec![(0.5, 1.5); 3], count: 4, seed: 3, s_max: 1.0, step: 1e-2 };
    let a = sample_trajectories(&field, &cfg, |_| true, &[]).unwrap();
    let b = sample_trajectories(&field, &cfg, |_| true, &[]).unwrap();
    for (x, y) in a.trajectories.iter().zip(&b.trajectories) {
        assert_eq!(x.states, y.states);
    }
    let h = field.energy(&a.trajectories[0].states[0].x, &a.trajectories[0].states[0].p).unwrap();
    assert!((h - 0.5).abs() < 1e-12);
}
