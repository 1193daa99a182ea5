use super::*;
use crate::algebra::{rat, ratio};
use crate::flow::{hamiltonian, poisson_bracket, MomentumPolynomial};
use num_traits::Zero;

fn example_r3() -> Chart {
    MetricChart::diagonal("example_r3", &["r", "theta", "z"], &["1", "r^2/(1+r^2)", "1/(1+r^2)"], "r > 0").unwrap()
}

fn rf(chart: &Chart, text: &str) -> RationalFunction {
    parse_coefficient(chart, text).unwrap()
}

#[test]
fn christoffel_symbols_of_example() {
    let m = example_r3();
    let g = m.christoffel();
    // hand computation from g_θθ = r²/(1+r²), g_zz = 1/(1+r²)
    assert_eq!(g.get(0, 1, 1), &rf(&m, "-r/(1+r^2)^2"));
    assert_eq!(g.get(1, 0, 1), &rf(&m, "1/(r*(1+r^2))"));
    assert_eq!(g.get(1, 1, 0), &rf(&m, "1/(r+r^3)"));
    assert_eq!(g.get(0, 2, 2), &rf(&m, "r/(1+r^2)^2"));
    assert_eq!(g.get(2, 0, 2), &rf(&m, "-r/(1+r^2)"));
    assert_eq!(g.nonzero().count(), 4);
}

#[test]
fn euclidean_christoffel_vanishes() {
    let e = MetricChart::euclidean("e3", &["x", "y", "z"]);
    assert!(e.christoffel().is_zero());
}

#[test]
fn inverse_of_non_diagonal_metric() {
    let vars = Variables::new(&["x", "y"]);
    let one = RationalFunction::one(&vars);
    let x = RationalFunction::var(&vars, 0);
    // [[1, x], [x, 1 + x²]] has det 1 and inverse [[1 + x², −x], [−x, 1]]
    let g = vec![vec![one.clone(), x.clone()], vec![x.clone(), &one + &(&x * &x)]];
    let m = MetricChart::new("shear", vars.clone(), g, "").unwrap();
    assert_eq!(m.inverse()[0][0], &one + &(&x * &x));
    assert_eq!(m.inverse()[0][1], -&x);
    assert_eq!(m.inverse()[1][1], one);
    assert_eq!(m.determinant(), RationalFunction::one(&vars));
    assert!(killing_operator(&SymmetricCotensor::metric(&m)).is_zero());
}

#[test]
fn rejects_singular_and_asymmetric_metrics() {
    let vars = Variables::new(&["x", "y"]);
    let one = RationalFunction::one(&vars);
    let zero = RationalFunction::zero(&vars);
    let singular = vec![vec![one.clone(), one.clone()], vec![one.clone(), one.clone()]];
    assert_eq!(MetricChart::new("s", vars.clone(), singular, "").unwrap_err(), GeometryError::SingularMetric);
    let asym = vec![vec![one.clone(), one.clone()], vec![zero, one]];
    assert!(matches!(MetricChart::new("a", vars, asym, ""), Err(GeometryError::NotSymmetric(1, 0))));
    assert!(MetricChart::diagonal("z", &["x"], &["0"], "").is_err());
}

#[test]
fn metric_is_parallel() {
    let m = example_r3();
    assert!(killing_operator(&SymmetricCotensor::metric(&m)).is_zero());
}

#[test]
fn dual_covectors_are_killing() {
    let m = example_r3();
    let w1 = SymmetricCotensor::covector(&m, &["0", "r^2/(1+r^2)", "0"]).unwrap();
    let w2 = SymmetricCotensor::covector(&m, &["0", "0", "1/(1+r^2)"]).unwrap();
    assert!(killing_operator(&w1).is_zero());
    assert!(killing_operator(&w2).is_zero());
}

#[test]
fn symmetrised_derivative_of_omega() {
    let m = example_r3();
    let omega = SymmetricCotensor::covector(&m, &["r", "0", "2*z/(1+r^2)"]).unwrap();
    let nabla = killing_operator(&omega);
    assert_eq!(nabla.component(&[0, 0]), rf(&m, "1"));
    assert_eq!(nabla.component(&[1, 1]), rf(&m, "r^2/(1+r^2)^2"));
    assert_eq!(nabla.component(&[2, 2]), rf(&m, "(r^2+2)/(1+r^2)^2"));
    assert_eq!(nabla.components().len(), 3);

    // ds² − ω1² + ω2²
    let w1 = SymmetricCotensor::covector(&m, &["0", "r^2/(1+r^2)", "0"]).unwrap();
    let w2 = SymmetricCotensor::covector(&m, &["0", "0", "1/(1+r^2)"]).unwrap();
    let expected = SymmetricCotensor::metric(&m)
        .checked_add(&covector_square(&w1).unwrap().scale(&rat(-1)))
        .unwrap()
        .checked_add(&covector_square(&w2).unwrap())
        .unwrap();
    assert_eq!(nabla, expected);
}

#[test]
fn tensor_to_poly_examples() {
    let m = example_r3();
    let omega = SymmetricCotensor::covector(&m, &["r", "0", "2*z/(1+r^2)"]).unwrap();
    assert_eq!(tensor_to_poly(&omega), MomentumPolynomial::parse(&m, "r*p_r + 2*z*p_z").unwrap());
    let h = hamiltonian(&m);
    let two_h = h.scale(&rat(2));
    assert_eq!(tensor_to_poly(&SymmetricCotensor::metric(&m)), two_h);
    let nabla = killing_operator(&omega);
    let expected = two_h.checked_sub(&MomentumPolynomial::parse(&m, "p_theta^2 - p_z^2").unwrap()).unwrap();
    assert_eq!(tensor_to_poly(&nabla), expected);
}

#[test]
fn poly_to_tensor_examples() {
    let m = example_r3();
    let w1 = SymmetricCotensor::covector(&m, &["0", "r^2/(1+r^2)", "0"]).unwrap();
    let w2 = SymmetricCotensor::covector(&m, &["0", "0", "1/(1+r^2)"]).unwrap();
    assert_eq!(poly_to_tensor(&MomentumPolynomial::momentum(&m, 1)).unwrap(), w1);
    assert_eq!(poly_to_tensor(&MomentumPolynomial::momentum(&m, 2)).unwrap(), w2);
    assert_eq!(poly_to_tensor(&hamiltonian(&m).scale(&rat(2))).unwrap(), SymmetricCotensor::metric(&m));
    let mixed = MomentumPolynomial::parse(&m, "p_r + p_z^2").unwrap();
    assert_eq!(poly_to_tensor(&mixed).unwrap_err(), GeometryError::NotHomogeneous);
}

#[test]
fn killing_operator_matches_bracket() {
    let m = example_r3();
    let h = hamiltonian(&m);
    let samples = [
        SymmetricCotensor::covector(&m, &["r", "0", "2*z/(1+r^2)"]).unwrap(),
        SymmetricCotensor::covector(&m, &["z", "r*theta", "1/(1+r^2)"]).unwrap(),
        SymmetricCotensor::from_components(&m, 2, [(vec![0, 2], rf(&m, "r*z")), (vec![1, 1], rf(&m, "theta"))])
            .unwrap(),
        SymmetricCotensor::from_components(&m, 3, [(vec![0, 1, 2], rf(&m, "r")), (vec![2, 2, 2], rf(&m, "z^2"))])
            .unwrap(),
    ];
    for k in &samples {
        let lhs = tensor_to_poly(&killing_operator(k));
        let rhs = poisson_bracket(&h, &tensor_to_poly(k)).unwrap();
        assert_eq!(lhs, rhs, "rank {}", k.rank());
    }
}

#[test]
fn sym_product_of_covectors() {
    let e = MetricChart::euclidean("e2", &["x", "y"]);
    let dx = SymmetricCotensor::covector(&e, &["1", "0"]).unwrap();
    let dy = SymmetricCotensor::covector(&e, &["0", "1"]).unwrap();
    let p = dx.sym_product(&dy).unwrap();
    assert_eq!(p.component(&[0, 1]), RationalFunction::constant(e.coords(), ratio(1, 2)));
    assert_eq!(p.component(&[1, 0]), p.component(&[0, 1]));
    assert_eq!(covector_square(&dx).unwrap().component(&[0, 0]), RationalFunction::one(e.coords()));
}

#[test]
fn flat_space_has_all_directions_degenerate() {
    let e = MetricChart::euclidean("e3", &["x", "y", "z"]);
    let rep = sectional_curvature_degeneracy(&e, &[rat(1), rat(2), rat(-1)]).unwrap();
    assert!(rep.is_full());
    assert!(!rep.is_empty());
}

#[test]
fn example_metric_is_generic_at_sample_point() {
    let m = example_r3();
    let rep = sectional_curvature_degeneracy(&m, &[rat(1), rat(0), rat(0)]).unwrap();
    assert!(rep.is_empty(), "{rep}");
}

#[test]
fn line_times_example_has_degenerate_directions() {
    let m = MetricChart::diagonal(
        "line_x_example",
        &["t", "r", "theta", "z"],
        &["1", "1", "r^2/(1+r^2)", "1/(1+r^2)"],
        "r > 0",
    )
    .unwrap();
    let rep = sectional_curvature_degeneracy(&m, &[rat(0), rat(1), rat(0), rat(0)]).unwrap();
    assert!(!rep.is_empty());
    assert!(!rep.is_full());
    let riem = riemann_at(&m, &[rat(0), rat(1), rat(0), rat(0)]).unwrap();
    let t = [rat(1), rat(0), rat(0), rat(0)];
    for y in [[rat(0), rat(1), rat(2), rat(3)], [rat(5), rat(-1), rat(1), rat(0)]] {
        assert!(riem.curvature_form(&t, &y).is_zero());
    }
}

#[test]
fn stereographic_sphere_has_unit_curvature() {
    let s = MetricChart::diagonal("s2", &["x", "y"], &["4/(1+x^2+y^2)^2", "4/(1+x^2+y^2)^2"], "").unwrap();
    let riem = riemann_at(&s, &[ratio(1, 3), rat(2)]).unwrap();
    let k = riem.sectional(&[rat(1), rat(0)], &[rat(1), rat(1)]).unwrap();
    assert_eq!(k, rat(1));
}

#[test]
fn degeneracy_rejects_poles_and_low_dimension() {
    let m = example_r3();
    assert!(matches!(sectional_curvature_degeneracy(&m, &[rat(0), rat(0), rat(0)]), Err(GeometryError::Domain(_))));
    let e2 = MetricChart::euclidean("e2", &["x", "y"]);
    assert!(sectional_curvature_degeneracy(&e2, &[rat(0), rat(0)]).is_err());
}
