#![allow(dead_code)]

use killing_core::algebra::{rat, Monomial, MultiPoly, RationalFunction};
use killing_core::flow::{LadderElement, MomentumPolynomial};
use killing_core::geometry::{killing_operator, tensor_to_poly, Chart, MetricChart, SymmetricCotensor};
use killing_core::product::{product_metric, ProductMetric};
use killing_core::spaces::AnsatzFamily;
use rand::Rng;

pub fn example_r3() -> Chart {
    MetricChart::diagonal("example_r3", &["r", "theta", "z"], &["1", "r^2/(1+r^2)", "1/(1+r^2)"], "r > 0").unwrap()
}

pub fn parse(chart: &Chart, text: &str) -> MomentumPolynomial {
    MomentumPolynomial::parse(chart, text).unwrap()
}

/// `(F_Ω, F_∇Ω)` on a copy of the example chart.
pub fn omega_pair(chart: &Chart) -> (MomentumPolynomial, MomentumPolynomial) {
    let names = chart.coords().names().to_vec();
    let (r, z) = (&names[0], &names[2]);
    let omega = SymmetricCotensor::covector(chart, &[r.as_str(), "0", &format!("2*{z}/(1+{r}^2)")]).unwrap();
    (tensor_to_poly(&omega), tensor_to_poly(&killing_operator(&omega)))
}

/// dS² with `F_K = F_Ω₁ F_∇Ω₂ − F_∇Ω₁ F_Ω₂`.
pub fn ds2_with_fk() -> (ProductMetric, MomentumPolynomial) {
    let m = example_r3();
    let pm = product_metric(&m, &m, true).unwrap();
    let (a1, b1) = omega_pair(pm.factor1());
    let (a2, b2) = omega_pair(pm.factor2());
    let l = |f: &MomentumPolynomial| f.embed(pm.joint()).unwrap();
    let fk = l(&a1).checked_mul(&l(&b2)).unwrap().checked_sub(&l(&b1).checked_mul(&l(&a2)).unwrap()).unwrap();
    (pm, fk)
}

pub fn ds2_family(chart: &Chart) -> AnsatzFamily {
    let r = &chart.coords().names()[0];
    AnsatzFamily::parse(chart, 1, 4, &format!("(1+{r}^2)^2")).unwrap()
}

pub fn flat(names: &[&str]) -> Chart {
    MetricChart::euclidean(&names.join(""), names)
}

/// All exponent vectors of length `n` and total degree `d`.
pub fn exponents(n: usize, d: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for a in (0..=d).rev() {
        for mut rest in exponents(n - 1, d - a) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

/// Random polynomial in the chart coordinates of total degree `<= deg` with
/// small integer coefficients.
pub fn random_coeff<R: Rng>(chart: &Chart, deg: u32, rng: &mut R) -> MultiPoly {
    let vars = chart.coords();
    let mut terms = Vec::new();
    for e in 0..=deg {
        for ex in exponents(vars.len(), e) {
            if rng.gen_bool(0.5) {
                terms.push((Monomial::from_exponents(&ex), rat(rng.gen_range(-3..=3))));
            }
        }
    }
    MultiPoly::from_terms(vars, terms)
}

/// Random momentum polynomial homogeneous of degree `d` whose coefficients
/// are `N/den` with `deg N <= coeff_deg`. Never zero.
pub fn random_homogeneous<R: Rng>(
    chart: &Chart,
    d: u32,
    coeff_deg: u32,
    den: Option<&MultiPoly>,
    rng: &mut R,
) -> MomentumPolynomial {
    loop {
        let mut terms = Vec::new();
        for ex in exponents(chart.dim(), d) {
            let num = random_coeff(chart, coeff_deg, rng);
            if num.is_zero() {
                continue;
            }
            let c = match den {
                None => RationalFunction::from_poly(num),
                Some(q) => RationalFunction::new(num, q.clone()).unwrap(),
            };
            terms.push((Monomial::from_exponents(&ex), c));
        }
        let f = MomentumPolynomial::from_terms(chart, terms);
        if !f.is_zero() {
            return f;
        }
    }
}

/// Random ladder pair on flat factors: `(pm, f1, f2, k)` with momentum
/// degrees `<= 2`, ladder degrees `<= 3` and `max(k1,k2) <= k <= min(3, k1+k2−1)`.
pub fn random_ladder_pair<R: Rng>(rng: &mut R) -> (ProductMetric, LadderElement, LadderElement, u32) {
    let dims = [rng.gen_range(1..=2), rng.gen_range(1..=2)];
    let a: Vec<String> = (1..=dims[0]).map(|i| format!("a{i}")).collect();
    let b: Vec<String> = (1..=dims[1]).map(|i| format!("b{i}")).collect();
    let c1 = flat(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let c2 = flat(&b.iter().map(String::as_str).collect::<Vec<_>>());
    let pm = product_metric(&c1, &c2, false).unwrap();
    let elem = |chart: &Chart, rng: &mut R| {
        let d = rng.gen_range(0..=2);
        let x = rng.gen_range(0..=2);
        LadderElement::certify(random_homogeneous(chart, d, x, None, rng), 8).unwrap()
    };
    let f1 = elem(pm.factor1(), rng);
    let f2 = elem(pm.factor2(), rng);
    let lo = f1.k().max(f2.k());
    let hi = (f1.k() + f2.k() - 1).min(3).max(lo);
    let k = rng.gen_range(lo..=hi);
    (pm, f1, f2, k)
}

/// Enumerated `P(p₁, p₂, x₁p₂ − x₂p₁)` family of degree `d` on ℝ².
pub fn plane_integral_family(chart: &Chart, d: u32) -> Vec<MomentumPolynomial> {
    let p1 = MomentumPolynomial::momentum(chart, 0);
    let p2 = MomentumPolynomial::momentum(chart, 1);
    let l = parse(
        chart,
        &format!(
            "{}*{} - {}*{}",
            chart.coords().names()[0],
            chart.momentum_name(1),
            chart.coords().names()[1],
            chart.momentum_name(0)
        ),
    );
    exponents(3, d)
        .into_iter()
        .map(|e| p1.pow(e[0]).checked_mul(&p2.pow(e[1])).unwrap().checked_mul(&l.pow(e[2])).unwrap())
        .collect()
}
